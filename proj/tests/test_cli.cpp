#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "mcse/experiments.hpp"
#include "mcse/io.hpp"

namespace {

const std::string kCli = MCSE_CLI_PATH;
const std::string kTmp = MCSE_TEST_TMP;

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args)
{
    const std::string out_path = kTmp + "/cli_out.txt";
    const std::string cmd = "\"" + kCli + "\" " + args + " > \"" + out_path + "\" 2>/dev/null";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream f(out_path);
    std::stringstream ss;
    ss << f.rdbuf();
    r.out = ss.str();
    return r;
}

std::string write_file(const std::string& name, const std::string& text)
{
    const std::string path = kTmp + "/" + name;
    std::ofstream(path) << text;
    return path;
}

std::string ar1_file()
{
    static const std::string path = [] {
        const auto s = mcse::ar1_generate({0.5, 5000, 17, std::nullopt});
        std::ostringstream os;
        os << "x\n";
        for (mcse::Index i = 0; i < s.n(); ++i)
            os << mcse::io::format_double(s.values()(i, 0)) << "\n";
        return write_file("ar1.csv", os.str());
    }();
    return path;
}

} // namespace

TEST(Cli, EstimateJson)
{
    const auto r = run("estimate " + ar1_file() + " --method bm");
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["n"], 5000);
    EXPECT_EQ(j["estimate"]["method"], "bm");
    const double s = j["estimate"]["sigma"][0][0];
    EXPECT_NEAR(s, 4.0, 1.5);
}

TEST(Cli, EstimateVariantsSucceed)
{
    for (const char* args : {"--method obm --lugsail zero", "--method sv --window tukey-hanning",
                             "--method sv --lugsail over", "--method initseq", "--method initseq-adjusted",
                             "--method bm --lugsail custom --r 2 --c 0.3", "--method bm --lugsail auto",
                             "--method bm --b 50 --out csv"})
        EXPECT_EQ(run("estimate " + ar1_file() + " " + args).code, 0) << args;
}

TEST(Cli, UsageErrors)
{
    for (const char* args : {"--method bm --window qs", "--method bm --r 2", "--method bm --lugsail zero --c 0.2",
                             "--method initseq --lugsail zero", "--method nope", "--method bm --lugsail custom --r 2",
                             "--method bm --b 10000", "--unknown-flag"})
        EXPECT_EQ(run("estimate " + ar1_file() + " " + args).code, 3) << args;
    EXPECT_EQ(run("").code, 3);
    EXPECT_EQ(run("simci " + ar1_file() + " --targets median:0").code, 3);
}

TEST(Cli, InputErrors)
{
    EXPECT_EQ(run("estimate /nonexistent/file.csv").code, 2);
    EXPECT_EQ(run("estimate " + write_file("bad.csv", "1,2\n3,x\n")).code, 2);
    EXPECT_EQ(run("estimate " + write_file("short.csv", "1\n")).code, 2);
}

TEST(Cli, NumericalError)
{
    const std::string flat = write_file("flat.csv", "1\n1\n1\n1\n1\n1\n1\n1\n");
    EXPECT_EQ(run("ess " + flat).code, 4);
}

TEST(Cli, MinEss)
{
    auto r = run("miness --alpha 0.05 --eps 0.05 --p 3");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "8123\n");
    r = run("miness --eps 0.1 --p 1 --out json");
    EXPECT_NEAR(nlohmann::json::parse(r.out)["min_ess"].get<double>(), 1536, 1);
}

TEST(Cli, StopCheckExitCodes)
{
    EXPECT_EQ(run("stopcheck " + ar1_file() + " --eps 0.5").code, 0);
    EXPECT_EQ(run("stopcheck " + ar1_file() + " --eps 0.01").code, 10);
    const auto r = run("stopcheck " + ar1_file() + " --eps 0.01");
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_FALSE(j["decision"]["terminate"].get<bool>());
}

TEST(Cli, EssReport)
{
    const auto r = run("ess " + ar1_file() + " --method bm --lugsail zero");
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    // phi = 0.5: ESS/n = (1 - phi)^2 / (1 - phi^2) = 1/3
    EXPECT_NEAR(j["ess_per_n"].get<double>(), 1.0 / 3.0, 0.12);
}

TEST(Cli, SimciDeterministic)
{
    const std::string args = "simci " + ar1_file() + " --targets mean:0,quant:0:0.1,quant:0:0.9 --seed 3";
    const auto a = run(args);
    const auto b = run(args);
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    const auto j = nlohmann::json::parse(a.out);
    EXPECT_EQ(j["targets"].size(), 3u);
    EXPECT_GT(j["z_star"].get<double>(), 1.9);
}

TEST(Cli, ExperimentsDeterministic)
{
    const std::string args = "experiment ar1-coverage --phi 0.8 --reps 6 --n-grid 2000,4000 --seed 5";
    const auto a = run(args);
    const auto b = run(args);
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 9);

    const std::string mix = "experiment mixture --n 5000 --seed 8 --out json";
    const auto m1 = run(mix);
    ASSERT_EQ(m1.code, 0);
    EXPECT_EQ(m1.out, run(mix).out);
    EXPECT_DOUBLE_EQ(nlohmann::json::parse(m1.out)["true_mean"].get<double>(), 5.6);

    const auto lg = run("experiment logistic --n-grid 1000 --reps 2 --p 3 --n-obs 50 --out json");
    ASSERT_EQ(lg.code, 0);
    EXPECT_EQ(nlohmann::json::parse(lg.out)["rows"].size(), 7u);

    EXPECT_EQ(run("experiment ar1-coverage --reps 0").code, 3);
    EXPECT_EQ(run("experiment nonsense").code, 3);
}

TEST(Cli, ColumnsSelection)
{
    const std::string path = write_file("two.csv", "a,b\n1,5\n2,3\n3,9\n4,1\n5,0\n6,2\n");
    const auto r = run("estimate " + path + " --columns 1 --b 2");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(nlohmann::json::parse(r.out)["p"], 1);
    EXPECT_EQ(run("estimate " + path + " --columns 7").code, 2);
    EXPECT_EQ(run("estimate " + path + " --columns x").code, 3);
}
