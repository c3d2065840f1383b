// mcse: Monte Carlo standard errors, effective sample size, stopping checks
// and simultaneous confidence regions for MCMC output stored as CSV/TSV.
//
// Exit codes: 0 success (or "terminate" for stopcheck), 2 input error,
// 3 usage error, 4 numerical failure, 10 "continue" for stopcheck.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcse/io.hpp"
#include "mcse/mcse.hpp"

namespace {

using namespace mcse;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitUsage = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitContinue = 10;

struct EstimatorFlags {
    std::string method = "bm";
    std::string window = "bartlett";
    std::string lugsail = "none";
    double r = 0.0;
    double c = -1.0;
    Index b = 0;
    std::string rule = "sqrt";
    std::string columns;
    std::string out = "json";
    std::string output;

    CLI::Option* window_opt = nullptr;
    CLI::Option* lugsail_opt = nullptr;
    CLI::Option* r_opt = nullptr;
    CLI::Option* c_opt = nullptr;

    void add_to(CLI::App* app)
    {
        app->add_option("--method", method, "bm, obm, sv, initseq or initseq-adjusted")
            ->check(CLI::IsMember({"bm", "obm", "sv", "initseq", "initseq-adjusted"}));
        window_opt = app->add_option("--window", window,
                                     "lag window for sv: bartlett, bartlett-flattop, tukey-hanning, quadratic-spectral");
        lugsail_opt = app->add_option("--lugsail", lugsail, "none, zero, adaptive, over, custom or auto")
                          ->check(CLI::IsMember({"none", "zero", "adaptive", "over", "custom", "auto"}));
        r_opt = app->add_option("--r", r, "lugsail ratio (custom only)");
        c_opt = app->add_option("--c", c, "lugsail weight in [0,1) (custom only)");
        app->add_option("--b", b, "batch size / truncation point (default from --rule)");
        app->add_option("--rule", rule, "default batch size rule: sqrt or cuberoot")
            ->check(CLI::IsMember({"sqrt", "cuberoot"}));
        app->add_option("--columns", columns, "comma-separated 0-based columns to analyse");
        app->add_option("--out", out, "json or csv")->check(CLI::IsMember({"json", "csv"}));
        app->add_option("-o,--output", output, "write to this file instead of stdout");
    }

    // Invalid combinations raise ArgumentError (exit 3).
    EstimatorSpec spec(const SampleMatrix* chain = nullptr) const
    {
        EstimatorSpec s;
        s.method = parse_method(method);
        if (window_opt->count() > 0 && s.method != Method::sv)
            throw ArgumentError("--window only applies to --method sv");
        s.window = parse_window_kind(window);
        const bool custom = lugsail == "custom";
        if ((r_opt->count() > 0 || c_opt->count() > 0) && !custom)
            throw ArgumentError("--r/--c require --lugsail custom");
        const bool initseq = s.method == Method::initseq || s.method == Method::initseq_adjusted;
        if (initseq && lugsail != "none")
            throw ArgumentError("--lugsail does not apply to the initial sequence estimator");
        if (lugsail == "auto") {
            if (!chain)
                throw ArgumentError("--lugsail auto needs a chain");
            s.lugsail = lugsail_policy(lag1_autocorrelation(*chain));
        } else if (custom) {
            if (r_opt->count() == 0 || c_opt->count() == 0)
                throw ArgumentError("--lugsail custom needs both --r and --c");
            s.lugsail = LugsailConfig::custom(r, c);
        } else {
            s.lugsail = LugsailConfig::from_regime(parse_lugsail_regime(lugsail));
        }
        if (b < 0)
            throw ArgumentError("--b must be positive");
        s.b = b;
        s.rule = rule == "cuberoot" ? BatchRule::cuberoot : BatchRule::sqrt;
        return s;
    }

    std::vector<Index> column_list() const
    {
        std::vector<Index> out_cols;
        if (columns.empty())
            return out_cols;
        std::stringstream ss(columns);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                long v = std::stol(item, &used);
                if (used != item.size() || v < 0)
                    throw ArgumentError("bad column '" + item + "'");
                out_cols.push_back(v);
            } catch (const std::logic_error&) {
                throw ArgumentError("bad --columns value '" + columns + "'");
            }
        }
        return out_cols;
    }
};

void emit(const std::string& text, const std::string& path)
{
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path);
    if (!f)
        throw InputError("cannot write '" + path + "'");
    f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

io::RunReport make_report(const SampleMatrix& chain, const EstimatorSpec& spec)
{
    const auto t0 = std::chrono::steady_clock::now();
    io::RunReport r;
    r.estimate = estimate_lrv(chain, spec);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.n = chain.n();
    r.mean = mean_vector(chain);
    r.mcse = mcse::mcse(r.estimate, chain.n());
    return r;
}

std::vector<Index> parse_index_list(const std::string& text)
{
    std::vector<Index> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            double v = std::stod(item, &used);
            if (used != item.size() || !(v >= 2) || v != std::floor(v))
                throw ArgumentError("bad length '" + item + "'");
            out.push_back(static_cast<Index>(v));
        } catch (const std::logic_error&) {
            throw ArgumentError("bad list '" + text + "'");
        }
    }
    if (out.empty())
        throw ArgumentError("empty list");
    return out;
}

void write_chain_csv(const SampleMatrix& s, const std::string& path)
{
    std::ostringstream os;
    for (Index i = 0; i < s.n(); ++i) {
        for (Index j = 0; j < s.p(); ++j)
            os << (j ? "," : "") << io::format_double(s.values()(i, j));
        os << '\n';
    }
    emit(os.str(), path);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Long-run covariance estimation and output analysis for MCMC chains"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    // estimate
    std::string file;
    EstimatorFlags est_flags;
    auto* estimate = app.add_subcommand("estimate", "estimate Sigma, MCSEs and the chain mean");
    estimate->add_option("file", file, "chain file (rows = iterations)")->required();
    est_flags.add_to(estimate);

    // ess
    auto* ess_cmd = app.add_subcommand("ess", "multivariate effective sample size");
    ess_cmd->add_option("file", file, "chain file")->required();
    EstimatorFlags ess_flags;
    ess_flags.add_to(ess_cmd);

    // miness
    double alpha = 0.05, eps = 0.05;
    Index dim = 1;
    std::string miness_out = "text";
    auto* miness = app.add_subcommand("miness", "minimum effective sample size for a fixed-volume rule");
    miness->add_option("--alpha", alpha, "confidence level complement");
    miness->add_option("--eps", eps, "relative precision");
    miness->add_option("--p", dim, "dimension");
    miness->add_option("--out", miness_out, "text or json")->check(CLI::IsMember({"text", "json"}));

    // stopcheck
    Index nstar = 0;
    auto* stop = app.add_subcommand("stopcheck", "fixed-volume stopping rule; exit 0 = terminate, 10 = continue");
    stop->add_option("file", file, "chain file")->required();
    stop->add_option("--alpha", alpha, "confidence level complement");
    stop->add_option("--eps", eps, "relative precision");
    stop->add_option("--nstar", nstar, "minimum simulation size (default: minESS)");
    EstimatorFlags stop_flags;
    stop_flags.add_to(stop);

    // simci
    std::string targets = "mean:0";
    double tol = 1e-4;
    std::uint64_t seed = 12345;
    auto* simci = app.add_subcommand("simci", "simultaneous intervals for means and quantiles");
    simci->add_option("file", file, "chain file")->required();
    simci->add_option("--targets", targets, "e.g. mean:0,quant:0:0.1,quant:0:0.9");
    simci->add_option("--alpha", alpha, "1 - simultaneous coverage");
    simci->add_option("--tol", tol, "rectangle probability tolerance");
    simci->add_option("--seed", seed, "quasi-Monte Carlo randomization seed");
    EstimatorFlags simci_flags;
    simci_flags.add_to(simci);

    // experiment
    std::string name;
    double phi = 0.92;
    Index reps = 50, n_len = 50000, p_coef = 19, n_obs = 200, bench_reps = 5;
    std::string n_grid = "30000,50000,100000,200000";
    std::string exp_out = "csv", exp_output, chain_out;
    std::uint64_t exp_seed = 20240101;
    auto* exper = app.add_subcommand("experiment", "replication studies and synthetic chains");
    exper->add_option("name", name, "ar1-coverage, ar1-ess, mixture, logistic or bench")
        ->required()
        ->check(CLI::IsMember({"ar1-coverage", "ar1-ess", "mixture", "logistic", "bench"}));
    exper->add_option("--phi", phi, "AR(1) coefficient");
    exper->add_option("--reps", reps, "replications");
    exper->add_option("--n-grid", n_grid, "comma-separated chain lengths");
    exper->add_option("--n", n_len, "chain length (mixture, logistic, bench)");
    exper->add_option("--p", p_coef, "logistic regression coefficients");
    exper->add_option("--n-obs", n_obs, "logistic regression observations");
    exper->add_option("--bench-reps", bench_reps, "timing repetitions");
    exper->add_option("--seed", exp_seed, "master seed");
    exper->add_option("--out", exp_out, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    exper->add_option("-o,--output", exp_output, "write to this file instead of stdout");
    exper->add_option("--chain-out", chain_out, "also write the generated chain (mixture, logistic)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "mcse: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (estimate->parsed()) {
            const SampleMatrix chain = io::read_chain(file, nullptr, est_flags.column_list());
            const auto report = make_report(chain, est_flags.spec(&chain));
            emit(est_flags.out == "csv" ? io::report_to_csv(report) : dump(io::report_to_json(report)),
                 est_flags.output);
        } else if (ess_cmd->parsed()) {
            const SampleMatrix chain = io::read_chain(file, nullptr, ess_flags.column_list());
            auto report = make_report(chain, ess_flags.spec(&chain));
            report.ess = mcse::ess(chain, report.estimate);
            emit(ess_flags.out == "csv" ? io::report_to_csv(report) : dump(io::report_to_json(report)),
                 ess_flags.output);
        } else if (miness->parsed()) {
            const long long m = min_ess(alpha, eps, dim);
            if (miness_out == "json")
                std::cout << dump(json{{"alpha", alpha}, {"epsilon", eps}, {"p", dim}, {"min_ess", m}});
            else
                std::cout << m << "\n";
        } else if (stop->parsed()) {
            const SampleMatrix chain = io::read_chain(file, nullptr, stop_flags.column_list());
            auto report = make_report(chain, stop_flags.spec(&chain));
            StoppingConfig cfg{alpha, eps, nstar};
            report.decision = fixed_volume_check(chain, report.estimate.sigma, cfg);
            report.ess = report.decision->ess;
            emit(stop_flags.out == "csv" ? io::report_to_csv(report) : dump(io::report_to_json(report)),
                 stop_flags.output);
            return report.decision->terminate ? kExitOk : kExitContinue;
        } else if (simci->parsed()) {
            const SampleMatrix chain = io::read_chain(file, nullptr, simci_flags.column_list());
            const auto target_list = parse_targets(targets);
            if (simci_flags.lugsail_opt->count() == 0)
                simci_flags.lugsail = "zero";
            const auto joint = estimate_omega(chain, target_list, simci_flags.spec(&chain));
            const auto region = solve_z_star(joint, alpha, tol, seed);
            const json j = io::region_to_json(joint, region);
            if (simci_flags.out == "csv") {
                std::ostringstream os;
                os << "target,estimate,lower,upper,z_star\n";
                for (std::size_t i = 0; i < target_list.size(); ++i)
                    os << i << ',' << io::format_double(joint.nu_hat(static_cast<Index>(i))) << ','
                       << io::format_double(region.intervals[i].first) << ','
                       << io::format_double(region.intervals[i].second) << ',' << io::format_double(region.z_star)
                       << '\n';
                emit(os.str(), simci_flags.output);
            } else {
                emit(dump(j), simci_flags.output);
            }
        } else if (exper->parsed()) {
            if (reps < 1 || n_len < 2 || p_coef < 1 || n_obs < 0 || bench_reps < 1)
                throw ArgumentError("experiment sizes must be positive");
            const bool as_json = exp_out == "json";
            if (name == "ar1-coverage" || name == "ar1-ess") {
                StudyConfig cfg;
                cfg.estimators = lugsail_bm_grid();
                cfg.n_grid = parse_index_list(n_grid);
                cfg.replications = reps;
                cfg.seed = exp_seed;
                const auto rows = run_study(ar1_generator(phi), ar1_study_truth(phi), cfg);
                emit(as_json ? dump(json{{"experiment", name},
                                         {"phi", phi},
                                         {"truth", {{"sigma", ar1_truth(phi).sigma_true},
                                                    {"ess_ratio", ar1_truth(phi).ess_ratio}}},
                                         {"rows", io::study_to_json(rows)}})
                             : io::study_to_csv(rows),
                     exp_output);
            } else if (name == "mixture") {
                MixtureConfig mc;
                mc.n = n_len;
                mc.seed = exp_seed;
                MhStats st;
                const SampleMatrix chain = mixture_mh_generate(mc, &st);
                if (!chain_out.empty())
                    write_chain_csv(chain, chain_out);
                EstimatorSpec spec;
                spec.lugsail = lugsail_policy(lag1_autocorrelation(chain));
                const auto sigma = estimate_lrv(chain, spec);
                const auto joint = estimate_omega(
                    chain, {TargetSpec::mean(0), TargetSpec::quantile(0, 0.1), TargetSpec::quantile(0, 0.9)});
                const auto region = solve_z_star(joint, 0.05, 1e-4, exp_seed);
                json j{{"experiment", "mixture"},
                       {"n", chain.n()},
                       {"acceptance_rate", st.acceptance_rate()},
                       {"lag1_autocorrelation", lag1_autocorrelation(chain)},
                       {"true_mean", mc.mean()},
                       {"mean", mean_vector(chain)(0)},
                       {"lugsail", to_string(spec.lugsail.regime)},
                       {"sigma", sigma.sigma(0, 0)},
                       {"mcse", mcse::mcse(sigma, chain.n())(0)},
                       {"ess", mcse::ess(chain, sigma)},
                       {"min_ess", min_ess(0.05, 0.10, 1)},
                       {"simultaneous", io::region_to_json(joint, region)}};
                if (as_json) {
                    emit(dump(j), exp_output);
                } else {
                    std::ostringstream os;
                    os << "field,value\n";
                    for (const char* k : {"n", "acceptance_rate", "lag1_autocorrelation", "true_mean", "mean", "sigma",
                                          "mcse", "ess", "min_ess"})
                        os << k << ',' << io::format_double(j[k].get<double>()) << '\n';
                    os << "z_star," << io::format_double(region.z_star) << '\n';
                    emit(os.str(), exp_output);
                }
            } else if (name == "logistic") {
                StudyConfig cfg;
                cfg.estimators = timing_grid(BatchRule::sqrt);
                cfg.n_grid = parse_index_list(n_grid);
                cfg.replications = reps;
                cfg.seed = exp_seed;
                LogisticConfig lc;
                lc.p_coef = p_coef;
                lc.n_obs = n_obs;
                if (!chain_out.empty()) {
                    lc.n = *std::max_element(cfg.n_grid.begin(), cfg.n_grid.end());
                    lc.seed = derive_seed(exp_seed, 0);
                    write_chain_csv(logistic_mh_generate(lc), chain_out);
                }
                auto gen = [lc](std::uint64_t s, Index n) {
                    LogisticConfig c = lc;
                    c.n = n;
                    c.seed = s;
                    return logistic_mh_generate(c);
                };
                const auto rows = run_study(gen, StudyTruth{}, cfg);
                emit(as_json ? dump(json{{"experiment", name}, {"p", p_coef}, {"rows", io::study_to_json(rows)}})
                             : io::study_to_csv(rows),
                     exp_output);
            } else if (name == "bench") {
                LogisticConfig lc;
                lc.p_coef = p_coef;
                lc.n_obs = n_obs;
                lc.n = n_len;
                lc.seed = exp_seed;
                const SampleMatrix chain = logistic_mh_generate(lc);
                const auto rows = timing_bench(chain, timing_grid(BatchRule::sqrt), bench_reps);
                const bool family_order = timing_ordered(rows, {"bm", "sv-bartlett", "initseq"});
                const bool lugsail_order =
                    timing_ordered(rows, {"bm", "bm-zero"}) && timing_ordered(rows, {"bm", "bm-over"}) &&
                    timing_ordered(rows, {"sv-bartlett", "sv-bartlett-zero"}) &&
                    timing_ordered(rows, {"sv-bartlett", "sv-bartlett-over"});
                if (as_json)
                    emit(dump(json{{"experiment", "bench"},
                                   {"n", n_len},
                                   {"p", p_coef},
                                   {"rows", io::timing_to_json(rows)},
                                   {"bm_lt_sv_lt_initseq", family_order},
                                   {"lugsail_ge_base", lugsail_order}}),
                         exp_output);
                else
                    emit(io::timing_to_csv(rows), exp_output);
            }
        }
    } catch (const InputError& e) {
        std::cerr << "mcse: input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ArgumentError& e) {
        std::cerr << "mcse: usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericalError& e) {
        std::cerr << "mcse: numerical error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}
