#pragma once

// Chain file ingestion (CSV/TSV) and JSON/CSV report serialization.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcse/core.hpp"
#include "mcse/diagnostics.hpp"
#include "mcse/experiments.hpp"
#include "mcse/quantiles.hpp"

namespace mcse::io {

using nlohmann::json;

enum class Delimiter { comma, tab };

struct ChainFile {
    std::string path;
    Delimiter format = Delimiter::comma;
    bool header = false;
    std::vector<std::string> column_names;
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line, char delim)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, delim))
        out.push_back(trim(field));
    if (!line.empty() && line.back() == delim)
        out.emplace_back();
    return out;
}

inline bool parse_number(const std::string& s, double& out)
{
    if (s.empty())
        return false;
    try {
        std::size_t used = 0;
        out = std::stod(s, &used);
        return used == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

} // namespace detail

/// Parses delimited text: comma or tab (detected from the first data line),
/// an optional header row recognised by a non-numeric first row.
/// `columns` selects a subset (0-based) when non-empty.
inline SampleMatrix parse_chain(std::istream& in, ChainFile* meta = nullptr, const std::vector<Index>& columns = {})
{
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (detail::trim(line).empty() || detail::trim(line)[0] == '#')
            continue;
        lines.push_back(line);
    }
    if (lines.empty())
        throw InputError("chain file is empty");
    const char delim = lines.front().find('\t') != std::string::npos ? '\t' : ',';

    ChainFile info;
    info.format = delim == '\t' ? Delimiter::tab : Delimiter::comma;
    std::size_t first = 0;
    {
        auto fields = detail::split(lines.front(), delim);
        double tmp = 0.0;
        bool numeric = true;
        for (const auto& f : fields)
            numeric = numeric && detail::parse_number(f, tmp);
        if (!numeric) {
            info.header = true;
            info.column_names = fields;
            first = 1;
        }
    }
    const std::size_t rows = lines.size() - first;
    if (rows < 2)
        throw InputError("chain file needs at least 2 data rows, found " + std::to_string(rows));

    std::size_t width = 0;
    std::vector<std::vector<double>> data;
    data.reserve(rows);
    for (std::size_t r = first; r < lines.size(); ++r) {
        auto fields = detail::split(lines[r], delim);
        if (width == 0)
            width = fields.size();
        if (fields.size() != width)
            throw InputError("row " + std::to_string(r + 1) + " has " + std::to_string(fields.size()) +
                             " fields, expected " + std::to_string(width));
        std::vector<double> vals(width);
        for (std::size_t c = 0; c < width; ++c)
            if (!detail::parse_number(fields[c], vals[c]) || !std::isfinite(vals[c]))
                throw InputError("row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1) +
                                 ": not a finite number: '" + fields[c] + "'");
        data.push_back(std::move(vals));
    }
    if (info.header && info.column_names.size() != width)
        throw InputError("header has " + std::to_string(info.column_names.size()) + " fields, data has " +
                         std::to_string(width));

    std::vector<Index> cols = columns;
    if (cols.empty())
        for (std::size_t c = 0; c < width; ++c)
            cols.push_back(static_cast<Index>(c));
    for (Index c : cols)
        if (c < 0 || static_cast<std::size_t>(c) >= width)
            throw InputError("column " + std::to_string(c) + " not present (file has " + std::to_string(width) +
                             " columns)");
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols.size()));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cols.size(); ++j)
            m(static_cast<Index>(r), static_cast<Index>(j)) = data[r][static_cast<std::size_t>(cols[j])];
    if (meta) {
        if (info.header && !columns.empty()) {
            std::vector<std::string> names;
            for (Index c : cols)
                names.push_back(info.column_names[static_cast<std::size_t>(c)]);
            info.column_names = std::move(names);
        }
        *meta = info;
    }
    return SampleMatrix(std::move(m));
}

inline SampleMatrix read_chain(const std::string& path, ChainFile* meta = nullptr, const std::vector<Index>& columns = {})
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open '" + path + "'");
    SampleMatrix s = parse_chain(in, meta, columns);
    if (meta)
        meta->path = path;
    return s;
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double x)
{
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
    return os.str();
}

inline json matrix_to_json(const Matrix& m)
{
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const json& j)
{
    if (!j.is_array() || j.empty())
        throw InputError("matrix must be a non-empty array of rows");
    const auto rows = static_cast<Index>(j.size());
    const auto cols = static_cast<Index>(j[0].size());
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (static_cast<Index>(j[static_cast<std::size_t>(i)].size()) != cols)
            throw InputError("matrix rows have unequal length");
        for (Index k = 0; k < cols; ++k)
            m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    }
    return m;
}

inline json vector_to_json(const Vector& v)
{
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i)
        a.push_back(v(i));
    return a;
}

/// Everything one CLI invocation reports about a chain.
struct RunReport {
    LrvEstimate estimate;
    Index n = 0;
    Vector mean;
    Vector mcse;
    std::optional<double> ess;
    std::optional<StoppingDecision> decision;
    double wall_seconds = 0.0;
};

inline json estimate_to_json(const LrvEstimate& e)
{
    json j;
    j["method"] = to_string(e.family);
    j["bandwidth"] = e.bandwidth;
    if (!e.window.empty())
        j["window"] = e.window;
    j["lugsail"] = e.lugsail;
    j["lugsail_r"] = e.lugsail_r;
    j["lugsail_c"] = e.lugsail_c;
    j["psd"] = e.psd;
    j["sigma"] = matrix_to_json(e.sigma);
    return j;
}

inline json report_to_json(const RunReport& r)
{
    json j;
    j["n"] = r.n;
    j["p"] = r.estimate.sigma.rows();
    j["estimate"] = estimate_to_json(r.estimate);
    j["mean"] = vector_to_json(r.mean);
    j["mcse"] = vector_to_json(r.mcse);
    if (r.ess) {
        j["ess"] = *r.ess;
        j["ess_per_n"] = *r.ess / static_cast<double>(r.n);
    }
    if (r.decision) {
        const auto& d = *r.decision;
        j["decision"] = {{"terminate", d.terminate}, {"n", d.n},   {"n_star", d.n_star}, {"lhs", d.lhs},
                         {"rhs", d.rhs},             {"ess", d.ess}, {"min_ess", d.min_ess}};
    }
    j["wall_seconds"] = r.wall_seconds;
    return j;
}

/// Reads back the covariance matrix of a report written by report_to_json.
inline Matrix sigma_from_report(const json& j) { return matrix_from_json(j.at("estimate").at("sigma")); }

/// Flat CSV: one line per Sigma entry plus scalar fields.
inline std::string report_to_csv(const RunReport& r)
{
    std::ostringstream os;
    os << "field,i,j,value\n";
    const auto& s = r.estimate.sigma;
    for (Index i = 0; i < s.rows(); ++i)
        for (Index k = 0; k < s.cols(); ++k)
            os << "sigma," << i << ',' << k << ',' << format_double(s(i, k)) << '\n';
    for (Index i = 0; i < r.mean.size(); ++i)
        os << "mean," << i << ",," << format_double(r.mean(i)) << '\n';
    for (Index i = 0; i < r.mcse.size(); ++i)
        os << "mcse," << i << ",," << format_double(r.mcse(i)) << '\n';
    if (r.ess) {
        os << "ess,,," << format_double(*r.ess) << '\n';
        os << "ess_per_n,,," << format_double(*r.ess / static_cast<double>(r.n)) << '\n';
    }
    if (r.decision) {
        os << "terminate,,," << (r.decision->terminate ? 1 : 0) << '\n';
        os << "lhs,,," << format_double(r.decision->lhs) << '\n';
        os << "rhs,,," << format_double(r.decision->rhs) << '\n';
        os << "n_star,,," << r.decision->n_star << '\n';
    }
    return os.str();
}

inline json study_to_json(const std::vector<StudyRow>& rows)
{
    json a = json::array();
    for (const auto& r : rows)
        a.push_back({{"estimator", r.estimator},
                     {"n", r.n},
                     {"replications", r.replications},
                     {"failures", r.failures},
                     {"coverage", r.coverage},
                     {"coverage_se", r.coverage_se},
                     {"sigma_mean", r.sigma_mean},
                     {"sigma_se", r.sigma_se},
                     {"ess_ratio_mean", r.ess_ratio_mean},
                     {"ess_ratio_sd", r.ess_ratio_sd},
                     {"ess_ratio_se", r.ess_ratio_se}});
    return a;
}

inline std::string study_to_csv(const std::vector<StudyRow>& rows)
{
    std::ostringstream os;
    os << "estimator,n,replications,failures,coverage,coverage_se,sigma_mean,sigma_se,ess_ratio_mean,ess_ratio_sd,"
          "ess_ratio_se\n";
    for (const auto& r : rows)
        os << r.estimator << ',' << r.n << ',' << r.replications << ',' << r.failures << ','
           << format_double(r.coverage) << ',' << format_double(r.coverage_se) << ',' << format_double(r.sigma_mean)
           << ',' << format_double(r.sigma_se) << ',' << format_double(r.ess_ratio_mean) << ','
           << format_double(r.ess_ratio_sd) << ',' << format_double(r.ess_ratio_se) << '\n';
    return os.str();
}

inline json timing_to_json(const std::vector<TimingRow>& rows)
{
    json a = json::array();
    for (const auto& r : rows)
        a.push_back({{"estimator", r.estimator}, {"median_seconds", r.median_seconds}, {"repetitions", r.repetitions}});
    return a;
}

inline std::string timing_to_csv(const std::vector<TimingRow>& rows)
{
    std::ostringstream os;
    os << "estimator,median_seconds,repetitions\n";
    for (const auto& r : rows)
        os << r.estimator << ',' << format_double(r.median_seconds) << ',' << r.repetitions << '\n';
    return os.str();
}

inline json region_to_json(const JointEstimate& joint, const SimultaneousRegion& region)
{
    json targets = json::array();
    for (std::size_t i = 0; i < joint.targets.size(); ++i) {
        const auto& t = joint.targets[i];
        json item{{"kind", t.kind == TargetKind::mean ? "mean" : "quantile"},
                  {"component", t.component},
                  {"estimate", joint.nu_hat(static_cast<Index>(i))},
                  {"lower", region.intervals[i].first},
                  {"upper", region.intervals[i].second}};
        if (t.kind == TargetKind::quantile)
            item["q"] = t.q;
        targets.push_back(std::move(item));
    }
    return {{"n", joint.n},
            {"z_star", region.z_star},
            {"coverage_target", region.coverage_target},
            {"coverage", region.coverage},
            {"omega", matrix_to_json(joint.omega)},
            {"targets", targets}};
}

} // namespace mcse::io
