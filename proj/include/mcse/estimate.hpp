#pragma once

// One entry point over every long-run covariance estimator, driven by a
// small value-type description. Used by the joint-quantile code, the
// experiment harness and the CLI.

#include <string>

#include "mcse/batch.hpp"
#include "mcse/core.hpp"
#include "mcse/initseq.hpp"
#include "mcse/spectral.hpp"

namespace mcse {

enum class Method { bm, obm, sv, initseq, initseq_adjusted };

inline Method parse_method(const std::string& s)
{
    if (s == "bm") return Method::bm;
    if (s == "obm") return Method::obm;
    if (s == "sv") return Method::sv;
    if (s == "initseq") return Method::initseq;
    if (s == "initseq-adjusted" || s == "initseq_adj") return Method::initseq_adjusted;
    throw ArgumentError("unknown method '" + s + "'");
}

inline const char* to_string(Method m)
{
    switch (m) {
    case Method::bm: return "bm";
    case Method::obm: return "obm";
    case Method::sv: return "sv";
    case Method::initseq: return "initseq";
    case Method::initseq_adjusted: return "initseq-adjusted";
    }
    return "unknown";
}

struct EstimatorSpec {
    Method method = Method::bm;
    LagWindow window = WindowKind::bartlett; // sv only
    LugsailConfig lugsail;                   // not valid with initseq
    Index b = 0;                             // 0 picks default_batch_size(n, rule, r)
    BatchRule rule = BatchRule::sqrt;

    std::string label() const
    {
        std::string s = to_string(method);
        if (method == Method::sv)
            s += "-" + window.name();
        if (lugsail.active())
            s += std::string("-") + to_string(lugsail.regime);
        return s;
    }

    void validate() const
    {
        if ((method == Method::initseq || method == Method::initseq_adjusted) && lugsail.active())
            throw ArgumentError("lugsail settings do not apply to the initial sequence estimator");
        if (b < 0)
            throw ArgumentError("batch size must be positive");
    }

    Index resolve_b(Index n) const
    {
        return b > 0 ? b : default_batch_size(n, rule, lugsail.ratio());
    }
};

inline LrvEstimate estimate_lrv(const SampleMatrix& s, const EstimatorSpec& spec)
{
    spec.validate();
    switch (spec.method) {
    case Method::bm: return lugsail_batch_means(s, spec.resolve_b(s.n()), spec.lugsail);
    case Method::obm: return lugsail_overlapping_batch_means(s, spec.resolve_b(s.n()), spec.lugsail);
    case Method::sv: return lugsail_spectral_variance(s, spec.window, spec.resolve_b(s.n()), spec.lugsail);
    case Method::initseq: return initial_sequence(s).estimate();
    case Method::initseq_adjusted: return adjusted_initial_sequence(s).estimate();
    }
    throw ArgumentError("unknown method");
}

} // namespace mcse
