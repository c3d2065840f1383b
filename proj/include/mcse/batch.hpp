#pragma once

// Batch-means family: non-overlapping and overlapping batch means, lugsail
// combinations, parameter policies and the exact AR(1) bias of batch means.

#include <cmath>
#include <cstdint>
#include <string>

#include "mcse/core.hpp"

namespace mcse {

struct BatchConfig {
    Index b = 1; // batch size
    Index a = 0; // number of batches, floor(n / b)

    static BatchConfig for_length(Index n, Index b)
    {
        if (b < 1)
            throw ArgumentError("batch size must be >= 1");
        BatchConfig cfg{b, n / b};
        if (cfg.a < 2)
            throw ArgumentError("insufficient batches: floor(" + std::to_string(n) + "/" + std::to_string(b) +
                                ") < 2");
        return cfg;
    }
};

enum class LugsailRegime { none, zero, adaptive, over, custom };

inline const char* to_string(LugsailRegime r)
{
    switch (r) {
    case LugsailRegime::none: return "none";
    case LugsailRegime::zero: return "zero";
    case LugsailRegime::adaptive: return "adaptive";
    case LugsailRegime::over: return "over";
    case LugsailRegime::custom: return "custom";
    }
    return "unknown";
}

inline LugsailRegime parse_lugsail_regime(const std::string& s)
{
    if (s == "none") return LugsailRegime::none;
    if (s == "zero") return LugsailRegime::zero;
    if (s == "adaptive") return LugsailRegime::adaptive;
    if (s == "over") return LugsailRegime::over;
    if (s == "custom") return LugsailRegime::custom;
    throw ArgumentError("unknown lugsail regime '" + s + "'");
}

/// c_n = (log n - log b + 1) / (2 (log n - log b) + 1), in (1/2, 1).
inline double adaptive_c(Index n, Index b)
{
    if (b < 1 || b >= n)
        throw ArgumentError("adaptive_c needs 1 <= b < n");
    const double l = std::log(static_cast<double>(n)) - std::log(static_cast<double>(b));
    return (l + 1.0) / (2.0 * l + 1.0);
}

/// Lugsail parameters. For the adaptive regime c is resolved per (n, b).
struct LugsailConfig {
    LugsailRegime regime = LugsailRegime::none;
    double r = 1.0;
    double c = 0.0;

    static LugsailConfig none() { return {}; }
    static LugsailConfig zero() { return {LugsailRegime::zero, 2.0, 0.5}; }
    static LugsailConfig adaptive() { return {LugsailRegime::adaptive, 2.0, 0.0}; }
    static LugsailConfig over() { return {LugsailRegime::over, 3.0, 0.5}; }
    static LugsailConfig custom(double r, double c)
    {
        if (!(r >= 1.0))
            throw ArgumentError("lugsail r must be >= 1");
        if (!(c >= 0.0 && c < 1.0))
            throw ArgumentError("lugsail c must lie in [0, 1)");
        return {LugsailRegime::custom, r, c};
    }
    static LugsailConfig from_regime(LugsailRegime regime, double r = 1.0, double c = 0.0)
    {
        switch (regime) {
        case LugsailRegime::none: return none();
        case LugsailRegime::zero: return zero();
        case LugsailRegime::adaptive: return adaptive();
        case LugsailRegime::over: return over();
        case LugsailRegime::custom: return custom(r, c);
        }
        return none();
    }

    bool active() const { return regime != LugsailRegime::none; }

    double weight(Index n, Index b) const
    {
        switch (regime) {
        case LugsailRegime::none: return 0.0;
        case LugsailRegime::adaptive: return adaptive_c(n, b);
        default: return c;
        }
    }

    double ratio() const { return active() ? r : 1.0; }
};

/// Regime selection from a lag-1 autocorrelation estimate.
inline LugsailConfig lugsail_policy(double rho)
{
    if (rho >= 0.95)
        return LugsailConfig::over();
    if (rho >= 0.7)
        return LugsailConfig::adaptive();
    return LugsailConfig::zero();
}

/// Largest componentwise lag-1 autocorrelation; constant columns are skipped.
inline double lag1_autocorrelation(const SampleMatrix& s)
{
    if (s.n() < 3)
        throw ArgumentError("lag-1 autocorrelation needs n >= 3");
    Matrix yc = centered(s);
    const Index n = s.n();
    double best = 0.0;
    bool any = false;
    for (Index j = 0; j < s.p(); ++j) {
        double r0 = yc.col(j).squaredNorm();
        if (r0 <= 0.0)
            continue;
        double r1 = yc.col(j).head(n - 1).dot(yc.col(j).tail(n - 1));
        double rho = r1 / r0;
        best = any ? std::max(best, rho) : rho;
        any = true;
    }
    return any ? best : 0.0;
}

enum class BatchRule { cuberoot, sqrt };

/// floor(n^{1/3}) or floor(n^{1/2}), clamped so that floor(n/b) >= 2 and
/// floor(b/r) >= 1.
inline Index default_batch_size(Index n, BatchRule rule, double r = 1.0)
{
    if (n < 4)
        throw ArgumentError("default batch size needs n >= 4");
    Index b = 0;
    if (rule == BatchRule::cuberoot) {
        b = static_cast<Index>(std::cbrt(static_cast<double>(n)));
        while ((b + 1) * (b + 1) * (b + 1) <= n) ++b;
        while (b * b * b > n) --b;
    } else {
        b = static_cast<Index>(std::sqrt(static_cast<double>(n)));
        while ((b + 1) * (b + 1) <= n) ++b;
        while (b * b > n) --b;
    }
    b = std::min(b, n / 2);
    b = std::max(b, static_cast<Index>(std::ceil(r)));
    return std::max<Index>(b, 1);
}

/// Non-overlapping batch means over the first a*b rows.
inline LrvEstimate batch_means(const SampleMatrix& s, Index b)
{
    const auto cfg = BatchConfig::for_length(s.n(), b);
    const Index p = s.p();
    Matrix means(cfg.a, p);
    for (Index k = 0; k < cfg.a; ++k)
        means.row(k) = s.values().middleRows(k * b, b).colwise().mean();
    Matrix dev = means.rowwise() - means.colwise().mean();
    LrvEstimate out;
    out.sigma = symmetrize((static_cast<double>(b) / static_cast<double>(cfg.a - 1)) * (dev.transpose() * dev));
    out.family = EstimatorFamily::batch_means;
    out.bandwidth = b;
    return out;
}

/// Overlapping batch means with all n-b+1 sliding batches.
inline LrvEstimate overlapping_batch_means(const SampleMatrix& s, Index b)
{
    const Index n = s.n();
    if (b < 1 || b > n - 1)
        throw ArgumentError("overlapping batch size must lie in [1, n-1]");
    Matrix yc = centered(s);
    // Cumulative sums give each sliding-window mean in O(p).
    Matrix cum = Matrix::Zero(n + 1, s.p());
    for (Index i = 0; i < n; ++i)
        cum.row(i + 1) = cum.row(i) + yc.row(i);
    const Index m = n - b + 1;
    Matrix dev = (cum.bottomRows(m) - cum.topRows(m)) / static_cast<double>(b);
    const double nb = static_cast<double>(n) * static_cast<double>(b);
    const double coef = nb / (static_cast<double>(n - b) * static_cast<double>(n - b + 1));
    LrvEstimate out;
    out.sigma = symmetrize(coef * (dev.transpose() * dev));
    out.family = EstimatorFamily::overlapping_batch_means;
    out.bandwidth = b;
    return out;
}

/// (1/(1-c)) big - (c/(1-c)) small. Not projected; psd records the outcome.
inline LrvEstimate lugsail_combine(const LrvEstimate& big, const LrvEstimate& small, double c)
{
    if (!(c >= 0.0 && c < 1.0))
        throw ArgumentError("lugsail weight c must lie in [0, 1)");
    if (big.family != small.family)
        throw ArgumentError("lugsail components come from different estimator families");
    LrvEstimate out = big;
    if (c == 0.0)
        return out;
    out.sigma = symmetrize(big.sigma / (1.0 - c) - (c / (1.0 - c)) * small.sigma);
    out.lugsail_c = c;
    out.psd = is_psd(out.sigma);
    return out;
}

/// Small-batch size floor(b/r), clamped to at least 1.
inline Index lugsail_small_size(Index b, double r)
{
    auto small = static_cast<Index>(std::floor(static_cast<double>(b) / r));
    return std::max<Index>(small, 1);
}

namespace detail {

template <typename Base>
LrvEstimate lugsail_batch(const SampleMatrix& s, Index b, const LugsailConfig& cfg, Base&& base)
{
    LrvEstimate big = base(s, b);
    if (!cfg.active())
        return big;
    const double c = cfg.weight(s.n(), b);
    LrvEstimate out = lugsail_combine(big, base(s, lugsail_small_size(b, cfg.r)), c);
    out.lugsail = to_string(cfg.regime);
    out.lugsail_r = cfg.r;
    out.lugsail_c = c;
    return out;
}

} // namespace detail

inline LrvEstimate lugsail_batch_means(const SampleMatrix& s, Index b, const LugsailConfig& cfg)
{
    return detail::lugsail_batch(s, b, cfg, [](const SampleMatrix& x, Index bb) { return batch_means(x, bb); });
}

inline LrvEstimate lugsail_overlapping_batch_means(const SampleMatrix& s, Index b, const LugsailConfig& cfg)
{
    return detail::lugsail_batch(s, b, cfg,
                                 [](const SampleMatrix& x, Index bb) { return overlapping_batch_means(x, bb); });
}

/// Exact bias of univariate batch means for a stationary AR(1) with unit
/// innovations, where R(s) = phi^s / (1 - phi^2). Requires n = a*b.
inline double bm_exact_bias_ar1(double phi, Index n, Index b)
{
    if (!(std::abs(phi) < 1.0))
        throw ArgumentError("AR(1) coefficient must satisfy |phi| < 1");
    const auto cfg = BatchConfig::for_length(n, b);
    if (cfg.a * b != n)
        throw ArgumentError("exact bias needs n to be a multiple of b");
    const double var = 1.0 / (1.0 - phi * phi);
    const double a = static_cast<double>(cfg.a);
    const double bd = static_cast<double>(b);
    const double nd = static_cast<double>(n);

    double head = 0.0; // sum_{s=1}^{b-1} s R(s)
    double pw = 1.0;
    for (Index s = 1; s < b; ++s) {
        pw *= phi;
        head += static_cast<double>(s) * pw * var;
    }
    const double phib = std::pow(phi, bd);
    const double tail = phib * var / (1.0 - phi); // sum_{s=b}^inf R(s)
    double finite = 0.0;                           // sum_{s=b}^{n-1} (1 - s/n) R(s)
    pw = phib;
    for (Index s = b; s < n; ++s) {
        finite += (1.0 - static_cast<double>(s) / nd) * pw * var;
        pw *= phi;
    }
    return -2.0 * (a + 1.0) / (a * bd) * head - 2.0 * tail - 2.0 / (a - 1.0) * finite;
}

/// Bias of the lugsail combination at (b, floor(b/r), c), by linearity.
inline double lugsail_exact_bias_ar1(double phi, Index n, Index b, double r, double c)
{
    const double big = bm_exact_bias_ar1(phi, n, b);
    if (c == 0.0)
        return big;
    const double small = bm_exact_bias_ar1(phi, n, lugsail_small_size(b, r));
    return big / (1.0 - c) - (c / (1.0 - c)) * small;
}

} // namespace mcse
