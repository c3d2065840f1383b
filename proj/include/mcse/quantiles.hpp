#pragma once

// Joint estimation of means and quantiles, their long-run covariance Omega,
// and simultaneous hyperrectangular confidence regions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcse/core.hpp"
#include "mcse/diagnostics.hpp"
#include "mcse/estimate.hpp"

namespace mcse {

/// ceil(n q)-th order statistic (1-based).
inline double quantile_estimate(std::span<const double> v, double q)
{
    if (v.empty())
        throw InputError("quantile of an empty sequence");
    if (!(q > 0.0 && q < 1.0))
        throw ArgumentError("quantile probability must lie in (0, 1)");
    const double nq = static_cast<double>(v.size()) * q;
    double rank = std::ceil(nq);
    if (std::abs(nq - std::round(nq)) < 1e-9 * std::max(1.0, nq))
        rank = std::round(nq);
    auto k = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(v.size())));
    std::vector<double> tmp(v.begin(), v.end());
    std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(k - 1), tmp.end());
    return tmp[k - 1];
}

namespace detail {

// Linear-interpolation sample quantile on sorted data.
inline double interpolated_quantile(const std::vector<double>& sorted, double q)
{
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace detail

/// Silverman's rule 0.9 min(sd, IQR/1.34) n^{-1/5}; falls back to sd when
/// the IQR is zero.
inline double silverman_bandwidth(std::span<const double> v)
{
    const auto n = static_cast<double>(v.size());
    if (v.size() < 2)
        throw InputError("density estimate needs at least 2 points");
    double mean = 0.0;
    for (double x : v)
        mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v)
        ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0))
        throw InputError("density estimate needs positive sample spread");
    std::vector<double> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end());
    const double iqr = detail::interpolated_quantile(sorted, 0.75) - detail::interpolated_quantile(sorted, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(n, -0.2);
}

/// Gaussian kernel density estimate at x.
inline double kde_density_at(std::span<const double> v, double x)
{
    const double h = silverman_bandwidth(v);
    const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * h * static_cast<double>(v.size()));
    double acc = 0.0;
    for (double xi : v) {
        const double u = (x - xi) / h;
        acc += std::exp(-0.5 * u * u);
    }
    return acc * norm;
}

enum class TargetKind { mean, quantile };

struct TargetSpec {
    TargetKind kind = TargetKind::mean;
    Index component = 0;
    double q = 0.5;

    static TargetSpec mean(Index component) { return {TargetKind::mean, component, 0.5}; }
    static TargetSpec quantile(Index component, double q) { return {TargetKind::quantile, component, q}; }
};

/// Parses "mean:0,quant:0:0.1,quant:0:0.9".
inline std::vector<TargetSpec> parse_targets(const std::string& text)
{
    std::vector<TargetSpec> out;
    std::size_t pos = 0;
    auto bad = [&](const std::string& why) { return ArgumentError("malformed target list '" + text + "': " + why); };
    while (pos <= text.size()) {
        std::size_t end = text.find(',', pos);
        std::string item = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        std::vector<std::string> parts;
        std::size_t p0 = 0;
        while (true) {
            std::size_t p1 = item.find(':', p0);
            parts.push_back(item.substr(p0, p1 == std::string::npos ? std::string::npos : p1 - p0));
            if (p1 == std::string::npos)
                break;
            p0 = p1 + 1;
        }
        try {
            std::size_t used = 0;
            if (parts.size() == 2 && parts[0] == "mean") {
                long c = std::stol(parts[1], &used);
                if (used != parts[1].size() || c < 0)
                    throw bad("bad component in '" + item + "'");
                out.push_back(TargetSpec::mean(c));
            } else if (parts.size() == 3 && (parts[0] == "quant" || parts[0] == "quantile")) {
                long c = std::stol(parts[1], &used);
                if (used != parts[1].size() || c < 0)
                    throw bad("bad component in '" + item + "'");
                double q = std::stod(parts[2], &used);
                if (used != parts[2].size() || !(q > 0.0 && q < 1.0))
                    throw bad("bad probability in '" + item + "'");
                out.push_back(TargetSpec::quantile(c, q));
            } else {
                throw bad("cannot parse '" + item + "'");
            }
        } catch (const std::logic_error& e) {
            if (dynamic_cast<const ArgumentError*>(&e))
                throw;
            throw bad("cannot parse '" + item + "'");
        }
        if (end == std::string::npos)
            break;
        pos = end + 1;
    }
    if (out.empty())
        throw bad("no targets");
    return out;
}

struct JointEstimate {
    Vector nu_hat;
    Matrix omega;
    Index n = 0;
    std::vector<TargetSpec> targets;
    LrvEstimate lrv;
};

namespace detail {

inline std::vector<double> column_values(const SampleMatrix& s, Index j)
{
    std::vector<double> v(static_cast<std::size_t>(s.n()));
    for (Index i = 0; i < s.n(); ++i)
        v[static_cast<std::size_t>(i)] = s.values()(i, j);
    return v;
}

inline void check_targets(const SampleMatrix& s, const std::vector<TargetSpec>& targets)
{
    if (targets.empty())
        throw ArgumentError("at least one target is required");
    for (const auto& t : targets) {
        if (t.component < 0 || t.component >= s.p())
            throw ArgumentError("target component " + std::to_string(t.component) + " out of range");
        if (t.kind == TargetKind::quantile && !(t.q > 0.0 && t.q < 1.0))
            throw ArgumentError("quantile probability must lie in (0, 1)");
    }
}

} // namespace detail

/// Column per target whose long-run covariance estimates Omega: the raw
/// component for a mean, (q - 1{V_i <= xi_q}) / f(xi_q) for a quantile.
/// Also reports the point estimates.
inline std::pair<SampleMatrix, Vector> joint_transformed_chain_with_estimates(const SampleMatrix& s,
                                                                              const std::vector<TargetSpec>& targets)
{
    detail::check_targets(s, targets);
    const auto k = static_cast<Index>(targets.size());
    Matrix out(s.n(), k);
    Vector nu(k);
    for (Index t = 0; t < k; ++t) {
        const auto& spec = targets[static_cast<std::size_t>(t)];
        if (spec.kind == TargetKind::mean) {
            out.col(t) = s.values().col(spec.component);
            nu(t) = s.values().col(spec.component).mean();
            continue;
        }
        auto v = detail::column_values(s, spec.component);
        const double xi = quantile_estimate(v, spec.q);
        const double f = kde_density_at(v, xi);
        if (!(f > 0.0))
            throw NumericalError("density estimate at the sample quantile is not positive");
        for (Index i = 0; i < s.n(); ++i)
            out(i, t) = (spec.q - (v[static_cast<std::size_t>(i)] <= xi ? 1.0 : 0.0)) / f;
        nu(t) = xi;
    }
    return {SampleMatrix(std::move(out)), nu};
}

inline SampleMatrix joint_transformed_chain(const SampleMatrix& s, const std::vector<TargetSpec>& targets)
{
    return joint_transformed_chain_with_estimates(s, targets).first;
}

/// Zero-lugsail batch means, the default estimator for Omega.
inline EstimatorSpec default_joint_estimator()
{
    EstimatorSpec spec;
    spec.method = Method::bm;
    spec.lugsail = LugsailConfig::zero();
    return spec;
}

inline JointEstimate estimate_omega(const SampleMatrix& s, const std::vector<TargetSpec>& targets,
                                    const EstimatorSpec& estimator = default_joint_estimator())
{
    auto [chain, nu] = joint_transformed_chain_with_estimates(s, targets);
    JointEstimate out;
    out.lrv = estimate_lrv(chain, estimator);
    out.omega = out.lrv.sigma;
    out.nu_hat = std::move(nu);
    out.n = s.n();
    out.targets = targets;
    return out;
}

// ---------------------------------------------------------------------------
// Multivariate normal rectangle probabilities

struct MvnResult {
    double prob = 0.0;
    double std_error = 0.0;
    Index points = 0;
};

struct MvnOptions {
    double tol = 1e-3;
    std::uint64_t seed = 12345;
    int shifts = 12;
    Index min_points = 128;
    Index max_points = Index{1} << 20; // per shift
};

namespace detail {

inline double normal_inv(double u)
{
    u = std::clamp(u, 1e-300, 1.0 - 1e-16);
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

inline const std::vector<double>& lattice_generators()
{
    // square roots of the first primes (Richtmyer sequence)
    static const std::vector<double> gens = [] {
        std::vector<double> g;
        for (int c = 2; g.size() < 64; ++c) {
            bool prime = true;
            for (int d = 2; d * d <= c; ++d)
                if (c % d == 0) {
                    prime = false;
                    break;
                }
            if (prime)
                g.push_back(std::sqrt(static_cast<double>(c)));
        }
        return g;
    }();
    return gens;
}

} // namespace detail

/// P(lower < U < upper) for U ~ N(center, covariance). Sequential conditioning
/// (Genz) over randomly shifted Richtmyer lattices with the baker transform;
/// point counts double until the standard error across shifts is <= tol.
inline MvnResult mvn_rect_prob(const Vector& center, const Matrix& covariance, const Vector& lower, const Vector& upper,
                               const MvnOptions& opt = {})
{
    const Index p = covariance.rows();
    if (center.size() != p || lower.size() != p || upper.size() != p)
        throw ArgumentError("dimension mismatch in rectangle probability");
    if (!(opt.tol > 0.0))
        throw ArgumentError("tolerance must be positive");
    if (!is_pd(covariance))
        throw NumericalError("covariance is not positive definite");
    if (p > static_cast<Index>(detail::lattice_generators().size()) + 1)
        throw ArgumentError("dimension too large for the lattice rule");

    // Order by standardized marginal probability, narrowest first.
    std::vector<Index> order(static_cast<std::size_t>(p));
    std::vector<double> marginal(static_cast<std::size_t>(p));
    for (Index i = 0; i < p; ++i) {
        const double sd = std::sqrt(covariance(i, i));
        order[static_cast<std::size_t>(i)] = i;
        marginal[static_cast<std::size_t>(i)] =
            normal_cdf((upper(i) - center(i)) / sd) - normal_cdf((lower(i) - center(i)) / sd);
    }
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return marginal[static_cast<std::size_t>(a)] < marginal[static_cast<std::size_t>(b)];
    });
    Matrix cov(p, p);
    Vector lo(p), hi(p);
    for (Index i = 0; i < p; ++i) {
        const Index oi = order[static_cast<std::size_t>(i)];
        lo(i) = lower(oi) - center(oi);
        hi(i) = upper(oi) - center(oi);
        for (Index j = 0; j < p; ++j)
            cov(i, j) = covariance(oi, order[static_cast<std::size_t>(j)]);
    }
    const Matrix chol = Eigen::LLT<Matrix>(cov).matrixL();

    const double d1 = normal_cdf(lo(0) / chol(0, 0));
    const double e1 = normal_cdf(hi(0) / chol(0, 0));
    MvnResult res;
    if (p == 1) {
        res.prob = std::max(e1 - d1, 0.0);
        res.points = 1;
        return res;
    }

    const auto& gens = detail::lattice_generators();
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int m = std::max(opt.shifts, 2);
    std::vector<std::vector<double>> shifts(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(p - 1)));
    for (auto& sh : shifts)
        for (auto& x : sh)
            x = unif(rng);

    std::vector<double> sums(static_cast<std::size_t>(m), 0.0);
    std::vector<double> y(static_cast<std::size_t>(p));
    Index done = 0;
    Index target = opt.min_points;
    while (true) {
        for (int s = 0; s < m; ++s) {
            const auto& sh = shifts[static_cast<std::size_t>(s)];
            double acc = 0.0;
            for (Index k = done + 1; k <= target; ++k) {
                double d = d1, e = e1, f = e1 - d1;
                for (Index i = 1; i < p && f > 0.0; ++i) {
                    double w = std::fmod(static_cast<double>(k) * gens[static_cast<std::size_t>(i - 1)] +
                                             sh[static_cast<std::size_t>(i - 1)],
                                         1.0);
                    w = std::abs(2.0 * w - 1.0);
                    y[static_cast<std::size_t>(i - 1)] = detail::normal_inv(d + w * (e - d));
                    double cond = 0.0;
                    for (Index j = 0; j < i; ++j)
                        cond += chol(i, j) * y[static_cast<std::size_t>(j)];
                    d = normal_cdf((lo(i) - cond) / chol(i, i));
                    e = normal_cdf((hi(i) - cond) / chol(i, i));
                    f *= std::max(e - d, 0.0);
                }
                acc += f;
            }
            sums[static_cast<std::size_t>(s)] += acc;
        }
        done = target;
        double mean = 0.0;
        for (double sm : sums)
            mean += sm / static_cast<double>(done);
        mean /= m;
        double var = 0.0;
        for (double sm : sums) {
            const double d = sm / static_cast<double>(done) - mean;
            var += d * d;
        }
        var /= static_cast<double>(m) * (m - 1);
        res.prob = std::clamp(mean, 0.0, 1.0);
        res.std_error = std::sqrt(var);
        res.points = done * m;
        if (res.std_error <= opt.tol || done >= opt.max_points)
            break;
        target = std::min(2 * done, opt.max_points);
    }
    return res;
}

struct SimultaneousRegion {
    double z_star = 0.0;
    std::vector<std::pair<double, double>> intervals;
    double coverage_target = 0.95;
    double coverage = 0.0; // rectangle probability at z_star
};

/// Common multiplier z* such that nu_i +- z* sqrt(Omega_ii / n) has joint
/// normal coverage 1 - alpha, found by bisection.
inline SimultaneousRegion solve_z_star(const JointEstimate& joint, double alpha, double tol = 1e-3,
                                       std::uint64_t seed = 12345)
{
    detail::check_alpha(alpha);
    const Index p = joint.omega.rows();
    if (!is_pd(joint.omega))
        throw NumericalError("Omega is not positive definite");
    const Matrix cov = joint.omega / static_cast<double>(joint.n);
    const Vector sd = cov.diagonal().cwiseSqrt();
    const Vector zero = Vector::Zero(p);
    MvnOptions opt;
    opt.tol = tol;
    opt.seed = seed;
    auto coverage = [&](double z) { return mvn_rect_prob(zero, cov, -z * sd, z * sd, opt).prob; };

    const double goal = 1.0 - alpha;
    double hi = 10.0;
    int doublings = 0;
    while (coverage(hi) < goal) {
        if (++doublings > 8)
            throw NumericalError("failed to bracket z*");
        hi *= 2.0;
    }
    double lo = 0.0;
    for (int it = 0; it < 100 && hi - lo > 1e-7; ++it) {
        const double mid = 0.5 * (lo + hi);
        (coverage(mid) < goal ? lo : hi) = mid;
    }
    SimultaneousRegion out;
    out.z_star = 0.5 * (lo + hi);
    out.coverage_target = goal;
    out.coverage = coverage(out.z_star);
    for (Index i = 0; i < p; ++i)
        out.intervals.emplace_back(joint.nu_hat(i) - out.z_star * sd(i), joint.nu_hat(i) + out.z_star * sd(i));
    return out;
}

} // namespace mcse
