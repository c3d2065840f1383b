#pragma once

// Output analysis on top of an estimated long-run covariance: Monte Carlo
// standard errors, confidence ellipsoids, effective sample size and the
// fixed-volume sequential stopping rule.

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "mcse/core.hpp"

namespace mcse {

inline double chi2_quantile(double prob, double df)
{
    if (!(prob > 0.0 && prob < 1.0))
        throw ArgumentError("chi-square quantile needs prob in (0, 1)");
    if (!(df >= 1.0))
        throw ArgumentError("chi-square quantile needs df >= 1");
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(df), prob);
}

inline double normal_quantile(double prob)
{
    if (!(prob > 0.0 && prob < 1.0))
        throw ArgumentError("normal quantile needs prob in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// sqrt(Sigma_jj / n) per component.
inline Vector mcse(const Matrix& sigma, Index n)
{
    Vector out(sigma.rows());
    for (Index j = 0; j < sigma.rows(); ++j) {
        if (sigma(j, j) < 0.0)
            throw NumericalError("negative variance estimate for component " + std::to_string(j) +
                                 "; use a zero lugsail or base estimator");
        out(j) = std::sqrt(sigma(j, j) / static_cast<double>(n));
    }
    return out;
}

inline Vector mcse(const LrvEstimate& sigma, Index n) { return mcse(sigma.sigma, n); }

/// diag(B) / sqrt(n) for the symmetric PD square root B of Sigma. Differs
/// from mcse() whenever Sigma has off-diagonal mass.
inline Vector mcse_sqrt_root(const Matrix& sigma, Index n)
{
    if (!is_pd(sigma))
        throw NumericalError("matrix square root needs a positive definite Sigma");
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(sigma));
    Matrix root = es.operatorSqrt();
    return root.diagonal() / std::sqrt(static_cast<double>(n));
}

namespace detail {

inline double require_logdet(const Matrix& m, const char* what)
{
    auto ld = pd_logdet(m);
    if (!ld)
        throw NumericalError(std::string(what) + " is not positive definite");
    return *ld;
}

// log of 2 pi^{p/2} / (p Gamma(p/2)), the unit-ball volume factor.
inline double log_ball_factor(Index p)
{
    const double pd = static_cast<double>(p);
    return std::log(2.0) + 0.5 * pd * std::log(std::numbers::pi) - std::log(pd) - std::lgamma(0.5 * pd);
}

inline void check_alpha(double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ArgumentError("alpha must lie in (0, 1)");
}

} // namespace detail

/// Volume of the (1 - alpha) confidence ellipsoid for the mean.
inline double region_volume(const Matrix& sigma, Index n, double alpha)
{
    detail::check_alpha(alpha);
    const Index p = sigma.rows();
    const double pd = static_cast<double>(p);
    const double logdet = detail::require_logdet(sigma, "Sigma_n");
    const double chi2 = chi2_quantile(1.0 - alpha, pd);
    return std::exp(detail::log_ball_factor(p) + 0.5 * pd * (std::log(chi2) - std::log(static_cast<double>(n))) +
                    0.5 * logdet);
}

/// n (mean - theta0)^T Sigma^{-1} (mean - theta0).
inline double region_statistic(const Vector& theta0, const Vector& theta_bar, const Matrix& sigma, Index n)
{
    Eigen::LLT<Matrix> llt(symmetrize(sigma));
    if (llt.info() != Eigen::Success || !is_pd(sigma))
        throw NumericalError("Sigma_n is not positive definite");
    Vector d = theta_bar - theta0;
    return static_cast<double>(n) * d.dot(llt.solve(d));
}

inline bool region_contains(const Vector& theta0, const Vector& theta_bar, const Matrix& sigma, Index n, double alpha)
{
    detail::check_alpha(alpha);
    return region_statistic(theta0, theta_bar, sigma, n) < chi2_quantile(1.0 - alpha, static_cast<double>(sigma.rows()));
}

/// n (|Lambda| / |Sigma|)^{1/p} from log-determinants.
inline double ess(const Matrix& lambda, const Matrix& sigma, Index n)
{
    const double p = static_cast<double>(sigma.rows());
    const double ll = detail::require_logdet(lambda, "sample covariance Lambda_n");
    const double ls = detail::require_logdet(sigma, "Sigma_n");
    return static_cast<double>(n) * std::exp((ll - ls) / p);
}

inline double ess(const SampleMatrix& s, const Matrix& sigma) { return ess(sample_covariance(s), sigma, s.n()); }

inline double ess(const SampleMatrix& s, const LrvEstimate& sigma) { return ess(s, sigma.sigma); }

/// ESS needed so that the fixed-volume rule at (alpha, epsilon) is met:
/// 2^{2/p} pi / (p Gamma(p/2))^{2/p} * chi2_{1-alpha,p} / epsilon^2, rounded.
inline double min_ess_exact(double alpha, double epsilon, Index p)
{
    detail::check_alpha(alpha);
    if (!(epsilon > 0.0))
        throw ArgumentError("epsilon must be positive");
    if (p < 1)
        throw ArgumentError("dimension must be >= 1");
    const double pd = static_cast<double>(p);
    const double f = 2.0 / pd;
    const double log_m = f * std::log(2.0) + std::log(std::numbers::pi) - f * std::log(pd) -
                         f * std::lgamma(0.5 * pd) - 2.0 * std::log(epsilon) + std::log(chi2_quantile(1.0 - alpha, pd));
    return std::exp(log_m);
}

inline long long min_ess(double alpha, double epsilon, Index p)
{
    return std::llround(min_ess_exact(alpha, epsilon, p));
}

struct StoppingConfig {
    double alpha = 0.05;
    double epsilon = 0.05;
    Index n_star = 0; // 0 selects min_ess(alpha, epsilon, p)

    Index resolved_n_star(Index p) const
    {
        if (n_star > 0)
            return n_star;
        return static_cast<Index>(min_ess(alpha, epsilon, p));
    }

    void validate() const
    {
        detail::check_alpha(alpha);
        if (!(epsilon > 0.0))
            throw ArgumentError("epsilon must be positive");
        if (n_star < 0)
            throw ArgumentError("n_star must be >= 1");
    }
};

struct StoppingDecision {
    bool terminate = false;
    Index n = 0;
    Index n_star = 0;
    double lhs = 0.0; // Vol^{1/p} + 1/n
    double rhs = 0.0; // epsilon |Lambda_n|^{1/(2p)}
    double ess = 0.0;
    double min_ess = 0.0;
};

/// Fixed-volume rule: stop once n > n* and Vol^{1/p} + 1/n < eps |Lambda|^{1/2p}.
inline StoppingDecision fixed_volume_check(const Matrix& lambda, const Matrix& sigma, Index n,
                                           const StoppingConfig& config)
{
    config.validate();
    const Index p = sigma.rows();
    const double pd = static_cast<double>(p);
    StoppingDecision d;
    d.n = n;
    d.n_star = config.resolved_n_star(p);
    const double lambda_logdet = detail::require_logdet(lambda, "sample covariance Lambda_n");
    d.lhs = std::pow(region_volume(sigma, n, config.alpha), 1.0 / pd) + 1.0 / static_cast<double>(n);
    d.rhs = config.epsilon * std::exp(lambda_logdet / (2.0 * pd));
    d.ess = ess(lambda, sigma, n);
    d.min_ess = static_cast<double>(min_ess(config.alpha, config.epsilon, p));
    d.terminate = n > d.n_star && d.lhs < d.rhs;
    return d;
}

inline StoppingDecision fixed_volume_check(const SampleMatrix& s, const Matrix& sigma, const StoppingConfig& config)
{
    return fixed_volume_check(sample_covariance(s), sigma, s.n(), config);
}

} // namespace mcse
