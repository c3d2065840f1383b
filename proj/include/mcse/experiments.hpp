#pragma once

// Synthetic chains (AR(1), a random-walk Metropolis sampler on a normal
// mixture, a logistic-regression posterior) and replication studies of
// coverage, effective sample size and computation time.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "mcse/core.hpp"
#include "mcse/diagnostics.hpp"
#include "mcse/estimate.hpp"

namespace mcse {

// ---------------------------------------------------------------------------
// Seeds

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of stream `index` under `master`; independent of evaluation order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// AR(1)

struct Ar1Config {
    double phi = 0.5;
    Index n = 1000;
    std::uint64_t seed = 1;
    std::optional<double> x0; // default: a draw from the stationary law

    void validate() const
    {
        if (!(std::abs(phi) < 1.0))
            throw ArgumentError("AR(1) needs |phi| < 1");
        if (n < 2)
            throw ArgumentError("AR(1) needs n >= 2");
    }
};

/// X_{t+1} = phi X_t + e_t, e_t ~ N(0, 1), started from X_0; emits X_1..X_n.
inline SampleMatrix ar1_generate(const Ar1Config& cfg)
{
    cfg.validate();
    Rng rng(cfg.seed);
    std::normal_distribution<double> eps(0.0, 1.0);
    Matrix out(cfg.n, 1);
    double x = cfg.x0 ? *cfg.x0 : eps(rng) / std::sqrt(1.0 - cfg.phi * cfg.phi);
    for (Index t = 0; t < cfg.n; ++t) {
        x = cfg.phi * x + eps(rng);
        out(t, 0) = x;
    }
    return SampleMatrix(std::move(out));
}

struct BiasTruth {
    double sigma_true = 1.0;
    double gamma = 0.0;
    double ess_ratio = 1.0;
};

inline BiasTruth ar1_truth(double phi)
{
    if (!(std::abs(phi) < 1.0))
        throw ArgumentError("AR(1) needs |phi| < 1");
    const double one_m = 1.0 - phi;
    const double one_m2 = 1.0 - phi * phi;
    return {1.0 / (one_m * one_m), -2.0 * phi / (one_m * one_m * one_m2), one_m * one_m / one_m2};
}

// ---------------------------------------------------------------------------
// Random-walk Metropolis on a normal mixture

struct MixtureConfig {
    std::vector<double> weights{0.2, 0.3, 0.5};
    std::vector<double> means{2.5, 4.5, 7.5};
    std::vector<double> sds{1.0, 1.0, 1.0};
    double proposal_sd = 0.5;
    Index n = 50000;
    std::uint64_t seed = 1;
    std::optional<double> x0; // default: an exact draw from the mixture

    void validate() const
    {
        if (weights.empty() || weights.size() != means.size() || weights.size() != sds.size())
            throw ArgumentError("mixture components must have matching sizes");
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0)
                throw ArgumentError("mixture weights must be non-negative");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw ArgumentError("mixture weights must sum to 1");
        for (double s : sds)
            if (!(s > 0.0))
                throw ArgumentError("mixture standard deviations must be positive");
        if (!(proposal_sd > 0.0))
            throw ArgumentError("proposal standard deviation must be positive");
        if (n < 2)
            throw ArgumentError("chain length must be >= 2");
    }

    double mean() const
    {
        double m = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k)
            m += weights[k] * means[k];
        return m;
    }

    double log_density(double x) const
    {
        double f = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            const double z = (x - means[k]) / sds[k];
            f += weights[k] * std::exp(-0.5 * z * z) / sds[k];
        }
        return std::log(f);
    }
};

struct MhStats {
    Index accepted = 0;
    Index proposed = 0;
    double acceptance_rate() const { return proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

inline SampleMatrix mixture_mh_generate(const MixtureConfig& cfg, MhStats* stats = nullptr)
{
    cfg.validate();
    Rng rng(cfg.seed);
    std::normal_distribution<double> stdnorm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double x;
    if (cfg.x0) {
        x = *cfg.x0;
    } else {
        std::discrete_distribution<std::size_t> pick(cfg.weights.begin(), cfg.weights.end());
        const std::size_t k = pick(rng);
        x = cfg.means[k] + cfg.sds[k] * stdnorm(rng);
    }
    double logf = cfg.log_density(x);
    Matrix out(cfg.n, 1);
    MhStats st;
    for (Index t = 0; t < cfg.n; ++t) {
        const double y = x + cfg.proposal_sd * stdnorm(rng);
        const double logf_y = cfg.log_density(y);
        ++st.proposed;
        if (std::log(unif(rng)) < logf_y - logf) {
            x = y;
            logf = logf_y;
            ++st.accepted;
        }
        out(t, 0) = x;
    }
    if (stats)
        *stats = st;
    return SampleMatrix(std::move(out));
}

// ---------------------------------------------------------------------------
// Random-walk Metropolis on a Bayesian logistic regression posterior

struct LogisticConfig {
    Index n_obs = 200;
    Index p_coef = 19;
    Index n = 10000;
    std::uint64_t seed = 1;
    double prior_variance = 0.01; // beta ~ N(0, prior_variance I)
    double proposal_scale = 2.38;
};

struct LogisticProblem {
    Matrix design; // n_obs x p_coef, first column is the intercept
    Vector response;
    Vector beta_true;
};

/// Synthetic data: intercept plus standard normal covariates, y ~ Bernoulli.
inline LogisticProblem logistic_problem(const LogisticConfig& cfg)
{
    if (cfg.p_coef < 1 || cfg.n_obs < 0)
        throw ArgumentError("logistic problem needs p_coef >= 1 and n_obs >= 0");
    Rng rng(derive_seed(cfg.seed, 0));
    std::normal_distribution<double> stdnorm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    LogisticProblem prob;
    prob.beta_true.resize(cfg.p_coef);
    for (Index j = 0; j < cfg.p_coef; ++j)
        prob.beta_true(j) = (j % 2 == 0 ? 1.0 : -1.0) * (0.5 + 0.5 * static_cast<double>(j % 3));
    prob.design.resize(cfg.n_obs, cfg.p_coef);
    prob.response.resize(cfg.n_obs);
    for (Index i = 0; i < cfg.n_obs; ++i) {
        prob.design(i, 0) = cfg.p_coef > 1 ? 1.0 : stdnorm(rng);
        for (Index j = 1; j < cfg.p_coef; ++j)
            prob.design(i, j) = stdnorm(rng);
        const double eta = prob.design.row(i).dot(prob.beta_true);
        prob.response(i) = unif(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    }
    return prob;
}

inline double logistic_log_posterior(const LogisticProblem& prob, const Vector& beta, double prior_variance)
{
    double lp = -0.5 * beta.squaredNorm() / prior_variance;
    if (prob.design.rows() == 0)
        return lp;
    const Vector eta = prob.design * beta;
    for (Index i = 0; i < eta.size(); ++i) {
        const double e = eta(i);
        // y e - log(1 + exp(e)), evaluated stably
        const double log1pexp = e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
        lp += prob.response(i) * e - log1pexp;
    }
    return lp;
}

/// Random-walk Metropolis with Gaussian proposals shaped by the Laplace
/// precision (prior precision + X^T X / 4), scaled by proposal_scale^2 / p.
inline SampleMatrix logistic_mh_generate(const LogisticConfig& cfg, MhStats* stats = nullptr)
{
    if (cfg.n < 2)
        throw ArgumentError("chain length must be >= 2");
    if (!(cfg.prior_variance > 0.0))
        throw ArgumentError("prior variance must be positive");
    const LogisticProblem prob = logistic_problem(cfg);
    const Index p = cfg.p_coef;
    Matrix precision = Matrix::Identity(p, p) / cfg.prior_variance;
    if (prob.design.rows() > 0)
        precision += 0.25 * prob.design.transpose() * prob.design;
    const Matrix prop_cov =
        (cfg.proposal_scale * cfg.proposal_scale / static_cast<double>(p)) * precision.inverse();
    const Matrix prop_chol = Eigen::LLT<Matrix>(symmetrize(prop_cov)).matrixL();

    Rng rng(derive_seed(cfg.seed, 1));
    std::normal_distribution<double> stdnorm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector beta = Vector::Zero(p);
    double lp = logistic_log_posterior(prob, beta, cfg.prior_variance);
    Vector z(p);
    Matrix out(cfg.n, p);
    MhStats st;
    for (Index t = 0; t < cfg.n; ++t) {
        for (Index j = 0; j < p; ++j)
            z(j) = stdnorm(rng);
        Vector cand = beta + prop_chol * z;
        const double lp_c = logistic_log_posterior(prob, cand, cfg.prior_variance);
        ++st.proposed;
        if (std::log(unif(rng)) < lp_c - lp) {
            beta = std::move(cand);
            lp = lp_c;
            ++st.accepted;
        }
        out.row(t) = beta.transpose();
    }
    if (stats)
        *stats = st;
    return SampleMatrix(std::move(out));
}

// ---------------------------------------------------------------------------
// Replication studies

/// Number of worker threads: MCSE_THREADS if set, else the hardware count.
inline unsigned worker_threads()
{
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MCSE_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1)
            return std::min<unsigned>(static_cast<unsigned>(v), hw);
    }
    return hw;
}

/// Runs body(r) for r in [0, count) on a small worker pool.
template <typename Body>
void parallel_for(Index count, Body&& body, unsigned threads = worker_threads())
{
    threads = static_cast<unsigned>(std::min<Index>(std::max<unsigned>(threads, 1u), std::max<Index>(count, 1)));
    if (threads <= 1) {
        for (Index r = 0; r < count; ++r)
            body(r);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (Index r = next++; r < count && !failed; r = next++) {
                try {
                    body(r);
                } catch (...) {
                    if (!failed.exchange(true))
                        failure = std::current_exception();
                }
            }
        });
    for (auto& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);
}

/// Chain of length n from a stream seed.
using ChainGenerator = std::function<SampleMatrix(std::uint64_t seed, Index n)>;

struct StudyTruth {
    Vector mean; // empty: coverage is not evaluated
    Matrix sigma;
    std::optional<double> ess_ratio;
};

struct StudyConfig {
    std::vector<EstimatorSpec> estimators;
    std::vector<Index> n_grid;
    Index replications = 500;
    std::uint64_t seed = 20240101;
    double alpha = 0.05;
};

/// One (estimator, n) cell aggregated over replications.
struct StudyRow {
    std::string estimator;
    Index n = 0;
    Index replications = 0;
    Index failures = 0;       // estimates that were not positive definite
    double coverage = 0.0;    // fraction of regions containing the true mean
    double coverage_se = 0.0;
    double sigma_mean = 0.0;  // replication mean of Sigma_n(0,0)
    double sigma_se = 0.0;
    double ess_ratio_mean = 0.0; // over successful replications
    double ess_ratio_sd = 0.0;
    double ess_ratio_se = 0.0;
};

namespace detail {

struct CellSample {
    bool ok = false;
    bool covered = false;
    double sigma00 = 0.0;
    double ess_ratio = 0.0;
};

inline double mean_of(const std::vector<double>& v)
{
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sd_of(const std::vector<double>& v)
{
    if (v.size() < 2)
        return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v)
        ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

} // namespace detail

/// Generates one chain of length max(n_grid) per replication and evaluates
/// every estimator on each prefix length. Replication r uses the stream
/// derive_seed(seed, r); results do not depend on thread count.
inline std::vector<StudyRow> run_study(const ChainGenerator& generator, const StudyTruth& truth, const StudyConfig& cfg)
{
    if (cfg.estimators.empty() || cfg.n_grid.empty() || cfg.replications < 1)
        throw ArgumentError("study needs estimators, an n grid and at least one replication");
    const Index nmax = *std::max_element(cfg.n_grid.begin(), cfg.n_grid.end());
    const std::size_t cells = cfg.estimators.size() * cfg.n_grid.size();
    std::vector<std::vector<detail::CellSample>> samples(static_cast<std::size_t>(cfg.replications),
                                                         std::vector<detail::CellSample>(cells));
    parallel_for(cfg.replications, [&](Index r) {
        const SampleMatrix chain = generator(derive_seed(cfg.seed, static_cast<std::uint64_t>(r)), nmax);
        auto& out = samples[static_cast<std::size_t>(r)];
        for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
            const Index n = cfg.n_grid[ni];
            const SampleMatrix prefix = n == nmax ? chain : chain.head(n);
            const Vector mean = mean_vector(prefix);
            const Matrix lambda = sample_covariance(prefix);
            for (std::size_t ei = 0; ei < cfg.estimators.size(); ++ei) {
                auto& cell = out[ei * cfg.n_grid.size() + ni];
                LrvEstimate est;
                try {
                    est = estimate_lrv(prefix, cfg.estimators[ei]);
                } catch (const NumericalError&) {
                    continue;
                }
                cell.sigma00 = est.sigma(0, 0);
                if (!is_pd(est.sigma))
                    continue;
                cell.ok = true;
                cell.covered = truth.mean.size() > 0 && region_contains(truth.mean, mean, est.sigma, n, cfg.alpha);
                cell.ess_ratio = ess(lambda, est.sigma, n) / static_cast<double>(n);
            }
        }
    });

    std::vector<StudyRow> rows;
    for (std::size_t ei = 0; ei < cfg.estimators.size(); ++ei) {
        for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
            StudyRow row;
            row.estimator = cfg.estimators[ei].label();
            row.n = cfg.n_grid[ni];
            row.replications = cfg.replications;
            std::vector<double> sig, ratio;
            Index covered = 0;
            for (const auto& rep : samples) {
                const auto& cell = rep[ei * cfg.n_grid.size() + ni];
                sig.push_back(cell.sigma00);
                if (!cell.ok) {
                    ++row.failures;
                    continue;
                }
                covered += cell.covered ? 1 : 0;
                ratio.push_back(cell.ess_ratio);
            }
            const auto reps = static_cast<double>(cfg.replications);
            if (truth.mean.size() > 0) {
                row.coverage = static_cast<double>(covered) / reps;
                row.coverage_se = std::sqrt(row.coverage * (1.0 - row.coverage) / reps);
            } else {
                row.coverage = row.coverage_se = std::numeric_limits<double>::quiet_NaN();
            }
            row.sigma_mean = detail::mean_of(sig);
            row.sigma_se = detail::sd_of(sig) / std::sqrt(reps);
            row.ess_ratio_mean = detail::mean_of(ratio);
            row.ess_ratio_sd = detail::sd_of(ratio);
            row.ess_ratio_se = ratio.empty() ? 0.0 : row.ess_ratio_sd / std::sqrt(static_cast<double>(ratio.size()));
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline std::vector<StudyRow> coverage_study(const ChainGenerator& generator, const StudyTruth& truth,
                                            const StudyConfig& cfg)
{
    return run_study(generator, truth, cfg);
}

inline std::vector<StudyRow> ess_study(const ChainGenerator& generator, const StudyTruth& truth, const StudyConfig& cfg)
{
    return run_study(generator, truth, cfg);
}

inline ChainGenerator ar1_generator(double phi)
{
    return [phi](std::uint64_t seed, Index n) { return ar1_generate({phi, n, seed, std::nullopt}); };
}

inline StudyTruth ar1_study_truth(double phi)
{
    const auto t = ar1_truth(phi);
    return {Vector::Zero(1), Matrix::Constant(1, 1, t.sigma_true), t.ess_ratio};
}

/// Original, zero, adaptive and over lugsail batch means at b = floor(sqrt(n)).
inline std::vector<EstimatorSpec> lugsail_bm_grid()
{
    std::vector<EstimatorSpec> out;
    for (auto cfg : {LugsailConfig::none(), LugsailConfig::zero(), LugsailConfig::adaptive(), LugsailConfig::over()}) {
        EstimatorSpec spec;
        spec.method = Method::bm;
        spec.lugsail = cfg;
        spec.rule = BatchRule::sqrt;
        out.push_back(spec);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Timing

struct TimingRow {
    std::string estimator;
    double median_seconds = 0.0;
    Index repetitions = 0;
};

inline std::vector<TimingRow> timing_bench(const SampleMatrix& s, const std::vector<EstimatorSpec>& estimators,
                                           Index repetitions)
{
    if (repetitions < 1)
        throw ArgumentError("timing needs at least one repetition");
    std::vector<TimingRow> rows;
    for (const auto& spec : estimators) {
        std::vector<double> times;
        volatile double warm = estimate_lrv(s, spec).sigma(0, 0);
        (void)warm;
        for (Index r = 0; r < repetitions; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            volatile double sink = estimate_lrv(s, spec).sigma(0, 0);
            (void)sink;
            const auto t1 = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double>(t1 - t0).count());
        }
        std::sort(times.begin(), times.end());
        const std::size_t mid = times.size() / 2;
        const double median = times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
        rows.push_back({spec.label(), median, repetitions});
    }
    return rows;
}

/// Median time for the named estimator; throws when it is absent.
inline double median_time(const std::vector<TimingRow>& rows, const std::string& label)
{
    for (const auto& r : rows)
        if (r.estimator == label)
            return r.median_seconds;
    throw ArgumentError("no timing row for '" + label + "'");
}

/// True when the listed estimators have non-decreasing median times.
inline bool timing_ordered(const std::vector<TimingRow>& rows, const std::vector<std::string>& labels)
{
    for (std::size_t i = 1; i < labels.size(); ++i)
        if (median_time(rows, labels[i - 1]) > median_time(rows, labels[i]))
            return false;
    return true;
}

/// Original/zero/over batch means and Bartlett spectral variance, plus the
/// initial sequence estimator, as compared in the timing table.
inline std::vector<EstimatorSpec> timing_grid(BatchRule rule = BatchRule::sqrt)
{
    std::vector<EstimatorSpec> out;
    for (Method m : {Method::bm, Method::sv}) {
        for (auto cfg : {LugsailConfig::none(), LugsailConfig::zero(), LugsailConfig::over()}) {
            EstimatorSpec spec;
            spec.method = m;
            spec.lugsail = cfg;
            spec.rule = rule;
            out.push_back(spec);
        }
    }
    EstimatorSpec init;
    init.method = Method::initseq;
    out.push_back(init);
    return out;
}

} // namespace mcse
