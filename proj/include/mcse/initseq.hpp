#pragma once

// Multivariate initial sequence estimator for reversible chains, and the
// variant that clips negative eigenvalues of each pair-sum increment.

#include <string>
#include <vector>

#include "mcse/core.hpp"

namespace mcse {

struct InitSeqResult {
    Matrix sigma;
    Index s_n = 0;                   // first index with a PD partial sum
    Index t_n = 0;                   // truncation index
    std::vector<double> logdet_path; // log|Sigma_{n,m}| for m = s_n..t_n
    bool adjusted = false;

    LrvEstimate estimate() const
    {
        LrvEstimate e;
        e.sigma = sigma;
        e.family = adjusted ? EstimatorFamily::adjusted_initial_sequence : EstimatorFamily::initial_sequence;
        e.bandwidth = t_n;
        e.psd = true;
        return e;
    }
};

namespace detail {

// Lazily extended sample lag covariances R(0..K).
class LagCache {
public:
    explicit LagCache(const SampleMatrix& s, Index initial = 32) : s_(s)
    {
        extend_to(std::min(s.n() - 1, initial));
    }

    const Matrix& operator[](Index k)
    {
        if (k > last())
            extend_to(std::min(s_.n() - 1, std::max(k, 2 * last() + 1)));
        return lags_[static_cast<std::size_t>(k)].matrix;
    }

private:
    Index last() const { return static_cast<Index>(lags_.size()) - 1; }

    void extend_to(Index kmax)
    {
        if (detail::prefer_fft(s_.n(), s_.p(), kmax - last())) {
            lags_ = lag_covariances_fft(s_, kmax);
            return;
        }
        if (yc_.size() == 0)
            yc_ = centered(s_);
        for (Index k = last() + 1; k <= kmax; ++k)
            lags_.push_back({k, lag_product(yc_, k)});
    }

    const SampleMatrix& s_;
    Matrix yc_;
    std::vector<LagCovariance> lags_;
};

inline Index initseq_max_index(Index n) { return n / 2 - 1; }

inline Matrix pair_sum(LagCache& lags, Index i)
{
    return symmetrize(lags[2 * i]) + symmetrize(lags[2 * i + 1]);
}

inline InitSeqResult initial_sequence_impl(const SampleMatrix& s, bool adjusted)
{
    if (s.n() < 4)
        throw ArgumentError("initial sequence estimator needs n >= 4");
    const Index mmax = initseq_max_index(s.n());
    LagCache lags(s);
    const Matrix r0 = symmetrize(lags[0]);

    Matrix partial = -r0;
    InitSeqResult out;
    out.adjusted = adjusted;
    Index m = 0;
    std::optional<double> logdet;
    for (; m <= mmax; ++m) {
        partial += 2.0 * pair_sum(lags, m);
        logdet = pd_logdet(partial);
        if (logdet)
            break;
    }
    if (!logdet)
        throw NumericalError("initial sequence: no positive definite partial sum for m <= " + std::to_string(mmax));

    out.s_n = m;
    out.t_n = m;
    out.logdet_path.push_back(*logdet);
    Matrix adj = partial;
    for (Index i = m + 1; i <= mmax; ++i) {
        Matrix inc = 2.0 * pair_sum(lags, i);
        Matrix next = partial + inc;
        auto next_logdet = pd_logdet(next);
        if (!next_logdet || !(*next_logdet > out.logdet_path.back()))
            break;
        partial = std::move(next);
        out.t_n = i;
        out.logdet_path.push_back(*next_logdet);
        if (adjusted)
            adj += clip_negative_eigenvalues(inc);
    }
    out.sigma = symmetrize(adjusted ? adj : partial);
    return out;
}

} // namespace detail

/// Pair sums A_i = sym(R(2i)) + sym(R(2i+1)) for i = 0..mmax.
inline std::vector<Matrix> adjacent_pair_sums(const SampleMatrix& s, Index mmax)
{
    if (mmax < 0 || 2 * mmax + 1 > s.n() - 1)
        throw ArgumentError("pair-sum index " + std::to_string(mmax) + " out of range");
    auto lags = lag_covariances(s, 2 * mmax + 1);
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(mmax + 1));
    for (Index i = 0; i <= mmax; ++i)
        out.push_back(symmetrize(lags[static_cast<std::size_t>(2 * i)].matrix) +
                      symmetrize(lags[static_cast<std::size_t>(2 * i + 1)].matrix));
    return out;
}

/// Sigma_{n,t_n}: partial sums -R(0) + 2 sum_{i<=m} A_i, truncated at the
/// last index of a strictly increasing run of determinants starting at the
/// first positive definite partial sum.
inline InitSeqResult initial_sequence(const SampleMatrix& s) { return detail::initial_sequence_impl(s, false); }

/// Same s_n/t_n search; increments past s_n have negative eigenvalues zeroed.
inline InitSeqResult adjusted_initial_sequence(const SampleMatrix& s) { return detail::initial_sequence_impl(s, true); }

} // namespace mcse
