#pragma once

// Chain data model, summary statistics and sample lag covariances.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

namespace mcse {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Failure categories. The CLI maps them onto distinct exit codes.

/// Malformed or unusable input data.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameter outside its valid range or an invalid combination of options.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A matrix that must be positive (semi)definite is not, or a search failed.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// n x p matrix of chain outputs; rows are iterations, columns components.
class SampleMatrix {
public:
    explicit SampleMatrix(Matrix values) : values_(std::move(values))
    {
        if (values_.rows() < 2)
            throw InputError("sample matrix needs at least 2 rows, got " + std::to_string(values_.rows()));
        if (values_.cols() < 1)
            throw InputError("sample matrix needs at least 1 column");
        if (!values_.allFinite())
            throw InputError("sample matrix contains non-finite entries");
    }

    static SampleMatrix from_series(std::span<const double> v)
    {
        Matrix m(static_cast<Index>(v.size()), 1);
        for (std::size_t i = 0; i < v.size(); ++i)
            m(static_cast<Index>(i), 0) = v[i];
        return SampleMatrix(std::move(m));
    }

    const Matrix& values() const noexcept { return values_; }
    Index n() const noexcept { return values_.rows(); }
    Index p() const noexcept { return values_.cols(); }

    SampleMatrix head(Index rows) const { return SampleMatrix(values_.topRows(rows)); }

private:
    Matrix values_;
};

/// Sample lag-k covariance; for negative lags use the transpose of lag |k|.
struct LagCovariance {
    Index k = 0;
    Matrix matrix;
};

enum class EstimatorFamily { batch_means, overlapping_batch_means, spectral_variance, initial_sequence, adjusted_initial_sequence };

inline const char* to_string(EstimatorFamily f)
{
    switch (f) {
    case EstimatorFamily::batch_means: return "bm";
    case EstimatorFamily::overlapping_batch_means: return "obm";
    case EstimatorFamily::spectral_variance: return "sv";
    case EstimatorFamily::initial_sequence: return "initseq";
    case EstimatorFamily::adjusted_initial_sequence: return "initseq-adjusted";
    }
    return "unknown";
}

/// Estimated long-run covariance together with how it was obtained.
struct LrvEstimate {
    Matrix sigma;
    EstimatorFamily family = EstimatorFamily::batch_means;
    Index bandwidth = 0;        // batch size or truncation point; t_n for initial sequence
    std::string window;         // spectral only
    std::string lugsail = "none";
    double lugsail_r = 1.0;
    double lugsail_c = 0.0;
    bool psd = true;
};

// ---------------------------------------------------------------------------
// Linear algebra helpers

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Symmetric PSD test: smallest eigenvalue >= -rel_tol * largest magnitude.
inline bool is_psd(const Matrix& m, double rel_tol = 1e-12)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    const Vector& ev = es.eigenvalues();
    double scale = ev.cwiseAbs().maxCoeff();
    if (scale == 0.0)
        return true;
    return ev.minCoeff() >= -rel_tol * scale;
}

/// Log-determinant of a symmetric matrix when it is positive definite.
/// PD means the Cholesky factorization succeeds with every squared pivot
/// above rel_pivot_tol times the largest diagonal entry.
inline std::optional<double> pd_logdet(const Matrix& m, double rel_pivot_tol = 1e-10)
{
    double dmax = m.diagonal().maxCoeff();
    if (!(dmax > 0.0))
        return std::nullopt;
    Eigen::LLT<Matrix> llt(symmetrize(m));
    if (llt.info() != Eigen::Success)
        return std::nullopt;
    const Matrix& l = llt.matrixLLT();
    double logdet = 0.0;
    for (Index i = 0; i < m.rows(); ++i) {
        double piv = l(i, i) * l(i, i);
        if (!(piv > rel_pivot_tol * dmax))
            return std::nullopt;
        logdet += std::log(piv);
    }
    return logdet;
}

inline bool is_pd(const Matrix& m) { return pd_logdet(m).has_value(); }

/// Keeps the non-negative part of the spectrum of a symmetric matrix.
inline Matrix clip_negative_eigenvalues(const Matrix& m)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
    Vector ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// ---------------------------------------------------------------------------
// Summary statistics

inline Vector mean_vector(const SampleMatrix& s) { return s.values().colwise().mean().transpose(); }

inline Matrix centered(const SampleMatrix& s)
{
    return s.values().rowwise() - s.values().colwise().mean();
}

/// Unbiased sample covariance (divisor n - 1).
inline Matrix sample_covariance(const SampleMatrix& s)
{
    Matrix yc = centered(s);
    Matrix cov = (yc.transpose() * yc) / static_cast<double>(s.n() - 1);
    return symmetrize(cov);
}

namespace detail {

inline void check_lag(const SampleMatrix& s, Index k)
{
    if (k < 0 || k > s.n() - 1)
        throw ArgumentError("lag " + std::to_string(k) + " out of range [0, " + std::to_string(s.n() - 1) + "]");
}

// (1/n) sum_{i < n-k} yc_i yc_{i+k}^T on an already centered matrix.
inline Matrix lag_product(const Matrix& yc, Index k)
{
    const Index n = yc.rows();
    return (yc.topRows(n - k).transpose() * yc.bottomRows(n - k)) / static_cast<double>(n);
}

inline Index fft_length(Index n)
{
    Index len = 1;
    while (len < 2 * n)
        len <<= 1;
    return len;
}

// Spectra of the zero-padded centered columns.
inline std::vector<std::vector<std::complex<double>>> column_spectra(const Matrix& yc, Index len,
                                                                     Eigen::FFT<double>& fft)
{
    std::vector<std::vector<std::complex<double>>> spectra(static_cast<std::size_t>(yc.cols()));
    std::vector<double> buf(static_cast<std::size_t>(len));
    for (Index j = 0; j < yc.cols(); ++j) {
        std::fill(buf.begin(), buf.end(), 0.0);
        for (Index i = 0; i < yc.rows(); ++i)
            buf[static_cast<std::size_t>(i)] = yc(i, j);
        fft.fwd(spectra[static_cast<std::size_t>(j)], buf);
    }
    return spectra;
}

// Calls visit(a, b, xc) for every a <= b, where xc[k] = sum_i y_a[i] y_b[i+k]
// and xc[len-k] = sum_i y_b[i] y_a[i+k] (unnormalized linear cross-correlation).
template <typename Visitor>
void for_each_cross_correlation(const Matrix& yc, Visitor&& visit)
{
    const Index len = fft_length(yc.rows());
    Eigen::FFT<double> fft;
    auto spectra = column_spectra(yc, len, fft);
    std::vector<std::complex<double>> prod(static_cast<std::size_t>(len));
    std::vector<double> xc;
    for (Index a = 0; a < yc.cols(); ++a) {
        const auto& fa = spectra[static_cast<std::size_t>(a)];
        for (Index b = a; b < yc.cols(); ++b) {
            const auto& fb = spectra[static_cast<std::size_t>(b)];
            for (std::size_t f = 0; f < prod.size(); ++f)
                prod[f] = std::conj(fa[f]) * fb[f];
            fft.inv(xc, prod);
            visit(a, b, std::span<const double>(xc));
        }
    }
}

} // namespace detail

/// R(k) = (1/n) sum_{i=1}^{n-k} (Y_i - mean)(Y_{i+k} - mean)^T.
inline LagCovariance lag_covariance(const SampleMatrix& s, Index k)
{
    detail::check_lag(s, k);
    return {k, detail::lag_product(centered(s), k)};
}

/// R(0..kmax) by one-at-a-time products; O(n p^2 kmax).
inline std::vector<LagCovariance> lag_covariances_direct(const SampleMatrix& s, Index kmax)
{
    detail::check_lag(s, kmax);
    Matrix yc = centered(s);
    std::vector<LagCovariance> out;
    out.reserve(static_cast<std::size_t>(kmax + 1));
    for (Index k = 0; k <= kmax; ++k)
        out.push_back({k, detail::lag_product(yc, k)});
    return out;
}

/// R(0..kmax) from frequency-domain cross-correlation of the centered,
/// zero-padded columns (padding to the smallest power of two >= 2n).
inline std::vector<LagCovariance> lag_covariances_fft(const SampleMatrix& s, Index kmax)
{
    detail::check_lag(s, kmax);
    const Index n = s.n();
    const Index p = s.p();
    std::vector<LagCovariance> out(static_cast<std::size_t>(kmax + 1));
    for (Index k = 0; k <= kmax; ++k)
        out[static_cast<std::size_t>(k)] = {k, Matrix::Zero(p, p)};
    const double inv_n = 1.0 / static_cast<double>(n);
    detail::for_each_cross_correlation(centered(s), [&](Index a, Index b, std::span<const double> xc) {
        const std::size_t len = xc.size();
        for (Index k = 0; k <= kmax; ++k) {
            auto& m = out[static_cast<std::size_t>(k)].matrix;
            m(a, b) = xc[static_cast<std::size_t>(k)] * inv_n;
            if (a != b)
                m(b, a) = (k == 0 ? xc[0] : xc[len - static_cast<std::size_t>(k)]) * inv_n;
        }
    });
    return out;
}

enum class LagMethod { automatic, direct, fft };

namespace detail {

// Rough flop model: one GEMM per lag versus p + p(p+1)/2 transforms.
inline bool prefer_fft(Index n, Index p, Index lags)
{
    const double len = static_cast<double>(fft_length(n));
    const double direct = 2.0 * static_cast<double>(lags) * static_cast<double>(n) * static_cast<double>(p * p);
    const double transforms = static_cast<double>(p + p * (p + 1) / 2);
    const double fft = 12.0 * transforms * len * std::log2(len);
    return fft < direct;
}

} // namespace detail

/// R(0..kmax), picking the cheaper route unless one is forced.
inline std::vector<LagCovariance> lag_covariances(const SampleMatrix& s, Index kmax,
                                                  LagMethod method = LagMethod::automatic)
{
    if (method == LagMethod::automatic)
        method = detail::prefer_fft(s.n(), s.p(), kmax + 1) ? LagMethod::fft : LagMethod::direct;
    return method == LagMethod::fft ? lag_covariances_fft(s, kmax) : lag_covariances_direct(s, kmax);
}

} // namespace mcse
