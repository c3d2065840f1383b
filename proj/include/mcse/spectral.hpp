#pragma once

// Lag windows and the multivariate spectral variance estimator
//   Sigma = sum_{|s| < n} w(s / b) R(s),  R(-s) = R(s)^T.

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "mcse/batch.hpp"
#include "mcse/core.hpp"

namespace mcse {

enum class WindowKind { bartlett, bartlett_flattop, tukey_hanning, quadratic_spectral };

inline const char* to_string(WindowKind k)
{
    switch (k) {
    case WindowKind::bartlett: return "bartlett";
    case WindowKind::bartlett_flattop: return "bartlett-flattop";
    case WindowKind::tukey_hanning: return "tukey-hanning";
    case WindowKind::quadratic_spectral: return "quadratic-spectral";
    }
    return "unknown";
}

inline WindowKind parse_window_kind(const std::string& s)
{
    if (s == "bartlett") return WindowKind::bartlett;
    if (s == "bartlett-flattop" || s == "flattop") return WindowKind::bartlett_flattop;
    if (s == "tukey-hanning" || s == "tukey") return WindowKind::tukey_hanning;
    if (s == "quadratic-spectral" || s == "qs") return WindowKind::quadratic_spectral;
    throw ArgumentError("unknown lag window '" + s + "'");
}

/// Smoothness at the origin: q is the order, k_q = lim (1 - w(x)) / |x|^q.
struct WindowSmoothness {
    int q = 1;
    double k_q = 1.0;
};

/// A symmetric lag window with w(0) = 1, optionally lugsail-transformed:
///   w_L(x) = w(x) / (1 - c) - c / (1 - c) * w(r x).
class LagWindow {
public:
    constexpr LagWindow(WindowKind kind = WindowKind::bartlett) : kind_(kind) {}

    static LagWindow lugsail(const LagWindow& base, double r, double c)
    {
        if (!(r >= 1.0))
            throw ArgumentError("lugsail r must be >= 1");
        if (!(c >= 0.0 && c < 1.0))
            throw ArgumentError("lugsail c must lie in [0, 1)");
        if (base.is_lugsail())
            throw ArgumentError("nested lugsail windows are not supported");
        LagWindow w(base.kind_);
        w.r_ = r;
        w.c_ = c;
        return w;
    }

    WindowKind kind() const { return kind_; }
    bool is_lugsail() const { return c_ != 0.0 || r_ != 1.0; }
    double r() const { return r_; }
    double c() const { return c_; }

    double operator()(double x) const
    {
        if (c_ == 0.0)
            return base_value(kind_, x);
        return (base_value(kind_, x) - c_ * base_value(kind_, r_ * x)) / (1.0 - c_);
    }

    /// Largest |x| with a non-zero weight; infinite for quadratic spectral.
    double support_bound() const
    {
        if (kind_ == WindowKind::quadratic_spectral)
            return std::numeric_limits<double>::infinity();
        return 1.0;
    }

    WindowSmoothness smoothness() const
    {
        WindowSmoothness s = base_smoothness(kind_);
        if (c_ != 0.0)
            s.k_q *= (1.0 - std::pow(r_, s.q) * c_) / (1.0 - c_);
        return s;
    }

    std::string name() const
    {
        if (!is_lugsail())
            return to_string(kind_);
        std::ostringstream os;
        os << "lugsail(" << to_string(kind_) << ",r=" << r_ << ",c=" << c_ << ")";
        return os.str();
    }

    static double base_value(WindowKind kind, double x)
    {
        const double ax = std::abs(x);
        switch (kind) {
        case WindowKind::bartlett:
            return ax <= 1.0 ? 1.0 - ax : 0.0;
        case WindowKind::bartlett_flattop:
            if (ax <= 0.5)
                return 1.0;
            return ax <= 1.0 ? 2.0 * (1.0 - ax) : 0.0;
        case WindowKind::tukey_hanning:
            return ax <= 1.0 ? 0.5 + 0.5 * std::cos(std::numbers::pi * ax) : 0.0;
        case WindowKind::quadratic_spectral: {
            const double z = 6.0 * std::numbers::pi * ax / 5.0;
            if (z < 0.5) {
                // 3 (sin(z)/z - cos(z)) / z^2 = sum_{k>=1} (-1)^{k+1} 6k z^{2k-2} / (2k+1)!
                const double z2 = z * z;
                double term = 1.0, sum = 1.0;
                for (int k = 2; k <= 8; ++k) {
                    term *= -z2 * static_cast<double>(k) / (static_cast<double>(k - 1) * (2.0 * k) * (2.0 * k + 1.0));
                    sum += term;
                }
                return sum;
            }
            const double pi2 = std::numbers::pi * std::numbers::pi;
            return 25.0 / (12.0 * pi2 * ax * ax) * (std::sin(z) / z - std::cos(z));
        }
        }
        return 0.0;
    }

private:
    static WindowSmoothness base_smoothness(WindowKind kind)
    {
        const double pi2 = std::numbers::pi * std::numbers::pi;
        switch (kind) {
        case WindowKind::bartlett: return {1, 1.0};
        case WindowKind::bartlett_flattop: return {1, 0.0};
        case WindowKind::tukey_hanning: return {2, pi2 / 4.0};
        case WindowKind::quadratic_spectral: return {2, 18.0 * pi2 / 125.0};
        }
        return {};
    }

    WindowKind kind_;
    double r_ = 1.0;
    double c_ = 0.0;
};

inline double window_value(const LagWindow& w, double x) { return w(x); }

inline LagWindow lugsail_window(const LagWindow& base, double r, double c) { return LagWindow::lugsail(base, r, c); }

inline WindowSmoothness window_smoothness(const LagWindow& w) { return w.smoothness(); }

/// Largest lag with a possibly non-zero weight at bandwidth b.
inline Index spectral_max_lag(Index n, const LagWindow& w, double b)
{
    const double bound = w.support_bound();
    if (!std::isfinite(bound))
        return n - 1;
    const double lag = std::ceil(bound * b);
    return std::min<Index>(n - 1, static_cast<Index>(lag));
}

namespace detail {

// sum_{|s| <= lmax} w(s) R(s) with one GEMM per lag.
inline Matrix weighted_lag_sum_direct(const SampleMatrix& s, const std::vector<double>& weights)
{
    const Matrix yc = centered(s);
    Matrix sigma = lag_product(yc, 0) * weights[0];
    for (std::size_t k = 1; k < weights.size(); ++k) {
        if (weights[k] == 0.0)
            continue;
        Matrix r = lag_product(yc, static_cast<Index>(k));
        sigma += weights[k] * (r + r.transpose());
    }
    return sigma;
}

// Same sum in the frequency domain: with G = conj(F_a) F_b the cross
// spectrum and U the transform of the symmetric weight sequence,
// sum_k u_k xc_ab[k] = (1/N) sum_f Re(G_f) U_f.
inline Matrix weighted_lag_sum_fft(const SampleMatrix& s, const std::vector<double>& weights)
{
    const Index n = s.n();
    const Index p = s.p();
    const Index len = fft_length(n);
    Eigen::FFT<double> fft;
    const auto spectra = column_spectra(centered(s), len, fft);

    std::vector<double> u(static_cast<std::size_t>(len), 0.0);
    u[0] = weights[0];
    for (std::size_t k = 1; k < weights.size(); ++k) {
        u[k] = weights[k];
        u[static_cast<std::size_t>(len) - k] = weights[k];
    }
    std::vector<std::complex<double>> uf;
    fft.fwd(uf, u);

    // Re(G_f) and U_f are even in f, so only f = 0..N/2 is visited.
    const std::size_t half = static_cast<std::size_t>(len) / 2;
    std::vector<double> wf(half + 1);
    for (std::size_t f = 0; f <= half; ++f)
        wf[f] = uf[f].real() * ((f == 0 || f == half) ? 1.0 : 2.0);
    const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(len));
    Matrix sigma(p, p);
    for (Index a = 0; a < p; ++a) {
        const auto& fa = spectra[static_cast<std::size_t>(a)];
        for (Index b = a; b < p; ++b) {
            const auto& fb = spectra[static_cast<std::size_t>(b)];
            double acc = 0.0;
            for (std::size_t f = 0; f <= half; ++f)
                acc += (fa[f].real() * fb[f].real() + fa[f].imag() * fb[f].imag()) * wf[f];
            sigma(a, b) = acc * scale;
            sigma(b, a) = acc * scale;
        }
    }
    return sigma;
}

inline bool prefer_fft_weighted_sum(Index n, Index p, Index lags)
{
    const double len = static_cast<double>(fft_length(n));
    const double direct = 2.0 * static_cast<double>(lags) * static_cast<double>(n) * static_cast<double>(p * p);
    const double fft = 12.0 * static_cast<double>(p + 1) * len * std::log2(len) + 2.0 * static_cast<double>(p * p) * len;
    return fft < direct;
}

// Spectral variance at a real-valued bandwidth.
inline Matrix spectral_sum(const SampleMatrix& s, const LagWindow& w, double bandwidth, LagMethod method)
{
    const Index lmax = spectral_max_lag(s.n(), w, bandwidth);
    std::vector<double> weights(static_cast<std::size_t>(lmax + 1));
    for (Index k = 0; k <= lmax; ++k)
        weights[static_cast<std::size_t>(k)] = w(static_cast<double>(k) / bandwidth);
    if (method == LagMethod::automatic)
        method = prefer_fft_weighted_sum(s.n(), s.p(), lmax + 1) ? LagMethod::fft : LagMethod::direct;
    Matrix sigma = method == LagMethod::fft ? weighted_lag_sum_fft(s, weights) : weighted_lag_sum_direct(s, weights);
    return symmetrize(sigma);
}

inline void check_truncation(const SampleMatrix& s, Index b)
{
    if (b < 1 || b > s.n() - 1)
        throw ArgumentError("truncation point must lie in [1, n-1]");
}

} // namespace detail

inline LrvEstimate spectral_variance(const SampleMatrix& s, const LagWindow& w, Index b,
                                     LagMethod method = LagMethod::automatic)
{
    detail::check_truncation(s, b);
    LrvEstimate out;
    out.sigma = detail::spectral_sum(s, w, static_cast<double>(b), method);
    out.family = EstimatorFamily::spectral_variance;
    out.bandwidth = b;
    out.window = w.name();
    if (w.is_lugsail()) {
        out.lugsail = "custom";
        out.lugsail_r = w.r();
        out.lugsail_c = w.c();
    }
    out.psd = is_psd(out.sigma);
    return out;
}

/// Lugsail spectral variance as (1/(1-c)) SV_b - (c/(1-c)) SV_{b/r}, with
/// the second bandwidth kept real-valued. Since w(r s / b) = w(s / (b/r)),
/// this equals spectral_variance with lugsail_window(base, r, c) at b for
/// every b, not only when r divides b.
inline LrvEstimate lugsail_spectral_variance(const SampleMatrix& s, const LagWindow& base, Index b, double r, double c,
                                             LagMethod method = LagMethod::automatic)
{
    detail::check_truncation(s, b);
    const LagWindow lw = lugsail_window(base, r, c); // validates r and c
    if (std::floor(static_cast<double>(b) / r) < 1.0)
        throw ArgumentError("lugsail spectral variance needs floor(b/r) >= 1");
    const double bd = static_cast<double>(b);
    Matrix big = detail::spectral_sum(s, base, bd, method);
    LrvEstimate out;
    if (c == 0.0) {
        out.sigma = big;
    } else {
        Matrix small = detail::spectral_sum(s, base, bd / r, method);
        out.sigma = symmetrize(big / (1.0 - c) - (c / (1.0 - c)) * small);
    }
    out.family = EstimatorFamily::spectral_variance;
    out.bandwidth = b;
    out.window = lw.name();
    out.lugsail = "custom";
    out.lugsail_r = r;
    out.lugsail_c = c;
    out.psd = is_psd(out.sigma);
    return out;
}

inline LrvEstimate lugsail_spectral_variance(const SampleMatrix& s, const LagWindow& base, Index b,
                                             const LugsailConfig& cfg, LagMethod method = LagMethod::automatic)
{
    if (!cfg.active())
        return spectral_variance(s, base, b, method);
    const double c = cfg.weight(s.n(), b);
    LrvEstimate out = lugsail_spectral_variance(s, base, b, cfg.r, c, method);
    out.lugsail = to_string(cfg.regime);
    return out;
}

} // namespace mcse
