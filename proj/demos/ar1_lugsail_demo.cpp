// Compares ordinary and lugsail batch means on a strongly correlated AR(1)
// chain against the exact long-run variance.

#include <cstdio>

#include "mcse/mcse.hpp"

int main()
{
    using namespace mcse;

    const double phi = 0.95;
    const Index n = 3600; // b = 60, divisible by 2 and 3
    const SampleMatrix chain = ar1_generate({phi, n, 2024, std::nullopt});
    const auto truth = ar1_truth(phi);
    const Index b = default_batch_size(n, BatchRule::sqrt, 1.0);

    std::printf("AR(1), phi = %.2f, n = %ld, b = %ld, true sigma^2 = %.2f\n", phi, static_cast<long>(n),
                static_cast<long>(b), truth.sigma_true);
    std::printf("%-10s %12s %14s\n", "lugsail", "estimate", "exact bias");
    for (auto cfg : {LugsailConfig::none(), LugsailConfig::zero(), LugsailConfig::adaptive(), LugsailConfig::over()}) {
        const auto est = lugsail_batch_means(chain, b, cfg);
        const double bias = cfg.active() ? lugsail_exact_bias_ar1(phi, n, b, cfg.r, cfg.weight(n, b))
                                         : bm_exact_bias_ar1(phi, n, b);
        std::printf("%-10s %12.3f %14.3f\n", to_string(cfg.regime), est.sigma(0, 0), bias);
    }

    const auto sv = spectral_variance(chain, LagWindow(WindowKind::bartlett), b);
    const auto seq = initial_sequence(chain);
    std::printf("bartlett sv  %10.3f\n", sv.sigma(0, 0));
    std::printf("initseq      %10.3f  (t_n = %ld)\n", seq.sigma(0, 0), static_cast<long>(seq.t_n));
    return 0;
}
