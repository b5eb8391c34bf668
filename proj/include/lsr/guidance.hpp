#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lsr/grid.hpp"
#include "lsr/sampler.hpp"

namespace lsr {

/// Feature map plus its exact adjoint-Jacobian product. Both shipped
/// extractors are linear, so the vjp is exact by construction; tests validate
/// it against finite differences anyway.
struct FeatureExtractor {
    std::string name;
    std::function<LatentGrid(const LatentGrid&, int t)> extract;
    std::function<LatentGrid(const LatentGrid&, int t, const LatentGrid& cotangent)> vjp;
};

struct DistanceFn {
    std::string name;
    std::function<double(const LatentGrid&, const LatentGrid&)> value;
    std::function<LatentGrid(const LatentGrid&, const LatentGrid&)> grad_b;
};

/// feat(z) = z; at large timesteps the latent itself carries the layout's
/// low-frequency content, so raw latents serve as the layout feature.
FeatureExtractor identity_lfi_extractor();

/// Orthogonal low-pass projection (self-adjoint); cutoff in (0, 1].
FeatureExtractor lowpass_extractor(double cutoff_fraction);

/// D(a, b) = sum (a - b)^2, grad_b = 2 (b - a).
DistanceFn l2sq_distance();

struct GuidanceConfig {
    double gamma = 0.1;
    double guided_fraction = 0.1;
    std::string extractor = "identity"; // identity | lowpass
    double lowpass_cutoff = 0.2;
    std::string distance = "l2sq";
    // Absent -> per-step default 10 * sqrt(1 - ab_t/ab_prev) * sqrt(HWC),
    // filled in by the sampler hook.
    std::optional<double> max_update_norm;
    // Scale gamma by the target layout's inverse mean box area (smaller
    // boxes need more strength). Off by default; no formula in the source
    // practice, so the normalization is a quarter-canvas box at 1x.
    bool area_scaled_gamma = false;

    FeatureExtractor make_extractor() const;
    DistanceFn make_distance() const;
};

/// z_tilde = z_t - gamma * vjp(z_t, grad_b(feat(zbar_t), feat(z_t))), with the
/// update rescaled when its norm exceeds max_update_norm (must be set here;
/// the hook fills per-step defaults).
LatentGrid guidance_update(const LatentGrid& z_t, int t, const Trajectory& ref,
                           const GuidanceConfig& gc);

/// The first ceil(fraction * S) timesteps of the sampler's decreasing grid.
std::vector<int> guided_step_set(const SamplerConfig& cfg, const GuidanceConfig& gc, int T);

/// Hook wiring guidance_update into sample(); computes the per-step clamp
/// default when the config leaves max_update_norm unset.
GuidanceHook make_guidance_hook(const Trajectory& ref, const GuidanceConfig& gc,
                                const SamplerConfig& cfg, const NoiseSchedule& s);

} // namespace lsr
