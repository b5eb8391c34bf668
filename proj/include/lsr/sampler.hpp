#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_set>
#include <vector>

#include "lsr/denoiser.hpp"
#include "lsr/grid.hpp"
#include "lsr/rng.hpp"
#include "lsr/schedule.hpp"

namespace lsr {

enum class SamplerKind { ddpm, ddim };

struct SamplerConfig {
    SamplerKind kind = SamplerKind::ddim;
    int num_sample_steps = 50; // S <= T
    double eta = 0.0;          // ddim stochasticity in [0,1]
    uint64_t seed = 0;
};

/// Recorded latents aligned to a decreasing timestep sequence.
struct Trajectory {
    std::vector<int> timesteps;      // strictly decreasing
    std::vector<LatentGrid> latents; // same length

    bool has(int t) const;
    const LatentGrid& at(int t) const; // throws ReferenceGapError if absent
    size_t size() const { return timesteps.size(); }
};

/// Uniform-stride grid tau_0 = 0 < tau_1 < ... < tau_S = T (increasing order).
std::vector<int> sample_time_grid(int T, int S);

/// Guidance hook applied to z_t before the denoiser evaluation at guided
/// timesteps. `apply` receives (z_t, t, t_prev) so per-step defaults (the
/// update-norm clamp) can be derived.
struct GuidanceHook {
    std::unordered_set<int> active_timesteps;
    std::function<LatentGrid(const LatentGrid&, int t, int t_prev)> apply;
};

/// One deterministic-family DDIM update from t down to t_prev.
/// sigma = eta * sqrt((1-ab_prev)/(1-ab_t)) * sqrt(1 - ab_t/ab_prev);
/// pass rng = nullptr to suppress the noise term (eta = 0 never draws).
LatentGrid ddim_step(const LatentGrid& z_t, int t, int t_prev, const LatentGrid& eps_hat,
                     const NoiseSchedule& s, double eta, Rng* rng);

/// DDPM ancestral update: ddim_step with eta fixed to 1 (posterior variance).
LatentGrid ddpm_step(const LatentGrid& z_t, int t, int t_prev, const LatentGrid& eps_hat,
                     const NoiseSchedule& s, Rng* rng);

/// Full reverse loop from z_T ~ N(0, I) (seeded by cfg.seed); records the
/// state on arrival at every grid timestep, z_T first.
Trajectory sample(const Denoiser& den, const Condition& cond, const SamplerConfig& cfg,
                  const NoiseSchedule& s, const GuidanceHook* guidance = nullptr);

/// Deterministic DDIM inversion: runs the update in reverse (t increasing)
/// from z0 at t = 0 up to t_stop on cfg's time grid, recording every visited
/// timestep. Result timesteps are stored in decreasing order. Requires eta = 0.
Trajectory ddim_invert(const LatentGrid& z0, const Denoiser& den, const Condition& cond,
                       const SamplerConfig& cfg, const NoiseSchedule& s, int t_stop);

/// Forward-noising reference: z_bar_t = forward_noise(z0, t, eps_t) with an
/// independent eps per entry, or one shared eps when shared_eps is set.
Trajectory noise_reference(const LatentGrid& z0, const std::vector<int>& t_list,
                           const NoiseSchedule& s, Rng& rng, bool shared_eps = false);

} // namespace lsr
