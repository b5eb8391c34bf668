#include "lsr/guidance.hpp"

#include <cmath>
#include <stdexcept>

#include "lsr/errors.hpp"
#include "lsr/kernels.hpp"

namespace lsr {

FeatureExtractor identity_lfi_extractor() {
    FeatureExtractor fe;
    fe.name = "identity";
    fe.extract = [](const LatentGrid& z, int) { return z; };
    fe.vjp = [](const LatentGrid&, int, const LatentGrid& ct) { return ct; };
    return fe;
}

FeatureExtractor lowpass_extractor(double cutoff_fraction) {
    if (!(cutoff_fraction > 0.0 && cutoff_fraction <= 1.0))
        throw std::invalid_argument("lowpass_extractor: cutoff must be in (0,1]");
    FeatureExtractor fe;
    fe.name = "lowpass";
    fe.extract = [cutoff_fraction](const LatentGrid& z, int) {
        return kernels::dft_lowpass(z, cutoff_fraction);
    };
    // the projection is self-adjoint, so the vjp is the map itself
    fe.vjp = [cutoff_fraction](const LatentGrid&, int, const LatentGrid& ct) {
        return kernels::dft_lowpass(ct, cutoff_fraction);
    };
    return fe;
}

DistanceFn l2sq_distance() {
    DistanceFn d;
    d.name = "l2sq";
    d.value = [](const LatentGrid& a, const LatentGrid& b) {
        require_same_shape(a, b, "l2sq");
        return kernels::sum_sq_diff(a.data, b.data);
    };
    d.grad_b = [](const LatentGrid& a, const LatentGrid& b) {
        require_same_shape(a, b, "l2sq grad");
        LatentGrid g(a.channels, a.height, a.width);
        kernels::axpby(2.0, b.data, -2.0, a.data, g.data);
        return g;
    };
    return d;
}

FeatureExtractor GuidanceConfig::make_extractor() const {
    if (extractor == "identity") return identity_lfi_extractor();
    if (extractor == "lowpass") return lowpass_extractor(lowpass_cutoff);
    throw std::invalid_argument("unknown extractor: " + extractor);
}

DistanceFn GuidanceConfig::make_distance() const {
    if (distance == "l2sq") return l2sq_distance();
    throw std::invalid_argument("unknown distance: " + distance);
}

LatentGrid guidance_update(const LatentGrid& z_t, int t, const Trajectory& ref,
                           const GuidanceConfig& gc) {
    if (gc.gamma == 0.0) return z_t;
    const LatentGrid& z_bar = ref.at(t); // throws ReferenceGapError
    auto fe = gc.make_extractor();
    auto df = gc.make_distance();

    LatentGrid f = fe.extract(z_t, t);
    LatentGrid f_bar = fe.extract(z_bar, t);
    LatentGrid grad = fe.vjp(z_t, t, df.grad_b(f_bar, f));

    LatentGrid update(z_t.channels, z_t.height, z_t.width);
    kernels::axpby(gc.gamma, grad.data, 0.0, grad.data, update.data);

    if (gc.max_update_norm) {
        double cap = *gc.max_update_norm;
        if (cap <= 0.0) throw std::invalid_argument("max_update_norm must be positive");
        double n = grid_norm(update);
        if (n > cap) {
            double scale = cap / n;
            for (double& v : update.data) v *= scale;
        }
    }

    LatentGrid out(z_t.channels, z_t.height, z_t.width);
    kernels::axpby(1.0, z_t.data, -1.0, update.data, out.data);
    return out;
}

std::vector<int> guided_step_set(const SamplerConfig& cfg, const GuidanceConfig& gc, int T) {
    auto grid = sample_time_grid(T, cfg.num_sample_steps);
    int n = static_cast<int>(std::ceil(gc.guided_fraction * cfg.num_sample_steps));
    n = std::min(n, cfg.num_sample_steps);
    std::vector<int> out;
    out.reserve(static_cast<size_t>(n));
    // the first n steps of the sampling loop, i.e. the n largest grid times
    for (int i = 0; i < n; ++i)
        out.push_back(grid[grid.size() - 1 - static_cast<size_t>(i)]);
    return out;
}

GuidanceHook make_guidance_hook(const Trajectory& ref, const GuidanceConfig& gc,
                                const SamplerConfig& cfg, const NoiseSchedule& s) {
    GuidanceHook hook;
    for (int t : guided_step_set(cfg, gc, s.num_steps))
        hook.active_timesteps.insert(t);
    GuidanceConfig cfg_copy = gc;
    const Trajectory* ref_ptr = &ref;
    NoiseSchedule sched = s;
    hook.apply = [cfg_copy, ref_ptr, sched](const LatentGrid& z, int t, int t_prev) {
        GuidanceConfig eff = cfg_copy;
        if (!eff.max_update_norm) {
            // default clamp: 10x the per-step noise magnitude
            double ratio = sched.ab(t) / sched.ab(t_prev);
            double mag = std::sqrt(std::max(0.0, 1.0 - ratio)) *
                         std::sqrt(static_cast<double>(z.size()));
            eff.max_update_norm = 10.0 * mag;
        }
        return guidance_update(z, t, *ref_ptr, eff);
    };
    return hook;
}

} // namespace lsr
