#include "lsr/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lsr/errors.hpp"
#include "lsr/kernels.hpp"

namespace lsr {

bool Trajectory::has(int t) const {
    return std::find(timesteps.begin(), timesteps.end(), t) != timesteps.end();
}

const LatentGrid& Trajectory::at(int t) const {
    for (size_t i = 0; i < timesteps.size(); ++i)
        if (timesteps[i] == t) return latents[i];
    throw ReferenceGapError("trajectory has no entry for timestep " + std::to_string(t));
}

std::vector<int> sample_time_grid(int T, int S) {
    if (S < 1 || S > T)
        throw std::invalid_argument("sample_time_grid: need 1 <= S <= T");
    std::vector<int> grid(static_cast<size_t>(S) + 1);
    for (int i = 0; i <= S; ++i)
        grid[static_cast<size_t>(i)] = static_cast<int>(std::llround(double(i) * T / S));
    for (int i = 1; i <= S; ++i)
        if (grid[i] <= grid[i - 1])
            throw std::invalid_argument("sample_time_grid: stride collapsed");
    return grid;
}

LatentGrid ddim_step(const LatentGrid& z_t, int t, int t_prev, const LatentGrid& eps_hat,
                     const NoiseSchedule& s, double eta, Rng* rng) {
    if (t <= t_prev || t_prev < 0)
        throw std::invalid_argument("ddim_step: need t > t_prev >= 0");
    s.check_t(t);
    require_same_shape(z_t, eps_hat, "ddim_step");
    double ab = s.ab(t);
    double abp = s.ab(t_prev);

    double sigma = 0.0;
    if (eta > 0.0) {
        double ratio = (1.0 - abp) / (1.0 - ab);
        sigma = eta * std::sqrt(ratio) * std::sqrt(std::max(0.0, 1.0 - ab / abp));
    }

    // x0_hat = (z - sqrt(1-ab) eps) / sqrt(ab); z' = sqrt(abp) x0 + dir + noise
    double inv_sqrt_ab = 1.0 / std::sqrt(ab);
    double c_z = std::sqrt(abp) * inv_sqrt_ab;
    double dir = std::sqrt(std::max(0.0, 1.0 - abp - sigma * sigma));
    double c_e = dir - c_z * std::sqrt(1.0 - ab);

    LatentGrid out(z_t.channels, z_t.height, z_t.width);
    kernels::axpby(c_z, z_t.data, c_e, eps_hat.data, out.data);
    if (sigma > 0.0 && rng != nullptr)
        for (double& v : out.data) v += sigma * rng->normal();
    return out;
}

LatentGrid ddpm_step(const LatentGrid& z_t, int t, int t_prev, const LatentGrid& eps_hat,
                     const NoiseSchedule& s, Rng* rng) {
    return ddim_step(z_t, t, t_prev, eps_hat, s, 1.0, rng);
}

Trajectory sample(const Denoiser& den, const Condition& cond, const SamplerConfig& cfg,
                  const NoiseSchedule& s, const GuidanceHook* guidance) {
    auto grid = sample_time_grid(s.num_steps, cfg.num_sample_steps);
    double eta = (cfg.kind == SamplerKind::ddpm) ? 1.0 : cfg.eta;

    Rng rng(cfg.seed);
    LatentGrid z = gaussian_grid(den.channels(), den.height(), den.width(), rng);

    Trajectory traj;
    traj.timesteps.reserve(grid.size());
    traj.latents.reserve(grid.size());
    traj.timesteps.push_back(grid.back());
    traj.latents.push_back(z);

    for (int i = static_cast<int>(grid.size()) - 1; i >= 1; --i) {
        int t = grid[static_cast<size_t>(i)];
        int t_prev = grid[static_cast<size_t>(i) - 1];
        if (guidance && guidance->active_timesteps.count(t))
            z = guidance->apply(z, t, t_prev);
        LatentGrid eps = den.predict(z, t, cond);
        z = ddim_step(z, t, t_prev, eps, s, eta, &rng);
        traj.timesteps.push_back(t_prev);
        traj.latents.push_back(z);
    }
    return traj;
}

Trajectory ddim_invert(const LatentGrid& z0, const Denoiser& den, const Condition& cond,
                       const SamplerConfig& cfg, const NoiseSchedule& s, int t_stop) {
    if (cfg.eta != 0.0)
        throw std::invalid_argument("ddim_invert: defined only for eta = 0");
    if (t_stop > s.num_steps)
        throw std::invalid_argument("ddim_invert: t_stop exceeds T");
    auto grid = sample_time_grid(s.num_steps, cfg.num_sample_steps);

    std::vector<int> ts;
    std::vector<LatentGrid> zs;
    LatentGrid z = z0;
    ts.push_back(grid.front());
    zs.push_back(z);
    for (size_t i = 0; i + 1 < grid.size(); ++i) {
        int t = grid[i], t_next = grid[i + 1];
        if (t_next > t_stop) break;
        LatentGrid eps = den.predict(z, t, cond);
        // reverse-time update: x0 from (z_t, t), then re-noise to t_next
        double ab = s.ab(t);
        double abn = s.ab(t_next);
        double c_z = std::sqrt(abn) / std::sqrt(ab);
        double c_e = std::sqrt(1.0 - abn) - c_z * std::sqrt(1.0 - ab);
        LatentGrid next(z.channels, z.height, z.width);
        kernels::axpby(c_z, z.data, c_e, eps.data, next.data);
        z = std::move(next);
        ts.push_back(t_next);
        zs.push_back(z);
    }

    Trajectory traj; // stored highest-t first
    for (size_t i = ts.size(); i-- > 0;) {
        traj.timesteps.push_back(ts[i]);
        traj.latents.push_back(std::move(zs[i]));
    }
    return traj;
}

Trajectory noise_reference(const LatentGrid& z0, const std::vector<int>& t_list,
                           const NoiseSchedule& s, Rng& rng, bool shared_eps) {
    for (size_t i = 1; i < t_list.size(); ++i)
        if (t_list[i] >= t_list[i - 1])
            throw std::invalid_argument("noise_reference: t_list must be strictly decreasing");
    Trajectory traj;
    LatentGrid eps_shared;
    if (shared_eps && !t_list.empty())
        eps_shared = gaussian_grid(z0.channels, z0.height, z0.width, rng);
    for (int t : t_list) {
        const LatentGrid eps = eps_shared.data.empty()
                                   ? gaussian_grid(z0.channels, z0.height, z0.width, rng)
                                   : eps_shared;
        traj.timesteps.push_back(t);
        traj.latents.push_back(forward_noise(z0, t, eps, s));
    }
    return traj;
}

} // namespace lsr
