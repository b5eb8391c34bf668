#pragma once

#include <string>
#include <vector>

#include "lsr/grid.hpp"
#include "lsr/rng.hpp"

namespace lsr {

enum class ScheduleKind { linear_beta, cosine };

/// Discrete noise schedule: the decreasing sequence alpha_bar[0..T] with
/// alpha_bar[0] = 1 and alpha_bar[T] <= 0.01, plus the ramp parameters used
/// to build it. alpha_bar is the cumulative product of (1 - beta_t) of the
/// variance-preserving process.
struct NoiseSchedule {
    int num_steps = 0; // T
    ScheduleKind kind = ScheduleKind::linear_beta;
    double beta_start = 1e-4; // per-1000-step reference rates; the ramp is
    double beta_end = 2e-2;   // rescaled by 1000/T so total noising is T-free
    std::vector<double> alpha_bar; // size T+1

    double ab(int t) const { return alpha_bar[static_cast<size_t>(t)]; }
    void check_t(int t) const;
};

/// Builds a schedule; validates the NoiseSchedule invariants.
/// Deterministic for fixed arguments. T >= 2 required.
NoiseSchedule build_schedule(ScheduleKind kind, int T,
                             double beta_start = 1e-4, double beta_end = 2e-2);

/// Wraps an explicit alpha_bar sequence (tests, custom ramps); validates invariants.
NoiseSchedule schedule_from_alpha_bar(std::vector<double> alpha_bar);

enum class NoisingForm {
    variance_preserving, // z_t = sqrt(ab)*z0 + sqrt(1-ab)*eps   (default)
    literal_alpha        // z_t =      ab *z0 + sqrt(1-ab)*eps   (config flag)
};

/// Forward noising z_t = sqrt(ab_t) z0 + sqrt(1-ab_t) eps.
LatentGrid forward_noise(const LatentGrid& z0, int t, const LatentGrid& eps,
                         const NoiseSchedule& s,
                         NoisingForm form = NoisingForm::variance_preserving);

/// ab_t / (1 - ab_t); +inf at ab_t = 1.
double snr(int t, const NoiseSchedule& s);

LatentGrid gaussian_grid(int c, int h, int w, Rng& rng);

std::string schedule_kind_name(ScheduleKind k);
ScheduleKind schedule_kind_from_name(const std::string& name);

} // namespace lsr
