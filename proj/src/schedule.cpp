#include "lsr/schedule.hpp"

#include <cmath>
#include <stdexcept>

#include "lsr/kernels.hpp"

namespace lsr {

namespace {

void validate(const NoiseSchedule& s) {
    if (s.num_steps < 2) throw std::invalid_argument("NoiseSchedule: T must be >= 2");
    if (s.alpha_bar.size() != static_cast<size_t>(s.num_steps) + 1)
        throw std::invalid_argument("NoiseSchedule: alpha_bar must have T+1 entries");
    if (s.alpha_bar.front() < 0.999)
        throw std::invalid_argument("NoiseSchedule: alpha_bar[0] must be >= 0.999");
    if (s.alpha_bar.back() > 0.01)
        throw std::invalid_argument("NoiseSchedule: alpha_bar[T] must be <= 0.01");
    for (size_t i = 0; i < s.alpha_bar.size(); ++i) {
        double a = s.alpha_bar[i];
        if (!(a > 0.0 && a <= 1.0))
            throw std::invalid_argument("NoiseSchedule: entries must lie in (0,1]");
        if (i > 0 && !(a < s.alpha_bar[i - 1]))
            throw std::invalid_argument("NoiseSchedule: alpha_bar must be strictly decreasing");
    }
}

} // namespace

void NoiseSchedule::check_t(int t) const {
    if (t < 0 || t > num_steps)
        throw std::invalid_argument("timestep out of range [0, T]");
}

NoiseSchedule build_schedule(ScheduleKind kind, int T, double beta_start, double beta_end) {
    if (T < 2) throw std::invalid_argument("build_schedule: T must be >= 2");
    NoiseSchedule s;
    s.num_steps = T;
    s.kind = kind;
    s.beta_start = beta_start;
    s.beta_end = beta_end;
    s.alpha_bar.resize(static_cast<size_t>(T) + 1);
    s.alpha_bar[0] = 1.0;
    if (kind == ScheduleKind::linear_beta) {
        // ramp rates are per 1000 steps; rescale so total noising is T-independent
        double scale = 1000.0 / T;
        for (int i = 1; i <= T; ++i) {
            double beta = (beta_start + (i - 1) / double(T - 1) * (beta_end - beta_start)) * scale;
            beta = std::min(beta, 0.999);
            s.alpha_bar[i] = s.alpha_bar[i - 1] * (1.0 - beta);
        }
    } else {
        const double off = 0.008;
        auto f = [&](double t) {
            double c = std::cos((t / T + off) / (1.0 + off) * M_PI / 2.0);
            return c * c;
        };
        for (int i = 1; i <= T; ++i) {
            double beta = std::min(1.0 - f(i) / f(i - 1), 0.999);
            s.alpha_bar[i] = s.alpha_bar[i - 1] * (1.0 - beta);
        }
    }
    validate(s);
    return s;
}

NoiseSchedule schedule_from_alpha_bar(std::vector<double> alpha_bar) {
    NoiseSchedule s;
    s.num_steps = static_cast<int>(alpha_bar.size()) - 1;
    s.alpha_bar = std::move(alpha_bar);
    validate(s);
    return s;
}

LatentGrid forward_noise(const LatentGrid& z0, int t, const LatentGrid& eps,
                         const NoiseSchedule& s, NoisingForm form) {
    s.check_t(t);
    require_same_shape(z0, eps, "forward_noise");
    double ab = s.ab(t);
    double a = (form == NoisingForm::variance_preserving) ? std::sqrt(ab) : ab;
    double b = std::sqrt(1.0 - ab);
    LatentGrid out(z0.channels, z0.height, z0.width);
    kernels::axpby(a, z0.data, b, eps.data, out.data);
    return out;
}

double snr(int t, const NoiseSchedule& s) {
    s.check_t(t);
    double ab = s.ab(t);
    if (ab >= 1.0) return std::numeric_limits<double>::infinity();
    return ab / (1.0 - ab);
}

LatentGrid gaussian_grid(int c, int h, int w, Rng& rng) {
    LatentGrid g(c, h, w);
    for (double& v : g.data) v = rng.normal();
    return g;
}

std::string schedule_kind_name(ScheduleKind k) {
    return k == ScheduleKind::linear_beta ? "linear-beta" : "cosine";
}

ScheduleKind schedule_kind_from_name(const std::string& name) {
    if (name == "linear-beta") return ScheduleKind::linear_beta;
    if (name == "cosine") return ScheduleKind::cosine;
    throw std::invalid_argument("unknown schedule kind: " + name);
}

} // namespace lsr
