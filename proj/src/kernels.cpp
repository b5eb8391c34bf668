#include "lsr/kernels.hpp"

#include <atomic>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lsr/grid.hpp"

namespace lsr {

double grid_rms(const LatentGrid& g) {
    if (g.data.empty()) return 0.0;
    double s = 0.0;
    for (double v : g.data) s += v * v;
    return std::sqrt(s / g.data.size());
}

double grid_rms_diff(const LatentGrid& a, const LatentGrid& b) {
    require_same_shape(a, b, "grid_rms_diff");
    return std::sqrt(kernels::sum_sq_diff(a.data, b.data) / a.data.size());
}

double grid_norm(const LatentGrid& g) {
    double s = 0.0;
    for (double v : g.data) s += v * v;
    return std::sqrt(s);
}

double grid_dot(const LatentGrid& a, const LatentGrid& b) {
    require_same_shape(a, b, "grid_dot");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

bool grid_finite(const LatentGrid& g) {
    for (double v : g.data)
        if (!std::isfinite(v)) return false;
    return true;
}

bool grid_equal(const LatentGrid& a, const LatentGrid& b) {
    return a.same_shape(b) && a.data == b.data;
}

} // namespace lsr

namespace lsr::kernels {

namespace {
std::atomic<Backend> g_backend{
#ifdef _OPENMP
    Backend::openmp
#else
    Backend::serial
#endif
};
} // namespace

void set_backend(Backend b) { g_backend.store(b); }
Backend backend() { return g_backend.load(); }

bool openmp_available() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

#define LSR_DISPATCH(call) \
    return backend() == Backend::openmp ? omp::call : serial::call

void axpby(double a, std::span<const double> x, double b, std::span<const double> e,
           std::span<double> out) {
    if (backend() == Backend::openmp)
        omp::axpby(a, x, b, e, out);
    else
        serial::axpby(a, x, b, e, out);
}

double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
    LSR_DISPATCH(sum_sq_diff(a, b));
}

std::vector<double> scaled_sq_dists(std::span<const double> z,
                                    const std::vector<std::vector<double>>& mus,
                                    double s) {
    LSR_DISPATCH(scaled_sq_dists(z, mus, s));
}

void mix_combine(std::span<const double> z,
                 const std::vector<std::vector<double>>& mus,
                 std::span<const double> resp, double cz, double cm,
                 std::span<double> out) {
    if (backend() == Backend::openmp)
        omp::mix_combine(z, mus, resp, cz, cm, out);
    else
        serial::mix_combine(z, mus, resp, cz, cm, out);
}

LatentGrid dft_lowpass(const LatentGrid& g, double cutoff) {
    LSR_DISPATCH(dft_lowpass(g, cutoff));
}

LatentGrid upsample_nearest(const LatentGrid& g, int k) {
    LSR_DISPATCH(upsample_nearest(g, k));
}

LatentGrid upsample_bilinear(const LatentGrid& g, int k) {
    LSR_DISPATCH(upsample_bilinear(g, k));
}

LatentGrid box_downsample(const LatentGrid& g, int k) {
    LSR_DISPATCH(box_downsample(g, k));
}

#undef LSR_DISPATCH

} // namespace lsr::kernels
