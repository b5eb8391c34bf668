#include "lsr/kernels.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

// OpenMP variants. Parallelism is only over independent output elements or
// fixed-size reduction chunks, so results are bit-identical to the serial
// reference for any thread count.

namespace lsr::kernels::omp {

namespace {
constexpr size_t kChunk = 4096;
constexpr long long kParallelCutoff = 1 << 12; // skip thread spawn on tiny work
} // namespace

void axpby(double a, std::span<const double> x, double b, std::span<const double> e,
           std::span<double> out) {
    const long long n = static_cast<long long>(x.size());
#pragma omp parallel for schedule(static) if (n >= kParallelCutoff)
    for (long long i = 0; i < n; ++i) out[i] = a * x[i] + b * e[i];
}

double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
    size_t n = a.size();
    long long nchunks = static_cast<long long>((n + kChunk - 1) / kChunk);
    std::vector<double> partials(nchunks, 0.0);
#pragma omp parallel for schedule(static) if (nchunks > 1)
    for (long long c = 0; c < nchunks; ++c) {
        size_t lo = static_cast<size_t>(c) * kChunk, hi = std::min(n, lo + kChunk);
        double s = 0.0;
        for (size_t i = lo; i < hi; ++i) {
            double d = a[i] - b[i];
            s += d * d;
        }
        partials[c] = s;
    }
    double s = 0.0;
    for (double p : partials) s += p; // fixed order
    return s;
}

std::vector<double> scaled_sq_dists(std::span<const double> z,
                                    const std::vector<std::vector<double>>& mus,
                                    double s) {
    std::vector<double> out(mus.size(), 0.0);
    size_t n = z.size();
    long long nchunks = static_cast<long long>((n + kChunk - 1) / kChunk);
    for (size_t k = 0; k < mus.size(); ++k) {
        const double* mu = mus[k].data();
        std::vector<double> partials(nchunks, 0.0);
#pragma omp parallel for schedule(static) if (nchunks > 1)
        for (long long c = 0; c < nchunks; ++c) {
            size_t lo = static_cast<size_t>(c) * kChunk, hi = std::min(n, lo + kChunk);
            double acc = 0.0;
            for (size_t i = lo; i < hi; ++i) {
                double d = z[i] - s * mu[i];
                acc += d * d;
            }
            partials[c] = acc;
        }
        double total = 0.0;
        for (double p : partials) total += p;
        out[k] = total;
    }
    return out;
}

void mix_combine(std::span<const double> z,
                 const std::vector<std::vector<double>>& mus,
                 std::span<const double> resp, double cz, double cm,
                 std::span<double> out) {
    const long long n = static_cast<long long>(z.size());
#pragma omp parallel for schedule(static) if (n >= kParallelCutoff)
    for (long long i = 0; i < n; ++i) {
        double mix = 0.0;
        for (size_t k = 0; k < mus.size(); ++k) mix += resp[k] * mus[k][i];
        out[i] = cz * z[i] + cm * mix;
    }
}

namespace {

void dft_axis_par(std::vector<std::complex<double>>& buf, int n_outer, int n_axis,
                  int stride_outer, int stride_axis, int dir,
                  const std::vector<std::complex<double>>& twiddle) {
#pragma omp parallel for schedule(static) if (n_outer > 1)
    for (int o = 0; o < n_outer; ++o) {
        std::vector<std::complex<double>> tmp(n_axis);
        std::complex<double>* base = buf.data() + static_cast<size_t>(o) * stride_outer;
        for (int f = 0; f < n_axis; ++f) {
            std::complex<double> acc(0.0, 0.0);
            for (int i = 0; i < n_axis; ++i) {
                int idx = (dir < 0) ? (f * i) % n_axis : ((n_axis - f % n_axis) * i) % n_axis;
                acc += base[static_cast<size_t>(i) * stride_axis] * twiddle[idx];
            }
            tmp[f] = acc;
        }
        for (int f = 0; f < n_axis; ++f)
            base[static_cast<size_t>(f) * stride_axis] = tmp[f];
    }
}

std::vector<std::complex<double>> make_twiddle(int n) {
    std::vector<std::complex<double>> tw(n);
    for (int i = 0; i < n; ++i) {
        double a = -2.0 * M_PI * i / n;
        tw[i] = {std::cos(a), std::sin(a)};
    }
    return tw;
}

} // namespace

LatentGrid dft_lowpass(const LatentGrid& g, double cutoff) {
    if (!(cutoff > 0.0 && cutoff <= 1.0))
        throw std::invalid_argument("dft_lowpass: cutoff must be in (0,1]");
    const int H = g.height, W = g.width;
    auto radial = [&](int fy, int fx) {
        int sy = std::min(fy, H - fy);
        int sx = std::min(fx, W - fx);
        double ny = (H > 1) ? sy / (H / 2.0) : 0.0;
        double nx = (W > 1) ? sx / (W / 2.0) : 0.0;
        return std::sqrt((ny * ny + nx * nx) / 2.0);
    };
    auto twH = make_twiddle(H);
    auto twW = make_twiddle(W);
    LatentGrid out(g.channels, H, W);
    std::vector<std::complex<double>> buf(static_cast<size_t>(H) * W);
    for (int c = 0; c < g.channels; ++c) {
        for (int i = 0; i < H * W; ++i)
            buf[i] = {g.data[static_cast<size_t>(c) * H * W + i], 0.0};
        dft_axis_par(buf, H, W, W, 1, -1, twW);
        dft_axis_par(buf, W, H, 1, W, -1, twH);
        for (int fy = 0; fy < H; ++fy)
            for (int fx = 0; fx < W; ++fx)
                if (radial(fy, fx) > cutoff) buf[static_cast<size_t>(fy) * W + fx] = 0.0;
        dft_axis_par(buf, H, W, W, 1, +1, twW);
        dft_axis_par(buf, W, H, 1, W, +1, twH);
        double inv = 1.0 / (static_cast<double>(H) * W);
        for (int i = 0; i < H * W; ++i)
            out.data[static_cast<size_t>(c) * H * W + i] = buf[i].real() * inv;
    }
    return out;
}

LatentGrid upsample_nearest(const LatentGrid& g, int k) {
    LatentGrid out(g.channels, g.height * k, g.width * k);
    const int rows = out.height;
#pragma omp parallel for schedule(static) if (rows > 8)
    for (int oy = 0; oy < rows; ++oy)
        for (int c = 0; c < g.channels; ++c)
            for (int ox = 0; ox < out.width; ++ox)
                out.at(c, oy, ox) = g.at(c, oy / k, ox / k);
    return out;
}

namespace {
inline double bilinear_sample(const LatentGrid& g, int c, int oy, int ox, int k) {
    double sy = (oy + 0.5) / k - 0.5;
    double sx = (ox + 0.5) / k - 0.5;
    int y0 = static_cast<int>(std::floor(sy));
    int x0 = static_cast<int>(std::floor(sx));
    double fy = sy - y0, fx = sx - x0;
    auto cy = [&](int y) { return std::min(std::max(y, 0), g.height - 1); };
    auto cx = [&](int x) { return std::min(std::max(x, 0), g.width - 1); };
    return (1 - fy) * (1 - fx) * g.at(c, cy(y0), cx(x0)) +
           (1 - fy) * fx * g.at(c, cy(y0), cx(x0 + 1)) +
           fy * (1 - fx) * g.at(c, cy(y0 + 1), cx(x0)) +
           fy * fx * g.at(c, cy(y0 + 1), cx(x0 + 1));
}
} // namespace

LatentGrid upsample_bilinear(const LatentGrid& g, int k) {
    LatentGrid out(g.channels, g.height * k, g.width * k);
    const int rows = out.height;
#pragma omp parallel for schedule(static) if (rows > 8)
    for (int oy = 0; oy < rows; ++oy)
        for (int c = 0; c < g.channels; ++c)
            for (int ox = 0; ox < out.width; ++ox)
                out.at(c, oy, ox) = bilinear_sample(g, c, oy, ox, k);
    return out;
}

LatentGrid box_downsample(const LatentGrid& g, int k) {
    if (g.height % k != 0 || g.width % k != 0)
        throw std::invalid_argument("box_downsample: dimensions not divisible by k");
    LatentGrid out(g.channels, g.height / k, g.width / k);
    double inv = 1.0 / (k * k);
    const int rows = out.height;
#pragma omp parallel for schedule(static) if (rows > 8)
    for (int oy = 0; oy < rows; ++oy)
        for (int c = 0; c < g.channels; ++c)
            for (int ox = 0; ox < out.width; ++ox) {
                double s = 0.0;
                for (int dy = 0; dy < k; ++dy)
                    for (int dx = 0; dx < k; ++dx)
                        s += g.at(c, oy * k + dy, ox * k + dx);
                out.at(c, oy, ox) = s * inv;
            }
    return out;
}

} // namespace lsr::kernels::omp
