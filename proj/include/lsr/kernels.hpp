#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lsr/grid.hpp"

// Hot inner loops, implemented twice: a serial reference and an OpenMP
// version. Both produce bit-identical results for any thread count: work is
// parallelized across independent output elements, and reductions sum fixed
// 4096-element chunks in a fixed order. The serial build is kept for testing
// and as the fallback when OpenMP is unavailable; tools/lsregen-bench compares
// the two.

namespace lsr::kernels {

enum class Backend { serial, openmp };

void set_backend(Backend b);
Backend backend();
bool openmp_available();
int max_threads();

// y[i] = a*x[i] + b*e[i]
void axpby(double a, std::span<const double> x, double b, std::span<const double> e,
           std::span<double> out);

// sum over i of (a[i]-b[i])^2, chunk-deterministic
double sum_sq_diff(std::span<const double> a, std::span<const double> b);

// sum over i of (z[i] - s*mu[i])^2 for each row mu_k of mus; one entry per row
std::vector<double> scaled_sq_dists(std::span<const double> z,
                                    const std::vector<std::vector<double>>& mus,
                                    double s);

// out[i] = cz*z[i] + cm * sum_k resp[k]*mus[k][i]
void mix_combine(std::span<const double> z,
                 const std::vector<std::vector<double>>& mus,
                 std::span<const double> resp, double cz, double cm,
                 std::span<double> out);

// orthogonal-projection low-pass: per channel, 2-D DFT, zero coefficients
// with normalized radial frequency above cutoff, inverse transform
LatentGrid dft_lowpass(const LatentGrid& g, double cutoff);

LatentGrid upsample_nearest(const LatentGrid& g, int k);
LatentGrid upsample_bilinear(const LatentGrid& g, int k);

// mean over each k x k block; exact inverse direction of nearest upsampling
LatentGrid box_downsample(const LatentGrid& g, int k);

namespace serial {
void axpby(double a, std::span<const double> x, double b, std::span<const double> e,
           std::span<double> out);
double sum_sq_diff(std::span<const double> a, std::span<const double> b);
std::vector<double> scaled_sq_dists(std::span<const double> z,
                                    const std::vector<std::vector<double>>& mus,
                                    double s);
void mix_combine(std::span<const double> z,
                 const std::vector<std::vector<double>>& mus,
                 std::span<const double> resp, double cz, double cm,
                 std::span<double> out);
LatentGrid dft_lowpass(const LatentGrid& g, double cutoff);
LatentGrid upsample_nearest(const LatentGrid& g, int k);
LatentGrid upsample_bilinear(const LatentGrid& g, int k);
LatentGrid box_downsample(const LatentGrid& g, int k);
} // namespace serial

namespace omp {
void axpby(double a, std::span<const double> x, double b, std::span<const double> e,
           std::span<double> out);
double sum_sq_diff(std::span<const double> a, std::span<const double> b);
std::vector<double> scaled_sq_dists(std::span<const double> z,
                                    const std::vector<std::vector<double>>& mus,
                                    double s);
void mix_combine(std::span<const double> z,
                 const std::vector<std::vector<double>>& mus,
                 std::span<const double> resp, double cz, double cm,
                 std::span<double> out);
LatentGrid dft_lowpass(const LatentGrid& g, double cutoff);
LatentGrid upsample_nearest(const LatentGrid& g, int k);
LatentGrid upsample_bilinear(const LatentGrid& g, int k);
LatentGrid box_downsample(const LatentGrid& g, int k);
} // namespace omp

} // namespace lsr::kernels
