#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "lsr/kernels.hpp"
#include "lsr/rng.hpp"

// Times each kernel on both backends and reports the speedup. The two
// backends must agree bitwise; this binary checks that too.

using namespace lsr;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn(); // warm up
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

LatentGrid random_grid(int c, int h, int w, uint64_t seed) {
    Rng rng(seed);
    LatentGrid g(c, h, w);
    for (double& v : g.data) v = rng.normal();
    return g;
}

} // namespace

int main() {
    const int C = 3, H = 192, W = 192;
    const int reps = 20;
    LatentGrid a = random_grid(C, H, W, 1);
    LatentGrid b = random_grid(C, H, W, 2);

    std::vector<std::vector<double>> mus;
    for (int k = 0; k < 8; ++k) mus.push_back(random_grid(C, H, W, 10 + k).data);
    std::vector<double> resp(8, 0.125);
    LatentGrid out(C, H, W);

    struct Row {
        std::string name;
        std::function<void()> serial_fn, omp_fn;
        std::function<bool()> agree;
    };

    LatentGrid s1(C, H, W), s2(C, H, W);
    std::vector<Row> rows;
    rows.push_back({"axpby",
                    [&] { kernels::serial::axpby(0.3, a.data, 0.7, b.data, s1.data); },
                    [&] { kernels::omp::axpby(0.3, a.data, 0.7, b.data, s2.data); },
                    [&] { return s1.data == s2.data; }});
    double r1 = 0, r2 = 0;
    rows.push_back({"sum_sq_diff",
                    [&] { r1 = kernels::serial::sum_sq_diff(a.data, b.data); },
                    [&] { r2 = kernels::omp::sum_sq_diff(a.data, b.data); },
                    [&] { return r1 == r2; }});
    std::vector<double> d1, d2;
    rows.push_back({"scaled_sq_dists",
                    [&] { d1 = kernels::serial::scaled_sq_dists(a.data, mus, 0.5); },
                    [&] { d2 = kernels::omp::scaled_sq_dists(a.data, mus, 0.5); },
                    [&] { return d1 == d2; }});
    rows.push_back({"mix_combine",
                    [&] { kernels::serial::mix_combine(a.data, mus, resp, 0.9, 0.1, s1.data); },
                    [&] { kernels::omp::mix_combine(a.data, mus, resp, 0.9, 0.1, s2.data); },
                    [&] { return s1.data == s2.data; }});
    LatentGrid l1, l2;
    rows.push_back({"dft_lowpass",
                    [&] { l1 = kernels::serial::dft_lowpass(a, 0.2); },
                    [&] { l2 = kernels::omp::dft_lowpass(a, 0.2); },
                    [&] { return l1.data == l2.data; }});
    LatentGrid u1, u2;
    rows.push_back({"upsample_bilinear",
                    [&] { u1 = kernels::serial::upsample_bilinear(a, 3); },
                    [&] { u2 = kernels::omp::upsample_bilinear(a, 3); },
                    [&] { return u1.data == u2.data; }});
    LatentGrid v1, v2;
    rows.push_back({"box_downsample",
                    [&] { v1 = kernels::serial::box_downsample(a, 3); },
                    [&] { v2 = kernels::omp::box_downsample(a, 3); },
                    [&] { return v1.data == v2.data; }});

    std::printf("kernel benchmark: %dx%dx%d grid, %d mixture components, %d threads\n",
                C, H, W, 8, kernels::max_threads());
    std::printf("%-20s %12s %12s %9s %7s\n", "kernel", "serial (ms)", "openmp (ms)",
                "speedup", "match");
    bool all_match = true;
    for (auto& r : rows) {
        double ts = time_ms(r.serial_fn, reps);
        double tp = time_ms(r.omp_fn, reps);
        bool ok = r.agree();
        all_match = all_match && ok;
        std::printf("%-20s %12.3f %12.3f %8.2fx %7s\n", r.name.c_str(), ts, tp,
                    ts / (tp > 0 ? tp : 1e-9), ok ? "yes" : "NO");
    }
    if (!all_match) {
        std::printf("backend mismatch detected\n");
        return 1;
    }
    return 0;
}
