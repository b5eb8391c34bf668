#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles here
// must stay independent of the implementation paths they check.

#include <cmath>
#include <functional>
#include <vector>

#include "lsr/denoiser.hpp"
#include "lsr/grid.hpp"
#include "lsr/rng.hpp"
#include "lsr/scene.hpp"
#include "lsr/schedule.hpp"

namespace lsr::testing {

// Tiny hand-checkable schedule: alpha_bar = {1, 0.64, 0.25, 0.009}.
// t=2 gives the worked forward/ddim examples (ab=0.25, ab_prev=0.64).
inline NoiseSchedule tiny_schedule() {
    return schedule_from_alpha_bar({1.0, 0.64, 0.25, 0.009});
}

inline LatentGrid const_grid(int c, int h, int w, double v) {
    LatentGrid g(c, h, w);
    for (double& x : g.data) x = v;
    return g;
}

inline LatentGrid random_grid(int c, int h, int w, uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    LatentGrid g(c, h, w);
    for (double& x : g.data) x = scale * rng.normal();
    return g;
}

// Benchmark scene: the quad layout family at small/large canvases.
struct BenchScene {
    std::vector<LayoutSpec> layouts;
    SceneMixture m_small, m_large;
};

inline BenchScene quad_scene(double sigma, int small = 16, int large = 48) {
    BenchScene b;
    b.layouts = quad_benchmark_layouts(large);
    std::vector<LayoutSpec> at_small = b.layouts, at_large = b.layouts;
    for (auto& l : at_small) { l.canvas_h = small; l.canvas_w = small; }
    for (auto& l : at_large) { l.canvas_h = large; l.canvas_w = large; }
    b.m_small = mixture_from_layouts(at_small, sigma);
    b.m_large = mixture_from_layouts(at_large, sigma);
    return b;
}

// Textured variant: blob alpha modulated by a period-2 checkerboard. Gives
// the scene genuine high-frequency content so band-resolved comparisons are
// meaningful; built directly so the product renderer stays untouched.
inline LatentGrid render_textured(const LayoutSpec& layout, int H, int W, double amp = 1.0) {
    const Palette& pal = default_palette();
    LatentGrid img(3, H, W, 0.0);
    for (int py = 0; py < H; ++py) {
        double ny = (py + 0.5) / H;
        for (int px = 0; px < W; ++px) {
            double nx = (px + 0.5) / W;
            double chk = (((py / 2) + (px / 2)) % 2) * 2.0 - 1.0;
            for (const auto& b : layout.boxes) {
                double cx = b.x + b.w / 2, cy = b.y + b.h / 2;
                double rho = std::max(std::abs(nx - cx) / (b.w / 2),
                                      std::abs(ny - cy) / (b.h / 2));
                double a;
                if (rho <= kBlobFlatFraction)
                    a = 1.0;
                else if (rho >= 1.0)
                    a = 0.0;
                else {
                    double s = (rho - kBlobFlatFraction) / (1.0 - kBlobFlatFraction);
                    double c = std::cos(M_PI / 2 * s);
                    a = c * c;
                }
                a = std::min(1.0, std::max(0.0, a * (1.0 + amp * chk) / (1.0 + amp)));
                const auto& col = pal.at(b.label);
                for (int c = 0; c < 3; ++c)
                    img.at(c, py, px) = (1 - a) * img.at(c, py, px) + a * col[c];
            }
        }
    }
    return img;
}

inline BenchScene textured_quad_scene(double sigma, int small = 16, int large = 48,
                                      double amp = 1.0) {
    BenchScene b;
    b.layouts = quad_benchmark_layouts(large);
    b.m_small.pixel_sigma = sigma;
    b.m_large.pixel_sigma = sigma;
    for (const auto& l : b.layouts) {
        LayoutSpec ls = l, ll = l;
        ls.canvas_h = ls.canvas_w = small;
        ll.canvas_h = ll.canvas_w = large;
        b.m_small.components.push_back({ls, render_textured(ls, small, small, amp), 0.25});
        b.m_large.components.push_back({ll, render_textured(ll, large, large, amp), 0.25});
    }
    return b;
}

// Central finite difference of a scalar function of one grid entry.
inline double central_diff(const std::function<double(const LatentGrid&)>& f,
                           const LatentGrid& z0, size_t idx, double h = 1e-5) {
    LatentGrid zp = z0, zm = z0;
    zp.data[idx] += h;
    zm.data[idx] -= h;
    return (f(zp) - f(zm)) / (2 * h);
}

// Closed-form deterministic DDIM trajectory for a single-Gaussian mixture.
// With one component the denoiser is affine, so each step maps z to
// a*z + b*mu with scalar coefficients; this recursion is derived by hand
// and evaluated independently of the sampler.
struct LinearDdimOracle {
    // returns z at every grid time, ordered like sample(): T first, 0 last
    static std::vector<LatentGrid> trajectory(const LatentGrid& z_T, const LatentGrid& mu,
                                              double sigma, const NoiseSchedule& s,
                                              const std::vector<int>& grid_increasing) {
        std::vector<LatentGrid> out;
        LatentGrid z = z_T;
        out.push_back(z);
        for (size_t i = grid_increasing.size(); i-- > 1;) {
            int t = grid_increasing[i], tp = grid_increasing[i - 1];
            double ab = s.ab(t), abp = s.ab(tp);
            double v = ab * sigma * sigma + (1 - ab);
            // eps(z) = sqrt(1-ab) (z - sqrt(ab) mu) / v
            double e_z = std::sqrt(1 - ab) / v;
            double e_m = -std::sqrt(1 - ab) * std::sqrt(ab) / v;
            // x0(z) = (z - sqrt(1-ab) eps) / sqrt(ab)
            double x_z = (1 - std::sqrt(1 - ab) * e_z) / std::sqrt(ab);
            double x_m = -std::sqrt(1 - ab) * e_m / std::sqrt(ab);
            // z' = sqrt(abp) x0 + sqrt(1-abp) eps
            double a = std::sqrt(abp) * x_z + std::sqrt(1 - abp) * e_z;
            double b = std::sqrt(abp) * x_m + std::sqrt(1 - abp) * e_m;
            LatentGrid next(z.channels, z.height, z.width);
            for (size_t j = 0; j < z.data.size(); ++j)
                next.data[j] = a * z.data[j] + b * mu.data[j];
            z = next;
            out.push_back(z);
        }
        return out;
    }
};

} // namespace lsr::testing
