#include <doctest.h>

#include <cmath>

#include "lsr/denoiser.hpp"
#include "lsr/errors.hpp"
#include "lsr/sampler.hpp"
#include "support.hpp"

using namespace lsr;
using namespace lsr::testing;

namespace {

SceneMixture scalar_mixture(const std::vector<double>& means,
                            const std::vector<double>& weights, double sigma) {
    SceneMixture m;
    m.pixel_sigma = sigma;
    for (size_t k = 0; k < means.size(); ++k) {
        LayoutSpec l;
        l.canvas_h = l.canvas_w = 1;
        l.boxes = {{0.0, 0.0, 1.0, 1.0, "red"}};
        m.components.push_back({l, const_grid(1, 1, 1, means[k]), weights[k]});
    }
    return m;
}

} // namespace

TEST_CASE("K=1 posterior mean matches the conjugate-Gaussian formula") {
    // prior z0 ~ N(mu, sig^2); observation z_t = sqrt(ab) z0 + sqrt(1-ab) n
    auto s = tiny_schedule();
    double mu = 0.8, sig = 0.3, zt = 1.4;
    int t = 2;
    double ab = s.ab(t);
    SceneMixture m = scalar_mixture({mu}, {1.0}, sig);
    LatentGrid z = const_grid(1, 1, 1, zt);
    LatentGrid got = gmm_posterior_mean(z, t, m, {0}, s);
    // hand computation: precision form of the conjugate posterior
    double prec = 1.0 / (sig * sig) + ab / (1 - ab);
    double mean = (mu / (sig * sig) + std::sqrt(ab) * zt / (1 - ab)) / prec;
    CHECK(got.at(0, 0, 0) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("symmetric two-component mixture at z=0 returns 0") {
    SceneMixture m = scalar_mixture({0.7, -0.7}, {0.5, 0.5}, 0.2);
    auto s = tiny_schedule();
    LatentGrid z = const_grid(1, 1, 1, 0.0);
    LatentGrid got = gmm_posterior_mean(z, 1, m, {0, 1}, s);
    CHECK(got.at(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("empty subset rejected") {
    SceneMixture m = scalar_mixture({0.5}, {1.0}, 0.2);
    auto s = tiny_schedule();
    CHECK_THROWS_AS(gmm_posterior_mean(const_grid(1, 1, 1, 0.1), 1, m, {}, s),
                    std::invalid_argument);
}

TEST_CASE("K=3 posterior mean matches brute-force quadrature on a 2x2 grid") {
    // quadrature oracle: E[z0 | z_t] over a dense 4-D z0 grid
    auto s = build_schedule(ScheduleKind::linear_beta, 1000);
    const double sigma = 0.35;
    SceneMixture m;
    m.pixel_sigma = sigma;
    std::vector<std::vector<double>> mus = {
        {0.9, 0.1, -0.4, 0.3}, {-0.6, 0.8, 0.2, -0.2}, {0.1, -0.7, 0.6, 0.5}};
    std::vector<double> ws = {0.5, 0.3, 0.2};
    for (int k = 0; k < 3; ++k) {
        LayoutSpec l;
        l.canvas_h = l.canvas_w = 2;
        l.boxes = {{0.0, 0.0, 1.0, 1.0, "red"}};
        LatentGrid g(1, 2, 2);
        g.data = mus[k];
        m.components.push_back({l, g, ws[k]});
    }
    LatentGrid zt(1, 2, 2);
    zt.data = {0.5, -0.2, 0.3, 0.1};
    const int t = 600;
    double ab = s.ab(t);

    // dense grid quadrature, trapezoid over [-3.2, 3.2]^4, h = 0.1
    const double lo = -3.2, h = 0.1;
    const int n = 65;
    std::vector<double> num(4, 0.0);
    double den = 0.0;
    for (int i0 = 0; i0 < n; ++i0)
        for (int i1 = 0; i1 < n; ++i1)
            for (int i2 = 0; i2 < n; ++i2)
                for (int i3 = 0; i3 < n; ++i3) {
                    double z0[4] = {lo + i0 * h, lo + i1 * h, lo + i2 * h, lo + i3 * h};
                    double prior = 0.0;
                    for (int k = 0; k < 3; ++k) {
                        double e = 0.0;
                        for (int d = 0; d < 4; ++d) {
                            double dd = z0[d] - mus[k][d];
                            e += dd * dd;
                        }
                        prior += ws[k] * std::exp(-e / (2 * sigma * sigma));
                    }
                    double like = 0.0;
                    for (int d = 0; d < 4; ++d) {
                        double dd = zt.data[d] - std::sqrt(ab) * z0[d];
                        like += dd * dd;
                    }
                    double w = prior * std::exp(-like / (2 * (1 - ab)));
                    den += w;
                    for (int d = 0; d < 4; ++d) num[d] += w * z0[d];
                }
    LatentGrid got = gmm_posterior_mean(zt, t, m, {0, 1, 2}, s);
    for (int d = 0; d < 4; ++d)
        CHECK(std::abs(got.data[d] - num[d] / den) <= 1e-6);
}

TEST_CASE("posterior mean is a convex combination of component posteriors") {
    SceneMixture m = scalar_mixture({-0.5, 0.2, 0.9}, {0.2, 0.5, 0.3}, 0.25);
    auto s = tiny_schedule();
    for (double zt : {-1.0, 0.0, 0.4, 2.0}) {
        LatentGrid z = const_grid(1, 1, 1, zt);
        auto resp = gmm_responsibilities(z, 1, m, {0, 1, 2}, s);
        double lo = 1e18, hi = -1e18;
        double ab = s.ab(1), sig2 = 0.25 * 0.25;
        double v = ab * sig2 + (1 - ab);
        for (int k = 0; k < 3; ++k) {
            double mu_hat =
                ((1 - ab) * m.components[k].mean.at(0, 0, 0) + std::sqrt(ab) * sig2 * zt) / v;
            lo = std::min(lo, mu_hat);
            hi = std::max(hi, mu_hat);
        }
        double got = gmm_posterior_mean(z, 1, m, {0, 1, 2}, s).at(0, 0, 0);
        CHECK(got >= lo - 1e-12);
        CHECK(got <= hi + 1e-12);
        double sum = 0;
        for (double r : resp) sum += r;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("responsibilities are invariant to a common weight scale") {
    // scaling every weight by the same factor shifts all log densities
    // equally; log-sum-exp must cancel it
    SceneMixture a = scalar_mixture({-0.4, 0.6}, {0.5, 0.5}, 0.2);
    SceneMixture b = scalar_mixture({-0.4, 0.6}, {0.05, 0.05}, 0.2);
    auto s = tiny_schedule();
    LatentGrid z = const_grid(1, 1, 1, 0.3);
    auto ra = gmm_responsibilities(z, 1, a, {0, 1}, s);
    auto rb = gmm_responsibilities(z, 1, b, {0, 1}, s);
    for (size_t i = 0; i < ra.size(); ++i)
        CHECK(ra[i] == doctest::Approx(rb[i]).epsilon(1e-12));
}

TEST_CASE("posterior collapses toward z at small t") {
    auto s = build_schedule(ScheduleKind::linear_beta, 1000);
    SceneMixture m = scalar_mixture({0.5}, {1.0}, 0.3);
    LatentGrid z = const_grid(1, 1, 1, std::sqrt(s.ab(1)) * 0.55);
    LatentGrid x0 = gmm_posterior_mean(z, 1, m, {0}, s);
    double back = z.at(0, 0, 0) / std::sqrt(s.ab(1));
    CHECK(std::abs(x0.at(0, 0, 0) - back) < 0.01); // collapse bound ~ (1-ab)/v * |z0-mu|
}

TEST_CASE("posterior_mean_to_eps") {
    auto s = tiny_schedule();
    SUBCASE("exact-signal case gives zero eps") {
        LatentGrid z = const_grid(1, 1, 1, 0.9);
        LatentGrid x0 = const_grid(1, 1, 1, 0.9 / std::sqrt(s.ab(2)));
        LatentGrid e = posterior_mean_to_eps(z, 2, x0, s);
        CHECK(e.at(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("worked example inverts forward_noise") {
        LatentGrid z = const_grid(1, 1, 1, 1.8660254037844386); // 0.5*2 + sqrt(.75)
        LatentGrid x0 = const_grid(1, 1, 1, 2.0);
        LatentGrid e = posterior_mean_to_eps(z, 2, x0, s);
        CHECK(e.at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("round trip through forward_noise is the identity") {
        LatentGrid z = random_grid(2, 3, 3, 5);
        LatentGrid x0 = random_grid(2, 3, 3, 6);
        LatentGrid e = posterior_mean_to_eps(z, 1, x0, s);
        LatentGrid back = forward_noise(x0, 1, e, s);
        CHECK(grid_rms_diff(back, z) < 1e-13);
    }
    SUBCASE("t=0 is an error") {
        CHECK_THROWS_AS(
            posterior_mean_to_eps(const_grid(1, 1, 1, 1), 0, const_grid(1, 1, 1, 1), s),
            std::invalid_argument);
    }
}

TEST_CASE("GmmDenoiser prediction equals the posterior-mean composition for t >= 1") {
    auto scene = quad_scene(0.35);
    auto s = build_schedule(ScheduleKind::linear_beta, 1000);
    GmmDenoiser den(scene.m_large, s);
    LatentGrid z = random_grid(3, 48, 48, 21);
    for (int t : {1, 200, 1000}) {
        LatentGrid direct = den.predict(z, t, Condition::none());
        std::vector<int> all = {0, 1, 2, 3};
        LatentGrid composed =
            posterior_mean_to_eps(z, t, gmm_posterior_mean(z, t, scene.m_large, all, s), s);
        CHECK(grid_rms_diff(direct, composed) < 1e-10);
    }
}

TEST_CASE("GmmDenoiser is finite at t=0") {
    auto scene = quad_scene(0.35);
    auto s = build_schedule(ScheduleKind::linear_beta, 1000);
    GmmDenoiser den(scene.m_large, s);
    LatentGrid z = scene.m_large.components[0].mean;
    LatentGrid e = den.predict(z, 0, Condition::none());
    CHECK(grid_finite(e));
    CHECK(grid_norm(e) == doctest::Approx(0.0).epsilon(1e-12)); // sqrt(1-ab) factor
}

TEST_CASE("gmm_conditional matching rules") {
    auto scene = quad_scene(0.35);
    auto s = build_schedule(ScheduleKind::linear_beta, 1000);
    SUBCASE("matching layout restricts to one component") {
        auto den = gmm_conditional(scene.m_large, scene.layouts[2], s);
        CHECK(den->base_subset() == std::vector<int>{2});
    }
    SUBCASE("non-matching layout raises the dedicated error") {
        LayoutSpec l = scene.layouts[0];
        l.boxes[0].x += 0.2; // IoU drops below 0.9
        CHECK_THROWS_AS(gmm_conditional(scene.m_large, l, s), NoMatchingLayoutError);
    }
    SUBCASE("wrong label multiset does not match") {
        LayoutSpec l = scene.layouts[0];
        l.boxes[0].label = "blue";
        CHECK_THROWS_AS(gmm_conditional(scene.m_large, l, s), NoMatchingLayoutError);
    }
    SUBCASE("slightly perturbed boxes still match at IoU >= 0.9") {
        LayoutSpec l = scene.layouts[1];
        l.boxes[0].x += 0.005;
        auto den = gmm_conditional(scene.m_large, l, s);
        CHECK(den->base_subset() == std::vector<int>{1});
    }
}

TEST_CASE("layout matching all components behaves like the unconditional denoiser") {
    // one-component scene: the layout matches everything
    auto scene = quad_scene(0.35);
    auto s = build_schedule(ScheduleKind::linear_beta, 1000);
    SceneMixture single = scene.m_large;
    single.components.resize(1);
    single.components[0].weight = 1.0;
    auto cond_den = gmm_conditional(single, scene.layouts[0], s);
    auto unc_den = gmm_unconditional(single, s);
    LatentGrid z = random_grid(3, 48, 48, 31);
    LatentGrid a = cond_den->predict(z, 500, Condition::none());
    LatentGrid b = unc_den->predict(z, 500, Condition::none());
    CHECK(a.data == b.data);
}

TEST_CASE("conditional sampling concentrates on the matched component") {
    auto scene = quad_scene(0.35, 16, 48);
    auto s = build_schedule(ScheduleKind::linear_beta, 1000, 1e-4, 9.3e-3);
    auto den = gmm_conditional(scene.m_small, scene.layouts[0], s);
    SamplerConfig cfg;
    cfg.num_sample_steps = 25;
    int hits = 0;
    const int N = 200;
    for (int i = 0; i < N; ++i) {
        cfg.seed = 5000 + static_cast<uint64_t>(i);
        Trajectory traj = sample(*den, Condition::none(), cfg, s);
        const LatentGrid& img = traj.latents.back();
        double best = 1e18;
        int arg = -1;
        for (int k = 0; k < 4; ++k) {
            double d = grid_rms_diff(img, scene.m_small.components[k].mean);
            if (d < best) { best = d; arg = k; }
        }
        if (arg == 0) ++hits;
    }
    CHECK(hits >= 198); // >= 99% of 200
}

TEST_CASE("cfg_combine") {
    LatentGrid u = const_grid(1, 1, 1, 0.0);
    LatentGrid c = const_grid(1, 1, 1, 1.0);
    CHECK(cfg_combine(u, c, 0.0).at(0, 0, 0) == 0.0);
    CHECK(cfg_combine(u, c, 1.0).at(0, 0, 0) == 1.0);
    CHECK(cfg_combine(u, c, 2.0).at(0, 0, 0) == 2.0);
    CHECK_THROWS_AS(cfg_combine(const_grid(1, 1, 2, 0), c, 1.0), std::invalid_argument);
}
