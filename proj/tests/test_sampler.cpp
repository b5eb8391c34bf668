#include <doctest.h>

#include <cmath>

#include "lsr/denoiser.hpp"
#include "lsr/guidance.hpp"
#include "lsr/kernels.hpp"
#include "lsr/sampler.hpp"
#include "support.hpp"

using namespace lsr;
using namespace lsr::testing;

TEST_CASE("sample_time_grid spans 0..T with strict stride") {
    auto g = sample_time_grid(1000, 50);
    CHECK(g.front() == 0);
    CHECK(g.back() == 1000);
    CHECK(g.size() == 51);
    for (size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
    CHECK_THROWS_AS(sample_time_grid(10, 20), std::invalid_argument);
}

TEST_CASE("ddim_step inverts forward noising exactly when eps is known") {
    auto s = tiny_schedule();
    LatentGrid z0 = random_grid(1, 3, 3, 1);
    LatentGrid eps = random_grid(1, 3, 3, 2);
    LatentGrid zt = forward_noise(z0, 2, eps, s);
    LatentGrid back = ddim_step(zt, 2, 0, eps, s, 0.0, nullptr);
    CHECK(grid_rms_diff(back, z0) < 1e-13);
}

TEST_CASE("ddim_step worked example") {
    auto s = tiny_schedule(); // ab(2)=0.25, ab(1)=0.64
    LatentGrid zt = const_grid(1, 1, 1, 1.8660254037844386);
    LatentGrid eps = const_grid(1, 1, 1, 1.0);
    LatentGrid z = ddim_step(zt, 2, 1, eps, s, 0.0, nullptr);
    // x0 = 2.0; z' = 0.8*2.0 + 0.6*1.0
    CHECK(z.at(0, 0, 0) == doctest::Approx(2.2).epsilon(1e-12));
}

TEST_CASE("ddim_step rejects non-decreasing timestep pairs") {
    auto s = tiny_schedule();
    LatentGrid z = const_grid(1, 1, 1, 1.0);
    CHECK_THROWS_AS(ddim_step(z, 1, 1, z, s, 0.0, nullptr), std::invalid_argument);
    CHECK_THROWS_AS(ddim_step(z, 1, 2, z, s, 0.0, nullptr), std::invalid_argument);
}

TEST_CASE("eta=1 sigma matches the DDPM posterior variance formula") {
    // beta_tilde = (1 - ab_prev)/(1 - ab_t) * (1 - ab_t/ab_prev)
    auto s = tiny_schedule();
    double ab = s.ab(2), abp = s.ab(1);
    double sigma = std::sqrt((1 - abp) / (1 - ab)) * std::sqrt(1 - ab / abp);
    double beta_tilde = (1 - abp) / (1 - ab) * (1 - ab / abp);
    CHECK(sigma * sigma == doctest::Approx(beta_tilde).epsilon(1e-12));
}

TEST_CASE("ddpm_step statistics and conventions") {
    auto s = tiny_schedule();
    LatentGrid zt = const_grid(1, 1, 1, 0.9);
    LatentGrid eps = const_grid(1, 1, 1, 0.4);
    SUBCASE("null rng returns the posterior mean") {
        LatentGrid a = ddpm_step(zt, 2, 1, eps, s, nullptr);
        LatentGrid b = ddpm_step(zt, 2, 1, eps, s, nullptr);
        CHECK(a.data == b.data);
    }
    SUBCASE("no noise is added on the final step (t_prev=0)") {
        Rng rng(4);
        LatentGrid a = ddpm_step(zt, 1, 0, eps, s, &rng);
        LatentGrid b = ddpm_step(zt, 1, 0, eps, s, nullptr);
        CHECK(a.data == b.data); // ab(0)=1 makes sigma vanish
    }
    SUBCASE("sample variance matches the posterior variance") {
        double ab = s.ab(2), abp = s.ab(1);
        double want = (1 - abp) / (1 - ab) * (1 - ab / abp);
        Rng rng(5);
        const int N = 10000;
        LatentGrid mean_ref = ddpm_step(zt, 2, 1, eps, s, nullptr);
        double v = 0;
        for (int i = 0; i < N; ++i) {
            LatentGrid z = ddpm_step(zt, 2, 1, eps, s, &rng);
            double d = z.at(0, 0, 0) - mean_ref.at(0, 0, 0);
            v += d * d;
        }
        v /= N;
        CHECK(std::abs(v - want) < 4 * want * std::sqrt(2.0 / N));
    }
}

TEST_CASE("sample is bit-reproducible and records the full trajectory") {
    auto scene = quad_scene(0.35);
    auto s = build_schedule(ScheduleKind::linear_beta, 1000);
    auto den = gmm_unconditional(scene.m_small, s);
    SamplerConfig cfg;
    cfg.num_sample_steps = 10;
    cfg.seed = 77;
    Trajectory a = sample(*den, Condition::none(), cfg, s);
    Trajectory b = sample(*den, Condition::none(), cfg, s);
    CHECK(a.timesteps == b.timesteps);
    CHECK(a.timesteps.front() == 1000);
    CHECK(a.timesteps.back() == 0);
    CHECK(a.size() == 11);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a.latents[i].data == b.latents[i].data);
}

TEST_CASE("K=1 sampling lands on the target distribution") {
    auto scene = quad_scene(0.05);
    auto s = build_schedule(ScheduleKind::linear_beta, 1000, 1e-4, 9.3e-3);
    SceneMixture single = scene.m_small;
    single.components.resize(1);
    single.components[0].weight = 1.0;
    auto den = gmm_unconditional(single, s);
    SamplerConfig cfg;
    cfg.num_sample_steps = 25;
    const LatentGrid& mu = single.components[0].mean;
    int ok_runs = 0;
    const int runs = 100;
    for (int r = 0; r < runs; ++r) {
        cfg.seed = 9000 + static_cast<uint64_t>(r);
        Trajectory traj = sample(*den, Condition::none(), cfg, s);
        const LatentGrid& img = traj.latents.back();
        int close = 0;
        for (size_t i = 0; i < img.data.size(); ++i)
            if (std::abs(img.data[i] - mu.data[i]) <= 3 * 0.05) ++close;
        if (close >= static_cast<int>(0.99 * img.data.size())) ++ok_runs;
    }
    CHECK(ok_runs >= 95);
}

TEST_CASE("zero-gamma guidance hook leaves the trajectory bitwise unchanged") {
    auto scene = quad_scene(0.35);
    auto s = build_schedule(ScheduleKind::linear_beta, 1000);
    auto den = gmm_unconditional(scene.m_small, s);
    SamplerConfig cfg;
    cfg.num_sample_steps = 10;
    cfg.seed = 123;
    Trajectory plain = sample(*den, Condition::none(), cfg, s);

    GuidanceHook hook;
    for (int t : sample_time_grid(1000, 10)) hook.active_timesteps.insert(t);
    int fired = 0;
    hook.apply = [&](const LatentGrid& z, int, int) {
        ++fired;
        return z;
    };
    Trajectory guided = sample(*den, Condition::none(), cfg, s, &hook);
    CHECK(fired == 10);
    for (size_t i = 0; i < plain.size(); ++i)
        CHECK(plain.latents[i].data == guided.latents[i].data);
}

TEST_CASE("ddim_invert basics") {
    auto scene = quad_scene(1.0);
    auto s = build_schedule(ScheduleKind::linear_beta, 1000);
    SceneMixture single = scene.m_small;
    single.components.resize(1);
    single.components[0].weight = 1.0;
    auto den = gmm_unconditional(single, s);
    SamplerConfig cfg;
    cfg.num_sample_steps = 50;
    SUBCASE("eta != 0 rejected") {
        cfg.eta = 0.5;
        CHECK_THROWS_AS(
            ddim_invert(single.components[0].mean, *den, Condition::none(), cfg, s, 100),
            std::invalid_argument);
    }
    SUBCASE("t_stop at the first grid point yields just z0") {
        Trajectory traj =
            ddim_invert(single.components[0].mean, *den, Condition::none(), cfg, s, 0);
        CHECK(traj.size() == 1);
        CHECK(traj.timesteps[0] == 0);
        CHECK(grid_equal(traj.latents[0], single.components[0].mean));
    }
    SUBCASE("timesteps recorded in decreasing order up to t_stop") {
        Trajectory traj =
            ddim_invert(single.components[0].mean, *den, Condition::none(), cfg, s, 200);
        CHECK(traj.timesteps.front() == 200);
        CHECK(traj.timesteps.back() == 0);
        for (size_t i = 1; i < traj.size(); ++i)
            CHECK(traj.timesteps[i] < traj.timesteps[i - 1]);
    }
}

TEST_CASE("K=1 inversion round trip and first-order convergence") {
    auto s = build_schedule(ScheduleKind::linear_beta, 1000);
    auto layouts = quad_benchmark_layouts(16);
    SceneMixture single = mixture_from_layouts({layouts[0]}, 1.0);
    auto den = gmm_unconditional(single, s);

    LatentGrid z0 = single.components[0].mean;
    LatentGrid n = random_grid(3, 16, 16, 42);
    for (size_t i = 0; i < z0.data.size(); ++i) z0.data[i] += 0.005 * n.data[i];

    double prev_err = 1e18;
    for (int S : {25, 50, 100, 200}) {
        SamplerConfig cfg;
        cfg.num_sample_steps = S;
        Trajectory inv = ddim_invert(z0, *den, Condition::none(), cfg, s, 1000);
        LatentGrid z = inv.latents.front(); // z at t = T
        auto grid = sample_time_grid(1000, S);
        for (size_t i = grid.size(); i-- > 1;) {
            LatentGrid eps = den->predict(z, grid[i], Condition::none());
            z = ddim_step(z, grid[i], grid[i - 1], eps, s, 0.0, nullptr);
        }
        double err = std::sqrt(kernels::sum_sq_diff(z.data, z0.data)) / grid_norm(z0);
        CHECK(err < prev_err); // error decreases monotonically with S
        if (S == 200) CHECK(err <= 1e-3);
        if (S >= 50) CHECK(prev_err / err > 1.5); // ~first-order halving
        prev_err = err;
    }
}

TEST_CASE("K=1 deterministic trajectory matches the closed-form linear recursion") {
    auto s = build_schedule(ScheduleKind::linear_beta, 1000);
    auto layouts = quad_benchmark_layouts(16);
    SceneMixture single = mixture_from_layouts({layouts[0]}, 0.5);
    auto den = gmm_unconditional(single, s);
    SamplerConfig cfg;
    cfg.num_sample_steps = 50;
    cfg.seed = 4242;
    Trajectory traj = sample(*den, Condition::none(), cfg, s);

    auto grid = sample_time_grid(1000, 50);
    auto oracle = LinearDdimOracle::trajectory(traj.latents.front(),
                                               single.components[0].mean, 0.5, s, grid);
    REQUIRE(oracle.size() == traj.size());
    for (size_t i = 0; i < traj.size(); ++i)
        CHECK(grid_rms_diff(traj.latents[i], oracle[i]) < 1e-8);
}

TEST_CASE("inversion of a noise-free mixture stays finite at t=0") {
    // sigma = 0 makes the t=0 posterior degenerate; the denoiser must still
    // return a finite (zero) prediction there
    auto s = build_schedule(ScheduleKind::linear_beta, 1000);
    auto layouts = quad_benchmark_layouts(16);
    SceneMixture m0 = mixture_from_layouts({layouts[0]}, 0.0);
    auto den = gmm_unconditional(m0, s);
    SamplerConfig cfg;
    cfg.num_sample_steps = 20;
    Trajectory inv = ddim_invert(m0.components[0].mean, *den, Condition::none(), cfg, s, 500);
    for (const auto& z : inv.latents) CHECK(grid_finite(z));
}

TEST_CASE("noise_reference") {
    auto s = tiny_schedule();
    LatentGrid z0 = random_grid(1, 2, 2, 3);
    SUBCASE("t_list [0] contains z0") {
        Rng rng(1);
        Trajectory traj = noise_reference(z0, {0}, s, rng);
        CHECK(grid_equal(traj.at(0), z0));
    }
    SUBCASE("mean over draws is sqrt(ab) z0") {
        const int N = 10000, t = 2;
        Rng rng(2);
        double mean = 0;
        for (int i = 0; i < N; ++i) {
            Trajectory traj = noise_reference(z0, {t}, s, rng);
            mean += traj.at(t).at(0, 0, 0);
        }
        mean /= N;
        double want = std::sqrt(s.ab(t)) * z0.at(0, 0, 0);
        double se = std::sqrt((1 - s.ab(t)) / N);
        CHECK(std::abs(mean - want) < 4 * se);
    }
    SUBCASE("shared-eps variant is a deterministic function of (z0, one eps)") {
        Rng a(7), b(7);
        Trajectory ta = noise_reference(z0, {2, 1}, s, a, true);
        Trajectory tb = noise_reference(z0, {2, 1}, s, b, true);
        CHECK(ta.at(2).data == tb.at(2).data);
        CHECK(ta.at(1).data == tb.at(1).data);
        // entries are scalar functions of the same eps
        LatentGrid eps_implied(1, 2, 2);
        for (size_t i = 0; i < 4; ++i)
            eps_implied.data[i] =
                (ta.at(2).data[i] - std::sqrt(s.ab(2)) * z0.data[i]) / std::sqrt(1 - s.ab(2));
        LatentGrid re = forward_noise(z0, 1, eps_implied, s);
        CHECK(grid_rms_diff(re, ta.at(1)) < 1e-12);
    }
    SUBCASE("non-decreasing t_list rejected") {
        Rng rng(1);
        CHECK_THROWS_AS(noise_reference(z0, {1, 2}, s, rng), std::invalid_argument);
    }
}

TEST_CASE("ddpm sampler kind draws ancestral noise") {
    auto scene = quad_scene(0.35);
    auto s = build_schedule(ScheduleKind::linear_beta, 1000);
    auto den = gmm_unconditional(scene.m_small, s);
    SamplerConfig cfg;
    cfg.kind = SamplerKind::ddpm;
    cfg.num_sample_steps = 10;
    cfg.seed = 31;
    Trajectory a = sample(*den, Condition::none(), cfg, s);
    Trajectory b = sample(*den, Condition::none(), cfg, s);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(grid_finite(a.latents[i]));
        CHECK(a.latents[i].data == b.latents[i].data); // same seed, same draws
    }
    cfg.kind = SamplerKind::ddim;
    cfg.eta = 0.0;
    Trajectory c = sample(*den, Condition::none(), cfg, s);
    CHECK(a.latents.back().data != c.latents.back().data);
}

TEST_CASE("condition modes select component subsets") {
    auto scene = quad_scene(0.35);
    auto s = build_schedule(ScheduleKind::linear_beta, 1000);
    GmmDenoiser den(scene.m_large, s);
    LatentGrid z = random_grid(3, 48, 48, 61);
    SUBCASE("component_set matches a restricted denoiser") {
        GmmDenoiser restricted(scene.m_large, s, {1, 3});
        LatentGrid a = den.predict(z, 500, Condition::for_components({1, 3}));
        LatentGrid b = restricted.predict(z, 500, Condition::none());
        CHECK(a.data == b.data);
    }
    SUBCASE("layout condition resolves through the matching rule") {
        LatentGrid a = den.predict(z, 500, Condition::for_layout(scene.layouts[2]));
        GmmDenoiser restricted(scene.m_large, s, {2});
        LatentGrid b = restricted.predict(z, 500, Condition::none());
        CHECK(a.data == b.data);
    }
}

TEST_CASE("sampling stays finite under extreme guidance") {
    auto scene = quad_scene(0.35);
    auto s = build_schedule(ScheduleKind::linear_beta, 1000, 1e-4, 9.3e-3);
    auto den = gmm_unconditional(scene.m_small, s);
    SamplerConfig cfg;
    cfg.num_sample_steps = 10;
    cfg.seed = 11;
    LatentGrid ref_img = scene.m_small.components[0].mean;
    GuidanceConfig gc;
    gc.gamma = 1000.0;
    gc.guided_fraction = 1.0;
    Rng rng(3);
    auto grid = sample_time_grid(1000, 10);
    std::vector<int> ts(grid.rbegin(), grid.rend());
    ts.pop_back(); // drop t=0
    Trajectory ref = noise_reference(ref_img, ts, s, rng);
    GuidanceHook hook = make_guidance_hook(ref, gc, cfg, s);
    Trajectory traj = sample(*den, Condition::none(), cfg, s, &hook);
    for (const auto& z : traj.latents) CHECK(grid_finite(z));
}
