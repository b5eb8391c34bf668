#include "lsr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lsr/errors.hpp"
#include "lsr/kernels.hpp"

namespace lsr {

LatentCodec identity_codec() {
    LatentCodec c;
    c.name = "identity";
    c.encode = [](const LatentGrid& x) { return x; };
    c.decode = [](const LatentGrid& z) { return z; };
    return c;
}

LatentCodec avgpool_codec(int stride) {
    if (stride < 1) throw std::invalid_argument("avgpool_codec: stride must be >= 1");
    LatentCodec c;
    c.name = "avgpool";
    c.encode = [stride](const LatentGrid& x) { return kernels::box_downsample(x, stride); };
    c.decode = [stride](const LatentGrid& z) { return kernels::upsample_bilinear(z, stride); };
    return c;
}

LatentCodec codec_by_name(const std::string& name) {
    if (name == "identity") return identity_codec();
    if (name == "avgpool") return avgpool_codec(2);
    throw std::invalid_argument("unknown codec: " + name);
}

void PipelineConfig::validate() const {
    if (scale_factor < 2)
        throw std::invalid_argument("PipelineConfig: scale_factor must be >= 2");
    if (small_canvas < 2)
        throw std::invalid_argument("PipelineConfig: small_canvas must be >= 2");
    if (guidance.guided_fraction < 0.0 || guidance.guided_fraction > 1.0)
        throw std::invalid_argument("PipelineConfig: guided_fraction outside [0,1]");
}

LatentGrid upsample(const LatentGrid& img, int k, UpsampleMode mode) {
    if (k < 1) throw std::invalid_argument("upsample: factor must be >= 1");
    if (k == 1) return img;
    return mode == UpsampleMode::nearest ? kernels::upsample_nearest(img, k)
                                         : kernels::upsample_bilinear(img, k);
}

namespace {

// The diffusion runs in the codec's latent space. Identity keeps the pixel
// mixture; other codecs get their templates encoded (averaging white pixel
// noise over stride^2 pixels scales its sigma by 1/stride).
SceneMixture latent_mixture(const SceneMixture& m, const PipelineConfig& pc) {
    if (pc.codec == "identity") return m;
    LatentCodec codec = codec_by_name(pc.codec);
    SceneMixture out;
    out.pixel_sigma = m.pixel_sigma;
    for (const auto& c : m.components)
        out.components.push_back({c.layout, codec.encode(c.mean), c.weight});
    if (pc.codec == "avgpool") out.pixel_sigma = m.pixel_sigma / 2.0;
    return out;
}

// Optional per-layout gamma boost: smaller boxes get proportionally more
// guidance strength, normalized so a quarter-canvas mean box area is 1x.
double area_gamma_multiplier(const LayoutSpec& layout) {
    double mean_area = 0.0;
    for (const auto& b : layout.boxes) mean_area += b.w * b.h;
    mean_area /= layout.boxes.size();
    double mult = 0.25 / std::max(mean_area, 1e-6);
    return std::min(std::max(mult, 0.25), 4.0);
}

// Stage seeds derive from one run key so they do not depend on how many
// draws an earlier stage consumed (the reference kind changes that).
Reference generate_reference_keyed(const LayoutSpec& layout, const SceneMixture& m_small,
                                   const SceneMixture& m_large, const PipelineConfig& pc,
                                   const NoiseSchedule& s, uint64_t run_key) {
    pc.validate();
    Reference ref;

    // small-scale conditional stage
    auto den_small = gmm_conditional(m_small, layout, s);
    SamplerConfig small_cfg = pc.small_sampler;
    small_cfg.seed = mix_seed(run_key, 1);
    Trajectory small_traj = sample(*den_small, Condition::none(), small_cfg, s);
    ref.small_image = small_traj.latents.back();

    ref.upsampled = upsample(ref.small_image, pc.scale_factor, pc.upsample);
    ref.z_bar0 = codec_by_name(pc.codec).encode(ref.upsampled);

    auto guided = guided_step_set(pc.large_sampler, pc.guidance, s.num_steps);
    if (guided.empty() || pc.guidance.gamma == 0.0) return ref;

    int t_max = *std::max_element(guided.begin(), guided.end());
    if (pc.reference == ReferenceKind::invert) {
        auto den_large = gmm_unconditional(latent_mixture(m_large, pc), s);
        SamplerConfig inv_cfg = pc.large_sampler;
        inv_cfg.eta = 0.0;
        ref.trajectory =
            ddim_invert(ref.z_bar0, *den_large, Condition::none(), inv_cfg, s, t_max);
    } else {
        Rng ref_rng(mix_seed(run_key, 2));
        std::vector<int> ts = guided; // decreasing already
        ref.trajectory = noise_reference(ref.z_bar0, ts, s, ref_rng, pc.shared_noise_eps);
    }
    for (int t : guided)
        if (!ref.trajectory.has(t))
            throw ReferenceGapError("reference trajectory missing guided timestep " +
                                    std::to_string(t));
    return ref;
}

} // namespace

Reference generate_reference(const LayoutSpec& layout, const SceneMixture& m_small,
                             const SceneMixture& m_large, const PipelineConfig& pc,
                             const NoiseSchedule& s, Rng& rng) {
    return generate_reference_keyed(layout, m_small, m_large, pc, s, rng.next_u64());
}

PipelineResult lsregen_generate(const LayoutSpec& layout, const SceneMixture& m_small,
                                const SceneMixture& m_large, const PipelineConfig& pc,
                                const NoiseSchedule& s, Rng& rng) {
    pc.validate();
    uint64_t run_key = rng.next_u64();
    PipelineResult res;
    res.reference = generate_reference_keyed(layout, m_small, m_large, pc, s, run_key);

    auto den_large = gmm_unconditional(latent_mixture(m_large, pc), s);
    SamplerConfig large_cfg = pc.large_sampler;
    large_cfg.seed = mix_seed(run_key, 3);

    GuidanceHook hook;
    const GuidanceHook* hook_ptr = nullptr;
    if (res.reference.trajectory.size() > 0 && pc.guidance.gamma != 0.0) {
        GuidanceConfig gc = pc.guidance;
        if (pc.guidance.area_scaled_gamma) gc.gamma *= area_gamma_multiplier(layout);
        hook = make_guidance_hook(res.reference.trajectory, gc, large_cfg, s);
        hook_ptr = &hook;
        res.guided_steps = static_cast<int>(hook.active_timesteps.size());
    }

    res.trajectory = sample(*den_large, Condition::none(), large_cfg, s, hook_ptr);
    res.image = codec_by_name(pc.codec).decode(res.trajectory.latents.back());
    return res;
}

} // namespace lsr
