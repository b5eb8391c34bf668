#pragma once

#include <functional>
#include <string>

#include "lsr/denoiser.hpp"
#include "lsr/guidance.hpp"
#include "lsr/sampler.hpp"
#include "lsr/scene.hpp"

namespace lsr {

/// Image <-> latent codec. Identity at desk scale; an avgpool codec
/// (strided-average encode, bilinear decode) exercises the encode step.
struct LatentCodec {
    std::string name;
    std::function<LatentGrid(const LatentGrid&)> encode;
    std::function<LatentGrid(const LatentGrid&)> decode;
};

LatentCodec identity_codec();
LatentCodec avgpool_codec(int stride);
LatentCodec codec_by_name(const std::string& name);

enum class UpsampleMode { nearest, bilinear };
enum class ReferenceKind { invert, noise };

struct PipelineConfig {
    int small_canvas = 16;
    int scale_factor = 3; // large = k * small
    UpsampleMode upsample = UpsampleMode::bilinear;
    ReferenceKind reference = ReferenceKind::invert;
    bool shared_noise_eps = false; // shared-eps variant of the noise reference
    SamplerConfig small_sampler;
    SamplerConfig large_sampler;
    GuidanceConfig guidance;
    std::string codec = "identity";

    int large_canvas() const { return small_canvas * scale_factor; }
    void validate() const;
};

LatentGrid upsample(const LatentGrid& img, int k, UpsampleMode mode);

struct Reference {
    LatentGrid z_bar0;       // encoded upsampled small-scale image
    LatentGrid upsampled;    // pre-encode image (equal for identity codec)
    LatentGrid small_image;  // small-stage sample
    Trajectory trajectory;   // covers the guided timesteps (empty if none)
};

/// Small-scale conditional generation -> upsample -> encode -> reference
/// trajectory over the guided timesteps (DDIM inversion with the large-canvas
/// unconditional denoiser by default, forward noising as the alternative).
Reference generate_reference(const LayoutSpec& layout, const SceneMixture& m_small,
                             const SceneMixture& m_large, const PipelineConfig& pc,
                             const NoiseSchedule& s, Rng& rng);

struct PipelineResult {
    LatentGrid image;
    Trajectory trajectory;
    Reference reference;
    int guided_steps = 0;
};

/// End-to-end large-scale regional generation: guided sampling with the
/// large-canvas unconditional denoiser, guidance active on the first
/// ceil(fraction * S) steps, then standard steps; decodes the final latent.
PipelineResult lsregen_generate(const LayoutSpec& layout, const SceneMixture& m_small,
                                const SceneMixture& m_large, const PipelineConfig& pc,
                                const NoiseSchedule& s, Rng& rng);

} // namespace lsr
