#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "lsr/grid.hpp"
#include "lsr/scene.hpp"
#include "lsr/schedule.hpp"

namespace lsr {

/// Conditioning slot for a denoiser evaluation.
struct Condition {
    enum class Mode { unconditional, layout, component_set };
    Mode mode = Mode::unconditional;
    LayoutSpec layout;            // valid when mode == layout
    std::vector<int> components;  // valid when mode == component_set

    static Condition none() { return {}; }
    static Condition for_layout(LayoutSpec l);
    static Condition for_components(std::vector<int> idx);
};

/// Noise-prediction interface eps(z_t, t, cond). Implementations are
/// immutable after construction; predict is pure and re-entrant.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual LatentGrid predict(const LatentGrid& z_t, int t, const Condition& cond) const = 0;
    virtual int channels() const = 0;
    virtual int height() const = 0;
    virtual int width() const = 0;
};

/// E[z_0 | z_t] under the mixture restricted to `subset`.
/// Responsibilities r_k are computed with log-sum-exp; the output is
/// sum_k r_k * mu_hat_k with mu_hat_k the conjugate-Gaussian posterior mean.
LatentGrid gmm_posterior_mean(const LatentGrid& z_t, int t, const SceneMixture& m,
                              const std::vector<int>& subset, const NoiseSchedule& s);

/// Responsibilities alone (shared by the posterior mean and the denoiser).
std::vector<double> gmm_responsibilities(const LatentGrid& z_t, int t,
                                         const SceneMixture& m,
                                         const std::vector<int>& subset,
                                         const NoiseSchedule& s);

/// eps_hat = (z_t - sqrt(ab_t) x0_hat) / sqrt(1 - ab_t). Requires t >= 1.
LatentGrid posterior_mean_to_eps(const LatentGrid& z_t, int t,
                                 const LatentGrid& x0_hat, const NoiseSchedule& s);

/// Closed-form Bayes denoiser for a SceneMixture. The prediction equals
/// posterior_mean_to_eps(gmm_posterior_mean(...)) for t >= 1 and extends
/// continuously to t = 0 (where it is zero), which DDIM inversion needs.
class GmmDenoiser final : public Denoiser {
public:
    GmmDenoiser(SceneMixture mixture, NoiseSchedule schedule,
                std::vector<int> base_subset = {});

    LatentGrid predict(const LatentGrid& z_t, int t, const Condition& cond) const override;
    int channels() const override { return mixture_.channels(); }
    int height() const override { return mixture_.canvas_h(); }
    int width() const override { return mixture_.canvas_w(); }

    const SceneMixture& mixture() const { return mixture_; }
    const std::vector<int>& base_subset() const { return base_subset_; }

private:
    std::vector<int> resolve(const Condition& cond) const;
    SceneMixture mixture_;
    NoiseSchedule schedule_;
    std::vector<int> base_subset_; // components used for unconditional predicts
};

/// Components whose layout matches: identical label multiset and every box
/// IoU >= 0.9 with a same-label template box.
std::vector<int> matching_components(const SceneMixture& m, const LayoutSpec& layout);

/// Denoiser restricted to the matching components; the stand-in for the
/// pretrained layout-to-image model. Throws NoMatchingLayoutError.
std::shared_ptr<GmmDenoiser> gmm_conditional(const SceneMixture& m, const LayoutSpec& layout,
                                             const NoiseSchedule& s);

std::shared_ptr<GmmDenoiser> gmm_unconditional(const SceneMixture& m, const NoiseSchedule& s);

/// Classifier-free guidance combine: uncond + w * (cond - uncond).
LatentGrid cfg_combine(const LatentGrid& uncond, const LatentGrid& cond, double w);

double box_iou(const BoundingBox& a, const BoundingBox& b);

} // namespace lsr
