#include "lsr/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "lsr/errors.hpp"
#include "lsr/kernels.hpp"

namespace lsr {

Condition Condition::for_layout(LayoutSpec l) {
    Condition c;
    c.mode = Mode::layout;
    c.layout = std::move(l);
    return c;
}

Condition Condition::for_components(std::vector<int> idx) {
    Condition c;
    c.mode = Mode::component_set;
    c.components = std::move(idx);
    return c;
}

namespace {

std::vector<std::vector<double>> subset_means(const SceneMixture& m,
                                              const std::vector<int>& subset) {
    std::vector<std::vector<double>> mus;
    mus.reserve(subset.size());
    for (int k : subset) mus.push_back(m.components[static_cast<size_t>(k)].mean.data);
    return mus;
}

} // namespace

std::vector<double> gmm_responsibilities(const LatentGrid& z_t, int t,
                                         const SceneMixture& m,
                                         const std::vector<int>& subset,
                                         const NoiseSchedule& s) {
    if (subset.empty())
        throw std::invalid_argument("gmm_responsibilities: empty component subset");
    s.check_t(t);
    double ab = s.ab(t);
    double sigma2 = m.pixel_sigma * m.pixel_sigma;
    double v = ab * sigma2 + (1.0 - ab);
    auto mus = subset_means(m, subset);
    auto d2 = kernels::scaled_sq_dists(z_t.data, mus, std::sqrt(ab));

    // degenerate posterior (sigma = 0 at t = 0): all mass on the nearest mean
    if (v < 1e-12) {
        std::vector<double> r(subset.size(), 0.0);
        size_t best = static_cast<size_t>(
            std::min_element(d2.begin(), d2.end()) - d2.begin());
        r[best] = 1.0;
        return r;
    }

    // log r_k = log w_k - d2_k / (2v), normalized by log-sum-exp
    std::vector<double> logr(subset.size());
    for (size_t i = 0; i < subset.size(); ++i)
        logr[i] = std::log(m.components[static_cast<size_t>(subset[i])].weight) -
                  d2[i] / (2.0 * v);
    double mx = *std::max_element(logr.begin(), logr.end());
    double denom = 0.0;
    for (double& lr : logr) {
        lr = std::exp(lr - mx);
        denom += lr;
    }
    for (double& r : logr) r /= denom;
    return logr;
}

LatentGrid gmm_posterior_mean(const LatentGrid& z_t, int t, const SceneMixture& m,
                              const std::vector<int>& subset, const NoiseSchedule& s) {
    auto resp = gmm_responsibilities(z_t, t, m, subset, s);
    double ab = s.ab(t);
    double sigma2 = m.pixel_sigma * m.pixel_sigma;
    double v = ab * sigma2 + (1.0 - ab);
    // mu_hat_k = ((1-ab) mu_k + sqrt(ab) sigma^2 z) / v; mix with resp.
    // v = 0 only for sigma = 0 at t = 0, where the posterior is the mean itself.
    double cz = v < 1e-12 ? 0.0 : std::sqrt(ab) * sigma2 / v;
    double cm = v < 1e-12 ? 1.0 : (1.0 - ab) / v;
    auto mus = subset_means(m, subset);
    LatentGrid out(z_t.channels, z_t.height, z_t.width);
    kernels::mix_combine(z_t.data, mus, resp, cz, cm, out.data);
    return out;
}

LatentGrid posterior_mean_to_eps(const LatentGrid& z_t, int t, const LatentGrid& x0_hat,
                                 const NoiseSchedule& s) {
    s.check_t(t);
    if (t == 0)
        throw std::invalid_argument("posterior_mean_to_eps: undefined at t=0");
    require_same_shape(z_t, x0_hat, "posterior_mean_to_eps");
    double ab = s.ab(t);
    double inv = 1.0 / std::sqrt(1.0 - ab);
    LatentGrid out(z_t.channels, z_t.height, z_t.width);
    kernels::axpby(inv, z_t.data, -std::sqrt(ab) * inv, x0_hat.data, out.data);
    return out;
}

GmmDenoiser::GmmDenoiser(SceneMixture mixture, NoiseSchedule schedule,
                         std::vector<int> base_subset)
    : mixture_(std::move(mixture)), schedule_(std::move(schedule)),
      base_subset_(std::move(base_subset)) {
    if (base_subset_.empty()) {
        base_subset_.resize(mixture_.components.size());
        std::iota(base_subset_.begin(), base_subset_.end(), 0);
    }
}

std::vector<int> GmmDenoiser::resolve(const Condition& cond) const {
    switch (cond.mode) {
        case Condition::Mode::unconditional: return base_subset_;
        case Condition::Mode::component_set: return cond.components;
        case Condition::Mode::layout: return matching_components(mixture_, cond.layout);
    }
    return base_subset_;
}

// eps_hat = sqrt(1-ab) (z - sqrt(ab) mu_mix) / v. Algebraically equal to
// posterior_mean_to_eps(gmm_posterior_mean(...)) for t >= 1 and finite at
// t = 0 (it vanishes there), which the inversion start requires.
LatentGrid GmmDenoiser::predict(const LatentGrid& z_t, int t, const Condition& cond) const {
    auto subset = resolve(cond);
    auto resp = gmm_responsibilities(z_t, t, mixture_, subset, schedule_);
    double ab = schedule_.ab(t);
    double sigma2 = mixture_.pixel_sigma * mixture_.pixel_sigma;
    double v = ab * sigma2 + (1.0 - ab);
    // sqrt(1-ab) vanishes with v only at t=0 with sigma=0; the limit is 0
    double c = v < 1e-12 ? 0.0 : std::sqrt(1.0 - ab) / v;
    auto mus = subset_means(mixture_, subset);
    LatentGrid out(z_t.channels, z_t.height, z_t.width);
    kernels::mix_combine(z_t.data, mus, resp, c, -c * std::sqrt(ab), out.data);
    return out;
}

double box_iou(const BoundingBox& a, const BoundingBox& b) {
    double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    double inter = ix * iy;
    double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

// Identical label multiset and every box IoU >= 0.9 with a distinct
// same-label template box (greedy best-IoU assignment).
bool layout_matches(const LayoutSpec& a, const LayoutSpec& b) {
    if (a.boxes.size() != b.boxes.size()) return false;
    std::map<std::string, int> count;
    for (const auto& x : a.boxes) count[x.label]++;
    for (const auto& x : b.boxes) count[x.label]--;
    for (const auto& [_, c] : count)
        if (c != 0) return false;
    std::vector<bool> used(b.boxes.size(), false);
    for (const auto& box : a.boxes) {
        double best = -1.0;
        int best_j = -1;
        for (size_t j = 0; j < b.boxes.size(); ++j) {
            if (used[j] || b.boxes[j].label != box.label) continue;
            double iou = box_iou(box, b.boxes[j]);
            if (iou > best) {
                best = iou;
                best_j = static_cast<int>(j);
            }
        }
        if (best_j < 0 || best < 0.9) return false;
        used[static_cast<size_t>(best_j)] = true;
    }
    return true;
}

} // namespace

std::vector<int> matching_components(const SceneMixture& m, const LayoutSpec& layout) {
    std::vector<int> out;
    for (size_t k = 0; k < m.components.size(); ++k)
        if (layout_matches(layout, m.components[k].layout))
            out.push_back(static_cast<int>(k));
    return out;
}

std::shared_ptr<GmmDenoiser> gmm_conditional(const SceneMixture& m, const LayoutSpec& layout,
                                             const NoiseSchedule& s) {
    auto subset = matching_components(m, layout);
    if (subset.empty())
        throw NoMatchingLayoutError("gmm_conditional: layout matches no mixture component");
    return std::make_shared<GmmDenoiser>(m, s, std::move(subset));
}

std::shared_ptr<GmmDenoiser> gmm_unconditional(const SceneMixture& m, const NoiseSchedule& s) {
    return std::make_shared<GmmDenoiser>(m, s);
}

LatentGrid cfg_combine(const LatentGrid& uncond, const LatentGrid& cond, double w) {
    require_same_shape(uncond, cond, "cfg_combine");
    LatentGrid out(uncond.channels, uncond.height, uncond.width);
    kernels::axpby(1.0 - w, uncond.data, w, cond.data, out.data);
    return out;
}

} // namespace lsr
