#include "lsr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lsr/denoiser.hpp"
#include "lsr/errors.hpp"
#include "lsr/kernels.hpp"
#include "lsr/rng.hpp"

namespace lsr {

namespace {

// Largest 4-connected component of mask; returns pixel count and writes the
// component's bounding rectangle (pixel indices, inclusive).
int largest_component(const std::vector<uint8_t>& mask, int H, int W,
                      int& y0, int& y1, int& x0, int& x1) {
    std::vector<int> label(static_cast<size_t>(H) * W, -1);
    int best_n = 0;
    int cur = 0;
    std::vector<int> stack;
    for (int start = 0; start < H * W; ++start) {
        if (!mask[static_cast<size_t>(start)] || label[static_cast<size_t>(start)] >= 0)
            continue;
        stack.assign(1, start);
        label[static_cast<size_t>(start)] = cur;
        int n = 0;
        int by0 = H, by1 = -1, bx0 = W, bx1 = -1;
        while (!stack.empty()) {
            int p = stack.back();
            stack.pop_back();
            ++n;
            int py = p / W, px = p % W;
            by0 = std::min(by0, py); by1 = std::max(by1, py);
            bx0 = std::min(bx0, px); bx1 = std::max(bx1, px);
            const int dy[4] = {1, -1, 0, 0};
            const int dx[4] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                int ny = py + dy[d], nx = px + dx[d];
                if (ny < 0 || ny >= H || nx < 0 || nx >= W) continue;
                int q = ny * W + nx;
                if (mask[static_cast<size_t>(q)] && label[static_cast<size_t>(q)] < 0) {
                    label[static_cast<size_t>(q)] = cur;
                    stack.push_back(q);
                }
            }
        }
        if (n > best_n) {
            best_n = n;
            y0 = by0; y1 = by1; x0 = bx0; x1 = bx1;
        }
        ++cur;
    }
    return best_n;
}

} // namespace

std::optional<DetectedBox> detect_box(const LatentGrid& img, const std::string& label,
                                      const Palette& palette, double threshold) {
    auto it = palette.find(label);
    if (it == palette.end())
        throw std::invalid_argument("detect_box: unknown label '" + label + "'");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw std::invalid_argument("detect_box: threshold must be in (0,1)");
    if (img.channels != 3)
        throw std::invalid_argument("detect_box: expected a 3-channel image");
    const auto& col = it->second;
    const int H = img.height, W = img.width;

    std::vector<uint8_t> mask(static_cast<size_t>(H) * W, 0);
    double cx = 0, cy = 0;
    int count = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double proj = col[0] * img.at(0, y, x) + col[1] * img.at(1, y, x) +
                          col[2] * img.at(2, y, x);
            if (proj > threshold) {
                mask[static_cast<size_t>(y) * W + x] = 1;
                cx += x + 0.5;
                cy += y + 0.5;
                ++count;
            }
        }
    if (count == 0) return std::nullopt;

    int y0 = 0, y1 = 0, x0 = 0, x1 = 0;
    int n = largest_component(mask, H, W, y0, y1, x0, x1);

    DetectedBox det;
    det.mask_pixels = n;
    det.centroid_x = cx / count / W;
    det.centroid_y = cy / count / H;
    det.box.x = double(x0) / W;
    det.box.y = double(y0) / H;
    det.box.w = double(x1 + 1 - x0) / W;
    det.box.h = double(y1 + 1 - y0) / H;
    det.box.label = label;
    return det;
}

AdherenceReport adherence(const LatentGrid& img, const LayoutSpec& layout,
                          const Palette& palette, double iou_threshold,
                          double detect_threshold) {
    AdherenceReport rep;
    int placed = 0, detected = 0;
    double iou_sum = 0.0;
    for (const auto& box : layout.boxes) {
        BoxAdherence ba;
        auto det = detect_box(img, box.label, palette, detect_threshold);
        if (det) {
            ba.detected = true;
            ba.iou = box_iou(det->box, box);
            ba.centroid_in_box = det->centroid_x >= box.x && det->centroid_x <= box.x + box.w &&
                                 det->centroid_y >= box.y && det->centroid_y <= box.y + box.h;
            ++detected;
        }
        if (ba.detected && ba.iou >= iou_threshold) ++placed;
        iou_sum += ba.iou;
        rep.per_box.push_back(ba);
    }
    size_t n = layout.boxes.size();
    rep.adherence_rate = n ? double(placed) / n : 0.0;
    rep.detection_rate = n ? double(detected) / n : 0.0;
    rep.mean_iou = n ? iou_sum / n : 0.0;
    return rep;
}

double lowband_correlation(const LatentGrid& a, const LatentGrid& b, double cutoff_fraction) {
    require_same_shape(a, b, "lowband_correlation");
    LatentGrid la = kernels::dft_lowpass(a, cutoff_fraction);
    LatentGrid lb = kernels::dft_lowpass(b, cutoff_fraction);
    size_t n = la.data.size();
    double ma = 0, mb = 0;
    for (size_t i = 0; i < n; ++i) {
        ma += la.data[i];
        mb += lb.data[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (size_t i = 0; i < n; ++i) {
        double da = la.data[i] - ma, db = lb.data[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    // constant inputs reach here with only DFT roundoff as "variance"
    if (saa <= 1e-20 || sbb <= 1e-20)
        throw UndefinedCorrelationError("lowband_correlation: zero-variance input");
    return sab / std::sqrt(saa * sbb);
}

FidelityReport fidelity(const LatentGrid& img, const SceneMixture& m, double lowband_cutoff) {
    FidelityReport rep;
    double best = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < m.components.size(); ++k) {
        double rms = grid_rms_diff(img, m.components[k].mean);
        if (rms < best) {
            best = rms;
            rep.nearest_component = static_cast<int>(k);
        }
    }
    rep.template_rms = best;
    rep.lowband_corr =
        lowband_correlation(img, m.components[static_cast<size_t>(rep.nearest_component)].mean,
                            lowband_cutoff);
    return rep;
}

double diversity(const std::vector<LatentGrid>& images) {
    if (images.size() < 2) return 0.0;
    double sum = 0.0;
    int pairs = 0;
    for (size_t i = 0; i < images.size(); ++i)
        for (size_t j = i + 1; j < images.size(); ++j) {
            sum += grid_rms_diff(images[i], images[j]);
            ++pairs;
        }
    return sum / pairs;
}

BootstrapCI bootstrap_mean_ci(const std::vector<double>& xs, int resamples, double alpha,
                              uint64_t seed) {
    if (xs.empty()) throw std::invalid_argument("bootstrap_mean_ci: empty sample");
    BootstrapCI ci;
    ci.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    Rng rng(seed);
    std::vector<double> means(static_cast<size_t>(resamples));
    for (int r = 0; r < resamples; ++r) {
        double s = 0.0;
        for (size_t i = 0; i < xs.size(); ++i) {
            size_t idx = static_cast<size_t>(rng.uniform() * xs.size());
            if (idx >= xs.size()) idx = xs.size() - 1;
            s += xs[idx];
        }
        means[static_cast<size_t>(r)] = s / xs.size();
    }
    std::sort(means.begin(), means.end());
    auto pick = [&](double q) {
        double pos = q * (means.size() - 1);
        size_t lo = static_cast<size_t>(pos);
        size_t hi = std::min(lo + 1, means.size() - 1);
        double f = pos - lo;
        return means[lo] * (1 - f) + means[hi] * f;
    };
    ci.lo = pick(alpha / 2);
    ci.hi = pick(1 - alpha / 2);
    return ci;
}

TrendReport trend_report(const std::string& knob, const std::vector<double>& knob_values,
                         const std::vector<double>& adherence_rates,
                         const std::vector<double>& template_rmss) {
    if (knob_values.size() != adherence_rates.size() ||
        knob_values.size() != template_rmss.size())
        throw std::invalid_argument("trend_report: mismatched input lengths");

    std::vector<double> distinct = knob_values;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2)
        throw std::invalid_argument("trend_report: need at least two distinct knob values");

    TrendReport rep;
    rep.knob = knob;
    for (double v : distinct) {
        std::vector<double> adh, rms;
        for (size_t i = 0; i < knob_values.size(); ++i)
            if (knob_values[i] == v) {
                adh.push_back(adherence_rates[i]);
                rms.push_back(template_rmss[i]);
            }
        TrendGroup g;
        g.knob_value = v;
        g.adherence = bootstrap_mean_ci(adh);
        g.template_rms = bootstrap_mean_ci(rms);
        rep.groups.push_back(g);
    }

    auto verdict = [](const BootstrapCI& lo_group, const BootstrapCI& hi_group) {
        if (hi_group.lo > lo_group.hi) return std::string("increasing");
        if (hi_group.hi < lo_group.lo) return std::string("decreasing");
        return std::string("flat");
    };
    rep.adherence_verdict = verdict(rep.groups.front().adherence, rep.groups.back().adherence);
    rep.fidelity_verdict =
        verdict(rep.groups.front().template_rms, rep.groups.back().template_rms);
    return rep;
}

} // namespace lsr
