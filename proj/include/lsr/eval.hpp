#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lsr/grid.hpp"
#include "lsr/scene.hpp"

namespace lsr {

struct DetectedBox {
    BoundingBox box;       // tight rectangle of the largest connected component
    double centroid_x = 0; // centroid of the full thresholded mask, normalized
    double centroid_y = 0;
    int mask_pixels = 0;
};

/// Threshold the projection of each pixel onto the label's unit color;
/// fit the largest 4-connected component. Empty mask -> nullopt.
std::optional<DetectedBox> detect_box(const LatentGrid& img, const std::string& label,
                                      const Palette& palette, double threshold = 0.5);

struct BoxAdherence {
    bool detected = false;
    bool centroid_in_box = false;
    double iou = 0.0;
};

struct AdherenceReport {
    std::vector<BoxAdherence> per_box;
    double adherence_rate = 0; // fraction of boxes with IoU >= threshold
    double mean_iou = 0;
    double detection_rate = 0;
};

AdherenceReport adherence(const LatentGrid& img, const LayoutSpec& layout,
                          const Palette& palette = default_palette(),
                          double iou_threshold = 0.5, double detect_threshold = 0.5);

/// Pearson correlation between low-passed copies of a and b.
/// Throws UndefinedCorrelationError on zero variance.
double lowband_correlation(const LatentGrid& a, const LatentGrid& b, double cutoff_fraction);

struct FidelityReport {
    double template_rms = 0;  // RMS to the nearest mixture template
    double lowband_corr = 0;  // low-band correlation with the nearest template
    int nearest_component = -1;
};

FidelityReport fidelity(const LatentGrid& img, const SceneMixture& m,
                        double lowband_cutoff = 0.2);

/// Mean pairwise RMS distance across a batch of images.
double diversity(const std::vector<LatentGrid>& images);

struct BootstrapCI {
    double mean = 0, lo = 0, hi = 0;
};

/// Percentile bootstrap CI of the mean; deterministic for a fixed seed.
BootstrapCI bootstrap_mean_ci(const std::vector<double>& xs, int resamples = 1000,
                              double alpha = 0.05, uint64_t seed = 17);

struct TrendGroup {
    double knob_value = 0;
    BootstrapCI adherence;
    BootstrapCI template_rms;
};

struct TrendReport {
    std::string knob;
    std::vector<TrendGroup> groups;       // sorted by knob value
    std::string adherence_verdict;        // increasing | decreasing | flat
    std::string fidelity_verdict;         // on template_rms
};

/// Groups runs by knob value and emits monotonicity verdicts with bootstrap
/// CIs. Requires at least two distinct knob values.
TrendReport trend_report(const std::string& knob,
                         const std::vector<double>& knob_values,
                         const std::vector<double>& adherence_rates,
                         const std::vector<double>& template_rmss);

} // namespace lsr
