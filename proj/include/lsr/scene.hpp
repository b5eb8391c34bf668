#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "lsr/grid.hpp"
#include "lsr/rng.hpp"

namespace lsr {

/// Axis-aligned box in normalized coordinates, top-left origin.
struct BoundingBox {
    double x = 0, y = 0; // top-left in [0,1)
    double w = 0, h = 0; // extents in (0,1]
    std::string label;
};

struct LayoutSpec {
    std::vector<BoundingBox> boxes;
    int canvas_h = 0, canvas_w = 0;

    // Checks box geometry and the 1..8 box-count rule; throws on violation.
    void validate() const;
};

using Palette = std::map<std::string, std::array<double, 3>>;

/// Eight classes, each a distinct unit color vector in 3 channels.
const Palette& default_palette();

/// Renders a layout: background 0 everywhere; inside each box a flat-topped
/// cosine-tapered blob of the label's color (value 1 at the box center, 0 on
/// the box boundary, support exactly the box), alpha-composited in box order.
/// The blob radius is the box-metric max(|dx|/hw, |dy|/hh); the profile is 1
/// up to radius 0.75 and rolls off as cos^2 to the boundary.
LatentGrid render_template(const LayoutSpec& layout, int canvas_h, int canvas_w,
                           const Palette& palette = default_palette());

constexpr double kBlobFlatFraction = 0.75;

/// Finite mixture over rendered templates with isotropic pixel noise;
/// the desk-scale stand-in for the distribution a pretrained model encodes.
struct SceneMixture {
    struct Component {
        LayoutSpec layout;
        LatentGrid mean;
        double weight = 0;
    };
    std::vector<Component> components;
    double pixel_sigma = 0;

    int canvas_h() const { return components.front().mean.height; }
    int canvas_w() const { return components.front().mean.width; }
    int channels() const { return components.front().mean.channels; }
};

/// Uniform-weight mixture from layouts sharing a canvas.
SceneMixture mixture_from_layouts(const std::vector<LayoutSpec>& layouts,
                                  double pixel_sigma,
                                  const Palette& palette = default_palette());

/// Same family re-rendered at another canvas (boxes are normalized).
SceneMixture mixture_at_canvas(const SceneMixture& m, int canvas_h, int canvas_w,
                               const Palette& palette = default_palette());

/// Draws (component, template + sigma * gaussian noise).
std::pair<LatentGrid, int> sample_scene(const SceneMixture& m, Rng& rng);

/// Built-in benchmark family "quad": four 2-box layouts whose same-label
/// boxes occupy the four corner pairings, pairwise disjoint.
std::vector<LayoutSpec> quad_benchmark_layouts(int canvas = 48);

} // namespace lsr
