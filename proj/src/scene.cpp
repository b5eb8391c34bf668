#include "lsr/scene.hpp"

#include <cmath>
#include <stdexcept>

#include "lsr/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lsr {

void LayoutSpec::validate() const {
    if (canvas_h <= 0 || canvas_w <= 0)
        throw LayoutInvariantError("canvas", "canvas dimensions must be positive");
    if (boxes.empty() || boxes.size() > 8)
        throw LayoutInvariantError("boxes", "layout must contain between 1 and 8 boxes");
    for (size_t i = 0; i < boxes.size(); ++i) {
        const auto& b = boxes[i];
        std::string at = "boxes[" + std::to_string(i) + "]";
        if (!(b.x >= 0.0 && b.x < 1.0) || !(b.y >= 0.0 && b.y < 1.0))
            throw LayoutInvariantError(at, "box origin must lie in [0,1)");
        if (!(b.w > 0.0 && b.w <= 1.0) || !(b.h > 0.0 && b.h <= 1.0))
            throw LayoutInvariantError(at, "box extents must lie in (0,1]");
        if (b.x + b.w > 1.0 + 1e-12)
            throw LayoutInvariantError(at + ".x", "box exceeds canvas: x+w > 1");
        if (b.y + b.h > 1.0 + 1e-12)
            throw LayoutInvariantError(at + ".y", "box exceeds canvas: y+h > 1");
        if (b.label.empty())
            throw LayoutInvariantError(at + ".label", "label must be non-empty");
    }
}

const Palette& default_palette() {
    static const Palette p = [] {
        auto unit = [](double r, double g, double b) {
            double n = std::sqrt(r * r + g * g + b * b);
            return std::array<double, 3>{r / n, g / n, b / n};
        };
        Palette pal;
        pal["red"] = unit(1, 0, 0);
        pal["green"] = unit(0, 1, 0);
        pal["blue"] = unit(0, 0, 1);
        pal["yellow"] = unit(1, 1, 0);
        pal["magenta"] = unit(1, 0, 1);
        pal["cyan"] = unit(0, 1, 1);
        pal["orange"] = unit(1, 0.5, 0);
        pal["purple"] = unit(0.5, 0, 1);
        return pal;
    }();
    return p;
}

namespace {

// Flat-topped cosine taper over the box-metric radius; support is the box.
inline double blob_alpha(double rho) {
    if (rho <= kBlobFlatFraction) return 1.0;
    if (rho >= 1.0) return 0.0;
    double s = (rho - kBlobFlatFraction) / (1.0 - kBlobFlatFraction);
    double c = std::cos(M_PI / 2.0 * s);
    return c * c;
}

} // namespace

LatentGrid render_template(const LayoutSpec& layout, int canvas_h, int canvas_w,
                           const Palette& palette) {
    for (const auto& b : layout.boxes)
        if (palette.find(b.label) == palette.end())
            throw std::invalid_argument("render_template: unknown label '" + b.label + "'");

    LatentGrid img(3, canvas_h, canvas_w, 0.0);
    struct Blob {
        double cx, cy, hw, hh;
        std::array<double, 3> color;
    };
    std::vector<Blob> blobs;
    blobs.reserve(layout.boxes.size());
    for (const auto& b : layout.boxes)
        blobs.push_back({b.x + b.w / 2.0, b.y + b.h / 2.0, b.w / 2.0, b.h / 2.0,
                         palette.at(b.label)});

#pragma omp parallel for schedule(static) if (canvas_h > 16)
    for (int py = 0; py < canvas_h; ++py) {
        double ny = (py + 0.5) / canvas_h;
        for (int px = 0; px < canvas_w; ++px) {
            double nx = (px + 0.5) / canvas_w;
            double r = 0, g = 0, b = 0;
            for (const auto& bl : blobs) {
                double rho = std::max(std::abs(nx - bl.cx) / bl.hw,
                                      std::abs(ny - bl.cy) / bl.hh);
                double a = blob_alpha(rho);
                if (a > 0.0) {
                    r = (1 - a) * r + a * bl.color[0];
                    g = (1 - a) * g + a * bl.color[1];
                    b = (1 - a) * b + a * bl.color[2];
                }
            }
            img.at(0, py, px) = r;
            img.at(1, py, px) = g;
            img.at(2, py, px) = b;
        }
    }
    return img;
}

SceneMixture mixture_from_layouts(const std::vector<LayoutSpec>& layouts,
                                  double pixel_sigma, const Palette& palette) {
    if (layouts.empty())
        throw std::invalid_argument("mixture_from_layouts: empty layout list");
    int h = layouts.front().canvas_h, w = layouts.front().canvas_w;
    for (const auto& l : layouts)
        if (l.canvas_h != h || l.canvas_w != w)
            throw std::invalid_argument("mixture_from_layouts: inconsistent canvases");
    SceneMixture m;
    m.pixel_sigma = pixel_sigma;
    double wgt = 1.0 / layouts.size();
    for (const auto& l : layouts)
        m.components.push_back({l, render_template(l, h, w, palette), wgt});
    return m;
}

SceneMixture mixture_at_canvas(const SceneMixture& m, int canvas_h, int canvas_w,
                               const Palette& palette) {
    SceneMixture out;
    out.pixel_sigma = m.pixel_sigma;
    for (const auto& c : m.components) {
        LayoutSpec l = c.layout;
        l.canvas_h = canvas_h;
        l.canvas_w = canvas_w;
        out.components.push_back({l, render_template(l, canvas_h, canvas_w, palette), c.weight});
    }
    return out;
}

std::pair<LatentGrid, int> sample_scene(const SceneMixture& m, Rng& rng) {
    double u = rng.uniform();
    int idx = 0;
    double acc = 0.0;
    for (size_t k = 0; k < m.components.size(); ++k) {
        acc += m.components[k].weight;
        if (u < acc) {
            idx = static_cast<int>(k);
            break;
        }
        idx = static_cast<int>(k); // falls through to the last component
    }
    LatentGrid g = m.components[idx].mean;
    if (m.pixel_sigma > 0.0)
        for (double& v : g.data) v += m.pixel_sigma * rng.normal();
    return {g, idx};
}

std::vector<LayoutSpec> quad_benchmark_layouts(int canvas) {
    const double s = 0.46, p0 = 0.03, p1 = 0.51;
    auto box = [&](double x, double y, const char* label) {
        return BoundingBox{x, y, s, s, label};
    };
    std::vector<LayoutSpec> out(4);
    out[0].boxes = {box(p0, p0, "red"), box(p1, p1, "green")};
    out[1].boxes = {box(p1, p0, "red"), box(p0, p1, "green")};
    out[2].boxes = {box(p0, p1, "red"), box(p1, p0, "green")};
    out[3].boxes = {box(p1, p1, "red"), box(p0, p0, "green")};
    for (auto& l : out) {
        l.canvas_h = canvas;
        l.canvas_w = canvas;
        l.validate();
    }
    return out;
}

} // namespace lsr
