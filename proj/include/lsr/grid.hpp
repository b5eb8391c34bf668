#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lsr {

/// Dense raster of scalar channels, row-major [channel][y][x].
/// The universal value type flowing through noising, sampling and guidance.
struct LatentGrid {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    LatentGrid() = default;
    LatentGrid(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w),
          data(static_cast<size_t>(c) * h * w, fill) {
        if (c <= 0 || h <= 0 || w <= 0)
            throw std::invalid_argument("LatentGrid: dimensions must be positive");
    }

    size_t size() const { return data.size(); }

    double& at(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }

    bool same_shape(const LatentGrid& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

inline void require_same_shape(const LatentGrid& a, const LatentGrid& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

double grid_rms(const LatentGrid& g);
double grid_rms_diff(const LatentGrid& a, const LatentGrid& b);
double grid_norm(const LatentGrid& g);
double grid_dot(const LatentGrid& a, const LatentGrid& b);
bool grid_finite(const LatentGrid& g);
bool grid_equal(const LatentGrid& a, const LatentGrid& b);

} // namespace lsr
