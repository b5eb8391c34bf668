#pragma once

#include <functional>
#include <string>

#include "lsr/grid.hpp"
#include "lsr/scene.hpp"

namespace lsr {

// P6 binary PPM; values clamped to [0,1], optionally remapped (tone curve),
// then quantized round-half-up. The default map is the identity.
using GammaMap = std::function<double(double)>;
void write_ppm(const LatentGrid& img, const std::string& path,
               const GammaMap& gamma_map = nullptr);
LatentGrid read_ppm(const std::string& path);

// "GDTENSR1" tensor dump: u32 LE ndim, ndim u64 LE dims, f64 LE payload,
// row-major. Round-trips bitwise; readers reject trailing bytes.
void write_tensor(const LatentGrid& g, const std::string& path);
LatentGrid read_tensor(const std::string& path);

// Layout JSON: {"boxes":[{"h":..,"label":"..","w":..,"x":..,"y":..},...],
// "canvas":[H,W]} in canonical (lexicographic) key order. Unknown keys are
// rejected; schema and invariant violations name the offending field.
LayoutSpec read_layout(const std::string& path);
void write_layout(const LayoutSpec& spec, const std::string& path);
LayoutSpec layout_from_json_text(const std::string& text);
std::string layout_to_json_text(const LayoutSpec& spec);

// Atomic file replace: write to <path>.tmp then rename.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

} // namespace lsr
