#include "lsr/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lsr/errors.hpp"

namespace lsr {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp);
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw IoError("short write: " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed for " + path + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// PPM (P6, 8-bit, round-half-up quantization)

void write_ppm(const LatentGrid& img, const std::string& path, const GammaMap& gamma_map) {
    if (img.channels != 3)
        throw std::invalid_argument("write_ppm: image must have 3 channels");
    std::string buf;
    buf += "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    buf.reserve(buf.size() + static_cast<size_t>(img.width) * img.height * 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = img.at(c, y, x);
                v = std::min(1.0, std::max(0.0, v));
                if (gamma_map) v = std::min(1.0, std::max(0.0, gamma_map(v)));
                int q = static_cast<int>(std::floor(v * 255.0 + 0.5));
                buf.push_back(static_cast<char>(q));
            }
    write_file_atomic(path, buf);
}

LatentGrid read_ppm(const std::string& path) {
    std::string buf = read_file(path);
    size_t pos = 0;
    auto token = [&]() -> std::string {
        while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
        if (pos < buf.size() && buf[pos] == '#') { // comment line
            while (pos < buf.size() && buf[pos] != '\n') ++pos;
            while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
        }
        size_t start = pos;
        while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
        return buf.substr(start, pos - start);
    };
    if (token() != "P6") throw IoError("not a P6 PPM: " + path);
    int w = 0, h = 0, maxv = 0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        maxv = std::stoi(token());
    } catch (const std::exception&) {
        throw IoError("malformed PPM header: " + path);
    }
    if (w <= 0 || h <= 0 || maxv != 255) throw IoError("unsupported PPM: " + path);
    ++pos; // single whitespace after maxval
    size_t need = static_cast<size_t>(w) * h * 3;
    if (buf.size() - pos < need) throw IoError("truncated PPM payload: " + path);
    if (buf.size() - pos > need) throw IoError("trailing bytes after PPM payload: " + path);
    LatentGrid img(3, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(c, y, x) =
                    static_cast<unsigned char>(buf[pos++]) / 255.0;
    return img;
}

// ---------------------------------------------------------------------------
// Tensor dump

namespace {
constexpr char kMagic[8] = {'G', 'D', 'T', 'E', 'N', 'S', 'R', '1'};

template <typename T>
void put_le(std::string& buf, T v) {
    for (size_t i = 0; i < sizeof(T); ++i)
        buf.push_back(static_cast<char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& buf, size_t& pos) {
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += sizeof(T);
    return static_cast<T>(v);
}
} // namespace

void write_tensor(const LatentGrid& g, const std::string& path) {
    std::string buf(kMagic, sizeof(kMagic));
    put_le<uint32_t>(buf, 3);
    put_le<uint64_t>(buf, static_cast<uint64_t>(g.channels));
    put_le<uint64_t>(buf, static_cast<uint64_t>(g.height));
    put_le<uint64_t>(buf, static_cast<uint64_t>(g.width));
    for (double d : g.data) {
        uint64_t bits;
        std::memcpy(&bits, &d, 8);
        put_le<uint64_t>(buf, bits);
    }
    write_file_atomic(path, buf);
}

LatentGrid read_tensor(const std::string& path) {
    std::string buf = read_file(path);
    if (buf.size() < 12 || std::memcmp(buf.data(), kMagic, 8) != 0)
        throw IoError("bad tensor magic: " + path);
    size_t pos = 8;
    uint32_t ndim = get_le<uint32_t>(buf, pos);
    if (ndim != 3) throw IoError("tensor dump: expected 3 dims in " + path);
    if (buf.size() < pos + 8ull * ndim) throw IoError("truncated tensor header: " + path);
    uint64_t c = get_le<uint64_t>(buf, pos);
    uint64_t h = get_le<uint64_t>(buf, pos);
    uint64_t w = get_le<uint64_t>(buf, pos);
    uint64_t n = c * h * w;
    if (buf.size() - pos < n * 8) throw IoError("truncated tensor payload: " + path);
    if (buf.size() - pos > n * 8) throw IoError("trailing bytes in tensor dump: " + path);
    LatentGrid g(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
    for (uint64_t i = 0; i < n; ++i) {
        uint64_t bits = get_le<uint64_t>(buf, pos);
        double d;
        std::memcpy(&d, &bits, 8);
        g.data[static_cast<size_t>(i)] = d;
    }
    return g;
}

// ---------------------------------------------------------------------------
// Layout JSON

LayoutSpec layout_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw LayoutSchemaError("$", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw LayoutSchemaError("$", "top level must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "canvas" && it.key() != "boxes")
            throw LayoutSchemaError(it.key(), "unknown key");
    if (!j.contains("canvas")) throw LayoutSchemaError("canvas", "missing key");
    if (!j.contains("boxes")) throw LayoutSchemaError("boxes", "missing key");

    const auto& cv = j["canvas"];
    if (!cv.is_array() || cv.size() != 2 || !cv[0].is_number_integer() ||
        !cv[1].is_number_integer())
        throw LayoutSchemaError("canvas", "canvas must be [H, W] integers");

    LayoutSpec spec;
    spec.canvas_h = cv[0].get<int>();
    spec.canvas_w = cv[1].get<int>();

    const auto& boxes = j["boxes"];
    if (!boxes.is_array()) throw LayoutSchemaError("boxes", "boxes must be an array");
    for (size_t i = 0; i < boxes.size(); ++i) {
        std::string at = "boxes[" + std::to_string(i) + "]";
        const auto& jb = boxes[i];
        if (!jb.is_object()) throw LayoutSchemaError(at, "box must be an object");
        for (auto it = jb.begin(); it != jb.end(); ++it) {
            const std::string& k = it.key();
            if (k != "x" && k != "y" && k != "w" && k != "h" && k != "label")
                throw LayoutSchemaError(at + "." + k, "unknown key");
        }
        BoundingBox b;
        for (const char* k : {"x", "y", "w", "h"}) {
            if (!jb.contains(k) || !jb[k].is_number())
                throw LayoutSchemaError(at + "." + k, "missing or non-numeric field");
        }
        if (!jb.contains("label") || !jb["label"].is_string())
            throw LayoutSchemaError(at + ".label", "missing or non-string label");
        b.x = jb["x"].get<double>();
        b.y = jb["y"].get<double>();
        b.w = jb["w"].get<double>();
        b.h = jb["h"].get<double>();
        b.label = jb["label"].get<std::string>();
        spec.boxes.push_back(std::move(b));
    }
    spec.validate(); // throws LayoutInvariantError with field path
    return spec;
}

std::string layout_to_json_text(const LayoutSpec& spec) {
    json j;
    j["canvas"] = {spec.canvas_h, spec.canvas_w};
    j["boxes"] = json::array();
    for (const auto& b : spec.boxes) {
        json jb;
        jb["x"] = b.x;
        jb["y"] = b.y;
        jb["w"] = b.w;
        jb["h"] = b.h;
        jb["label"] = b.label;
        j["boxes"].push_back(jb);
    }
    // nlohmann::json orders keys lexicographically; that order is canonical
    return j.dump(2) + "\n";
}

LayoutSpec read_layout(const std::string& path) {
    return layout_from_json_text(read_file(path));
}

void write_layout(const LayoutSpec& spec, const std::string& path) {
    spec.validate();
    write_file_atomic(path, layout_to_json_text(spec));
}

} // namespace lsr
