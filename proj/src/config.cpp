#include "lsr/config.hpp"

#include <filesystem>
#include <sstream>

#include "lsr/errors.hpp"
#include "lsr/io.hpp"

namespace lsr {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct KvFile {
    // section -> key -> value; tracks consumption so unknown keys are rejected
    std::map<std::string, std::map<std::string, std::string>> sections;
    mutable std::map<std::string, std::map<std::string, bool>> used;

    std::string get(const std::string& sec, const std::string& key,
                    const std::string& fallback) const {
        auto s = sections.find(sec);
        if (s == sections.end()) return fallback;
        auto k = s->second.find(key);
        if (k == s->second.end()) return fallback;
        used[sec][key] = true;
        return k->second;
    }

    void check_all_used() const {
        for (const auto& [sec, kvs] : sections)
            for (const auto& [key, _] : kvs) {
                auto s = used.find(sec);
                if (s == used.end() || !s->second.count(key))
                    throw ConfigError("unknown config key [" + sec + "] " + key);
            }
    }
};

KvFile parse_kv(const std::string& text) {
    KvFile f;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        f.sections[section][key] = val;
    }
    return f;
}

double to_double(const std::string& v, const std::string& what) {
    try {
        size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for " + what + ": '" + v + "'");
    }
}

int to_int(const std::string& v, const std::string& what) {
    try {
        size_t used = 0;
        int i = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return i;
    } catch (const std::exception&) {
        throw ConfigError("bad integer value for " + what + ": '" + v + "'");
    }
}

bool to_bool(const std::string& v, const std::string& what) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("bad boolean value for " + what + ": '" + v + "'");
}

SamplerConfig parse_sampler(const KvFile& f, const std::string& sec) {
    SamplerConfig c;
    std::string kind = f.get(sec, "kind", "ddim");
    if (kind == "ddim")
        c.kind = SamplerKind::ddim;
    else if (kind == "ddpm")
        c.kind = SamplerKind::ddpm;
    else
        throw ConfigError("bad sampler kind: " + kind);
    c.num_sample_steps = to_int(f.get(sec, "steps", "50"), sec + ".steps");
    c.eta = to_double(f.get(sec, "eta", "0"), sec + ".eta");
    c.seed = static_cast<uint64_t>(std::stoull(f.get(sec, "seed", "0")));
    return c;
}

} // namespace

RunConfig parse_run_config(const std::string& text) {
    KvFile f = parse_kv(text);
    RunConfig c;

    c.schedule_kind = schedule_kind_from_name(f.get("schedule", "kind", "linear-beta"));
    c.num_steps = to_int(f.get("schedule", "num_steps", "1000"), "schedule.num_steps");
    c.beta_start = to_double(f.get("schedule", "beta_start", "1e-4"), "schedule.beta_start");
    c.beta_end = to_double(f.get("schedule", "beta_end", "2e-2"), "schedule.beta_end");

    std::string tpl = f.get("scene", "templates", "builtin:quad");
    std::istringstream ts(tpl);
    std::string item;
    while (std::getline(ts, item, ',')) {
        item = trim(item);
        if (!item.empty()) c.template_sources.push_back(item);
    }
    c.pixel_sigma = to_double(f.get("scene", "pixel_sigma", "0.35"), "scene.pixel_sigma");

    c.pipeline.small_canvas =
        to_int(f.get("pipeline", "small_canvas", "16"), "pipeline.small_canvas");
    c.pipeline.scale_factor =
        to_int(f.get("pipeline", "scale_factor", "3"), "pipeline.scale_factor");
    std::string up = f.get("pipeline", "upsample", "bilinear");
    if (up == "nearest")
        c.pipeline.upsample = UpsampleMode::nearest;
    else if (up == "bilinear")
        c.pipeline.upsample = UpsampleMode::bilinear;
    else
        throw ConfigError("bad upsample mode: " + up);
    std::string ref = f.get("pipeline", "reference", "invert");
    if (ref == "invert")
        c.pipeline.reference = ReferenceKind::invert;
    else if (ref == "noise")
        c.pipeline.reference = ReferenceKind::noise;
    else
        throw ConfigError("bad reference kind: " + ref);
    c.pipeline.shared_noise_eps =
        to_bool(f.get("pipeline", "shared_noise", "false"), "pipeline.shared_noise");
    c.pipeline.codec = f.get("pipeline", "codec", "identity");
    if (c.pipeline.codec != "identity" && c.pipeline.codec != "avgpool")
        throw ConfigError("bad codec: " + c.pipeline.codec);

    c.pipeline.small_sampler = parse_sampler(f, "sampler.small");
    c.pipeline.large_sampler = parse_sampler(f, "sampler.large");

    c.pipeline.guidance.gamma = to_double(f.get("guidance", "gamma", "0.1"), "guidance.gamma");
    c.pipeline.guidance.guided_fraction =
        to_double(f.get("guidance", "guided_fraction", "0.1"), "guidance.guided_fraction");
    c.pipeline.guidance.extractor = f.get("guidance", "extractor", "identity");
    if (c.pipeline.guidance.extractor != "identity" &&
        c.pipeline.guidance.extractor != "lowpass")
        throw ConfigError("bad extractor: " + c.pipeline.guidance.extractor);
    c.pipeline.guidance.lowpass_cutoff =
        to_double(f.get("guidance", "lowpass_cutoff", "0.2"), "guidance.lowpass_cutoff");
    c.pipeline.guidance.distance = f.get("guidance", "distance", "l2sq");
    if (c.pipeline.guidance.distance != "l2sq")
        throw ConfigError("bad distance: " + c.pipeline.guidance.distance);
    std::string clamp = f.get("guidance", "max_update_norm", "auto");
    if (clamp == "auto")
        c.pipeline.guidance.max_update_norm.reset();
    else
        c.pipeline.guidance.max_update_norm = to_double(clamp, "guidance.max_update_norm");
    c.pipeline.guidance.area_scaled_gamma =
        to_bool(f.get("guidance", "area_scaled_gamma", "false"), "guidance.area_scaled_gamma");

    c.dump_trajectory =
        to_bool(f.get("output", "dump_trajectory", "false"), "output.dump_trajectory");

    f.check_all_used();
    if (c.pipeline.guidance.gamma < 0.0) throw ConfigError("guidance.gamma must be >= 0");
    c.pipeline.validate();
    return c;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_file(path));
}

std::string serialize_run_config(const RunConfig& c) {
    std::ostringstream out;
    out.precision(17);
    out << "[schedule]\n";
    out << "kind = " << schedule_kind_name(c.schedule_kind) << "\n";
    out << "num_steps = " << c.num_steps << "\n";
    out << "beta_start = " << c.beta_start << "\n";
    out << "beta_end = " << c.beta_end << "\n\n";
    out << "[scene]\n";
    out << "templates = ";
    for (size_t i = 0; i < c.template_sources.size(); ++i)
        out << (i ? "," : "") << c.template_sources[i];
    out << "\n";
    out << "pixel_sigma = " << c.pixel_sigma << "\n\n";
    auto sampler = [&](const char* sec, const SamplerConfig& sc) {
        out << "[" << sec << "]\n";
        out << "kind = " << (sc.kind == SamplerKind::ddim ? "ddim" : "ddpm") << "\n";
        out << "steps = " << sc.num_sample_steps << "\n";
        out << "eta = " << sc.eta << "\n";
        out << "seed = " << sc.seed << "\n\n";
    };
    sampler("sampler.small", c.pipeline.small_sampler);
    sampler("sampler.large", c.pipeline.large_sampler);
    out << "[guidance]\n";
    out << "gamma = " << c.pipeline.guidance.gamma << "\n";
    out << "guided_fraction = " << c.pipeline.guidance.guided_fraction << "\n";
    out << "extractor = " << c.pipeline.guidance.extractor << "\n";
    out << "lowpass_cutoff = " << c.pipeline.guidance.lowpass_cutoff << "\n";
    out << "distance = " << c.pipeline.guidance.distance << "\n";
    out << "max_update_norm = ";
    if (c.pipeline.guidance.max_update_norm)
        out << *c.pipeline.guidance.max_update_norm << "\n";
    else
        out << "auto\n";
    out << "area_scaled_gamma = " << (c.pipeline.guidance.area_scaled_gamma ? "true" : "false")
        << "\n\n";
    out << "[pipeline]\n";
    out << "small_canvas = " << c.pipeline.small_canvas << "\n";
    out << "scale_factor = " << c.pipeline.scale_factor << "\n";
    out << "upsample = "
        << (c.pipeline.upsample == UpsampleMode::nearest ? "nearest" : "bilinear") << "\n";
    out << "reference = "
        << (c.pipeline.reference == ReferenceKind::invert ? "invert" : "noise") << "\n";
    out << "shared_noise = " << (c.pipeline.shared_noise_eps ? "true" : "false") << "\n";
    out << "codec = " << c.pipeline.codec << "\n\n";
    out << "[output]\n";
    out << "dump_trajectory = " << (c.dump_trajectory ? "true" : "false") << "\n";
    return out.str();
}

std::vector<LayoutSpec> load_scene_layouts(const RunConfig& c, const std::string& base_dir) {
    std::vector<LayoutSpec> out;
    for (const auto& src : c.template_sources) {
        if (src == "builtin:quad") {
            auto quad = quad_benchmark_layouts();
            out.insert(out.end(), quad.begin(), quad.end());
        } else if (src.rfind("builtin:", 0) == 0) {
            throw ConfigError("unknown builtin scene: " + src);
        } else {
            std::filesystem::path p(src);
            if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
            out.push_back(read_layout(p.string()));
        }
    }
    if (out.empty()) throw ConfigError("scene.templates resolved to no layouts");
    return out;
}

} // namespace lsr
