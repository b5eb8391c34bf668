#include "lsr/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lsr/config.hpp"
#include "lsr/errors.hpp"
#include "lsr/eval.hpp"
#include "lsr/io.hpp"
#include "lsr/pipeline.hpp"

namespace lsr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr uint64_t kDefaultSeed = 1234;

json sampler_json(const SamplerConfig& c) {
    return {{"kind", c.kind == SamplerKind::ddim ? "ddim" : "ddpm"},
            {"steps", c.num_sample_steps},
            {"eta", c.eta},
            {"seed", c.seed}};
}

json config_json(const RunConfig& c) {
    json j;
    j["schedule"] = {{"kind", schedule_kind_name(c.schedule_kind)},
                     {"num_steps", c.num_steps},
                     {"beta_start", c.beta_start},
                     {"beta_end", c.beta_end}};
    j["scene"] = {{"templates", c.template_sources}, {"pixel_sigma", c.pixel_sigma}};
    j["sampler_small"] = sampler_json(c.pipeline.small_sampler);
    j["sampler_large"] = sampler_json(c.pipeline.large_sampler);
    j["guidance"] = {{"gamma", c.pipeline.guidance.gamma},
                     {"guided_fraction", c.pipeline.guidance.guided_fraction},
                     {"extractor", c.pipeline.guidance.extractor},
                     {"lowpass_cutoff", c.pipeline.guidance.lowpass_cutoff},
                     {"distance", c.pipeline.guidance.distance},
                     {"max_update_norm", c.pipeline.guidance.max_update_norm
                                             ? json(*c.pipeline.guidance.max_update_norm)
                                             : json("auto")},
                     {"area_scaled_gamma", c.pipeline.guidance.area_scaled_gamma}};
    j["pipeline"] = {
        {"small_canvas", c.pipeline.small_canvas},
        {"scale_factor", c.pipeline.scale_factor},
        {"upsample", c.pipeline.upsample == UpsampleMode::nearest ? "nearest" : "bilinear"},
        {"reference", c.pipeline.reference == ReferenceKind::invert ? "invert" : "noise"},
        {"shared_noise", c.pipeline.shared_noise_eps},
        {"codec", c.pipeline.codec}};
    j["output"] = {{"dump_trajectory", c.dump_trajectory}};
    return j;
}

json metrics_json(const LatentGrid& img, const LayoutSpec& layout, const SceneMixture& m_large,
                  int guided_steps) {
    AdherenceReport adh = adherence(img, layout);
    FidelityReport fid = fidelity(img, m_large);
    return {{"adherence_rate", adh.adherence_rate},
            {"mean_iou", adh.mean_iou},
            {"detection_rate", adh.detection_rate},
            {"template_rms", fid.template_rms},
            {"lowband_corr", fid.lowband_corr},
            {"nearest_component", fid.nearest_component},
            {"guided_steps", guided_steps}};
}

struct LoadedRun {
    RunConfig config;
    LayoutSpec target;
    std::vector<LayoutSpec> layouts;
    NoiseSchedule schedule;
    SceneMixture m_small, m_large;
};

LoadedRun load_run(const std::string& layout_path, const std::string& config_path,
                   const std::optional<std::string>& reference_override,
                   const std::optional<std::string>& extractor_override) {
    LoadedRun r;
    r.config = load_run_config(config_path);
    if (reference_override) {
        if (*reference_override == "invert")
            r.config.pipeline.reference = ReferenceKind::invert;
        else if (*reference_override == "noise")
            r.config.pipeline.reference = ReferenceKind::noise;
        else
            throw ConfigError("bad --reference value: " + *reference_override);
    }
    if (extractor_override) {
        if (*extractor_override != "identity" && *extractor_override != "lowpass")
            throw ConfigError("bad --extractor value: " + *extractor_override);
        r.config.pipeline.guidance.extractor = *extractor_override;
    }
    r.target = read_layout(layout_path);
    std::string base = fs::path(config_path).parent_path().string();
    r.layouts = load_scene_layouts(r.config, base);
    r.schedule = r.config.build();

    int small = r.config.pipeline.small_canvas;
    int large = r.config.pipeline.large_canvas();
    std::vector<LayoutSpec> at_small = r.layouts, at_large = r.layouts;
    for (auto& l : at_small) { l.canvas_h = small; l.canvas_w = small; }
    for (auto& l : at_large) { l.canvas_h = large; l.canvas_w = large; }
    r.m_small = mixture_from_layouts(at_small, r.config.pixel_sigma);
    r.m_large = mixture_from_layouts(at_large, r.config.pixel_sigma);
    return r;
}

int run_guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const LayoutSchemaError& e) {
        std::cerr << "layout error: " << e.what() << "\n";
        return 2;
    } catch (const LayoutInvariantError& e) {
        std::cerr << "layout error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const NoMatchingLayoutError& e) {
        std::cerr << "layout error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

std::string git_describe() {
    FILE* p = ::popen("git describe --always --dirty 2>/dev/null", "r");
    if (!p) return "unknown";
    char buf[128] = {0};
    std::string out;
    while (fgets(buf, sizeof(buf), p)) out += buf;
    ::pclose(p);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out.empty() ? "unknown" : out;
}

int cmd_generate(const GenerateArgs& a) {
    return run_guarded([&]() -> int {
        auto t0 = std::chrono::steady_clock::now();
        LoadedRun r = load_run(a.layout_path, a.config_path, a.reference, a.extractor);
        if (a.jobs > 0) {
#ifdef _OPENMP
            omp_set_num_threads(a.jobs);
#endif
        }
        uint64_t seed = a.seed.value_or(kDefaultSeed);
        bool dump = a.dump_trajectory || r.config.dump_trajectory;

        fs::create_directories(a.out_dir);
        Rng rng(seed);
        PipelineResult res =
            lsregen_generate(r.target, r.m_small, r.m_large, r.config.pipeline, r.schedule, rng);

        fs::path out(a.out_dir);
        write_ppm(res.image, (out / "image.ppm").string());
        if (dump) {
            write_tensor(res.image, (out / "image.tensor").string());
            for (size_t i = 0; i < res.trajectory.size(); ++i)
                write_tensor(res.trajectory.latents[i],
                             (out / ("traj_t" + std::to_string(res.trajectory.timesteps[i]) +
                                     ".tensor"))
                                 .string());
        }

        double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json manifest;
        manifest["command"] = "generate";
        manifest["config"] = config_json(r.config);
        manifest["layout_file"] = a.layout_path;
        manifest["seeds"] = {{"run", seed}};
        manifest["git_describe"] = git_describe();
        manifest["wall_time_sec"] = wall;
        manifest["metrics"] = metrics_json(res.image, r.target, r.m_large, res.guided_steps);
        write_file_atomic((out / "manifest.json").string(), manifest.dump(2) + "\n");
        return 0;
    });
}

int cmd_ablate(const AblateArgs& a) {
    return run_guarded([&]() -> int {
        auto t0 = std::chrono::steady_clock::now();
        if (a.grid.size() < 2) throw ConfigError("ablate: grid needs at least 2 values");
        if (a.knob != "gamma" && a.knob != "fraction" && a.knob != "steps")
            throw ConfigError("ablate: knob must be gamma, fraction or steps");
        LoadedRun r = load_run(a.layout_path, a.config_path, std::nullopt, std::nullopt);
        if (a.jobs > 0) {
#ifdef _OPENMP
            omp_set_num_threads(a.jobs);
#endif
        }
        uint64_t base_seed = a.seed.value_or(kDefaultSeed);
        fs::create_directories(a.out_dir);

        struct Row {
            double knob = 0;
            uint64_t seed = 0;
            double adherence = 0, mean_iou = 0, template_rms = 0, lowband = 0;
        };
        const int n_runs = a.runs_per_value;
        std::vector<Row> rows(a.grid.size() * static_cast<size_t>(n_runs));

        // fan out independent runs; per-run seeds derive from (base, index)
        const long long total = static_cast<long long>(rows.size());
#pragma omp parallel for schedule(dynamic) if (total > 1)
        for (long long i = 0; i < total; ++i) {
            size_t gi = static_cast<size_t>(i) / n_runs;
            int ri = static_cast<int>(i % n_runs);
            PipelineConfig pc = r.config.pipeline;
            double v = a.grid[gi];
            if (a.knob == "gamma")
                pc.guidance.gamma = v;
            else if (a.knob == "fraction")
                pc.guidance.guided_fraction = v;
            else {
                pc.small_sampler.num_sample_steps = static_cast<int>(v);
                pc.large_sampler.num_sample_steps = static_cast<int>(v);
            }
            uint64_t seed = mix_seed(base_seed, static_cast<uint64_t>(i));
            Rng rng(seed);
            PipelineResult res =
                lsregen_generate(r.target, r.m_small, r.m_large, pc, r.schedule, rng);
            AdherenceReport adh = adherence(res.image, r.target);
            FidelityReport fid = fidelity(res.image, r.m_large);
            rows[static_cast<size_t>(i)] =
                {v, seed, adh.adherence_rate, adh.mean_iou, fid.template_rms, fid.lowband_corr};
        }

        std::string jsonl;
        std::vector<double> knob_vals, adhs, rmss;
        for (const auto& row : rows) {
            json j = {{"knob", a.knob},
                      {"value", row.knob},
                      {"seed", row.seed},
                      {"adherence_rate", row.adherence},
                      {"mean_iou", row.mean_iou},
                      {"template_rms", row.template_rms},
                      {"lowband_corr", row.lowband}};
            jsonl += j.dump() + "\n";
            knob_vals.push_back(row.knob);
            adhs.push_back(row.adherence);
            rmss.push_back(row.template_rms);
        }
        fs::path out(a.out_dir);
        write_file_atomic((out / "runs.jsonl").string(), jsonl);

        TrendReport trend = trend_report(a.knob, knob_vals, adhs, rmss);
        json jt;
        jt["knob"] = trend.knob;
        jt["adherence_verdict"] = trend.adherence_verdict;
        jt["fidelity_verdict"] = trend.fidelity_verdict;
        jt["groups"] = json::array();
        for (const auto& g : trend.groups)
            jt["groups"].push_back(
                {{"value", g.knob_value},
                 {"adherence", {{"mean", g.adherence.mean}, {"lo", g.adherence.lo}, {"hi", g.adherence.hi}}},
                 {"template_rms",
                  {{"mean", g.template_rms.mean}, {"lo", g.template_rms.lo}, {"hi", g.template_rms.hi}}}});
        write_file_atomic((out / "trend.json").string(), jt.dump(2) + "\n");

        double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json manifest;
        manifest["command"] = "ablate";
        manifest["knob"] = a.knob;
        manifest["grid"] = a.grid;
        manifest["runs_per_value"] = n_runs;
        manifest["config"] = config_json(r.config);
        manifest["layout_file"] = a.layout_path;
        manifest["seeds"] = {{"base", base_seed}};
        manifest["git_describe"] = git_describe();
        manifest["wall_time_sec"] = wall;
        manifest["metrics"] = {{"adherence_verdict", trend.adherence_verdict},
                               {"fidelity_verdict", trend.fidelity_verdict}};
        write_file_atomic((out / "manifest.json").string(), manifest.dump(2) + "\n");
        return 0;
    });
}

int cmd_eval(const EvalArgs& a) {
    return run_guarded([&]() -> int {
        auto t0 = std::chrono::steady_clock::now();
        LayoutSpec layout = read_layout(a.layout_path);
        std::vector<fs::path> ppms;
        if (!fs::is_directory(a.images_dir))
            throw ConfigError("eval: not a directory: " + a.images_dir);
        for (const auto& e : fs::directory_iterator(a.images_dir))
            if (e.path().extension() == ".ppm") ppms.push_back(e.path());
        if (ppms.empty()) throw ConfigError("eval: no .ppm files in " + a.images_dir);
        std::sort(ppms.begin(), ppms.end());

        std::string jsonl;
        int failures = 0;
        std::vector<LatentGrid> images;
        for (const auto& p : ppms) {
            json row;
            row["file"] = p.filename().string();
            try {
                LatentGrid img = read_ppm(p.string());
                LayoutSpec at = layout;
                at.canvas_h = img.height;
                at.canvas_w = img.width;
                SceneMixture m = mixture_from_layouts({at}, 0.0);
                AdherenceReport adh = adherence(img, at);
                FidelityReport fid = fidelity(img, m);
                row["adherence_rate"] = adh.adherence_rate;
                row["mean_iou"] = adh.mean_iou;
                row["detection_rate"] = adh.detection_rate;
                row["template_rms"] = fid.template_rms;
                row["lowband_corr"] = fid.lowband_corr;
                images.push_back(std::move(img));
            } catch (const std::exception& e) {
                row["error"] = e.what();
                ++failures;
            }
            jsonl += row.dump() + "\n";
        }
        json summary;
        summary["files"] = ppms.size();
        summary["failures"] = failures;
        summary["diversity"] = diversity(images);
        summary["wall_time_sec"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        jsonl += summary.dump() + "\n";
        write_file_atomic(a.out_path, jsonl);
        return failures == 0 ? 0 : 1;
    });
}

} // namespace lsr
