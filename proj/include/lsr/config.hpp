#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lsr/pipeline.hpp"
#include "lsr/schedule.hpp"

namespace lsr {

/// Everything a run needs, parsed from the sectioned key-value config file.
/// The manifest echoes this structure so config + seeds reproduce a run.
struct RunConfig {
    // [schedule]
    ScheduleKind schedule_kind = ScheduleKind::linear_beta;
    int num_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 2e-2;

    // [scene]
    std::vector<std::string> template_sources; // layout paths or "builtin:quad"
    double pixel_sigma = 0.35;

    // [pipeline] + [sampler.*] + [guidance]
    PipelineConfig pipeline;

    // [output]
    bool dump_trajectory = false;

    NoiseSchedule build() const {
        return build_schedule(schedule_kind, num_steps, beta_start, beta_end);
    }
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string serialize_run_config(const RunConfig& c);

/// Resolves [scene] template sources into layout specs. Relative paths are
/// resolved against base_dir.
std::vector<LayoutSpec> load_scene_layouts(const RunConfig& c, const std::string& base_dir);

} // namespace lsr
