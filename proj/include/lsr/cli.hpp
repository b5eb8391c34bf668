#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lsr {

// Command implementations shared by the lsregen binary and the test suites.
// Exit codes: 0 ok, 1 runtime failure, 2 usage/config error.

struct GenerateArgs {
    std::string layout_path;
    std::string config_path;
    std::string out_dir;
    std::optional<uint64_t> seed;
    bool dump_trajectory = false;
    std::optional<std::string> reference;  // invert | noise
    std::optional<std::string> extractor;  // identity | lowpass
    int jobs = 0;                          // 0 -> leave thread count alone
};

struct AblateArgs {
    std::string knob; // gamma | fraction | steps
    std::vector<double> grid;
    std::string layout_path;
    std::string config_path;
    std::string out_dir;
    int runs_per_value = 20;
    std::optional<uint64_t> seed;
    int jobs = 0;
};

struct EvalArgs {
    std::string images_dir;
    std::string layout_path;
    std::string out_path;
};

int cmd_generate(const GenerateArgs& a);
int cmd_ablate(const AblateArgs& a);
int cmd_eval(const EvalArgs& a);

std::string git_describe();

} // namespace lsr
