#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lsr/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"lsregen: guided diffusion layout-to-image engine"};
    app.require_subcommand(1);

    lsr::GenerateArgs gen;
    uint64_t gen_seed = 0;
    auto* g = app.add_subcommand("generate", "run the full guided pipeline for one layout");
    g->add_option("--layout", gen.layout_path, "layout JSON file")->required();
    g->add_option("--config", gen.config_path, "run config file")->required();
    g->add_option("--out", gen.out_dir, "output directory")->required();
    auto* gseed = g->add_option("--seed", gen_seed, "run seed (default 1234)");
    g->add_flag("--dump-trajectory", gen.dump_trajectory, "write per-step tensor dumps");
    std::string gen_ref, gen_ext;
    auto* gref = g->add_option("--reference", gen_ref, "reference kind: invert|noise");
    auto* gext = g->add_option("--extractor", gen_ext, "feature extractor: identity|lowpass");
    g->add_option("--jobs", gen.jobs, "worker threads (0 = library default)");

    lsr::AblateArgs abl;
    uint64_t abl_seed = 0;
    std::string grid_csv;
    auto* b = app.add_subcommand("ablate", "sweep one knob over a grid of values");
    b->add_option("--knob", abl.knob, "gamma | fraction | steps")->required();
    b->add_option("--grid", grid_csv, "comma-separated knob values")->required();
    b->add_option("--layout", abl.layout_path, "layout JSON file")->required();
    b->add_option("--config", abl.config_path, "run config file")->required();
    b->add_option("--out", abl.out_dir, "output directory")->required();
    b->add_option("--runs", abl.runs_per_value, "seeds per grid value (default 20)");
    auto* bseed = b->add_option("--seed", abl_seed, "base seed (default 1234)");
    b->add_option("--jobs", abl.jobs, "worker threads for the run fan-out");

    lsr::EvalArgs ev;
    auto* e = app.add_subcommand("eval", "score a directory of PPM images against a layout");
    e->add_option("--images", ev.images_dir, "directory of .ppm files")->required();
    e->add_option("--layout", ev.layout_path, "layout JSON file")->required();
    e->add_option("--out", ev.out_path, "output JSONL path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    if (g->parsed()) {
        if (*gseed) gen.seed = gen_seed;
        if (*gref) gen.reference = gen_ref;
        if (*gext) gen.extractor = gen_ext;
        return lsr::cmd_generate(gen);
    }
    if (b->parsed()) {
        if (*bseed) abl.seed = abl_seed;
        std::stringstream ss(grid_csv);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) abl.grid.push_back(std::stod(item));
        return lsr::cmd_ablate(abl);
    }
    return lsr::cmd_eval(ev);
}
