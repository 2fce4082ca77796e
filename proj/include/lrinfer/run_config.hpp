#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrinfer/analysis.hpp"
#include "lrinfer/fit.hpp"
#include "lrinfer/simulate.hpp"

namespace lrinfer {

const char* to_string(RuleKind kind);
RuleKind rule_kind_from_string(const std::string& name);

struct EvalSettings {
    std::string protocol = "holdout";  // holdout | animals | future
    int folds = 5;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3};
    int split_trial = 250;
    int horizon = 500;
    bool chance_baseline = false;
};

struct SliceSettings {
    Vec stimuli;        // empty: standard stimulus grid
    Vec w_stim_levels;  // empty: {0, 1, 2, 3}
    double bias_weight = 0.0;
    int history_samples = 100;
    int history_length = 10;
};

struct GapSettings {
    std::vector<int> ks = {1, 2, 3, 4};
    std::vector<int> offsets = {0, 6, 16, 26};
    int burn_in = 10;
    int draws = 100;
    double w_stim = 0.0;
    double w_bias = 0.0;
};

// Strictly parsed JSON run configuration ("version": 1). Unknown keys are
// rejected everywhere. After parsing, every seed is explicit: sections
// without their own seed inherit master_seed.
struct RunConfig {
    std::uint64_t master_seed = 0;
    std::string output_dir;

    SimConfig sim;
    bool has_sim = false;

    FitConfig fit;
    bool has_fit = false;
    bool fit_has_kind = false;

    EvalSettings eval;
    bool has_eval = false;

    SliceSettings slices;
    bool has_slices = false;

    GapSettings gap;
    bool has_gap = false;
};

RunConfig parse_run_config(const std::string& json_text,
                           const std::string& origin);
RunConfig load_run_config(const std::string& path);

}  // namespace lrinfer
