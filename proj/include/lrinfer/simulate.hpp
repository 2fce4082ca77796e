#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrinfer/glm.hpp"
#include "lrinfer/rules.hpp"

namespace lrinfer {

// One mixture component: a rule plus its population weight.
struct RuleComponent {
    RuleParams rule;
    double weight = 1.0;
};

struct SimConfig {
    int n_animals = 100;
    int n_trials = 500;  // T (long-run preset: 8000)
    std::uint64_t master_seed = 0;

    // Stimulus grid: [-2, 2] in steps of 0.25, zero excluded by default.
    // When zero is included, its label comes from a fair coin.
    bool include_zero_stimulus = false;

    double w0_stim = -2.0;
    bool w0_stim_uniform = false;            // w0_stim ~ U[-2, 2] per animal
    std::vector<double> bias_set = {-1.0, 0.0, 1.0};

    // Population: one component, or a mixture with weights summing to 1.
    std::vector<RuleComponent> rules = {{RuleParams{}, 1.0}};

    // The bias weight stays fixed (its update is zeroed) unless enabled.
    bool learn_bias = false;

    // Additive zero-mean Gaussian update noise with std = frac * alpha,
    // applied per learned coordinate, drawn from a separate stream.
    double noise_sigma_frac = 0.0;
};

void validate(const SimConfig& config);

std::vector<double> stimulus_grid(bool include_zero);

// Deterministic stratified mixture assignment: component j receives
// floor(n*w_j) animals plus leftovers by largest remainder (ties to the
// lower index); animals are assigned in index order, component by component.
std::vector<int> mixture_assignment(const std::vector<RuleComponent>& rules,
                                    int n_animals);

// Simulate one animal. The per-trial draw order on the trajectory stream is
// fixed: stimulus index, label coin (zero stimulus only), choice; update
// noise comes from the separate noise stream (one Gaussian per coordinate
// whenever noise is enabled, masked coordinates drawn and discarded).
Session simulate_animal(const SimConfig& config, int animal_index);

// n_animals independent sessions; animal i is seeded from
// master_seed ^ i, so pool membership and order never affect a session.
std::vector<Session> simulate_pool(const SimConfig& config);
std::vector<Session> simulate_pool_serial(const SimConfig& config);
std::vector<Session> simulate_pool_parallel(const SimConfig& config, int jobs);

// Bisect alpha (scaling every mixture component proportionally) until the
// median terminal stimulus weight over n_pilots pilot animals is within
// `tol` of `target`. Returns the calibrated base alpha of rules[0].
double calibrate_alpha(SimConfig config, double target = 3.0,
                       double tol = 0.1, int n_pilots = 20);

}  // namespace lrinfer
