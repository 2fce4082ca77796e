#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lrinfer/fit.hpp"
#include "lrinfer/stats.hpp"

namespace lrinfer {

// ---------------------------------------------------------------------------
// Update-function slices: evaluate the model's dw on a (stimulus, w_stim,
// outcome) grid at a fixed bias weight. History-dependent models (recurrent
// state or previous-trial inputs) are marginalized over sampled histories.
// ---------------------------------------------------------------------------

struct SliceGrid {
    Vec stimuli;                    // probe stimulus values
    Vec w_stim_levels;              // pre-update stimulus weights
    double bias_weight = 0.0;       // fixed pre-update bias weight
    int history_samples = 100;      // draws for history marginalization
    int history_length = 10;        // unconditioned trials per draw
    std::uint64_t seed = 0;         // history sampling seed
};

// Fills stimuli/levels with the standard values when they are empty:
// stimuli = the simulator grid, w_stim levels = {0, 1, 2, 3}.
SliceGrid default_slice_grid();

struct SliceRow {
    double stimulus = 0.0;
    double w_stim = 0.0;
    int correct = 0;  // 1: choice matches the label; 0: it does not
    double dw_stim = 0.0;
    double dw_bias = 0.0;
};

std::vector<SliceRow> update_slices(const FittedModel& model,
                                    const SliceGrid& grid);

// Root-mean-square difference between two slice tables over the same grid
// (both dw components pooled).
double slice_table_rmse(const std::vector<SliceRow>& a,
                        const std::vector<SliceRow>& b);

// ---------------------------------------------------------------------------
// Update recovery error against simulator latents.
// ---------------------------------------------------------------------------

// RMSE between the model's update and the applied ground-truth update at the
// actually visited (w, x, y, r) tuples of the dataset, pooled over all
// trials and weight components. Requires simulator latents.
double recovery_rmse(const FittedModel& model,
                     const std::vector<Session>& dataset);

// log10 with a -infinity sentinel for exact zero.
double log10_or_neg_inf(double value);

// ---------------------------------------------------------------------------
// History-conditioned update gaps (recurrent models).
// ---------------------------------------------------------------------------

struct HistoryCondition {
    int k = 3;            // conditioned past trials (0 allowed: empty block)
    int offset = 0;       // unconditioned trials between block and probe
    int burn_in = 10;     // unconditioned trials before the block
    int draws = 100;      // Monte-Carlo draws over unconditioned trials
    std::uint64_t seed = 0;
    double w_stim = 0.0;  // pinned weights used for every constructed trial
    double w_bias = 0.0;
};

void validate(const HistoryCondition& cond);

struct GapPoint {
    double stimulus = 0.0;
    double gap = 0.0;  // dw_stim(rewarded block) - dw_stim(unrewarded block)
};

// For each probe stimulus, builds draw-matched synthetic histories whose
// conditioned block is all-rewarded vs. all-unrewarded (identical stimuli
// and unconditioned trials in both arms), rolls the model state forward,
// and averages the probe-update difference. The probe trial is correct and
// rewarded. Non-recurrent models are rejected unless allow_markov is set
// (adapter mode used by tests; such models yield an exactly zero gap when
// they cannot see the block).
std::vector<GapPoint> history_gap(const FittedModel& model,
                                  const HistoryCondition& cond,
                                  const Vec& stimuli,
                                  bool allow_markov = false);

// ---------------------------------------------------------------------------
// Cross-validation protocols.
// ---------------------------------------------------------------------------

struct CrossvalConfig {
    int folds = 5;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3};
    FitConfig fit;  // template: kind and seed are overridden per run
    int jobs = 1;
};

struct ModelScore {
    ModelKind kind = ModelKind::DNNGLM;
    // Seed-averaged held-out log-likelihood per animal.
    std::map<std::string, double> per_animal_ll;
    std::map<std::string, long> trials_per_animal;
    double total_ll = 0.0;        // animals summed after seed-averaging
    double total_ll_by_seed = 0.0;  // seed average of per-seed animal sums
    long n_trials = 0;
    double per_trial_mean = 0.0;
};

struct PairwiseTest {
    int model_a = 0;
    int model_b = 0;
    TTestResult test;
};

struct CrossvalResult {
    std::vector<ModelScore> models;
    std::vector<PairwiseTest> tests;  // all unordered pairs, a < b
    int folds = 0;
    std::vector<std::uint64_t> seeds;
    bool degenerate_eval = false;  // evaluation window was empty
};

// K-fold animal-held-out cross-validation: per seed, animals are shuffled
// deterministically and split into K contiguous folds; each fold's animals
// are scored by a model fitted on the remaining animals. Pairwise paired
// t-tests compare kinds across animals on the seed-averaged scores.
CrossvalResult crossval_animals(const std::vector<Session>& dataset,
                                const std::vector<ModelKind>& kinds,
                                const CrossvalConfig& config);

// Future-prediction protocol: fit on trials [0, split) of every session,
// evaluate on [split, split + horizon). horizon == 0 produces an empty,
// degenerate-flagged evaluation.
CrossvalResult crossval_future(const std::vector<Session>& dataset,
                               const std::vector<ModelKind>& kinds,
                               int split_trial, int horizon,
                               const CrossvalConfig& config);

// ---------------------------------------------------------------------------
// Standard-error scaling of the estimated first update (idealized setting:
// scalar weight, stimulus in {-1, +1}, Bernoulli choices).
// ---------------------------------------------------------------------------

struct SeScalingConfig {
    std::vector<long> n_values = {100, 400, 1600, 6400};
    int repetitions = 500;
    double w_before = 0.4;  // scalar weight generating the first trials
    double w_after = 0.8;   // scalar weight generating the second trials
    std::uint64_t seed = 0;
};

struct SeScalingResult {
    std::vector<double> se;  // SE of the estimated weight change, per N
    double slope = 0.0;      // OLS slope of log SE against log N
    long clamped = 0;        // choice rates clamped away from {0, 1}
};

SeScalingResult se_scaling_check(const SeScalingConfig& config);

}  // namespace lrinfer
