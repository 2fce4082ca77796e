#include "lrinfer/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>

#include "lrinfer/common.hpp"
#include "lrinfer/rng.hpp"
#include "lrinfer/simulate.hpp"
#include "lrinfer/threading.hpp"

namespace lrinfer {

namespace {

// Stream salts keeping the analysis draws independent of the simulator and
// fitting streams derived from the same user-facing seed.
constexpr std::uint64_t kHistorySalt = 0x511CE5ULL;
constexpr std::uint64_t kGapSalt = 0x6A9B17ULL;
constexpr std::uint64_t kFoldSalt = 0xF01D5EEDULL;
constexpr std::uint64_t kSeSalt = 0x5E5CA1EULL;

bool uses_trial_history(ModelKind kind) {
    return is_recurrent(kind) || kind == ModelKind::DNNGLM_HISTORY;
}

// Weight vector for a grid point; models with an extra covariate weight get
// it pinned at zero (it is not part of the probed state).
Vec pinned_weights(int d, double w_stim, double w_bias) {
    Vec w(static_cast<std::size_t>(d), 0.0);
    w[0] = w_stim;
    if (d >= 2) w[1] = w_bias;
    return w;
}

// One synthetic unconditioned trial: stimulus uniform on the standard grid,
// choice a fair coin, reward its correctness.
Trial draw_trial(Rng& rng, const std::vector<double>& grid) {
    Trial t;
    t.stimulus = grid[rng.uniform_below(grid.size())];
    t.label = label_of(t.stimulus);
    t.choice = rng.bernoulli(0.5) ? 1 : 0;
    t.reward = reward_of(t.choice, t.label);
    return t;
}

}  // namespace

SliceGrid default_slice_grid() {
    SliceGrid grid;
    grid.stimuli = stimulus_grid(false);
    grid.w_stim_levels = {0.0, 1.0, 2.0, 3.0};
    return grid;
}

std::vector<SliceRow> update_slices(const FittedModel& model,
                                    const SliceGrid& grid) {
    if (grid.stimuli.empty()) throw ConfigError("slice grid: no stimuli");
    if (grid.w_stim_levels.empty())
        throw ConfigError("slice grid: no stimulus-weight levels");
    if (grid.history_samples < 1)
        throw ConfigError("slice grid: history_samples must be >= 1");
    if (grid.history_length < 0)
        throw ConfigError("slice grid: history_length must be >= 0");

    const bool marginalize = uses_trial_history(model.kind);

    // The sampled histories are shared across every grid point (per draw
    // index), so differences across the table reflect the probe alone and
    // reruns are byte-identical.
    std::vector<std::vector<Trial>> histories;
    if (marginalize) {
        const std::vector<double> sample_grid = stimulus_grid(false);
        histories.resize(static_cast<std::size_t>(grid.history_samples));
        for (int j = 0; j < grid.history_samples; ++j) {
            Rng rng(splitmix64(grid.seed + kHistorySalt +
                               static_cast<std::uint64_t>(j)));
            auto& h = histories[static_cast<std::size_t>(j)];
            h.reserve(static_cast<std::size_t>(grid.history_length));
            for (int t = 0; t < grid.history_length; ++t)
                h.push_back(draw_trial(rng, sample_grid));
        }
    }

    ModelEvaluator eval(model);
    std::vector<SliceRow> rows;
    rows.reserve(grid.w_stim_levels.size() * 2 * grid.stimuli.size());
    for (double level : grid.w_stim_levels) {
        const Vec w = pinned_weights(model.d, level, grid.bias_weight);
        for (int correct : {1, 0}) {
            for (double s : grid.stimuli) {
                const int label = label_of(s);
                const int choice = correct ? label : 1 - label;
                const int reward = correct;

                double dw_stim = 0.0, dw_bias = 0.0;
                if (!marginalize) {
                    eval.reset();
                    const Vec dw = eval.step(w, s, choice, reward);
                    dw_stim = dw[0];
                    dw_bias = dw[1];
                } else {
                    for (const auto& history : histories) {
                        eval.reset();
                        // History trials run at the probe's pinned weights:
                        // the table conditions on being at w, and only the
                        // trial sequence is marginalized.
                        for (const Trial& t : history)
                            eval.step(w, t.stimulus, t.choice, t.reward);
                        const Vec dw = eval.step(w, s, choice, reward);
                        dw_stim += dw[0];
                        dw_bias += dw[1];
                    }
                    dw_stim /= grid.history_samples;
                    dw_bias /= grid.history_samples;
                }
                rows.push_back({s, level, correct, dw_stim, dw_bias});
            }
        }
    }
    return rows;
}

double slice_table_rmse(const std::vector<SliceRow>& a,
                        const std::vector<SliceRow>& b) {
    if (a.size() != b.size())
        throw DataError("slice tables have different sizes");
    if (a.empty()) throw DataError("slice tables are empty");
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].stimulus != b[i].stimulus || a[i].w_stim != b[i].w_stim ||
            a[i].correct != b[i].correct)
            throw DataError("slice tables are not over the same grid");
        const double ds = a[i].dw_stim - b[i].dw_stim;
        const double db = a[i].dw_bias - b[i].dw_bias;
        ss += ds * ds + db * db;
    }
    return std::sqrt(ss / (static_cast<double>(a.size()) * 2.0));
}

double recovery_rmse(const FittedModel& model,
                     const std::vector<Session>& dataset) {
    if (dataset.empty()) throw DataError("recovery error: empty dataset");
    double ss = 0.0;
    long n_trials = 0;
    int d_cmp = 0;
    ModelEvaluator eval(model);
    for (const Session& s : dataset) {
        if (!s.has_latents() || s.weights.size() != s.trials.size() ||
            s.applied_dw.size() != s.trials.size())
            throw DataError("recovery error requires per-trial latent "
                            "weights and updates (simulated data)");
        if (s.trials.empty()) continue;
        // Compare on the latent coordinates; a model with extra covariate
        // weights has them pinned at zero (they are not part of the visited
        // state) and its extra update components are out of scope.
        const int d_data = static_cast<int>(s.weights.front().size());
        if (d_cmp == 0) d_cmp = std::min(d_data, model.d);
        eval.reset();
        for (std::size_t t = 0; t < s.trials.size(); ++t) {
            Vec w = s.weights[t];
            w.resize(static_cast<std::size_t>(model.d), 0.0);
            const Trial& tr = s.trials[t];
            const Vec dw = eval.step(w, tr.stimulus, tr.choice, tr.reward);
            for (int c = 0; c < d_cmp; ++c) {
                const double diff = dw[static_cast<std::size_t>(c)] -
                                    s.applied_dw[t][static_cast<std::size_t>(c)];
                ss += diff * diff;
            }
            ++n_trials;
        }
    }
    if (n_trials == 0) throw DataError("recovery error: no trials");
    return std::sqrt(ss / (static_cast<double>(n_trials) * d_cmp));
}

double log10_or_neg_inf(double value) {
    if (value <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::log10(value);
}

void validate(const HistoryCondition& cond) {
    if (cond.k < 0) throw ConfigError("history condition: k must be >= 0");
    if (cond.offset < 0)
        throw ConfigError("history condition: offset must be >= 0");
    if (cond.burn_in < 0)
        throw ConfigError("history condition: burn_in must be >= 0");
    if (cond.draws < 1)
        throw ConfigError("history condition: draws must be >= 1");
}

std::vector<GapPoint> history_gap(const FittedModel& model,
                                  const HistoryCondition& cond,
                                  const Vec& stimuli, bool allow_markov) {
    validate(cond);
    if (stimuli.empty()) throw ConfigError("history gap: no probe stimuli");
    if (!uses_trial_history(model.kind) && !allow_markov)
        throw ConfigError(
            "history gap requires a model with trial-history dependence");

    const Vec w = pinned_weights(model.d, cond.w_stim, cond.w_bias);
    const std::vector<double> sample_grid = stimulus_grid(false);
    ModelEvaluator eval(model);

    std::vector<double> gap_sum(stimuli.size(), 0.0);
    for (int j = 0; j < cond.draws; ++j) {
        Rng rng(splitmix64(cond.seed + kGapSalt +
                           static_cast<std::uint64_t>(j)));
        // Common random numbers: both arms share the burn-in, the block
        // stimuli and the trailing unconditioned trials; only the block's
        // choices/rewards differ.
        std::vector<Trial> burn, tail;
        for (int t = 0; t < cond.burn_in; ++t)
            burn.push_back(draw_trial(rng, sample_grid));
        std::vector<double> block_stim;
        for (int t = 0; t < cond.k; ++t)
            block_stim.push_back(
                sample_grid[rng.uniform_below(sample_grid.size())]);
        for (int t = 0; t < cond.offset; ++t)
            tail.push_back(draw_trial(rng, sample_grid));

        for (std::size_t p = 0; p < stimuli.size(); ++p) {
            const double s_probe = stimuli[p];
            const int probe_label = label_of(s_probe);
            double dw_arm[2] = {0.0, 0.0};
            for (int rewarded : {1, 0}) {
                eval.reset();
                for (const Trial& t : burn)
                    eval.step(w, t.stimulus, t.choice, t.reward);
                for (double bs : block_stim) {
                    const int lbl = label_of(bs);
                    const int choice = rewarded ? lbl : 1 - lbl;
                    eval.step(w, bs, choice, rewarded);
                }
                for (const Trial& t : tail)
                    eval.step(w, t.stimulus, t.choice, t.reward);
                // Probe trial: correct and rewarded.
                const Vec dw = eval.step(w, s_probe, probe_label, 1);
                dw_arm[rewarded] = dw[0];
            }
            gap_sum[p] += dw_arm[1] - dw_arm[0];
        }
    }

    std::vector<GapPoint> out(stimuli.size());
    for (std::size_t p = 0; p < stimuli.size(); ++p)
        out[p] = {stimuli[p], gap_sum[p] / cond.draws};
    return out;
}

namespace {

void validate_crossval(const std::vector<Session>& dataset,
                       const std::vector<ModelKind>& kinds,
                       const CrossvalConfig& config, bool need_folds) {
    if (dataset.empty()) throw DataError("cross-validation: empty dataset");
    if (kinds.empty()) throw ConfigError("cross-validation: no model kinds");
    if (config.seeds.empty()) throw ConfigError("cross-validation: no seeds");
    if (need_folds) {
        if (config.folds < 2)
            throw ConfigError("cross-validation: folds must be >= 2");
        if (static_cast<std::size_t>(config.folds) > dataset.size())
            throw ConfigError("cross-validation: more folds than animals");
    }
}

// Deterministic fold assignment: shuffle animal indices with the seed's own
// stream, then cut into `folds` contiguous chunks (the first n % folds
// chunks get the extra animal).
std::vector<int> fold_assignment(std::size_t n_animals, int folds,
                                 std::uint64_t seed) {
    std::vector<std::size_t> perm(n_animals);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(splitmix64(seed + kFoldSalt));
    for (std::size_t i = n_animals; i > 1; --i)
        std::swap(perm[i - 1], perm[rng.uniform_below(i)]);

    std::vector<int> fold_of(n_animals, 0);
    const std::size_t base = n_animals / static_cast<std::size_t>(folds);
    const std::size_t rem = n_animals % static_cast<std::size_t>(folds);
    std::size_t pos = 0;
    for (int f = 0; f < folds; ++f) {
        const std::size_t len =
            base + (static_cast<std::size_t>(f) < rem ? 1 : 0);
        for (std::size_t i = 0; i < len; ++i)
            fold_of[perm[pos++]] = f;
    }
    return fold_of;
}

// Assemble per-(kind, seed, animal) scores into ModelScores plus the
// pairwise paired t-tests over seed-averaged per-animal values.
CrossvalResult assemble_scores(
    const std::vector<Session>& dataset, const std::vector<ModelKind>& kinds,
    const CrossvalConfig& config,
    const std::vector<std::vector<std::map<std::string, double>>>& scores) {
    CrossvalResult result;
    result.folds = config.folds;
    result.seeds = config.seeds;

    const std::size_t n_seeds = config.seeds.size();
    for (std::size_t k = 0; k < kinds.size(); ++k) {
        ModelScore ms;
        ms.kind = kinds[k];
        double by_seed = 0.0;
        for (std::size_t si = 0; si < n_seeds; ++si) {
            double seed_total = 0.0;
            for (const auto& [id, ll] : scores[k][si]) seed_total += ll;
            by_seed += seed_total;
        }
        ms.total_ll_by_seed = by_seed / static_cast<double>(n_seeds);
        for (const Session& s : dataset) {
            double m = 0.0;
            for (std::size_t si = 0; si < n_seeds; ++si)
                m += scores[k][si].at(s.animal_id);
            m /= static_cast<double>(n_seeds);
            ms.per_animal_ll[s.animal_id] = m;
            ms.total_ll += m;
        }
        ms.n_trials = 0;
        for (const Session& s : dataset) {
            const long n = static_cast<long>(s.trials.size());
            ms.trials_per_animal[s.animal_id] = n;
            ms.n_trials += n;
        }
        ms.per_trial_mean =
            ms.n_trials > 0 ? ms.total_ll / static_cast<double>(ms.n_trials)
                            : 0.0;
        result.models.push_back(std::move(ms));
    }

    for (std::size_t a = 0; a < kinds.size(); ++a) {
        for (std::size_t b = a + 1; b < kinds.size(); ++b) {
            std::vector<double> va, vb;
            for (const Session& s : dataset) {
                va.push_back(result.models[a].per_animal_ll.at(s.animal_id));
                vb.push_back(result.models[b].per_animal_ll.at(s.animal_id));
            }
            PairwiseTest pt;
            pt.model_a = static_cast<int>(a);
            pt.model_b = static_cast<int>(b);
            pt.test = paired_ttest(va, vb);
            result.tests.push_back(pt);
        }
    }
    return result;
}

}  // namespace

CrossvalResult crossval_animals(const std::vector<Session>& dataset,
                                const std::vector<ModelKind>& kinds,
                                const CrossvalConfig& config) {
    validate_crossval(dataset, kinds, config, /*need_folds=*/true);
    const std::size_t n = dataset.size();
    const std::size_t n_seeds = config.seeds.size();

    // Fold assignments depend only on the seed, so every kind sees the same
    // train/test splits and the per-animal comparison is paired.
    std::vector<std::vector<int>> fold_of(n_seeds);
    for (std::size_t si = 0; si < n_seeds; ++si)
        fold_of[si] = fold_assignment(n, config.folds, config.seeds[si]);

    struct Task {
        std::size_t kind_idx, seed_idx;
        int fold;
    };
    std::vector<Task> tasks;
    for (std::size_t k = 0; k < kinds.size(); ++k)
        for (std::size_t si = 0; si < n_seeds; ++si)
            for (int f = 0; f < config.folds; ++f) tasks.push_back({k, si, f});

    std::vector<std::map<std::string, double>> slot(tasks.size());
    parallel_for(tasks.size(), config.jobs, [&](std::size_t ti) {
        const Task& task = tasks[ti];
        std::vector<Session> train, test;
        for (std::size_t i = 0; i < n; ++i) {
            if (fold_of[task.seed_idx][i] == task.fold)
                test.push_back(dataset[i]);
            else
                train.push_back(dataset[i]);
        }
        FitConfig fc = config.fit;
        fc.kind = kinds[task.kind_idx];
        fc.seed = config.seeds[task.seed_idx];
        if (config.jobs > 1) fc.jobs = 1;
        const FitResult fr = fit(train, fc);
        slot[ti] = heldout_log_likelihood(fr.model, test).per_animal;
    });

    // scores[kind][seed][animal]: each animal lands in exactly one fold.
    std::vector<std::vector<std::map<std::string, double>>> scores(
        kinds.size(),
        std::vector<std::map<std::string, double>>(n_seeds));
    for (std::size_t ti = 0; ti < tasks.size(); ++ti)
        for (const auto& [id, ll] : slot[ti])
            scores[tasks[ti].kind_idx][tasks[ti].seed_idx][id] = ll;

    return assemble_scores(dataset, kinds, config, scores);
}

CrossvalResult crossval_future(const std::vector<Session>& dataset,
                               const std::vector<ModelKind>& kinds,
                               int split_trial, int horizon,
                               const CrossvalConfig& config) {
    validate_crossval(dataset, kinds, config, /*need_folds=*/false);
    if (split_trial < 1)
        throw ConfigError("future protocol: split_trial must be >= 1");
    if (horizon < 0) throw ConfigError("future protocol: horizon must be >= 0");
    for (const Session& s : dataset) {
        if (s.trials.size() <
            static_cast<std::size_t>(split_trial) +
                static_cast<std::size_t>(horizon))
            throw DataError("future protocol: session '" + s.animal_id +
                            "' is shorter than split_trial + horizon");
    }

    auto truncated = [](const Session& s, std::size_t len) {
        Session out;
        out.animal_id = s.animal_id;
        out.trials.assign(s.trials.begin(),
                          s.trials.begin() + static_cast<long>(len));
        if (s.has_latents()) {
            out.weights.assign(s.weights.begin(),
                               s.weights.begin() + static_cast<long>(len));
            out.applied_dw.assign(
                s.applied_dw.begin(),
                s.applied_dw.begin() + static_cast<long>(len));
        }
        return out;
    };

    std::vector<Session> train;
    train.reserve(dataset.size());
    for (const Session& s : dataset)
        train.push_back(truncated(s, static_cast<std::size_t>(split_trial)));

    struct Task {
        std::size_t kind_idx, seed_idx;
    };
    std::vector<Task> tasks;
    for (std::size_t k = 0; k < kinds.size(); ++k)
        for (std::size_t si = 0; si < config.seeds.size(); ++si)
            tasks.push_back({k, si});

    std::vector<std::map<std::string, double>> slot(tasks.size());
    parallel_for(tasks.size(), config.jobs, [&](std::size_t ti) {
        const Task& task = tasks[ti];
        FitConfig fc = config.fit;
        fc.kind = kinds[task.kind_idx];
        fc.seed = config.seeds[task.seed_idx];
        if (config.jobs > 1) fc.jobs = 1;
        const FitResult fr = fit(train, fc);

        // The window score is the likelihood of the prefix-plus-window roll
        // minus the prefix alone, so the state at the split is exactly the
        // model's own forward pass over the animal's actual past.
        std::map<std::string, double> animal_ll;
        for (const Session& s : dataset) {
            const Session prefix =
                truncated(s, static_cast<std::size_t>(split_trial));
            const Session full = truncated(
                s, static_cast<std::size_t>(split_trial) +
                       static_cast<std::size_t>(horizon));
            const Vec w0 = initial_weights_for(fr.model, prefix);
            const double nll_full = session_negative_ll(fr.model, full, w0);
            const double nll_prefix =
                session_negative_ll(fr.model, prefix, w0);
            animal_ll[s.animal_id] = -(nll_full - nll_prefix);
        }
        slot[ti] = std::move(animal_ll);
    });

    std::vector<std::vector<std::map<std::string, double>>> scores(
        kinds.size(),
        std::vector<std::map<std::string, double>>(config.seeds.size()));
    for (std::size_t ti = 0; ti < tasks.size(); ++ti)
        scores[tasks[ti].kind_idx][tasks[ti].seed_idx] = std::move(slot[ti]);

    CrossvalResult result = assemble_scores(dataset, kinds, config, scores);
    result.folds = 0;
    result.degenerate_eval = horizon == 0;
    // The aggregate tables count only evaluated trials.
    for (ModelScore& ms : result.models) {
        ms.n_trials = 0;
        for (auto& [id, n] : ms.trials_per_animal) {
            n = horizon;
            ms.n_trials += horizon;
        }
        ms.per_trial_mean =
            ms.n_trials > 0 ? ms.total_ll / static_cast<double>(ms.n_trials)
                            : 0.0;
    }
    return result;
}

SeScalingResult se_scaling_check(const SeScalingConfig& config) {
    if (config.n_values.size() < 2)
        throw ConfigError("SE scaling: need at least two sample sizes");
    for (long n : config.n_values)
        if (n < 2) throw ConfigError("SE scaling: sample sizes must be >= 2");
    if (config.repetitions < 2)
        throw ConfigError("SE scaling: repetitions must be >= 2");

    SeScalingResult result;
    long clamped = 0;

    // Closed-form MLE for a scalar weight with stimuli in {-1, +1}: fold the
    // choices onto the x = +1 side and logit-transform the success rate,
    // clamped to [1/(2N), 1 - 1/(2N)] so the estimate stays finite even for
    // all-identical outcomes.
    auto estimate = [&clamped](Rng& rng, double w_true, long n) {
        long hits = 0;
        for (long i = 0; i < n; ++i) {
            const double x = rng.bernoulli(0.5) ? 1.0 : -1.0;
            const int y = rng.bernoulli(sigmoid(w_true * x)) ? 1 : 0;
            hits += (x > 0) ? y : 1 - y;
        }
        double p = static_cast<double>(hits) / static_cast<double>(n);
        const double lo = 1.0 / (2.0 * static_cast<double>(n));
        if (p < lo || p > 1.0 - lo) {
            ++clamped;
            p = std::clamp(p, lo, 1.0 - lo);
        }
        return std::log(p / (1.0 - p));
    };

    std::vector<double> log_n, log_se;
    for (std::size_t ni = 0; ni < config.n_values.size(); ++ni) {
        const long n = config.n_values[ni];
        Rng rng(splitmix64(config.seed + kSeSalt +
                           static_cast<std::uint64_t>(ni)));
        std::vector<double> deltas;
        deltas.reserve(static_cast<std::size_t>(config.repetitions));
        for (int rep = 0; rep < config.repetitions; ++rep) {
            const double w_b = estimate(rng, config.w_before, n);
            const double w_a = estimate(rng, config.w_after, n);
            deltas.push_back(w_a - w_b);
        }
        const double se = sample_std(deltas);
        result.se.push_back(se);
        log_n.push_back(std::log(static_cast<double>(n)));
        log_se.push_back(std::log(se));
    }
    result.slope = ols_slope(log_n, log_se);
    result.clamped = clamped;
    return result;
}

}  // namespace lrinfer
