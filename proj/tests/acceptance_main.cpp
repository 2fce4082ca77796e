// End-to-end qualification suite: ten pinned checks covering gradient
// exactness, rule recovery, scaling behavior, history detection, and the
// reporting plumbing. Each check prints one PASS/FAIL line; the process
// exit status is the number of failed checks.
//
// Deliberately expensive: full simulate->fit->analyze pipelines run at
// realistic sizes. Tolerances are pinned in kTol* constants below.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lrinfer/analysis.hpp"
#include "lrinfer/common.hpp"
#include "lrinfer/dataset_io.hpp"
#include "lrinfer/fit.hpp"
#include "lrinfer/model_io.hpp"
#include "lrinfer/rng.hpp"
#include "lrinfer/simulate.hpp"
#include "lrinfer/stats.hpp"

namespace {

using namespace lrinfer;
using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------- //
// Pinned tolerances and protocol constants.
// ---------------------------------------------------------------------- //

// 1: gradient exactness.
constexpr int kGradInstances = 50;       // per architecture (x2 = 100 total)
constexpr int kGradTrials = 20;
constexpr double kGradStep = 1e-5;
constexpr double kTolGradRelErr = 1e-4;
constexpr double kGradBudgetSec = 60.0;

// 2: rule recovery at scale.
constexpr int kPoolAnimals = 100;
constexpr int kPoolTrials = 500;
constexpr double kW0Stim = -2.0;
constexpr double kCalibTargetW = 3.0;
constexpr double kCalibTol = 0.1;
constexpr double kTolRecoveryRmse = 0.03;
constexpr double kTolIncorrectRatio = 0.35;  // vs correct-row update size

// Training protocol shared by the recovery criteria: a fixed epoch budget on
// the full pool (no validation split, no early stop) with trainable
// psychometric-initialized starting weights. The budget sits in the window
// where update recovery is best; much longer schedules keep improving the
// choice likelihood while the off-data parts of the update function drift.
constexpr int kFitEpochs = 600;
constexpr double kFitLr = 5e-3;
constexpr int kFitHidden = 32;
constexpr int kFitBatch = 10;

// 3: pool scaling.
constexpr int kScaleSeeds = 5;
constexpr int kScaleEpochs = 600;

// 4: initial-weight handling.
constexpr int kW0Animals = 50;
constexpr int kW0Epochs = 600;

// 5: update noise.
constexpr int kNoiseAnimals = 50;
constexpr int kNoiseEpochs = 600;

// 6: reward-history detection.
constexpr int kHistWindow = 10;
constexpr int kHistTrainAnimals = 80;
constexpr int kHistHeldout = 20;
constexpr int kHistSeedCount = 4;
constexpr int kHistEpochs = 400;
constexpr int kHistGapK = 3;
constexpr double kTolPairedP = 0.05;

// 7: outcome gating on outcome-independent data.
constexpr int kGateAnimals = 50;
constexpr int kGateSeedCount = 3;
constexpr int kGateEpochs = 600;

// 8: mixture betweenness.
constexpr int kMixAnimals = 50;
constexpr int kMixEpochs = 600;
constexpr double kTolBetweenFrac = 0.90;

// 9: standard-error scaling.
constexpr double kTolSlopeLo = -0.6;
constexpr double kTolSlopeHi = -0.4;
constexpr double kSeBudgetSec = 300.0;

// 10: plumbing. The pinned reference pair for the paired test on the
// differences {1,2,3,4}; see the criterion for how a mismatch is reported.
constexpr double kPinnedT = 5.477;
constexpr double kPinnedP = 0.0120;
constexpr double kTolTTest = 5e-4;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double secs(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------- //
// Shared protocol pieces.
// ---------------------------------------------------------------------- //

SimConfig base_sim(RuleKind kind, double alpha, int n_animals,
                   std::uint64_t seed, int etrace_window = 0) {
    SimConfig sim;
    sim.n_animals = n_animals;
    sim.n_trials = kPoolTrials;
    sim.master_seed = seed;
    sim.w0_stim = kW0Stim;
    sim.rules = {{RuleParams{kind, alpha, etrace_window}, 1.0}};
    return sim;
}

FitConfig recovery_fit(ModelKind kind, std::uint64_t seed, int epochs) {
    FitConfig fc;
    fc.kind = kind;
    fc.seed = seed;
    fc.epochs = epochs;
    fc.learning_rate = kFitLr;
    fc.hidden = kFitHidden;
    fc.batch_size = kFitBatch;
    fc.patience = 0;        // run the full budget
    fc.val_fraction = 0.0;  // converge on the whole pool
    return fc;
}

double calibrated_alpha(RuleKind kind, int etrace_window = 0) {
    SimConfig sim = base_sim(kind, 0.05, 20, 2025, etrace_window);
    return calibrate_alpha(sim, kCalibTargetW, kCalibTol, 20);
}

// Mean |dw_stim| over a slice table restricted to an outcome and weight
// level (NaN level = all levels).
double mean_abs_dw(const std::vector<SliceRow>& rows, int correct,
                   double level = std::numeric_limits<double>::quiet_NaN(),
                   double abs_s_min = 0.0, double abs_s_max = 1e9) {
    double sum = 0.0;
    int n = 0;
    for (const SliceRow& r : rows) {
        if (r.correct != correct) continue;
        if (!std::isnan(level) && r.w_stim != level) continue;
        const double as = std::abs(r.stimulus);
        if (as < abs_s_min || as > abs_s_max) continue;
        sum += std::abs(r.dw_stim);
        ++n;
    }
    return n > 0 ? sum / n : 0.0;
}

// ---------------------------------------------------------------------- //
// 1. Exact gradients vs central finite differences.
// ---------------------------------------------------------------------- //

Session random_session(std::uint64_t seed, int n_trials) {
    Rng rng(seed);
    Session s;
    s.animal_id = "probe";
    for (int t = 0; t < n_trials; ++t) {
        Trial tr;
        const double mag = 0.25 * static_cast<double>(1 + rng.uniform_below(8));
        tr.stimulus = rng.bernoulli(0.5) ? mag : -mag;
        tr.label = label_of(tr.stimulus);
        tr.choice = rng.bernoulli(0.5) ? 1 : 0;
        tr.reward = reward_of(tr.choice, tr.label);
        s.trials.push_back(tr);
    }
    return s;
}

FittedModel random_network(ModelKind kind, int hidden, std::uint64_t seed) {
    FittedModel m;
    m.kind = kind;
    m.d = glm_dim(kind);
    m.n_inputs = network_inputs(kind);
    m.hidden = hidden;
    m.norm = identity_norm(m.n_inputs);
    Rng rng(seed);
    if (is_recurrent(kind)) {
        Gru gru(m.n_inputs, hidden);
        Mlp head(hidden, hidden, m.d);
        m.params.resize(gru.n_params() + head.n_params());
        gru.init_params(std::span<double>(m.params.data(), gru.n_params()),
                        rng);
        head.init_params(std::span<double>(m.params.data() + gru.n_params(),
                                           head.n_params()),
                         rng);
    } else {
        Mlp mlp(m.n_inputs, hidden, m.d);
        m.params.resize(mlp.n_params());
        mlp.init_params(std::span<double>(m.params), rng);
    }
    for (double& p : m.params) p *= 1.5;
    return m;
}

Outcome criterion_gradients() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    const ModelKind kinds[] = {ModelKind::DNNGLM, ModelKind::RNNGLM};
    for (ModelKind kind : kinds) {
        for (int inst = 0; inst < kGradInstances; ++inst) {
            const std::uint64_t seed = 9000 + static_cast<std::uint64_t>(inst);
            FittedModel model = random_network(kind, 8, seed);
            const Session session =
                random_session(seed ^ 0xABCDEF, kGradTrials);
            Rng rng(seed ^ 0x123457);
            Vec w0(model.d);
            for (double& v : w0) v = rng.uniform(-1.0, 1.0);

            const SessionGradient grad = session_gradient(model, session, w0);
            auto loss_at = [&](const Vec& params) {
                FittedModel probe = model;
                probe.params = params;
                return session_negative_ll(probe, session, w0);
            };
            for (std::size_t j = 0; j < model.params.size(); ++j) {
                Vec pp = model.params, pm = model.params;
                pp[j] += kGradStep;
                pm[j] -= kGradStep;
                const double fd =
                    (loss_at(pp) - loss_at(pm)) / (2.0 * kGradStep);
                const double rel =
                    std::abs(grad.core[j] - fd) /
                    std::max({1.0, std::abs(grad.core[j]), std::abs(fd)});
                worst = std::max(worst, rel);
            }
            for (int j = 0; j < model.d; ++j) {
                Vec wp = w0, wm = w0;
                wp[j] += kGradStep;
                wm[j] -= kGradStep;
                FittedModel probe = model;
                const double fd = (session_negative_ll(probe, session, wp) -
                                   session_negative_ll(probe, session, wm)) /
                                  (2.0 * kGradStep);
                const double rel =
                    std::abs(grad.w0[j] - fd) /
                    std::max({1.0, std::abs(grad.w0[j]), std::abs(fd)});
                worst = std::max(worst, rel);
            }
        }
    }
    const double elapsed = secs(t0);
    Outcome out;
    out.pass = worst < kTolGradRelErr && elapsed < kGradBudgetSec;
    out.detail = fmt(
        "%d feedforward + %d recurrent instances, T=%d: max rel err %.2e "
        "(tol %.0e), %.1fs (budget %.0fs)",
        kGradInstances, kGradInstances, kGradTrials, worst, kTolGradRelErr,
        elapsed, kGradBudgetSec);
    return out;
}

// ---------------------------------------------------------------------- //
// 2. Feedforward recovery of the reward-gated rule.
// ---------------------------------------------------------------------- //

struct RecoveryArtifacts {
    double alpha = 0.0;
    std::vector<Session> pool;   // 100-animal reward-gated pool
    FittedModel model;           // converged feedforward fit
};

Outcome criterion_recovery(RecoveryArtifacts& art) {
    art.alpha = calibrated_alpha(RuleKind::Reinforce);
    SimConfig sim =
        base_sim(RuleKind::Reinforce, art.alpha, kPoolAnimals, 2025);
    art.pool = simulate_pool(sim);

    const FitResult res =
        fit(art.pool, recovery_fit(ModelKind::DNNGLM, 1, kFitEpochs));
    art.model = res.model;

    const double rmse = recovery_rmse(art.model, art.pool);

    const SliceGrid grid = default_slice_grid();
    const auto fitted = update_slices(art.model, grid);
    const auto truth = update_slices(wrap_reinforce_rule(art.alpha), grid);

    // (a) Unrewarded trials produce (near) zero updates.
    const double inc = mean_abs_dw(fitted, 0);
    const double cor = mean_abs_dw(fitted, 1);
    const double ratio = cor > 0 ? inc / cor : 1e9;
    const bool zero_on_incorrect = ratio < kTolIncorrectRatio;

    // (b,c) The fitted table reproduces the rule's orderings: |dw| vs |s|
    // at each weight level (comparing the small-|s| and large-|s| ends), and
    // the decay of the update size as the stimulus weight grows.
    bool pattern = true;
    std::string pattern_note;
    for (double level : grid.w_stim_levels) {
        const double f_small = mean_abs_dw(fitted, 1, level, 0.0, 0.5);
        const double f_large = mean_abs_dw(fitted, 1, level, 1.5);
        const double t_small = mean_abs_dw(truth, 1, level, 0.0, 0.5);
        const double t_large = mean_abs_dw(truth, 1, level, 1.5);
        if ((f_large > f_small) != (t_large > t_small)) {
            pattern = false;
            pattern_note += fmt(" level %g |s|-order mismatch;", level);
        }
    }
    for (std::size_t i = 1; i < grid.w_stim_levels.size(); ++i) {
        const double lo = grid.w_stim_levels[i - 1];
        const double hi = grid.w_stim_levels[i];
        const double f =
            mean_abs_dw(fitted, 1, hi) - mean_abs_dw(fitted, 1, lo);
        const double t = mean_abs_dw(truth, 1, hi) - mean_abs_dw(truth, 1, lo);
        if (t < 0 && f >= 0) {
            pattern = false;
            pattern_note += fmt(" level %g->%g not decreasing;", lo, hi);
        }
    }

    Outcome out;
    out.pass = rmse < kTolRecoveryRmse && zero_on_incorrect && pattern;
    out.detail = fmt(
        "%d animals x %d trials, alpha %.4f: update RMSE %.4f (tol %.2f); "
        "unrewarded/rewarded size ratio %.2f (tol %.2f); slice orderings %s%s",
        kPoolAnimals, kPoolTrials, art.alpha, rmse, kTolRecoveryRmse, ratio,
        kTolIncorrectRatio, pattern ? "match the rule" : "MISMATCH",
        pattern_note.c_str());
    return out;
}

// ---------------------------------------------------------------------- //
// 3. Recovery error falls as the pool grows.
// ---------------------------------------------------------------------- //

Outcome criterion_pool_scaling(const RecoveryArtifacts& art) {
    std::vector<double> medians;
    std::string detail;
    for (int n : {10, 50, 250}) {
        SimConfig sim = base_sim(RuleKind::Reinforce, art.alpha, n,
                                 3100 + static_cast<std::uint64_t>(n));
        const auto pool = simulate_pool(sim);
        std::vector<double> lgs;
        for (std::uint64_t seed = 1; seed <= kScaleSeeds; ++seed) {
            const FitResult res =
                fit(pool, recovery_fit(ModelKind::DNNGLM, seed, kScaleEpochs));
            lgs.push_back(log10_or_neg_inf(recovery_rmse(res.model, pool)));
        }
        std::sort(lgs.begin(), lgs.end());
        medians.push_back(lgs[lgs.size() / 2]);
        detail += fmt(" n=%d median log10 RMSE %.3f;", n, medians.back());
    }
    const bool mono = medians[0] > medians[1] && medians[1] > medians[2];
    Outcome out;
    out.pass = mono;
    out.detail = fmt("%d fit seeds per pool:%s strictly decreasing: %s",
                     kScaleSeeds, detail.c_str(), mono ? "yes" : "NO");
    return out;
}

// ---------------------------------------------------------------------- //
// 4. Initial-weight handling.
// ---------------------------------------------------------------------- //

Outcome criterion_initial_weights(const RecoveryArtifacts& art) {
    // (a) Animals that start below chance (-2) traverse the whole weight
    // range and are easier to recover than animals starting already
    // proficient (+2), whose sessions cover a narrow late-learning slice.
    const double rmse_neg = recovery_rmse(art.model, art.pool);
    SimConfig sim_pos =
        base_sim(RuleKind::Reinforce, art.alpha, kPoolAnimals, 2025);
    sim_pos.w0_stim = -kW0Stim;
    const auto pool_pos = simulate_pool(sim_pos);
    const FitResult res_pos =
        fit(pool_pos, recovery_fit(ModelKind::DNNGLM, 1, kFitEpochs));
    const double rmse_pos = recovery_rmse(res_pos.model, pool_pos);

    // (b) Deliberately offsetting the (frozen) starting-weight estimates
    // degrades recovery monotonically.
    const std::vector<Session> pool(art.pool.begin(),
                                    art.pool.begin() + kW0Animals);
    std::vector<double> offset_rmse;
    for (double off : {0.0, 0.5, 1.0}) {
        FitConfig fc = recovery_fit(ModelKind::DNNGLM, 1, kW0Epochs);
        fc.w0_trainable = false;
        fc.w0_offset_stim = off;
        const FitResult res = fit(pool, fc);
        offset_rmse.push_back(recovery_rmse(res.model, pool));
    }
    const bool mono = offset_rmse[0] < offset_rmse[1] &&
                      offset_rmse[1] < offset_rmse[2];

    Outcome out;
    out.pass = rmse_neg < rmse_pos && mono;
    out.detail = fmt(
        "true start -2 RMSE %.4f < true start +2 RMSE %.4f: %s; frozen "
        "estimate offsets {0, +0.5, +1.0} -> RMSE {%.4f, %.4f, %.4f} "
        "increasing: %s",
        rmse_neg, rmse_pos, rmse_neg < rmse_pos ? "yes" : "NO", offset_rmse[0],
        offset_rmse[1], offset_rmse[2], mono ? "yes" : "NO");
    return out;
}

// ---------------------------------------------------------------------- //
// 5. Recovery error rises with injected update noise.
// ---------------------------------------------------------------------- //

Outcome criterion_noise(const RecoveryArtifacts& art) {
    std::vector<double> rmses;
    std::string detail;
    for (double frac : {0.0, 0.5, 1.0}) {
        SimConfig sim =
            base_sim(RuleKind::Reinforce, art.alpha, kNoiseAnimals, 2040);
        sim.noise_sigma_frac = frac;
        const auto pool = simulate_pool(sim);
        const FitResult res =
            fit(pool, recovery_fit(ModelKind::DNNGLM, 1, kNoiseEpochs));
        rmses.push_back(recovery_rmse(res.model, pool));
        detail += fmt(" sigma=%.1f*alpha RMSE %.4f;", frac, rmses.back());
    }
    const bool mono = rmses[0] < rmses[1] && rmses[1] < rmses[2];
    Outcome out;
    out.pass = mono;
    out.detail =
        fmt("%s strictly increasing: %s", detail.c_str(), mono ? "yes" : "NO");
    return out;
}

// ---------------------------------------------------------------------- //
// 6. Recurrent fits detect reward-history structure.
// ---------------------------------------------------------------------- //

Outcome criterion_history(const RecoveryArtifacts&) {
    const double alpha =
        calibrated_alpha(RuleKind::EtraceReinforce, kHistWindow);
    SimConfig sim = base_sim(RuleKind::EtraceReinforce, alpha,
                             kHistTrainAnimals + kHistHeldout, 2026,
                             kHistWindow);
    const auto pool = simulate_pool(sim);
    const std::vector<Session> train(pool.begin(),
                                     pool.begin() + kHistTrainAnimals);
    const std::vector<Session> heldout(pool.begin() + kHistTrainAnimals,
                                       pool.end());

    HistoryCondition cond;
    cond.k = kHistGapK;
    cond.offset = 0;
    cond.draws = 100;
    cond.seed = 99;
    const Vec probe_stimuli = stimulus_grid(false);

    std::vector<double> rnn_gap(kHistSeedCount), dnn_gap(kHistSeedCount);
    std::vector<std::map<std::string, double>> rnn_ll(kHistSeedCount),
        dnn_ll(kHistSeedCount);
    for (int si = 0; si < kHistSeedCount; ++si) {
        const std::uint64_t seed = 1 + static_cast<std::uint64_t>(si);
        const FitResult rnn =
            fit(train, recovery_fit(ModelKind::RNNGLM, seed, kHistEpochs));
        const FitResult dnn =
            fit(train, recovery_fit(ModelKind::DNNGLM, seed, kHistEpochs));

        auto mean_gap = [&](const FittedModel& m, bool allow_markov) {
            const auto pts = history_gap(m, cond, probe_stimuli, allow_markov);
            double sum = 0.0;
            for (const GapPoint& g : pts) sum += g.gap;
            return sum / static_cast<double>(pts.size());
        };
        rnn_gap[si] = mean_gap(rnn.model, false);
        dnn_gap[si] = mean_gap(dnn.model, true);

        rnn_ll[si] = heldout_log_likelihood(rnn.model, heldout).per_animal;
        dnn_ll[si] = heldout_log_likelihood(dnn.model, heldout).per_animal;
    }

    double gap_mean = 0.0;
    for (double g : rnn_gap) gap_mean += g;
    gap_mean /= kHistSeedCount;
    double gap_var = 0.0;
    for (double g : rnn_gap) gap_var += (g - gap_mean) * (g - gap_mean);
    const double gap_std = std::sqrt(gap_var / (kHistSeedCount - 1));
    const bool gap_detected = gap_mean > 0.0 && gap_mean > 2.0 * gap_std;

    double dnn_gap_max = 0.0;
    for (double g : dnn_gap) dnn_gap_max = std::max(dnn_gap_max, std::abs(g));
    const bool dnn_gap_zero = dnn_gap_max == 0.0;

    // Seed-averaged per-animal held-out log likelihood, paired across the
    // held-out animals.
    std::vector<double> rnn_avg, dnn_avg;
    for (const Session& s : heldout) {
        double r = 0.0, d = 0.0;
        for (int si = 0; si < kHistSeedCount; ++si) {
            r += rnn_ll[si].at(s.animal_id);
            d += dnn_ll[si].at(s.animal_id);
        }
        rnn_avg.push_back(r / kHistSeedCount);
        dnn_avg.push_back(d / kHistSeedCount);
    }
    const TTestResult tt = paired_ttest(rnn_avg, dnn_avg);
    double mean_diff = 0.0;
    for (std::size_t i = 0; i < rnn_avg.size(); ++i)
        mean_diff += rnn_avg[i] - dnn_avg[i];
    mean_diff /= static_cast<double>(rnn_avg.size());
    const bool rnn_wins = mean_diff > 0.0 && tt.p < kTolPairedP;

    Outcome out;
    out.pass = gap_detected && dnn_gap_zero && rnn_wins;
    out.detail = fmt(
        "k=%d gap: recurrent mean %.5f vs 2x seed std %.5f (%s); feedforward "
        "gap max |%.1e| (exactly 0: %s); held-out LL diff %.2f/animal, "
        "paired t=%.2f p=%.4f over %d animals x %d seeds (%s)",
        kHistGapK, gap_mean, 2.0 * gap_std, gap_detected ? "detected" : "NO",
        dnn_gap_max, dnn_gap_zero ? "yes" : "NO", mean_diff, tt.t, tt.p,
        kHistHeldout, kHistSeedCount, rnn_wins ? "recurrent wins" : "NO");
    return out;
}

// ---------------------------------------------------------------------- //
// 7. No outcome gating on outcome-independent data.
// ---------------------------------------------------------------------- //

Outcome criterion_outcome_gating(const RecoveryArtifacts&) {
    const double alpha = calibrated_alpha(RuleKind::MaxLikelihood);
    SimConfig sim =
        base_sim(RuleKind::MaxLikelihood, alpha, kGateAnimals, 2027);
    const auto pool = simulate_pool(sim);

    const SliceGrid grid = default_slice_grid();
    // Per-seed correct-minus-incorrect stimulus-update gap at every grid
    // point: fits to outcome-independent data should show gaps within the
    // seed-to-seed noise.
    std::vector<std::vector<double>> gaps(kGateSeedCount);
    for (int si = 0; si < kGateSeedCount; ++si) {
        const FitResult res =
            fit(pool, recovery_fit(ModelKind::DNNGLM,
                                   1 + static_cast<std::uint64_t>(si),
                                   kGateEpochs));
        const auto rows = update_slices(res.model, grid);
        std::map<std::pair<double, double>, std::pair<double, double>> cells;
        for (const SliceRow& r : rows) {
            auto& cell = cells[{r.stimulus, r.w_stim}];
            (r.correct ? cell.first : cell.second) = r.dw_stim;
        }
        for (const auto& [key, cell] : cells)
            gaps[si].push_back(cell.first - cell.second);
    }

    const std::size_t n_points = gaps[0].size();
    double mean_abs_mean = 0.0, mean_std = 0.0;
    for (std::size_t i = 0; i < n_points; ++i) {
        double m = 0.0;
        for (int si = 0; si < kGateSeedCount; ++si) m += gaps[si][i];
        m /= kGateSeedCount;
        double v = 0.0;
        for (int si = 0; si < kGateSeedCount; ++si)
            v += (gaps[si][i] - m) * (gaps[si][i] - m);
        mean_abs_mean += std::abs(m);
        mean_std += std::sqrt(v / (kGateSeedCount - 1));
    }
    mean_abs_mean /= static_cast<double>(n_points);
    mean_std /= static_cast<double>(n_points);

    Outcome out;
    out.pass = mean_abs_mean < 2.0 * mean_std;
    out.detail = fmt(
        "outcome-independent pool, %d seeds: mean |outcome gap| %.5f vs "
        "2x seed noise %.5f (%s)",
        kGateSeedCount, mean_abs_mean, 2.0 * mean_std,
        out.pass ? "below the noise floor" : "ABOVE the noise floor");
    return out;
}

// ---------------------------------------------------------------------- //
// 8. Mixture fits interpolate between the generating rules.
// ---------------------------------------------------------------------- //

Outcome criterion_mixture(const RecoveryArtifacts& art) {
    SimConfig sim = base_sim(RuleKind::Reinforce, art.alpha, kMixAnimals,
                             2028);
    sim.rules = {{RuleParams{RuleKind::Reinforce, 2.0 * art.alpha, 0}, 0.5},
                 {RuleParams{RuleKind::Reinforce, art.alpha, 0}, 0.5}};
    const auto pool = simulate_pool(sim);

    const FitResult res =
        fit(pool, recovery_fit(ModelKind::DNNGLM, 1, kMixEpochs));

    const SliceGrid grid = default_slice_grid();
    const auto fitted = update_slices(res.model, grid);
    const auto lo = update_slices(wrap_reinforce_rule(art.alpha), grid);
    const auto hi = update_slices(wrap_reinforce_rule(2.0 * art.alpha), grid);

    int n = 0, between = 0;
    for (std::size_t i = 0; i < fitted.size(); ++i) {
        if (!fitted[i].correct) continue;  // unrewarded rows are 0 for both
        ++n;
        const double a = std::min(lo[i].dw_stim, hi[i].dw_stim);
        const double b = std::max(lo[i].dw_stim, hi[i].dw_stim);
        if (fitted[i].dw_stim >= a && fitted[i].dw_stim <= b) ++between;
    }
    const double frac = static_cast<double>(between) / n;
    Outcome out;
    out.pass = frac >= kTolBetweenFrac;
    out.detail = fmt(
        "50/50 pool of alpha and 2*alpha: fitted update inside the two "
        "rules' envelope at %d/%d rewarded grid points (%.0f%%, need "
        ">= %.0f%%)",
        between, n, 100.0 * frac, 100.0 * kTolBetweenFrac);
    return out;
}

// ---------------------------------------------------------------------- //
// 9. Standard-error scaling.
// ---------------------------------------------------------------------- //

Outcome criterion_se_scaling() {
    const auto t0 = Clock::now();
    SeScalingConfig cfg;
    const SeScalingResult res = se_scaling_check(cfg);
    const double elapsed = secs(t0);
    Outcome out;
    out.pass = res.slope > kTolSlopeLo && res.slope < kTolSlopeHi &&
               elapsed < kSeBudgetSec;
    std::string ns;
    for (std::size_t i = 0; i < cfg.n_values.size(); ++i)
        ns += fmt("%s%ld", i ? "," : "", cfg.n_values[i]);
    out.detail = fmt(
        "N in {%s}, %d repetitions: log-log slope %.3f (want (%.1f, %.1f)), "
        "%.1fs",
        ns.c_str(), cfg.repetitions, res.slope, kTolSlopeLo, kTolSlopeHi,
        elapsed);
    return out;
}

// ---------------------------------------------------------------------- //
// 10. Reporting plumbing.
// ---------------------------------------------------------------------- //

std::string run_and_capture(const std::string& args, int* exit_code) {
    const std::string out_path = "acc_cli_out.txt";
    const std::string cmd =
        std::string(LRINFER_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
    const int status = std::system(cmd.c_str());
    *exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome criterion_plumbing() {
    std::string detail;
    bool all = true;

    // (a) Paired test against the pinned reference pair for the differences
    // {1, 2, 3, 4}: construct paired samples with exactly those differences.
    const std::vector<double> a = {2.0, 4.0, 6.0, 8.0};
    const std::vector<double> b = {1.0, 2.0, 3.0, 4.0};
    const TTestResult tt = paired_ttest(a, b);
    const bool t_ok = std::abs(tt.t - kPinnedT) < kTolTTest &&
                      std::abs(tt.p - kPinnedP) < kTolTTest;
    if (!t_ok) {
        // The pinned pair does not satisfy the paired-statistic formula
        // t = mean(d) / (sd(d)/sqrt(n)): for d = {1,2,3,4} that gives
        // t = 2.5 / (1.2910/2) = 3.8730, p = 0.0305 (df 3). The computed
        // values are reported and this sub-check is left failing rather
        // than bending the statistic to reproduce the reference.
        all = false;
        detail += fmt(
            "paired-test reference (t=%.3f, p=%.4f) unmet: the formula "
            "gives t=%.4f, p=%.4f for these differences — reference pair "
            "is internally inconsistent, statistic left faithful; ",
            kPinnedT, kPinnedP, tt.t, tt.p);
    } else {
        detail += fmt("paired t=%.3f p=%.4f matches the reference; ", tt.t,
                      tt.p);
    }

    // (b) Chance baseline is the exact closed form.
    const bool chance_ok =
        chance_log_likelihood(1) == std::log(0.5) &&
        chance_log_likelihood(500) == 500.0 * std::log(0.5) &&
        chance_log_likelihood(6000) == 6000.0 * std::log(0.5);
    all = all && chance_ok;
    detail += fmt("chance line exact: %s; ", chance_ok ? "yes" : "NO");

    // (c) Byte-stable CLI reruns under fixed seeds: simulate -> fit -> eval
    // twice, compare every artifact byte for byte.
    namespace fs = std::filesystem;
    const fs::path work = fs::temp_directory_path() / "lrinfer_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);
    const std::string cfg = (work / "cfg.json").string();
    {
        std::ofstream out(cfg, std::ios::binary);
        out << R"({
  "version": 1,
  "master_seed": 7,
  "simulate": {"n_animals": 4, "n_trials": 40,
               "rules": [{"kind": "reinforce", "alpha": 0.1}]},
  "fit": {"kind": "REINFORCE_PARAM", "epochs": 30, "patience": 0,
          "learning_rate": 0.02}
})";
    }
    bool repro = true;
    std::string first_data, first_model, first_report;
    for (int rep = 0; rep < 2; ++rep) {
        const std::string dir = (work / fmt("run%d", rep)).string();
        int code = 0;
        run_and_capture("simulate --config " + cfg + " --out-dir " + dir,
                        &code);
        repro = repro && code == 0;
        const std::string model = dir + "/model.bin";
        run_and_capture("fit --config " + cfg + " --data " + dir +
                            "/dataset.csv --out " + model,
                        &code);
        repro = repro && code == 0;
        const std::string report = dir + "/eval.json";
        run_and_capture("eval --data " + dir + "/dataset.csv --model " +
                            model + " --protocol holdout --chance --out " +
                            report,
                        &code);
        repro = repro && code == 0;
        if (rep == 0) {
            first_data = file_bytes(dir + "/dataset.csv");
            first_model = file_bytes(model);
            first_report = file_bytes(report);
        } else {
            repro = repro && file_bytes(dir + "/dataset.csv") == first_data &&
                    file_bytes(model) == first_model &&
                    file_bytes(report) == first_report;
        }
    }
    all = all && repro;
    detail += fmt("CLI rerun byte-stability (dataset, model, report): %s",
                  repro ? "yes" : "NO");

    Outcome out;
    out.pass = all;
    out.detail = detail;
    return out;
}

}  // namespace

// ---------------------------------------------------------------------- //

int main() {
    std::setvbuf(stdout, nullptr, _IONBF, 0);
    RecoveryArtifacts art;

    struct Entry {
        const char* name;
        Outcome outcome;
    };
    std::vector<Entry> entries;
    const auto t_all = Clock::now();

    auto run = [&](const char* name, auto&& fn) {
        const auto t0 = Clock::now();
        Outcome o = fn();
        std::printf("criterion %2zu: %s  %s — %s (%.0fs)\n",
                    entries.size() + 1, o.pass ? "PASS" : "FAIL", name,
                    o.detail.c_str(), secs(t0));
        entries.push_back({name, std::move(o)});
    };

    run("exact gradients", [] { return criterion_gradients(); });
    run("rule recovery", [&] { return criterion_recovery(art); });
    run("pool scaling", [&] { return criterion_pool_scaling(art); });
    run("initial weights", [&] { return criterion_initial_weights(art); });
    run("update noise", [&] { return criterion_noise(art); });
    run("history detection", [&] { return criterion_history(art); });
    run("outcome gating", [&] { return criterion_outcome_gating(art); });
    run("mixture envelope", [&] { return criterion_mixture(art); });
    run("error scaling", [] { return criterion_se_scaling(); });
    run("report plumbing", [] { return criterion_plumbing(); });

    int failures = 0;
    for (const Entry& e : entries) failures += e.outcome.pass ? 0 : 1;
    std::printf("acceptance: %zu/%zu checks pass (%.0fs total)\n",
                entries.size() - failures, entries.size(), secs(t_all));
    return failures;
}
