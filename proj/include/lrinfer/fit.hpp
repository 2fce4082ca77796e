#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lrinfer/glm.hpp"
#include "lrinfer/nets.hpp"

namespace lrinfer {

enum class ModelKind {
    DNNGLM,                 // feedforward update: dw = f([s, y, r, w])
    RNNGLM,                 // recurrent state over trials, feedforward head
    DNNGLM_HISTORY,         // previous-trial (s, y, r) appended to the input
    REINFORCE_PARAM,        // dw = a (r - b) eps_y (1 - p_y) x, learnable a, b
    REINFORCE_PARAM_NONNEG, // same with b = -softplus(beta) <= 0
    REINFORCE_HISTORY,      // REINFORCE_PARAM on covariates [s, 1, eps_prev]
};

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

int glm_dim(ModelKind kind);        // 3 for REINFORCE_HISTORY, else 2
int network_inputs(ModelKind kind); // 0 for the parametric kinds
bool is_recurrent(ModelKind kind);
bool uses_network(ModelKind kind);

// Per-slot normalization of the network input; identity (mean 0, std 1)
// everywhere except the previous-trial slots of DNNGLM_HISTORY, which are
// z-scored with training-pool statistics.
struct NormStats {
    Vec mean, stdv;
};

NormStats identity_norm(int n_inputs);
NormStats compute_norm_stats(ModelKind kind,
                             const std::vector<const Session*>& train);

enum class W0Mode {
    Psychometric,  // per-animal logit-transform estimate from early trials
    Zero,
    Value,         // one shared fixed vector
};

const char* to_string(W0Mode mode);
W0Mode w0_mode_from_string(const std::string& name);

struct FitConfig {
    ModelKind kind = ModelKind::DNNGLM;
    std::uint64_t seed = 0;
    int epochs = 2000;
    int min_epochs = 0;
    double learning_rate = 1e-3;
    double clip_norm = 5.0;
    int patience = 50;          // early stop on validation LL
    double val_fraction = 0.1;  // of training animals, at least 1 when n >= 2
    int hidden = 32;
    int batch_size = 1;         // sessions per optimizer step
    int jobs = 1;               // parallel per-session gradients in a batch

    W0Mode w0_mode = W0Mode::Psychometric;
    bool w0_trainable = true;
    Vec w0_value = {};          // required for W0Mode::Value
    double w0_offset_stim = 0.0;  // diagnostic offset on psychometric inits
    int psychometric_trials = 100;
};

void validate(const FitConfig& config);

struct FittedModel {
    ModelKind kind = ModelKind::DNNGLM;
    int d = 2;
    int n_inputs = 0;
    int hidden = 0;
    Vec params;  // network parameters, then any rule scalars
    NormStats norm;

    W0Mode w0_mode = W0Mode::Psychometric;
    bool w0_trainable = true;
    Vec w0_value = {};
    double w0_offset_stim = 0.0;
    int psychometric_trials = 100;
    std::map<std::string, Vec> w0;  // per-animal initial weights

    // Training diagnostics (not serialized into the model file).
    std::vector<double> train_curve, val_curve;  // negative LL per epoch
    int epochs_run = 0;
    int best_epoch = 0;
    double train_loss = 0.0, val_loss = 0.0;
    int n_train_animals = 0, n_val_animals = 0;
    long n_train_trials = 0, n_val_trials = 0;
};

// Effective learnable-rate / baseline of a fitted parametric rule.
double param_rule_alpha(const FittedModel& model);
double param_rule_baseline(const FittedModel& model);

// Psychometric initial-weight estimate: group the trials by stimulus,
// Laplace-smooth the per-stimulus p(choice=1), logit-transform, and fit w by
// count-weighted least squares on (covariates(s), logit). For d=3 the
// history coordinate is set to 0.
Vec estimate_initial_weights(std::span<const Trial> trials, int d = 2,
                             int max_trials = 100);

// The model's initial weights for a session: the stored per-animal vector
// when present, otherwise derived per w0_mode.
Vec initial_weights_for(const FittedModel& model, const Session& session);

// Forward pass of the unrolled recurrence for one session: per trial,
// evaluate the choice likelihood at the pre-update weights, compute dw from
// the model, advance w. Returns total negative log-likelihood. When
// trajectory/updates are non-null they receive w_0..w_T (length T+1) and
// dw_0..dw_{T-1}.
double session_negative_ll(const FittedModel& model, const Session& session,
                           const Vec& w0, std::vector<Vec>* trajectory = nullptr,
                           std::vector<Vec>* updates = nullptr);

struct SessionGradient {
    double loss = 0.0;
    Vec core;  // d(loss)/d(model.params)
    Vec w0;    // d(loss)/d(w0)
};

// Exact reverse-mode gradient through the full unroll. With
// detach_recurrence the contribution of dw/dw_t is dropped (truncated
// recurrence), a diagnostic used to verify the recurrent path matters.
SessionGradient session_gradient(const FittedModel& model,
                                 const Session& session, const Vec& w0,
                                 bool detach_recurrence = false);

struct FitResult {
    FittedModel model;
    std::vector<std::string> warnings;
};

FitResult fit(const std::vector<Session>& dataset, const FitConfig& config);

// Rolls the fitted update forward along the session's actual inputs;
// returns w_0..w_T.
std::vector<Vec> predict_weight_trajectory(const FittedModel& model,
                                           const Session& session);

struct LlReport {
    std::map<std::string, double> per_animal;
    std::map<std::string, long> trials_per_animal;
    double total = 0.0;
    long n_trials = 0;
    double per_trial_mean = 0.0;
};

LlReport heldout_log_likelihood(const FittedModel& model,
                                const std::vector<Session>& sessions,
                                int jobs = 1);

// Chance-level (w = 0 forever) log-likelihood: n_trials * ln(1/2), computed
// in closed form so equality checks are exact.
double chance_log_likelihood(long n_trials);

// Sequential update evaluator for analysis code: feed trials in order with
// explicit weights; recurrent state and previous-trial features are tracked
// internally. reset() marks a session boundary.
class ModelEvaluator {
  public:
    explicit ModelEvaluator(const FittedModel& model);

    void reset();
    // Returns the model's dw for a trial with the given pre-update weights.
    Vec step(const Vec& w, double stimulus, int choice, int reward);

  private:
    const FittedModel& model_;
    Mlp mlp_;
    Gru gru_;
    Vec h_;
    bool has_prev_ = false;
    double prev_stimulus_ = 0.0;
    int prev_choice_ = 0;
    int prev_reward_ = 0;
};

// Wraps a ground-truth Markovian rule (or parametric-rule evaluation) as a
// FittedModel so analysis code can treat rules and fits uniformly.
FittedModel wrap_reinforce_rule(double alpha, double baseline = 0.0, int d = 2);

}  // namespace lrinfer
