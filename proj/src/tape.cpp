#include <algorithm>
#include <cmath>
#include <cstring>

#include "lrinfer/common.hpp"
#include "lrinfer/fit.hpp"

// Model-kind plumbing, the per-session forward pass, and the hand-written
// reverse-mode sweep through the unrolled recurrence w_{t+1} = w_t + dw_t.
// The loss is sum_t -log p(y_t | x_t, w_t), evaluated at the pre-update
// weights; gradients flow both through each trial's likelihood and through
// the dependence of every later update on w_t.

namespace lrinfer {

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::DNNGLM: return "DNNGLM";
        case ModelKind::RNNGLM: return "RNNGLM";
        case ModelKind::DNNGLM_HISTORY: return "DNNGLM_HISTORY";
        case ModelKind::REINFORCE_PARAM: return "REINFORCE_PARAM";
        case ModelKind::REINFORCE_PARAM_NONNEG: return "REINFORCE_PARAM_NONNEG";
        case ModelKind::REINFORCE_HISTORY: return "REINFORCE_HISTORY";
    }
    throw ConfigError("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& name) {
    for (ModelKind k :
         {ModelKind::DNNGLM, ModelKind::RNNGLM, ModelKind::DNNGLM_HISTORY,
          ModelKind::REINFORCE_PARAM, ModelKind::REINFORCE_PARAM_NONNEG,
          ModelKind::REINFORCE_HISTORY}) {
        if (name == to_string(k)) return k;
    }
    throw ConfigError("unknown model kind: " + name);
}

int glm_dim(ModelKind kind) {
    return kind == ModelKind::REINFORCE_HISTORY ? 3 : 2;
}

int network_inputs(ModelKind kind) {
    switch (kind) {
        case ModelKind::DNNGLM:
        case ModelKind::RNNGLM:
            return 3 + glm_dim(kind);  // s, y, r, w
        case ModelKind::DNNGLM_HISTORY:
            return 6 + glm_dim(kind);  // + previous s, y, r
        default:
            return 0;
    }
}

bool is_recurrent(ModelKind kind) { return kind == ModelKind::RNNGLM; }

bool uses_network(ModelKind kind) { return network_inputs(kind) > 0; }

const char* to_string(W0Mode mode) {
    switch (mode) {
        case W0Mode::Psychometric: return "psychometric";
        case W0Mode::Zero: return "zero";
        case W0Mode::Value: return "value";
    }
    throw ConfigError("unknown w0 mode");
}

W0Mode w0_mode_from_string(const std::string& name) {
    for (W0Mode m : {W0Mode::Psychometric, W0Mode::Zero, W0Mode::Value}) {
        if (name == to_string(m)) return m;
    }
    throw ConfigError("unknown w0 mode: " + name);
}

NormStats identity_norm(int n_inputs) {
    return {Vec(n_inputs, 0.0), Vec(n_inputs, 1.0)};
}

NormStats compute_norm_stats(ModelKind kind,
                             const std::vector<const Session*>& train) {
    NormStats stats = identity_norm(network_inputs(kind));
    if (kind != ModelKind::DNNGLM_HISTORY) return stats;
    // z-score the previous-trial slots (3: s_prev, 4: y_prev, 5: r_prev)
    // over every training trial, zero-padded first trials included.
    double sum[3] = {0, 0, 0}, sumsq[3] = {0, 0, 0};
    long n = 0;
    for (const Session* s : train) {
        for (std::size_t t = 0; t < s->trials.size(); ++t) {
            const double v[3] = {
                t > 0 ? s->trials[t - 1].stimulus : 0.0,
                t > 0 ? static_cast<double>(s->trials[t - 1].choice) : 0.0,
                t > 0 ? static_cast<double>(s->trials[t - 1].reward) : 0.0};
            for (int j = 0; j < 3; ++j) {
                sum[j] += v[j];
                sumsq[j] += v[j] * v[j];
            }
            ++n;
        }
    }
    if (n == 0) return stats;
    for (int j = 0; j < 3; ++j) {
        const double mean = sum[j] / static_cast<double>(n);
        const double var = sumsq[j] / static_cast<double>(n) - mean * mean;
        stats.mean[3 + j] = mean;
        stats.stdv[3 + j] = std::sqrt(std::max(var, 0.0)) > 1e-8
                                ? std::sqrt(std::max(var, 0.0))
                                : 1.0;
    }
    return stats;
}

namespace {

double softplus(double x) {
    return x > 30.0 ? x : std::log1p(std::exp(x));
}

// Data-only features of one trial (previous-trial values zero at t = 0).
struct TrialFeatures {
    double s = 0.0;
    int y = 0, r = 0;
    double s_prev = 0.0;
    int y_prev = 0, r_prev = 0;
    double eps_prev = 0.0;  // signed previous choice, 0 on the first trial
};

TrialFeatures features_at(const Session& session, std::size_t t) {
    TrialFeatures f;
    const Trial& trial = session.trials[t];
    f.s = trial.stimulus;
    f.y = trial.choice;
    f.r = trial.reward;
    if (t > 0) {
        const Trial& prev = session.trials[t - 1];
        f.s_prev = prev.stimulus;
        f.y_prev = prev.choice;
        f.r_prev = prev.reward;
        f.eps_prev = choice_sign(prev.choice);
    }
    return f;
}

Vec glm_covariates(ModelKind kind, const TrialFeatures& f) {
    if (glm_dim(kind) == 3) return {f.s, 1.0, f.eps_prev};
    return {f.s, 1.0};
}

Vec network_input(ModelKind kind, const TrialFeatures& f, const Vec& w,
                  const NormStats& norm) {
    Vec u;
    if (kind == ModelKind::DNNGLM_HISTORY) {
        u = {f.s,
             static_cast<double>(f.y),
             static_cast<double>(f.r),
             f.s_prev,
             static_cast<double>(f.y_prev),
             static_cast<double>(f.r_prev)};
    } else {
        u = {f.s, static_cast<double>(f.y), static_cast<double>(f.r)};
    }
    u.insert(u.end(), w.begin(), w.end());
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = (u[i] - norm.mean[i]) / norm.stdv[i];
    }
    return u;
}

struct ParamRule {
    double alpha = 0.0;
    double b = 0.0;
    double db_draw = 1.0;  // d(b)/d(raw second parameter)
};

ParamRule param_rule(const FittedModel& model) {
    ParamRule r;
    r.alpha = model.params.at(0);
    const double raw = model.params.at(1);
    if (model.kind == ModelKind::REINFORCE_PARAM_NONNEG) {
        r.b = -softplus(raw);
        r.db_draw = -sigmoid(raw);
    } else {
        r.b = raw;
        r.db_draw = 1.0;
    }
    return r;
}

// dw = alpha (r - b) eps_y (1 - p_taken) x, with p_taken the clamped policy
// probability of the taken choice.
Vec param_rule_dw(const ParamRule& rule, const TrialFeatures& f, const Vec& x,
                  double logit, double* p_taken_out) {
    const double eps = choice_sign(f.y);
    const double p_taken = sigmoid(eps * logit);
    if (p_taken_out != nullptr) *p_taken_out = p_taken;
    const double coef =
        rule.alpha * (static_cast<double>(f.r) - rule.b) * eps * (1.0 - p_taken);
    Vec dw(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dw[i] = coef * x[i];
    return dw;
}

struct TrialTape {
    TrialFeatures f;
    Vec x;
    double logit = 0.0;
    double p = 0.5;      // P(choice = 1)
    double p_taken = 0.5;  // parametric kinds
    Mlp::Cache mlp;
    Gru::Cache gru;
};

struct Dims {
    int d, in, hidden, n_gru, n_mlp;
    int mlp_in;  // hidden for recurrent models, in otherwise
};

Dims dims_of(const FittedModel& model) {
    Dims dims{};
    dims.d = glm_dim(model.kind);
    dims.in = network_inputs(model.kind);
    dims.hidden = model.hidden;
    dims.n_gru = 0;
    dims.mlp_in = dims.in;
    if (is_recurrent(model.kind)) {
        dims.n_gru = Gru(dims.in, dims.hidden).n_params();
        dims.mlp_in = dims.hidden;
    }
    dims.n_mlp = uses_network(model.kind)
                     ? Mlp(dims.mlp_in, dims.hidden, dims.d).n_params()
                     : 0;
    return dims;
}

void check_model(const FittedModel& model) {
    const Dims dims = dims_of(model);
    const std::size_t expected =
        uses_network(model.kind) ? static_cast<std::size_t>(dims.n_gru + dims.n_mlp)
                                 : 2;
    if (model.params.size() != expected) {
        throw ConfigError("model: parameter block size mismatch");
    }
    if (model.norm.mean.size() != static_cast<std::size_t>(dims.in) ||
        model.norm.stdv.size() != static_cast<std::size_t>(dims.in)) {
        throw ConfigError("model: normalization stats size mismatch");
    }
}

}  // namespace

double param_rule_alpha(const FittedModel& model) {
    if (uses_network(model.kind)) {
        throw ConfigError("alpha: not a parametric-rule model");
    }
    return param_rule(model).alpha;
}

double param_rule_baseline(const FittedModel& model) {
    if (uses_network(model.kind)) {
        throw ConfigError("baseline: not a parametric-rule model");
    }
    return param_rule(model).b;
}

double session_negative_ll(const FittedModel& model, const Session& session,
                           const Vec& w0, std::vector<Vec>* trajectory,
                           std::vector<Vec>* updates) {
    check_model(model);
    const Dims dims = dims_of(model);
    if (w0.size() != static_cast<std::size_t>(dims.d)) {
        throw ConfigError("session: w0 dimension mismatch");
    }
    const std::span<const double> p(model.params);
    std::optional<Mlp> mlp;
    std::optional<Gru> gru;
    if (uses_network(model.kind)) mlp.emplace(dims.mlp_in, dims.hidden, dims.d);
    if (is_recurrent(model.kind)) gru.emplace(dims.in, dims.hidden);
    const ParamRule rule =
        uses_network(model.kind) ? ParamRule{} : param_rule(model);

    Vec w = w0;
    Vec h(is_recurrent(model.kind) ? dims.hidden : 0, 0.0);
    double loss = 0.0;
    if (trajectory != nullptr) {
        trajectory->clear();
        trajectory->push_back(w);
    }
    if (updates != nullptr) updates->clear();

    for (std::size_t t = 0; t < session.trials.size(); ++t) {
        const TrialFeatures f = features_at(session, t);
        const Vec x = glm_covariates(model.kind, f);
        const double logit = dot(w, x);
        loss -= f.y == 1 ? log_sigmoid(logit) : log_sigmoid(-logit);

        Vec dw;
        if (uses_network(model.kind)) {
            const Vec u = network_input(model.kind, f, w, model.norm);
            if (is_recurrent(model.kind)) {
                h = gru->step(p.first(dims.n_gru), u, h, nullptr);
                dw = mlp->forward(p.subspan(dims.n_gru), h, nullptr);
            } else {
                dw = mlp->forward(p, u, nullptr);
            }
        } else {
            dw = param_rule_dw(rule, f, x, logit, nullptr);
        }
        for (int i = 0; i < dims.d; ++i) w[i] += dw[i];
        if (trajectory != nullptr) trajectory->push_back(w);
        if (updates != nullptr) updates->push_back(std::move(dw));
    }
    return loss;
}

SessionGradient session_gradient(const FittedModel& model,
                                 const Session& session, const Vec& w0,
                                 bool detach_recurrence) {
    check_model(model);
    const Dims dims = dims_of(model);
    if (w0.size() != static_cast<std::size_t>(dims.d)) {
        throw ConfigError("session: w0 dimension mismatch");
    }
    const std::span<const double> p(model.params);
    std::optional<Mlp> mlp;
    std::optional<Gru> gru;
    if (uses_network(model.kind)) mlp.emplace(dims.mlp_in, dims.hidden, dims.d);
    if (is_recurrent(model.kind)) gru.emplace(dims.in, dims.hidden);
    const ParamRule rule =
        uses_network(model.kind) ? ParamRule{} : param_rule(model);

    const std::size_t T = session.trials.size();
    std::vector<TrialTape> tape(T);

    // Forward pass, recording per-trial intermediates.
    Vec w = w0;
    Vec h(is_recurrent(model.kind) ? dims.hidden : 0, 0.0);
    double loss = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        TrialTape& tt = tape[t];
        tt.f = features_at(session, t);
        tt.x = glm_covariates(model.kind, tt.f);
        tt.logit = dot(w, tt.x);
        tt.p = sigmoid(tt.logit);
        loss -= tt.f.y == 1 ? log_sigmoid(tt.logit) : log_sigmoid(-tt.logit);

        Vec dw;
        if (uses_network(model.kind)) {
            const Vec u = network_input(model.kind, tt.f, w, model.norm);
            if (is_recurrent(model.kind)) {
                h = gru->step(p.first(dims.n_gru), u, h, &tt.gru);
                dw = mlp->forward(p.subspan(dims.n_gru), h, &tt.mlp);
            } else {
                dw = mlp->forward(p, u, &tt.mlp);
            }
        } else {
            dw = param_rule_dw(rule, tt.f, tt.x, tt.logit, &tt.p_taken);
        }
        for (int i = 0; i < dims.d; ++i) w[i] += dw[i];
    }

    SessionGradient grad;
    grad.loss = loss;
    grad.core.assign(model.params.size(), 0.0);
    grad.w0.assign(dims.d, 0.0);

    // Reverse sweep. Entering step t, w_bar = dL/dw_{t+1} and (recurrent)
    // h_bar = dL/dh_t as contributed by steps > t.
    Vec w_bar(dims.d, 0.0);
    Vec h_bar(is_recurrent(model.kind) ? dims.hidden : 0, 0.0);
    std::span<double> g(grad.core);
    for (std::size_t ti = T; ti-- > 0;) {
        const TrialTape& tt = tape[ti];

        // Path through dw_t = F(...): parameter gradients plus the update's
        // own dependence on w_t (dropped when the recurrence is detached).
        Vec w_from_update(dims.d, 0.0);
        if (uses_network(model.kind)) {
            Vec du;
            if (is_recurrent(model.kind)) {
                const Vec dh_head = mlp->backward(p.subspan(dims.n_gru), tt.mlp,
                                                  w_bar, g.subspan(dims.n_gru));
                for (int i = 0; i < dims.hidden; ++i) h_bar[i] += dh_head[i];
                du.assign(dims.in, 0.0);
                Vec h_prev_bar(dims.hidden, 0.0);
                gru->backward(p.first(dims.n_gru), tt.gru, h_bar,
                              g.first(dims.n_gru), du, h_prev_bar);
                h_bar = std::move(h_prev_bar);
            } else {
                du = mlp->backward(p, tt.mlp, w_bar, g);
            }
            // The last d input slots carry w_t; undo the slot scaling.
            for (int i = 0; i < dims.d; ++i) {
                const int slot = dims.in - dims.d + i;
                w_from_update[i] = du[slot] / model.norm.stdv[slot];
            }
        } else {
            const double eps = choice_sign(tt.f.y);
            const double one_minus_p = 1.0 - tt.p_taken;
            const double q = dot(w_bar, tt.x);
            const double rb = static_cast<double>(tt.f.r) - rule.b;
            g[0] += q * rb * eps * one_minus_p;
            g[1] += q * (-rule.alpha) * eps * one_minus_p * rule.db_draw;
            if (std::abs(tt.logit) < kLogitClamp) {
                const double coef_w =
                    -rule.alpha * rb * q * tt.p_taken * one_minus_p;
                for (int i = 0; i < dims.d; ++i) {
                    w_from_update[i] = coef_w * tt.x[i];
                }
            }
        }

        // w_{t+1} = w_t + dw_t (identity), the update's w-dependence, and the
        // likelihood at trial t: d(-log p(y_t))/dw_t = (p - y) x.
        if (!detach_recurrence) {
            for (int i = 0; i < dims.d; ++i) w_bar[i] += w_from_update[i];
        }
        if (std::abs(tt.logit) < kLogitClamp) {
            const double py = tt.p - static_cast<double>(tt.f.y);
            for (int i = 0; i < dims.d; ++i) w_bar[i] += py * tt.x[i];
        }
    }
    grad.w0 = w_bar;
    return grad;
}

Vec estimate_initial_weights(std::span<const Trial> trials, int d,
                             int max_trials) {
    if (trials.size() < 10) {
        throw DataError("initial-weight estimate needs at least 10 trials");
    }
    const std::size_t n =
        std::min(trials.size(), static_cast<std::size_t>(max_trials));
    std::map<double, std::pair<long, long>> groups;  // s -> (count, right)
    for (std::size_t t = 0; t < n; ++t) {
        auto& g = groups[trials[t].stimulus];
        g.first += 1;
        g.second += trials[t].choice;
    }
    if (groups.size() < 2) {
        throw DataError(
            "initial-weight estimate underdetermined: need >= 2 distinct "
            "stimulus values");
    }
    // Count-weighted least squares of [s, 1] . w = logit(p_smoothed).
    double a00 = 0, a01 = 0, a11 = 0, b0 = 0, b1 = 0;
    for (const auto& [s, g] : groups) {
        const double count = static_cast<double>(g.first);
        const double p = (static_cast<double>(g.second) + 1.0) / (count + 2.0);
        const double logit = std::log(p / (1.0 - p));
        a00 += count * s * s;
        a01 += count * s;
        a11 += count;
        b0 += count * s * logit;
        b1 += count * logit;
    }
    const double det = a00 * a11 - a01 * a01;
    if (std::abs(det) < 1e-12) {
        throw DataError("initial-weight estimate underdetermined: singular fit");
    }
    Vec w(d, 0.0);
    w[0] = (b0 * a11 - b1 * a01) / det;
    w[1] = (a00 * b1 - a01 * b0) / det;
    return w;
}

Vec initial_weights_for(const FittedModel& model, const Session& session) {
    const auto it = model.w0.find(session.animal_id);
    if (it != model.w0.end()) return it->second;
    const int d = glm_dim(model.kind);
    switch (model.w0_mode) {
        case W0Mode::Zero:
            return Vec(d, 0.0);
        case W0Mode::Value:
            return model.w0_value;
        case W0Mode::Psychometric: {
            Vec w0 = estimate_initial_weights(session.trials, d,
                                              model.psychometric_trials);
            w0[0] += model.w0_offset_stim;
            return w0;
        }
    }
    throw ConfigError("unknown w0 mode");
}

double chance_log_likelihood(long n_trials) {
    return static_cast<double>(n_trials) * std::log(0.5);
}

ModelEvaluator::ModelEvaluator(const FittedModel& model)
    : model_(model),
      mlp_(uses_network(model.kind)
               ? Mlp(is_recurrent(model.kind) ? model.hidden
                                              : network_inputs(model.kind),
                     model.hidden, glm_dim(model.kind))
               : Mlp(1, 1, 1)),
      gru_(is_recurrent(model.kind) ? Gru(network_inputs(model.kind), model.hidden)
                                    : Gru(1, 1)) {
    check_model(model);
    reset();
}

void ModelEvaluator::reset() {
    h_.assign(is_recurrent(model_.kind) ? model_.hidden : 0, 0.0);
    has_prev_ = false;
    prev_stimulus_ = 0.0;
    prev_choice_ = 0;
    prev_reward_ = 0;
}

Vec ModelEvaluator::step(const Vec& w, double stimulus, int choice,
                         int reward) {
    const int d = glm_dim(model_.kind);
    if (w.size() != static_cast<std::size_t>(d)) {
        throw ConfigError("evaluator: weight dimension mismatch");
    }
    TrialFeatures f;
    f.s = stimulus;
    f.y = choice;
    f.r = reward;
    if (has_prev_) {
        f.s_prev = prev_stimulus_;
        f.y_prev = prev_choice_;
        f.r_prev = prev_reward_;
        f.eps_prev = choice_sign(prev_choice_);
    }
    const Vec x = glm_covariates(model_.kind, f);
    const double logit = dot(w, x);

    Vec dw;
    const std::span<const double> p(model_.params);
    if (uses_network(model_.kind)) {
        const Vec u = network_input(model_.kind, f, w, model_.norm);
        if (is_recurrent(model_.kind)) {
            const Dims dims = dims_of(model_);
            h_ = gru_.step(p.first(dims.n_gru), u, h_, nullptr);
            dw = mlp_.forward(p.subspan(dims.n_gru), h_, nullptr);
        } else {
            dw = mlp_.forward(p, u, nullptr);
        }
    } else {
        dw = param_rule_dw(param_rule(model_), f, x, logit, nullptr);
    }

    has_prev_ = true;
    prev_stimulus_ = stimulus;
    prev_choice_ = choice;
    prev_reward_ = reward;
    return dw;
}

FittedModel wrap_reinforce_rule(double alpha, double baseline, int d) {
    FittedModel m;
    m.kind = d == 3 ? ModelKind::REINFORCE_HISTORY : ModelKind::REINFORCE_PARAM;
    if (d != 2 && d != 3) throw ConfigError("rule wrap: d must be 2 or 3");
    m.d = d;
    m.n_inputs = 0;
    m.hidden = 0;
    m.params = {alpha, baseline};
    m.norm = identity_norm(0);
    m.w0_mode = W0Mode::Zero;
    m.w0_trainable = false;
    return m;
}

}  // namespace lrinfer
