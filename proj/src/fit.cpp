#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "lrinfer/common.hpp"
#include "lrinfer/fit.hpp"
#include "lrinfer/rng.hpp"
#include "lrinfer/threading.hpp"

namespace lrinfer {

void validate(const FitConfig& config) {
    if (config.epochs < 1) throw ConfigError("fit: epochs must be >= 1");
    if (config.min_epochs < 0) throw ConfigError("fit: min_epochs must be >= 0");
    if (config.learning_rate <= 0.0) {
        throw ConfigError("fit: learning_rate must be > 0");
    }
    if (config.clip_norm <= 0.0) throw ConfigError("fit: clip_norm must be > 0");
    if (config.patience < 0) throw ConfigError("fit: patience must be >= 0");
    if (config.val_fraction < 0.0 || config.val_fraction >= 1.0) {
        throw ConfigError("fit: val_fraction must be in [0, 1)");
    }
    if (config.hidden < 1) throw ConfigError("fit: hidden must be >= 1");
    if (config.batch_size < 1) throw ConfigError("fit: batch_size must be >= 1");
    if (config.jobs < 1) throw ConfigError("fit: jobs must be >= 1");
    if (config.psychometric_trials < 10) {
        throw ConfigError("fit: psychometric_trials must be >= 10");
    }
    if (config.w0_mode == W0Mode::Value &&
        config.w0_value.size() != static_cast<std::size_t>(glm_dim(config.kind))) {
        throw ConfigError("fit: w0_value must match the weight dimension");
    }
}

namespace {

// Stream-seed salts; arbitrary but frozen (part of the determinism contract).
constexpr std::uint64_t kSplitSalt = 0x517EC7ULL;
constexpr std::uint64_t kInitSalt = 0xA11CEULL;
constexpr std::uint64_t kShuffleSalt = 0x5F0F1EULL;

void fisher_yates(std::vector<std::size_t>& order, Rng& rng) {
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = rng.uniform_below(i);
        std::swap(order[i - 1], order[j]);
    }
}

Vec initial_estimate(const FitConfig& config, const Session& session) {
    const int d = glm_dim(config.kind);
    switch (config.w0_mode) {
        case W0Mode::Zero:
            return Vec(d, 0.0);
        case W0Mode::Value:
            return config.w0_value;
        case W0Mode::Psychometric: {
            Vec w0 = estimate_initial_weights(session.trials, d,
                                              config.psychometric_trials);
            w0[0] += config.w0_offset_stim;
            return w0;
        }
    }
    throw ConfigError("unknown w0 mode");
}

FittedModel make_initial_model(const FitConfig& config) {
    FittedModel model;
    model.kind = config.kind;
    model.d = glm_dim(config.kind);
    model.n_inputs = network_inputs(config.kind);
    model.hidden = uses_network(config.kind) ? config.hidden : 0;
    model.w0_mode = config.w0_mode;
    model.w0_trainable = config.w0_trainable;
    model.w0_value = config.w0_value;
    model.w0_offset_stim = config.w0_offset_stim;
    model.psychometric_trials = config.psychometric_trials;

    Rng init_rng(splitmix64(config.seed ^ kInitSalt));
    if (uses_network(config.kind)) {
        if (is_recurrent(config.kind)) {
            const Gru gru(model.n_inputs, model.hidden);
            const Mlp head(model.hidden, model.hidden, model.d);
            model.params.assign(gru.n_params() + head.n_params(), 0.0);
            gru.init_params(std::span<double>(model.params).first(gru.n_params()),
                            init_rng);
            head.init_params(
                std::span<double>(model.params).subspan(gru.n_params()),
                init_rng);
        } else {
            const Mlp mlp(model.n_inputs, model.hidden, model.d);
            model.params.assign(mlp.n_params(), 0.0);
            mlp.init_params(std::span<double>(model.params), init_rng);
        }
    } else {
        // Learnable rate starts small; the baseline starts at (effectively)
        // zero — exactly 0 for the free form, -softplus(-5) for the
        // sign-constrained form.
        const double braw =
            config.kind == ModelKind::REINFORCE_PARAM_NONNEG ? -5.0 : 0.0;
        model.params = {0.02, braw};
    }
    return model;
}

}  // namespace

FitResult fit(const std::vector<Session>& dataset, const FitConfig& config) {
    validate(config);
    FitResult result;

    std::vector<const Session*> sessions;
    for (const Session& s : dataset) {
        if (s.trials.empty()) {
            const std::string w = "fit: skipping empty session " + s.animal_id;
            result.warnings.push_back(w);
            std::fprintf(stderr, "warning: %s\n", w.c_str());
            continue;
        }
        sessions.push_back(&s);
    }
    if (sessions.empty()) throw DataError("fit: no nonempty sessions");
    {
        std::set<std::string> ids;
        for (const Session* s : sessions) {
            if (!ids.insert(s->animal_id).second) {
                throw DataError("fit: duplicate animal id " + s->animal_id);
            }
        }
    }

    // Deterministic train/validation split over animals.
    const std::size_t n = sessions.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng split_rng(splitmix64(config.seed ^ kSplitSalt));
    fisher_yates(order, split_rng);
    std::size_t n_val = 0;
    if (n >= 2 && config.val_fraction > 0.0) {
        n_val = static_cast<std::size_t>(
            std::llround(config.val_fraction * static_cast<double>(n)));
        n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
    }
    std::vector<std::size_t> train_idx(order.begin(), order.end() - n_val);
    std::vector<std::size_t> val_idx(order.end() - n_val, order.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());

    FittedModel model = make_initial_model(config);
    {
        std::vector<const Session*> train;
        for (std::size_t i : train_idx) train.push_back(sessions[i]);
        model.norm = compute_norm_stats(config.kind, train);
    }

    // Initial weights for every animal; training refines the train ones when
    // trainable, validation animals keep their estimates.
    std::vector<Vec> w0_all(n);
    for (std::size_t i = 0; i < n; ++i) {
        w0_all[i] = initial_estimate(config, *sessions[i]);
    }

    const int d = model.d;
    const std::size_t n_core = model.params.size();
    const std::size_t n_flat =
        n_core + (config.w0_trainable ? train_idx.size() * d : 0);
    Vec flat(n_flat, 0.0);
    std::copy(model.params.begin(), model.params.end(), flat.begin());
    std::map<std::size_t, std::size_t> w0_slot;  // session index -> flat offset
    if (config.w0_trainable) {
        std::size_t o = n_core;
        for (std::size_t i : train_idx) {
            std::copy(w0_all[i].begin(), w0_all[i].end(), flat.begin() + o);
            w0_slot[i] = o;
            o += d;
        }
    }

    Adam adam(n_flat, config.learning_rate);
    Rng shuffle_rng(splitmix64(config.seed ^ kShuffleSalt));

    auto w0_of = [&](std::size_t i) -> Vec {
        const auto it = w0_slot.find(i);
        if (it == w0_slot.end()) return w0_all[i];
        return Vec(flat.begin() + it->second, flat.begin() + it->second + d);
    };

    auto validation_loss = [&]() {
        std::vector<double> losses(val_idx.size(), 0.0);
        model.params.assign(flat.begin(), flat.begin() + n_core);
        parallel_for(val_idx.size(), config.jobs, [&](std::size_t k) {
            losses[k] = session_negative_ll(model, *sessions[val_idx[k]],
                                            w0_all[val_idx[k]]);
        });
        double total = 0.0;
        for (double l : losses) total += l;
        return total;
    };

    Vec best_flat = flat;
    double best_metric = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    int epochs_run = 0;

    std::vector<std::size_t> sched(train_idx);
    Vec grad(n_flat);
    std::vector<SessionGradient> batch_grads;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        fisher_yates(sched, shuffle_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < sched.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(
                sched.size(), start + static_cast<std::size_t>(config.batch_size));
            const std::size_t bs = stop - start;
            batch_grads.assign(bs, SessionGradient{});
            model.params.assign(flat.begin(), flat.begin() + n_core);
            parallel_for(bs, config.jobs, [&](std::size_t k) {
                const std::size_t i = sched[start + k];
                batch_grads[k] = session_gradient(model, *sessions[i], w0_of(i));
            });
            // Serial in-order reduction keeps results identical for any
            // worker count.
            std::fill(grad.begin(), grad.end(), 0.0);
            const double scale = 1.0 / static_cast<double>(bs);
            for (std::size_t k = 0; k < bs; ++k) {
                const std::size_t i = sched[start + k];
                if (!std::isfinite(batch_grads[k].loss)) {
                    throw NumericError("fit: non-finite loss at epoch " +
                                       std::to_string(epoch) + ", session " +
                                       sessions[i]->animal_id);
                }
                epoch_loss += batch_grads[k].loss;
                for (std::size_t j = 0; j < n_core; ++j) {
                    grad[j] += scale * batch_grads[k].core[j];
                }
                const auto it = w0_slot.find(i);
                if (it != w0_slot.end()) {
                    for (int j = 0; j < d; ++j) {
                        grad[it->second + j] += scale * batch_grads[k].w0[j];
                    }
                }
            }
            clip_global_norm(std::span<double>(grad), config.clip_norm);
            adam.step(std::span<double>(flat), std::span<const double>(grad));
        }

        const double val = val_idx.empty() ? epoch_loss : validation_loss();
        model.train_curve.push_back(epoch_loss);
        model.val_curve.push_back(val);
        epochs_run = epoch;
        if (val < best_metric) {
            best_metric = val;
            best_flat = flat;
            best_epoch = epoch;
        }
        if (epoch >= config.min_epochs && epoch - best_epoch >= config.patience &&
            config.patience > 0) {
            break;
        }
    }

    flat = best_flat;
    model.params.assign(flat.begin(), flat.begin() + n_core);
    model.epochs_run = epochs_run;
    model.best_epoch = best_epoch;

    for (std::size_t i = 0; i < n; ++i) {
        model.w0[sessions[i]->animal_id] = w0_of(i);
    }

    double train_total = 0.0;
    long train_trials = 0;
    for (std::size_t i : train_idx) {
        train_total += session_negative_ll(model, *sessions[i], w0_of(i));
        train_trials += static_cast<long>(sessions[i]->trials.size());
    }
    double val_total = 0.0;
    long val_trials = 0;
    for (std::size_t i : val_idx) {
        val_total += session_negative_ll(model, *sessions[i], w0_all[i]);
        val_trials += static_cast<long>(sessions[i]->trials.size());
    }
    model.train_loss = train_total;
    model.val_loss = val_total;
    model.n_train_animals = static_cast<int>(train_idx.size());
    model.n_val_animals = static_cast<int>(val_idx.size());
    model.n_train_trials = train_trials;
    model.n_val_trials = val_trials;

    result.model = std::move(model);
    return result;
}

std::vector<Vec> predict_weight_trajectory(const FittedModel& model,
                                           const Session& session) {
    std::vector<Vec> trajectory;
    session_negative_ll(model, session, initial_weights_for(model, session),
                        &trajectory, nullptr);
    return trajectory;
}

LlReport heldout_log_likelihood(const FittedModel& model,
                                const std::vector<Session>& sessions,
                                int jobs) {
    LlReport report;
    std::vector<double> lls(sessions.size(), 0.0);
    parallel_for(sessions.size(), jobs, [&](std::size_t i) {
        lls[i] = -session_negative_ll(model, sessions[i],
                                      initial_weights_for(model, sessions[i]));
    });
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        report.per_animal[sessions[i].animal_id] += lls[i];
        report.trials_per_animal[sessions[i].animal_id] +=
            static_cast<long>(sessions[i].trials.size());
        report.total += lls[i];
        report.n_trials += static_cast<long>(sessions[i].trials.size());
    }
    report.per_trial_mean =
        report.n_trials > 0 ? report.total / static_cast<double>(report.n_trials)
                            : 0.0;
    return report;
}

}  // namespace lrinfer
