#include "lrinfer/rules.hpp"

#include <algorithm>

#include "lrinfer/common.hpp"

namespace lrinfer {

Vec reinforce_update(const Vec& w, const Vec& x, int choice, int reward,
                     double alpha) {
    const std::size_t d = w.size();
    Vec dw(d, 0.0);
    if (reward == 0) return dw;
    const double eps = choice_sign(choice);
    const double p_taken = sigmoid(eps * dot(w, x));
    const double c = alpha * eps * (1.0 - p_taken);
    for (std::size_t i = 0; i < d; ++i) dw[i] = c * x[i];
    return dw;
}

Vec max_likelihood_update(const Vec& w, const Vec& x, int label, double alpha) {
    const std::size_t d = w.size();
    const double eps = choice_sign(label);
    const double p_correct = sigmoid(eps * dot(w, x));
    const double c = alpha * eps * (1.0 - p_correct);
    Vec dw(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) dw[i] = c * x[i];
    return dw;
}

int etrace_reward(const std::vector<int>& recent_corrects, double threshold) {
    if (recent_corrects.empty()) {
        throw DataError("etrace_reward: empty correctness window");
    }
    int n_correct = 0;
    for (int c : recent_corrects) n_correct += c;
    const double frac =
        static_cast<double>(n_correct) / static_cast<double>(recent_corrects.size());
    return frac >= threshold ? 1 : 0;
}

void EtraceRule::reset() {
    terms_.clear();
    corrects_.clear();
}

Vec EtraceRule::update(const Vec& w, const Vec& x, int choice, int reward) {
    const std::size_t d = w.size();
    const double eps = choice_sign(choice);
    const double p_taken = sigmoid(eps * dot(w, x));
    // alpha is folded into each stored term so that a window of zero
    // reproduces the one-step rule bit for bit.
    const double c = alpha_ * eps * (1.0 - p_taken);
    Vec term(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) term[i] = c * x[i];

    // Eligibility stack keeps the current trial plus up to S previous ones.
    terms_.push_back(std::move(term));
    if (terms_.size() > static_cast<std::size_t>(window_) + 1) terms_.pop_front();

    // Reward window covers the last min(t+1, max(S,1)) trials including the
    // current one; with S=0 it is the current trial alone.
    corrects_.push_back(reward);
    const std::size_t reward_window = std::max(window_, 1);
    if (corrects_.size() > reward_window) corrects_.pop_front();
    const int gate =
        etrace_reward(std::vector<int>(corrects_.begin(), corrects_.end()));

    Vec dw(d, 0.0);
    if (gate == 0) return dw;
    for (const Vec& e : terms_) {
        for (std::size_t i = 0; i < d; ++i) dw[i] += e[i];
    }
    return dw;
}

GroundTruthRule::GroundTruthRule(const RuleParams& params)
    : params_(params), etrace_(params.alpha, params.etrace_window) {
    if (params_.alpha < 0.0) throw ConfigError("rule: alpha must be >= 0");
    if (params_.etrace_window < 0) {
        throw ConfigError("rule: etrace window must be >= 0");
    }
}

void GroundTruthRule::reset() {
    etrace_.reset();
}

Vec GroundTruthRule::update(const Vec& w, const Vec& x, int choice, int reward,
                            int label) {
    switch (params_.kind) {
        case RuleKind::Reinforce:
            return reinforce_update(w, x, choice, reward, params_.alpha);
        case RuleKind::MaxLikelihood:
            return max_likelihood_update(w, x, label, params_.alpha);
        case RuleKind::EtraceReinforce:
            return etrace_.update(w, x, choice, reward);
    }
    throw ConfigError("rule: unknown kind");
}

}  // namespace lrinfer
