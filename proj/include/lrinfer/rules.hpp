#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "lrinfer/glm.hpp"

namespace lrinfer {

enum class RuleKind {
    Reinforce,      // dw = a * r * eps_y * (1 - p_y) * x
    MaxLikelihood,  // dw = a * eps_z * (1 - p_z) * x
    EtraceReinforce,
};

struct RuleParams {
    RuleKind kind = RuleKind::Reinforce;
    double alpha = 0.05;
    int etrace_window = 10;  // S; only used by EtraceReinforce
};

// Stateless single-trial updates. p_y / p_z are the policy probabilities of
// the taken / correct choice under the pre-update weights.
Vec reinforce_update(const Vec& w, const Vec& x, int choice, int reward,
                     double alpha);
Vec max_likelihood_update(const Vec& w, const Vec& x, int label, double alpha);

// Windowed reward for the eligibility-trace rule: 1 iff the fraction of
// correct entries is >= threshold (ties count as rewarded).
int etrace_reward(const std::vector<int>& recent_corrects,
                  double threshold = 0.5);

// Stateful eligibility-trace rule.
//
//   dw_t = alpha * R_t * sum_{s=0..S} eps_{y_{t-s}} (1 - p_{y_{t-s}}) x_{t-s}
//
// Terms with t-s < 0 contribute zero (sum truncated at session start). R_t is
// the windowed reward over the last min(t+1, max(S,1)) trials *including* the
// current one; with S=0 the window is the current trial alone, so the rule
// collapses exactly to reinforce_update.
class EtraceRule {
  public:
    EtraceRule(double alpha, int window) : alpha_(alpha), window_(window) {}

    void reset();
    // Call once per trial, in order, with the pre-update weights.
    Vec update(const Vec& w, const Vec& x, int choice, int reward);

  private:
    double alpha_;
    int window_;
    std::deque<Vec> terms_;     // eps_y (1-p_y) x for recent trials
    std::deque<int> corrects_;  // per-trial correctness for the reward window
};

// Uniform interface over the three ground-truth rules, used by the simulator.
class GroundTruthRule {
  public:
    explicit GroundTruthRule(const RuleParams& params);

    void reset();
    Vec update(const Vec& w, const Vec& x, int choice, int reward, int label);

    const RuleParams& params() const { return params_; }

  private:
    RuleParams params_;
    EtraceRule etrace_;
};

}  // namespace lrinfer
