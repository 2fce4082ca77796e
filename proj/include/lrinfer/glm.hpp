#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lrinfer {

using Vec = std::vector<double>;

// One binary-choice trial. `choice` and `label` are 0 (left) / 1 (right);
// `reward` is 1 iff choice == label.
struct Trial {
    double stimulus = 0.0;
    int choice = 0;
    int reward = 0;
    int label = 0;
};

// One animal's session: a contiguous trial sequence plus (optionally) the
// latent weight trajectory that generated it, when the data came from the
// simulator. weights[t] is the pre-update weight vector on trial t,
// applied_dw[t] the realised update (including any injected noise).
struct Session {
    std::string animal_id;
    std::vector<Trial> trials;
    std::vector<Vec> weights;     // empty for real datasets
    std::vector<Vec> applied_dw;  // empty for real datasets

    bool has_latents() const { return !weights.empty(); }
};

// Logits are clamped to this band before exponentiation; keeps every
// probability in (sigmoid(-30), sigmoid(30)) and every log-likelihood finite.
inline constexpr double kLogitClamp = 30.0;

double clamp_logit(double a);

// Numerically stable logistic function of a (pre-clamped) logit.
double sigmoid(double a);

// Stable log(sigmoid(a)) = -log1p(exp(-a)); never underflows to -inf
// thanks to the clamp.
double log_sigmoid(double a);

// Decision-policy covariates for a stimulus: [s, 1].
Vec covariates(double stimulus);

double dot(const Vec& a, const Vec& b);

// P(choice = 1 | stimulus, weights) for the linear policy.
double choice_probability(const Vec& w, const Vec& x);

// log P(choice | stimulus, weights); choice in {0, 1}.
double trial_log_likelihood(const Vec& w, const Vec& x, int choice);

// Correct side for a nonzero stimulus (s > 0 -> 1). Zero stimuli get their
// label from a coin flip in the simulator, never from this function.
int label_of(double stimulus);

int reward_of(int choice, int label);

// Signed choice encoding used throughout the update rules: 1 -> +1, 0 -> -1.
inline double choice_sign(int choice) { return choice == 1 ? 1.0 : -1.0; }

}  // namespace lrinfer
