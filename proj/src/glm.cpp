#include "lrinfer/glm.hpp"

#include <algorithm>
#include <cmath>

namespace lrinfer {

double clamp_logit(double a) {
    return std::clamp(a, -kLogitClamp, kLogitClamp);
}

double sigmoid(double a) {
    a = clamp_logit(a);
    if (a >= 0.0) {
        return 1.0 / (1.0 + std::exp(-a));
    }
    const double e = std::exp(a);
    return e / (1.0 + e);
}

double log_sigmoid(double a) {
    a = clamp_logit(a);
    if (a >= 0.0) {
        return -std::log1p(std::exp(-a));
    }
    return a - std::log1p(std::exp(a));
}

Vec covariates(double stimulus) {
    return {stimulus, 1.0};
}

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double choice_probability(const Vec& w, const Vec& x) {
    return sigmoid(dot(w, x));
}

double trial_log_likelihood(const Vec& w, const Vec& x, int choice) {
    const double a = dot(w, x);
    return choice == 1 ? log_sigmoid(a) : log_sigmoid(-a);
}

int label_of(double stimulus) {
    return stimulus > 0.0 ? 1 : 0;
}

int reward_of(int choice, int label) {
    return choice == label ? 1 : 0;
}

}  // namespace lrinfer
