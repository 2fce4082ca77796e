#pragma once

#include <span>
#include <vector>

#include "lrinfer/common.hpp"

namespace lrinfer {

double mean_of(std::span<const double> values);
// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double sample_std(std::span<const double> values);

// Regularized incomplete beta function I_x(a, b), a,b > 0, x in [0, 1].
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided p-value of Student's t with df degrees of freedom:
// p = I_{df/(df+t^2)}(df/2, 1/2).
double two_sided_p_from_t(double t, double df);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    double df = 0.0;
    // Zero-variance differences: the statistic is undefined, p is reported
    // as 1 for identical samples and 0 for a constant nonzero shift.
    bool degenerate = false;
};

// Paired two-sided t-test between equal-length samples.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

// Ordinary least-squares slope of y against x.
double ols_slope(std::span<const double> x, std::span<const double> y);

}  // namespace lrinfer
