#include "lrinfer/stats.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace lrinfer {

double mean_of(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    const double m = mean_of(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw NumericError("incomplete beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw ConfigError("incomplete beta: a and b must be positive");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw ConfigError("incomplete beta: x must be in [0, 1], got " +
                          std::to_string(x));
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                            std::lgamma(b) + a * std::log(x) +
                            b * std::log1p(-x);
    const double front = std::exp(ln_front);
    // Use the representation that converges fastest.
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double two_sided_p_from_t(double t, double df) {
    if (!(df > 0.0)) throw ConfigError("t distribution: df must be positive");
    if (std::isinf(t)) return 0.0;
    return regularized_incomplete_beta(0.5 * df, 0.5,
                                       df / (df + t * t));
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DataError("paired t-test: samples must have equal length");
    }
    const std::size_t n = a.size();
    if (n < 2) throw DataError("paired t-test: need at least 2 pairs");
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
    const double m = mean_of(diff);
    const double sd = sample_std(diff);
    TTestResult result;
    result.df = static_cast<double>(n - 1);
    if (sd == 0.0) {
        result.degenerate = true;
        if (m == 0.0) {
            result.t = 0.0;
            result.p = 1.0;
        } else {
            result.t = m > 0.0 ? std::numeric_limits<double>::infinity()
                               : -std::numeric_limits<double>::infinity();
            result.p = 0.0;
        }
        return result;
    }
    result.t = m / (sd / std::sqrt(static_cast<double>(n)));
    result.p = two_sided_p_from_t(result.t, result.df);
    return result;
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw DataError("ols slope: samples must have equal length");
    }
    if (x.size() < 2) throw DataError("ols slope: need at least 2 points");
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw DataError("ols slope: x has zero variance");
    return sxy / sxx;
}

}  // namespace lrinfer
