#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <span>

#include "lrinfer/nets.hpp"
#include "lrinfer/rng.hpp"

using namespace lrinfer;
using doctest::Approx;

namespace {

// Straight-line re-implementation of the forward pass, reading the
// documented parameter layout directly.
Vec mlp_forward_reference(const Vec& p, const Vec& u, int in, int h, int out) {
    std::size_t o = 0;
    auto mat = [&](int rows, int cols) {
        const double* base = p.data() + o;
        o += static_cast<std::size_t>(rows) * cols;
        return base;
    };
    const double* W1 = mat(h, in);
    const double* b1 = mat(1, h);
    const double* W2 = mat(h, h);
    const double* b2 = mat(1, h);
    const double* W3 = mat(out, h);
    const double* b3 = mat(1, out);

    Vec h1(h), h2(h), y(out);
    for (int i = 0; i < h; ++i) {
        double a = b1[i];
        for (int j = 0; j < in; ++j) a += W1[i * in + j] * u[j];
        h1[i] = std::tanh(a);
    }
    for (int i = 0; i < h; ++i) {
        double a = b2[i];
        for (int j = 0; j < h; ++j) a += W2[i * h + j] * h1[j];
        h2[i] = std::tanh(a);
    }
    for (int i = 0; i < out; ++i) {
        double a = b3[i];
        for (int j = 0; j < h; ++j) a += W3[i * h + j] * h2[j];
        y[i] = a;
    }
    return y;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("mlp forward matches an independent re-implementation") {
    const int in = 5, h = 7, out = 2;
    Mlp mlp(in, h, out);
    Vec p(mlp.n_params());
    Rng rng(11);
    mlp.init_params(std::span<double>(p), rng);
    for (int trial = 0; trial < 20; ++trial) {
        Vec u(in);
        for (double& v : u) v = rng.uniform(-2.0, 2.0);
        const Vec got = mlp.forward(p, u, nullptr);
        const Vec want = mlp_forward_reference(p, u, in, h, out);
        for (int i = 0; i < out; ++i) {
            CHECK(got[i] == Approx(want[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("mlp zero parameters give zero output; linear head scales") {
    const int in = 4, h = 6, out = 3;
    Mlp mlp(in, h, out);
    Vec zero(mlp.n_params(), 0.0);
    const Vec y0 = mlp.forward(zero, {1.0, -1.0, 0.5, 2.0}, nullptr);
    for (double v : y0) CHECK(v == 0.0);

    Vec p(mlp.n_params());
    Rng rng(3);
    mlp.init_params(std::span<double>(p), rng);
    const Vec u = {0.3, -0.7, 1.1, 0.0};
    const Vec y1 = mlp.forward(p, u, nullptr);
    Vec p2 = p;
    // Double only the output layer (W3 and b3 are the trailing block).
    const std::size_t head = static_cast<std::size_t>(out) * h + out;
    for (std::size_t i = p2.size() - head; i < p2.size(); ++i) p2[i] *= 2.0;
    const Vec y2 = mlp.forward(p2, u, nullptr);
    for (int i = 0; i < out; ++i) {
        CHECK(y2[i] == Approx(2.0 * y1[i]).epsilon(1e-12));
    }
}

TEST_CASE("mlp backward matches central finite differences") {
    const int in = 5, h = 6, out = 2;
    Mlp mlp(in, h, out);
    Rng rng(21);
    for (int inst = 0; inst < 10; ++inst) {
        Vec p(mlp.n_params());
        mlp.init_params(std::span<double>(p), rng);
        Vec u(in), c(out);
        for (double& v : u) v = rng.uniform(-1.5, 1.5);
        for (double& v : c) v = rng.uniform(-1.0, 1.0);
        // Scalar objective L = c . f(u)
        auto loss = [&](const Vec& params, const Vec& input) {
            const Vec y = mlp.forward(params, input, nullptr);
            double s = 0.0;
            for (int i = 0; i < out; ++i) s += c[i] * y[i];
            return s;
        };
        Mlp::Cache cache;
        mlp.forward(p, u, &cache);
        Vec gp(mlp.n_params(), 0.0);
        const Vec du = mlp.backward(p, cache, c, std::span<double>(gp));

        const double step = 1e-5;
        for (int j = 0; j < mlp.n_params(); j += 7) {
            Vec pp = p, pm = p;
            pp[j] += step;
            pm[j] -= step;
            const double fd = (loss(pp, u) - loss(pm, u)) / (2.0 * step);
            CHECK(rel_err(gp[j], fd) < 1e-6);
        }
        for (int j = 0; j < in; ++j) {
            Vec up = u, um = u;
            up[j] += step;
            um[j] -= step;
            const double fd = (loss(p, up) - loss(p, um)) / (2.0 * step);
            CHECK(rel_err(du[j], fd) < 1e-6);
        }
    }
}

TEST_CASE("gru zero parameters: gates at one half") {
    const int in = 3, h = 4;
    Gru gru(in, h);
    Vec zero(gru.n_params(), 0.0);
    const Vec u = {1.0, -1.0, 0.5};
    Vec h0(h, 0.0);
    Vec h1 = gru.step(zero, u, h0, nullptr);
    for (double v : h1) CHECK(v == 0.0);

    const Vec v = {0.8, -0.4, 0.2, 1.0};
    h1 = gru.step(zero, u, v, nullptr);
    for (int i = 0; i < h; ++i) CHECK(h1[i] == Approx(0.5 * v[i]).epsilon(1e-14));
}

TEST_CASE("gru output stays in the per-coordinate convex hull") {
    const int in = 4, h = 5;
    Gru gru(in, h);
    Rng rng(7);
    Vec p(gru.n_params());
    gru.init_params(std::span<double>(p), rng);
    Vec state(h, 0.0);
    for (int t = 0; t < 200; ++t) {
        Vec u(in);
        for (double& v : u) v = rng.uniform(-2.0, 2.0);
        Gru::Cache cache;
        const Vec next = gru.step(p, u, state, &cache);
        for (int i = 0; i < h; ++i) {
            const double lo = std::min(state[i], cache.c[i]);
            const double hi = std::max(state[i], cache.c[i]);
            CHECK(next[i] >= lo - 1e-15);
            CHECK(next[i] <= hi + 1e-15);
            CHECK(std::abs(next[i]) <= std::max(std::abs(state[i]), 1.0) + 1e-15);
        }
        state = next;
    }
}

TEST_CASE("gru backward matches central finite differences") {
    const int in = 4, h = 5;
    Gru gru(in, h);
    Rng rng(31);
    for (int inst = 0; inst < 10; ++inst) {
        Vec p(gru.n_params());
        gru.init_params(std::span<double>(p), rng);
        Vec u(in), hp(h), c(h);
        for (double& v : u) v = rng.uniform(-1.5, 1.5);
        for (double& v : hp) v = rng.uniform(-0.8, 0.8);
        for (double& v : c) v = rng.uniform(-1.0, 1.0);
        auto loss = [&](const Vec& params, const Vec& input, const Vec& hprev) {
            const Vec y = gru.step(params, input, hprev, nullptr);
            double s = 0.0;
            for (int i = 0; i < h; ++i) s += c[i] * y[i];
            return s;
        };
        Gru::Cache cache;
        gru.step(p, u, hp, &cache);
        Vec gp(gru.n_params(), 0.0);
        Vec du(in, 0.0), dh(h, 0.0);
        gru.backward(p, cache, c, std::span<double>(gp), du, dh);

        const double step = 1e-5;
        for (int j = 0; j < gru.n_params(); j += 5) {
            Vec pp = p, pm = p;
            pp[j] += step;
            pm[j] -= step;
            const double fd = (loss(pp, u, hp) - loss(pm, u, hp)) / (2.0 * step);
            CHECK(rel_err(gp[j], fd) < 1e-6);
        }
        for (int j = 0; j < in; ++j) {
            Vec up = u, um = u;
            up[j] += step;
            um[j] -= step;
            const double fd = (loss(p, up, hp) - loss(p, um, hp)) / (2.0 * step);
            CHECK(rel_err(du[j], fd) < 1e-6);
        }
        for (int j = 0; j < h; ++j) {
            Vec hpp = hp, hpm = hp;
            hpp[j] += step;
            hpm[j] -= step;
            const double fd = (loss(p, u, hpp) - loss(p, u, hpm)) / (2.0 * step);
            CHECK(rel_err(dh[j], fd) < 1e-6);
        }
    }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    Adam adam(3);
    Vec params = {1.0, -2.0, 0.5};
    const Vec before = params;
    adam.step(std::span<double>(params), Vec(3, 0.0));
    CHECK(params == before);
    CHECK(adam.steps() == 1);
}

TEST_CASE("adam first step matches the bias-corrected formula") {
    // For g=1 at t=1: m_hat = 1, v_hat = 1, delta = -lr / (1 + eps).
    // Independently computed: 9.9999999000000010e-4.
    Adam adam(1, 1e-3);
    Vec params = {0.25};
    adam.step(std::span<double>(params), Vec{1.0});
    CHECK(params[0] == Approx(0.25 - 9.9999999000000010e-4).epsilon(1e-15));
}

TEST_CASE("adam treats identical blocks identically") {
    Adam adam(4, 2e-3);
    Vec params = {0.1, 0.2, 0.1, 0.2};
    for (int t = 0; t < 5; ++t) {
        adam.step(std::span<double>(params), Vec{0.3, -0.7, 0.3, -0.7});
    }
    CHECK(params[0] == params[2]);
    CHECK(params[1] == params[3]);
}

TEST_CASE("global norm clipping") {
    Vec g = {3.0, 4.0};  // norm 5
    CHECK(clip_global_norm(std::span<double>(g), 10.0) == Approx(5.0));
    CHECK(g[0] == 3.0);
    CHECK(g[1] == 4.0);
    CHECK(clip_global_norm(std::span<double>(g), 1.0) == Approx(5.0));
    CHECK(g[0] == Approx(0.6).epsilon(1e-12));
    CHECK(g[1] == Approx(0.8).epsilon(1e-12));
    double sq = g[0] * g[0] + g[1] * g[1];
    CHECK(std::sqrt(sq) == Approx(1.0).epsilon(1e-12));
}
