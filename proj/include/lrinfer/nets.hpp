#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lrinfer/glm.hpp"
#include "lrinfer/rng.hpp"

namespace lrinfer {

// Two-hidden-layer perceptron (in -> hidden -> hidden -> out), tanh hidden
// units, linear output head. Parameters live in an external flat vector with
// layout W1 | b1 | W2 | b2 | W3 | b3, matrices row-major.
class Mlp {
  public:
    Mlp(int in, int hidden, int out);

    int inputs() const { return in_; }
    int outputs() const { return out_; }
    int n_params() const;

    // Weights ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)) drawn row-major in layout
    // order; biases are zero and consume no draws.
    void init_params(std::span<double> p, Rng& rng) const;

    struct Cache {
        Vec u, h1, h2;  // input and post-activation hidden layers
    };

    Vec forward(std::span<const double> p, const Vec& u, Cache* cache) const;

    // Accumulates parameter gradients into gp (same layout as p) and returns
    // dL/du, given dout = dL/doutput and the forward cache.
    Vec backward(std::span<const double> p, const Cache& cache, const Vec& dout,
                 std::span<double> gp) const;

  private:
    int in_, hidden_, out_;
};

// Gated recurrent cell, hidden state h. Convention:
//   z = sigmoid(Wz u + Uz h + bz)        update gate
//   r = sigmoid(Wr u + Ur h + br)        reset gate
//   c = tanh(Wc u + Uc (r .* h) + bc)    candidate
//   h' = (1 - z) .* h + z .* c
// Parameter layout: Wz | Uz | bz | Wr | Ur | br | Wc | Uc | bc.
class Gru {
  public:
    Gru(int in, int hidden);

    int inputs() const { return in_; }
    int hidden() const { return hidden_; }
    int n_params() const;

    void init_params(std::span<double> p, Rng& rng) const;

    struct Cache {
        Vec u, h_prev, z, r, c;
    };

    Vec step(std::span<const double> p, const Vec& u, const Vec& h_prev,
             Cache* cache) const;

    // dh = dL/dh'; accumulates into gp; du_out and dh_prev_out receive
    // dL/du and dL/dh (added onto their existing contents).
    void backward(std::span<const double> p, const Cache& cache, const Vec& dh,
                  std::span<double> gp, Vec& du_out, Vec& dh_prev_out) const;

  private:
    int in_, hidden_;
};

// Bias-corrected Adam over a flat parameter vector.
class Adam {
  public:
    explicit Adam(std::size_t n, double lr = 1e-3, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);

    void step(std::span<double> params, std::span<const double> grad);

    int steps() const { return t_; }
    double learning_rate() const { return lr_; }

  private:
    Vec m_, v_;
    int t_ = 0;
    double lr_, beta1_, beta2_, eps_;
};

// Scales grad in place so its global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_global_norm(std::span<double> grad, double max_norm);

}  // namespace lrinfer
