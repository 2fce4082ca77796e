#include "lrinfer/nets.hpp"

#include <cmath>

#include "lrinfer/common.hpp"

namespace lrinfer {

namespace {

// y += W u  (W is rows x cols, row-major)
void affine_accum(const double* W, const double* u, int rows, int cols,
                  double* y) {
    for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        const double* row = W + static_cast<std::ptrdiff_t>(i) * cols;
        for (int j = 0; j < cols; ++j) s += row[j] * u[j];
        y[i] += s;
    }
}

// du += W^T dy
void affine_backward_input(const double* W, const double* dy, int rows,
                           int cols, double* du) {
    for (int i = 0; i < rows; ++i) {
        const double* row = W + static_cast<std::ptrdiff_t>(i) * cols;
        const double d = dy[i];
        for (int j = 0; j < cols; ++j) du[j] += row[j] * d;
    }
}

// gW += dy u^T
void affine_backward_weight(const double* dy, const double* u, int rows,
                            int cols, double* gW) {
    for (int i = 0; i < rows; ++i) {
        double* row = gW + static_cast<std::ptrdiff_t>(i) * cols;
        const double d = dy[i];
        for (int j = 0; j < cols; ++j) row[j] += d * u[j];
    }
}

void init_uniform_matrix(std::span<double> block, int rows, int cols,
                         Rng& rng) {
    const double k = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int i = 0; i < rows * cols; ++i) block[i] = rng.uniform(-k, k);
}

}  // namespace

Mlp::Mlp(int in, int hidden, int out) : in_(in), hidden_(hidden), out_(out) {
    if (in < 1 || hidden < 1 || out < 1) throw ConfigError("mlp: bad dims");
}

int Mlp::n_params() const {
    return hidden_ * in_ + hidden_ + hidden_ * hidden_ + hidden_ +
           out_ * hidden_ + out_;
}

void Mlp::init_params(std::span<double> p, Rng& rng) const {
    if (p.size() != static_cast<std::size_t>(n_params())) {
        throw ConfigError("mlp: param size mismatch");
    }
    std::size_t o = 0;
    init_uniform_matrix(p.subspan(o, hidden_ * in_), hidden_, in_, rng);
    o += hidden_ * in_;
    for (int i = 0; i < hidden_; ++i) p[o + i] = 0.0;
    o += hidden_;
    init_uniform_matrix(p.subspan(o, hidden_ * hidden_), hidden_, hidden_, rng);
    o += hidden_ * hidden_;
    for (int i = 0; i < hidden_; ++i) p[o + i] = 0.0;
    o += hidden_;
    init_uniform_matrix(p.subspan(o, out_ * hidden_), out_, hidden_, rng);
    o += out_ * hidden_;
    for (int i = 0; i < out_; ++i) p[o + i] = 0.0;
}

Vec Mlp::forward(std::span<const double> p, const Vec& u, Cache* cache) const {
    if (u.size() != static_cast<std::size_t>(in_) ||
        p.size() != static_cast<std::size_t>(n_params())) {
        throw ConfigError("mlp: shape mismatch in forward");
    }
    const double* W1 = p.data();
    const double* b1 = W1 + hidden_ * in_;
    const double* W2 = b1 + hidden_;
    const double* b2 = W2 + hidden_ * hidden_;
    const double* W3 = b2 + hidden_;
    const double* b3 = W3 + out_ * hidden_;

    Vec h1(b1, b1 + hidden_);
    affine_accum(W1, u.data(), hidden_, in_, h1.data());
    for (double& v : h1) v = std::tanh(v);

    Vec h2(b2, b2 + hidden_);
    affine_accum(W2, h1.data(), hidden_, hidden_, h2.data());
    for (double& v : h2) v = std::tanh(v);

    Vec out(b3, b3 + out_);
    affine_accum(W3, h2.data(), out_, hidden_, out.data());

    if (cache != nullptr) {
        cache->u = u;
        cache->h1 = std::move(h1);
        cache->h2 = std::move(h2);
    }
    return out;
}

Vec Mlp::backward(std::span<const double> p, const Cache& cache,
                  const Vec& dout, std::span<double> gp) const {
    if (dout.size() != static_cast<std::size_t>(out_) ||
        gp.size() != static_cast<std::size_t>(n_params())) {
        throw ConfigError("mlp: shape mismatch in backward");
    }
    const double* W2 = p.data() + hidden_ * in_ + hidden_;
    const double* W3 = W2 + hidden_ * hidden_ + hidden_;
    double* gW1 = gp.data();
    double* gb1 = gW1 + hidden_ * in_;
    double* gW2 = gb1 + hidden_;
    double* gb2 = gW2 + hidden_ * hidden_;
    double* gW3 = gb2 + hidden_;
    double* gb3 = gW3 + out_ * hidden_;

    affine_backward_weight(dout.data(), cache.h2.data(), out_, hidden_, gW3);
    for (int i = 0; i < out_; ++i) gb3[i] += dout[i];

    Vec dh2(hidden_, 0.0);
    affine_backward_input(W3, dout.data(), out_, hidden_, dh2.data());
    for (int i = 0; i < hidden_; ++i) {
        dh2[i] *= 1.0 - cache.h2[i] * cache.h2[i];
    }

    affine_backward_weight(dh2.data(), cache.h1.data(), hidden_, hidden_, gW2);
    for (int i = 0; i < hidden_; ++i) gb2[i] += dh2[i];

    Vec dh1(hidden_, 0.0);
    affine_backward_input(W2, dh2.data(), hidden_, hidden_, dh1.data());
    for (int i = 0; i < hidden_; ++i) {
        dh1[i] *= 1.0 - cache.h1[i] * cache.h1[i];
    }

    affine_backward_weight(dh1.data(), cache.u.data(), hidden_, in_, gW1);
    for (int i = 0; i < hidden_; ++i) gb1[i] += dh1[i];

    Vec du(in_, 0.0);
    affine_backward_input(p.data(), dh1.data(), hidden_, in_, du.data());
    return du;
}

Gru::Gru(int in, int hidden) : in_(in), hidden_(hidden) {
    if (in < 1 || hidden < 1) throw ConfigError("gru: bad dims");
}

int Gru::n_params() const {
    return 3 * (hidden_ * in_ + hidden_ * hidden_ + hidden_);
}

void Gru::init_params(std::span<double> p, Rng& rng) const {
    if (p.size() != static_cast<std::size_t>(n_params())) {
        throw ConfigError("gru: param size mismatch");
    }
    std::size_t o = 0;
    for (int gate = 0; gate < 3; ++gate) {
        init_uniform_matrix(p.subspan(o, hidden_ * in_), hidden_, in_, rng);
        o += hidden_ * in_;
        init_uniform_matrix(p.subspan(o, hidden_ * hidden_), hidden_, hidden_,
                            rng);
        o += hidden_ * hidden_;
        for (int i = 0; i < hidden_; ++i) p[o + i] = 0.0;
        o += hidden_;
    }
}

Vec Gru::step(std::span<const double> p, const Vec& u, const Vec& h_prev,
              Cache* cache) const {
    if (u.size() != static_cast<std::size_t>(in_) ||
        h_prev.size() != static_cast<std::size_t>(hidden_) ||
        p.size() != static_cast<std::size_t>(n_params())) {
        throw ConfigError("gru: shape mismatch in step");
    }
    const int block = hidden_ * in_ + hidden_ * hidden_ + hidden_;
    const double* Wz = p.data();
    const double* Uz = Wz + hidden_ * in_;
    const double* bz = Uz + hidden_ * hidden_;
    const double* Wr = p.data() + block;
    const double* Ur = Wr + hidden_ * in_;
    const double* br = Ur + hidden_ * hidden_;
    const double* Wc = p.data() + 2 * block;
    const double* Uc = Wc + hidden_ * in_;
    const double* bc = Uc + hidden_ * hidden_;

    Vec z(bz, bz + hidden_);
    affine_accum(Wz, u.data(), hidden_, in_, z.data());
    affine_accum(Uz, h_prev.data(), hidden_, hidden_, z.data());
    for (double& v : z) v = sigmoid(v);

    Vec r(br, br + hidden_);
    affine_accum(Wr, u.data(), hidden_, in_, r.data());
    affine_accum(Ur, h_prev.data(), hidden_, hidden_, r.data());
    for (double& v : r) v = sigmoid(v);

    Vec rh(hidden_);
    for (int i = 0; i < hidden_; ++i) rh[i] = r[i] * h_prev[i];

    Vec c(bc, bc + hidden_);
    affine_accum(Wc, u.data(), hidden_, in_, c.data());
    affine_accum(Uc, rh.data(), hidden_, hidden_, c.data());
    for (double& v : c) v = std::tanh(v);

    Vec h(hidden_);
    for (int i = 0; i < hidden_; ++i) {
        h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * c[i];
    }

    if (cache != nullptr) {
        cache->u = u;
        cache->h_prev = h_prev;
        cache->z = std::move(z);
        cache->r = std::move(r);
        cache->c = std::move(c);
    }
    return h;
}

void Gru::backward(std::span<const double> p, const Cache& cache,
                   const Vec& dh, std::span<double> gp, Vec& du_out,
                   Vec& dh_prev_out) const {
    if (dh.size() != static_cast<std::size_t>(hidden_) ||
        gp.size() != static_cast<std::size_t>(n_params())) {
        throw ConfigError("gru: shape mismatch in backward");
    }
    const int block = hidden_ * in_ + hidden_ * hidden_ + hidden_;
    const double* Wz = p.data();
    const double* Uz = Wz + hidden_ * in_;
    const double* Wr = p.data() + block;
    const double* Ur = Wr + hidden_ * in_;
    const double* Wc = p.data() + 2 * block;
    const double* Uc = Wc + hidden_ * in_;
    double* gWz = gp.data();
    double* gUz = gWz + hidden_ * in_;
    double* gbz = gUz + hidden_ * hidden_;
    double* gWr = gp.data() + block;
    double* gUr = gWr + hidden_ * in_;
    double* gbr = gUr + hidden_ * hidden_;
    double* gWc = gp.data() + 2 * block;
    double* gUc = gWc + hidden_ * in_;
    double* gbc = gUc + hidden_ * hidden_;

    const Vec& z = cache.z;
    const Vec& r = cache.r;
    const Vec& c = cache.c;
    const Vec& h_prev = cache.h_prev;

    // h' = (1-z) h_prev + z c
    Vec dz(hidden_), dc(hidden_);
    for (int i = 0; i < hidden_; ++i) {
        dz[i] = dh[i] * (c[i] - h_prev[i]);
        dc[i] = dh[i] * z[i];
        dh_prev_out[i] += dh[i] * (1.0 - z[i]);
    }

    // Candidate branch: c = tanh(Wc u + Uc (r .* h_prev) + bc)
    Vec dac(hidden_);
    for (int i = 0; i < hidden_; ++i) dac[i] = dc[i] * (1.0 - c[i] * c[i]);
    Vec rh(hidden_);
    for (int i = 0; i < hidden_; ++i) rh[i] = r[i] * h_prev[i];
    affine_backward_weight(dac.data(), cache.u.data(), hidden_, in_, gWc);
    affine_backward_weight(dac.data(), rh.data(), hidden_, hidden_, gUc);
    for (int i = 0; i < hidden_; ++i) gbc[i] += dac[i];
    affine_backward_input(Wc, dac.data(), hidden_, in_, du_out.data());
    Vec drh(hidden_, 0.0);
    affine_backward_input(Uc, dac.data(), hidden_, hidden_, drh.data());
    Vec dr(hidden_);
    for (int i = 0; i < hidden_; ++i) {
        dr[i] = drh[i] * h_prev[i];
        dh_prev_out[i] += drh[i] * r[i];
    }

    // Gate branches: sigmoid'(a) = g (1 - g)
    Vec daz(hidden_), dar(hidden_);
    for (int i = 0; i < hidden_; ++i) {
        daz[i] = dz[i] * z[i] * (1.0 - z[i]);
        dar[i] = dr[i] * r[i] * (1.0 - r[i]);
    }
    affine_backward_weight(daz.data(), cache.u.data(), hidden_, in_, gWz);
    affine_backward_weight(daz.data(), h_prev.data(), hidden_, hidden_, gUz);
    for (int i = 0; i < hidden_; ++i) gbz[i] += daz[i];
    affine_backward_input(Wz, daz.data(), hidden_, in_, du_out.data());
    affine_backward_input(Uz, daz.data(), hidden_, hidden_, dh_prev_out.data());

    affine_backward_weight(dar.data(), cache.u.data(), hidden_, in_, gWr);
    affine_backward_weight(dar.data(), h_prev.data(), hidden_, hidden_, gUr);
    for (int i = 0; i < hidden_; ++i) gbr[i] += dar[i];
    affine_backward_input(Wr, dar.data(), hidden_, in_, du_out.data());
    affine_backward_input(Ur, dar.data(), hidden_, hidden_, dh_prev_out.data());
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : m_(n, 0.0), v_(n, 0.0), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
        throw ConfigError("adam: shape mismatch");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < m_.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        const double mhat = m_[i] / c1;
        const double vhat = v_[i] / c2;
        params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
}

double clip_global_norm(std::span<double> grad, double max_norm) {
    double sq = 0.0;
    for (double g : grad) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (double& g : grad) g *= scale;
    }
    return norm;
}

}  // namespace lrinfer
