#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "wgf/error.hpp"

namespace wgf::nn {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Dense algebra on raw row-major storage

/// y = W x + b, W is [out][in].
inline void affine(const double* w, const double* b, std::size_t out, std::size_t in, const double* x, double* y) {
  for (std::size_t r = 0; r < out; ++r) {
    const double* row = w + r * in;
    double s = b ? b[r] : 0.0;
    for (std::size_t c = 0; c < in; ++c) s += row[c] * x[c];
    y[r] = s;
  }
}

/// dx += W^T dy.
inline void affine_grad_input(const double* w, std::size_t out, std::size_t in, const double* dy, double* dx) {
  for (std::size_t r = 0; r < out; ++r) {
    const double g = dy[r];
    if (g == 0.0) continue;
    const double* row = w + r * in;
    for (std::size_t c = 0; c < in; ++c) dx[c] += row[c] * g;
  }
}

/// dW += dy x^T, db += dy.
inline void affine_grad_params(double* dw, double* db, std::size_t out, std::size_t in, const double* dy,
                               const double* x) {
  for (std::size_t r = 0; r < out; ++r) {
    const double g = dy[r];
    if (db) db[r] += g;
    if (g == 0.0) continue;
    double* row = dw + r * in;
    for (std::size_t c = 0; c < in; ++c) row[c] += g * x[c];
  }
}

// ---------------------------------------------------------------------------
// LSTM cell

/// Read-only view of one layer's gate parameters.
/// weight: [4][hidden][hidden + input] over [h_prev, x]; bias: [4][hidden];
/// gate order forget, input, candidate, output.
struct LstmGates {
  std::span<const double> weight;
  std::span<const double> bias;
  std::size_t input = 0;
  std::size_t hidden = 0;
};

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;
};

/// Activations kept for the backward pass of one cell step.
struct LstmStepCache {
  std::vector<double> concat;  // [h_prev, x]
  std::vector<double> gates;   // f, i, c~, o after their nonlinearities
  std::vector<double> c_prev;
  std::vector<double> c;
  std::vector<double> tanh_c;
  std::vector<double> h;
};

inline void lstm_cell_forward(const LstmGates& g, const double* x, const double* h_prev, const double* c_prev,
                              LstmStepCache& cache) {
  const std::size_t H = g.hidden;
  const std::size_t C = H + g.input;
  cache.concat.resize(C);
  std::copy(h_prev, h_prev + H, cache.concat.begin());
  std::copy(x, x + g.input, cache.concat.begin() + static_cast<std::ptrdiff_t>(H));
  cache.gates.resize(4 * H);
  affine(g.weight.data(), g.bias.data(), 4 * H, C, cache.concat.data(), cache.gates.data());
  cache.c_prev.assign(c_prev, c_prev + H);
  cache.c.resize(H);
  cache.tanh_c.resize(H);
  cache.h.resize(H);
  double* f = cache.gates.data();
  double* i = f + H;
  double* cand = i + H;
  double* o = cand + H;
  for (std::size_t k = 0; k < H; ++k) {
    f[k] = sigmoid(f[k]);
    i[k] = sigmoid(i[k]);
    cand[k] = std::tanh(cand[k]);
    o[k] = sigmoid(o[k]);
    cache.c[k] = f[k] * c_prev[k] + i[k] * cand[k];
    cache.tanh_c[k] = std::tanh(cache.c[k]);
    cache.h[k] = o[k] * cache.tanh_c[k];
  }
}

/// Backward through one cell step.
///
/// Given dL/dh_t (dh) and dL/dc_t (dc, updated in place to dL/dc_{t-1}),
/// accumulates gate parameter gradients and writes dL/d[h_prev, x] into
/// d_concat (overwritten).
inline void lstm_cell_backward(const LstmGates& g, const LstmStepCache& cache, const double* dh, double* dc,
                               double* dweight, double* dbias, double* d_concat, std::vector<double>& scratch) {
  const std::size_t H = g.hidden;
  const std::size_t C = H + g.input;
  scratch.resize(4 * H);
  const double* f = cache.gates.data();
  const double* i = f + H;
  const double* cand = i + H;
  const double* o = cand + H;
  double* df = scratch.data();
  double* di = df + H;
  double* dcand = di + H;
  double* dout = dcand + H;
  for (std::size_t k = 0; k < H; ++k) {
    const double t = cache.tanh_c[k];
    const double dct = dc[k] + dh[k] * o[k] * (1.0 - t * t);
    dout[k] = dh[k] * t * o[k] * (1.0 - o[k]);
    df[k] = dct * cache.c_prev[k] * f[k] * (1.0 - f[k]);
    di[k] = dct * cand[k] * i[k] * (1.0 - i[k]);
    dcand[k] = dct * i[k] * (1.0 - cand[k] * cand[k]);
    dc[k] = dct * f[k];
  }
  affine_grad_params(dweight, dbias, 4 * H, C, scratch.data(), cache.concat.data());
  std::fill(d_concat, d_concat + C, 0.0);
  affine_grad_input(g.weight.data(), 4 * H, C, scratch.data(), d_concat);
}

/// One LSTM step: gates from [h_prev, x], then c_t = f*c_prev + i*c~ and
/// h_t = o * tanh(c_t).
inline LstmState lstm_step(const LstmGates& g, std::span<const double> x, std::span<const double> h_prev,
                           std::span<const double> c_prev) {
  const std::size_t H = g.hidden;
  if (x.size() != g.input || h_prev.size() != H || c_prev.size() != H ||
      g.weight.size() != 4 * H * (H + g.input) || g.bias.size() != 4 * H) {
    fail(Errc::shape_mismatch, "lstm_step");
  }
  LstmStepCache cache;
  lstm_cell_forward(g, x.data(), h_prev.data(), c_prev.data(), cache);
  return {cache.h, cache.c};
}

// ---------------------------------------------------------------------------
// Attention

/// softmax(q_i . k_j / sqrt(d_k)) over j for each query row; [n][m].
inline std::vector<double> attention_weights(std::span<const double> q, std::span<const double> k, std::size_t n,
                                             std::size_t m, std::size_t dk) {
  if (dk == 0 || q.size() != n * dk || k.size() != m * dk || m == 0) fail(Errc::shape_mismatch, "attention");
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<double> w(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = w.data() + i * m;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < dk; ++c) s += q[i * dk + c] * k[j * dk + c];
      row[j] = s * scale;
      peak = std::max(peak, row[j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      row[j] = std::exp(row[j] - peak);
      total += row[j];
    }
    for (std::size_t j = 0; j < m; ++j) row[j] /= total;
  }
  return w;
}

/// Scaled dot-product attention: row i = sum_j softmax_j(q_i.k_j/sqrt(d_k)) v_j.
inline std::vector<double> attention(std::span<const double> q, std::span<const double> k, std::span<const double> v,
                                     std::size_t n, std::size_t dk, std::size_t dv) {
  if (dk == 0 || n == 0 || k.size() % dk != 0) fail(Errc::shape_mismatch, "attention");
  const std::size_t m = k.size() / dk;
  if (v.size() != m * dv) fail(Errc::shape_mismatch, "attention values");
  const auto w = attention_weights(q, k, n, m, dk);
  std::vector<double> out(n * dv, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double p = w[i * m + j];
      for (std::size_t c = 0; c < dv; ++c) out[i * dv + c] += p * v[j * dv + c];
    }
  }
  return out;
}

/// Interleaved sinusoidal position code:
/// element 2i = sin(t / 10000^(2i/d)), element 2i+1 = cos(t / 10000^((2i+1)/d)).
inline std::vector<double> positional_encoding(std::size_t position, std::size_t d) {
  if (d % 2 != 0) fail(Errc::odd_dimension, "positional encoding dimension " + std::to_string(d));
  std::vector<double> p(d);
  const double t = static_cast<double>(position);
  const double dd = static_cast<double>(d);
  for (std::size_t i = 0; i < d / 2; ++i) {
    const double e0 = static_cast<double>(2 * i) / dd;
    const double e1 = static_cast<double>(2 * i + 1) / dd;
    p[2 * i] = std::sin(t / std::pow(10000.0, e0));
    p[2 * i + 1] = std::cos(t / std::pow(10000.0, e1));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Layer normalization

inline constexpr double layer_norm_eps = 1e-5;

/// y = gain * (x - mean) / sqrt(var + eps) + bias; stores x_hat and 1/std.
inline void layer_norm_forward(const double* x, const double* gain, const double* bias, std::size_t d, double* y,
                               double* x_hat, double& inv_std) {
  double mean = 0.0;
  for (std::size_t k = 0; k < d; ++k) mean += x[k];
  mean /= static_cast<double>(d);
  double var = 0.0;
  for (std::size_t k = 0; k < d; ++k) var += (x[k] - mean) * (x[k] - mean);
  var /= static_cast<double>(d);
  inv_std = 1.0 / std::sqrt(var + layer_norm_eps);
  for (std::size_t k = 0; k < d; ++k) {
    x_hat[k] = (x[k] - mean) * inv_std;
    y[k] = gain[k] * x_hat[k] + bias[k];
  }
}

/// dx (overwritten) from dy; accumulates gain/bias gradients.
inline void layer_norm_backward(const double* dy, const double* x_hat, double inv_std, const double* gain,
                                std::size_t d, double* dx, double* dgain, double* dbias) {
  double mean_g = 0.0;
  double mean_gx = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double g = dy[k] * gain[k];
    dgain[k] += dy[k] * x_hat[k];
    dbias[k] += dy[k];
    mean_g += g;
    mean_gx += g * x_hat[k];
  }
  mean_g /= static_cast<double>(d);
  mean_gx /= static_cast<double>(d);
  for (std::size_t k = 0; k < d; ++k) {
    dx[k] = inv_std * (dy[k] * gain[k] - mean_g - x_hat[k] * mean_gx);
  }
}

}  // namespace wgf::nn
