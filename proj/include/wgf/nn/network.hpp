#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "wgf/dataset.hpp"
#include "wgf/error.hpp"
#include "wgf/nn/architecture.hpp"
#include "wgf/nn/kernels.hpp"
#include "wgf/parallel.hpp"

namespace wgf::nn {

/// Dense input block [size][length][features] with one target per sample.
/// Flat samples use length 1.
struct Batch {
  std::size_t size = 0;
  std::size_t length = 1;
  std::size_t features = 0;
  std::vector<double> inputs;
  std::vector<double> targets;

  [[nodiscard]] const double* sample(std::size_t b) const { return inputs.data() + b * length * features; }
};

inline Batch make_batch(const data::SampleTable& table, std::span<const std::size_t> rows) {
  Batch b{rows.size(), 1, data::feature_count, {}, {}};
  b.inputs.reserve(rows.size() * data::feature_count);
  b.targets.reserve(rows.size());
  for (const std::size_t r : rows) {
    const auto row = table.row(r);
    b.inputs.insert(b.inputs.end(), row.begin(), row.end());
    b.targets.push_back(table.targets[r]);
  }
  return b;
}

inline Batch make_batch(const data::SequenceSet& set, std::span<const std::size_t> windows) {
  Batch b{windows.size(), set.length, set.features, {}, {}};
  b.inputs.reserve(windows.size() * set.length * set.features);
  b.targets.reserve(windows.size());
  for (const std::size_t w : windows) {
    const auto win = set.window(w);
    b.inputs.insert(b.inputs.end(), win.begin(), win.end());
    b.targets.push_back(set.targets[w]);
  }
  return b;
}

template <class Set>
Batch full_batch(const Set& set) {
  std::vector<std::size_t> all(set.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return make_batch(set, all);
}

inline double mse_loss(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.empty()) fail(Errc::length_mismatch, "mse_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - truth[i];
    s += e * e;
  }
  return s / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Per-sample state

struct EncoderCache {
  std::vector<double> x, q, k, v, probs, mixed, r1, y1, xhat1, inv1, z1, h1, z2, y2, xhat2, inv2;
};

/// Scratch reused across samples by one worker.
struct Workspace {
  std::vector<std::vector<double>> pre, act;     // MLP
  std::vector<std::vector<LstmStepCache>> cell;  // [layer][t]
  std::vector<double> top;                       // [L][H] output of the last LSTM layer
  std::vector<EncoderCache> encoder;
  std::vector<double> zeros;
  // backward scratch
  std::vector<double> d_seq, d_below, d_concat, dh, dc, gate_scratch, d_tmp, d_tmp2, d_mixed, dq, dk, dv, dprob;
};

namespace detail {

inline LstmGates gates_of(const NetworkParams& p, const LstmLayer& l) {
  return {std::span<const double>(p.values).subspan(l.weight, 4 * l.hidden * l.concat()),
          std::span<const double>(p.values).subspan(l.bias, 4 * l.hidden), l.input, l.hidden};
}

inline void check_batch(const NetworkParams& p, const Batch& b) {
  if (b.features != p.spec.input_dim) fail(Errc::shape_mismatch, "feature count does not match the network");
  if (b.length == 0) fail(Errc::shape_mismatch, "empty sequence");
  if (!p.spec.recurrent() && b.length != 1) fail(Errc::shape_mismatch, "MLP takes flat samples");
  if (b.inputs.size() != b.size * b.length * b.features || b.targets.size() != b.size) {
    fail(Errc::shape_mismatch, "batch storage");
  }
  if (p.values.size() != p.layout.total) fail(Errc::shape_mismatch, "parameter vector size");
}

// --- MLP -------------------------------------------------------------------

inline double mlp_sample(const NetworkParams& p, const double* x, Workspace& ws) {
  const auto& L = p.layout;
  const double w0 = p.spec.omega0;
  ws.pre.resize(L.dense.size());
  ws.act.resize(L.dense.size() + 1);
  ws.act[0].assign(x, x + p.spec.input_dim);
  for (std::size_t l = 0; l < L.dense.size(); ++l) {
    const auto& d = L.dense[l];
    ws.pre[l].resize(d.out);
    ws.act[l + 1].resize(d.out);
    affine(p.at(d.weight), p.at(d.bias), d.out, d.in, ws.act[l].data(), ws.pre[l].data());
    for (std::size_t k = 0; k < d.out; ++k) ws.act[l + 1][k] = std::sin(w0 * ws.pre[l][k]);
  }
  double y = 0.0;
  affine(p.at(L.head.weight), p.at(L.head.bias), 1, L.head.in, ws.act.back().data(), &y);
  return y;
}

inline void mlp_sample_backward(const NetworkParams& p, Workspace& ws, double dy, double* grad) {
  const auto& L = p.layout;
  const double w0 = p.spec.omega0;
  affine_grad_params(grad + L.head.weight, grad + L.head.bias, 1, L.head.in, &dy, ws.act.back().data());
  ws.dh.assign(L.head.in, 0.0);
  affine_grad_input(p.at(L.head.weight), 1, L.head.in, &dy, ws.dh.data());
  for (std::size_t l = L.dense.size(); l-- > 0;) {
    const auto& d = L.dense[l];
    for (std::size_t k = 0; k < d.out; ++k) ws.dh[k] *= w0 * std::cos(w0 * ws.pre[l][k]);
    affine_grad_params(grad + d.weight, grad + d.bias, d.out, d.in, ws.dh.data(), ws.act[l].data());
    if (l == 0) break;
    ws.d_below.assign(d.in, 0.0);
    affine_grad_input(p.at(d.weight), d.out, d.in, ws.dh.data(), ws.d_below.data());
    std::swap(ws.dh, ws.d_below);
  }
}

// --- LSTM stack --------------------------------------------------------------

/// Runs every LSTM layer over the window; leaves the top layer's h sequence
/// in ws.top.
inline void lstm_stack_sample(const NetworkParams& p, const double* x, std::size_t length, Workspace& ws) {
  const auto& layers = p.layout.lstm;
  const std::size_t H = p.spec.hidden;
  ws.cell.resize(layers.size());
  ws.zeros.assign(H, 0.0);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto gates = gates_of(p, layers[l]);
    auto& cells = ws.cell[l];
    cells.resize(length);
    for (std::size_t t = 0; t < length; ++t) {
      const double* in = l == 0 ? x + t * p.spec.input_dim : ws.cell[l - 1][t].h.data();
      const double* h_prev = t == 0 ? ws.zeros.data() : cells[t - 1].h.data();
      const double* c_prev = t == 0 ? ws.zeros.data() : cells[t - 1].c.data();
      lstm_cell_forward(gates, in, h_prev, c_prev, cells[t]);
    }
  }
  ws.top.resize(length * H);
  for (std::size_t t = 0; t < length; ++t) {
    std::copy(ws.cell.back()[t].h.begin(), ws.cell.back()[t].h.end(), ws.top.begin() + static_cast<std::ptrdiff_t>(t * H));
  }
}

/// Backpropagation through time over the full window. ws.d_seq holds
/// dL/dh for every position of the top layer on entry.
inline void lstm_stack_backward(const NetworkParams& p, std::size_t length, Workspace& ws, double* grad) {
  const auto& layers = p.layout.lstm;
  const std::size_t H = p.spec.hidden;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const auto gates = gates_of(p, layer);
    const std::size_t D = layer.input;
    ws.dc.assign(H, 0.0);
    ws.d_tmp.assign(H, 0.0);  // recurrent dL/dh_{t}
    ws.d_below.assign(length * D, 0.0);
    ws.d_concat.resize(H + D);
    ws.dh.resize(H);
    for (std::size_t t = length; t-- > 0;) {
      for (std::size_t k = 0; k < H; ++k) ws.dh[k] = ws.d_seq[t * H + k] + ws.d_tmp[k];
      lstm_cell_backward(gates, ws.cell[l][t], ws.dh.data(), ws.dc.data(), grad + layer.weight, grad + layer.bias,
                         ws.d_concat.data(), ws.gate_scratch);
      std::copy(ws.d_concat.begin(), ws.d_concat.begin() + static_cast<std::ptrdiff_t>(H), ws.d_tmp.begin());
      std::copy(ws.d_concat.begin() + static_cast<std::ptrdiff_t>(H), ws.d_concat.end(),
                ws.d_below.begin() + static_cast<std::ptrdiff_t>(t * D));
    }
    if (l > 0) std::swap(ws.d_seq, ws.d_below);
  }
}

// --- Encoder ---------------------------------------------------------------

inline void encoder_forward(const NetworkParams& p, const EncoderLayer& e, std::size_t length, EncoderCache& c) {
  const std::size_t d = e.query.out;
  const std::size_t F = e.ff1.out;
  const std::size_t heads = p.spec.heads;
  const std::size_t dk = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const bool ln = p.spec.layer_norm;
  const std::size_t n = length * d;

  c.q.resize(n);
  c.k.resize(n);
  c.v.resize(n);
  for (std::size_t t = 0; t < length; ++t) {
    affine(p.at(e.query.weight), p.at(e.query.bias), d, d, &c.x[t * d], &c.q[t * d]);
    affine(p.at(e.key.weight), p.at(e.key.bias), d, d, &c.x[t * d], &c.k[t * d]);
    affine(p.at(e.value.weight), p.at(e.value.bias), d, d, &c.x[t * d], &c.v[t * d]);
  }
  c.probs.resize(heads * length * length);
  c.mixed.assign(n, 0.0);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dk;
    for (std::size_t i = 0; i < length; ++i) {
      double* row = &c.probs[(h * length + i) * length];
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < length; ++j) {
        double s = 0.0;
        for (std::size_t m = 0; m < dk; ++m) s += c.q[i * d + off + m] * c.k[j * d + off + m];
        row[j] = s * scale;
        peak = std::max(peak, row[j]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < length; ++j) {
        row[j] = std::exp(row[j] - peak);
        total += row[j];
      }
      for (std::size_t j = 0; j < length; ++j) {
        row[j] /= total;
        for (std::size_t m = 0; m < dk; ++m) c.mixed[i * d + off + m] += row[j] * c.v[j * d + off + m];
      }
    }
  }

  c.r1.resize(n);
  c.y1.resize(n);
  c.xhat1.resize(n);
  c.inv1.resize(length);
  for (std::size_t t = 0; t < length; ++t) {
    affine(p.at(e.output.weight), p.at(e.output.bias), d, d, &c.mixed[t * d], &c.r1[t * d]);
    for (std::size_t m = 0; m < d; ++m) c.r1[t * d + m] += c.x[t * d + m];
    if (ln) {
      layer_norm_forward(&c.r1[t * d], p.at(e.norm1.gain), p.at(e.norm1.bias), d, &c.y1[t * d], &c.xhat1[t * d],
                         c.inv1[t]);
    } else {
      std::copy_n(&c.r1[t * d], d, &c.y1[t * d]);
    }
  }

  c.z1.resize(length * F);
  c.h1.resize(length * F);
  c.z2.resize(n);
  c.y2.resize(n);
  c.xhat2.resize(n);
  c.inv2.resize(length);
  std::vector<double> r2(d);
  for (std::size_t t = 0; t < length; ++t) {
    affine(p.at(e.ff1.weight), p.at(e.ff1.bias), F, d, &c.y1[t * d], &c.z1[t * F]);
    for (std::size_t m = 0; m < F; ++m) c.h1[t * F + m] = std::max(0.0, c.z1[t * F + m]);
    affine(p.at(e.ff2.weight), p.at(e.ff2.bias), d, F, &c.h1[t * F], &c.z2[t * d]);
    for (std::size_t m = 0; m < d; ++m) r2[m] = c.y1[t * d + m] + std::max(0.0, c.z2[t * d + m]);
    if (ln) {
      layer_norm_forward(r2.data(), p.at(e.norm2.gain), p.at(e.norm2.bias), d, &c.y2[t * d], &c.xhat2[t * d],
                         c.inv2[t]);
    } else {
      std::copy(r2.begin(), r2.end(), c.y2.begin() + static_cast<std::ptrdiff_t>(t * d));
    }
  }
}

/// ws.d_seq holds dL/dy2 on entry and dL/dx on exit.
inline void encoder_backward(const NetworkParams& p, const EncoderLayer& e, std::size_t length,
                             const EncoderCache& c, Workspace& ws, double* grad) {
  const std::size_t d = e.query.out;
  const std::size_t F = e.ff1.out;
  const std::size_t heads = p.spec.heads;
  const std::size_t dk = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const bool ln = p.spec.layer_norm;
  const std::size_t n = length * d;

  // second sublayer: y2 = LN2(y1 + relu(W2 relu(W1 y1 + b1) + b2))
  auto& dy1 = ws.d_tmp;
  dy1.assign(n, 0.0);
  std::vector<double> dr2(d);
  std::vector<double> dz2(d);
  std::vector<double> dh1(F);
  for (std::size_t t = 0; t < length; ++t) {
    if (ln) {
      layer_norm_backward(&ws.d_seq[t * d], &c.xhat2[t * d], c.inv2[t], p.at(e.norm2.gain), d, dr2.data(),
                          grad + e.norm2.gain, grad + e.norm2.bias);
    } else {
      std::copy_n(&ws.d_seq[t * d], d, dr2.data());
    }
    for (std::size_t m = 0; m < d; ++m) {
      dy1[t * d + m] += dr2[m];
      dz2[m] = c.z2[t * d + m] > 0.0 ? dr2[m] : 0.0;
    }
    affine_grad_params(grad + e.ff2.weight, grad + e.ff2.bias, d, F, dz2.data(), &c.h1[t * F]);
    std::fill(dh1.begin(), dh1.end(), 0.0);
    affine_grad_input(p.at(e.ff2.weight), d, F, dz2.data(), dh1.data());
    for (std::size_t m = 0; m < F; ++m) dh1[m] = c.z1[t * F + m] > 0.0 ? dh1[m] : 0.0;
    affine_grad_params(grad + e.ff1.weight, grad + e.ff1.bias, F, d, dh1.data(), &c.y1[t * d]);
    affine_grad_input(p.at(e.ff1.weight), F, d, dh1.data(), &dy1[t * d]);
  }

  // first sublayer: y1 = LN1(x + W_o mix + b_o)
  auto& dr1 = ws.d_tmp2;
  dr1.resize(n);
  for (std::size_t t = 0; t < length; ++t) {
    if (ln) {
      layer_norm_backward(&dy1[t * d], &c.xhat1[t * d], c.inv1[t], p.at(e.norm1.gain), d, &dr1[t * d],
                          grad + e.norm1.gain, grad + e.norm1.bias);
    } else {
      std::copy_n(&dy1[t * d], d, &dr1[t * d]);
    }
  }
  ws.d_mixed.assign(n, 0.0);
  for (std::size_t t = 0; t < length; ++t) {
    affine_grad_params(grad + e.output.weight, grad + e.output.bias, d, d, &dr1[t * d], &c.mixed[t * d]);
    affine_grad_input(p.at(e.output.weight), d, d, &dr1[t * d], &ws.d_mixed[t * d]);
  }

  ws.dq.assign(n, 0.0);
  ws.dk.assign(n, 0.0);
  ws.dv.assign(n, 0.0);
  ws.dprob.resize(length);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dk;
    for (std::size_t i = 0; i < length; ++i) {
      const double* row = &c.probs[(h * length + i) * length];
      double weighted = 0.0;
      for (std::size_t j = 0; j < length; ++j) {
        double g = 0.0;
        for (std::size_t m = 0; m < dk; ++m) {
          g += ws.d_mixed[i * d + off + m] * c.v[j * d + off + m];
          ws.dv[j * d + off + m] += row[j] * ws.d_mixed[i * d + off + m];
        }
        ws.dprob[j] = g;
        weighted += row[j] * g;
      }
      for (std::size_t j = 0; j < length; ++j) {
        const double ds = row[j] * (ws.dprob[j] - weighted) * scale;
        for (std::size_t m = 0; m < dk; ++m) {
          ws.dq[i * d + off + m] += ds * c.k[j * d + off + m];
          ws.dk[j * d + off + m] += ds * c.q[i * d + off + m];
        }
      }
    }
  }

  // dx = dr1 (residual) + projections
  for (std::size_t k = 0; k < n; ++k) ws.d_seq[k] = dr1[k];
  for (std::size_t t = 0; t < length; ++t) {
    const double* x = &c.x[t * d];
    affine_grad_params(grad + e.query.weight, grad + e.query.bias, d, d, &ws.dq[t * d], x);
    affine_grad_params(grad + e.key.weight, grad + e.key.bias, d, d, &ws.dk[t * d], x);
    affine_grad_params(grad + e.value.weight, grad + e.value.bias, d, d, &ws.dv[t * d], x);
    affine_grad_input(p.at(e.query.weight), d, d, &ws.dq[t * d], &ws.d_seq[t * d]);
    affine_grad_input(p.at(e.key.weight), d, d, &ws.dk[t * d], &ws.d_seq[t * d]);
    affine_grad_input(p.at(e.value.weight), d, d, &ws.dv[t * d], &ws.d_seq[t * d]);
  }
}

// --- whole networks ----------------------------------------------------------

inline double sample_forward(const NetworkParams& p, const double* x, std::size_t length, Workspace& ws) {
  const auto& L = p.layout;
  if (p.spec.kind == Architecture::siren_mlp) return mlp_sample(p, x, ws);
  lstm_stack_sample(p, x, length, ws);
  const std::size_t H = p.spec.hidden;
  const double* last = &ws.top[(length - 1) * H];
  if (p.spec.kind == Architecture::lstm_transformer) {
    ws.encoder.resize(L.encoder.size());
    for (std::size_t l = 0; l < L.encoder.size(); ++l) {
      auto& c = ws.encoder[l];
      if (l == 0) {
        c.x = ws.top;
        for (std::size_t t = 0; t < length; ++t) {
          const auto pe = positional_encoding(t, H);
          for (std::size_t m = 0; m < H; ++m) c.x[t * H + m] += pe[m];
        }
      } else {
        c.x = ws.encoder[l - 1].y2;
      }
      encoder_forward(p, L.encoder[l], length, c);
    }
    last = &ws.encoder.back().y2[(length - 1) * H];
  }
  double y = 0.0;
  affine(p.at(L.head.weight), p.at(L.head.bias), 1, H, last, &y);
  return y;
}

/// Accumulates dy * d(prediction)/d(theta) into grad, after sample_forward.
inline void sample_backward(const NetworkParams& p, std::size_t length, Workspace& ws, double dy, double* grad) {
  const auto& L = p.layout;
  if (p.spec.kind == Architecture::siren_mlp) {
    mlp_sample_backward(p, ws, dy, grad);
    return;
  }
  const std::size_t H = p.spec.hidden;
  const bool hybrid = p.spec.kind == Architecture::lstm_transformer;
  const double* last = hybrid ? &ws.encoder.back().y2[(length - 1) * H] : &ws.top[(length - 1) * H];
  affine_grad_params(grad + L.head.weight, grad + L.head.bias, 1, H, &dy, last);
  ws.d_seq.assign(length * H, 0.0);
  affine_grad_input(p.at(L.head.weight), 1, H, &dy, &ws.d_seq[(length - 1) * H]);
  if (hybrid) {
    for (std::size_t l = L.encoder.size(); l-- > 0;) encoder_backward(p, L.encoder[l], length, ws.encoder[l], ws, grad);
  }
  lstm_stack_backward(p, length, ws, grad);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public entry points

/// Predictions for every sample of the batch.
inline std::vector<double> forward(const NetworkParams& p, const Batch& batch) {
  detail::check_batch(p, batch);
  std::vector<double> out(batch.size);
  parallel_for(batch.size, [&](std::size_t begin, std::size_t end) {
    Workspace ws;
    for (std::size_t b = begin; b < end; ++b) out[b] = detail::sample_forward(p, batch.sample(b), batch.length, ws);
  });
  return out;
}

inline std::vector<double> mlp_forward(const NetworkParams& p, const Batch& batch) {
  if (p.spec.kind != Architecture::siren_mlp) fail(Errc::shape_mismatch, "mlp_forward on a recurrent network");
  return forward(p, batch);
}

inline std::vector<double> lstm_forward(const NetworkParams& p, const Batch& batch) {
  if (p.spec.kind != Architecture::lstm_stack) fail(Errc::shape_mismatch, "lstm_forward needs lstm_stack");
  return forward(p, batch);
}

inline std::vector<double> hybrid_forward(const NetworkParams& p, const Batch& batch) {
  if (p.spec.kind != Architecture::lstm_transformer) fail(Errc::shape_mismatch, "hybrid_forward needs lstm_transformer");
  return forward(p, batch);
}

/// Samples per gradient chunk. Chunks are summed in index order whatever the
/// worker count, so gradients are bit-identical for any WGF_THREADS.
inline constexpr std::size_t gradient_chunk = 16;

/// Zeroes `grad`, fills it with dMSE/dtheta over the batch, returns the MSE.
inline double loss_and_gradient(const NetworkParams& p, const Batch& batch, std::span<double> grad) {
  detail::check_batch(p, batch);
  if (batch.size == 0) fail(Errc::length_mismatch, "empty batch");
  if (grad.size() != p.size()) fail(Errc::shape_mismatch, "gradient buffer");
  std::fill(grad.begin(), grad.end(), 0.0);

  const std::size_t chunks = (batch.size + gradient_chunk - 1) / gradient_chunk;
  const std::size_t workers = std::min(thread_limit(), chunks);
  std::vector<std::vector<double>> partial(workers, std::vector<double>(p.size()));
  std::vector<double> partial_sse(workers);
  std::vector<Workspace> spaces(workers);
  const double scale = 2.0 / static_cast<double>(batch.size);
  double sse = 0.0;

  for (std::size_t wave = 0; wave < chunks; wave += workers) {
    const std::size_t active = std::min(workers, chunks - wave);
    parallel_for(active, [&](std::size_t begin, std::size_t end) {
      for (std::size_t w = begin; w < end; ++w) {
        auto& g = partial[w];
        std::fill(g.begin(), g.end(), 0.0);
        partial_sse[w] = 0.0;
        const std::size_t first = (wave + w) * gradient_chunk;
        const std::size_t last = std::min(batch.size, first + gradient_chunk);
        for (std::size_t b = first; b < last; ++b) {
          const double y = detail::sample_forward(p, batch.sample(b), batch.length, spaces[w]);
          const double err = y - batch.targets[b];
          partial_sse[w] += err * err;
          detail::sample_backward(p, batch.length, spaces[w], scale * err, g.data());
        }
      }
    });
    for (std::size_t w = 0; w < active; ++w) {
      for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += partial[w][k];
      sse += partial_sse[w];
    }
  }
  return sse / static_cast<double>(batch.size);
}

struct GradientResult {
  double loss = 0.0;
  std::vector<double> grad;
};

inline GradientResult gradients(const NetworkParams& p, const Batch& batch) {
  GradientResult r;
  r.grad.resize(p.size());
  r.loss = loss_and_gradient(p, batch, r.grad);
  return r;
}

}  // namespace wgf::nn
