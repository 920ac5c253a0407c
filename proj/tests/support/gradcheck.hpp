#pragma once

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "wgf/nn/network.hpp"
#include "wgf/random.hpp"

namespace gradcheck {

inline wgf::nn::Batch random_batch(wgf::Rng& rng, std::size_t size, std::size_t length, std::size_t features) {
  wgf::nn::Batch b{size, length, features, {}, {}};
  for (std::size_t k = 0; k < size * length * features; ++k) b.inputs.push_back(rng.uniform(-1, 1));
  for (std::size_t k = 0; k < size; ++k) b.targets.push_back(rng.uniform(-1, 1));
  return b;
}

/// Every parameter drawn from U(-scale, scale); norm gains around 1.
inline void randomize(wgf::nn::NetworkParams& p, wgf::Rng& rng, double scale) {
  for (const auto& blk : p.layout.blocks) {
    const bool gain = blk.name.find(".gain") != std::string::npos;
    for (std::size_t k = 0; k < blk.size; ++k) {
      p.values[blk.offset + k] = gain ? 1.0 + rng.uniform(-0.3, 0.3) : rng.uniform(-scale, scale);
    }
  }
}

struct Result {
  double max_rel = 0.0;
  std::size_t worst = 0;
};

/// Analytic gradient against central differences of the batch MSE.
/// Relative error |a - n| / max(|a|, |n|, floor). Central differences at
/// h = 1e-6 carry about 1e-10 of rounding noise, so entries whose true value
/// is zero (key biases under softmax shift invariance) need the floor.
inline Result compare(const wgf::nn::NetworkParams& p, const wgf::nn::Batch& batch, double floor = 1e-4) {
  const auto analytic = wgf::nn::gradients(p, batch).grad;
  auto probe = p;
  const auto numeric = oracle::central_difference(
      [&](const oracle::Vec& theta) {
        probe.values = theta;
        const auto pred = wgf::nn::forward(probe, batch);
        return wgf::nn::mse_loss(pred, batch.targets);
      },
      p.values);
  Result r;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    const double denom = std::max({std::fabs(analytic[k]), std::fabs(numeric[k]), floor});
    const double rel = std::fabs(analytic[k] - numeric[k]) / denom;
    if (rel > r.max_rel) {
      r.max_rel = rel;
      r.worst = k;
    }
  }
  return r;
}

}  // namespace gradcheck
