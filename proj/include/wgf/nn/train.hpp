#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wgf/dataset.hpp"
#include "wgf/error.hpp"
#include "wgf/nn/architecture.hpp"
#include "wgf/nn/network.hpp"
#include "wgf/nn/optim.hpp"

namespace wgf::nn {

using Scheduler = std::variant<std::monostate, ClrSettings, PlateauSettings>;

struct TrainConfig {
  std::size_t epochs = 1;
  double learning_rate = 1e-3;
  double weight_decay = 1e-6;
  Scheduler scheduler;
  std::size_t batch_size = 256;
  std::size_t steps_per_epoch = 0;  // 0: one full pass over the training set
  std::size_t eval_interval = 1;    // epochs between validation passes
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs == 0) fail(Errc::bad_range, "epochs must be at least 1");
    if (!(learning_rate > 0.0)) fail(Errc::bad_range, "learning rate must be positive");
    if (!(weight_decay >= 0.0)) fail(Errc::bad_range, "weight decay must be non-negative");
    if (batch_size == 0 || eval_interval == 0) fail(Errc::bad_range, "batch size and eval interval must be positive");
    if (const auto* clr = std::get_if<ClrSettings>(&scheduler)) clr->validate();
  }
};

struct EvalPoint {
  std::size_t epoch = 0;
  double loss = 0.0;
};

struct TrainReport {
  std::vector<double> loss;  // mean training loss per epoch
  std::vector<double> lr;    // learning rate at the end of each epoch
  std::vector<EvalPoint> evals;
  double wall_seconds = 0.0;
  double train_mse = 0.0;
  double test_mse = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  NetworkParams params;
  TrainReport report;
};

/// MSE of the network over a whole set, evaluated in fixed-size slices.
template <class Set>
double evaluate_mse(const NetworkParams& p, const Set& set) {
  if (set.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  double sse = 0.0;
  constexpr std::size_t slice = 4096;
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < set.size(); begin += slice) {
    const std::size_t end = std::min(set.size(), begin + slice);
    idx.resize(end - begin);
    for (std::size_t i = begin; i < end; ++i) idx[i - begin] = i;
    const auto batch = make_batch(set, idx);
    const auto pred = forward(p, batch);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double e = pred[i] - batch.targets[i];
      sse += e * e;
    }
  }
  return sse / static_cast<double>(set.size());
}

template <class Set>
std::vector<double> predict(const NetworkParams& p, const Set& set) {
  std::vector<double> out;
  out.reserve(set.size());
  constexpr std::size_t slice = 4096;
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < set.size(); begin += slice) {
    const std::size_t end = std::min(set.size(), begin + slice);
    idx.resize(end - begin);
    for (std::size_t i = begin; i < end; ++i) idx[i - begin] = i;
    const auto pred = forward(p, make_batch(set, idx));
    out.insert(out.end(), pred.begin(), pred.end());
  }
  return out;
}

/// Training loop: per step zero grads, forward, MSE, backward, Adam step and
/// schedule update; one loss and learning rate recorded per epoch.
///
/// The cyclic schedule advances per optimizer step. The plateau schedule
/// watches the validation loss every `eval_interval` epochs (the training
/// loss when no validation set is given).
template <class Set>
TrainResult train(NetworkParams params, const Set& train_set, const Set& test_set, const TrainConfig& config) {
  config.validate();
  if (train_set.size() == 0) fail(Errc::empty_input, "empty training set");
  const auto start = std::chrono::steady_clock::now();

  data::BatchStream stream(train_set.size(), config.batch_size, true, config.seed);
  const std::size_t steps = config.steps_per_epoch ? config.steps_per_epoch : stream.batches_per_pass();
  auto state = OptimizerState::for_params(params.size(), config.learning_rate, config.weight_decay);
  std::vector<double> grad(params.size());

  const auto* clr = std::get_if<ClrSettings>(&config.scheduler);
  const auto* plateau_cfg = std::get_if<PlateauSettings>(&config.scheduler);
  std::optional<ReduceOnPlateau> plateau;
  if (plateau_cfg) plateau.emplace(config.learning_rate, *plateau_cfg);

  TrainReport report;
  report.loss.reserve(config.epochs);
  report.lr.reserve(config.epochs);
  std::uint64_t iteration = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t s = 0; s < steps; ++s) {
      if (clr) state.learning_rate = clr_exp_range(iteration, *clr);
      const auto batch = make_batch(train_set, stream.next());
      const double loss = loss_and_gradient(params, batch, grad);
      if (!std::isfinite(loss)) {
        fail(Errc::non_finite_loss, "epoch " + std::to_string(epoch) + ", step " + std::to_string(s));
      }
      sum += loss * static_cast<double>(batch.size);
      seen += batch.size;
      adam_step(state, grad, params.values);
      ++iteration;
    }
    const double epoch_loss = sum / static_cast<double>(seen);
    report.loss.push_back(epoch_loss);
    report.lr.push_back(state.learning_rate);

    if (epoch % config.eval_interval == 0 && (plateau || test_set.size() > 0)) {
      const double monitored = test_set.size() > 0 ? evaluate_mse(params, test_set) : epoch_loss;
      report.evals.push_back({epoch, monitored});
      if (plateau) state.learning_rate = plateau->step(monitored);
    }
  }

  report.train_mse = evaluate_mse(params, train_set);
  report.test_mse = evaluate_mse(params, test_set);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(params), std::move(report)};
}

}  // namespace wgf::nn
