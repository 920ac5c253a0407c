#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "wgf/error.hpp"

namespace wgf::nn {

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  AdamSettings settings;

  static OptimizerState for_params(std::size_t count, double learning_rate, double weight_decay) {
    OptimizerState s;
    s.first_moment.assign(count, 0.0);
    s.second_moment.assign(count, 0.0);
    s.learning_rate = learning_rate;
    s.weight_decay = weight_decay;
    return s;
  }
};

/// Bias-corrected Adam with decoupled weight decay:
/// theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta).
inline void adam_step(OptimizerState& s, std::span<const double> grads, std::span<double> params) {
  if (grads.size() != params.size() || s.first_moment.size() != params.size() ||
      s.second_moment.size() != params.size()) {
    fail(Errc::shape_mismatch, "adam_step");
  }
  ++s.step;
  const auto& a = s.settings;
  const double t = static_cast<double>(s.step);
  const double correction1 = 1.0 - std::pow(a.beta1, t);
  const double correction2 = 1.0 - std::pow(a.beta2, t);
  const double lr = s.learning_rate;
  const double decay = lr * s.weight_decay;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    double& m = s.first_moment[k];
    double& v = s.second_moment[k];
    m = a.beta1 * m + (1.0 - a.beta1) * g;
    v = a.beta2 * v + (1.0 - a.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[k] -= lr * m_hat / (std::sqrt(v_hat) + a.eps) + decay * params[k];
  }
}

// ---------------------------------------------------------------------------
// Learning-rate schedules

struct ClrSettings {
  double base = 1e-4;
  double max = 1e-2;
  double step_size = 2000.0;
  double gamma = 0.99994;

  /// base = lr/10, max = lr*10.
  static ClrSettings around(double lr) { return {lr / 10.0, lr * 10.0, 2000.0, 0.99994}; }

  void validate() const {
    if (!(base > 0.0) || !(max >= base) || !(step_size > 0.0) || !(gamma > 0.0 && gamma <= 1.0)) {
      fail(Errc::bad_range, "cyclic learning rate settings");
    }
  }
};

/// Triangular cycle between base and max whose amplitude decays by gamma per
/// iteration.
inline double clr_exp_range(std::uint64_t iteration, double base, double max, double step_size, double gamma) {
  ClrSettings{base, max, step_size, gamma}.validate();
  const double it = static_cast<double>(iteration);
  const double cycle = std::floor(1.0 + it / (2.0 * step_size));
  const double x = std::fabs(it / step_size - 2.0 * cycle + 1.0);
  return base + (max - base) * std::max(0.0, 1.0 - x) * std::pow(gamma, it);
}

inline double clr_exp_range(std::uint64_t iteration, const ClrSettings& s) {
  return clr_exp_range(iteration, s.base, s.max, s.step_size, s.gamma);
}

struct PlateauSettings {
  double factor = 0.5;
  std::size_t patience = 10;
  double min_lr = 1e-6;
  double threshold = 1e-4;  // relative improvement required
};

/// Multiplies the learning rate by `factor` once the monitored loss has gone
/// `patience` evaluations without a relative improvement of `threshold`.
class ReduceOnPlateau {
 public:
  ReduceOnPlateau(double learning_rate, PlateauSettings settings) : lr_(learning_rate), settings_(settings) {
    if (!(learning_rate > 0.0)) fail(Errc::bad_range, "learning rate must be positive");
    if (!(settings.factor > 0.0 && settings.factor < 1.0)) fail(Errc::bad_range, "plateau factor must be in (0, 1)");
  }

  double step(double loss) {
    if (loss < best_ * (1.0 - settings_.threshold)) {
      best_ = loss;
      bad_ = 0;
    } else {
      ++bad_;
    }
    if (bad_ >= settings_.patience) {
      const double next = std::max(lr_ * settings_.factor, settings_.min_lr);
      if (next < lr_) ++reductions_;
      lr_ = next;
      bad_ = 0;
    }
    return lr_;
  }

  [[nodiscard]] double learning_rate() const { return lr_; }
  [[nodiscard]] std::size_t reductions() const { return reductions_; }
  [[nodiscard]] std::size_t stale_evaluations() const { return bad_; }

 private:
  double lr_;
  PlateauSettings settings_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t bad_ = 0;
  std::size_t reductions_ = 0;
};

}  // namespace wgf::nn
