#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "wgf/dataset.hpp"
#include "wgf/geo.hpp"
#include "wgf/grid_io.hpp"
#include "wgf/interpolate.hpp"
#include "wgf/random.hpp"

namespace wgf::synth {

// Seeded stand-ins for the climate archive, the wind-farm list and the
// production data.

inline constexpr double year_2020_hours = 438288.0;  // 2020-01-01T00:00Z

struct GridSpec {
  geo::PoleSpec pole{39.25, -162.0};
  double t0 = year_2020_hours;
  double dt_h = 3.0;
  std::size_t steps = 8;
  double lat0 = -8.03;
  double dlat = 0.11;
  std::size_t nlat = 157;
  double lon0 = -167.05;
  double dlon = 0.11;
  std::size_t nlon = 182;
  double wind_noise = 0.3;        // m/s, uniform half-width
  double pressure_noise = 50.0;   // Pa, uniform half-width

  /// 157 x 182 rotated grid at 0.11 degrees covering Germany for the default pole.
  static GridSpec regional(std::size_t steps) {
    GridSpec g;
    g.steps = steps;
    return g;
  }

  /// Small grid with unit spacing, origin at (0, 0), north pole.
  static GridSpec small(std::size_t steps, std::size_t nlat, std::size_t nlon) {
    GridSpec g;
    g.pole = {90.0, 0.0};
    g.steps = steps;
    g.lat0 = 0.0;
    g.dlat = 1.0;
    g.nlat = nlat;
    g.lon0 = 0.0;
    g.dlon = 1.0;
    g.nlon = nlon;
    return g;
  }
};

/// Five phases drawn first from the seed, then one noise draw per cell.
///   wind     = 7 + 3 sin(0.35 lat + p0) cos(0.27 lon + p1) + 2 sin(2 pi h / 24 + p2) + noise
///   pressure = 101325 + 800 cos(0.21 lat + p3) + 400 sin(2 pi h / 120 + 0.05 lon + p4) + noise
/// where h is hours since t0. Wind noise is drawn for every cell before
/// pressure noise.
inline io::GridBundle synthetic_bundle(const GridSpec& g, std::uint64_t seed) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Rng rng(seed);
  double ph[5];
  for (double& p : ph) p = rng.uniform(0.0, two_pi);

  io::GridBundle b;
  b.pole = g.pole;
  b.times.resize(g.steps);
  b.lats.resize(g.nlat);
  b.lons.resize(g.nlon);
  for (std::size_t t = 0; t < g.steps; ++t) b.times[t] = g.t0 + g.dt_h * static_cast<double>(t);
  for (std::size_t i = 0; i < g.nlat; ++i) b.lats[i] = g.lat0 + g.dlat * static_cast<double>(i);
  for (std::size_t j = 0; j < g.nlon; ++j) b.lons[j] = g.lon0 + g.dlon * static_cast<double>(j);

  const std::size_t n = g.steps * g.nlat * g.nlon;
  std::vector<float> wind(n);
  std::vector<float> pressure(n);
  for (std::size_t t = 0, k = 0; t < g.steps; ++t) {
    const double h = b.times[t] - g.t0;
    for (std::size_t i = 0; i < g.nlat; ++i) {
      for (std::size_t j = 0; j < g.nlon; ++j, ++k) {
        const double lat = b.lats[i];
        const double lon = b.lons[j];
        wind[k] = static_cast<float>(7.0 + 3.0 * std::sin(0.35 * lat + ph[0]) * std::cos(0.27 * lon + ph[1]) +
                                     2.0 * std::sin(two_pi * h / 24.0 + ph[2]) +
                                     g.wind_noise * rng.uniform(-1.0, 1.0));
      }
    }
  }
  for (std::size_t t = 0, k = 0; t < g.steps; ++t) {
    const double h = b.times[t] - g.t0;
    for (std::size_t i = 0; i < g.nlat; ++i) {
      for (std::size_t j = 0; j < g.nlon; ++j, ++k) {
        const double lat = b.lats[i];
        const double lon = b.lons[j];
        pressure[k] = static_cast<float>(101325.0 + 800.0 * std::cos(0.21 * lat + ph[3]) +
                                         400.0 * std::sin(two_pi * h / 120.0 + 0.05 * lon + ph[4]) +
                                         g.pressure_noise * rng.uniform(-1.0, 1.0));
      }
    }
  }
  b.variables.emplace("wind_speed", std::move(wind));
  b.variables.emplace("pressure", std::move(pressure));
  return b;
}

/// Sites uniformly placed in lat [47.5, 54.5], lon [6, 15], ids wf001, wf002, ...
inline io::TargetSet synthetic_targets(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  io::TargetSet out;
  out.points.reserve(count);
  for (std::size_t p = 0; p < count; ++p) {
    char id[32];
    std::snprintf(id, sizeof id, "wf%03zu", p + 1);
    const double lat = rng.uniform(47.5, 54.5);
    const double lon = rng.uniform(6.0, 15.0);
    out.points.push_back({id, lat, lon});
  }
  return out;
}

/// Hourly output per site: a daily cycle around 2.5 MW plus uniform noise,
/// clipped at zero. Rows are grouped by site.
inline io::PowerSeries synthetic_power(const io::TargetSet& targets, double start_hours, std::size_t hours,
                                       std::uint64_t seed) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Rng rng(seed);
  io::PowerSeries out;
  out.entries.reserve(targets.size() * hours);
  for (const auto& t : targets.points) {
    const double phase = rng.uniform(0.0, two_pi);
    for (std::size_t h = 0; h < hours; ++h) {
      const double v = 2.5 + 2.0 * std::sin(two_pi * static_cast<double>(h) / 24.0 + phase) + rng.uniform(-0.5, 0.5);
      out.entries.push_back({start_hours + static_cast<double>(h), t.id, std::max(0.0, v)});
    }
  }
  return out;
}

/// Coefficients of the linear fixture target, in the units of the raw
/// features (hours, degrees, m/s, Pa).
struct LinearTarget {
  double bias = 1.0;
  double t = 1e-4;
  double x = 0.02;
  double y = -0.01;
  double wind = 0.15;
  double pressure = 2e-4;
  double pressure_ref = 101325.0;

  [[nodiscard]] double operator()(double t_h, double lon, double lat, double w, double pr) const {
    return bias + t * (t_h - year_2020_hours) + x * lon + y * lat + wind * w + pressure * (pr - pressure_ref);
  }
};

/// Hourly power that is constant over each grid step and equal to a linear
/// function of that step's features, so that resampling to the grid cadence
/// gives a table an affine model fits exactly.
inline io::PowerSeries linear_power(const interp::InterpolatedSeries& wind, const interp::InterpolatedSeries& pressure,
                                    const io::TargetSet& targets, std::size_t hours_per_step,
                                    const LinearTarget& f = {}) {
  io::PowerSeries out;
  for (std::size_t p = 0; p < targets.size(); ++p) {
    const auto& site = targets.points[p];
    for (std::size_t t = 0; t < wind.steps(); ++t) {
      const double v = std::max(0.0, f(wind.times[t], site.lon_deg, site.lat_deg, wind.at(t, p), pressure.at(t, p)));
      for (std::size_t h = 0; h < hours_per_step; ++h) {
        out.entries.push_back({wind.times[t] + static_cast<double>(h), site.id, v});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sequence-dependent regression task

/// Idealised turbine: zero below 3 m/s and above 25 m/s, cubic ramp to the
/// 5 MW rating at 12 m/s.
inline double turbine_curve(double w) {
  if (w < 3.0 || w > 25.0) return 0.0;
  if (w >= 12.0) return 5.0;
  const double r = (w - 3.0) / 9.0;
  return 5.0 * r * r * r;
}

struct SequenceTaskSpec {
  std::size_t targets = 20;
  std::size_t steps = 1000;
  double noise = 0.3;  // m/s, normal
};

/// Raw (unscaled) rows ordered by (target, time). Wind per site is a sum of
/// three sinusoids plus noise; power at step t follows the turbine curve of
/// the lagged mix 0.5 w[t-1] + 0.3 w[t-2] + 0.2 w[t-3], so the current row
/// alone does not determine its label.
inline data::SampleTable sequence_task(const SequenceTaskSpec& s, std::uint64_t seed) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Rng rng(seed);
  data::SampleTable table;
  std::vector<double> w(s.steps);
  for (std::size_t p = 0; p < s.targets; ++p) {
    const double lat = rng.uniform(47.5, 54.5);
    const double lon = rng.uniform(6.0, 15.0);
    const double mean = rng.uniform(7.0, 9.0);
    double amp[3], period[3], phase[3];
    for (int k = 0; k < 3; ++k) {
      amp[k] = rng.uniform(1.0, 3.0);
      period[k] = rng.uniform(8.0, 80.0);
      phase[k] = rng.uniform(0.0, two_pi);
    }
    for (std::size_t t = 0; t < s.steps; ++t) {
      double v = mean + s.noise * rng.normal();
      for (int k = 0; k < 3; ++k) v += amp[k] * std::sin(two_pi * static_cast<double>(t) / period[k] + phase[k]);
      w[t] = std::max(0.0, v);
    }
    for (std::size_t t = 0; t < s.steps; ++t) {
      const double lag = 0.5 * w[t >= 1 ? t - 1 : 0] + 0.3 * w[t >= 2 ? t - 2 : 0] + 0.2 * w[t >= 3 ? t - 3 : 0];
      const double pressure = 101325.0 + 300.0 * std::sin(two_pi * static_cast<double>(t) / 40.0 + lat);
      const std::array<double, data::feature_count> f{year_2020_hours + 3.0 * static_cast<double>(t), lon, lat, w[t],
                                                      pressure};
      table.push_back(f, turbine_curve(lag), {t, p});
    }
  }
  return table;
}

}  // namespace wgf::synth
