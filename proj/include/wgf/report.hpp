#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wgf/error.hpp"
#include "wgf/grid_io.hpp"
#include "wgf/interpolate.hpp"
#include "wgf/text.hpp"

namespace wgf::report {

struct Metrics {
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> r2;  // empty when the truth has zero variance
  std::size_t n = 0;
};

inline Metrics regression_metrics(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.empty()) fail(Errc::length_mismatch, "regression_metrics");
  Metrics m;
  m.n = pred.size();
  const double n = static_cast<double>(m.n);
  double mean = 0.0;
  for (const double t : truth) mean += t;
  mean /= n;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < m.n; ++i) {
    const double e = pred[i] - truth[i];
    ss_res += e * e;
    abs_sum += std::fabs(e);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  m.mse = ss_res / n;
  m.rmse = std::sqrt(m.mse);
  m.mae = abs_sum / n;
  if (ss_tot > 0.0) m.r2 = 1.0 - ss_res / ss_tot;
  return m;
}

inline void save_metrics(const Metrics& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(Errc::io_failure, "cannot open " + path.string() + " for writing");
  os << "n=" << m.n << '\n'
     << "mse=" << text::format_double(m.mse) << '\n'
     << "rmse=" << text::format_double(m.rmse) << '\n'
     << "mae=" << text::format_double(m.mae) << '\n'
     << "r2=" << (m.r2 ? text::format_double(*m.r2) : std::string("undefined")) << '\n';
  if (!os) fail(Errc::io_failure, "writing " + path.string());
}

// ---------------------------------------------------------------------------
// Histograms

struct Histogram {
  std::vector<double> edges;  // strictly increasing, size bins + 1
  std::vector<std::size_t> counts;

  [[nodiscard]] std::size_t bins() const { return counts.size(); }
  [[nodiscard]] std::size_t total() const {
    std::size_t s = 0;
    for (const auto c : counts) s += c;
    return s;
  }
};

/// Uniform bins over [min, max]; bin k holds edges[k] <= v < edges[k+1], the
/// last bin is closed on the right. A constant sample gets a unit-wide range
/// centred on its value.
inline Histogram make_histogram(std::span<const double> values, std::size_t bins) {
  if (values.empty()) fail(Errc::empty_input, "histogram of no values");
  if (bins == 0) fail(Errc::bad_range, "histogram needs at least one bin");
  double lo = values[0];
  double hi = values[0];
  for (const double v : values) {
    if (!std::isfinite(v)) fail(Errc::non_finite, "histogram input");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t k = 0; k < bins; ++k) h.edges[k] = lo + width * static_cast<double>(k);
  h.edges[bins] = hi;
  h.counts.assign(bins, 0);
  for (const double v : values) {
    auto k = static_cast<std::size_t>(std::clamp((v - lo) / width, 0.0, static_cast<double>(bins - 1)));
    // settle rounding so the bin agrees with the stored edges
    while (k > 0 && v < h.edges[k]) --k;
    while (k + 1 < bins && v >= h.edges[k + 1]) ++k;
    ++h.counts[k];
  }
  return h;
}

/// Histogram of prediction errors (pred - truth).
inline Histogram error_histogram(std::span<const double> errors, std::size_t bins) {
  return make_histogram(errors, bins);
}

inline void save_histogram_csv(const Histogram& h, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(Errc::io_failure, "cannot open " + path.string() + " for writing");
  os << "lower,upper,count\n";
  for (std::size_t k = 0; k < h.bins(); ++k) {
    os << text::format_double(h.edges[k]) << ',' << text::format_double(h.edges[k + 1]) << ',' << h.counts[k] << '\n';
  }
  if (!os) fail(Errc::io_failure, "writing " + path.string());
}

// ---------------------------------------------------------------------------
// Field statistics

struct TargetStats {
  std::string id;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct FieldStats {
  std::vector<TargetStats> targets;
  Histogram histogram;
};

/// Per-target temporal mean/min/max and a histogram over every cell.
inline FieldStats field_stats(const interp::InterpolatedSeries& s, std::size_t bins = 50) {
  if (s.steps() == 0 || s.targets() == 0) fail(Errc::empty_input, "field_stats on an empty series");
  FieldStats out;
  out.targets.reserve(s.targets());
  for (std::size_t p = 0; p < s.targets(); ++p) {
    TargetStats ts{s.target_ids[p], 0.0, s.at(0, p), s.at(0, p)};
    for (std::size_t t = 0; t < s.steps(); ++t) {
      const double v = s.at(t, p);
      ts.mean += v;
      ts.min = std::min(ts.min, v);
      ts.max = std::max(ts.max, v);
    }
    ts.mean /= static_cast<double>(s.steps());
    out.targets.push_back(std::move(ts));
  }
  out.histogram = make_histogram(s.values, bins);
  return out;
}

/// `id,lat,lon,mean,min,max`, one row per target (map-plot input).
inline void save_field_stats_csv(const FieldStats& stats, const io::TargetSet& targets,
                                 const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(Errc::io_failure, "cannot open " + path.string() + " for writing");
  os << "id,lat,lon,mean,min,max\n";
  for (std::size_t p = 0; p < stats.targets.size(); ++p) {
    const auto& t = stats.targets[p];
    const auto& pt = targets.points.at(p);
    os << t.id << ',' << text::format_double(pt.lat_deg) << ',' << text::format_double(pt.lon_deg) << ','
       << text::format_double(t.mean) << ',' << text::format_double(t.min) << ',' << text::format_double(t.max)
       << '\n';
  }
  if (!os) fail(Errc::io_failure, "writing " + path.string());
}

}  // namespace wgf::report
