#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wgf/error.hpp"
#include "wgf/grid_io.hpp"
#include "wgf/interpolate.hpp"
#include "wgf/random.hpp"
#include "wgf/text.hpp"

namespace wgf::data {

// ---------------------------------------------------------------------------
// Resampling

/// Mean over non-overlapping windows of `interval_h` hours, per plant.
///
/// Windows start at each plant's first timestamp and are labelled with
/// their start time; an incomplete trailing window is dropped.
inline io::PowerSeries resample_power(const io::PowerSeries& series, double interval_h) {
  if (series.entries.empty()) fail(Errc::empty_series, "no power entries");
  if (!(interval_h > 0.0) || !std::isfinite(interval_h)) fail(Errc::irregular_cadence, "interval must be positive");
  series.validate();

  io::PowerSeries out;
  for (const auto& [plant, rows] : series.by_plant()) {
    if (rows.size() < 2) fail(Errc::irregular_cadence, "plant " + plant + " has a single entry");
    const double step = rows[1].timestamp - rows[0].timestamp;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double d = rows[i].timestamp - rows[i - 1].timestamp;
      if (std::fabs(d - step) > 1e-9 * std::max(1.0, step)) {
        fail(Errc::irregular_cadence, "plant " + plant + " step changes at row " + std::to_string(i));
      }
    }
    const double ratio = interval_h / step;
    const double k_real = std::round(ratio);
    if (k_real < 1.0 || std::fabs(ratio - k_real) > 1e-9 * ratio) {
      fail(Errc::irregular_cadence, "interval is not a multiple of the native step for plant " + plant);
    }
    const auto k = static_cast<std::size_t>(k_real);
    for (std::size_t w = 0; (w + 1) * k <= rows.size(); ++w) {
      double sum = 0.0;
      for (std::size_t i = w * k; i < (w + 1) * k; ++i) sum += rows[i].power_mw;
      out.entries.push_back({rows[w * k].timestamp, plant, sum / static_cast<double>(k)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scaling

/// Min-max map onto [-1, 1]. A degenerate range (max == min) maps to 0.
struct Scaler {
  double min = 0.0;
  double max = 0.0;

  static Scaler fit(std::span<const double> values) {
    if (values.empty()) fail(Errc::empty_input, "scaler fit on empty data");
    Scaler s{values[0], values[0]};
    for (const double v : values) {
      if (!std::isfinite(v)) fail(Errc::non_finite, "scaler fit");
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
    }
    return s;
  }

  [[nodiscard]] bool degenerate() const { return !(max > min); }

  [[nodiscard]] double apply(double v) const {
    if (degenerate()) return 0.0;
    return 2.0 * (v - min) / (max - min) - 1.0;
  }

  [[nodiscard]] double invert(double s) const {
    if (degenerate()) return min;
    return (s + 1.0) * 0.5 * (max - min) + min;
  }

  friend bool operator==(const Scaler&, const Scaler&) = default;
};

// ---------------------------------------------------------------------------
// Sample table

inline constexpr std::size_t feature_count = 5;
inline constexpr std::array<std::string_view, feature_count> feature_names{"t", "x", "y", "wind", "pressure"};

enum Feature : std::size_t { time = 0, x = 1, y = 2, wind = 3, pressure = 4 };

struct RowOrigin {
  std::size_t time_index = 0;
  std::size_t target_index = 0;

  friend bool operator==(const RowOrigin&, const RowOrigin&) = default;
};

/// Flat regression rows: features (t, x=lon, y=lat, wind, pressure) -> power.
struct SampleTable {
  std::vector<double> features;  // [N][5]
  std::vector<double> targets;   // [N]
  std::vector<RowOrigin> provenance;

  [[nodiscard]] std::size_t size() const { return targets.size(); }
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features).subspan(i * feature_count, feature_count);
  }

  void push_back(std::span<const double> feats, double target, RowOrigin origin) {
    features.insert(features.end(), feats.begin(), feats.end());
    targets.push_back(target);
    provenance.push_back(origin);
  }

  friend bool operator==(const SampleTable&, const SampleTable&) = default;
};

struct FeatureScalers {
  std::array<Scaler, feature_count> features;
  Scaler power;

  friend bool operator==(const FeatureScalers&, const FeatureScalers&) = default;
};

/// Unscaled rows ordered by (target, time).
inline SampleTable assemble_raw(const interp::InterpolatedSeries& wind, const interp::InterpolatedSeries& pressure,
                                const io::PowerSeries& power, const io::TargetSet& targets) {
  const std::size_t nt = wind.steps();
  auto same_times = [](std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::fabs(a[i] - b[i]) > 1e-6) return false;
    }
    return true;
  };
  if (!same_times(wind.times, pressure.times)) fail(Errc::time_axis_mismatch, "wind vs pressure");

  auto column_of = [](const interp::InterpolatedSeries& s) {
    std::unordered_map<std::string_view, std::size_t> idx;
    for (std::size_t p = 0; p < s.targets(); ++p) idx.emplace(s.target_ids[p], p);
    return idx;
  };
  const auto wind_col = column_of(wind);
  const auto pressure_col = column_of(pressure);

  std::unordered_map<std::string, std::vector<io::PowerEntry>> by_plant;
  for (auto& [plant, rows] : power.by_plant()) by_plant.emplace(plant, std::move(rows));

  SampleTable table;
  table.features.reserve(nt * targets.size() * feature_count);
  table.targets.reserve(nt * targets.size());
  table.provenance.reserve(nt * targets.size());
  for (std::size_t p = 0; p < targets.size(); ++p) {
    const auto& target = targets.points[p];
    const auto wc = wind_col.find(target.id);
    const auto pc = pressure_col.find(target.id);
    const auto pw = by_plant.find(target.id);
    if (wc == wind_col.end() || pc == pressure_col.end() || pw == by_plant.end()) {
      fail(Errc::missing_target, target.id);
    }
    const auto& rows = pw->second;
    std::vector<double> ptimes(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) ptimes[i] = rows[i].timestamp;
    if (!same_times(ptimes, wind.times)) fail(Errc::time_axis_mismatch, "power for " + target.id);
    for (std::size_t t = 0; t < nt; ++t) {
      const std::array<double, feature_count> f{wind.times[t], target.lon_deg, target.lat_deg,
                                                wind.at(t, wc->second), pressure.at(t, pc->second)};
      table.push_back(f, rows[t].power_mw, {t, p});
    }
  }
  return table;
}

inline FeatureScalers fit_scalers(const SampleTable& table) {
  FeatureScalers s;
  std::vector<double> column(table.size());
  for (std::size_t f = 0; f < feature_count; ++f) {
    for (std::size_t i = 0; i < table.size(); ++i) column[i] = table.features[i * feature_count + f];
    s.features[f] = Scaler::fit(column);
  }
  s.power = Scaler::fit(table.targets);
  return s;
}

inline SampleTable apply_scalers(const SampleTable& raw, const FeatureScalers& s) {
  SampleTable out = raw;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t f = 0; f < feature_count; ++f) {
      auto& v = out.features[i * feature_count + f];
      v = s.features[f].apply(v);
    }
    out.targets[i] = s.power.apply(out.targets[i]);
  }
  return out;
}

/// N = T * P scaled rows in (target, time) order.
inline SampleTable assemble_samples(const interp::InterpolatedSeries& wind,
                                    const interp::InterpolatedSeries& pressure, const io::PowerSeries& power,
                                    const io::TargetSet& targets, const FeatureScalers& scalers) {
  return apply_scalers(assemble_raw(wind, pressure, power, targets), scalers);
}

// ---------------------------------------------------------------------------
// Splitting

enum class SplitMode { chronological, random };

struct TrainTestSplit {
  SampleTable train;
  SampleTable test;
};

/// [begin, end) row ranges of consecutive rows sharing a target index.
inline std::vector<std::pair<std::size_t, std::size_t>> streams(std::span<const RowOrigin> provenance) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= provenance.size(); ++i) {
    if (i == provenance.size() || provenance[i].target_index != provenance[begin].target_index) {
      if (i > begin) out.emplace_back(begin, i);
      begin = i;
    }
  }
  return out;
}

inline SampleTable select_rows(const SampleTable& table, std::span<const std::size_t> rows) {
  SampleTable out;
  out.features.reserve(rows.size() * feature_count);
  out.targets.reserve(rows.size());
  out.provenance.reserve(rows.size());
  for (const std::size_t r : rows) out.push_back(table.row(r), table.targets[r], table.provenance[r]);
  return out;
}

/// chronological: the last floor(T_s * frac) rows of every target stream;
/// random: a seeded sample of floor(N * frac) rows. Both halves keep the
/// original row order.
inline TrainTestSplit split_train_test(const SampleTable& table, double test_frac, SplitMode mode,
                                       std::uint64_t seed) {
  if (!(test_frac > 0.0 && test_frac < 1.0)) fail(Errc::frac_out_of_range, std::to_string(test_frac));
  std::vector<char> in_test(table.size(), 0);
  if (mode == SplitMode::chronological) {
    for (const auto& [begin, end] : streams(table.provenance)) {
      const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(end - begin) * test_frac));
      for (std::size_t i = end - k; i < end; ++i) in_test[i] = 1;
    }
  } else {
    const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(table.size()) * test_frac));
    std::vector<std::size_t> order(table.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i = 0; i < k; ++i) in_test[order[i]] = 1;
  }
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (std::size_t i = 0; i < table.size(); ++i) (in_test[i] ? test_rows : train_rows).push_back(i);
  return {select_rows(table, train_rows), select_rows(table, test_rows)};
}

// ---------------------------------------------------------------------------
// Sequence windows

struct WindowOrigin {
  std::size_t target_index = 0;
  std::size_t first_row = 0;         // row index in the source table
  std::size_t label_time_index = 0;  // time index of the label row
};

/// Windows of L consecutive rows labelled with the row that follows them.
struct SequenceSet {
  std::size_t length = 0;
  std::size_t features = feature_count;
  std::vector<double> inputs;   // [B][L][F]
  std::vector<double> targets;  // [B]
  std::vector<WindowOrigin> origin;

  [[nodiscard]] std::size_t size() const { return targets.size(); }
  [[nodiscard]] std::span<const double> window(std::size_t b) const {
    return std::span<const double>(inputs).subspan(b * length * features, length * features);
  }
};

inline SequenceSet make_sequences(const SampleTable& table, std::size_t length) {
  if (length == 0) fail(Errc::bad_range, "sequence length must be positive");
  SequenceSet out;
  out.length = length;
  for (const auto& [begin, end] : streams(table.provenance)) {
    if (end - begin <= length) {
      fail(Errc::stream_too_short, "target " + std::to_string(table.provenance[begin].target_index));
    }
  }
  for (const auto& [begin, end] : streams(table.provenance)) {
    for (std::size_t k = begin; k + length < end; ++k) {
      for (std::size_t r = k; r < k + length; ++r) {
        const auto row = table.row(r);
        out.inputs.insert(out.inputs.end(), row.begin(), row.end());
      }
      out.targets.push_back(table.targets[k + length]);
      out.origin.push_back({table.provenance[k].target_index, k, table.provenance[k + length].time_index});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batching

/// One epoch's batches over [0, count). Shuffling is a seeded permutation.
inline std::vector<std::vector<std::size_t>> batches(std::size_t count, std::size_t batch_size, bool shuffle,
                                                     std::uint64_t seed) {
  if (batch_size == 0) fail(Errc::bad_range, "batch size must be at least 1");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < count; i += batch_size) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(count, i + batch_size)));
  }
  return out;
}

template <class Set>
  requires requires(const Set& s) { s.size(); }
std::vector<std::vector<std::size_t>> batches(const Set& set, std::size_t batch_size, bool shuffle,
                                              std::uint64_t seed) {
  return batches(set.size(), batch_size, shuffle, seed);
}

/// Endless batch stream: each full pass is a fresh permutation drawn from
/// one seeded generator, so a run of any length is reproducible.
class BatchStream {
 public:
  BatchStream(std::size_t count, std::size_t batch_size, bool shuffle, std::uint64_t seed)
      : count_(count), batch_size_(batch_size), shuffle_(shuffle), rng_(seed), order_(count) {
    if (batch_size == 0) fail(Errc::bad_range, "batch size must be at least 1");
    if (count == 0) fail(Errc::empty_input, "batch stream over empty set");
    reshuffle();
  }

  [[nodiscard]] std::size_t batches_per_pass() const { return (count_ + batch_size_ - 1) / batch_size_; }

  std::span<const std::size_t> next() {
    if (cursor_ >= count_) {
      reshuffle();
    }
    const std::size_t end = std::min(count_, cursor_ + batch_size_);
    const auto batch = std::span<const std::size_t>(order_).subspan(cursor_, end - cursor_);
    cursor_ = end;
    return batch;
  }

 private:
  void reshuffle() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (shuffle_) rng_.shuffle(std::span<std::size_t>(order_));
    cursor_ = 0;
  }

  std::size_t count_;
  std::size_t batch_size_;
  bool shuffle_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

// ---------------------------------------------------------------------------
// Files

inline constexpr std::string_view sample_header = "t,x,y,wind,pressure,power,time_index,target_index";

inline void save_samples(const SampleTable& table, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(Errc::io_failure, "cannot open " + path.string() + " for writing");
  os << sample_header << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (const double v : table.row(i)) os << text::format_double(v) << ',';
    os << text::format_double(table.targets[i]) << ',' << table.provenance[i].time_index << ','
       << table.provenance[i].target_index << '\n';
  }
  if (!os) fail(Errc::io_failure, "writing " + path.string());
}

inline SampleTable load_samples(const std::filesystem::path& path) {
  auto is = io::detail::open_text(path);
  io::detail::expect_header(is, sample_header, path);
  SampleTable out;
  std::string line;
  std::size_t line_no = 1;
  std::array<double, feature_count> f{};
  while (std::getline(is, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line);
    if (fields.size() != feature_count + 3) fail(Errc::parse_error, io::detail::line_ref(path, line_no));
    for (std::size_t k = 0; k < feature_count; ++k) {
      const auto v = text::parse_double(fields[k]);
      if (!v || !std::isfinite(*v)) fail(Errc::parse_error, io::detail::line_ref(path, line_no));
      f[k] = *v;
    }
    const auto power = text::parse_double(fields[feature_count]);
    const auto ti = text::parse_int<std::size_t>(fields[feature_count + 1]);
    const auto pi = text::parse_int<std::size_t>(fields[feature_count + 2]);
    if (!power || !std::isfinite(*power) || !ti || !pi) fail(Errc::parse_error, io::detail::line_ref(path, line_no));
    out.push_back(f, *power, {*ti, *pi});
  }
  return out;
}

/// `<feature>.min=` / `<feature>.max=` lines, power last.
inline void save_scalers(const FeatureScalers& s, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(Errc::io_failure, "cannot open " + path.string() + " for writing");
  auto put = [&](std::string_view name, const Scaler& sc) {
    os << name << ".min=" << text::format_double(sc.min) << '\n'
       << name << ".max=" << text::format_double(sc.max) << '\n';
  };
  for (std::size_t f = 0; f < feature_count; ++f) put(feature_names[f], s.features[f]);
  put("power", s.power);
  if (!os) fail(Errc::io_failure, "writing " + path.string());
}

inline FeatureScalers load_scalers(const std::filesystem::path& path) {
  auto is = io::detail::open_text(path);
  std::map<std::string, double, std::less<>> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto t = text::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    const auto v = eq == std::string_view::npos ? std::nullopt : text::parse_double(t.substr(eq + 1));
    if (!v) fail(Errc::parse_error, io::detail::line_ref(path, line_no));
    kv[std::string(text::trim(t.substr(0, eq)))] = *v;
  }
  auto get = [&](std::string_view name) {
    Scaler sc;
    for (const auto* end : {".min", ".max"}) {
      const auto it = kv.find(std::string(name) + end);
      if (it == kv.end()) fail(Errc::parse_error, path.string() + ": missing " + std::string(name) + end);
      (std::string_view(end) == ".min" ? sc.min : sc.max) = it->second;
    }
    return sc;
  };
  FeatureScalers s;
  for (std::size_t f = 0; f < feature_count; ++f) s.features[f] = get(feature_names[f]);
  s.power = get("power");
  return s;
}

}  // namespace wgf::data
