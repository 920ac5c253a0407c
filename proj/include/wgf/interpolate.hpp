#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wgf/error.hpp"
#include "wgf/geo.hpp"
#include "wgf/grid_io.hpp"
#include "wgf/kdtree.hpp"
#include "wgf/parallel.hpp"
#include "wgf/text.hpp"

namespace wgf::interp {

enum class Method : std::uint8_t { linear = 0, nearest = 1 };

/// Field values at target locations, [t][p] row-major.
struct InterpolatedSeries {
  std::vector<double> times;
  std::vector<std::string> target_ids;
  std::vector<double> values;
  std::vector<Method> method_mask;

  [[nodiscard]] std::size_t steps() const { return times.size(); }
  [[nodiscard]] std::size_t targets() const { return target_ids.size(); }
  [[nodiscard]] double at(std::size_t t, std::size_t p) const { return values[t * targets() + p]; }
  [[nodiscard]] Method method(std::size_t t, std::size_t p) const { return method_mask[t * targets() + p]; }
};

namespace detail {

/// Linear blend between two neighbours, clamped to their range so that
/// rounding never leaves the convex hull. At x == x0 (x1) the weights are
/// exactly 1 and 0, which makes node values reproduce bit-for-bit.
inline double lerp(double f0, double f1, double x0, double x1, double x) {
  const double h = x1 - x0;
  const double w0 = (x1 - x) / h;
  const double w1 = (x - x0) / h;
  const double r = w0 * f0 + w1 * f1;
  return std::clamp(r, std::min(f0, f1), std::max(f0, f1));
}

/// Lower index of the interval containing x, or nullopt outside [front, back].
inline std::optional<std::size_t> locate(std::span<const double> axis, double x) {
  if (!(x >= axis.front() && x <= axis.back())) return std::nullopt;
  const auto it = std::upper_bound(axis.begin(), axis.end(), x);
  const auto i = static_cast<std::size_t>(it - axis.begin());
  return std::min(i == 0 ? 0 : i - 1, axis.size() - 2);
}

inline void check_axis(std::span<const double> axis, std::size_t dim) {
  if (axis.size() < 2) fail(Errc::degenerate_axis, "axis " + std::to_string(dim) + " has fewer than 2 points");
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (!(axis[i] > axis[i - 1])) {
      fail(Errc::degenerate_axis, "axis " + std::to_string(dim) + " not strictly increasing");
    }
  }
}

}  // namespace detail

/// Multilinear interpolation on a rectilinear grid of any dimension.
///
/// `values` is row-major over the axes (last axis fastest). The 2^n corners
/// of the enclosing cell are combined with product weights, evaluated as
/// successive 1-D blends from the last axis to the first.
template <class T>
double multilinear(std::span<const std::vector<double>> axes, std::span<const T> values,
                   std::span<const double> query) {
  const std::size_t n = axes.size();
  if (n == 0 || query.size() != n) fail(Errc::dimension_mismatch, "query rank does not match axes");
  std::size_t expected = 1;
  for (std::size_t d = 0; d < n; ++d) {
    detail::check_axis(axes[d], d);
    expected *= axes[d].size();
  }
  if (values.size() != expected) fail(Errc::dimension_mismatch, "value count does not match axes");

  std::vector<std::size_t> lower(n);
  for (std::size_t d = 0; d < n; ++d) {
    const auto i = detail::locate(axes[d], query[d]);
    if (!i) fail(Errc::out_of_bounds, "dimension " + std::to_string(d));
    lower[d] = *i;
  }

  // corner c: bit (n-1-d) selects the upper node along axis d
  const std::size_t corners = std::size_t{1} << n;
  std::vector<double> buf(corners);
  for (std::size_t c = 0; c < corners; ++c) {
    std::size_t offset = 0;
    for (std::size_t d = 0; d < n; ++d) {
      const std::size_t bit = (c >> (n - 1 - d)) & 1U;
      offset = offset * axes[d].size() + lower[d] + bit;
    }
    buf[c] = static_cast<double>(values[offset]);
  }
  for (std::size_t d = n; d-- > 0;) {
    const std::size_t half = std::size_t{1} << d;
    const double x0 = axes[d][lower[d]];
    const double x1 = axes[d][lower[d] + 1];
    for (std::size_t c = 0; c < half; ++c) {
      buf[c] = detail::lerp(buf[2 * c], buf[2 * c + 1], x0, x1, query[d]);
    }
  }
  return buf[0];
}

/// Result of snapping one target onto the grid.
struct Snap {
  std::size_t lat_index = 0;
  std::size_t lon_index = 0;
  geo::GeoCoord rotated;
  double distance = 0.0;
};

/// KD-tree over the grid nodes as (lat, lon) pairs; payload = lat_i * NLON + lon_j.
inline spatial::KdTree<2> grid_tree(const io::GridBundle& bundle) {
  std::vector<std::array<double, 2>> nodes;
  nodes.reserve(bundle.cells_per_step());
  for (const double lat : bundle.lats) {
    for (const double lon : bundle.lons) nodes.push_back({lat, lon});
  }
  return spatial::KdTree<2>(std::move(nodes));
}

/// Rotates each target into the grid frame and snaps it to the nearest node.
inline std::vector<Snap> snap_targets(const io::GridBundle& bundle, const io::TargetSet& targets) {
  const auto tree = grid_tree(bundle);
  std::vector<Snap> out;
  out.reserve(targets.size());
  for (const auto& t : targets.points) {
    const auto rotated = geo::rotate_coordinates({t.lat_deg, t.lon_deg}, bundle.pole);
    const auto hit = tree.nearest({rotated.lat_deg, rotated.lon_deg});
    out.push_back({hit.index / bundle.lons.size(), hit.index % bundle.lons.size(), rotated, hit.distance});
  }
  return out;
}

/// Interpolates one variable to every target for every time step.
///
/// Bilinear on the (lat, lon) slice at the target's rotated coordinate;
/// falls back to the nearest node's value when the coordinate lies outside
/// the grid or a corner is not finite.
inline InterpolatedSeries interpolate_field(const io::GridBundle& bundle, std::string_view var,
                                            const io::TargetSet& targets) {
  const auto& data = bundle.variable(var);
  const std::size_t nt = bundle.steps();
  const std::size_t nlat = bundle.lats.size();
  const std::size_t nlon = bundle.lons.size();
  const std::size_t np = targets.size();
  if (data.size() != nt * nlat * nlon) fail(Errc::dimension_mismatch, "variable " + std::string(var));
  detail::check_axis(bundle.lats, 0);
  detail::check_axis(bundle.lons, 1);

  const auto snaps = snap_targets(bundle, targets);
  struct Cell {
    std::optional<std::size_t> i;
    std::optional<std::size_t> j;
  };
  std::vector<Cell> cells(np);
  for (std::size_t p = 0; p < np; ++p) {
    cells[p] = {detail::locate(bundle.lats, snaps[p].rotated.lat_deg),
                detail::locate(bundle.lons, snaps[p].rotated.lon_deg)};
  }

  InterpolatedSeries out;
  out.times = bundle.times;
  out.target_ids.reserve(np);
  for (const auto& t : targets.points) out.target_ids.push_back(t.id);
  out.values.assign(nt * np, 0.0);
  out.method_mask.assign(nt * np, Method::linear);

  parallel_for(nt, [&](std::size_t t_begin, std::size_t t_end) {
    for (std::size_t t = t_begin; t < t_end; ++t) {
      const float* slice = data.data() + t * nlat * nlon;
      for (std::size_t p = 0; p < np; ++p) {
        const auto& cell = cells[p];
        const auto& q = snaps[p].rotated;
        double value = 0.0;
        bool linear = false;
        if (cell.i && cell.j) {
          const std::size_t i = *cell.i;
          const std::size_t j = *cell.j;
          const double f00 = slice[i * nlon + j];
          const double f01 = slice[i * nlon + j + 1];
          const double f10 = slice[(i + 1) * nlon + j];
          const double f11 = slice[(i + 1) * nlon + j + 1];
          if (std::isfinite(f00) && std::isfinite(f01) && std::isfinite(f10) && std::isfinite(f11)) {
            const double r0 = detail::lerp(f00, f01, bundle.lons[j], bundle.lons[j + 1], q.lon_deg);
            const double r1 = detail::lerp(f10, f11, bundle.lons[j], bundle.lons[j + 1], q.lon_deg);
            value = detail::lerp(r0, r1, bundle.lats[i], bundle.lats[i + 1], q.lat_deg);
            linear = true;
          }
        }
        if (!linear) {
          value = slice[snaps[p].lat_index * nlon + snaps[p].lon_index];
          if (!std::isfinite(value)) {
            // nearest finite node by exhaustive search
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < nlat; ++i) {
              for (std::size_t j = 0; j < nlon; ++j) {
                const double v = slice[i * nlon + j];
                if (!std::isfinite(v)) continue;
                const double di = bundle.lats[i] - q.lat_deg;
                const double dj = bundle.lons[j] - q.lon_deg;
                const double d2 = di * di + dj * dj;
                if (d2 < best) {
                  best = d2;
                  value = v;
                }
              }
            }
          }
        }
        out.values[t * np + p] = value;
        out.method_mask[t * np + p] = linear ? Method::linear : Method::nearest;
      }
    }
  });
  for (const double v : out.values) {
    if (!std::isfinite(v)) fail(Errc::non_finite, "variable " + std::string(var) + " has no finite value in a step");
  }
  return out;
}

/// `time,<id1>,<id2>,...` with time in epoch-hours, one row per step.
inline void save_series(const InterpolatedSeries& s, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(Errc::io_failure, "cannot open " + path.string() + " for writing");
  os << "time";
  for (const auto& id : s.target_ids) os << ',' << id;
  os << '\n';
  for (std::size_t t = 0; t < s.steps(); ++t) {
    os << text::format_double(s.times[t]);
    for (std::size_t p = 0; p < s.targets(); ++p) os << ',' << text::format_double(s.at(t, p));
    os << '\n';
  }
  if (!os) fail(Errc::io_failure, "writing " + path.string());
}

/// Reads what save_series writes. The method mask is not stored and comes
/// back as all-linear.
inline InterpolatedSeries load_series(const std::filesystem::path& path) {
  auto is = io::detail::open_text(path);
  std::string line;
  if (!std::getline(is, line)) fail(Errc::parse_error, path.string() + ": empty file");
  auto header = text::split(text::trim(line));
  if (header.empty() || header[0] != "time") fail(Errc::parse_error, io::detail::line_ref(path, 1));
  InterpolatedSeries s;
  for (std::size_t k = 1; k < header.size(); ++k) s.target_ids.emplace_back(header[k]);
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(text::trim(line));
    if (fields.size() != header.size()) fail(Errc::parse_error, io::detail::line_ref(path, line_no));
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const auto v = text::parse_double(fields[k]);
      if (!v || !std::isfinite(*v)) fail(Errc::parse_error, io::detail::line_ref(path, line_no));
      (k == 0 ? s.times.emplace_back(*v) : s.values.emplace_back(*v));
    }
  }
  s.method_mask.assign(s.values.size(), Method::linear);
  return s;
}

}  // namespace wgf::interp
