#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wgf/error.hpp"
#include "wgf/geo.hpp"
#include "wgf/text.hpp"

namespace wgf::io {

// ---------------------------------------------------------------------------
// Domain types

/// Gridded fields on a time x lat x lon grid in the rotated frame.
///
/// Payloads are [t][lat][lon] row-major, 32-bit. Variables are kept in name
/// order so that serialization is canonical.
struct GridBundle {
  geo::PoleSpec pole;
  std::vector<double> times;  // epoch-hours
  std::vector<double> lats;   // degrees, strictly increasing
  std::vector<double> lons;   // degrees, strictly increasing
  std::map<std::string, std::vector<float>, std::less<>> variables;

  [[nodiscard]] std::size_t steps() const { return times.size(); }
  [[nodiscard]] std::size_t cells_per_step() const { return lats.size() * lons.size(); }
  [[nodiscard]] std::size_t cell_count() const { return steps() * cells_per_step(); }

  [[nodiscard]] const std::vector<float>& variable(std::string_view name) const {
    const auto it = variables.find(name);
    if (it == variables.end()) fail(Errc::unknown_variable, std::string(name));
    return it->second;
  }

  /// Throws on the first violated invariant.
  void validate() const;

  friend bool operator==(const GridBundle&, const GridBundle&) = default;
};

struct TargetPoint {
  std::string id;
  double lat_deg = 0.0;
  double lon_deg = 0.0;

  friend bool operator==(const TargetPoint&, const TargetPoint&) = default;
};

struct TargetSet {
  std::vector<TargetPoint> points;

  [[nodiscard]] std::size_t size() const { return points.size(); }
  friend bool operator==(const TargetSet&, const TargetSet&) = default;
};

struct PowerEntry {
  double timestamp = 0.0;  // epoch-hours
  std::string plant_id;
  double power_mw = 0.0;

  friend bool operator==(const PowerEntry&, const PowerEntry&) = default;
};

struct PowerSeries {
  std::vector<PowerEntry> entries;

  [[nodiscard]] std::size_t size() const { return entries.size(); }

  /// Entries grouped by plant, plants in order of first appearance.
  [[nodiscard]] std::vector<std::pair<std::string, std::vector<PowerEntry>>> by_plant() const {
    std::vector<std::pair<std::string, std::vector<PowerEntry>>> out;
    std::unordered_map<std::string, std::size_t> slot;
    for (const auto& e : entries) {
      auto [it, inserted] = slot.try_emplace(e.plant_id, out.size());
      if (inserted) out.emplace_back(e.plant_id, std::vector<PowerEntry>{});
      out[it->second].second.push_back(e);
    }
    return out;
  }

  /// Throws NegativePower / NonFinite / NonMonotoneTimestamps.
  void validate() const {
    std::unordered_map<std::string_view, double> last;
    for (const auto& e : entries) {
      if (!std::isfinite(e.power_mw) || !std::isfinite(e.timestamp)) {
        fail(Errc::non_finite, "power entry for plant " + e.plant_id);
      }
      if (e.power_mw < 0.0) fail(Errc::negative_power, "plant " + e.plant_id);
      auto [it, inserted] = last.try_emplace(e.plant_id, e.timestamp);
      if (!inserted) {
        if (!(e.timestamp > it->second)) fail(Errc::non_monotone_timestamps, e.plant_id);
        it->second = e.timestamp;
      }
    }
  }

  friend bool operator==(const PowerSeries&, const PowerSeries&) = default;
};

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline void require_increasing(std::span<const double> axis, const char* name) {
  for (std::size_t i = 0; i < axis.size(); ++i) {
    if (!std::isfinite(axis[i])) fail(Errc::non_finite, std::string(name) + " axis");
    if (i > 0 && !(axis[i] > axis[i - 1])) {
      fail(Errc::non_monotone_axis, std::string(name) + " at index " + std::to_string(i));
    }
  }
}

}  // namespace detail

inline void GridBundle::validate() const {
  detail::require_increasing(times, "time");
  detail::require_increasing(lats, "lat");
  detail::require_increasing(lons, "lon");
  for (const auto& [name, data] : variables) {
    if (data.size() != cell_count()) {
      fail(Errc::dimension_mismatch, "variable " + name + " has " + std::to_string(data.size()) +
                                         " values, expected " + std::to_string(cell_count()));
    }
    for (const float v : data) {
      if (!std::isfinite(v)) fail(Errc::non_finite, "variable " + name);
    }
  }
}

// ---------------------------------------------------------------------------
// Time

/// Hours since 1970-01-01T00:00:00Z.
inline double epoch_hours(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                          double second = 0.0) {
  using namespace std::chrono;
  const sys_days d{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
  return static_cast<double>(d.time_since_epoch().count()) * 24.0 + hour + minute / 60.0 +
         second / 3600.0;
}

/// Parses `YYYY-MM-DDTHH:MM:SS[Z]`.
inline std::optional<double> parse_iso8601(std::string_view s) {
  s = text::trim(s);
  if (!s.empty() && (s.back() == 'Z' || s.back() == 'z')) s.remove_suffix(1);
  if (s.size() != 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':' || s[16] != ':') {
    return std::nullopt;
  }
  const auto y = text::parse_int<int>(s.substr(0, 4));
  const auto mo = text::parse_int<unsigned>(s.substr(5, 2));
  const auto d = text::parse_int<unsigned>(s.substr(8, 2));
  const auto h = text::parse_int<int>(s.substr(11, 2));
  const auto mi = text::parse_int<int>(s.substr(14, 2));
  const auto se = text::parse_int<int>(s.substr(17, 2));
  if (!y || !mo || !d || !h || !mi || !se) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{*mo},
                                        std::chrono::day{*d}};
  if (!ymd.ok() || *h > 23 || *mi > 59 || *se > 60 || *h < 0 || *mi < 0 || *se < 0) {
    return std::nullopt;
  }
  return epoch_hours(*y, *mo, *d, *h, *mi, *se);
}

/// Formats whole-second epoch-hours as `YYYY-MM-DDTHH:MM:SSZ`.
inline std::string format_iso8601(double hours) {
  using namespace std::chrono;
  const auto total_seconds = static_cast<long long>(std::llround(hours * 3600.0));
  long long days = total_seconds / 86400;
  long long rem = total_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), rem / 3600,
                (rem / 60) % 60, rem % 60);
  return buf;
}

// ---------------------------------------------------------------------------
// Grid bundle binary format
//
// little-endian: "CGRD" | u32 version=1 | f64 pole_lat | f64 pole_lon |
// u64 T | u64 NLAT | u64 NLON | f64 times[T] | f64 lats[NLAT] | f64 lons[NLON] |
// u32 var_count | { u32 name_len | name bytes | f32 data[T*NLAT*NLON] }*

inline constexpr char grid_magic[4] = {'C', 'G', 'R', 'D'};
inline constexpr std::uint32_t grid_version = 1;

namespace detail {

template <class T>
T byteswap_value(T v) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

class LeWriter {
 public:
  explicit LeWriter(std::ostream& os) : os_(os) {}

  template <class T>
  void put(T v) {
    if constexpr (std::endian::native != std::endian::little) v = byteswap_value(v);
    os_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }

  template <class T>
  void put_array(std::span<const T> values) {
    if constexpr (std::endian::native == std::endian::little) {
      os_.write(reinterpret_cast<const char*>(values.data()),
                static_cast<std::streamsize>(values.size_bytes()));
    } else {
      for (const T v : values) put(v);
    }
  }

  void put_bytes(std::string_view s) { os_.write(s.data(), static_cast<std::streamsize>(s.size())); }

 private:
  std::ostream& os_;
};

class LeReader {
 public:
  LeReader(std::istream& is, std::uint64_t size) : is_(is), remaining_(size) {}

  [[nodiscard]] std::uint64_t remaining() const { return remaining_; }

  void require(std::uint64_t n, const char* what) {
    if (n > remaining_) fail(Errc::dimension_mismatch, std::string("truncated ") + what);
  }

  template <class T>
  T get(const char* what) {
    require(sizeof(T), what);
    T v{};
    is_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is_) fail(Errc::io_failure, std::string("reading ") + what);
    remaining_ -= sizeof(T);
    if constexpr (std::endian::native != std::endian::little) v = byteswap_value(v);
    return v;
  }

  template <class T>
  std::vector<T> get_array(std::uint64_t count, const char* what) {
    if (count > remaining_ / sizeof(T)) fail(Errc::dimension_mismatch, std::string("truncated ") + what);
    std::vector<T> out(count);
    is_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(count * sizeof(T)));
    if (!is_) fail(Errc::io_failure, std::string("reading ") + what);
    remaining_ -= count * sizeof(T);
    if constexpr (std::endian::native != std::endian::little) {
      for (auto& v : out) v = byteswap_value(v);
    }
    return out;
  }

  std::string get_bytes(std::uint64_t n, const char* what) {
    require(n, what);
    std::string s(n, '\0');
    is_.read(s.data(), static_cast<std::streamsize>(n));
    if (!is_) fail(Errc::io_failure, std::string("reading ") + what);
    remaining_ -= n;
    return s;
  }

 private:
  std::istream& is_;
  std::uint64_t remaining_;
};

}  // namespace detail

inline void save_grid_bundle(const GridBundle& bundle, const std::filesystem::path& path) {
  bundle.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(Errc::io_failure, "cannot open " + path.string() + " for writing");
  detail::LeWriter w(os);
  w.put_bytes(std::string_view(grid_magic, 4));
  w.put<std::uint32_t>(grid_version);
  w.put<double>(bundle.pole.pole_lat_deg);
  w.put<double>(bundle.pole.pole_lon_deg);
  w.put<std::uint64_t>(bundle.times.size());
  w.put<std::uint64_t>(bundle.lats.size());
  w.put<std::uint64_t>(bundle.lons.size());
  w.put_array<double>(bundle.times);
  w.put_array<double>(bundle.lats);
  w.put_array<double>(bundle.lons);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(bundle.variables.size()));
  for (const auto& [name, data] : bundle.variables) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.put_bytes(name);
    w.put_array<float>(data);
  }
  os.flush();
  if (!os) fail(Errc::io_failure, "writing " + path.string());
}

inline GridBundle load_grid_bundle(const std::filesystem::path& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) fail(Errc::io_failure, "cannot stat " + path.string());
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::io_failure, "cannot open " + path.string());
  detail::LeReader r(is, size);

  if (size < 4) fail(Errc::bad_magic, path.string());
  const std::string magic = r.get_bytes(4, "magic");
  if (magic != std::string_view(grid_magic, 4)) fail(Errc::bad_magic, path.string());
  const auto version = r.get<std::uint32_t>("version");
  if (version != grid_version) {
    fail(Errc::unsupported_version, "grid bundle version " + std::to_string(version));
  }

  GridBundle b;
  b.pole.pole_lat_deg = r.get<double>("pole_lat");
  b.pole.pole_lon_deg = r.get<double>("pole_lon");
  const auto nt = r.get<std::uint64_t>("T");
  const auto nlat = r.get<std::uint64_t>("NLAT");
  const auto nlon = r.get<std::uint64_t>("NLON");
  b.times = r.get_array<double>(nt, "times");
  b.lats = r.get_array<double>(nlat, "lats");
  b.lons = r.get_array<double>(nlon, "lons");
  detail::require_increasing(b.times, "time");
  detail::require_increasing(b.lats, "lat");
  detail::require_increasing(b.lons, "lon");

  const auto var_count = r.get<std::uint32_t>("var_count");
  std::uint64_t cells = 0;
  if (__builtin_mul_overflow(nt, nlat, &cells) || __builtin_mul_overflow(cells, nlon, &cells)) {
    fail(Errc::dimension_mismatch, "grid dimensions overflow");
  }
  for (std::uint32_t v = 0; v < var_count; ++v) {
    const auto name_len = r.get<std::uint32_t>("name_len");
    std::string name = r.get_bytes(name_len, "variable name");
    auto data = r.get_array<float>(cells, "variable payload");
    if (!b.variables.emplace(std::move(name), std::move(data)).second) {
      fail(Errc::dimension_mismatch, "duplicate variable name");
    }
  }
  if (r.remaining() != 0) {
    fail(Errc::dimension_mismatch, std::to_string(r.remaining()) + " trailing bytes");
  }
  b.validate();
  return b;
}

// ---------------------------------------------------------------------------
// CSV files

namespace detail {

inline std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(Errc::io_failure, "cannot open " + path.string());
  return is;
}

inline void expect_header(std::istream& is, std::string_view header, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(is, line) || text::trim(line) != header) {
    fail(Errc::parse_error, path.string() + " line 1: expected header '" + std::string(header) + "'");
  }
}

inline std::string line_ref(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + " line " + std::to_string(line_no);
}

}  // namespace detail

/// Reads `id,lat,lon`; longitudes are normalized to (-180, 180].
inline TargetSet load_targets(const std::filesystem::path& path) {
  auto is = detail::open_text(path);
  detail::expect_header(is, "id,lat,lon", path);
  TargetSet out;
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line);
    if (fields.size() != 3 || text::trim(fields[0]).empty()) fail(Errc::parse_error, detail::line_ref(path, line_no));
    const auto lat = text::parse_double(fields[1]);
    const auto lon = text::parse_double(fields[2]);
    if (!lat || !lon || !std::isfinite(*lat) || !std::isfinite(*lon)) {
      fail(Errc::parse_error, detail::line_ref(path, line_no));
    }
    if (*lat < -90.0 || *lat > 90.0) fail(Errc::out_of_range_latitude, detail::line_ref(path, line_no));
    std::string id(text::trim(fields[0]));
    if (!seen.insert(id).second) fail(Errc::duplicate_id, id);
    out.points.push_back({std::move(id), *lat, geo::normalize_longitude(*lon)});
  }
  return out;
}

inline void save_targets(const TargetSet& targets, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(Errc::io_failure, "cannot open " + path.string() + " for writing");
  os << "id,lat,lon\n";
  for (const auto& p : targets.points) {
    os << p.id << ',' << text::format_double(p.lat_deg) << ',' << text::format_double(p.lon_deg) << '\n';
  }
  if (!os) fail(Errc::io_failure, "writing " + path.string());
}

/// Reads `timestamp,plant_id,power_mw` with ISO-8601 UTC timestamps.
inline PowerSeries load_power_series(const std::filesystem::path& path) {
  auto is = detail::open_text(path);
  detail::expect_header(is, "timestamp,plant_id,power_mw", path);
  PowerSeries out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line);
    if (fields.size() != 3 || text::trim(fields[1]).empty()) fail(Errc::parse_error, detail::line_ref(path, line_no));
    const auto ts = parse_iso8601(fields[0]);
    const auto mw = text::parse_double(fields[2]);
    if (!ts || !mw) fail(Errc::parse_error, detail::line_ref(path, line_no));
    if (*mw < 0.0) fail(Errc::negative_power, detail::line_ref(path, line_no));
    out.entries.push_back({*ts, std::string(text::trim(fields[1])), *mw});
  }
  out.validate();
  return out;
}

inline void save_power_series(const PowerSeries& series, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(Errc::io_failure, "cannot open " + path.string() + " for writing");
  os << "timestamp,plant_id,power_mw\n";
  for (const auto& e : series.entries) {
    os << format_iso8601(e.timestamp) << ',' << e.plant_id << ',' << text::format_double(e.power_mw) << '\n';
  }
  if (!os) fail(Errc::io_failure, "writing " + path.string());
}

}  // namespace wgf::io
