#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "wgf/error.hpp"

namespace wgf::geo {

inline constexpr double deg_to_rad = std::numbers::pi / 180.0;
inline constexpr double rad_to_deg = 180.0 / std::numbers::pi;

/// Geographic (or rotated) coordinate in degrees.
struct GeoCoord {
  double lat_deg = 0.0;
  double lon_deg = 0.0;

  friend bool operator==(const GeoCoord&, const GeoCoord&) = default;
};

/// Location of the rotated north pole in geographic degrees.
struct PoleSpec {
  double pole_lat_deg = 90.0;
  double pole_lon_deg = 0.0;

  friend bool operator==(const PoleSpec&, const PoleSpec&) = default;
};

/// Maps any finite longitude onto (-180, 180], congruent mod 360.
inline double normalize_longitude(double deg) {
  if (!std::isfinite(deg)) fail(Errc::non_finite, "longitude " + std::to_string(deg));
  double r = std::fmod(deg, 360.0);  // exact, r in (-360, 360)
  // Both corrections are exact (Sterbenz), so the result never leaves the range.
  if (r <= -180.0) {
    r += 360.0;
  } else if (r > 180.0) {
    r -= 360.0;
  }
  return r;
}

/// Rotated-pole transform of a geographic point.
///
/// The rotated latitude is asin(A) with
///   A = sin(lat) sin(pole_lat) + cos(lat) cos(pole_lat) cos(dlon).
/// It is evaluated as atan2(A, hypot(x, y)) using the same x, y that feed the
/// longitude: x^2 + y^2 = 1 - A^2 analytically, and the atan2 form stays
/// accurate next to the pole where asin loses half its digits.
/// The rotated longitude is pole_lon + atan2(y, x), normalized.
inline GeoCoord rotate_coordinates(GeoCoord p, PoleSpec pole) {
  const double lat = p.lat_deg * deg_to_rad;
  const double lon = p.lon_deg * deg_to_rad;
  const double plat = pole.pole_lat_deg * deg_to_rad;
  const double plon = pole.pole_lon_deg * deg_to_rad;
  const double dlon = lon - plon;

  const double sin_lat = std::sin(lat);
  const double cos_lat = std::cos(lat);
  const double sin_plat = std::sin(plat);
  const double cos_plat = std::cos(plat);
  const double cos_dlon = std::cos(dlon);

  const double a = sin_lat * sin_plat + cos_lat * cos_plat * cos_dlon;
  const double y = cos_lat * std::sin(dlon);
  const double x = sin_lat * cos_plat - cos_lat * sin_plat * cos_dlon;

  const double rot_lat = std::atan2(a, std::hypot(x, y)) * rad_to_deg;
  const double rot_lon = pole.pole_lon_deg + std::atan2(y, x) * rad_to_deg;
  return {rot_lat, normalize_longitude(rot_lon)};
}

}  // namespace wgf::geo
