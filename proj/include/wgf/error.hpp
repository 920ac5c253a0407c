#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wgf {

/// Every failure the toolkit reports carries one of these codes.
enum class Errc {
  // grid-io
  bad_magic,
  unsupported_version,
  dimension_mismatch,
  non_monotone_axis,
  io_failure,
  parse_error,
  duplicate_id,
  out_of_range_latitude,
  negative_power,
  non_monotone_timestamps,
  // geo / spatial-index / interpolate
  non_finite,
  empty_input,
  non_finite_coordinate,
  non_finite_query,
  out_of_bounds,
  degenerate_axis,
  unknown_variable,
  // dataset
  empty_series,
  irregular_cadence,
  time_axis_mismatch,
  missing_target,
  frac_out_of_range,
  stream_too_short,
  // neural
  bad_descriptor,
  shape_mismatch,
  odd_dimension,
  length_mismatch,
  bad_range,
  non_finite_loss,
  // cli
  unknown_subcommand,
  missing_config_key,
  invalid_config,
};

constexpr std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::bad_magic: return "BadMagic";
    case Errc::unsupported_version: return "UnsupportedVersion";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::non_monotone_axis: return "NonMonotoneAxis";
    case Errc::io_failure: return "IoFailure";
    case Errc::parse_error: return "ParseError";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::out_of_range_latitude: return "OutOfRangeLatitude";
    case Errc::negative_power: return "NegativePower";
    case Errc::non_monotone_timestamps: return "NonMonotoneTimestamps";
    case Errc::non_finite: return "NonFinite";
    case Errc::empty_input: return "EmptyInput";
    case Errc::non_finite_coordinate: return "NonFiniteCoordinate";
    case Errc::non_finite_query: return "NonFiniteQuery";
    case Errc::out_of_bounds: return "OutOfBounds";
    case Errc::degenerate_axis: return "DegenerateAxis";
    case Errc::unknown_variable: return "UnknownVariable";
    case Errc::empty_series: return "EmptySeries";
    case Errc::irregular_cadence: return "IrregularCadence";
    case Errc::time_axis_mismatch: return "TimeAxisMismatch";
    case Errc::missing_target: return "MissingTarget";
    case Errc::frac_out_of_range: return "FracOutOfRange";
    case Errc::stream_too_short: return "StreamTooShort";
    case Errc::bad_descriptor: return "BadDescriptor";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::odd_dimension: return "OddDimension";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::bad_range: return "BadRange";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::unknown_subcommand: return "UnknownSubcommand";
    case Errc::missing_config_key: return "MissingConfigKey";
    case Errc::invalid_config: return "InvalidConfig";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& detail) { throw Error(code, detail); }

}  // namespace wgf
