#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "scratch.hpp"
#include "wgf/error.hpp"
#include "wgf/grid_io.hpp"
#include "wgf/random.hpp"
#include "wgf/synthetic.hpp"

using namespace wgf;

namespace {

template <class Fn>
Errc code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::io_failure;
}

io::GridBundle small_bundle() {
  io::GridBundle b;
  b.pole = {39.25, -162.0};
  b.times = {438288.0, 438291.0};
  b.lats = {-1.0, 0.0, 1.5};
  b.lons = {10.0, 10.5, 11.0, 12.0};
  std::vector<float> v(2 * 3 * 4);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.25f * static_cast<float>(i) - 1.0f;
  b.variables.emplace("wind_speed", std::move(v));
  return b;
}

// Days in each month of a year, counted from the calendar rules.
int days_in_year(int y) {
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  const int month_days[] = {31, leap ? 29 : 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int n = 0;
  for (int d : month_days) n += d;
  return n;
}

}  // namespace

TEST(GridBundle, RoundTrip) {
  Scratch s("grid");
  const auto b = small_bundle();
  io::save_grid_bundle(b, s / "b.cgrd");
  const auto back = io::load_grid_bundle(s / "b.cgrd");
  EXPECT_EQ(back, b);
  EXPECT_EQ(std::filesystem::file_size(s / "b.cgrd"),
            4u + 4 + 16 + 24 + 8 * (2 + 3 + 4) + 4 + (4 + 10) + 4 * 24);
}

TEST(GridBundle, BadMagic) {
  Scratch s("grid");
  const auto p = s.write("x.cgrd", std::string("XXXX") + std::string(100, '\0'));
  EXPECT_EQ(code_of([&] { (void)io::load_grid_bundle(p); }), Errc::bad_magic);
  const auto tiny = s.write("y.cgrd", "CG");
  EXPECT_EQ(code_of([&] { (void)io::load_grid_bundle(tiny); }), Errc::bad_magic);
}

TEST(GridBundle, MissingFileIsIoFailure) {
  EXPECT_EQ(code_of([] { (void)io::load_grid_bundle("/nonexistent/none.cgrd"); }), Errc::io_failure);
}

TEST(GridBundle, EmptyVariablesFileSize) {
  Scratch s("grid");
  io::GridBundle b;
  b.times = {0.0};
  b.lats = {1.0};
  b.lons = {2.0};
  io::save_grid_bundle(b, s / "e.cgrd");
  // magic, version, pole, three sizes, three one-element axes, var_count
  EXPECT_EQ(std::filesystem::file_size(s / "e.cgrd"), 4u + 4 + 2 * 8 + 3 * 8 + 3 * 8 + 4);
  const auto bytes = slurp(s / "e.cgrd");
  std::uint32_t count = 99;
  std::memcpy(&count, bytes.data() + bytes.size() - 4, 4);
  EXPECT_EQ(count, 0u);
  EXPECT_EQ(io::load_grid_bundle(s / "e.cgrd"), b);
}

TEST(GridBundle, LittleEndianLayout) {
  Scratch s("grid");
  const auto b = small_bundle();
  io::save_grid_bundle(b, s / "b.cgrd");
  const auto bytes = slurp(s / "b.cgrd");
  ASSERT_EQ(bytes.substr(0, 4), "CGRD");
  auto u8 = [&](std::size_t i) { return static_cast<unsigned>(static_cast<unsigned char>(bytes[i])); };
  EXPECT_EQ(u8(4), 1u);
  EXPECT_EQ(u8(5) | u8(6) | u8(7), 0u);
  // T = 2 at offset 24
  EXPECT_EQ(u8(24), 2u);
  EXPECT_EQ(u8(32), 3u);
  EXPECT_EQ(u8(40), 4u);
  std::uint64_t bits = 0;
  for (int k = 7; k >= 0; --k) bits = (bits << 8) | u8(48 + static_cast<std::size_t>(k));
  double t0 = 0.0;
  std::memcpy(&t0, &bits, 8);
  EXPECT_EQ(t0, 438288.0);
}

TEST(GridBundle, TruncatedOrPaddedPayload) {
  Scratch s("grid");
  io::save_grid_bundle(small_bundle(), s / "b.cgrd");
  auto bytes = slurp(s / "b.cgrd");
  const auto cut = s.write("cut.cgrd", bytes.substr(0, bytes.size() - 3));
  EXPECT_EQ(code_of([&] { (void)io::load_grid_bundle(cut); }), Errc::dimension_mismatch);
  const auto pad = s.write("pad.cgrd", bytes + "xy");
  EXPECT_EQ(code_of([&] { (void)io::load_grid_bundle(pad); }), Errc::dimension_mismatch);
  // absurd declared size must fail before allocating
  std::string huge = bytes;
  huge[24 + 7] = '\x7f';
  const auto h = s.write("huge.cgrd", huge);
  EXPECT_EQ(code_of([&] { (void)io::load_grid_bundle(h); }), Errc::dimension_mismatch);
}

TEST(GridBundle, UnsortedAxis) {
  Scratch s("grid");
  io::save_grid_bundle(small_bundle(), s / "b.cgrd");
  auto bytes = slurp(s / "b.cgrd");
  // overwrite lats[1] (after header 48 bytes and 2 times) with a value below lats[0]
  const double bad = -5.0;
  std::memcpy(bytes.data() + 48 + 16 + 8, &bad, 8);
  const auto p = s.write("u.cgrd", bytes);
  EXPECT_EQ(code_of([&] { (void)io::load_grid_bundle(p); }), Errc::non_monotone_axis);

  auto b = small_bundle();
  b.times = {1.0, 1.0};
  EXPECT_EQ(code_of([&] { io::save_grid_bundle(b, s / "t.cgrd"); }), Errc::non_monotone_axis);
}

TEST(GridBundle, UnsupportedVersion) {
  Scratch s("grid");
  io::save_grid_bundle(small_bundle(), s / "b.cgrd");
  auto bytes = slurp(s / "b.cgrd");
  bytes[4] = 2;
  const auto p = s.write("v.cgrd", bytes);
  EXPECT_EQ(code_of([&] { (void)io::load_grid_bundle(p); }), Errc::unsupported_version);
}

TEST(GridBundle, WrongPayloadLengthInMemory) {
  auto b = small_bundle();
  b.variables["wind_speed"].pop_back();
  EXPECT_EQ(code_of([&] { b.validate(); }), Errc::dimension_mismatch);
}

// Recomputes the documented generator formula with its own loops.
TEST(GridBundle, SyntheticGeneratorRoundTrip) {
  Scratch s("grid");
  const auto spec = synth::GridSpec::small(8, 3, 3);
  io::save_grid_bundle(synth::synthetic_bundle(spec, 7), s / "g.cgrd");
  const auto b = io::load_grid_bundle(s / "g.cgrd");

  const double two_pi = 2 * std::numbers::pi;
  Rng rng(7);
  double ph[5];
  for (double& p : ph) p = rng.uniform(0.0, two_pi);
  std::vector<float> wind, pressure;
  for (int t = 0; t < 8; ++t) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double h = 3.0 * t;
        wind.push_back(static_cast<float>(7 + 3 * std::sin(0.35 * i + ph[0]) * std::cos(0.27 * j + ph[1]) +
                                          2 * std::sin(two_pi * h / 24 + ph[2]) + 0.3 * rng.uniform(-1.0, 1.0)));
      }
    }
  }
  for (int t = 0; t < 8; ++t) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double h = 3.0 * t;
        pressure.push_back(static_cast<float>(101325 + 800 * std::cos(0.21 * i + ph[3]) +
                                              400 * std::sin(two_pi * h / 120 + 0.05 * j + ph[4]) +
                                              50 * rng.uniform(-1.0, 1.0)));
      }
    }
  }
  ASSERT_EQ(b.steps(), 8u);
  ASSERT_EQ(b.lats.size(), 3u);
  EXPECT_EQ(b.variable("wind_speed"), wind);
  EXPECT_EQ(b.variable("pressure"), pressure);
  EXPECT_EQ(b.times.front(), 438288.0);
}

TEST(GridBundle, UnknownVariable) {
  EXPECT_EQ(code_of([] { (void)small_bundle().variable("temperature"); }), Errc::unknown_variable);
}

TEST(GridBundle, FuzzRoundTrip) {
  Scratch s("grid");
  Rng rng(44);
  for (int trial = 0; trial < 30; ++trial) {
    io::GridBundle b;
    b.pole = {rng.uniform(-90, 90), rng.uniform(-179, 180)};
    const auto nt = 1 + rng.below(4), ny = 1 + rng.below(5), nx = 1 + rng.below(5);
    double acc = rng.uniform(-10, 10);
    for (std::uint64_t k = 0; k < nt; ++k) b.times.push_back(acc += rng.uniform(0.1, 5));
    for (std::uint64_t k = 0; k < ny; ++k) b.lats.push_back(acc += rng.uniform(0.1, 5));
    for (std::uint64_t k = 0; k < nx; ++k) b.lons.push_back(acc += rng.uniform(0.1, 5));
    for (std::uint64_t v = 0; v < rng.below(3); ++v) {
      std::vector<float> data(nt * ny * nx);
      for (auto& d : data) d = static_cast<float>(rng.normal());
      b.variables.emplace("var" + std::to_string(v), std::move(data));
    }
    io::save_grid_bundle(b, s / "f.cgrd");
    ASSERT_EQ(io::load_grid_bundle(s / "f.cgrd"), b);
  }
}

// One f32 variable at the regional grid scale: payload section 2928*157*182*4 bytes.
TEST(GridBundle, RegionalScalePayloadSize) {
  Scratch s("grid");
  io::GridBundle b;
  for (int t = 0; t < 2928; ++t) b.times.push_back(438288.0 + 3.0 * t);
  for (int i = 0; i < 157; ++i) b.lats.push_back(-8.03 + 0.11 * i);
  for (int j = 0; j < 182; ++j) b.lons.push_back(-167.05 + 0.11 * j);
  b.variables.emplace("wind_speed", std::vector<float>(std::size_t{2928} * 157 * 182, 5.0f));
  io::save_grid_bundle(b, s / "big.cgrd");
  const std::uintmax_t header = 4 + 4 + 16 + 24 + 8 * (2928 + 157 + 182) + 4 + 4 + 10;
  const std::uintmax_t payload = std::uintmax_t{2928} * 157 * 182 * 4;
  EXPECT_EQ(payload, 334658688u);
  EXPECT_EQ(std::filesystem::file_size(s / "big.cgrd") - header, payload);
}

TEST(Time, EpochHours) {
  // 1970..2019: 50 years, 12 of them leap
  EXPECT_EQ(io::epoch_hours(2020, 1, 1), (50 * 365 + 12) * 24.0);
  EXPECT_EQ(io::parse_iso8601("2020-01-01T00:00:00Z"), 438288.0);
  EXPECT_EQ(io::parse_iso8601("2020-03-01T06:30:00Z"), 438288.0 + (31 + 29) * 24 + 6.5);
  EXPECT_FALSE(io::parse_iso8601("2020-02-30T00:00:00Z"));
  EXPECT_FALSE(io::parse_iso8601("2020-01-01"));
  EXPECT_FALSE(io::parse_iso8601("2020-01-01T24:00:00Z"));
  EXPECT_EQ(io::format_iso8601(438288.0 + 1.5), "2020-01-01T01:30:00Z");
  EXPECT_EQ(io::format_iso8601(-1.0), "1969-12-31T23:00:00Z");
}

TEST(Targets, ParseAndNormalize) {
  Scratch s("targets");
  const auto p = s.write("t.csv", "id,lat,lon\nwf1,49.77,10.16\na,0,360\nb,-10,-180\n");
  const auto t = io::load_targets(p);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t.points[0], (io::TargetPoint{"wf1", 49.77, 10.16}));
  EXPECT_EQ(t.points[1], (io::TargetPoint{"a", 0.0, 0.0}));
  EXPECT_EQ(t.points[2].lon_deg, 180.0);
}

TEST(Targets, Errors) {
  Scratch s("targets");
  EXPECT_EQ(code_of([&] { (void)io::load_targets(s.write("a.csv", "id,lat,lon\nx,1,2\nx,3,4\n")); }),
            Errc::duplicate_id);
  EXPECT_EQ(code_of([&] { (void)io::load_targets(s.write("b.csv", "id,lat,lon\nx,91,2\n")); }),
            Errc::out_of_range_latitude);
  EXPECT_EQ(code_of([&] { (void)io::load_targets(s.write("c.csv", "id,lat,lon\nx,abc,2\n")); }),
            Errc::parse_error);
  EXPECT_EQ(code_of([&] { (void)io::load_targets(s.write("d.csv", "name,lat,lon\n")); }), Errc::parse_error);
  EXPECT_EQ(code_of([&] { (void)io::load_targets(s.write("e.csv", "id,lat,lon\nx,1\n")); }), Errc::parse_error);
  try {
    (void)io::load_targets(s.write("f.csv", "id,lat,lon\nx,1,2\ny,1,nan-ish\n"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Targets, RoundTripOfSyntheticSet) {
  Scratch s("targets");
  const auto t = synth::synthetic_targets(232, 5);
  io::save_targets(t, s / "t.csv");
  const auto back = io::load_targets(s / "t.csv");
  EXPECT_EQ(back.size(), 232u);
  EXPECT_EQ(back, t);
}

TEST(PowerSeries, ParseRow) {
  Scratch s("power");
  const auto p = io::load_power_series(
      s.write("p.csv", "timestamp,plant_id,power_mw\n2020-01-01T00:00:00Z,wf1,1.5\n"));
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.entries[0], (io::PowerEntry{io::epoch_hours(2020, 1, 1), "wf1", 1.5}));
}

TEST(PowerSeries, Errors) {
  Scratch s("power");
  const std::string h = "timestamp,plant_id,power_mw\n";
  EXPECT_EQ(code_of([&] { (void)io::load_power_series(s.write("a.csv", h + "2020-01-01T00:00:00Z,wf1,-1\n")); }),
            Errc::negative_power);
  EXPECT_EQ(code_of([&] {
              (void)io::load_power_series(
                  s.write("b.csv", h + "2020-01-01T01:00:00Z,wf1,1\n2020-01-01T00:00:00Z,wf1,1\n"));
            }),
            Errc::non_monotone_timestamps);
  EXPECT_EQ(code_of([&] { (void)io::load_power_series(s.write("c.csv", h + "yesterday,wf1,1\n")); }),
            Errc::parse_error);
  // interleaved plants are each monotone
  EXPECT_EQ(io::load_power_series(s.write("d.csv", h +
                                                       "2020-01-01T00:00:00Z,a,1\n2020-01-01T00:00:00Z,b,1\n"
                                                       "2020-01-01T01:00:00Z,a,1\n"))
                .size(),
            3u);
}

TEST(PowerSeries, LeapYearHourly) {
  Scratch s("power");
  const auto sites = synth::synthetic_targets(1, 2);
  const std::size_t hours = static_cast<std::size_t>(days_in_year(2020)) * 24;
  const auto series = synth::synthetic_power(sites, io::epoch_hours(2020, 1, 1), hours, 3);
  io::save_power_series(series, s / "p.csv");
  const auto back = io::load_power_series(s / "p.csv");
  EXPECT_EQ(back.size(), 8784u);
  EXPECT_EQ(back.entries.back().timestamp, io::epoch_hours(2020, 12, 31, 23));
  EXPECT_EQ(back, series);
}
