// Writes the bundled synthetic fixture: an 8-step grid, a handful of sites,
// hourly power that is an affine function of the interpolated features, and
// a config that trains a linear model on it.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "wgf/grid_io.hpp"
#include "wgf/interpolate.hpp"
#include "wgf/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthetic fixture generator"};
  std::string out = "data/fixture";
  std::uint64_t seed = 7;
  std::size_t steps = 8;
  std::size_t sites = 6;
  app.add_option("--out", out)->capture_default_str();
  app.add_option("--seed", seed)->capture_default_str();
  app.add_option("--steps", steps)->capture_default_str();
  app.add_option("--sites", sites)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    namespace fs = std::filesystem;
    fs::create_directories(out);

    wgf::synth::GridSpec g = wgf::synth::GridSpec::regional(steps);
    g.lat0 = -4.5;
    g.dlat = 0.25;
    g.nlat = 40;
    g.lon0 = -161.5;
    g.dlon = 0.25;
    g.nlon = 36;
    const auto bundle = wgf::synth::synthetic_bundle(g, seed);
    const auto targets = wgf::synth::synthetic_targets(sites, seed + 1);
    const auto wind = wgf::interp::interpolate_field(bundle, "wind_speed", targets);
    const auto pressure = wgf::interp::interpolate_field(bundle, "pressure", targets);
    const auto power = wgf::synth::linear_power(wind, pressure, targets, static_cast<std::size_t>(g.dt_h));

    wgf::io::save_grid_bundle(bundle, fs::path(out) / "grid.cgrd");
    wgf::io::save_targets(targets, fs::path(out) / "targets.csv");
    wgf::io::save_power_series(power, fs::path(out) / "power.csv");

    std::ofstream cfg(fs::path(out) / "fixture.cfg", std::ios::trunc);
    cfg << "# linear model on the affine-target fixture\n"
           "grid=grid.cgrd\n"
           "targets=targets.csv\n"
           "power=power.csv\n"
           "seed=" << seed << "\n"
           "resample_hours=3\n"
           "test_frac=0.25\n"
           "split=random\n"
           "architecture=siren_mlp\n"
           "layers=0\n"
           "sequence_length=8\n"
           "epochs=4000\n"
           "learning_rate=0.02\n"
           "weight_decay=0\n"
           "batch_size=64\n"
           "scheduler=plateau\n"
           "plateau.factor=0.5\n"
           "plateau.patience=50\n"
           "plateau.min_lr=1e-6\n"
           "bins=20\n";
    if (!cfg) throw wgf::Error(wgf::Errc::io_failure, "writing fixture.cfg");
    std::cout << "wrote " << out << ": " << steps << " steps, " << g.nlat << "x" << g.nlon << " grid, " << sites
              << " sites, " << power.entries.size() << " hourly power rows\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
