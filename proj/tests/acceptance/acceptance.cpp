#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "scratch.hpp"
#include "wgf/wgf.hpp"
#include "xml.hpp"

using namespace wgf;
namespace fs = std::filesystem;
using Pt = std::array<double, 2>;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
  void note(const std::string& s) {
    if (ok) detail += (detail.empty() ? "" : "; ") + s;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

geo::GeoCoord random_coord(Rng& rng) {
  double lon = rng.uniform(-180.0, 180.0);
  if (lon == -180.0) lon = 180.0;
  return {rng.uniform(-90.0, 90.0), lon};
}

double std_of(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// ---------------------------------------------------------------------------

Outcome geometry() {
  Outcome o;
  Rng rng(1001);
  double worst_pole = 0.0, worst_lon = 0.0;
  std::size_t third_quadrant = 0;
  for (int i = 0; i < 1000000; ++i) {
    const auto pole = random_coord(rng);
    const geo::PoleSpec ps{pole.lat_deg, pole.lon_deg};
    worst_pole = std::max(worst_pole, std::fabs(geo::rotate_coordinates(pole, ps).lat_deg - 90.0));

    const auto p = random_coord(rng);
    const auto r = geo::rotate_coordinates(p, ps);
    const auto t = oracle::rotate_transcribed(p.lat_deg, p.lon_deg, ps.pole_lat_deg, ps.pole_lon_deg, false);
    worst_lon = std::max(worst_lon, oracle::circular_gap(r.lon_deg, geo::normalize_longitude(t.lon)));
    const auto lit = oracle::rotate_transcribed(p.lat_deg, p.lon_deg, ps.pole_lat_deg, ps.pole_lon_deg, true);
    if (oracle::circular_gap(lit.lon, t.lon) > 90.0) ++third_quadrant;
  }
  o.require(worst_pole <= 1e-12, "pole fixpoint off by " + fmt(worst_pole));
  o.require(worst_lon <= 1e-9, "atan2 table disagrees by " + fmt(worst_lon) + " deg");
  o.note("max pole error " + fmt(worst_pole) + ", max lon gap " + fmt(worst_lon));
  o.note("printed third-quadrant branch off by 180 deg in " + std::to_string(third_quadrant) + " of 1e6 (not used)");
  return o;
}

Outcome nearest_index() {
  Outcome o;
  Rng rng(1002);
  for (int c = 0; c < 200 && o.ok; ++c) {
    std::vector<Pt> pts(1 + rng.below(500));
    const bool lattice = c % 2 == 0;
    const auto cells = 1 + rng.below(10);
    for (auto& p : pts) {
      p = lattice ? Pt{static_cast<double>(rng.below(cells)), static_cast<double>(rng.below(cells))}
                  : Pt{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    }
    const spatial::KdTree<2> tree(pts);
    for (int q = 0; q < 5; ++q) {
      const Pt query = lattice ? Pt{0.5 * static_cast<double>(rng.below(24)) - 1, 0.5 * static_cast<double>(rng.below(24)) - 1}
                               : Pt{rng.uniform(-12, 12), rng.uniform(-12, 12)};
      const auto [idx, dist] = oracle::scan_nearest(pts, query);
      const auto hit = tree.nearest(query);
      const auto brute = spatial::nearest_bruteforce<2>(pts, query);
      o.require(hit.index == idx && hit.distance == dist && hit == brute, "fuzz case " + std::to_string(c));
    }
  }
  std::vector<Pt> nodes;
  for (int i = 0; i < 157; ++i) {
    for (int j = 0; j < 182; ++j) nodes.push_back({-8.03 + 0.11 * i, -167.05 + 0.11 * j});
  }
  const spatial::KdTree<2> tree(nodes);
  const auto targets = synth::synthetic_targets(232, 1003);
  const geo::PoleSpec pole = synth::GridSpec::regional(1).pole;
  for (const auto& t : targets.points) {
    const auto r = geo::rotate_coordinates({t.lat_deg, t.lon_deg}, pole);
    const Pt q{r.lat_deg, r.lon_deg};
    const auto [idx, dist] = oracle::scan_nearest(nodes, q);
    const auto hit = tree.nearest(q);
    o.require(hit.index == idx && hit.distance == dist, "regional target " + t.id);
  }
  o.note("200 fuzz cases, 28574 nodes x 232 targets");
  return o;
}

std::vector<double> random_axis(Rng& rng, std::size_t n) {
  std::vector<double> a(n);
  double x = rng.uniform(-5.0, 5.0);
  for (auto& v : a) v = (x += rng.uniform(0.1, 2.0));
  return a;
}

Outcome interpolation() {
  Outcome o;
  Rng rng(1004);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<std::vector<double>> axes{random_axis(rng, 2 + rng.below(6)), random_axis(rng, 2 + rng.below(6))};
    std::vector<double> f(axes[0].size() * axes[1].size());
    for (auto& v : f) v = rng.normal() * 1e3;
    for (std::size_t i = 0; i < axes[0].size(); ++i) {
      for (std::size_t j = 0; j < axes[1].size(); ++j) {
        const double got = interp::multilinear<double>(axes, f, std::vector<double>{axes[0][i], axes[1][j]});
        o.require(got == f[i * axes[1].size() + j], "node value not reproduced");
      }
    }
  }
  for (int q = 0; q < 10000; ++q) {
    const std::vector<std::vector<double>> axes{random_axis(rng, 2 + rng.below(4)), random_axis(rng, 2 + rng.below(4))};
    std::vector<double> f(axes[0].size() * axes[1].size());
    for (auto& v : f) v = rng.normal() * std::pow(10.0, rng.uniform(-3, 6));
    const double x = rng.uniform(axes[0].front(), axes[0].back());
    const double y = rng.uniform(axes[1].front(), axes[1].back());
    const auto i = static_cast<std::size_t>(std::upper_bound(axes[0].begin(), axes[0].end() - 1, x) - axes[0].begin()) - 1;
    const auto j = static_cast<std::size_t>(std::upper_bound(axes[1].begin(), axes[1].end() - 1, y) - axes[1].begin()) - 1;
    const std::size_t ny = axes[1].size();
    const double c[4] = {f[i * ny + j], f[i * ny + j + 1], f[(i + 1) * ny + j], f[(i + 1) * ny + j + 1]};
    const double got = interp::multilinear<double>(axes, f, std::vector<double>{x, y});
    o.require(got >= *std::min_element(c, c + 4) && got <= *std::max_element(c, c + 4), "outside corner hull");
  }
  double worst_linear = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double a = rng.uniform(-5, 5), bx = rng.uniform(-5, 5), by = rng.uniform(-5, 5);
    const std::vector<std::vector<double>> axes{random_axis(rng, 4), random_axis(rng, 6)};
    std::vector<double> f;
    for (double x : axes[0]) {
      for (double y : axes[1]) f.push_back(a + bx * x + by * y);
    }
    const double x = rng.uniform(axes[0].front(), axes[0].back());
    const double y = rng.uniform(axes[1].front(), axes[1].back());
    const double scale = std::fabs(a) + std::fabs(bx * x) + std::fabs(by * y);
    const double err = std::fabs(interp::multilinear<double>(axes, f, std::vector<double>{x, y}) - (a + bx * x + by * y));
    worst_linear = std::max(worst_linear, err / scale);
  }
  o.require(worst_linear <= 1e-12, "linear field error " + fmt(worst_linear));

  const auto bundle = synth::synthetic_bundle(synth::GridSpec::regional(2928), 1005);
  const auto targets = synth::synthetic_targets(232, 1006);
  for (const char* var : {"wind_speed", "pressure"}) {
    const auto s = interp::interpolate_field(bundle, var, targets);
    o.require(s.steps() == 2928 && s.targets() == 232 && s.values.size() == 2928u * 232, std::string(var) + " shape");
    o.require(std::all_of(s.values.begin(), s.values.end(), [](double v) { return std::isfinite(v); }),
              std::string(var) + " has gaps");
  }
  o.note("linear rel err " + fmt(worst_linear) + ", series 2928 x 232");
  return o;
}

interp::InterpolatedSeries coded_series(const std::vector<double>& times, const io::TargetSet& targets, double base) {
  interp::InterpolatedSeries s;
  s.times = times;
  for (const auto& t : targets.points) s.target_ids.push_back(t.id);
  for (std::size_t t = 0; t < times.size(); ++t) {
    for (std::size_t p = 0; p < targets.size(); ++p) s.values.push_back(base + static_cast<double>(t) + 1e-3 * static_cast<double>(p));
  }
  s.method_mask.assign(s.values.size(), interp::Method::linear);
  return s;
}

Outcome dataset() {
  Outcome o;
  const auto targets = synth::synthetic_targets(232, 1007);
  const double start = io::epoch_hours(2020, 1, 1);
  const auto hourly = synth::synthetic_power(targets, start, 366 * 24, 1008);
  o.require(hourly.size() == 232u * 8784, "hourly rows");
  const auto power = data::resample_power(hourly, 3);
  o.require(power.size() == 232u * 2928, "resampled rows " + std::to_string(power.size()));
  std::vector<double> times;
  for (std::size_t t = 0; t < 2928; ++t) times.push_back(start + 3.0 * static_cast<double>(t));
  const auto raw = data::assemble_raw(coded_series(times, targets, 5.0), coded_series(times, targets, 1e5), power, targets);
  o.require(raw.size() == 679296, "assembled " + std::to_string(raw.size()));

  for (const auto mode : {data::SplitMode::random, data::SplitMode::chronological}) {
    const auto s = data::split_train_test(raw, 0.1, mode, 1009);
    o.require(s.train.size() + s.test.size() == raw.size(), "split not exhaustive");
    std::vector<char> seen(raw.size(), 0);
    for (const auto* part : {&s.train, &s.test}) {
      for (const auto& r : part->provenance) {
        char& flag = seen[r.target_index * 2928 + r.time_index];
        o.require(flag == 0, "row assigned twice");
        flag = 1;
      }
    }
    o.require(std::all_of(seen.begin(), seen.end(), [](char c) { return c == 1; }), "row missing from split");
    if (mode == data::SplitMode::random) {
      o.require(s.test.size() == 67929 && s.train.size() == 611367, "random split sizes");
    } else {
      std::vector<std::size_t> last_train(232, 0), first_test(232, 2928);
      for (const auto& r : s.train.provenance) last_train[r.target_index] = std::max(last_train[r.target_index], r.time_index);
      for (const auto& r : s.test.provenance) first_test[r.target_index] = std::min(first_test[r.target_index], r.time_index);
      for (std::size_t p = 0; p < 232; ++p) o.require(last_train[p] < first_test[p], "chronological order");
    }
  }

  Rng rng(1010);
  for (int trial = 0; trial < 20; ++trial) {
    data::SampleTable t;
    std::size_t expected = 0;
    const std::size_t length = 1 + rng.below(10);
    const std::size_t streams = 1 + rng.below(8);
    for (std::size_t s = 0; s < streams; ++s) {
      const std::size_t len = length + 1 + rng.below(200);
      expected += len - length;
      for (std::size_t i = 0; i < len; ++i) t.push_back(std::array<double, 5>{double(i), 0, 0, 0, 0}, double(i), {i, s});
    }
    o.require(data::make_sequences(t, length).size() == expected, "window count");
  }
  const auto full = data::make_sequences(raw, 8);
  o.require(full.size() == 232u * (2928 - 8), "regional window count");
  o.note("2928 steps, 679296 samples, " + std::to_string(full.size()) + " windows at L=8");
  return o;
}

Outcome gradients() {
  Outcome o;
  Rng rng(1011);
  const auto spec_of = [](nn::Architecture kind) {
    nn::ArchSpec s;
    s.kind = kind;
    s.hidden = 4;
    s.layers = 2;
    s.encoder_layers = 1;
    s.heads = 2;
    s.ff_width = 4;
    return s;
  };
  for (const auto kind : {nn::Architecture::siren_mlp, nn::Architecture::lstm_stack, nn::Architecture::lstm_transformer}) {
    const auto spec = spec_of(kind);
    double worst = 0.0;
    for (int draw = 0; draw < 50; ++draw) {
      auto p = nn::init_params(spec, static_cast<std::uint64_t>(draw));
      gradcheck::randomize(p, rng, kind == nn::Architecture::siren_mlp ? 0.1 : 0.6);
      const auto b = gradcheck::random_batch(rng, 2, spec.recurrent() ? 3 : 1, 5);
      worst = std::max(worst, gradcheck::compare(p, b).max_rel);
    }
    const std::string name(nn::architecture_name(kind));
    o.require(worst < 1e-4, name + " max rel err " + fmt(worst));
    o.note(name + " " + fmt(worst));
  }
  return o;
}

Outcome convergence() {
  Outcome o;
  Rng rng(1012);
  data::SampleTable table;
  for (std::size_t i = 0; i < 64; ++i) {
    const double x = rng.uniform(-1, 1);
    table.push_back(std::array<double, 5>{x, 0, 0, 0, 0}, 2 * x + 1, {i, 0});
  }
  nn::ArchSpec spec;
  spec.layers = 0;
  nn::TrainConfig cfg;
  cfg.epochs = 500;
  cfg.learning_rate = 0.02;
  cfg.weight_decay = 0.0;
  cfg.batch_size = 8;
  cfg.seed = 4;
  cfg.scheduler = nn::PlateauSettings{0.5, 10, 1e-6};
  const auto a = nn::train(nn::init_params(spec, 3), table, data::SampleTable{}, cfg);
  const auto b = nn::train(nn::init_params(spec, 3), table, data::SampleTable{}, cfg);
  o.require(a.report.train_mse < 1e-6, "final mse " + fmt(a.report.train_mse));
  o.require(a.report.loss == b.report.loss && a.params.values == b.params.values, "runs differ");
  o.note("final mse " + fmt(a.report.train_mse) + ", w " + fmt(a.params.slice("head.weight")[0]) + ", b " +
         fmt(a.params.slice("head.bias")[0]));
  return o;
}

Outcome comparison() {
  Outcome o;
  const auto raw = synth::sequence_task({20, 1000, 0.3}, 42);
  const auto split = data::split_train_test(raw, 0.2, data::SplitMode::chronological, 1);
  const auto scalers = data::fit_scalers(split.train);
  const auto train = data::apply_scalers(split.train, scalers);
  const auto test = data::apply_scalers(split.test, scalers);

  nn::TrainConfig cfg;
  cfg.epochs = 2000;
  cfg.weight_decay = 0.0;
  cfg.batch_size = 64;
  cfg.steps_per_epoch = 1;
  cfg.eval_interval = 100;
  cfg.seed = 3;
  cfg.scheduler = nn::PlateauSettings{0.5, 5, 1e-5};

  nn::ArchSpec mlp;
  mlp.kind = nn::Architecture::siren_mlp;
  mlp.layers = 3;
  mlp.hidden = 64;
  nn::ArchSpec lstm = mlp;
  lstm.kind = nn::Architecture::lstm_stack;
  lstm.layers = 2;
  lstm.hidden = 32;
  nn::ArchSpec hybrid = lstm;
  hybrid.kind = nn::Architecture::lstm_transformer;
  hybrid.encoder_layers = 1;
  hybrid.heads = 4;
  hybrid.ff_width = 32;

  // RMSE is compared against the spread of the test labels, in the same scaled units.
  const auto windows_train = data::make_sequences(train, 8);
  const auto windows_test = data::make_sequences(test, 8);
  cfg.learning_rate = 3e-4;
  const auto m = nn::train(nn::init_params(mlp, 1), train, test, cfg);
  cfg.learning_rate = 3e-3;
  const auto l = nn::train(nn::init_params(lstm, 1), windows_train, windows_test, cfg);
  const auto h = nn::train(nn::init_params(hybrid, 1), windows_train, windows_test, cfg);

  const double rm = std::sqrt(m.report.test_mse), rl = std::sqrt(l.report.test_mse), rh = std::sqrt(h.report.test_mse);
  const double sd = std_of(windows_test.targets);
  o.require(rl <= rm, "LSTM rmse " + fmt(rl) + " above MLP " + fmt(rm));
  o.require(rl < 0.15 * sd, "LSTM rmse " + fmt(rl) + " not below 0.15 std " + fmt(0.15 * sd));
  o.note("rmse/std MLP " + fmt(rm / sd) + " (" + fmt(m.report.wall_seconds) + " s), LSTM " + fmt(rl / sd) + " (" +
         fmt(l.report.wall_seconds) + " s), hybrid " + fmt(rh / sd) + " (" + fmt(h.report.wall_seconds) + " s)");
  return o;
}

Outcome schedulers() {
  Outcome o;
  const double base = 1e-4, max = 1e-2, step = 2000, gamma = 0.99994;
  double worst = 0.0;
  for (std::uint64_t it = 0; it < 100000; ++it) {
    const double lr = nn::clr_exp_range(it, base, max, step, gamma);
    o.require(lr >= base && lr <= max, "clr out of range at " + std::to_string(it));
    worst = std::max(worst, std::fabs(lr - oracle::clr(static_cast<double>(it), base, max, step, gamma)));
  }
  o.require(worst <= 1e-15, "clr differs from formula by " + fmt(worst));

  for (std::size_t patience = 1; patience <= 12; ++patience) {
    nn::ReduceOnPlateau s(0.1, {0.5, patience, 1e-6});
    s.step(1.0);
    std::size_t steps = 0;
    while (s.reductions() == 0 && steps < 100) {
      s.step(1.0);
      ++steps;
    }
    o.require(steps == patience, "patience " + std::to_string(patience) + " reduced after " + std::to_string(steps));
    o.require(s.learning_rate() == 0.05, "reduced rate");
  }
  std::vector<double> losses;
  Rng rng(1013);
  double level = 1.0;
  for (int i = 0; i < 400; ++i) {
    if (rng.below(4) == 0) level *= rng.uniform(0.9, 1.0);
    losses.push_back(level * (1.0 + rng.uniform(0.0, 1e-5)));
  }
  nn::ReduceOnPlateau s(0.2, {0.5, 4, 1e-6});
  const auto want = oracle::plateau_trace(losses, 0.2, 0.5, 4, 1e-6);
  for (std::size_t i = 0; i < losses.size(); ++i) o.require(s.step(losses[i]) == want[i], "plateau trace step " + std::to_string(i));
  o.note("clr max deviation " + fmt(worst) + ", plateau reductions " + std::to_string(s.reductions()));
  return o;
}

std::size_t data_rows(const fs::path& csv) {
  const auto text = slurp(csv);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) - 1;
}

std::size_t histogram_mass(const fs::path& csv) {
  std::istringstream is(slurp(csv));
  std::string line;
  std::getline(is, line);
  std::size_t total = 0;
  while (std::getline(is, line)) total += std::stoul(line.substr(line.rfind(',') + 1));
  return total;
}

Outcome cli() {
  Outcome o;
  Scratch dir("acceptance");
  const fs::path cfg = fs::path(WGF_SOURCE_DIR) / "data" / "fixture" / "fixture.cfg";
  const auto out = dir / "run";
  for (const char* s : {"stats", "interpolate", "prepare", "train", "evaluate", "plot"}) {
    const std::string cmd = std::string(WGF_CLI_PATH) + " " + s + " --config " + cfg.string() + " --out " +
                            out.string() + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    o.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, std::string(s) + " exited with " + std::to_string(status));
  }
  if (!o.ok) return o;
  const char* artifacts[] = {"field_stats_wind.csv", "field_stats_pressure.csv", "hist_wind.csv", "hist_wind.svg",
                             "hist_pressure.csv", "hist_pressure.svg", "wind_interp.csv", "pressure_interp.csv",
                             "samples.csv", "train_samples.csv", "test_samples.csv", "scalers.txt", "checkpoint.wgf",
                             "train_report.csv", "predictions.csv", "metrics.txt", "scatter.csv", "scatter.svg",
                             "error_hist.csv", "error_hist.svg", "series_overlay.csv", "series_overlay.svg"};
  for (const char* a : artifacts) o.require(fs::exists(out / a) && fs::file_size(out / a) > 0, std::string("missing ") + a);
  if (!o.ok) return o;
  const std::size_t samples = data_rows(out / "samples.csv");
  const std::size_t tested = data_rows(out / "predictions.csv");
  o.require(histogram_mass(out / "hist_wind.csv") == samples, "wind histogram mass");
  o.require(histogram_mass(out / "hist_pressure.csv") == samples, "pressure histogram mass");
  o.require(histogram_mass(out / "error_hist.csv") == tested, "error histogram mass");
  for (const char* svg : {"hist_wind.svg", "hist_pressure.svg", "scatter.svg", "error_hist.svg", "series_overlay.svg"}) {
    const auto doc = xml::parse(slurp(out / svg));
    o.require(doc.has_value() && doc->name == "svg", std::string(svg) + " does not parse");
  }
  const auto metrics = Config::load(out / "metrics.txt");
  o.note(std::to_string(samples) + " samples, test rmse " + fmt(metrics.number("rmse")));
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "geometry", 10, geometry},          {2, "index", 30, nearest_index},
      {3, "interpolation", 120, interpolation}, {4, "dataset", 60, dataset},
      {5, "gradients", 120, gradients},       {6, "convergence", 10, convergence},
      {7, "architecture comparison", 900, comparison}, {8, "schedulers", 5, schedulers},
      {9, "cli end-to-end", 300, cli},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.ok && secs > c.budget_s) {
      o.ok = false;
      o.detail = "took " + fmt(secs) + " s, budget " + fmt(c.budget_s) + " s";
    }
    if (!o.ok) ++failures;
    std::printf("%s criterion %d (%s) %.2fs: %s\n", o.ok ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
