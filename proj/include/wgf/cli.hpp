#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wgf/config.hpp"
#include "wgf/dataset.hpp"
#include "wgf/error.hpp"
#include "wgf/grid_io.hpp"
#include "wgf/interpolate.hpp"
#include "wgf/nn/architecture.hpp"
#include "wgf/nn/checkpoint.hpp"
#include "wgf/nn/train.hpp"
#include "wgf/report.hpp"
#include "wgf/svg.hpp"
#include "wgf/text.hpp"

namespace wgf::cli {

// Pipeline stages. Each reads the config plus what earlier stages left in
// the output directory:
//   stats        grid, targets         -> field_stats_*.csv, hist_*.csv/.svg
//   interpolate  grid, targets         -> wind_interp.csv, pressure_interp.csv
//   prepare      *_interp.csv, power   -> samples.csv, train/test_samples.csv, scalers.txt
//   train        *_samples.csv         -> checkpoint.wgf, train_report.csv
//   evaluate     checkpoint, test set  -> predictions.csv, metrics.txt
//   plot         predictions.csv       -> scatter, error_hist, series_overlay (.svg/.csv)

inline constexpr std::string_view subcommands[] = {"stats", "interpolate", "prepare", "train", "evaluate", "plot"};
inline constexpr std::string_view subcommand_help[] = {
    "field statistics and histograms at the targets",
    "wind and pressure series at the targets",
    "resample power, assemble, split and scale samples",
    "train the configured model",
    "predict the test set and write metrics",
    "scatter, error histogram and series overlay"};

struct Context {
  Config config;
  std::filesystem::path out;
  std::ostream* log = &std::cout;
};

inline nn::ArchSpec arch_from(const Config& c) {
  const auto kind = nn::parse_architecture(c.get("architecture"));
  nn::ArchSpec s = kind == nn::Architecture::siren_mlp   ? nn::ArchSpec::full_siren_mlp()
                   : kind == nn::Architecture::lstm_stack ? nn::ArchSpec::full_lstm_stack()
                                                          : nn::ArchSpec::full_lstm_transformer();
  s.hidden = c.integer_or("hidden", s.hidden);
  s.layers = c.integer_or("layers", s.layers);
  s.encoder_layers = c.integer_or("encoder_layers", s.encoder_layers);
  s.heads = c.integer_or("heads", s.heads);
  s.ff_width = c.integer_or("ff_width", s.ff_width);
  s.omega0 = c.number_or("omega0", s.omega0);
  s.layer_norm = c.flag_or("layer_norm", s.layer_norm);
  s.validate();
  return s;
}

inline nn::TrainConfig train_config_from(const Config& c) {
  nn::TrainConfig t;
  t.epochs = c.integer("epochs");
  t.learning_rate = c.number("learning_rate");
  t.weight_decay = c.number_or("weight_decay", 1e-6);
  t.batch_size = c.integer_or("batch_size", t.batch_size);
  t.steps_per_epoch = c.integer_or("steps_per_epoch", 0);
  t.eval_interval = c.integer_or("eval_interval", 1);
  t.seed = c.integer("seed");
  const auto& kind = c.get("scheduler");
  if (kind == "clr") {
    auto s = nn::ClrSettings::around(t.learning_rate);
    s.base = c.number_or("clr.base", s.base);
    s.max = c.number_or("clr.max", s.max);
    s.step_size = c.number_or("clr.step_size", s.step_size);
    s.gamma = c.number_or("clr.gamma", s.gamma);
    t.scheduler = s;
  } else if (kind == "plateau") {
    nn::PlateauSettings s;
    s.factor = c.number_or("plateau.factor", s.factor);
    s.patience = c.integer_or("plateau.patience", s.patience);
    s.min_lr = c.number_or("plateau.min_lr", s.min_lr);
    t.scheduler = s;
  } else if (kind != "none") {
    fail(Errc::invalid_config, "scheduler must be none, clr or plateau");
  }
  t.validate();
  return t;
}

inline data::SplitMode split_from(const Config& c, const nn::ArchSpec& arch) {
  const auto mode = c.get_or("split", arch.recurrent() ? "chronological" : "random");
  if (mode == "chronological") return data::SplitMode::chronological;
  if (mode == "random") return data::SplitMode::random;
  fail(Errc::invalid_config, "split must be chronological or random");
}

inline std::size_t sequence_length(const Config& c) {
  const auto l = c.integer("sequence_length");
  if (l == 0) fail(Errc::invalid_config, "sequence_length must be at least 1");
  return l;
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(Errc::io_failure, "cannot create " + dir.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// stages

struct Fields {
  io::TargetSet targets;
  interp::InterpolatedSeries wind;
  interp::InterpolatedSeries pressure;
};

inline Fields interpolate_fields(const Config& c) {
  const auto bundle = io::load_grid_bundle(c.path("grid"));
  Fields f;
  f.targets = io::load_targets(c.path("targets"));
  f.wind = interp::interpolate_field(bundle, c.get_or("wind_variable", "wind_speed"), f.targets);
  f.pressure = interp::interpolate_field(bundle, c.get_or("pressure_variable", "pressure"), f.targets);
  return f;
}

inline std::size_t nearest_count(const interp::InterpolatedSeries& s) {
  return static_cast<std::size_t>(std::count(s.method_mask.begin(), s.method_mask.end(), interp::Method::nearest));
}

inline void run_stats(const Context& ctx) {
  const auto f = interpolate_fields(ctx.config);
  const auto bins = ctx.config.integer_or("bins", 50);

  const auto wind = report::field_stats(f.wind, bins);
  report::save_field_stats_csv(wind, f.targets, ctx.out / "field_stats_wind.csv");
  report::save_histogram_csv(wind.histogram, ctx.out / "hist_wind.csv");
  svg::write_file(ctx.out / "hist_wind.svg", svg::histogram(wind.histogram, "Wind speed", "wind speed (m/s)"));

  // shown in kPa, stored in Pa
  auto kpa = f.pressure;
  for (double& v : kpa.values) v /= 1000.0;
  const auto pressure = report::field_stats(kpa, bins);
  report::save_field_stats_csv(pressure, f.targets, ctx.out / "field_stats_pressure.csv");
  report::save_histogram_csv(pressure.histogram, ctx.out / "hist_pressure.csv");
  svg::write_file(ctx.out / "hist_pressure.svg",
                  svg::histogram(pressure.histogram, "Surface pressure", "pressure (kPa)"));

  *ctx.log << "stats: " << f.wind.steps() << " steps x " << f.targets.size() << " targets, "
           << nearest_count(f.wind) << " nearest-node cells\n";
}

inline void run_interpolate(const Context& ctx) {
  const auto f = interpolate_fields(ctx.config);
  interp::save_series(f.wind, ctx.out / "wind_interp.csv");
  interp::save_series(f.pressure, ctx.out / "pressure_interp.csv");
  *ctx.log << "interpolate: " << f.wind.steps() << " x " << f.wind.targets() << " cells per variable, "
           << nearest_count(f.wind) + nearest_count(f.pressure) << " nearest-node fallbacks\n";
}

inline void run_prepare(const Context& ctx) {
  const auto& c = ctx.config;
  const auto arch = arch_from(c);
  const auto targets = io::load_targets(c.path("targets"));
  const auto wind = interp::load_series(ctx.out / "wind_interp.csv");
  const auto pressure = interp::load_series(ctx.out / "pressure_interp.csv");
  const auto hourly = io::load_power_series(c.path("power"));
  const auto power = data::resample_power(hourly, c.number_or("resample_hours", 3.0));

  const auto raw = data::assemble_raw(wind, pressure, power, targets);
  const auto split = data::split_train_test(raw, c.number_or("test_frac", 0.1), split_from(c, arch), c.integer("seed"));
  const auto scalers = data::fit_scalers(split.train);

  data::save_samples(data::apply_scalers(raw, scalers), ctx.out / "samples.csv");
  data::save_samples(data::apply_scalers(split.train, scalers), ctx.out / "train_samples.csv");
  data::save_samples(data::apply_scalers(split.test, scalers), ctx.out / "test_samples.csv");
  data::save_scalers(scalers, ctx.out / "scalers.txt");
  *ctx.log << "prepare: " << raw.size() << " samples (" << split.train.size() << " train, " << split.test.size()
           << " test)\n";
}

/// Flat rows for the MLP, L-step windows for the recurrent models.
template <class Fn>
decltype(auto) with_sets(const Context& ctx, const nn::ArchSpec& arch, Fn&& fn) {
  const auto train = data::load_samples(ctx.out / "train_samples.csv");
  const auto test = data::load_samples(ctx.out / "test_samples.csv");
  if (!arch.recurrent()) return fn(train, test);
  const auto l = sequence_length(ctx.config);
  return fn(data::make_sequences(train, l), data::make_sequences(test, l));
}

inline void run_train(const Context& ctx) {
  const auto& c = ctx.config;
  const auto arch = arch_from(c);
  const auto config = train_config_from(c);
  if (arch.recurrent() && split_from(c, arch) != data::SplitMode::chronological) {
    fail(Errc::invalid_config, "recurrent architectures need split=chronological");
  }
  auto result = with_sets(ctx, arch, [&](const auto& train, const auto& test) {
    return nn::train(nn::init_params(arch, config.seed), train, test, config);
  });
  nn::save_checkpoint(result.params, config.seed, config.epochs, ctx.out / "checkpoint.wgf");
  nn::save_train_report(result.report, ctx.out / "train_report.csv");
  *ctx.log << "train: " << nn::architecture_name(arch.kind) << ", " << result.params.size() << " parameters, "
           << config.epochs << " epochs, final loss " << text::format_double(result.report.loss.back())
           << ", test mse " << text::format_double(result.report.test_mse) << " (scaled), "
           << text::fixed(result.report.wall_seconds, 2) << " s\n";
}

struct PredictionRow {
  std::size_t time_index = 0;
  std::size_t target_index = 0;
  double truth = 0.0;
  double pred = 0.0;
};

inline constexpr std::string_view prediction_header = "index,time_index,target_index,true_mw,pred_mw";

inline void run_evaluate(const Context& ctx) {
  const auto ckpt = nn::load_checkpoint(ctx.out / "checkpoint.wgf");
  const auto scalers = data::load_scalers(ctx.out / "scalers.txt");
  const auto test = data::load_samples(ctx.out / "test_samples.csv");
  if (test.size() == 0) fail(Errc::empty_input, "test set is empty");

  std::vector<PredictionRow> rows;
  if (!ckpt.params.spec.recurrent()) {
    const auto pred = nn::predict(ckpt.params, test);
    for (std::size_t i = 0; i < test.size(); ++i) {
      rows.push_back({test.provenance[i].time_index, test.provenance[i].target_index, test.targets[i], pred[i]});
    }
  } else {
    const auto set = data::make_sequences(test, sequence_length(ctx.config));
    const auto pred = nn::predict(ckpt.params, set);
    for (std::size_t b = 0; b < set.size(); ++b) {
      rows.push_back({set.origin[b].label_time_index, set.origin[b].target_index, set.targets[b], pred[b]});
    }
  }

  std::vector<double> truth(rows.size());
  std::vector<double> pred(rows.size());
  std::ofstream os(ctx.out / "predictions.csv", std::ios::trunc);
  if (!os) fail(Errc::io_failure, "cannot write predictions.csv");
  os << prediction_header << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    truth[i] = scalers.power.invert(rows[i].truth);
    pred[i] = scalers.power.invert(rows[i].pred);
    os << i << ',' << rows[i].time_index << ',' << rows[i].target_index << ',' << text::format_double(truth[i])
       << ',' << text::format_double(pred[i]) << '\n';
  }
  if (!os) fail(Errc::io_failure, "writing predictions.csv");

  const auto m = report::regression_metrics(pred, truth);
  report::save_metrics(m, ctx.out / "metrics.txt");
  *ctx.log << "evaluate: n=" << m.n << " rmse=" << text::format_double(m.rmse) << " MW mae="
           << text::format_double(m.mae) << " MW r2=" << (m.r2 ? text::fixed(*m.r2, 4) : "undefined") << '\n';
}

inline std::vector<PredictionRow> load_predictions(const std::filesystem::path& path) {
  auto is = io::detail::open_text(path);
  io::detail::expect_header(is, prediction_header, path);
  std::vector<PredictionRow> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(text::trim(line));
    if (f.size() != 5) fail(Errc::parse_error, io::detail::line_ref(path, line_no));
    const auto ti = text::parse_int<std::size_t>(f[1]);
    const auto pi = text::parse_int<std::size_t>(f[2]);
    const auto t = text::parse_double(f[3]);
    const auto p = text::parse_double(f[4]);
    if (!ti || !pi || !t || !p) fail(Errc::parse_error, io::detail::line_ref(path, line_no));
    rows.push_back({*ti, *pi, *t, *p});
  }
  if (rows.empty()) fail(Errc::empty_input, path.string() + " has no rows");
  return rows;
}

inline void run_plot(const Context& ctx) {
  const auto rows = load_predictions(ctx.out / "predictions.csv");
  std::vector<double> truth;
  std::vector<double> pred;
  std::vector<double> err;
  for (const auto& r : rows) {
    truth.push_back(r.truth);
    pred.push_back(r.pred);
    err.push_back(r.pred - r.truth);
  }

  {
    std::ofstream os(ctx.out / "scatter.csv", std::ios::trunc);
    os << "true_mw,pred_mw\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      os << text::format_double(truth[i]) << ',' << text::format_double(pred[i]) << '\n';
    }
    if (!os) fail(Errc::io_failure, "writing scatter.csv");
  }
  svg::write_file(ctx.out / "scatter.svg", svg::scatter(truth, pred, "True vs predicted power", "(MW)"));

  const auto hist = report::error_histogram(err, ctx.config.integer_or("bins", 50));
  report::save_histogram_csv(hist, ctx.out / "error_hist.csv");
  svg::write_file(ctx.out / "error_hist.svg", svg::histogram(hist, "Prediction error", "predicted - true (MW)"));

  // one site's test interval, in time order
  const std::size_t limit = ctx.config.integer_or("overlay_samples", 200);
  std::vector<double> st;
  std::vector<double> sp;
  {
    std::ofstream os(ctx.out / "series_overlay.csv", std::ios::trunc);
    os << "time_index,true_mw,pred_mw\n";
    for (const auto& r : rows) {
      if (r.target_index != rows.front().target_index || st.size() >= limit) continue;
      st.push_back(r.truth);
      sp.push_back(r.pred);
      os << r.time_index << ',' << text::format_double(r.truth) << ',' << text::format_double(r.pred) << '\n';
    }
    if (!os) fail(Errc::io_failure, "writing series_overlay.csv");
  }
  svg::write_file(ctx.out / "series_overlay.svg", svg::overlay(st, sp, "Power over the test interval", "power (MW)"));
  *ctx.log << "plot: " << rows.size() << " predictions, " << st.size() << " in overlay\n";
}

inline void dispatch(std::string_view name, const Context& ctx) {
  if (name == "stats") return run_stats(ctx);
  if (name == "interpolate") return run_interpolate(ctx);
  if (name == "prepare") return run_prepare(ctx);
  if (name == "train") return run_train(ctx);
  if (name == "evaluate") return run_evaluate(ctx);
  if (name == "plot") return run_plot(ctx);
  fail(Errc::unknown_subcommand, std::string(name));
}

}  // namespace wgf::cli

namespace wgf {

/// Exit codes: 0 success, 1 validation or usage error, 2 I/O error.
inline int cli_run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  if (argc > 1 && argv[1][0] != '-' &&
      std::find(std::begin(cli::subcommands), std::end(cli::subcommands), std::string_view(argv[1])) ==
          std::end(cli::subcommands)) {
    err << "error: " << errc_name(Errc::unknown_subcommand) << ": " << argv[1] << '\n';
    return 1;
  }

  CLI::App app{"wind power toolkit: climate grids to wind-farm power forecasts"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = "run";
  for (std::size_t k = 0; k < std::size(cli::subcommands); ++k) {
    auto* sub = app.add_subcommand(std::string(cli::subcommands[k]), std::string(cli::subcommand_help[k]));
    sub->add_option("--config", config_path, "key=value configuration file")->required();
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    cli::Context ctx{Config::load(config_path), out_dir, &out};
    cli::ensure_dir(ctx.out);
    cli::dispatch(app.get_subcommands().front()->get_name(), ctx);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == Errc::io_failure ? 2 : 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << errc_name(Errc::io_failure) << ": " << e.what() << '\n';
    return 2;
  }
}

}  // namespace wgf
