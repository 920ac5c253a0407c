#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "wgf/error.hpp"
#include "wgf/grid_io.hpp"
#include "wgf/nn/architecture.hpp"
#include "wgf/nn/train.hpp"
#include "wgf/text.hpp"

namespace wgf::nn {

// Checkpoint layout: text header of `key=value` lines opened by
// "wgf-checkpoint 1" and closed by "--", then param_count little-endian f64
// values in layout declaration order.

inline constexpr std::string_view checkpoint_magic = "wgf-checkpoint 1";

struct Checkpoint {
  NetworkParams params;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
};

inline void save_checkpoint(const NetworkParams& p, std::uint64_t seed, std::uint64_t epoch,
                            const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(Errc::io_failure, "cannot open " + path.string() + " for writing");
  os << checkpoint_magic << '\n';
  for (const auto& [k, v] : p.spec.to_fields()) os << k << '=' << v << '\n';
  os << "seed=" << seed << '\n';
  os << "epoch=" << epoch << '\n';
  os << "param_count=" << p.values.size() << '\n';
  os << "--\n";
  io::detail::LeWriter w(os);
  w.put_array<double>(p.values);
  if (!os) fail(Errc::io_failure, "writing " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) fail(Errc::io_failure, "cannot stat " + path.string());
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::io_failure, "cannot open " + path.string());

  std::string line;
  if (!std::getline(is, line) || line != checkpoint_magic) fail(Errc::bad_magic, path.string());
  std::map<std::string, std::string, std::less<>> kv;
  while (true) {
    if (!std::getline(is, line)) fail(Errc::parse_error, "checkpoint header not terminated");
    if (line == "--") break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(Errc::parse_error, "checkpoint header line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](std::string_view key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) fail(Errc::parse_error, "checkpoint missing " + std::string(key));
    return it->second;
  };
  auto get_u = [&](std::string_view key) {
    const auto v = text::parse_int<std::uint64_t>(get(key));
    if (!v) fail(Errc::parse_error, "checkpoint field " + std::string(key));
    return *v;
  };

  ArchSpec spec;
  spec.kind = parse_architecture(get("architecture"));
  spec.input_dim = get_u("input_dim");
  spec.hidden = get_u("hidden");
  spec.layers = get_u("layers");
  spec.encoder_layers = get_u("encoder_layers");
  spec.heads = get_u("heads");
  spec.ff_width = get_u("ff_width");
  const auto omega = text::parse_double(get("omega0"));
  if (!omega) fail(Errc::parse_error, "checkpoint field omega0");
  spec.omega0 = *omega;
  spec.layer_norm = get("layer_norm") == "1";

  Checkpoint ck{zero_params(spec), get_u("seed"), get_u("epoch")};
  const auto count = get_u("param_count");
  if (count != ck.params.size()) fail(Errc::dimension_mismatch, "checkpoint parameter count does not match layout");
  const auto offset = static_cast<std::uint64_t>(is.tellg());
  io::detail::LeReader r(is, size - offset);
  ck.params.values = r.get_array<double>(count, "checkpoint payload");
  if (r.remaining() != 0) fail(Errc::dimension_mismatch, "trailing bytes in checkpoint");
  return ck;
}

/// `epoch,loss,lr`.
inline void save_train_report(const TrainReport& report, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(Errc::io_failure, "cannot open " + path.string() + " for writing");
  os << "epoch,loss,lr\n";
  for (std::size_t e = 0; e < report.loss.size(); ++e) {
    os << (e + 1) << ',' << text::format_double(report.loss[e]) << ',' << text::format_double(report.lr[e]) << '\n';
  }
  if (!os) fail(Errc::io_failure, "writing " + path.string());
}

}  // namespace wgf::nn
