#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wgf/error.hpp"
#include "wgf/random.hpp"
#include "wgf/text.hpp"

namespace wgf::nn {

enum class Architecture { siren_mlp, lstm_stack, lstm_transformer };

constexpr std::string_view architecture_name(Architecture a) {
  switch (a) {
    case Architecture::siren_mlp: return "siren_mlp";
    case Architecture::lstm_stack: return "lstm_stack";
    case Architecture::lstm_transformer: return "lstm_transformer";
  }
  return "unknown";
}

inline Architecture parse_architecture(std::string_view s) {
  if (s == "siren_mlp") return Architecture::siren_mlp;
  if (s == "lstm_stack") return Architecture::lstm_stack;
  if (s == "lstm_transformer") return Architecture::lstm_transformer;
  fail(Errc::bad_descriptor, "unknown architecture '" + std::string(s) + "'");
}

/// Shape of one of the three networks.
///
/// siren_mlp: `layers` sine layers of width `hidden`, then a linear head
///   (layers = 0 gives a plain linear model).
/// lstm_stack: `layers` LSTM layers of width `hidden`, head on the last h.
/// lstm_transformer: the LSTM stack, positional encoding, then
///   `encoder_layers` self-attention blocks (d_model = hidden) and a head on
///   the last position.
struct ArchSpec {
  Architecture kind = Architecture::siren_mlp;
  std::size_t input_dim = 5;
  std::size_t hidden = 128;
  std::size_t layers = 6;
  std::size_t encoder_layers = 0;
  std::size_t heads = 4;
  std::size_t ff_width = 20;
  double omega0 = 30.0;
  bool layer_norm = true;

  /// 6 x 128 SIREN.
  static ArchSpec full_siren_mlp() { return {Architecture::siren_mlp, 5, 128, 6, 0, 4, 20, 30.0, true}; }
  /// 6 x 128 LSTM.
  static ArchSpec full_lstm_stack() { return {Architecture::lstm_stack, 5, 128, 6, 0, 4, 20, 30.0, true}; }
  /// 6 x 64 LSTM + 2 encoder layers, 4 heads, feed-forward width 20.
  static ArchSpec full_lstm_transformer() {
    return {Architecture::lstm_transformer, 5, 64, 6, 2, 4, 20, 30.0, true};
  }

  [[nodiscard]] bool recurrent() const { return kind != Architecture::siren_mlp; }
  [[nodiscard]] std::size_t head_dim() const { return hidden / heads; }

  void validate() const {
    if (input_dim == 0) fail(Errc::bad_descriptor, "input_dim must be positive");
    if (!(omega0 > 0.0) || !std::isfinite(omega0)) fail(Errc::bad_descriptor, "omega0 must be positive");
    if (kind == Architecture::siren_mlp) {
      if (layers > 0 && hidden == 0) fail(Errc::bad_descriptor, "hidden must be positive");
      return;
    }
    if (layers == 0 || hidden == 0) fail(Errc::bad_descriptor, "LSTM stack needs layers and hidden units");
    if (kind == Architecture::lstm_transformer) {
      if (encoder_layers == 0) fail(Errc::bad_descriptor, "hybrid needs at least one encoder layer");
      if (heads == 0 || hidden % heads != 0) fail(Errc::bad_descriptor, "d_model must be divisible by heads");
      if (ff_width == 0) fail(Errc::bad_descriptor, "ff_width must be positive");
      if (hidden % 2 != 0) fail(Errc::bad_descriptor, "positional encoding needs an even d_model");
    }
  }

  /// `key=value` lines, stable order.
  [[nodiscard]] std::map<std::string, std::string> to_fields() const {
    return {{"architecture", std::string(architecture_name(kind))},
            {"input_dim", std::to_string(input_dim)},
            {"hidden", std::to_string(hidden)},
            {"layers", std::to_string(layers)},
            {"encoder_layers", std::to_string(encoder_layers)},
            {"heads", std::to_string(heads)},
            {"ff_width", std::to_string(ff_width)},
            {"omega0", text::format_double(omega0)},
            {"layer_norm", layer_norm ? "1" : "0"}};
  }

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

// ---------------------------------------------------------------------------
// Parameter layout: every tensor is a slice of one flat vector.

/// weight [out][in] row-major followed by bias [out].
struct Dense {
  std::size_t weight = 0;
  std::size_t bias = 0;
  std::size_t out = 0;
  std::size_t in = 0;
};

/// Gate weights [4][hidden][hidden + input] acting on [h_prev, x], gate order
/// forget, input, candidate, output; then biases [4][hidden].
struct LstmLayer {
  std::size_t weight = 0;
  std::size_t bias = 0;
  std::size_t input = 0;
  std::size_t hidden = 0;

  [[nodiscard]] std::size_t concat() const { return hidden + input; }
};

struct Norm {
  std::size_t gain = 0;
  std::size_t bias = 0;
};

struct EncoderLayer {
  Dense query, key, value, output;
  Norm norm1;
  Dense ff1, ff2;
  Norm norm2;
};

enum class InitRule : std::uint8_t { zero, one, uniform };

struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  InitRule rule = InitRule::zero;
  double bound = 0.0;  // for InitRule::uniform
};

struct Layout {
  std::vector<Dense> dense;  // MLP hidden layers
  std::vector<LstmLayer> lstm;
  std::vector<EncoderLayer> encoder;
  Dense head;
  std::vector<ParamBlock> blocks;  // declaration order
  std::size_t total = 0;
};

namespace detail {

class LayoutBuilder {
 public:
  std::size_t add(std::string name, std::size_t size, InitRule rule, double bound = 0.0) {
    const std::size_t offset = layout.total;
    layout.blocks.push_back({std::move(name), offset, size, rule, bound});
    layout.total += size;
    return offset;
  }

  Dense dense(const std::string& name, std::size_t out, std::size_t in, double weight_bound, InitRule bias_rule,
              double bias_bound) {
    Dense d;
    d.out = out;
    d.in = in;
    d.weight = add(name + ".weight", out * in, InitRule::uniform, weight_bound);
    d.bias = add(name + ".bias", out, bias_rule, bias_bound);
    return d;
  }

  Layout layout;
};

inline double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace detail

/// Declaration order and initialization law of every parameter.
///
/// SIREN: first layer U(-1/n_in, 1/n_in), later layers and the head
/// U(+-sqrt(6/n_in)/omega0), biases U(+-1/sqrt(n_in)).
/// LSTM / encoder: Xavier-uniform weights, zero biases, unit norm gains.
inline Layout make_layout(const ArchSpec& spec) {
  spec.validate();
  detail::LayoutBuilder b;
  auto& L = b.layout;
  const auto bias_bound = [](std::size_t n_in) { return 1.0 / std::sqrt(static_cast<double>(n_in)); };

  if (spec.kind == Architecture::siren_mlp) {
    std::size_t in = spec.input_dim;
    for (std::size_t l = 0; l < spec.layers; ++l) {
      const double n = static_cast<double>(in);
      const double bound = l == 0 ? 1.0 / n : std::sqrt(6.0 / n) / spec.omega0;
      L.dense.push_back(b.dense("mlp" + std::to_string(l), spec.hidden, in, bound, InitRule::uniform, bias_bound(in)));
      in = spec.hidden;
    }
    const double n = static_cast<double>(in);
    const double head_bound = spec.layers == 0 ? 1.0 / n : std::sqrt(6.0 / n) / spec.omega0;
    L.head = b.dense("head", 1, in, head_bound, InitRule::uniform, bias_bound(in));
    return L;
  }

  std::size_t in = spec.input_dim;
  for (std::size_t l = 0; l < spec.layers; ++l) {
    LstmLayer layer;
    layer.input = in;
    layer.hidden = spec.hidden;
    const double bound = detail::xavier_bound(layer.concat(), spec.hidden);
    const std::string name = "lstm" + std::to_string(l);
    layer.weight = b.add(name + ".W_f", spec.hidden * layer.concat(), InitRule::uniform, bound);
    b.add(name + ".W_i", spec.hidden * layer.concat(), InitRule::uniform, bound);
    b.add(name + ".W_C", spec.hidden * layer.concat(), InitRule::uniform, bound);
    b.add(name + ".W_o", spec.hidden * layer.concat(), InitRule::uniform, bound);
    layer.bias = b.add(name + ".b_f", spec.hidden, InitRule::zero);
    b.add(name + ".b_i", spec.hidden, InitRule::zero);
    b.add(name + ".b_C", spec.hidden, InitRule::zero);
    b.add(name + ".b_o", spec.hidden, InitRule::zero);
    L.lstm.push_back(layer);
    in = spec.hidden;
  }

  if (spec.kind == Architecture::lstm_transformer) {
    const std::size_t d = spec.hidden;
    const double sq = detail::xavier_bound(d, d);
    for (std::size_t l = 0; l < spec.encoder_layers; ++l) {
      const std::string name = "encoder" + std::to_string(l);
      EncoderLayer e;
      e.query = b.dense(name + ".query", d, d, sq, InitRule::zero, 0.0);
      e.key = b.dense(name + ".key", d, d, sq, InitRule::zero, 0.0);
      e.value = b.dense(name + ".value", d, d, sq, InitRule::zero, 0.0);
      e.output = b.dense(name + ".output", d, d, sq, InitRule::zero, 0.0);
      if (spec.layer_norm) {
        e.norm1.gain = b.add(name + ".norm1.gain", d, InitRule::one);
        e.norm1.bias = b.add(name + ".norm1.bias", d, InitRule::zero);
      }
      e.ff1 = b.dense(name + ".ff1", spec.ff_width, d, detail::xavier_bound(d, spec.ff_width), InitRule::zero, 0.0);
      e.ff2 = b.dense(name + ".ff2", d, spec.ff_width, detail::xavier_bound(spec.ff_width, d), InitRule::zero, 0.0);
      if (spec.layer_norm) {
        e.norm2.gain = b.add(name + ".norm2.gain", d, InitRule::one);
        e.norm2.bias = b.add(name + ".norm2.bias", d, InitRule::zero);
      }
      L.encoder.push_back(e);
    }
  }
  L.head = b.dense("head", 1, spec.hidden, detail::xavier_bound(spec.hidden, 1), InitRule::zero, 0.0);
  return L;
}

/// All learnable values of one network plus its descriptor.
struct NetworkParams {
  ArchSpec spec;
  Layout layout;
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] const double* at(std::size_t offset) const { return values.data() + offset; }
  [[nodiscard]] double* at(std::size_t offset) { return values.data() + offset; }

  [[nodiscard]] const ParamBlock& block(std::string_view name) const {
    for (const auto& b : layout.blocks) {
      if (b.name == name) return b;
    }
    fail(Errc::bad_descriptor, "no parameter block " + std::string(name));
  }
  [[nodiscard]] std::span<double> slice(std::string_view name) {
    const auto& b = block(name);
    return std::span<double>(values).subspan(b.offset, b.size);
  }
  [[nodiscard]] std::span<const double> slice(std::string_view name) const {
    const auto& b = block(name);
    return std::span<const double>(values).subspan(b.offset, b.size);
  }
};

/// Fills `out` from U(-bound, bound).
inline void fill_uniform(std::span<double> out, double bound, Rng& rng) {
  for (auto& v : out) v = rng.uniform(-bound, bound);
}

/// Xavier/Glorot uniform: U(+-sqrt(6/(fan_in+fan_out))).
inline void xavier_uniform(std::span<double> out, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  fill_uniform(out, detail::xavier_bound(fan_in, fan_out), rng);
}

/// Fresh parameters; identical for identical (spec, seed).
inline NetworkParams init_params(const ArchSpec& spec, std::uint64_t seed) {
  NetworkParams p{spec, make_layout(spec), {}};
  p.values.assign(p.layout.total, 0.0);
  Rng rng(seed);
  for (const auto& b : p.layout.blocks) {
    auto s = std::span<double>(p.values).subspan(b.offset, b.size);
    switch (b.rule) {
      case InitRule::zero: std::fill(s.begin(), s.end(), 0.0); break;
      case InitRule::one: std::fill(s.begin(), s.end(), 1.0); break;
      case InitRule::uniform: fill_uniform(s, b.bound, rng); break;
    }
  }
  return p;
}

/// Zero-valued parameters with the right layout (used for gradients).
inline NetworkParams zero_params(const ArchSpec& spec) {
  NetworkParams p{spec, make_layout(spec), {}};
  p.values.assign(p.layout.total, 0.0);
  return p;
}

}  // namespace wgf::nn
