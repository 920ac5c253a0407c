#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "wgf/error.hpp"
#include "wgf/text.hpp"

namespace wgf {

/// Flat `key=value` file. Blank lines and lines starting with '#' are
/// ignored; relative paths resolve against the file's directory.
class Config {
 public:
  Config() = default;

  static Config parse(std::string_view content, std::filesystem::path base = {}) {
    Config c;
    c.base_ = std::move(base);
    std::size_t line_no = 0;
    std::istringstream is{std::string(content)};
    std::string line;
    while (std::getline(is, line)) {
      ++line_no;
      const auto t = text::trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string_view::npos || text::trim(t.substr(0, eq)).empty()) {
        fail(Errc::parse_error, "config line " + std::to_string(line_no) + ": expected key=value");
      }
      c.values_[std::string(text::trim(t.substr(0, eq)))] = std::string(text::trim(t.substr(eq + 1)));
    }
    return c;
  }

  static Config load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) fail(Errc::io_failure, "cannot open config " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse(ss.str(), path.parent_path());
  }

  void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }

  [[nodiscard]] bool has(std::string_view key) const { return values_.find(key) != values_.end(); }

  [[nodiscard]] const std::string& get(std::string_view key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) fail(Errc::missing_config_key, std::string(key));
    return it->second;
  }

  [[nodiscard]] std::string get_or(std::string_view key, std::string_view fallback) const {
    return has(key) ? get(key) : std::string(fallback);
  }

  [[nodiscard]] double number(std::string_view key) const {
    const auto v = text::parse_double(get(key));
    if (!v) fail(Errc::invalid_config, std::string(key) + " is not a number");
    return *v;
  }

  [[nodiscard]] double number_or(std::string_view key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  [[nodiscard]] std::uint64_t integer(std::string_view key) const {
    const auto v = text::parse_int<std::uint64_t>(get(key));
    if (!v) fail(Errc::invalid_config, std::string(key) + " is not a non-negative integer");
    return *v;
  }

  [[nodiscard]] std::uint64_t integer_or(std::string_view key, std::uint64_t fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  [[nodiscard]] bool flag_or(std::string_view key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = get(key);
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    fail(Errc::invalid_config, std::string(key) + " is not a boolean");
  }

  [[nodiscard]] std::filesystem::path path(std::string_view key) const {
    std::filesystem::path p = get(key);
    return p.is_absolute() || base_.empty() ? p : base_ / p;
  }

  [[nodiscard]] const std::map<std::string, std::string, std::less<>>& values() const { return values_; }

 private:
  std::map<std::string, std::string, std::less<>> values_;
  std::filesystem::path base_;
};

}  // namespace wgf
