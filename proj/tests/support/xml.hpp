#pragma once

#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Strict reader for the XML subset our SVG writer emits: elements,
// double-quoted attributes, character data, entity references, and an
// optional <?xml ...?> prolog. Returns nullopt on any malformation.
namespace xml {

struct Element {
  std::string name;
  std::map<std::string, std::string> attrs;
  std::vector<Element> children;
  std::string text;

  void collect(std::string_view tag, std::vector<const Element*>& out) const {
    if (name == tag) out.push_back(this);
    for (const auto& c : children) c.collect(tag, out);
  }
  [[nodiscard]] std::vector<const Element*> all(std::string_view tag) const {
    std::vector<const Element*> out;
    collect(tag, out);
    return out;
  }
};

namespace detail {

class Reader {
 public:
  explicit Reader(std::string_view s) : s_(s) {}

  std::optional<Element> document() {
    skip_space();
    if (s_.substr(i_, 5) == "<?xml") {
      const auto end = s_.find("?>", i_);
      if (end == std::string_view::npos) return std::nullopt;
      i_ = end + 2;
    }
    skip_space();
    auto root = element();
    if (!root) return std::nullopt;
    skip_space();
    if (i_ != s_.size()) return std::nullopt;
    return root;
  }

 private:
  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' || c == '.';
  }

  void skip_space() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }

  std::optional<std::string> name() {
    const auto start = i_;
    while (i_ < s_.size() && name_char(s_[i_])) ++i_;
    if (i_ == start) return std::nullopt;
    return std::string(s_.substr(start, i_ - start));
  }

  std::optional<std::string> decode(std::string_view raw) {
    std::string out;
    for (std::size_t k = 0; k < raw.size(); ++k) {
      if (raw[k] == '<') return std::nullopt;
      if (raw[k] != '&') {
        out += raw[k];
        continue;
      }
      const auto semi = raw.find(';', k);
      if (semi == std::string_view::npos) return std::nullopt;
      const auto ent = raw.substr(k + 1, semi - k - 1);
      if (ent == "amp") out += '&';
      else if (ent == "lt") out += '<';
      else if (ent == "gt") out += '>';
      else if (ent == "quot") out += '"';
      else if (ent == "apos") out += '\'';
      else return std::nullopt;
      k = semi;
    }
    return out;
  }

  std::optional<Element> element() {
    if (i_ >= s_.size() || s_[i_] != '<') return std::nullopt;
    ++i_;
    auto n = name();
    if (!n) return std::nullopt;
    Element e;
    e.name = *n;
    for (;;) {
      skip_space();
      if (i_ >= s_.size()) return std::nullopt;
      if (s_.substr(i_, 2) == "/>") {
        i_ += 2;
        return e;
      }
      if (s_[i_] == '>') {
        ++i_;
        break;
      }
      auto key = name();
      if (!key || i_ + 1 >= s_.size() || s_[i_] != '=' || s_[i_ + 1] != '"') return std::nullopt;
      i_ += 2;
      const auto close = s_.find('"', i_);
      if (close == std::string_view::npos) return std::nullopt;
      auto value = decode(s_.substr(i_, close - i_));
      if (!value || e.attrs.count(*key)) return std::nullopt;
      e.attrs[*key] = *value;
      i_ = close + 1;
    }
    for (;;) {
      const auto lt = s_.find('<', i_);
      if (lt == std::string_view::npos) return std::nullopt;
      auto chunk = decode(s_.substr(i_, lt - i_));
      if (!chunk) return std::nullopt;
      e.text += *chunk;
      i_ = lt;
      if (s_.substr(i_, 2) == "</") {
        i_ += 2;
        auto closing = name();
        if (!closing || *closing != e.name) return std::nullopt;
        skip_space();
        if (i_ >= s_.size() || s_[i_] != '>') return std::nullopt;
        ++i_;
        return e;
      }
      auto child = element();
      if (!child) return std::nullopt;
      e.children.push_back(std::move(*child));
    }
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

}  // namespace detail

inline std::optional<Element> parse(std::string_view s) { return detail::Reader(s).document(); }

/// Number of "x,y" pairs in a polyline points attribute; nullopt if any pair
/// is malformed.
inline std::optional<std::size_t> point_count(std::string_view points) {
  std::size_t n = 0;
  std::size_t i = 0;
  while (i < points.size()) {
    while (i < points.size() && points[i] == ' ') ++i;
    if (i >= points.size()) break;
    auto end = points.find(' ', i);
    if (end == std::string_view::npos) end = points.size();
    const auto pair = points.substr(i, end - i);
    const auto comma = pair.find(',');
    if (comma == std::string_view::npos || comma == 0 || comma + 1 == pair.size()) return std::nullopt;
    try {
      std::size_t used = 0;
      (void)std::stod(std::string(pair.substr(0, comma)), &used);
      if (used != comma) return std::nullopt;
      (void)std::stod(std::string(pair.substr(comma + 1)), &used);
      if (used != pair.size() - comma - 1) return std::nullopt;
    } catch (...) {
      return std::nullopt;
    }
    ++n;
    i = end;
  }
  return n;
}

}  // namespace xml
