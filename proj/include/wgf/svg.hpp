#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>

#include "wgf/error.hpp"
#include "wgf/report.hpp"
#include "wgf/text.hpp"

namespace wgf::svg {

// Minimal SVG writer: a fixed 640x480 canvas with a framed plot area, tick
// labels at both ends of each axis, and fixed-precision coordinates so that
// equal inputs give equal bytes.

struct Frame {
  double width = 640.0;
  double height = 480.0;
  double left = 70.0;
  double right = 20.0;
  double top = 40.0;
  double bottom = 50.0;
};

struct Range {
  double lo = 0.0;
  double hi = 1.0;

  static Range of(std::span<const double> a, std::span<const double> b = {}) {
    Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const double v : a) r = {std::min(r.lo, v), std::max(r.hi, v)};
    for (const double v : b) r = {std::min(r.lo, v), std::max(r.hi, v)};
    if (!std::isfinite(r.lo)) return {0.0, 1.0};
    if (!(r.hi > r.lo)) return {r.lo - 0.5, r.hi + 0.5};
    return r;
  }
};

inline std::string escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Canvas {
 public:
  Canvas(std::string title, std::string x_label, std::string y_label, Range x, Range y, Frame f = {})
      : f_(f), x_(x), y_(y) {
    os_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << text::fixed(f.width, 0) << "\" height=\""
        << text::fixed(f.height, 0) << "\" viewBox=\"0 0 " << text::fixed(f.width, 0) << ' '
        << text::fixed(f.height, 0) << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << text::fixed(f.width, 0) << "\" height=\"" << text::fixed(f.height, 0)
        << "\" fill=\"white\"/>\n";
    os_ << "<rect x=\"" << text::fixed(f.left) << "\" y=\"" << text::fixed(f.top) << "\" width=\""
        << text::fixed(plot_w()) << "\" height=\"" << text::fixed(plot_h())
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    label(f.width / 2, 24, title, "middle", 16);
    label(f.left + plot_w() / 2, f.height - 12, x_label, "middle", 13);
    os_ << "<text x=\"18\" y=\"" << text::fixed(f.top + plot_h() / 2) << "\" text-anchor=\"middle\" font-size=\"13\""
        << " transform=\"rotate(-90 18 " << text::fixed(f.top + plot_h() / 2) << ")\">" << escape(y_label)
        << "</text>\n";
    label(f.left, f.top + plot_h() + 18, text::fixed(x.lo, 2), "start", 11);
    label(f.left + plot_w(), f.top + plot_h() + 18, text::fixed(x.hi, 2), "end", 11);
    label(f.left - 6, f.top + plot_h(), text::fixed(y.lo, 2), "end", 11);
    label(f.left - 6, f.top + 10, text::fixed(y.hi, 2), "end", 11);
  }

  [[nodiscard]] double px(double x) const { return f_.left + (x - x_.lo) / (x_.hi - x_.lo) * plot_w(); }
  [[nodiscard]] double py(double y) const { return f_.top + plot_h() - (y - y_.lo) / (y_.hi - y_.lo) * plot_h(); }

  void circle(double x, double y, double r, std::string_view color) {
    os_ << "<circle class=\"point\" cx=\"" << text::fixed(px(x)) << "\" cy=\"" << text::fixed(py(y)) << "\" r=\"" << text::fixed(r, 1)
        << "\" fill=\"" << color << "\" fill-opacity=\"0.6\"/>\n";
  }

  void line(double x0, double y0, double x1, double y1, std::string_view color) {
    os_ << "<line x1=\"" << text::fixed(px(x0)) << "\" y1=\"" << text::fixed(py(y0)) << "\" x2=\""
        << text::fixed(px(x1)) << "\" y2=\"" << text::fixed(py(y1)) << "\" stroke=\"" << color
        << "\" stroke-dasharray=\"4 3\"/>\n";
  }

  void bar(double x0, double x1, double height, std::string_view color) {
    const double top = py(height);
    const double base = py(y_.lo);
    os_ << "<rect class=\"bar\" x=\"" << text::fixed(px(x0)) << "\" y=\"" << text::fixed(top) << "\" width=\""
        << text::fixed(std::max(0.0, px(x1) - px(x0))) << "\" height=\"" << text::fixed(std::max(0.0, base - top))
        << "\" fill=\"" << color << "\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
  }

  void polyline(std::span<const double> xs, std::span<const double> ys, std::string_view color,
                std::string_view name) {
    os_ << "<polyline id=\"" << escape(name) << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) os_ << ' ';
      os_ << text::fixed(px(xs[i])) << ',' << text::fixed(py(ys[i]));
    }
    os_ << "\"/>\n";
  }

  void legend(std::size_t row, std::string_view text, std::string_view color) {
    const double y = f_.top + 16 + 16 * static_cast<double>(row);
    const double x = f_.left + plot_w() - 120;
    os_ << "<rect x=\"" << text::fixed(x) << "\" y=\"" << text::fixed(y - 9) << "\" width=\"10\" height=\"10\" fill=\""
        << color << "\"/>\n";
    label(x + 16, y, text, "start", 12);
  }

  std::string finish() {
    os_ << "</svg>\n";
    return os_.str();
  }

 private:
  [[nodiscard]] double plot_w() const { return f_.width - f_.left - f_.right; }
  [[nodiscard]] double plot_h() const { return f_.height - f_.top - f_.bottom; }

  void label(double x, double y, std::string_view s, std::string_view anchor, int size) {
    os_ << "<text x=\"" << text::fixed(x) << "\" y=\"" << text::fixed(y) << "\" text-anchor=\"" << anchor
        << "\" font-size=\"" << size << "\">" << escape(s) << "</text>\n";
  }

  Frame f_;
  Range x_;
  Range y_;
  std::ostringstream os_;
};

/// True vs predicted with the identity line.
inline std::string scatter(std::span<const double> truth, std::span<const double> pred, std::string_view title,
                           std::string_view unit) {
  const Range r = Range::of(truth, pred);
  Canvas c(std::string(title), "true " + std::string(unit), "predicted " + std::string(unit), r, r);
  c.line(r.lo, r.lo, r.hi, r.hi, "gray");
  for (std::size_t i = 0; i < truth.size(); ++i) c.circle(truth[i], pred[i], 2.0, "steelblue");
  return c.finish();
}

inline std::string histogram(const report::Histogram& h, std::string_view title, std::string_view x_label) {
  double peak = 0.0;
  for (const auto n : h.counts) peak = std::max(peak, static_cast<double>(n));
  Canvas c(std::string(title), std::string(x_label), "count", {h.edges.front(), h.edges.back()},
           {0.0, peak > 0.0 ? peak : 1.0});
  for (std::size_t k = 0; k < h.bins(); ++k) {
    c.bar(h.edges[k], h.edges[k + 1], static_cast<double>(h.counts[k]), "steelblue");
  }
  return c.finish();
}

/// Two polylines over the sample index: measured and predicted.
inline std::string overlay(std::span<const double> truth, std::span<const double> pred, std::string_view title,
                           std::string_view unit) {
  std::vector<double> xs(truth.size());
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
  Canvas c(std::string(title), "sample", std::string(unit), Range::of(xs), Range::of(truth, pred));
  c.polyline(xs, truth, "black", "true");
  c.polyline(xs, pred, "crimson", "predicted");
  c.legend(0, "true", "black");
  c.legend(1, "predicted", "crimson");
  return c.finish();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(Errc::io_failure, "cannot open " + path.string() + " for writing");
  os << content;
  if (!os) fail(Errc::io_failure, "writing " + path.string());
}

}  // namespace wgf::svg
