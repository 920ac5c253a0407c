#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "wgf/error.hpp"

namespace wgf::spatial {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Per-query bookkeeping for the visited-node benchmark.
struct SearchStats {
  std::size_t visited = 0;
};

namespace detail {

template <std::size_t K>
double squared_distance(const std::array<double, K>& a, const std::array<double, K>& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < K; ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

template <std::size_t K>
void require_finite(const std::array<double, K>& p, Errc code, const char* what) {
  for (const double c : p) {
    if (!std::isfinite(c)) fail(code, what);
  }
}

}  // namespace detail

/// Exhaustive nearest neighbor; ties go to the smallest index.
template <std::size_t K>
Neighbor nearest_bruteforce(std::span<const std::array<double, K>> points, const std::array<double, K>& query) {
  if (points.empty()) fail(Errc::empty_input, "nearest_bruteforce on empty point set");
  detail::require_finite(query, Errc::non_finite_query, "query");
  std::size_t best = 0;
  double best_d2 = detail::squared_distance(points[0], query);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double d2 = detail::squared_distance(points[i], query);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return {best, std::sqrt(best_d2)};
}

/// Static KD-tree with median splits cycling through the K dimensions.
///
/// Split rule: each subtree's indices are stably sorted on the split
/// dimension, the median is the first element holding the value at position
/// n/2, and every equal key lands in the right subtree. Queries return the
/// exact minimum Euclidean distance with ties resolved to the smallest
/// payload index, identical to nearest_bruteforce.
template <std::size_t K = 2>
class KdTree {
 public:
  using Point = std::array<double, K>;
  static constexpr std::uint32_t none = std::numeric_limits<std::uint32_t>::max();

  struct Node {
    std::size_t index;  // payload: position in the source point list
    std::uint32_t left = none;
    std::uint32_t right = none;
    std::uint8_t dim = 0;
  };

  explicit KdTree(std::vector<Point> points) : points_(std::move(points)) {
    if (points_.empty()) fail(Errc::empty_input, "KdTree needs at least one point");
    if (points_.size() >= none) fail(Errc::bad_range, "too many points for KdTree");
    for (const auto& p : points_) detail::require_finite(p, Errc::non_finite_coordinate, "point");
    std::vector<std::size_t> order(points_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    nodes_.reserve(points_.size());
    root_ = build(order, 0, order.size(), 0);
  }

  [[nodiscard]] std::size_t size() const { return points_.size(); }
  [[nodiscard]] std::span<const Point> points() const { return points_; }
  [[nodiscard]] std::span<const Node> nodes() const { return nodes_; }
  [[nodiscard]] const Node& root() const { return nodes_[root_]; }
  [[nodiscard]] std::uint32_t root_id() const { return root_; }

  [[nodiscard]] std::size_t depth() const { return depth_of(root_); }

  [[nodiscard]] Neighbor nearest(const Point& query) const {
    SearchStats stats;
    return nearest(query, stats);
  }

  Neighbor nearest(const Point& query, SearchStats& stats) const {
    detail::require_finite(query, Errc::non_finite_query, "query");
    Best best;
    search(root_, query, best, stats);
    return {best.index, std::sqrt(best.d2)};
  }

 private:
  struct Best {
    std::size_t index = std::numeric_limits<std::size_t>::max();
    double d2 = std::numeric_limits<double>::infinity();
  };

  std::uint32_t build(std::vector<std::size_t>& order, std::size_t begin, std::size_t end, std::size_t depth) {
    if (begin >= end) return none;
    const auto dim = static_cast<std::uint8_t>(depth % K);
    const auto first = order.begin() + static_cast<std::ptrdiff_t>(begin);
    const auto last = order.begin() + static_cast<std::ptrdiff_t>(end);
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) { return points_[a][dim] < points_[b][dim]; });

    std::size_t mid = begin + (end - begin) / 2;
    while (mid > begin && points_[order[mid - 1]][dim] == points_[order[mid]][dim]) --mid;

    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(Node{order[mid], none, none, dim});
    const std::uint32_t left = build(order, begin, mid, depth + 1);
    const std::uint32_t right = build(order, mid + 1, end, depth + 1);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void search(std::uint32_t id, const Point& q, Best& best, SearchStats& stats) const {
    if (id == none) return;
    ++stats.visited;
    const Node& node = nodes_[id];
    const Point& p = points_[node.index];
    const double d2 = detail::squared_distance(p, q);
    if (d2 < best.d2 || (d2 == best.d2 && node.index < best.index)) {
      best.d2 = d2;
      best.index = node.index;
    }
    // left holds keys < split, right holds keys >= split
    const double diff = q[node.dim] - p[node.dim];
    const std::uint32_t near = diff < 0.0 ? node.left : node.right;
    const std::uint32_t far = diff < 0.0 ? node.right : node.left;
    search(near, q, best, stats);
    // <= keeps equidistant candidates with a smaller index reachable
    if (diff * diff <= best.d2) search(far, q, best, stats);
  }

  [[nodiscard]] std::size_t depth_of(std::uint32_t id) const {
    if (id == none) return 0;
    return 1 + std::max(depth_of(nodes_[id].left), depth_of(nodes_[id].right));
  }

  std::vector<Point> points_;
  std::vector<Node> nodes_;
  std::uint32_t root_ = none;
};

}  // namespace wgf::spatial
