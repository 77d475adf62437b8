#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hema/error.hpp"

namespace hema {

/// Grid node of a piecewise cubic-Hermite solution.
struct TrajectoryNode {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

struct State {
  double x = 0.0;
  double y = 0.0;
};

namespace detail {

/// Cubic Hermite interpolant on a segment of width h at local coordinate
/// θ = (t - t_left)/h (θ outside [0, 1] extrapolates).
inline double hermite(double p0, double d0, double p1, double d1, double h, double theta) noexcept {
  const double t2 = theta * theta;
  const double t3 = t2 * theta;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + theta;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  return h00 * p0 + h10 * h * d0 + h01 * p1 + h11 * h * d1;
}

inline double hermite_derivative(double p0, double d0, double p1, double d1, double h, double theta) noexcept {
  const double t2 = theta * theta;
  const double g00 = 6.0 * t2 - 6.0 * theta;
  const double g10 = 3.0 * t2 - 4.0 * theta + 1.0;
  const double g01 = -6.0 * t2 + 6.0 * theta;
  const double g11 = 3.0 * t2 - 2.0 * theta;
  return (g00 * p0 + g01 * p1) / h + g10 * d0 + g11 * d1;
}

}  // namespace detail

/**
 * Dense solution (x(t), y(t)) stored as nodes; segment i spans
 * [nodes[i].t, nodes[i+1].t] and is interpolated by cubic Hermite polynomials
 * through the node values and derivatives. Adjacent segments share nodes, so
 * the interpolant is continuous by construction.
 */
class Trajectory {
 public:
  struct Segment {
    double t_left;
    double t_right;
  };

  Trajectory() = default;
  explicit Trajectory(TrajectoryNode first) { nodes_.push_back(first); }

  void push(const TrajectoryNode& n) {
    if (!nodes_.empty() && !(n.t > nodes_.back().t)) throw NumericalError("Trajectory: node times must increase");
    nodes_.push_back(n);
  }

  void set_back_derivatives(double dx, double dy) {
    nodes_.back().dx = dx;
    nodes_.back().dy = dy;
  }

  bool empty() const noexcept { return nodes_.empty(); }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t segment_count() const noexcept { return nodes_.empty() ? 0 : nodes_.size() - 1; }
  Segment segment(std::size_t i) const { return {nodes_.at(i).t, nodes_.at(i + 1).t}; }
  const std::vector<TrajectoryNode>& nodes() const noexcept { return nodes_; }
  const TrajectoryNode& node(std::size_t i) const { return nodes_.at(i); }
  const TrajectoryNode& back() const { return nodes_.back(); }
  double t0() const { return nodes_.front().t; }
  double t1() const { return nodes_.back().t; }

  bool covers(double t) const noexcept {
    return !nodes_.empty() && t >= nodes_.front().t && t <= nodes_.back().t;
  }

  /// Index of the segment containing t (the last segment for t == t1()).
  std::size_t segment_index(double t) const {
    if (!covers(t) || nodes_.size() < 2)
      throw CoverageError("Trajectory: time " + std::to_string(t) + " outside [" + std::to_string(t0()) + ", " +
                          std::to_string(t1()) + "]");
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t,
                               [](double v, const TrajectoryNode& n) { return v < n.t; });
    std::size_t i = static_cast<std::size_t>(it - nodes_.begin());
    i = i == 0 ? 0 : i - 1;
    return std::min(i, nodes_.size() - 2);
  }

  double x_on(std::size_t seg, double theta) const noexcept {
    const auto& a = nodes_[seg];
    const auto& b = nodes_[seg + 1];
    return detail::hermite(a.x, a.dx, b.x, b.dx, b.t - a.t, theta);
  }

  double y_on(std::size_t seg, double theta) const noexcept {
    const auto& a = nodes_[seg];
    const auto& b = nodes_[seg + 1];
    return detail::hermite(a.y, a.dy, b.y, b.dy, b.t - a.t, theta);
  }

  State eval(double t) const {
    if (nodes_.size() == 1 && t == nodes_.front().t) return {nodes_.front().x, nodes_.front().y};
    const std::size_t i = segment_index(t);
    const double theta = (t - nodes_[i].t) / (nodes_[i + 1].t - nodes_[i].t);
    return {x_on(i, theta), y_on(i, theta)};
  }

  double x(double t) const { return eval(t).x; }
  double y(double t) const { return eval(t).y; }

  /// Derivative of the x interpolant.
  double dx(double t) const {
    const std::size_t i = segment_index(t);
    const auto& a = nodes_[i];
    const auto& b = nodes_[i + 1];
    const double h = b.t - a.t;
    return detail::hermite_derivative(a.x, a.dx, b.x, b.dx, h, (t - a.t) / h);
  }

  /// Appends the nodes of `tail`, whose first node must coincide with back().
  void append(const Trajectory& tail) {
    if (tail.empty()) return;
    std::size_t start = 0;
    if (!nodes_.empty()) {
      if (std::abs(tail.t0() - t1()) > 1e-12 * std::max(1.0, std::abs(t1())))
        throw NumericalError("Trajectory::append: pieces are not contiguous");
      start = 1;
    }
    for (std::size_t i = start; i < tail.size(); ++i) nodes_.push_back(tail.nodes_[i]);
  }

 private:
  std::vector<TrajectoryNode> nodes_;
};

}  // namespace hema
