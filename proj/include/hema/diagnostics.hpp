#pragma once

/**
 * @file diagnostics.hpp
 * @brief Period and amplitude estimation, convergence tests and the
 *        limit identity for y on stored trajectories.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "hema/error.hpp"
#include "hema/model.hpp"
#include "hema/trajectory.hpp"

namespace hema {

enum class Component { X, Y };

inline const char* to_string(Component c) { return c == Component::X ? "x" : "y"; }

/// Fewer than three significant maxima in the analysis window.
class NotOscillatingError : public Error {
 public:
  using Error::Error;
};

struct Peak {
  double t = 0.0;
  double value = 0.0;
};

struct PeriodEstimate {
  double period = 0.0;
  double period_stderr = 0.0;
  std::size_t n_cycles = 0;
  double amplitude_min = 0.0;
  double amplitude_max = 0.0;
  double mean_level = 0.0;
  bool valid = false;      ///< n_cycles >= 3
  bool confident = false;  ///< valid and stderr <= 5% of the period
  std::vector<Peak> peaks;
};

struct ConvergenceResult {
  bool converged = false;
  bool converged_x = false;
  bool converged_y = false;
  double max_dev_x = 0.0;
  double max_dev_y = 0.0;
  double max_dev() const { return std::max(max_dev_x, max_dev_y); }
};

struct Lemma1Result {
  double residual = 0.0;  ///< |y(t_end) - y_limit| / max(y*, ε)
  double y_end = 0.0;
  double y_limit = 0.0;
};

namespace detail {

inline double component_at(const Trajectory& traj, Component c, double t) {
  const State s = traj.eval(t);
  return c == Component::X ? s.x : s.y;
}

/// Median node spacing over [t0, t1].
inline double typical_step(const Trajectory& traj, double t0, double t1) {
  std::vector<double> w;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const auto& a = traj.node(i);
    if (a.t < t0 || a.t >= t1) continue;
    w.push_back(traj.node(i + 1).t - a.t);
  }
  if (w.empty()) return t1 - t0;
  auto mid = w.begin() + static_cast<std::ptrdiff_t>(w.size() / 2);
  std::nth_element(w.begin(), mid, w.end());
  return *mid;
}

}  // namespace detail

/// Samples of one component on [t0, t1] at the given stride (last sample at t1).
inline std::vector<Peak> sample_component(const Trajectory& traj, Component c, double t0, double t1, double stride) {
  if (!(stride > 0.0)) throw DomainError("sample_component: stride must be positive");
  if (!(t1 > t0)) throw DomainError("sample_component: empty window");
  const auto count = static_cast<std::size_t>(std::floor((t1 - t0) / stride + 1e-9));
  std::vector<Peak> out;
  out.reserve(count + 2);
  for (std::size_t i = 0; i <= count; ++i) {
    const double t = std::min(t1, t0 + static_cast<double>(i) * stride);
    out.push_back({t, detail::component_at(traj, c, t)});
  }
  if (out.back().t < t1) out.push_back({t1, detail::component_at(traj, c, t1)});
  return out;
}

/// Strict local maxima of the sampled component, refined by a parabola
/// through the three samples around each one.
inline std::vector<Peak> find_maxima(const Trajectory& traj, Component c, double t0, double t1, double stride = 0.0) {
  if (stride <= 0.0) stride = 0.5 * detail::typical_step(traj, t0, t1);
  const std::vector<Peak> s = sample_component(traj, c, t0, t1, stride);
  std::vector<Peak> out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const double a = s[i - 1].value;
    const double b = s[i].value;
    const double d = s[i + 1].value;
    if (!(b > a && b >= d)) continue;
    const double curv = a - 2.0 * b + d;
    double shift = 0.0;
    double value = b;
    if (curv < 0.0) {
      shift = 0.5 * (a - d) / curv;
      value = b - 0.25 * (a - d) * shift;
    }
    out.push_back({s[i].t + shift * stride, value});
  }
  return out;
}

/**
 * Peak-to-peak period of one component on [t_discard, t_end]. Only maxima
 * rising more than 0.5% of the mean level above the mean count.
 */
inline PeriodEstimate estimate_period(const Trajectory& traj, Component c, double t_discard, double stride = 0.0) {
  const double t1 = traj.t1();
  if (!(t1 > t_discard)) throw DomainError("estimate_period: trajectory ends before t_discard");
  if (stride <= 0.0) stride = 0.5 * detail::typical_step(traj, t_discard, t1);
  const std::vector<Peak> s = sample_component(traj, c, t_discard, t1, stride);

  PeriodEstimate r;
  double sum = 0.0;
  r.amplitude_min = std::numeric_limits<double>::infinity();
  r.amplitude_max = -std::numeric_limits<double>::infinity();
  for (const auto& p : s) {
    sum += p.value;
    r.amplitude_min = std::min(r.amplitude_min, p.value);
    r.amplitude_max = std::max(r.amplitude_max, p.value);
  }
  r.mean_level = sum / static_cast<double>(s.size());

  // One peak per excursion above the mean: the highest significant maximum
  // between two consecutive samples below the mean. Excursions cut by the
  // window edges are dropped.
  const double threshold = 0.005 * std::abs(r.mean_level);
  const std::vector<Peak> maxima = find_maxima(traj, c, t_discard, t1, stride);
  std::size_t next_max = 0;
  bool open = s.front().value < r.mean_level;
  bool have = false;
  Peak best;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (; next_max < maxima.size() && maxima[next_max].t <= s[i].t; ++next_max) {
      const Peak& p = maxima[next_max];
      if (p.value - r.mean_level > threshold && (!have || p.value > best.value)) {
        best = p;
        have = true;
      }
    }
    if (s[i].value < r.mean_level) {
      if (open && have) r.peaks.push_back(best);
      open = true;
      have = false;
    }
  }
  if (r.peaks.size() < 3)
    throw NotOscillatingError("estimate_period: " + std::to_string(r.peaks.size()) + " significant maxima of " +
                              to_string(c) + " after t=" + std::to_string(t_discard));

  std::vector<double> gaps;
  for (std::size_t i = 1; i < r.peaks.size(); ++i) gaps.push_back(r.peaks[i].t - r.peaks[i - 1].t);
  const double n = static_cast<double>(gaps.size());
  r.period = std::accumulate(gaps.begin(), gaps.end(), 0.0) / n;
  double ss = 0.0;
  for (double g : gaps) ss += (g - r.period) * (g - r.period);
  r.period_stderr = gaps.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  r.n_cycles = gaps.size();
  r.valid = r.n_cycles >= 3;
  r.confident = r.valid && r.period_stderr <= 0.05 * r.period;
  return r;
}

/// Largest relative deviation from `target` over the final `window` days.
inline ConvergenceResult convergence_check(const Trajectory& traj, const Equilibrium& target, double window,
                                           double theta = 1.0) {
  if (traj.empty() || !(traj.t1() - traj.t0() > window))
    throw DomainError("convergence_check: trajectory shorter than the window");
  const double eps = 1e-9 * theta;
  const double sx = std::max(target.x_star, eps);
  const double sy = std::max(target.y_star, eps);
  const double from = traj.t1() - window;
  ConvergenceResult r;
  auto visit = [&](double x, double y) {
    r.max_dev_x = std::max(r.max_dev_x, std::abs(x - target.x_star) / sx);
    r.max_dev_y = std::max(r.max_dev_y, std::abs(y - target.y_star) / sy);
  };
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& nd = traj.node(i);
    if (nd.t < from) continue;
    visit(nd.x, nd.y);
    if (i + 1 < traj.size()) {
      const State m = traj.eval(0.5 * (nd.t + traj.node(i + 1).t));
      visit(m.x, m.y);
    }
  }
  r.converged_x = r.max_dev_x < 0.02;
  r.converged_y = r.max_dev_y < 0.02;
  r.converged = r.converged_x && r.converged_y;
  return r;
}

/// Compares y(t_end) with β(C) C Y0w, C being the limit of x.
inline Lemma1Result lemma1_check(const Trajectory& traj, const ModelParams& p, const Equilibrium& limit,
                                 double window = 200.0) {
  const ConvergenceResult conv = convergence_check(traj, limit, window, p.hill.theta);
  if (!conv.converged_x) throw DomainError("lemma1_check: x has not converged to the given limit");
  Lemma1Result r;
  r.y_end = traj.back().y;
  r.y_limit = flux(p.hill, limit.x_star) * p.kernel().Y0w;
  r.residual = std::abs(r.y_end - r.y_limit) / std::max(limit.y_star, 1e-9 * p.hill.theta);
  return r;
}

}  // namespace hema
