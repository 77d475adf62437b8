#pragma once

/**
 * @file integrator.hpp
 * @brief Fixed-step integration of the distributed-delay system
 *
 *   x' = -(δ + β(x)) x + 2 D(t),    y' = -γ y + β(x) x - D(t),
 *   D(t) = ∫_{τmin}^{τmax} e^{-γτ} f(τ) β(x(t-τ)) x(t-τ) dτ,
 *
 * by the classical four-stage Runge-Kutta method with cubic-Hermite dense
 * output. D is evaluated by Gauss-Legendre quadrature split at every stored
 * node, so each quadrature panel sees one smooth cubic. When τmin is zero the
 * stages need x on the step being computed; that part of D is read from a
 * provisional Hermite extension that is refined by fixed-point sweeps.
 *
 * Before t = 0 the flux β(x)x is the constant `pre_flux`, which is how the
 * history construction feeds the initial proliferating cohort into D.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hema/error.hpp"
#include "hema/kernel.hpp"
#include "hema/model.hpp"
#include "hema/quadrature.hpp"
#include "hema/trajectory.hpp"

namespace hema {

struct IntegratorConfig {
  double step = 0.01;
  int correction_passes = 2;
  double t_end = 1000.0;

  void validate(const DivisionDensity& d) const {
    if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("integrator: step must be positive");
    if (step > d.width() / 16.0)
      throw ConfigError("integrator: step must not exceed (tau_max - tau_min)/16 = " + std::to_string(d.width() / 16.0));
    if (correction_passes < 1) throw ConfigError("integrator: correction_passes must be >= 1");
    if (!std::isfinite(t_end)) throw ConfigError("integrator: t_end must be finite");
  }
};

namespace detail {

/// Quadrature terms of D(t) that read the flux at a cached Gauss node of a
/// stored segment.
struct CachedTerm {
  std::size_t lag;   ///< segment index = n - lag, n = index of the last accepted node
  std::size_t node;
  std::size_t back;  ///< 8 lag - node: flat offset of the cached value behind 8 n
  double weight;
};

/// Terms that evaluate the interpolant at local coordinate theta.
/// lag == 0 refers to the step in progress.
struct DirectTerm {
  std::size_t lag;
  double theta;
  double weight;
};

struct DelayPlan {
  std::vector<CachedTerm> cached;
  std::vector<DirectTerm> direct_past;
  std::vector<DirectTerm> direct_current;
  double pre_weight = 0.0;  ///< multiplies the constant pre-history flux
  std::size_t max_lag = 0;
  double offset = 0.0;  ///< t - t_n
  double step = 0.0;    ///< width of the step in progress
};

/// Builds the quadrature plan of D at time t = t_n + offset, where t_n is the
/// time of node n of `traj` and the step in progress is [t_n, t_n + step].
inline DelayPlan build_delay_plan(const Trajectory& traj, std::size_t n, double offset, double step,
                                  const DivisionDensity& d, double gamma, const KernelCumulative& cumulative,
                                  bool has_pre) {
  const auto& nodes = traj.nodes();
  const double t_n = nodes[n].t;
  const double t = t_n + offset;
  const double tau_lo = d.tau_min();
  const double tau_hi = d.tau_max();
  const double tol = 1e-9 * std::max(step, 1e-300) + 1e-14 * std::abs(t);

  DelayPlan plan;
  plan.offset = offset;
  plan.step = step;

  std::vector<double> cuts(d.breakpoints().begin(), d.breakpoints().end());
  if (offset > tau_lo && offset < tau_hi) cuts.push_back(offset);
  {
    const double s_lo = t - tau_hi;
    const double s_hi = t - tau_lo;
    auto first = std::lower_bound(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(n) + 1, s_lo,
                                  [](const TrajectoryNode& a, double v) { return a.t < v; });
    for (auto it = first; it != nodes.begin() + static_cast<std::ptrdiff_t>(n) + 1 && it->t <= s_hi; ++it) {
      const double tau = t - it->t;
      if (tau > tau_lo && tau < tau_hi) cuts.push_back(tau);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> breaks;
  breaks.reserve(cuts.size());
  for (double c : cuts) {
    if (breaks.empty() || c - breaks.back() > tol) breaks.push_back(c);
  }
  breaks.front() = tau_lo;
  breaks.back() = tau_hi;

  auto weight_fn = [&](double tau) { return std::exp(-gamma * tau) * d.pdf(tau); };
  plan.cached.reserve(8 * breaks.size());

  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    const double s_mid = t - 0.5 * (a + b);
    if (s_mid < nodes.front().t) {
      if (!has_pre)
        throw CoverageError("delay integral at t=" + std::to_string(t) + " needs the solution before t=" +
                            std::to_string(nodes.front().t));
      plan.pre_weight += cumulative(b) - cumulative(a);
      continue;
    }
    if (s_mid > t_n) {
      if (!(step > 0.0))
        throw CoverageError("delay integral at t=" + std::to_string(t) + " needs the solution after t=" +
                            std::to_string(t_n));
      for (std::size_t k = 0; k < 8; ++k) {
        const double tau = a + quad::kGL8Theta[k] * (b - a);
        plan.direct_current.push_back({0, (t - tau - t_n) / step, quad::kGL8Weight[k] * (b - a) * weight_fn(tau)});
      }
      continue;
    }
    const std::size_t seg = traj.segment_index(s_mid);
    const double tl = nodes[seg].t;
    const double tr = nodes[seg + 1].t;
    const std::size_t lag = n - seg;
    plan.max_lag = std::max(plan.max_lag, lag);
    if (std::abs(t - b - tl) <= tol && std::abs(t - a - tr) <= tol) {
      for (std::size_t k = 0; k < 8; ++k) {
        const double s = tl + quad::kGL8Theta[k] * (tr - tl);
        plan.cached.push_back({lag, k, 8 * lag - k, quad::kGL8Weight[k] * (tr - tl) * weight_fn(t - s)});
      }
    } else {
      for (std::size_t k = 0; k < 8; ++k) {
        const double tau = a + quad::kGL8Theta[k] * (b - a);
        plan.direct_past.push_back({lag, (t - tau - tl) / (tr - tl), quad::kGL8Weight[k] * (b - a) * weight_fn(tau)});
      }
    }
  }
  return plan;
}

}  // namespace detail

/**
 * Incremental integrator owning the growing trajectory. The trajectory passed
 * in must carry node derivatives; a single-node trajectory has them filled in
 * from the right-hand side.
 */
class DelayStepper {
 public:
  DelayStepper(ModelParams params, Trajectory init, int correction_passes, std::optional<double> pre_flux)
      : params_(std::move(params)),
        cumulative_(params_.density, params_.gamma),
        traj_(std::move(init)),
        passes_(correction_passes),
        pre_flux_(pre_flux) {
    if (traj_.empty()) throw ConfigError("DelayStepper: empty initial trajectory");
    if (passes_ < 1) throw ConfigError("DelayStepper: correction_passes must be >= 1");
    for (std::size_t s = 0; s + 1 < traj_.size(); ++s) cache_segment(s);
    if (traj_.size() == 1) refresh_last_derivative();
    uniform_from_ = traj_.size() - 1;
    if (traj_.size() >= 2) {
      const double h = width(traj_.size() - 2);
      std::size_t u = traj_.size() - 2;
      while (u > 0 && std::abs(width(u - 1) - h) <= 1e-9 * h) --u;
      uniform_from_ = u;
      uniform_step_ = h;
    }
  }

  const Trajectory& trajectory() const noexcept { return traj_; }
  Trajectory release() && { return std::move(traj_); }
  const ModelParams& params() const noexcept { return params_; }

  /// D(t) at the last accepted node, from stored data only.
  double delay_at_last() {
    const std::size_t n = traj_.size() - 1;
    auto plan = detail::build_delay_plan(traj_, n, 0.0, 0.0, params_.density, params_.gamma, cumulative_,
                                         pre_flux_.has_value());
    return eval_past(plan, n);
  }

  /// Advances by nominal steps of h (the last one shortened) until t_end.
  void advance_to(double t_end, double h) {
    const double t_start = traj_.t1();
    if (!(t_end > t_start)) return;
    const double span = t_end - t_start;
    auto full = static_cast<std::size_t>(std::floor(span / h + 1e-9));
    const double rest = span - static_cast<double>(full) * h;
    const bool snap = rest <= 1e-9 * h;
    for (std::size_t k = 1; k <= full; ++k) {
      const double target = (snap && k == full) ? t_end : t_start + static_cast<double>(k) * h;
      step_to(target);
    }
    if (!snap) step_to(t_end);
  }

  /// Advances by `count` equal steps to t_end.
  void advance_steps(double t_end, std::size_t count) {
    const double t_start = traj_.t1();
    const double h = (t_end - t_start) / static_cast<double>(count);
    for (std::size_t k = 1; k <= count; ++k) step_to(k == count ? t_end : t_start + static_cast<double>(k) * h);
  }

  /// One Runge-Kutta step ending exactly at t_next.
  void step_to(double t_next) {
    const std::size_t n = traj_.size() - 1;
    const TrajectoryNode cur = traj_.back();
    const double h = t_next - cur.t;
    if (!(h > 0.0)) throw NumericalError("DelayStepper: non-increasing step target");

    const detail::DelayPlan& half = plan_for(n, 0.5 * h, h, slot_half_);
    const double hist_half = eval_past(half, n);
    const detail::DelayPlan& one = plan_for(n, h, h, slot_one_);
    const double hist_one = eval_past(one, n);

    const double gamma = params_.gamma;
    double xp = 0.0;
    double fp = 0.0;
    if (n >= 1) {
      const auto& a = traj_.node(n - 1);
      const double hp = cur.t - a.t;
      const double theta = 1.0 + h / hp;
      xp = detail::hermite(a.x, a.dx, cur.x, cur.dx, hp, theta);
      fp = detail::hermite_derivative(a.x, a.dx, cur.x, cur.dx, hp, theta);
    } else {
      xp = cur.x + h * cur.dx;
      fp = cur.dx;
    }

    double x_new = cur.x;
    double y_new = cur.y;
    double d_end = 0.0;
    for (int pass = 0; pass <= passes_; ++pass) {
      const double d_half = hist_half + eval_current(half, cur, xp, fp, h);
      const double d_one = hist_one + eval_current(one, cur, xp, fp, h);

      const double k1x = cur.dx;
      const double k1y = cur.dy;
      const double x2 = cur.x + 0.5 * h * k1x;
      const double y2 = cur.y + 0.5 * h * k1y;
      const double k2x = rhs_x(x2, d_half);
      const double k2y = rhs_y(x2, y2, d_half, gamma);
      const double x3 = cur.x + 0.5 * h * k2x;
      const double y3 = cur.y + 0.5 * h * k2y;
      const double k3x = rhs_x(x3, d_half);
      const double k3y = rhs_y(x3, y3, d_half, gamma);
      const double x4 = cur.x + h * k3x;
      const double y4 = cur.y + h * k3y;
      const double k4x = rhs_x(x4, d_one);
      const double k4y = rhs_y(x4, y4, d_one, gamma);

      x_new = cur.x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
      y_new = cur.y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
      d_end = hist_one + eval_current(one, cur, x_new, fp, h);
      fp = rhs_x(x_new, d_end);
      xp = x_new;
    }

    TrajectoryNode next;
    next.t = t_next;
    next.x = x_new;
    next.y = y_new;
    next.dx = fp;
    next.dy = rhs_y(x_new, y_new, d_end, gamma);
    if (!std::isfinite(next.x) || !std::isfinite(next.y) || !std::isfinite(next.dx) || !std::isfinite(next.dy))
      throw NumericalError("non-finite state at t=" + std::to_string(t_next));
    traj_.push(next);
    cache_segment(n);

    if (std::abs(h - uniform_step_) > 1e-9 * h) {
      uniform_from_ = n;
      uniform_step_ = h;
    }
  }

  double rhs_x(double x, double delay) const {
    const double xc = std::max(x, 0.0);
    return -(params_.delta + beta_eval(params_.hill, xc)) * x + 2.0 * delay;
  }

  double rhs_y(double x, double y, double delay, double gamma) const {
    return -gamma * y + flux(params_.hill, x) - delay;
  }

  /// Recomputes dx, dy at the last node from stored data.
  void refresh_last_derivative() {
    const double dly = delay_at_last();
    const TrajectoryNode& last = traj_.back();
    traj_.set_back_derivatives(rhs_x(last.x, dly), rhs_y(last.x, last.y, dly, params_.gamma));
  }

 private:
  struct PlanSlot {
    detail::DelayPlan plan;
    bool reusable = false;
  };

  double width(std::size_t seg) const { return traj_.node(seg + 1).t - traj_.node(seg).t; }

  void cache_segment(std::size_t seg) {
    if (pnode_.size() < 8 * (seg + 1)) pnode_.resize(8 * (seg + 1));
    for (std::size_t k = 0; k < 8; ++k)
      pnode_[8 * seg + k] = flux(params_.hill, traj_.x_on(seg, quad::kGL8Theta[k]));
  }

  /// Returns a plan for D at t_n + offset, reusing the slot's plan while the
  /// window only touches equally spaced segments of the current width.
  const detail::DelayPlan& plan_for(std::size_t n, double offset, double h, PlanSlot& slot) {
    if (slot.reusable && std::abs(slot.plan.step - h) <= 1e-9 * h && n >= slot.plan.max_lag &&
        n - slot.plan.max_lag >= uniform_from_ && std::abs(uniform_step_ - h) <= 1e-9 * h)
      return slot.plan;
    slot.plan = detail::build_delay_plan(traj_, n, offset, h, params_.density, params_.gamma, cumulative_,
                                         pre_flux_.has_value());
    const bool uniform_window = std::abs(uniform_step_ - h) <= 1e-9 * h && n >= slot.plan.max_lag &&
                                n - slot.plan.max_lag >= uniform_from_;
    slot.reusable = uniform_window && slot.plan.pre_weight == 0.0;
    return slot.plan;
  }

  double eval_past(const detail::DelayPlan& plan, std::size_t n) const {
    double acc = 0.0;
    const double* base = pnode_.data() + 8 * n;
    for (const auto& c : plan.cached) acc += c.weight * base[-static_cast<std::ptrdiff_t>(c.back)];
    for (const auto& d : plan.direct_past) acc += d.weight * flux(params_.hill, traj_.x_on(n - d.lag, d.theta));
    if (plan.pre_weight != 0.0) acc += plan.pre_weight * pre_flux_.value_or(0.0);
    return acc;
  }

  double eval_current(const detail::DelayPlan& plan, const TrajectoryNode& cur, double xp, double fp,
                      double h) const {
    double acc = 0.0;
    for (const auto& d : plan.direct_current)
      acc += d.weight * flux(params_.hill, detail::hermite(cur.x, cur.dx, xp, fp, h, d.theta));
    return acc;
  }

  ModelParams params_;
  KernelCumulative cumulative_;
  Trajectory traj_;
  int passes_;
  std::optional<double> pre_flux_;
  std::vector<double> pnode_;
  std::size_t uniform_from_ = 0;
  double uniform_step_ = 0.0;
  PlanSlot slot_half_;
  PlanSlot slot_one_;
};

/// D(t) evaluated by direct quadrature on a stored trajectory; the window
/// [t - τmax, t - τmin] must lie inside it.
inline double delay_functional(const Trajectory& traj, const ModelParams& params, double t) {
  if (traj.empty()) throw CoverageError("delay_functional: empty trajectory");
  const DivisionDensity& d = params.density;
  if (t - d.tau_max() < traj.t0() - 1e-12 * std::max(1.0, std::abs(t)) ||
      t - d.tau_min() > traj.t1() + 1e-12 * std::max(1.0, std::abs(t)))
    throw CoverageError("delay_functional: trajectory does not span [t - tau_max, t - tau_min] at t=" +
                        std::to_string(t));
  auto it = std::upper_bound(traj.nodes().begin(), traj.nodes().end(), t,
                             [](double v, const TrajectoryNode& nd) { return v < nd.t; });
  std::size_t n = static_cast<std::size_t>(it - traj.nodes().begin());
  n = n == 0 ? 0 : n - 1;
  KernelCumulative cumulative(d, params.gamma);
  const double offset = t - traj.node(n).t;
  double step = 0.0;
  if (n + 1 < traj.size()) step = traj.node(n + 1).t - traj.node(n).t;
  auto plan = detail::build_delay_plan(traj, n, offset, step, d, params.gamma, cumulative, false);
  double acc = 0.0;
  for (const auto& c : plan.cached)
    acc += c.weight * flux(params.hill, traj.x_on(n - c.lag, quad::kGL8Theta[c.node]));
  for (const auto& p : plan.direct_past) acc += p.weight * flux(params.hill, traj.x_on(n - p.lag, p.theta));
  for (const auto& p : plan.direct_current) acc += p.weight * flux(params.hill, traj.x_on(n, p.theta));
  return acc;
}

/// Continues `history` (which must reach at least τmax) up to cfg.t_end.
inline Trajectory integrate(const ModelParams& params, Trajectory history, const IntegratorConfig& cfg) {
  params.validate();
  cfg.validate(params.density);
  if (history.empty() || history.t1() < params.density.tau_max() - 1e-12)
    throw CoverageError("integrate: history must cover [0, tau_max]");
  if (!(cfg.t_end > history.t1())) throw ConfigError("integrate: t_end must exceed the end of the history");
  DelayStepper stepper(params, std::move(history), cfg.correction_passes, std::nullopt);
  stepper.advance_to(cfg.t_end, cfg.step);
  return std::move(stepper).release();
}

/**
 * y(t) = ∫ f(τ) ∫_0^τ e^{-γu} β(x(t-u)) x(t-u) du dτ for t ≥ τmax, by nested
 * quadrature directly on the stored x. Independent of the integrated y.
 */
inline double y_explicit(const Trajectory& traj, const ModelParams& params, double t) {
  const DivisionDensity& d = params.density;
  if (t < d.tau_max()) throw DomainError("y_explicit: requires t >= tau_max");
  if (!traj.covers(t) || !traj.covers(t - d.tau_max()))
    throw CoverageError("y_explicit: trajectory does not span [t - tau_max, t]");
  const double gamma = params.gamma;

  // u-breakpoints where the interpolant changes piece
  std::vector<double> ucuts{0.0};
  for (const auto& nd : traj.nodes()) {
    const double u = t - nd.t;
    if (u > 0.0 && u < d.tau_max()) ucuts.push_back(u);
  }
  ucuts.push_back(d.tau_max());
  std::sort(ucuts.begin(), ucuts.end());

  auto inner = [&](double u) {
    const double s = t - u;
    return std::exp(-gamma * u) * flux(params.hill, traj.x(s));
  };
  auto inner_between = [&](double u0, double u1) {
    double acc = 0.0;
    auto it = std::upper_bound(ucuts.begin(), ucuts.end(), u0);
    double a = u0;
    while (it != ucuts.end() && *it < u1) {
      acc += quad::gauss8(inner, a, *it);
      a = *it;
      ++it;
    }
    return acc + quad::gauss8(inner, a, u1);
  };

  // Outer panels: density knots plus the same cuts restricted to the support.
  std::vector<double> obreaks(d.breakpoints().begin(), d.breakpoints().end());
  for (double u : ucuts)
    if (u > d.tau_min() && u < d.tau_max()) obreaks.push_back(u);
  std::sort(obreaks.begin(), obreaks.end());
  obreaks.erase(std::unique(obreaks.begin(), obreaks.end()), obreaks.end());

  double total = 0.0;
  double u_prev = 0.0;
  double i_prev = 0.0;
  for (std::size_t p = 0; p + 1 < obreaks.size(); ++p) {
    const double a = obreaks[p];
    const double b = obreaks[p + 1];
    if (!(b > a)) continue;
    for (std::size_t k = 0; k < 8; ++k) {
      const double tau = a + quad::kGL8Theta[k] * (b - a);
      i_prev += inner_between(u_prev, tau);
      u_prev = tau;
      total += quad::kGL8Weight[k] * (b - a) * d.pdf(tau) * i_prev;
    }
  }
  return total;
}

}  // namespace hema
