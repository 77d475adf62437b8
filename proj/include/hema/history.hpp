#pragma once

/**
 * @file history.hpp
 * @brief Initial segment (x, y) on [0, τmax] generated from the initial
 *        resting mass μ.
 *
 * The initial proliferating cohort enters the right-hand side only through
 * β(μ)μ ∫_{max(t, τmin)}^{τmax} e^{-γτ} f(τ) dτ, i.e. it acts as a constant
 * flux β(μ)μ for every delayed argument before t = 0. On [0, τmin] no new cell
 * can have divided yet and the x equation is an ODE; on [τmin, τmax] new and
 * initial cohorts both contribute.
 */

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>

#include "hema/error.hpp"
#include "hema/integrator.hpp"
#include "hema/model.hpp"
#include "hema/trajectory.hpp"

namespace hema {

struct HistoryConfig {
  double mu = 1.0;
  double step = 0.0;  ///< <= 0 selects τmax / 2800

  double resolved_step(const DivisionDensity& d) const { return step > 0.0 ? step : d.tau_max() / 2800.0; }

  void validate() const {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("history: mu must be finite and nonnegative");
    if (!std::isfinite(step)) throw ConfigError("history: step must be finite");
  }
};

/// y(0) = β(μ)μ ∫ f (1 - e^{-γτ})/γ dτ  (∫ τ f dτ when γ = 0).
inline double initial_y(const ModelParams& p, double mu) { return flux(p.hill, mu) * p.kernel().Y0w; }

/// Solution on [0, τmin]; a single node at t = 0 when τmin = 0.
inline Trajectory stage1_ode(const ModelParams& p, const HistoryConfig& cfg) {
  p.validate();
  cfg.validate();
  TrajectoryNode start;
  start.t = 0.0;
  start.x = cfg.mu;
  start.y = initial_y(p, cfg.mu);
  DelayStepper stepper(p, Trajectory(start), 2, flux(p.hill, cfg.mu));
  const double tau_min = p.density.tau_min();
  if (tau_min > 0.0) {
    const double h = cfg.resolved_step(p.density);
    const auto count = static_cast<std::size_t>(std::max(1.0, std::ceil(tau_min / h - 1e-9)));
    stepper.advance_steps(tau_min, count);
  }
  return std::move(stepper).release();
}

/// Continues the first stage across [τmin, τmax] and returns the full history.
inline Trajectory stage2_nonautonomous(const ModelParams& p, const HistoryConfig& cfg, Trajectory stage1) {
  p.validate();
  cfg.validate();
  const double tau_min = p.density.tau_min();
  const double tau_max = p.density.tau_max();
  if (stage1.empty() || stage1.t0() != 0.0 || std::abs(stage1.t1() - tau_min) > 1e-12 * std::max(1.0, tau_min))
    throw CoverageError("stage2_nonautonomous: first stage must cover [0, tau_min]");
  DelayStepper stepper(p, std::move(stage1), 2, flux(p.hill, cfg.mu));
  const double h = cfg.resolved_step(p.density);
  const auto count = static_cast<std::size_t>(std::max(1.0, std::ceil((tau_max - tau_min) / h - 1e-9)));
  stepper.advance_steps(tau_max, count);
  return std::move(stepper).release();
}

inline Trajectory build_history(const ModelParams& p, const HistoryConfig& cfg) {
  return stage2_nonautonomous(p, cfg, stage1_ode(p, cfg));
}

/// History plus integration up to t_end in one call.
inline Trajectory simulate(const ModelParams& p, const HistoryConfig& hcfg, const IntegratorConfig& icfg) {
  return integrate(p, build_history(p, hcfg), icfg);
}

}  // namespace hema
