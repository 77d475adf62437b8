#pragma once

/**
 * @file verify.hpp
 * @brief Self-check suite: every numerical layer against an independent
 *        oracle (closed forms, finite differences, bisection, step halving,
 *        the explicit y representation and the limit identity for y).
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <string>
#include <vector>

#include "hema/diagnostics.hpp"
#include "hema/error.hpp"
#include "hema/history.hpp"
#include "hema/integrator.hpp"
#include "hema/kernel.hpp"
#include "hema/model.hpp"

namespace hema {

struct CheckResult {
  std::string id;
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyOptions {
  double order_step = 0.04;  ///< coarse step of the halving test
  double step = 0.01;        ///< step of the long runs
  bool gamma_zero = false;   ///< also run the γ = 0 checks
};

/// Closed forms of K, C(ω), S(ω) for Uniform[0, T].
struct UniformClosedForm {
  double T;
  double gamma;

  double K() const { return gamma == 0.0 ? 1.0 : -std::expm1(-gamma * T) / (gamma * T); }

  CosSin cos_sin(double w) const {
    if (w == 0.0) return {K(), 0.0};
    const double e = std::exp(-gamma * T);
    const double den = T * (gamma * gamma + w * w);
    const double c = (gamma - e * (gamma * std::cos(w * T) - w * std::sin(w * T))) / den;
    const double s = (w - e * (gamma * std::sin(w * T) + w * std::cos(w * T))) / den;
    return {c, s};
  }
};

namespace detail {

inline CheckResult make_check(std::string id, std::string name, double value, double tol, bool passed,
                              std::string detail = {}) {
  CheckResult c;
  c.id = std::move(id);
  c.name = std::move(name);
  c.value = value;
  c.tolerance = tol;
  c.passed = passed;
  c.detail = std::move(detail);
  return c;
}

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

inline CheckResult failed_check(std::string id, std::string name, const std::exception& e) {
  return make_check(std::move(id), std::move(name), NAN, 0.0, false, e.what());
}

inline CheckResult check_closed_forms() {
  ModelParams p;
  const UniformClosedForm cf{7.0, p.gamma};
  double err = std::abs(p.kernel().K - cf.K());
  for (double w : {0.0, 0.1, 1.0, 5.0, 20.0}) {
    const CosSin q = weighted_cos_sin(p.density, p.gamma, w);
    const CosSin e = cf.cos_sin(w);
    err = std::max({err, std::abs(q.C - e.C), std::abs(q.S - e.S)});
  }
  return make_check("7a", "K, C, S vs closed forms", err, 1e-10, err <= 1e-10);
}

inline CheckResult check_cos_sin_prime() {
  double err = 0.0;
  auto fd_err = [](const DivisionDensity& d, double gamma, double w) {
    const double h = 1e-5;
    const CosSin a = weighted_cos_sin(d, gamma, w + h);
    const CosSin b = weighted_cos_sin(d, gamma, w - h);
    const CosSin q = weighted_cos_sin_prime(d, gamma, w);
    return std::max(std::abs(q.C - (a.C - b.C) / (2 * h)), std::abs(q.S - (a.S - b.S) / (2 * h)));
  };
  err = std::max(err, fd_err(DivisionDensity::uniform(0.0, 7.0), 0.2, 0.5));
  err = std::max(err, fd_err(DivisionDensity::tabulated({1.0, 2.0, 3.0}, {0.0, 1.0, 0.0}), 0.2, 1.0));
  return make_check("7f", "C', S' vs central differences", err, 1e-6, err <= 1e-6);
}

inline CheckResult check_equilibrium_bisection() {
  double err = 0.0;
  for (double n : {2.42, 2.53, 3.0, 4.0}) {
    ModelParams p;
    p.hill.n = n;
    const double closed = positive_equilibrium(p).x_star;
    const double bis =
        bisect_positive_equilibrium([&](double x) { return beta_eval(p.hill, x); }, p.kernel().K, p.delta);
    err = std::max(err, std::abs(closed - bis));
  }
  return make_check("7e", "x* closed form vs bisection", err, 1e-10, err <= 1e-10);
}

inline CheckResult check_y_explicit(const Trajectory& run, const ModelParams& p) {
  double err = 0.0;
  for (double t : {100.0, 500.0}) {
    const double yi = run.y(t);
    err = std::max(err, std::abs(y_explicit(run, p, t) - yi) / std::abs(yi));
  }
  return make_check("7b", "y_explicit vs integrated y at t=100,500 (n=3)", err, 1e-5, err <= 1e-5);
}

inline CheckResult check_lemma1(const Trajectory& run, const ModelParams& p, const std::string& id,
                                const std::string& name) {
  const Lemma1Result r = lemma1_check(run, p, positive_equilibrium(p));
  return make_check(id, name, r.residual, 1e-3, r.residual < 1e-3);
}

/// Ratio of the errors at t = 100 for steps h and h/2, both against h/8.
inline CheckResult check_order(double h) {
  ModelParams p;
  p.hill.n = 2.42;
  const Trajectory history = build_history(p, {});
  auto run = [&](double step) {
    IntegratorConfig c;
    c.step = step;
    c.t_end = 100.0;
    return integrate(p, history, c).eval(100.0);
  };
  auto f1 = std::async(std::launch::async, run, h);
  auto f2 = std::async(std::launch::async, run, h / 2);
  const State ref = run(h / 8);
  const State a = f1.get();
  const State b = f2.get();
  const double e1 = std::max(std::abs(a.x - ref.x), std::abs(a.y - ref.y));
  const double e2 = std::max(std::abs(b.x - ref.x), std::abs(b.y - ref.y));
  const double factor = e1 / e2;
  const bool ok = std::isfinite(factor) && factor >= 8.0 && factor <= 32.0;
  return make_check("7d", "order factor under step halving (n=2.42, t=100)", factor, 0.0, ok,
                    "e(h)=" + sci(e1) + " e(h/2)=" + sci(e2) + " h=" + sci(h));
}

inline CheckResult check_boundedness(const Trajectory& run, const ModelParams& p) {
  double hist_max = 0.0;
  double late_max = 0.0;
  for (const auto& nd : run.nodes()) {
    if (nd.t <= p.density.tau_max()) hist_max = std::max(hist_max, nd.x);
    if (nd.t >= 500.0) late_max = std::max(late_max, nd.x);
  }
  const double bound = std::max(hist_max, boundedness_bound(p)) * 1.01;
  return make_check("P2", "max x on [500, t_end] within the boundedness bound", late_max, bound, late_max <= bound);
}

inline CheckResult check_explosion(double step) {
  ModelParams p;
  p.delta = 0.0;
  IntegratorConfig c;
  c.step = step;
  c.t_end = 400.0;
  const Trajectory run = simulate(p, {}, c);
  const double tau = p.density.tau_max();
  bool increasing = true;
  double prev = run.x(tau);
  const double x_tau = prev;
  for (const auto& nd : run.nodes()) {
    if (nd.t <= tau) continue;
    if (!(nd.x > prev)) increasing = false;
    prev = nd.x;
  }
  const double growth = run.back().x / x_tau;
  return make_check("P3", "delta=0: x strictly increasing on [tau_max, 400]", growth, 0.0,
                    explosion_predicted(p, 1.0) && increasing,
                    std::string(increasing ? "" : "x not strictly increasing; ") + "x(400)/x(tau_max)=" +
                        std::to_string(growth));
}

inline std::vector<CheckResult> gamma_zero_checks(double step) {
  std::vector<CheckResult> out;
  ModelParams p;
  p.gamma = 0.0;
  const KernelMoments m = p.kernel();
  const double err = std::max(std::abs(m.K - 1.0), std::abs(m.Y0w - 3.5));
  out.push_back(make_check("G1", "gamma=0: K = 1, Y0w = mean of f", err, 1e-12, err <= 1e-12));

  const Equilibrium e = positive_equilibrium(p);
  const double yerr = std::abs(e.y_star - p.delta * e.x_star * 3.5) / e.y_star;
  out.push_back(make_check("G2", "gamma=0: y* = delta x* int tau f", yerr, 1e-12, yerr <= 1e-12));

  const double yinit = initial_y(p, 1.0);
  const double ierr = std::abs(yinit - flux(p.hill, 1.0) * 3.5);
  out.push_back(make_check("G3", "gamma=0: y(0) = beta(mu) mu int tau f", ierr, 1e-12, ierr <= 1e-12));

  try {
    ModelParams s = p;
    s.hill.n = 1.0;
    IntegratorConfig c;
    c.step = step;
    c.t_end = 1000.0;
    const Trajectory run = simulate(s, {}, c);
    out.push_back(check_lemma1(run, s, "G4", "gamma=0: Lemma 1 residual (n=1)"));
  } catch (const std::exception& ex) {
    out.push_back(failed_check("G4", "gamma=0: Lemma 1 residual (n=1)", ex));
  }
  return out;
}

}  // namespace detail

/// Runs the suite; long runs execute concurrently.
inline std::vector<CheckResult> run_verify(const VerifyOptions& opt = {}) {
  std::vector<CheckResult> out;
  auto guarded = [](std::string id, std::string name, auto&& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      return detail::failed_check(std::move(id), std::move(name), e);
    }
  };

  auto order = std::async(std::launch::async, [&] {
    return guarded("7d", "order factor under step halving (n=2.42, t=100)",
                   [&] { return detail::check_order(opt.order_step); });
  });
  auto n3 = std::async(std::launch::async, [&] {
    std::vector<CheckResult> r;
    try {
      ModelParams p;
      IntegratorConfig c;
      c.step = opt.step;
      c.t_end = 1000.0;
      const Trajectory run = simulate(p, {}, c);
      r.push_back(guarded("7b", "y_explicit vs integrated y at t=100,500 (n=3)",
                          [&] { return detail::check_y_explicit(run, p); }));
      r.push_back(guarded("P2", "max x on [500, t_end] within the boundedness bound",
                          [&] { return detail::check_boundedness(run, p); }));
    } catch (const std::exception& e) {
      r.push_back(detail::failed_check("7b", "y_explicit vs integrated y at t=100,500 (n=3)", e));
    }
    return r;
  });
  auto n242 = std::async(std::launch::async, [&] {
    return guarded("7c", "Lemma 1 residual (n=2.42)", [&] {
      ModelParams p;
      p.hill.n = 2.42;
      IntegratorConfig c;
      c.step = opt.step;
      c.t_end = 1000.0;
      return detail::check_lemma1(simulate(p, {}, c), p, "7c", "Lemma 1 residual (n=2.42)");
    });
  });
  auto blowup = std::async(std::launch::async, [&] {
    return guarded("P3", "delta=0: x strictly increasing on [tau_max, 400]",
                   [&] { return detail::check_explosion(opt.step); });
  });

  out.push_back(guarded("7a", "K, C, S vs closed forms", [] { return detail::check_closed_forms(); }));
  for (auto& c : n3.get()) out.push_back(c);
  out.push_back(n242.get());
  out.push_back(order.get());
  out.push_back(guarded("7e", "x* closed form vs bisection", [] { return detail::check_equilibrium_bisection(); }));
  out.push_back(guarded("7f", "C', S' vs central differences", [] { return detail::check_cos_sin_prime(); }));
  out.push_back(blowup.get());
  if (opt.gamma_zero)
    for (auto& c : detail::gamma_zero_checks(opt.step)) out.push_back(c);

  std::stable_sort(out.begin(), out.end(), [](const CheckResult& a, const CheckResult& b) { return a.id < b.id; });
  return out;
}

inline bool all_passed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

}  // namespace hema
