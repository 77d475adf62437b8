#pragma once

/**
 * @file model.hpp
 * @brief Parameters of the resting/proliferating stem-cell system, the Hill
 *        reintroduction rate and the equilibrium structure.
 */

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hema/error.hpp"
#include "hema/kernel.hpp"

namespace hema {

/// β(x) = beta0 θⁿ / (θⁿ + xⁿ), evaluated as beta0 / (1 + (x/θ)ⁿ).
struct HillRate {
  double beta0 = 1.77;
  double theta = 1.0;
  double n = 3.0;

  void validate() const {
    if (!(beta0 > 0.0) || !std::isfinite(beta0)) throw ConfigError("hill rate: beta0 must be positive and finite");
    if (!(theta > 0.0) || !std::isfinite(theta)) throw ConfigError("hill rate: theta must be positive and finite");
    if (!(n > 0.0) || !std::isfinite(n)) throw ConfigError("hill rate: n must be positive and finite");
  }
};

struct ModelParams {
  double delta = 0.05;
  double gamma = 0.2;
  HillRate hill{};
  DivisionDensity density = DivisionDensity::uniform(0.0, 7.0);

  void validate() const {
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be finite and nonnegative");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be finite and nonnegative");
    hill.validate();
  }

  KernelMoments kernel() const { return moments(density, gamma); }
};

enum class EquilibriumKind { Trivial, Positive };

struct Equilibrium {
  double x_star = 0.0;
  double y_star = 0.0;
  double beta_star = 0.0;  ///< d(xβ(x))/dx at x_star
  EquilibriumKind kind = EquilibriumKind::Trivial;
};

struct ExistenceReport {
  double threshold_alpha = 0.0;  ///< (2K - 1) β(0)
  bool exists_positive = false;
  bool boundary = false;
};

inline double beta_eval(const HillRate& h, double x) {
  if (x < 0.0) throw DomainError("beta_eval: x must be nonnegative");
  return h.beta0 / (1.0 + std::pow(x / h.theta, h.n));
}

inline double beta_prime(const HillRate& h, double x) {
  if (x < 0.0) throw DomainError("beta_prime: x must be nonnegative");
  const double r = x / h.theta;
  const double rn = std::pow(r, h.n);
  if (x == 0.0) {
    if (h.n > 1.0) return 0.0;
    if (h.n == 1.0) return -h.beta0 / h.theta;
    return -std::numeric_limits<double>::infinity();
  }
  const double denom = 1.0 + rn;
  return -h.beta0 * h.n * (rn / r) / h.theta / (denom * denom);
}

/// β(x)·x, the flux into the proliferating phase.
inline double flux(const HillRate& h, double x) { return x <= 0.0 ? 0.0 : x * beta_eval(h, x); }

/// Argmax of x ↦ xβ(x); the map is monotone when n ≤ 1.
inline double map_unimodal_peak(const HillRate& h) {
  if (!(h.n > 1.0)) throw DomainError("map_unimodal_peak: requires n > 1");
  return h.theta / std::pow(h.n - 1.0, 1.0 / h.n);
}

inline ExistenceReport existence(const ModelParams& p) {
  const KernelMoments m = p.kernel();
  ExistenceReport r;
  r.threshold_alpha = (2.0 * m.K - 1.0) * p.hill.beta0;
  r.boundary = std::abs(p.delta - r.threshold_alpha) <= 1e-12 * std::max(1.0, std::abs(r.threshold_alpha));
  r.exists_positive = !r.boundary && p.delta > 0.0 && p.delta < r.threshold_alpha;
  return r;
}

/// Solves (2K - 1) rate(x) = delta for a decreasing rate function by
/// bisection on [0, x_hi], doubling x_hi until the sign changes.
template <class Rate>
double bisect_positive_equilibrium(Rate&& rate, double K, double delta, double tol = 1e-15) {
  auto balance = [&](double x) { return (2.0 * K - 1.0) * rate(x) - delta; };
  if (!(balance(0.0) > 0.0)) throw DomainError("bisect_positive_equilibrium: no positive equilibrium");
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; balance(hi) > 0.0; ++i) {
    if (i > 1100) throw NumericalError("bisect_positive_equilibrium: could not bracket the root");
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 400 && hi - lo > tol * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (balance(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Positive equilibrium from its closed form; requires existence.
inline Equilibrium positive_equilibrium(const ModelParams& p) {
  const KernelMoments m = p.kernel();
  const HillRate& h = p.hill;
  const double ratio = (2.0 * m.K - 1.0) * h.beta0 / p.delta - 1.0;
  if (!(p.delta > 0.0) || !(ratio > 0.0)) throw DomainError("positive_equilibrium: existence condition fails");
  Equilibrium e;
  e.kind = EquilibriumKind::Positive;
  e.x_star = h.theta * std::pow(ratio, 1.0 / h.n);
  e.y_star = beta_eval(h, e.x_star) * e.x_star * m.Y0w;
  e.beta_star = beta_eval(h, e.x_star) + e.x_star * beta_prime(h, e.x_star);
  return e;
}

/// Trivial equilibrium first; the positive one follows when it exists.
inline std::vector<Equilibrium> equilibria(const ModelParams& p) {
  std::vector<Equilibrium> out;
  Equilibrium e0;
  e0.beta_star = p.hill.beta0;
  out.push_back(e0);
  if (existence(p).exists_positive) out.push_back(positive_equilibrium(p));
  return out;
}

/// δ̃ = -δ / (2K + 1), the lower edge of the unconditional stability range of β*.
inline double delta_tilde(const ModelParams& p) { return -p.delta / (2.0 * p.kernel().K + 1.0); }

/// Unbounded monotone growth of the resting population is guaranteed.
inline bool explosion_predicted(const ModelParams& p, double mu) {
  if (p.delta != 0.0 || !(p.hill.n > 1.0)) return false;
  if (!(p.kernel().K > 0.5)) return false;
  return mu >= map_unimodal_peak(p.hill);
}

/// Bound on the limsup of x(t) for δ > 0: x1 = 2Kβ(0)x0/δ where 2Kβ(x0) = δ
/// (x0 = 0 when 2Kβ(0) < δ).
inline double boundedness_bound(const ModelParams& p) {
  if (!(p.delta > 0.0)) throw DomainError("boundedness_bound: requires delta > 0");
  const double K = p.kernel().K;
  const HillRate& h = p.hill;
  const double ratio = 2.0 * K * h.beta0 / p.delta - 1.0;
  const double x0 = ratio > 0.0 ? h.theta * std::pow(ratio, 1.0 / h.n) : 0.0;
  return 2.0 * K * h.beta0 * x0 / p.delta;
}

}  // namespace hema
