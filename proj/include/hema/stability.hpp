#pragma once

/**
 * @file stability.hpp
 * @brief Linear stability of the two equilibria: characteristic functions,
 *        Hopf crossing search and a complex-plane root probe.
 *
 * Both characteristic functions have the form
 *   Δ(λ) = λ + δ + b - 2b L(λ + γ),   L(s) = ∫ e^{-sτ} f(τ) dτ,
 * with b = β(0) at the trivial equilibrium and b = β* at the positive one.
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "hema/error.hpp"
#include "hema/kernel.hpp"
#include "hema/model.hpp"

namespace hema {

enum class TrivialVerdict { GloballyStable, Unstable, Boundary };

enum class PositiveVerdict { StableByTheorem2, StablePreHopf, HopfCritical, UnstablePostHopf, Indeterminate };

inline const char* to_string(TrivialVerdict v) {
  switch (v) {
    case TrivialVerdict::GloballyStable: return "GloballyStable";
    case TrivialVerdict::Unstable: return "Unstable";
    case TrivialVerdict::Boundary: return "Boundary";
  }
  return "?";
}

inline const char* to_string(PositiveVerdict v) {
  switch (v) {
    case PositiveVerdict::StableByTheorem2: return "StableByTheorem2";
    case PositiveVerdict::StablePreHopf: return "StablePreHopf";
    case PositiveVerdict::HopfCritical: return "HopfCritical";
    case PositiveVerdict::UnstablePostHopf: return "UnstablePostHopf";
    case PositiveVerdict::Indeterminate: return "Indeterminate";
  }
  return "?";
}

struct CrossingCandidate {
  double omega = 0.0;
  double C = 0.0;
  double S = 0.0;
  double beta_star_c = 0.0;  ///< -δ / (1 - 2C)
  double g_prime = 0.0;
};

struct HopfResult {
  std::vector<CrossingCandidate> candidates;  ///< sorted by ω
  CrossingCandidate selected;
  double beta_star_c = 0.0;
  double omega_c = 0.0;
  double period = 0.0;
  std::optional<double> n_c;  ///< empty when the inversion has no bracket in (1, 10]
  double transversality = 0.0;  ///< -C'(ω_c) - δ (S/ω)'(ω_c)
  int transversal = 0;          ///< sign of `transversality`
  bool degenerate = false;
  bool tie = false;               ///< several candidates share the minimal C
  bool kernel_monotone = true;    ///< τ ↦ e^{-γτ} f(τ) non-increasing
  bool proved_regime = true;      ///< false when τmin > 0
  double omega_max = 0.0;         ///< upper end of the range actually scanned
  std::vector<std::string> warnings;
};

struct HopfOptions {
  double omega_max = 0.0;  ///< <= 0 selects 40·2π/τmax
  std::size_t grid = 20000;
  double omega_min = 1e-6;
};

struct StabilityDetails {
  double alpha = 0.0;
  double trivial_root = 0.0;
  std::optional<double> x_star;
  std::optional<double> beta_star;
  std::optional<double> beta_star_c;
};

struct StabilityReport {
  TrivialVerdict trivial = TrivialVerdict::Boundary;
  std::optional<PositiveVerdict> positive;
  double delta_tilde = 0.0;
  StabilityDetails details;
  std::optional<HopfResult> hopf;
};

/// Δ₀(λ) for real λ.
inline double char_trivial(const ModelParams& p, double lambda) {
  const double b0 = p.hill.beta0;
  const double L = laplace(p.density, {lambda + p.gamma, 0.0}).real();
  return lambda + p.delta + b0 - 2.0 * b0 * L;
}

/// The unique real root of the increasing function Δ₀.
inline double trivial_real_root(const ModelParams& p, double tol = 1e-14) {
  double lo = -1.0;
  double hi = 1.0;
  for (int i = 0; char_trivial(p, lo) > 0.0; ++i) {
    if (i > 60) throw NumericalError("trivial_real_root: cannot bracket from below");
    hi = lo;
    lo *= 2.0;
  }
  for (int i = 0; char_trivial(p, hi) < 0.0; ++i) {
    if (i > 60) throw NumericalError("trivial_real_root: cannot bracket from above");
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double v = char_trivial(p, mid);
    if (v == 0.0) return mid;
    (v < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline TrivialVerdict classify_trivial(const ModelParams& p) {
  const ExistenceReport e = existence(p);
  if (e.boundary) return TrivialVerdict::Boundary;
  return e.threshold_alpha < p.delta ? TrivialVerdict::GloballyStable : TrivialVerdict::Unstable;
}

/// Δ(λ) at the positive equilibrium with gain beta_star.
inline std::complex<double> char_nontrivial(const ModelParams& p, double beta_star, std::complex<double> lambda) {
  const std::complex<double> L = laplace(p.density, lambda + p.gamma);
  return lambda + p.delta + beta_star - 2.0 * beta_star * L;
}

/// dΔ/dλ.
inline std::complex<double> char_nontrivial_derivative(const ModelParams& p, double beta_star,
                                                       std::complex<double> lambda) {
  return 1.0 + 2.0 * beta_star * laplace_tau(p.density, lambda + p.gamma);
}

/// g(ω) = ω (1 - 2C(ω)) / (2 S(ω)).
inline double g_of_omega(const ModelParams& p, double omega) {
  if (!(omega > 0.0)) throw DomainError("g_of_omega: omega must be positive");
  const CosSin cs = weighted_cos_sin(p.density, p.gamma, omega);
  if (std::abs(cs.S) < 1e-14) throw DomainError("g_of_omega: S(omega) vanishes");
  return omega * (1.0 - 2.0 * cs.C) / (2.0 * cs.S);
}

namespace detail {

/// ω(1 - 2C) - 2δS, whose positive-S roots are the roots of g(ω) = δ.
inline double crossing_numerator(const ModelParams& p, double omega) {
  const CosSin cs = weighted_cos_sin(p.density, p.gamma, omega);
  return omega * (1.0 - 2.0 * cs.C) - 2.0 * p.delta * cs.S;
}

inline CrossingCandidate make_candidate(const ModelParams& p, double omega) {
  const CosSin cs = weighted_cos_sin(p.density, p.gamma, omega);
  const CosSin d = weighted_cos_sin_prime(p.density, p.gamma, omega);
  CrossingCandidate c;
  c.omega = omega;
  c.C = cs.C;
  c.S = cs.S;
  c.beta_star_c = -p.delta / (1.0 - 2.0 * cs.C);
  const double u = 1.0 - 2.0 * cs.C;
  c.g_prime = (u - 2.0 * omega * d.C) / (2.0 * cs.S) - omega * u * d.S / (2.0 * cs.S * cs.S);
  return c;
}

struct ScanOutcome {
  std::vector<CrossingCandidate> candidates;
  double g_min = std::numeric_limits<double>::infinity();
  double g_max = -std::numeric_limits<double>::infinity();
};

inline ScanOutcome scan_crossings(const ModelParams& p, double omega_lo, double omega_hi, std::size_t grid) {
  ScanOutcome out;
  std::vector<double> w(grid + 1);
  std::vector<double> F(grid + 1);
  for (std::size_t i = 0; i <= grid; ++i) {
    w[i] = omega_lo + (omega_hi - omega_lo) * static_cast<double>(i) / static_cast<double>(grid);
    const CosSin cs = weighted_cos_sin(p.density, p.gamma, w[i]);
    F[i] = w[i] * (1.0 - 2.0 * cs.C) - 2.0 * p.delta * cs.S;
    if (std::abs(cs.S) >= 1e-14) {
      const double g = w[i] * (1.0 - 2.0 * cs.C) / (2.0 * cs.S);
      out.g_min = std::min(out.g_min, g);
      out.g_max = std::max(out.g_max, g);
    }
  }
  for (std::size_t i = 0; i < grid; ++i) {
    double a = w[i];
    double b = w[i + 1];
    double fa = F[i];
    const double fb = F[i + 1];
    double root;
    if (fa == 0.0) {
      root = a;
    } else if (fa * fb < 0.0) {
      for (int it = 0; it < 200 && b - a > 1e-12 * std::max(1.0, b); ++it) {
        const double m = 0.5 * (a + b);
        const double fm = crossing_numerator(p, m);
        if (fm == 0.0) {
          a = b = m;
          break;
        }
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      root = 0.5 * (a + b);
    } else {
      continue;
    }
    const CrossingCandidate c = make_candidate(p, root);
    if (c.S > 0.0 && 1.0 - 2.0 * c.C > 0.0) out.candidates.push_back(c);
  }
  return out;
}

}  // namespace detail

/// β* as a function of the Hill exponent, all other parameters fixed.
inline double beta_star_of_n(ModelParams p, double n) {
  p.hill.n = n;
  return positive_equilibrium(p).beta_star;
}

/**
 * Locates the purely imaginary root pair of Δ: crossings of g(ω) = δ on
 * (0, omega_max], the one with minimal C(ω), the critical gain β*_c and the
 * Hill exponent n_c at which β* reaches it.
 */
inline HopfResult hopf_locate(const ModelParams& p, const HopfOptions& opt = {}) {
  p.validate();
  if (!existence(p).exists_positive) throw DomainError("hopf_locate: the positive equilibrium does not exist");
  HopfResult r;
  r.kernel_monotone = weight_nonincreasing(p.density, p.gamma);
  if (!r.kernel_monotone) r.warnings.emplace_back("e^{-gamma tau} f(tau) is not non-increasing");
  r.proved_regime = p.density.tau_min() == 0.0;
  if (!r.proved_regime) r.warnings.emplace_back("outside proved regime (tau_min > 0)");

  double omega_max = opt.omega_max > 0.0 ? opt.omega_max : 40.0 * 2.0 * std::numbers::pi / p.density.tau_max();
  const std::size_t grid = std::max<std::size_t>(opt.grid, 2);
  detail::ScanOutcome scan = detail::scan_crossings(p, opt.omega_min, omega_max, grid);
  if (scan.candidates.empty()) {
    omega_max *= 2.0;
    scan = detail::scan_crossings(p, opt.omega_min, omega_max, 2 * grid);
  }
  r.omega_max = omega_max;
  if (scan.candidates.empty())
    throw NoCrossingError("hopf_locate: no crossing of g(omega) = delta up to omega = " + std::to_string(omega_max),
                          scan.g_min, scan.g_max);
  r.candidates = std::move(scan.candidates);

  std::size_t best = 0;
  for (std::size_t i = 1; i < r.candidates.size(); ++i)
    if (r.candidates[i].C < r.candidates[best].C) best = i;
  for (std::size_t i = 0; i < r.candidates.size(); ++i)
    if (i != best && std::abs(r.candidates[i].C - r.candidates[best].C) <= 1e-12) r.tie = true;
  if (r.tie) r.warnings.emplace_back("several crossings share the minimal C; the smallest omega was kept");

  r.selected = r.candidates[best];
  r.omega_c = r.selected.omega;
  r.beta_star_c = r.selected.beta_star_c;
  r.period = 2.0 * std::numbers::pi / r.omega_c;

  const CosSin d = weighted_cos_sin_prime(p.density, p.gamma, r.omega_c);
  const double w = r.omega_c;
  const double s_over_w_prime = (d.S * w - r.selected.S) / (w * w);
  r.transversality = -d.C - p.delta * s_over_w_prime;
  r.transversal = (r.transversality > 0.0) - (r.transversality < 0.0);
  r.degenerate = std::abs(r.transversality) < 1e-8;

  auto h = [&](double n) { return beta_star_of_n(p, n) - r.beta_star_c; };
  double lo = 1.0;
  double hi = 10.0;
  double hlo = h(lo);
  if (hlo > 0.0 && h(hi) <= 0.0) {
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
      const double m = 0.5 * (lo + hi);
      const double hm = h(m);
      if (hm > 0.0) {
        lo = m;
        hlo = hm;
      } else {
        hi = m;
      }
    }
    r.n_c = 0.5 * (lo + hi);
  } else {
    r.warnings.emplace_back("NoInversion: beta_star(n) does not reach beta_star_c for n in (1, 10]");
  }
  return r;
}

/**
 * Verdict for the positive equilibrium. `critical_tol` is the half-width of
 * the band |β* - β*_c| reported as HopfCritical.
 */
inline PositiveVerdict classify_positive(const ModelParams& p, double critical_tol = 1e-6,
                                         std::optional<HopfResult>* hopf_out = nullptr) {
  const Equilibrium e = positive_equilibrium(p);
  if (e.beta_star >= delta_tilde(p)) return PositiveVerdict::StableByTheorem2;
  HopfResult h;
  try {
    h = hopf_locate(p);
  } catch (const NoCrossingError&) {
    return PositiveVerdict::Indeterminate;
  }
  if (hopf_out) *hopf_out = h;
  if (h.degenerate) return PositiveVerdict::Indeterminate;
  if (std::abs(e.beta_star - h.beta_star_c) <= critical_tol) return PositiveVerdict::HopfCritical;
  return e.beta_star > h.beta_star_c ? PositiveVerdict::StablePreHopf : PositiveVerdict::UnstablePostHopf;
}

inline StabilityReport stability_report(const ModelParams& p, double critical_tol = 1e-6) {
  StabilityReport r;
  r.trivial = classify_trivial(p);
  r.delta_tilde = delta_tilde(p);
  r.details.alpha = existence(p).threshold_alpha;
  r.details.trivial_root = trivial_real_root(p);
  if (existence(p).exists_positive) {
    const Equilibrium e = positive_equilibrium(p);
    r.details.x_star = e.x_star;
    r.details.beta_star = e.beta_star;
    std::optional<HopfResult> h;
    r.positive = classify_positive(p, critical_tol, &h);
    if (h) {
      r.details.beta_star_c = h->beta_star_c;
      r.hopf = std::move(h);
    }
  }
  return r;
}

struct ProbeBox {
  double re_min = -1.0;
  double re_max = 0.5;
  double im_min = -3.0;
  double im_max = 3.0;
};

struct ProbeGrid {
  std::size_t re_points = 121;
  std::size_t im_points = 481;
};

struct CharRoot {
  std::complex<double> lambda;
  double residual = 0.0;
};

/**
 * Roots of Δ(λ) = λ + δ + β* - 2β* L(λ + γ) inside `box`: local minima of |Δ|
 * on a grid, polished by Newton's method, deduplicated and sorted by
 * decreasing real part.
 */
inline std::vector<CharRoot> spectral_abscissa_probe(const ModelParams& p, double beta_star, const ProbeBox& box = {},
                                                     const ProbeGrid& grid = {}) {
  const std::size_t nr = std::max<std::size_t>(grid.re_points, 3);
  const std::size_t ni = std::max<std::size_t>(grid.im_points, 3);
  const double dr = (box.re_max - box.re_min) / static_cast<double>(nr - 1);
  const double di = (box.im_max - box.im_min) / static_cast<double>(ni - 1);
  std::vector<double> mag(nr * ni);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return mag[i * ni + j]; };
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < ni; ++j)
      at(i, j) = std::abs(char_nontrivial(
          p, beta_star, {box.re_min + static_cast<double>(i) * dr, box.im_min + static_cast<double>(j) * di}));

  std::vector<CharRoot> roots;
  const double slack_r = 0.5 * dr;
  const double slack_i = 0.5 * di;
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < ni; ++j) {
      const double v = at(i, j);
      bool is_min = true;
      for (int a = -1; a <= 1 && is_min; ++a) {
        for (int b = -1; b <= 1; ++b) {
          if (a == 0 && b == 0) continue;
          const auto ii = static_cast<std::ptrdiff_t>(i) + a;
          const auto jj = static_cast<std::ptrdiff_t>(j) + b;
          if (ii < 0 || jj < 0 || ii >= static_cast<std::ptrdiff_t>(nr) || jj >= static_cast<std::ptrdiff_t>(ni))
            continue;
          if (at(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj)) < v) {
            is_min = false;
            break;
          }
        }
      }
      if (!is_min) continue;
      std::complex<double> z{box.re_min + static_cast<double>(i) * dr, box.im_min + static_cast<double>(j) * di};
      bool ok = false;
      for (int it = 0; it < 60; ++it) {
        const std::complex<double> f = char_nontrivial(p, beta_star, z);
        const std::complex<double> fp = char_nontrivial_derivative(p, beta_star, z);
        if (std::abs(fp) == 0.0) break;
        const std::complex<double> dz = f / fp;
        z -= dz;
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) break;
        if (std::abs(dz) <= 1e-15 * std::max(1.0, std::abs(z))) {
          ok = true;
          break;
        }
      }
      const double res = std::abs(char_nontrivial(p, beta_star, z));
      if (!(res < 1e-9)) ok = false;
      if (!ok) continue;
      if (z.real() < box.re_min - slack_r || z.real() > box.re_max + slack_r || z.imag() < box.im_min - slack_i ||
          z.imag() > box.im_max + slack_i)
        continue;
      const bool dup = std::any_of(roots.begin(), roots.end(),
                                   [&](const CharRoot& r) { return std::abs(r.lambda - z) <= 1e-7; });
      if (!dup) roots.push_back({z, res});
    }
  }
  std::sort(roots.begin(), roots.end(), [](const CharRoot& a, const CharRoot& b) {
    if (a.lambda.real() != b.lambda.real()) return a.lambda.real() > b.lambda.real();
    return a.lambda.imag() < b.lambda.imag();
  });
  return roots;
}

/// Number of roots of Δ inside `box` by the argument principle (winding of Δ
/// along the boundary, `samples` points per side).
inline long argument_principle_count(const ModelParams& p, double beta_star, const ProbeBox& box,
                                     std::size_t samples = 4000) {
  const std::complex<double> corners[4] = {
      {box.re_min, box.im_min}, {box.re_max, box.im_min}, {box.re_max, box.im_max}, {box.re_min, box.im_max}};
  double total = 0.0;
  std::complex<double> prev = char_nontrivial(p, beta_star, corners[0]);
  for (int side = 0; side < 4; ++side) {
    const std::complex<double> a = corners[side];
    const std::complex<double> b = corners[(side + 1) % 4];
    for (std::size_t k = 1; k <= samples; ++k) {
      const std::complex<double> z = a + (b - a) * (static_cast<double>(k) / static_cast<double>(samples));
      const std::complex<double> cur = char_nontrivial(p, beta_star, z);
      total += std::arg(cur / prev);
      prev = cur;
    }
  }
  return std::lround(total / (2.0 * std::numbers::pi));
}

}  // namespace hema
