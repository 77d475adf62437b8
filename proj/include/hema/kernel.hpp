#pragma once

/**
 * @file kernel.hpp
 * @brief Division-age density f(tau) and its exponentially weighted transforms.
 *
 * A density lives on [tau_min, tau_max] and is either uniform or piecewise
 * linear through user-supplied knots. Every integral against f goes through
 * one composite Gauss-Legendre routine whose panels are split at the
 * density's breakpoints and narrowed to resolve oscillatory weights.
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hema/error.hpp"
#include "hema/quadrature.hpp"

namespace hema {

enum class DensityKind { Uniform, Tabulated };

class DivisionDensity {
 public:
  static DivisionDensity uniform(double tau_min, double tau_max) {
    check_support(tau_min, tau_max);
    DivisionDensity d;
    d.kind_ = DensityKind::Uniform;
    d.knots_ = {tau_min, tau_max};
    const double h = 1.0 / (tau_max - tau_min);
    d.values_ = {h, h};
    d.raw_mass_ = 1.0;
    return d;
  }

  /// Piecewise-linear density through (knots[i], values[i]). The input is
  /// renormalised to unit mass; the mass before normalisation is kept in
  /// raw_mass().
  static DivisionDensity tabulated(std::vector<double> knots, std::vector<double> values) {
    if (knots.size() != values.size()) throw ConfigError("tabulated density: knots/values size mismatch");
    if (knots.size() < 2) throw ConfigError("tabulated density: need at least two knots");
    for (std::size_t i = 0; i < knots.size(); ++i) {
      if (!std::isfinite(knots[i]) || !std::isfinite(values[i]))
        throw ConfigError("tabulated density: non-finite entry at row " + std::to_string(i));
      if (values[i] < 0.0) throw ConfigError("tabulated density: negative value at row " + std::to_string(i));
      if (i > 0 && !(knots[i] > knots[i - 1]))
        throw ConfigError("tabulated density: knots must be strictly increasing (row " + std::to_string(i) + ")");
    }
    check_support(knots.front(), knots.back());
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i)
      mass += 0.5 * (values[i] + values[i + 1]) * (knots[i + 1] - knots[i]);
    if (!(mass > 0.0)) throw ConfigError("tabulated density: zero total mass");
    for (auto& v : values) v /= mass;

    DivisionDensity d;
    d.kind_ = DensityKind::Tabulated;
    d.knots_ = std::move(knots);
    d.values_ = std::move(values);
    d.raw_mass_ = mass;
    return d;
  }

  /// Two-column CSV (tau, value); a non-numeric first line is treated as a header.
  static DivisionDensity from_csv(std::istream& in) {
    std::vector<double> knots;
    std::vector<double> values;
    std::string line;
    std::size_t lineno = 0;
    bool seen_data = false;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream row(line);
      double tau = 0.0;
      double val = 0.0;
      if (!(row >> tau >> val)) {
        if (!seen_data && knots.empty()) {
          seen_data = true;
          continue;
        }
        throw ConfigError("density csv: cannot parse line " + std::to_string(lineno));
      }
      std::string rest;
      if (row >> rest) throw ConfigError("density csv: more than two columns on line " + std::to_string(lineno));
      seen_data = true;
      knots.push_back(tau);
      values.push_back(val);
    }
    return tabulated(std::move(knots), std::move(values));
  }

  static DivisionDensity from_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("density csv: cannot open '" + path + "'");
    return from_csv(in);
  }

  DensityKind kind() const noexcept { return kind_; }
  double tau_min() const noexcept { return knots_.front(); }
  double tau_max() const noexcept { return knots_.back(); }
  double width() const noexcept { return tau_max() - tau_min(); }
  const std::vector<double>& knots() const noexcept { return knots_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double raw_mass() const noexcept { return raw_mass_; }

  double pdf(double tau) const noexcept {
    if (tau < tau_min() || tau > tau_max()) return 0.0;
    if (kind_ == DensityKind::Uniform) return values_.front();
    const std::size_t i = locate(tau);
    const double t = (tau - knots_[i]) / (knots_[i + 1] - knots_[i]);
    return values_[i] + t * (values_[i + 1] - values_[i]);
  }

  double cdf(double tau) const noexcept {
    if (tau <= tau_min()) return 0.0;
    if (tau >= tau_max()) return 1.0;
    if (kind_ == DensityKind::Uniform) return (tau - tau_min()) / width();
    const std::size_t i = locate(tau);
    double acc = 0.0;
    for (std::size_t k = 0; k < i; ++k) acc += 0.5 * (values_[k] + values_[k + 1]) * (knots_[k + 1] - knots_[k]);
    const double dt = tau - knots_[i];
    const double slope = (values_[i + 1] - values_[i]) / (knots_[i + 1] - knots_[i]);
    return acc + values_[i] * dt + 0.5 * slope * dt * dt;
  }

  /// Points where f is not smooth: support ends and every interior knot.
  const std::vector<double>& breakpoints() const noexcept { return knots_; }

  /// Default panel width for smooth integrands.
  double base_panel() const noexcept { return width() / 32.0; }

  /// ∫ f(tau) g(tau) dtau over the support with panels no wider than max_width.
  template <class G>
  auto integrate(G&& g, double max_width) const {
    auto integrand = [&](double tau) { return pdf(tau) * g(tau); };
    return quad::composite(integrand, std::span<const double>(knots_), std::min(max_width, base_panel()));
  }

  /// Same as integrate() but restricted to [lo, hi] ∩ support.
  template <class G>
  auto integrate_range(G&& g, double lo, double hi, double max_width) const {
    lo = std::max(lo, tau_min());
    hi = std::min(hi, tau_max());
    using R = std::decay_t<decltype(g(0.0))>;
    if (!(hi > lo)) return R{};
    std::vector<double> breaks{lo};
    for (double k : knots_)
      if (k > lo && k < hi) breaks.push_back(k);
    breaks.push_back(hi);
    auto integrand = [&](double tau) { return pdf(tau) * g(tau); };
    return quad::composite(integrand, std::span<const double>(breaks), std::min(max_width, base_panel()));
  }

 private:
  DivisionDensity() = default;

  static void check_support(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo < 0.0 || !(hi > lo))
      throw ConfigError("division density needs 0 <= tau_min < tau_max < inf");
  }

  std::size_t locate(double tau) const noexcept {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), tau);
    std::size_t i = static_cast<std::size_t>(it - knots_.begin());
    i = i == 0 ? 0 : i - 1;
    return std::min(i, knots_.size() - 2);
  }

  DensityKind kind_ = DensityKind::Uniform;
  std::vector<double> knots_;
  std::vector<double> values_;
  double raw_mass_ = 1.0;
};

/// Integrals of the survival-weighted density.
struct KernelMoments {
  double K = 0.0;    ///< ∫ e^{-γτ} f dτ
  double M1 = 0.0;   ///< ∫ τ e^{-γτ} f dτ
  double Y0w = 0.0;  ///< ∫ f (1 - e^{-γτ})/γ dτ, or ∫ τ f dτ when γ = 0
};

struct CosSin {
  double C = 0.0;
  double S = 0.0;
};

namespace detail {

inline double oscillation_panel(double omega) noexcept {
  const double w = std::abs(omega);
  return w > 0.0 ? std::numbers::pi / (4.0 * w) : std::numeric_limits<double>::infinity();
}

inline double laplace_panel(std::complex<double> s) noexcept {
  double width = oscillation_panel(s.imag());
  if (s.real() != 0.0) width = std::min(width, 2.0 / std::abs(s.real()));
  return width;
}

}  // namespace detail

inline double pdf_eval(const DivisionDensity& d, double tau) noexcept { return d.pdf(tau); }

/// Division hazard g = f / (1 - F); diverges at tau_max.
inline double hazard_rate(const DivisionDensity& d, double tau) {
  if (tau >= d.tau_max()) throw DomainError("hazard_rate: tau must be below tau_max");
  if (tau < d.tau_min()) return 0.0;
  return d.pdf(tau) / (1.0 - d.cdf(tau));
}

/// C(ω) = ∫ e^{-γτ} f cos(ωτ) dτ and S(ω) = ∫ e^{-γτ} f sin(ωτ) dτ.
inline CosSin weighted_cos_sin(const DivisionDensity& d, double gamma, double omega) {
  const double width = detail::oscillation_panel(omega);
  auto g = [&](double tau) {
    const double e = std::exp(-gamma * tau);
    return std::complex<double>(e * std::cos(omega * tau), e * std::sin(omega * tau));
  };
  const std::complex<double> r = d.integrate(g, width);
  return {r.real(), r.imag()};
}

/// ω-derivatives C'(ω) = -∫ τ e^{-γτ} f sin(ωτ) and S'(ω) = ∫ τ e^{-γτ} f cos(ωτ).
inline CosSin weighted_cos_sin_prime(const DivisionDensity& d, double gamma, double omega) {
  const double width = detail::oscillation_panel(omega);
  auto g = [&](double tau) {
    const double e = tau * std::exp(-gamma * tau);
    return std::complex<double>(-e * std::sin(omega * tau), e * std::cos(omega * tau));
  };
  const std::complex<double> r = d.integrate(g, width);
  return {r.real(), r.imag()};
}

inline KernelMoments moments(const DivisionDensity& d, double gamma) {
  if (gamma < 0.0) throw DomainError("moments: gamma must be nonnegative");
  KernelMoments m;
  const double inf = std::numeric_limits<double>::infinity();
  m.K = d.integrate([&](double tau) { return std::exp(-gamma * tau); }, inf);
  m.M1 = d.integrate([&](double tau) { return tau * std::exp(-gamma * tau); }, inf);
  if (gamma == 0.0) {
    m.K = 1.0;
    m.Y0w = d.integrate([](double tau) { return tau; }, inf);
  } else {
    m.Y0w = d.integrate([&](double tau) { return -std::expm1(-gamma * tau) / gamma; }, inf);
  }
  return m;
}

/// ∫ e^{-sτ} f(τ) dτ for complex s.
inline std::complex<double> laplace(const DivisionDensity& d, std::complex<double> s) {
  return d.integrate([&](double tau) { return std::exp(-s * tau); }, detail::laplace_panel(s));
}

/// ∫ τ e^{-sτ} f(τ) dτ for complex s (minus the s-derivative of laplace()).
inline std::complex<double> laplace_tau(const DivisionDensity& d, std::complex<double> s) {
  return d.integrate([&](double tau) { return tau * std::exp(-s * tau); }, detail::laplace_panel(s));
}

/// True when τ ↦ e^{-γτ} f(τ) is non-increasing on a sample grid of the support.
inline bool weight_nonincreasing(const DivisionDensity& d, double gamma, std::size_t samples = 2001) {
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples; ++i) {
    const double tau = d.tau_min() + d.width() * static_cast<double>(i) / static_cast<double>(samples - 1);
    const double w = std::exp(-gamma * tau) * d.pdf(tau);
    if (w > prev * (1.0 + 1e-12)) return false;
    prev = w;
  }
  return true;
}

/**
 * Cumulative survival-weighted mass W(τ) = ∫_{tau_min}^{τ} e^{-γσ} f(σ) dσ.
 *
 * Values are tabulated at panel boundaries once; a lookup adds one in-panel
 * Gauss-Legendre panel.
 */
class KernelCumulative {
 public:
  KernelCumulative(const DivisionDensity& d, double gamma) : density_(d), gamma_(gamma) {
    for (std::size_t i = 0; i + 1 < d.knots().size(); ++i) {
      const double a = d.knots()[i];
      const double b = d.knots()[i + 1];
      const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / d.base_panel())));
      for (std::size_t p = 0; p < panels; ++p)
        grid_.push_back(a + (b - a) * static_cast<double>(p) / static_cast<double>(panels));
    }
    grid_.push_back(d.tau_max());
    cum_.assign(grid_.size(), 0.0);
    for (std::size_t i = 1; i < grid_.size(); ++i) cum_[i] = cum_[i - 1] + piece(grid_[i - 1], grid_[i]);
  }

  double operator()(double tau) const {
    if (tau <= grid_.front()) return 0.0;
    if (tau >= grid_.back()) return cum_.back();
    auto it = std::upper_bound(grid_.begin(), grid_.end(), tau);
    const std::size_t i = static_cast<std::size_t>(it - grid_.begin()) - 1;
    return cum_[i] + piece(grid_[i], tau);
  }

  double total() const noexcept { return cum_.back(); }

 private:
  double piece(double a, double b) const {
    return quad::gauss8([&](double t) { return std::exp(-gamma_ * t) * density_.pdf(t); }, a, b);
  }

  DivisionDensity density_;
  double gamma_;
  std::vector<double> grid_;
  std::vector<double> cum_;
};

}  // namespace hema
