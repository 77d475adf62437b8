#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hema/model.hpp"

namespace {

using hema::HillRate;
using hema::ModelParams;

// K for Uniform[0, 7] with γ = 0.2.
const double kK = (1.0 - std::exp(-1.4)) / 1.4;

double closed_form_x_star(double delta, double n) { return std::pow((2 * kK - 1) * 1.77 / delta - 1.0, 1.0 / n); }

ModelParams with_n(double n) {
  ModelParams p;
  p.hill.n = n;
  return p;
}

TEST(BetaEval, DefaultAtZero) { EXPECT_EQ(hema::beta_eval(HillRate{}, 0.0), 1.77); }

TEST(BetaEval, HalfAtTheta) {
  const HillRate h{2.0, 3.0, 4.5};
  EXPECT_NEAR(hema::beta_eval(h, 3.0), 1.0, 1e-15);
}

TEST(BetaEval, AtPositiveEquilibrium) {
  const double x = closed_form_x_star(0.05, 3.0);
  EXPECT_NEAR(hema::beta_eval(HillRate{}, x), 0.65540, 1e-5);
  EXPECT_NEAR(hema::beta_eval(HillRate{}, x), 0.05 / (2 * kK - 1), 1e-13);
}

TEST(BetaEval, RejectsNegative) { EXPECT_THROW(hema::beta_eval(HillRate{}, -1.0), hema::DomainError); }

TEST(BetaEval, StrictlyDecreasing) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const HillRate h{0.1 + 3 * u(rng), 0.1 + 5 * u(rng), 0.2 + 6 * u(rng)};
    const double x1 = 4 * h.theta * u(rng);
    const double x2 = x1 + 1e-3 * h.theta + h.theta * u(rng);
    ASSERT_LT(hema::beta_eval(h, x2), hema::beta_eval(h, x1));
  }
}

TEST(BetaPrime, ZeroAtOriginWhenNAboveOne) { EXPECT_EQ(hema::beta_prime(HillRate{}, 0.0), 0.0); }

TEST(BetaPrime, AtTheta) {
  for (double n : {1.5, 3.0, 4.0}) {
    const HillRate h{1.77, 2.0, n};
    const double expected = -1.77 * n / (4 * 2.0);
    EXPECT_NEAR(hema::beta_prime(h, 2.0), expected, 1e-14);
    const double fd = (hema::beta_eval(h, 2.0 + 1e-6) - hema::beta_eval(h, 2.0 - 1e-6)) / 2e-6;
    EXPECT_NEAR(fd, expected, 1e-8);
  }
}

TEST(BetaPrime, MatchesCentralDifferenceAtTwo) {
  const HillRate h{};
  const double x = 2.0;
  const double step = 1e-6 * std::max(1.0, x);
  const double fd = (hema::beta_eval(h, x + step) - hema::beta_eval(h, x - step)) / (2 * step);
  EXPECT_NEAR(hema::beta_prime(h, x) / fd, 1.0, 1e-6);
}

TEST(MapUnimodalPeak, SquareHill) { EXPECT_NEAR(hema::map_unimodal_peak(HillRate{1.77, 1.0, 2.0}), 1.0, 1e-15); }

TEST(MapUnimodalPeak, CubicHillIsStationaryPoint) {
  const HillRate h{};
  const double xb = hema::map_unimodal_peak(h);
  EXPECT_NEAR(xb, std::pow(2.0, -1.0 / 3.0), 1e-15);
  EXPECT_NEAR(xb, 0.79370, 5e-6);
  const double e = 1e-6;
  EXPECT_NEAR((hema::flux(h, xb + e) - hema::flux(h, xb - e)) / (2 * e), 0.0, 1e-9);
}

TEST(MapUnimodalPeak, ScalesWithTheta) {
  const HillRate h{1.77, 1.62e8, 3.0};
  EXPECT_NEAR(hema::map_unimodal_peak(h) / 1.62e8, std::pow(2.0, -1.0 / 3.0), 1e-15);
}

TEST(MapUnimodalPeak, RequiresNAboveOne) {
  EXPECT_THROW(hema::map_unimodal_peak(HillRate{1.77, 1.0, 1.0}), hema::DomainError);
  EXPECT_THROW(hema::map_unimodal_peak(HillRate{1.77, 1.0, 0.5}), hema::DomainError);
}

TEST(MapUnimodalPeak, IsStrictArgmax) {
  for (double n : {1.2, 2.0, 3.0, 7.0}) {
    for (double theta : {0.5, 1.0, 40.0}) {
      const HillRate h{1.77, theta, n};
      const double xb = hema::map_unimodal_peak(h);
      const double eps = 1e-4 * theta;
      EXPECT_LT(hema::flux(h, xb + eps), hema::flux(h, xb));
      EXPECT_LT(hema::flux(h, xb - eps), hema::flux(h, xb));
    }
  }
}

TEST(Existence, PaperParameters) {
  const hema::ExistenceReport r = hema::existence(ModelParams{});
  EXPECT_NEAR(r.threshold_alpha, (2 * kK - 1) * 1.77, 1e-14);
  EXPECT_NEAR(r.threshold_alpha, 0.13503, 5e-6);
  EXPECT_TRUE(r.exists_positive);
  EXPECT_FALSE(r.boundary);
}

TEST(Existence, LargeDelta) {
  ModelParams p;
  p.delta = 0.3;
  EXPECT_FALSE(hema::existence(p).exists_positive);
}

TEST(Existence, KBelowHalf) {
  ModelParams p;
  p.density = hema::DivisionDensity::uniform(6.5, 7.0);
  const double K = p.kernel().K;
  EXPECT_NEAR(K, (std::exp(-1.3) - std::exp(-1.4)) / (0.2 * 0.5), 1e-14);
  EXPECT_LT(K, 0.5);
  const hema::ExistenceReport r = hema::existence(p);
  EXPECT_LT(r.threshold_alpha, 0.0);
  for (double d : {1e-6, 0.05, 1.0}) {
    p.delta = d;
    EXPECT_FALSE(hema::existence(p).exists_positive);
  }
}

TEST(Existence, Boundary) {
  ModelParams p;
  p.delta = (2 * p.kernel().K - 1) * p.hill.beta0;
  const hema::ExistenceReport r = hema::existence(p);
  EXPECT_TRUE(r.boundary);
  EXPECT_FALSE(r.exists_positive);
}

TEST(Equilibria, PaperParametersPositive) {
  const auto eqs = hema::equilibria(ModelParams{});
  ASSERT_EQ(eqs.size(), 2u);
  EXPECT_EQ(eqs[0].kind, hema::EquilibriumKind::Trivial);
  EXPECT_EQ(eqs[0].x_star, 0.0);
  EXPECT_EQ(eqs[0].y_star, 0.0);
  const hema::Equilibrium& e = eqs[1];
  EXPECT_EQ(e.kind, hema::EquilibriumKind::Positive);
  EXPECT_NEAR(e.x_star, closed_form_x_star(0.05, 3.0), 1e-13);
  EXPECT_NEAR(e.x_star, 1.19378, 5e-4);
  const double bis =
      hema::bisect_positive_equilibrium([](double x) { return hema::beta_eval(HillRate{}, x); }, kK, 0.05);
  EXPECT_NEAR(e.x_star, bis, 1e-12);
  EXPECT_LT(e.beta_star, 0.0);
  EXPECT_GT(e.x_star, hema::map_unimodal_peak(HillRate{}));
}

TEST(Equilibria, YStarFromFluxAndWeightedMean) {
  const ModelParams p;
  const hema::Equilibrium e = hema::positive_equilibrium(p);
  EXPECT_NEAR(e.y_star, hema::flux(p.hill, e.x_star) * (1.0 - kK) / 0.2, 1e-13);
}

TEST(Equilibria, BalanceResidual) {
  for (double n : {1.0, 1.5, 2.42, 3.0, 4.0, 8.0}) {
    for (double delta : {0.001, 0.05, 0.13}) {
      ModelParams p = with_n(n);
      p.delta = delta;
      const hema::Equilibrium e = hema::positive_equilibrium(p);
      const double residual = (2 * p.kernel().K - 1) * hema::beta_eval(p.hill, e.x_star) - delta;
      EXPECT_LE(std::abs(residual), 1e-12 * delta) << "n=" << n << " delta=" << delta;
    }
  }
}

TEST(Equilibria, OnlyTrivialWithoutExistence) {
  ModelParams p;
  p.delta = 0.3;
  const auto eqs = hema::equilibria(p);
  ASSERT_EQ(eqs.size(), 1u);
  EXPECT_EQ(eqs[0].kind, hema::EquilibriumKind::Trivial);
  EXPECT_THROW(hema::positive_equilibrium(p), hema::DomainError);
}

TEST(Equilibria, GammaZeroBranch) {
  ModelParams p;
  p.gamma = 0.0;
  const hema::Equilibrium e = hema::positive_equilibrium(p);
  EXPECT_NEAR(e.x_star, std::pow(1.77 / 0.05 - 1.0, 1.0 / 3.0), 1e-13);
  EXPECT_NEAR(e.y_star, 0.05 * e.x_star * 3.5, 1e-12);
}

// β* is linear in n: β(x*) does not depend on n and x*β'(x*) = -n β(x*)(1 - β(x*)/β0).
TEST(BetaStar, LinearInN) {
  const double b = 0.05 / (2 * kK - 1);
  for (double n : {1.5, 2.42, 3.0, 4.0}) {
    EXPECT_NEAR(hema::positive_equilibrium(with_n(n)).beta_star, b * (1.0 - n * (1.0 - b / 1.77)), 1e-13);
  }
}

// The quoted exponent 2.53 is rounded to two decimals; over n ∈ [2.525, 2.535]
// β* moves by |dβ*/dn| · 0.005.
TEST(BetaStar, AtRoundedCriticalExponent) {
  const double b = 0.05 / (2 * kK - 1);
  const double slope = b * (1.0 - b / 1.77);
  EXPECT_NEAR(hema::positive_equilibrium(with_n(2.53)).beta_star, -0.3881, 0.005 * slope);
}

TEST(BetaStar, ContinuousInN) {
  double prev = hema::positive_equilibrium(with_n(1.5)).beta_star;
  for (int i = 1; i <= 350; ++i) {
    const double cur = hema::positive_equilibrium(with_n(1.5 + 0.01 * i)).beta_star;
    ASSERT_LT(std::abs(cur - prev), 0.1);
    prev = cur;
  }
}

TEST(BisectPositiveEquilibrium, NonHillRate) {
  const double x = hema::bisect_positive_equilibrium([](double z) { return 1.77 * std::exp(-z); }, kK, 0.05);
  EXPECT_NEAR(x, std::log((2 * kK - 1) * 1.77 / 0.05), 1e-13);
  EXPECT_THROW(hema::bisect_positive_equilibrium([](double z) { return 1.77 * std::exp(-z); }, kK, 0.3),
               hema::DomainError);
}

TEST(ExplosionPredicted, PaperCases) {
  ModelParams p;
  p.delta = 0.0;
  EXPECT_TRUE(hema::explosion_predicted(p, 1.0));
  EXPECT_FALSE(hema::explosion_predicted(p, 0.5));
  p.delta = 0.05;
  EXPECT_FALSE(hema::explosion_predicted(p, 1.0));
  p.delta = 0.0;
  p.gamma = 1.0;
  EXPECT_NEAR(p.kernel().K, (1.0 - std::exp(-7.0)) / 7.0, 1e-14);
  EXPECT_FALSE(hema::explosion_predicted(p, 1.0));
}

TEST(BoundednessBound, MatchesIndependentSolve) {
  const ModelParams p;
  // 2K β(x0) = δ by bisection
  double lo = 0.0;
  double hi = 100.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (2 * kK * hema::beta_eval(p.hill, m) > 0.05 ? lo : hi) = m;
  }
  EXPECT_NEAR(hema::boundedness_bound(p), 2 * kK * 1.77 * lo / 0.05, 1e-9);
  ModelParams q;
  q.delta = 5.0;
  EXPECT_EQ(hema::boundedness_bound(q), 0.0);
  q.delta = 0.0;
  EXPECT_THROW(hema::boundedness_bound(q), hema::DomainError);
}

TEST(DeltaTilde, Definition) { EXPECT_NEAR(hema::delta_tilde(ModelParams{}), -0.05 / (2 * kK + 1), 1e-15); }

TEST(ModelParams, Validation) {
  ModelParams p;
  EXPECT_NO_THROW(p.validate());
  p.hill.theta = 0.0;
  EXPECT_THROW(p.validate(), hema::ConfigError);
  p = ModelParams{};
  p.delta = -0.1;
  EXPECT_THROW(p.validate(), hema::ConfigError);
  p = ModelParams{};
  p.gamma = NAN;
  EXPECT_THROW(p.validate(), hema::ConfigError);
  p = ModelParams{};
  p.hill.n = 0.0;
  EXPECT_THROW(p.validate(), hema::ConfigError);
  p = ModelParams{};
  p.delta = 0.0;
  p.gamma = 0.0;
  EXPECT_NO_THROW(p.validate());
}

}  // namespace
