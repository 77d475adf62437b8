#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "hema/history.hpp"
#include "hema/integrator.hpp"
#include "hema/model.hpp"

namespace {

using hema::IntegratorConfig;
using hema::ModelParams;
using hema::Trajectory;
using hema::TrajectoryNode;

Trajectory tabulate(double t0, double t1, double h, const std::function<TrajectoryNode(double)>& f) {
  const auto n = static_cast<int>(std::lround((t1 - t0) / h));
  Trajectory tr(f(t0));
  for (int i = 1; i <= n; ++i) tr.push(f(i == n ? t1 : t0 + i * h));
  return tr;
}

// β is constant to double precision for x far below θ.
ModelParams linear_model() {
  ModelParams p;
  p.hill.theta = 1e12;
  return p;
}

// Laplace transform of Uniform[0, 7].
double uniform_laplace(double s) { return s == 0.0 ? 1.0 : -std::expm1(-7.0 * s) / (7.0 * s); }

// Real root of λ + δ + β0 - 2β0 L(λ + γ) = 0.
double linear_growth_rate(const ModelParams& p) {
  const double b = p.hill.beta0;
  auto g = [&](double l) { return l + p.delta + b - 2 * b * uniform_laplace(l + p.gamma); };
  double lo = -p.gamma + 1e-9;
  double hi = 5.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (g(m) < 0 ? lo : hi) = m;
  }
  return 0.5 * (lo + hi);
}

TEST(DelayFunctional, ConstantHistory) {
  const ModelParams p;
  const hema::Equilibrium e = hema::positive_equilibrium(p);
  const Trajectory tr = tabulate(0.0, 20.0, 0.05, [&](double t) { return TrajectoryNode{t, e.x_star, e.y_star, 0, 0}; });
  for (double t : {7.0, 10.0, 13.37, 20.0}) {
    const double D = hema::delay_functional(tr, p, t);
    EXPECT_NEAR(D, hema::flux(p.hill, e.x_star) * p.kernel().K, 1e-13);
    EXPECT_NEAR(2 * D, (p.delta + hema::beta_eval(p.hill, e.x_star)) * e.x_star, 1e-12);
  }
}

TEST(DelayFunctional, LinearHistory) {
  const ModelParams p = linear_model();
  const double c = 0.3;
  const Trajectory tr = tabulate(0.0, 30.0, 0.1, [&](double t) { return TrajectoryNode{t, c * t, 0, c, 0}; });
  const double T = 7.0;
  const double g = p.gamma;
  const double K = -std::expm1(-g * T) / (g * T);
  const double M1 = (1.0 - std::exp(-g * T) * (1.0 + g * T)) / (g * g * T);
  for (double t : {7.0, 12.25, 30.0}) {
    EXPECT_NEAR(hema::delay_functional(tr, p, t), p.hill.beta0 * c * (t * K - M1), 1e-12 * t);
  }
}

TEST(DelayFunctional, RequiresCoverage) {
  const ModelParams p;
  const Trajectory tr = tabulate(0.0, 10.0, 0.1, [](double t) { return TrajectoryNode{t, 1, 0, 0, 0}; });
  EXPECT_THROW(hema::delay_functional(tr, p, 5.0), hema::CoverageError);
  EXPECT_THROW(hema::delay_functional(tr, p, 11.0), hema::CoverageError);
}

TEST(IntegratorConfig, Validation) {
  const auto d = hema::DivisionDensity::uniform(0.0, 7.0);
  IntegratorConfig c;
  EXPECT_NO_THROW(c.validate(d));
  c.step = 0.5;
  EXPECT_THROW(c.validate(d), hema::ConfigError);
  c.step = 0.0;
  EXPECT_THROW(c.validate(d), hema::ConfigError);
  c = IntegratorConfig{};
  c.correction_passes = 0;
  EXPECT_THROW(c.validate(d), hema::ConfigError);
  c = IntegratorConfig{};
  c.t_end = INFINITY;
  EXPECT_THROW(c.validate(d), hema::ConfigError);
}

TEST(Integrate, RejectsShortHistory) {
  const ModelParams p;
  const Trajectory tr = tabulate(0.0, 5.0, 0.1, [](double t) { return TrajectoryNode{t, 1, 0, 0, 0}; });
  EXPECT_THROW(hema::integrate(p, tr, {}), hema::CoverageError);
  const Trajectory full = hema::build_history(p, {});
  IntegratorConfig c;
  c.t_end = 7.0;
  EXPECT_THROW(hema::integrate(p, full, c), hema::ConfigError);
}

TEST(Integrate, ExactExponentialSolution) {
  const ModelParams p = linear_model();
  const double lambda = linear_growth_rate(p);
  ASSERT_GT(lambda, 0.0);
  const double b = p.hill.beta0;
  const double A = b * (1.0 - uniform_laplace(lambda + p.gamma)) / (lambda + p.gamma);
  auto exact = [&](double t) {
    const double e = std::exp(lambda * t);
    return TrajectoryNode{t, e, A * e, lambda * e, lambda * A * e};
  };
  IntegratorConfig c;
  c.t_end = 100.0;
  const Trajectory run = hema::integrate(p, tabulate(0.0, 7.0, 0.01, exact), c);
  for (double t : {20.0, 55.5, 100.0}) {
    const TrajectoryNode e = exact(t);
    EXPECT_NEAR(run.x(t) / e.x, 1.0, 1e-9) << "t=" << t;
    EXPECT_NEAR(run.y(t) / e.y, 1.0, 1e-9) << "t=" << t;
  }
}

TEST(Integrate, EquilibriumIsStationary) {
  for (double n : {2.42, 3.0}) {
    ModelParams p;
    p.hill.n = n;
    const hema::Equilibrium e = hema::positive_equilibrium(p);
    const Trajectory h =
        tabulate(0.0, 7.0, 0.0025, [&](double t) { return TrajectoryNode{t, e.x_star, e.y_star, 0, 0}; });
    IntegratorConfig c;
    c.t_end = 200.0;
    const Trajectory run = hema::integrate(p, h, c);
    EXPECT_NEAR(run.back().x, e.x_star, 1e-10);
    EXPECT_NEAR(run.back().y, e.y_star, 1e-10);
  }
}

TEST(Integrate, ZeroHistoryStaysZero) {
  const ModelParams p;
  const Trajectory h = tabulate(0.0, 7.0, 0.01, [](double t) { return TrajectoryNode{t, 0, 0, 0, 0}; });
  IntegratorConfig c;
  c.t_end = 50.0;
  const Trajectory run = hema::integrate(p, h, c);
  for (const auto& nd : run.nodes()) {
    ASSERT_EQ(nd.x, 0.0);
    ASSERT_EQ(nd.y, 0.0);
  }
}

TEST(Integrate, EndsExactlyAtRequestedTime) {
  IntegratorConfig c;
  c.t_end = 50.003;
  const Trajectory run = hema::simulate(ModelParams{}, {}, c);
  EXPECT_EQ(run.t1(), 50.003);
}

TEST(Integrate, SubcriticalConvergesToEquilibrium) {
  ModelParams p;
  p.hill.n = 2.42;
  IntegratorConfig c;
  c.t_end = 1500.0;
  const Trajectory run = hema::simulate(p, {}, c);
  const hema::Equilibrium e = hema::positive_equilibrium(p);
  EXPECT_NEAR(run.back().x, e.x_star, 1e-6);
  EXPECT_NEAR(run.back().y, e.y_star, 1e-6);
}

TEST(Integrate, ExplicitYAgreesWithIntegratedY) {
  const ModelParams p;
  IntegratorConfig c;
  c.t_end = 300.0;
  const Trajectory run = hema::simulate(p, {}, c);
  for (double t : {7.0, 50.0, 123.4, 300.0}) {
    EXPECT_NEAR(hema::y_explicit(run, p, t) / run.y(t), 1.0, 1e-6) << "t=" << t;
  }
  EXPECT_THROW(hema::y_explicit(run, p, 6.0), hema::DomainError);
}

TEST(Integrate, FourthOrderUnderStepHalving) {
  ModelParams p;
  p.hill.n = 2.42;
  const Trajectory history = hema::build_history(p, {});
  auto at = [&](double h) {
    IntegratorConfig c;
    c.step = h;
    c.t_end = 60.0;
    return hema::integrate(p, history, c).back();
  };
  const TrajectoryNode ref = at(0.005);
  const TrajectoryNode a = at(0.04);
  const TrajectoryNode b = at(0.02);
  const double e1 = std::max(std::abs(a.x - ref.x), std::abs(a.y - ref.y));
  const double e2 = std::max(std::abs(b.x - ref.x), std::abs(b.y - ref.y));
  EXPECT_GE(e1 / e2, 8.0);
  EXPECT_LE(e1 / e2, 32.0);
}

TEST(Integrate, PositiveAndBoundedAcrossParameters) {
  for (double n : {1.0, 2.0, 3.0, 5.0}) {
    for (double delta : {0.01, 0.05, 0.12}) {
      ModelParams p;
      p.hill.n = n;
      p.delta = delta;
      IntegratorConfig c;
      c.step = 0.02;
      c.t_end = 400.0;
      hema::HistoryConfig hc;
      hc.mu = 2.0;
      const Trajectory run = hema::simulate(p, hc, c);
      double hist_max = 0.0;
      for (const auto& nd : run.nodes())
        if (nd.t <= 7.0) hist_max = std::max(hist_max, nd.x);
      const double bound = std::max(hist_max, hema::boundedness_bound(p)) * 1.01;
      for (const auto& nd : run.nodes()) {
        ASSERT_GT(nd.x, 0.0) << "n=" << n << " delta=" << delta;
        ASSERT_GT(nd.y, 0.0) << "n=" << n << " delta=" << delta;
        if (nd.t > 200.0) {
          ASSERT_LE(nd.x, bound) << "n=" << n << " delta=" << delta;
        }
      }
    }
  }
}

TEST(Integrate, SinglePassCloseToDefault) {
  ModelParams p;
  IntegratorConfig one;
  one.correction_passes = 1;
  one.t_end = 100.0;
  IntegratorConfig two = one;
  two.correction_passes = 2;
  const Trajectory h = hema::build_history(p, {});
  EXPECT_NEAR(hema::integrate(p, h, one).back().x, hema::integrate(p, h, two).back().x, 1e-6);
}

TEST(Integrate, Deterministic) {
  IntegratorConfig c;
  c.t_end = 80.0;
  const Trajectory a = hema::simulate(ModelParams{}, {}, c);
  const Trajectory b = hema::simulate(ModelParams{}, {}, c);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a.node(i).x, b.node(i).x);
}

}  // namespace
