#include <cmath>

#include <gtest/gtest.h>

#include "sgmflow/error.hpp"
#include "sgmflow/estimators.hpp"
#include "sgmflow/kernels.hpp"

using namespace sgmflow;

TEST(Samplers, DeterministicAndInRange) {
  const Vector c = {1.0, -1.0};
  const auto a = shell_samples(c, 1e-3, 2.0, 5, 7, 1);
  const auto b = shell_samples(c, 1e-3, 2.0, 5, 7, 1);
  ASSERT_EQ(a.size(), 35u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, shell_samples(c, 1e-3, 2.0, 5, 7, 2));
  for (const auto& x : a) {
    const double r = std::hypot(x[0] - 1.0, x[1] + 1.0);
    EXPECT_GE(r, 1e-3 * (1 - 1e-12));
    EXPECT_LE(r, 2.0 * (1 + 1e-12));
  }
  for (const auto& x : ball_samples(c, 0.5, 100, 3)) EXPECT_LE(std::hypot(x[0] - 1.0, x[1] + 1.0), 0.5);
  EXPECT_EQ(pair_samples(c, 1.0, 10, 4).size(), 10u);
}

TEST(Dominance, PPowerTwoOnShell) {
  const Objective f = p_power(2.0, 2);
  const auto s = shell_samples(Vector{0.0, 0.0}, 0.5, 1.0, 4, 16, 1);
  const auto d = estimate_dominance(f, s);
  EXPECT_NEAR(d.p, 2.0, 0.01);
  EXPECT_GE(d.mu, 1.0 - 0.01);
  EXPECT_EQ(d.sample_count, s.size());
}

TEST(Dominance, PPowerThree) {
  const Objective f = p_power(3.0, 2);
  const auto s = shell_samples(Vector{0.0, 0.0}, 0.1, 2.0, 8, 16, 2);
  const auto d = estimate_dominance(f, s);
  EXPECT_NEAR(d.p, 3.0, 0.05);
  EXPECT_NEAR(d.mu, 4.0, 0.2);
}

TEST(Dominance, QuadraticPLConstantIsSmallestEigenvalue) {
  const Objective f = quadratic_diag({1.0, 4.0});
  const auto d = estimate_dominance(f, shell_samples(Vector{0.0, 0.0}, 1e-3, 2.0, 12, 64, 3));
  // Pooled log-log fit: direction anisotropy biases p slightly, same 2% budget as p_power.
  EXPECT_NEAR(d.p, 2.0, 0.04);
  EXPECT_NEAR(d.mu, 1.0, 0.05);
}

// Property: the reported (p, mu) satisfies the inequality on every sample.
TEST(Dominance, EstimateIsSoundOnItsSamples) {
  for (const Objective& f : {p_power(1.5, 2), p_power(2.0, 3), p_power(3.0, 2), rosenbrock(), quadratic_diag({0.5, 3.0})}) {
    const auto s = shell_samples(f.optimum()->theta, 1e-3, 2.0, 12, 16, 17);
    const auto d = estimate_dominance(f, s);
    EXPECT_TRUE(dominance_holds(f, d, s)) << f.name();
    for (const auto& x : s) {
      const double g = kernels::norm(f.gradient(x));
      const double lhs = (d.p - 1.0) / d.p * std::pow(g, d.p / (d.p - 1.0));
      const double rhs = std::pow(d.mu, 1.0 / (d.p - 1.0)) * (f.value(x) - *f.f_star());
      EXPECT_GE(lhs, rhs - 1e-8) << f.name();
    }
  }
}

TEST(Dominance, SelfConsistencyForPPower) {
  for (double p : {1.5, 2.0, 3.0}) {
    const auto d = estimate_dominance(p_power(p, 2), shell_samples(Vector{0.0, 0.0}, 1e-3, 2.0, 12, 16, 5));
    EXPECT_NEAR(d.p, p, 0.02 * p);
    EXPECT_NEAR(d.mu, std::pow(p - 1.0, p - 1.0), 0.05 * std::pow(p - 1.0, p - 1.0));
  }
}

TEST(Dominance, Preconditions) {
  const Objective f = p_power(2.0, 2);
  EXPECT_THROW(estimate_dominance(f, shell_samples(Vector{0.0, 0.0}, 0.1, 1.0, 1, 4, 1)), InvalidArgument);
  auto value = [](std::span<const double> x) { return x[0] * x[0]; };
  auto grad = [](std::span<const double> x, std::span<double> g) { g[0] = 2.0 * x[0]; };
  const Objective nostar("sq", 1, value, grad);
  EXPECT_THROW(estimate_dominance(nostar, shell_samples(Vector{0.0}, 0.1, 1.0, 4, 4, 1)), MissingOptimum);
}

TEST(Smoothness, Examples) {
  const auto pairs = pair_samples(Vector{0.0}, 1.0, 50, 1);
  EXPECT_NEAR(estimate_smoothness(quadratic_diag({1.0}), pairs).L, 1.0, 1e-12);
  const auto pairs2 = pair_samples(Vector{0.0, 0.0}, 2.0, 200, 2);
  for (const auto& [x, y] : pairs2) {
    EXPECT_LE(kernels::norm(x), 2.0 + 1e-12);
    EXPECT_LE(kernels::norm(y), 2.0 + 1e-12);
  }
  EXPECT_NEAR(estimate_smoothness(quadratic_diag({1.0, 4.0}), pairs2).L, 4.0, 1e-9);
  const auto L3 = estimate_smoothness(p_power(3.0, 2), pairs2).L;
  EXPECT_GT(L3, 3.5);
  EXPECT_LE(L3, 4.0 + 1e-9);
}

// Properties: the secant bound holds on every pair and the gradient-norm
// bound |grad f|^2 / (2L) <= f - f* holds on every sample for convex objectives.
TEST(Smoothness, BoundsHoldOnSamples) {
  for (const Objective& f : {quadratic_diag({1.0, 4.0}), p_power(2.0, 2), p_power(3.0, 2)}) {
    const auto pairs = pair_samples(Vector{0.0, 0.0}, 2.0, 300, 8);
    const double L = estimate_smoothness(f, pairs).L;
    for (const auto& [x, y] : pairs) {
      Vector dg = f.gradient(x);
      kernels::axpy(-1.0, f.gradient(y), dg);
      Vector dx = x;
      kernels::axpy(-1.0, y, dx);
      EXPECT_LE(kernels::norm(dg), (L + 1e-8) * kernels::norm(dx));
      EXPECT_LE(kernels::norm_sq(f.gradient(x)) / (2.0 * L), f.value(x) + 1e-10) << f.name();
    }
  }
}

TEST(Hessian, Definiteness) {
  const auto s = ball_samples(Vector{0.0, 0.0}, 2.0, 30, 4);
  const auto h = hessian_definiteness(quadratic_diag({1.0, 1.0}), s);
  EXPECT_NEAR(h.min_eig, 1.0, 1e-12);
  EXPECT_NEAR(h.max_eig, 1.0, 1e-12);
  const auto h2 = hessian_definiteness(quadratic_diag({1.0, 4.0}), s);
  EXPECT_NEAR(h2.min_eig, 1.0, 1e-12);
  EXPECT_NEAR(h2.max_eig, 4.0, 1e-12);
  auto value = [](std::span<const double> x) { return 0.5 * x[0] * x[0] + 2.0 * x[1] * x[1]; };
  auto grad = [](std::span<const double> x, std::span<double> g) {
    g[0] = x[0];
    g[1] = 4.0 * x[1];
  };
  const auto fd = hessian_definiteness(Objective("noh", 2, value, grad), s);
  EXPECT_NEAR(fd.min_eig, 1.0, 1e-6);
  EXPECT_NEAR(fd.max_eig, 4.0, 1e-6);
}
