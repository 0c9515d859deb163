#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sgmflow/certificates.hpp"
#include "sgmflow/error.hpp"
#include "sgmflow/integrator.hpp"
#include "sgmflow/kernels.hpp"

using namespace sgmflow;

namespace {

const Objective kHalfSquare = quadratic_diag({1.0});

IntegratorConfig strict(double t_max) {
  IntegratorConfig c;
  c.rel_tol = 1e-10;
  c.abs_tol = 1e-14;
  c.t_max = t_max;
  c.record_stride = 1e-2;
  return c;
}

// With f = theta^2/2, beta = gamma = 1/2, kappa = 1, alpha = 0 and v0 = 0:
// theta = e^{-t/2} cos(t/2), v = -e^{-t/2} sin(t/2), |z| = e^{-t/2}.
double theta_exact(double t) { return std::exp(-t / 2) * std::cos(t / 2); }
double v_exact(double t) { return -std::exp(-t / 2) * std::sin(t / 2); }

}  // namespace

TEST(IntegratorConfig, Validation) {
  IntegratorConfig c;
  EXPECT_NO_THROW(c.validate());
  c.rel_tol = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = IntegratorConfig{};
  c.min_step = 1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = IntegratorConfig{};
  c.settle_tol = 1e-14;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = IntegratorConfig{};
  c.t_max = -1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

// Order sanity: the norm obeys x' = -x in the time variable t/2.
TEST(Integrate, LinearDecayMatchesClosedForm) {
  const auto cfg = strict(2.0);
  const auto tr = integrate(FlowState({1.0}, {0.0}), FlowParams::make(0.0, 0.5, 0.5, 1.0), kHalfSquare, cfg);
  ASSERT_EQ(tr.reason, Termination::horizon);
  EXPECT_DOUBLE_EQ(tr.times.back(), 2.0);
  EXPECT_NEAR(tr.channels.back().z_norm, std::exp(-1.0), 10 * cfg.rel_tol * std::exp(-1.0));
  EXPECT_NEAR(tr.states.back().theta[0], theta_exact(2.0), 10 * cfg.rel_tol);
  EXPECT_NEAR(tr.states.back().v[0], v_exact(2.0), 10 * cfg.rel_tol);
}

TEST(Integrate, DenseOutputSamplesAreAccurate) {
  auto cfg = strict(5.0);
  cfg.max_step = 0.5;  // several samples per step
  const auto tr = integrate(FlowState({1.0}, {0.0}), FlowParams::make(0.0, 0.5, 0.5, 1.0), kHalfSquare, cfg);
  ASSERT_GT(tr.size(), 400u);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    EXPECT_NEAR(tr.states[i].theta[0], theta_exact(tr.times[i]), 1e-8);
    EXPECT_NEAR(tr.states[i].v[0], v_exact(tr.times[i]), 1e-8);
  }
  EXPECT_LT(tr.accepted_steps, 200u);
}

TEST(Integrate, RecordsOnStrideGrid) {
  const auto tr = integrate(FlowState({1.0}, {0.0}), FlowParams::make(0.0, 0.5, 0.5, 1.0), kHalfSquare, strict(1.0));
  ASSERT_EQ(tr.size(), 101u);
  for (std::size_t i = 1; i < tr.size(); ++i) {
    EXPECT_GT(tr.times[i], tr.times[i - 1]);
    EXPECT_NEAR(tr.times[i], 0.01 * i, 1e-15);
  }
  EXPECT_EQ(tr.states.size(), tr.size());
  EXPECT_EQ(tr.channels.size(), tr.size());
}

// |z| = e^{-t/2} never reaches zero, but crosses settle_tol at t = -2 ln(settle_tol).
TEST(Integrate, UnscaledConvergesAsymptotically) {
  const auto cfg = strict(50.0);
  const auto tr = integrate(FlowState({1.0}, {0.0}), FlowParams::make(0.0, 0.5, 0.5, 1.0), kHalfSquare, cfg);
  EXPECT_EQ(tr.reason, Termination::settled);
  ASSERT_TRUE(tr.settled_at.has_value());
  EXPECT_NEAR(*tr.settled_at, -2.0 * std::log(cfg.settle_tol), 1e-6);
  EXPECT_LT(tr.channels.back().V, 1e-10);
}

// |z|^{0.8} = 1 - 0.4 t exactly, so |z| = tol at t = (1 - tol^{0.8}) / 0.4.
TEST(Integrate, ScaledFlowSettlesAtTheAnalyticTime) {
  const auto cfg = strict(50.0);
  const auto tr = integrate(FlowState({1.0}, {0.0}), FlowParams::make(-0.8, 0.5, 0.5, 1.0), kHalfSquare, cfg);
  ASSERT_EQ(tr.reason, Termination::settled);
  ASSERT_TRUE(tr.settled_at);
  const double exact = (1.0 - std::pow(cfg.settle_tol, 0.8)) / 0.4;
  EXPECT_NEAR(*tr.settled_at, exact, 1e-7);
  EXPECT_EQ(tr.times.back(), *tr.settled_at);
  EXPECT_LE(tr.channels.back().z_norm, cfg.settle_tol);
  EXPECT_GT(tr.channels.back().z_norm, 0.5 * cfg.settle_tol);
}

TEST(Integrate, AlphaMinusOneSettlesLinearly) {
  // alpha = -1: d|z|/dt = -1/2, so |z| hits tol at 2 (1 - tol).
  const auto cfg = strict(10.0);
  const auto tr = integrate(FlowState({1.0}, {0.0}), FlowParams::make(-1.0, 0.5, 0.5, 1.0), kHalfSquare, cfg);
  ASSERT_TRUE(tr.settled_at);
  EXPECT_NEAR(*tr.settled_at, 2.0 * (1.0 - cfg.settle_tol), 1e-8);
}

TEST(Integrate, ConservativeKeepsEnergy) {
  for (double alpha : {0.0, -0.5}) {
    const auto tr = integrate(FlowState({1.0}, {0.0}), FlowParams::conservative(alpha, 1.0), kHalfSquare, strict(50.0));
    EXPECT_EQ(tr.reason, Termination::horizon);
    EXPECT_FALSE(tr.settled_at);
    const double h0 = *tr.channels.front().energy;
    for (const auto& ch : tr.channels) EXPECT_LE(std::abs(*ch.energy - h0) / h0, 1e-6);
  }
}

TEST(Integrate, StartingAtEquilibrium) {
  const auto tr = integrate(FlowState({0.0}, {0.0}), FlowParams::make(-0.5, 0.5, 0.5, 1.0), kHalfSquare, strict(1.0));
  EXPECT_EQ(tr.size(), 1u);
  EXPECT_EQ(*tr.settled_at, 0.0);
  EXPECT_EQ(tr.channels[0].V, 0.0);
}

TEST(Integrate, StepBudgetAndUnderflow) {
  auto cfg = strict(50.0);
  cfg.max_steps = 5;
  EXPECT_THROW(integrate(FlowState({1.0}, {0.0}), FlowParams::make(0.0, 0.5, 0.5, 1.0), kHalfSquare, cfg),
               NumericalError);
  auto tight = strict(50.0);
  tight.rel_tol = 1e-13;
  tight.abs_tol = 1e-16;
  tight.min_step = 1e-2;
  tight.initial_step = 1e-2;
  const auto tr = integrate(FlowState({-1.5, 2.0}, {0.0, 0.0}), FlowParams::make(-0.5, 0.5, 0.5, 1.0), rosenbrock(), tight);
  EXPECT_EQ(tr.reason, Termination::step_underflow);
  EXPECT_FALSE(tr.settled_at);
}

TEST(Integrate, ReferenceValueWithoutOptimum) {
  auto value = [](std::span<const double> x) { return 0.5 * x[0] * x[0] + 3.0; };
  auto grad = [](std::span<const double> x, std::span<double> g) { g[0] = x[0]; };
  const Objective shifted("shifted", 1, value, grad);
  const auto tr = integrate(FlowState({1.0}, {0.0}), FlowParams::make(0.0, 0.5, 0.5, 1.0), shifted, strict(5.0));
  EXPECT_FALSE(tr.f_ref_is_optimal);
  double best = INFINITY;
  for (const auto& ch : tr.channels) best = std::min(best, ch.f);
  EXPECT_EQ(tr.f_ref, best);
}

TEST(Channels, AnalyticValues) {
  const auto ch = compute_channels(FlowState({1.0}, {0.0}), FlowParams::make(0.0, 0.5, 0.5, 1.0), kHalfSquare, 0.0,
                                   kDefaultSingularTol);
  EXPECT_DOUBLE_EQ(ch.f, 0.5);
  EXPECT_DOUBLE_EQ(ch.V, 0.5);
  EXPECT_DOUBLE_EQ(ch.Vdot, -0.5);
  EXPECT_DOUBLE_EQ(ch.z_norm, 1.0);
  EXPECT_FALSE(ch.energy);
}

TEST(DetectSettling, FromSamples) {
  Trajectory tr;
  for (int i = 0; i <= 10; ++i) {
    tr.times.push_back(i);
    tr.states.emplace_back(Vector{0.0}, Vector{0.0});
    SampleChannels ch;
    ch.z_norm = std::pow(10.0, -i);
    tr.channels.push_back(ch);
  }
  // Log-linear between 1e-3 at t=3 and 1e-4 at t=4.
  EXPECT_NEAR(*detect_settling(tr, 3.1622776601683795e-4), 3.5, 1e-9);
  EXPECT_EQ(*detect_settling(tr, 1.0), 0.0);
  EXPECT_FALSE(detect_settling(tr, 1e-12));
  tr.channels[6].z_norm = 1.0;  // excursion after an early dip
  EXPECT_GT(*detect_settling(tr, 1e-5), 6.0);
}

TEST(DetectSettling, AgreesWithIntegrator) {
  auto cfg = strict(50.0);
  cfg.record_stride = 1e-3;
  const auto tr = integrate(FlowState({1.0, 0.0}, {0.0, 0.0}), FlowParams::make(-0.8, 0.5, 0.5, 1.0), p_power(2.0, 2), cfg);
  const auto ts = detect_settling(tr, cfg.settle_tol);
  ASSERT_TRUE(ts);
  EXPECT_NEAR(*ts, *tr.settled_at, 1e-3);
  const auto conservative = integrate(FlowState({1.0}, {0.0}), FlowParams::conservative(0.0, 1.0), kHalfSquare, strict(10.0));
  EXPECT_FALSE(detect_settling(conservative, 1e-9));
}

// Property: V is non-increasing for any dissipative configuration.
TEST(Integrate, LyapunovMonotoneForRandomConfigurations) {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.05, 1.0), a(-0.9, 0.5), x(-1.5, 1.5);
  const Objective objectives[] = {rosenbrock(), p_power(1.5, 2), p_power(3.0, 2), quadratic_diag({1.0, 4.0})};
  for (int trial = 0; trial < 24; ++trial) {
    const Objective& f = objectives[trial % 4];
    const double beta = trial % 3 == 0 ? 1.0 : u(rng);
    const double gamma = trial % 5 == 0 ? 1.0 : u(rng);
    if (beta == 1.0 && gamma == 1.0) continue;
    const auto p = FlowParams::make(a(rng), beta, gamma, 0.5 + u(rng));
    auto cfg = strict(5.0);
    cfg.settle_tol = 1e-7;
    const auto tr = integrate(FlowState({x(rng), x(rng)}, {x(rng), x(rng)}), p, f, cfg);
    const double tol = 1e-9 * std::max(tr.channels.front().V, 1.0);
    for (std::size_t i = 1; i < tr.size(); ++i) {
      ASSERT_LE(tr.channels[i].V, tr.channels[i - 1].V + tol) << f.name() << " trial " << trial << " t=" << tr.times[i];
    }
  }
}

// Property: recorded Vdot matches the centered difference of V.
TEST(Integrate, VdotMatchesFiniteDifferenceOfV) {
  auto cfg = strict(3.0);
  cfg.rel_tol = 1e-12;
  cfg.record_stride = 1e-4;  // the Rosenbrock transient near t = 0.02 lasts only a few 1e-3
  const auto tr = integrate(FlowState({-1.2, 1.0}, {0.3, -0.2}), FlowParams::make(-0.3, 0.6, 0.4, 1.5), rosenbrock(), cfg);
  // Five-point stencil: the three-point one is O(h^2) and too coarse in the early transient.
  const double h = cfg.record_stride;
  for (std::size_t i = 2; i + 2 < tr.size(); ++i) {
    const auto& c = tr.channels;
    const double fd = (c[i - 2].V - 8.0 * c[i - 1].V + 8.0 * c[i + 1].V - c[i + 2].V) / (12.0 * h);
    EXPECT_NEAR(fd, tr.channels[i].Vdot, 1e-4 * std::abs(tr.channels[i].Vdot)) << "t=" << tr.times[i];
  }
}

TEST(Integrate, KernelTablesGiveSameTrajectoryUpToRounding) {
  const auto run = [] {
    return integrate(FlowState({-1.5, 2.0}, {0.0, 0.0}), FlowParams::make(-0.5, 0.5, 0.5, 1.0), rosenbrock(), strict(5.0));
  };
  ASSERT_TRUE(kernels::select("scalar"));
  const auto ref = run();
  for (const auto* t : kernels::available_tables()) {
    ASSERT_TRUE(kernels::select(t->name));
    const auto tr = run();
    ASSERT_EQ(tr.size(), ref.size()) << t->name;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      EXPECT_NEAR(tr.states[i].theta[0], ref.states[i].theta[0], 1e-8) << t->name;
      EXPECT_NEAR(tr.states[i].theta[1], ref.states[i].theta[1], 1e-8) << t->name;
    }
  }
  kernels::select(kernels::available_tables().back()->name);
}
