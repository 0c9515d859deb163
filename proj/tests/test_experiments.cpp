#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "sgmflow/config.hpp"
#include "sgmflow/error.hpp"
#include "sgmflow/experiments.hpp"
#include "sgmflow/report.hpp"

using namespace sgmflow;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.label = "small";
  c.objective.name = "ppower";
  c.objective.scalars["p"] = 2.0;
  c.theta0 = {1.0, 0.0};
  c.integrator.t_max = 5.0;
  return c;
}

std::string csv_of(const Trajectory& tr) {
  std::ostringstream os;
  export_trajectory(tr, os);
  return os.str();
}

}  // namespace

TEST(Config, Validation) {
  auto c = small_config();
  EXPECT_NO_THROW(c.validate());
  c.theta0 = {1.0};
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = small_config();
  c.v0 = Vector{0.0};
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = small_config();
  c.objective.name = "nosuch";
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Config, ApplyOverride) {
  auto c = small_config();
  SweepOverride o;
  o.alpha = -0.3;
  o.gamma = 1.0;
  const auto a = c.apply(o, 2);
  EXPECT_EQ(a.label, "small-2");
  EXPECT_EQ(a.flow.alpha(), -0.3);
  EXPECT_EQ(a.flow.gamma(), 1.0);
  EXPECT_EQ(a.flow.beta(), c.flow.beta());
  SweepOverride both;
  both.beta = 1.0;
  both.gamma = 1.0;
  EXPECT_THROW(c.apply(both, 0), InvalidArgument);
  both.conservative = true;
  EXPECT_FALSE(c.apply(both, 0).flow.dissipative());
  SweepOverride obj;
  obj.objective = ObjectiveSpec{"rosenbrock", {}, {}};
  obj.theta0 = Vector{-1.5, 2.0};
  const auto r = c.apply(obj, 0);
  EXPECT_EQ(r.objective.name, "rosenbrock");
  EXPECT_EQ(r.theta0, (Vector{-1.5, 2.0}));
}

TEST(Config, JsonRoundTrip) {
  auto c = preset("fig1-right");
  c.v0 = Vector{0.1, -0.2};
  c.seed = 99;
  const Json j = to_json(c);
  const auto back = config_from_json(j);
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_EQ(back.sweep.size(), 3u);
  EXPECT_EQ(back.flow, c.flow);
  EXPECT_EQ(back.objective, c.objective);
}

TEST(Config, ParsesDocumentAndRejectsBadInput) {
  const auto c = config_from_json(Json::parse(R"({
    "schema_version": 1, "label": "x",
    "objective": {"name": "ppower", "p": 3, "dim": 2},
    "theta0": [1, 0],
    "flow": {"alpha": -0.8, "beta": 0.5, "gamma": 0.5, "kappa": 1},
    "integrator": {"rel_tol": 1e-9, "t_max": 10},
    "sweep": [{"label": "a", "alpha": -0.9}, {"label": "c", "conservative": true, "alpha": 0}]
  })"));
  EXPECT_EQ(c.objective.scalars.at("p"), 3.0);
  EXPECT_EQ(c.integrator.t_max, 10.0);
  EXPECT_EQ(c.integrator.rel_tol, 1e-9);
  EXPECT_EQ(c.sweep[0].alpha, -0.9);
  EXPECT_TRUE(c.sweep[1].conservative);

  EXPECT_THROW(config_from_json(Json::parse(R"({"schema_version": 2, "objective": {"name": "rosenbrock"}, "theta0": [0, 0]})")),
               InvalidArgument);
  EXPECT_THROW(config_from_json(Json::parse(R"({"schema_version": 1, "theta0": [0, 0]})")), InvalidArgument);
  EXPECT_THROW(config_from_json(Json::parse(R"({"schema_version": 1, "objective": {"name": "rosenbrock"}})")),
               InvalidArgument);
  EXPECT_THROW(config_from_json(Json::parse(
                   R"({"schema_version": 1, "objective": {"name": "rosenbrock"}, "theta0": [0, 0], "integrator": {"rtol": 1}})")),
               InvalidArgument);
  EXPECT_THROW(config_from_json(Json::parse(
                   R"({"schema_version": 1, "objective": {"name": "rosenbrock"}, "theta0": [0, 0], "flow": {"beta": 1, "gamma": 1}})")),
               InvalidArgument);
  EXPECT_THROW(load_config("/nonexistent/config.json"), InvalidArgument);
}

TEST(Presets, AllResolveAndValidate) {
  for (const auto& name : preset_names()) {
    const auto c = preset(name);
    EXPECT_NO_THROW(c.validate()) << name;
    for (std::size_t i = 0; i < c.sweep.size(); ++i) EXPECT_NO_THROW(c.apply(c.sweep[i], i).validate()) << name;
  }
  EXPECT_THROW(preset("fig9"), InvalidArgument);
  EXPECT_EQ(preset("fig1-left-a05").theta0, (Vector{-1.5, 2.0}));
  EXPECT_EQ(preset("fig2-p3").theta0, (Vector{1.0, 0.0}));
}

TEST(Run, SettlesAndSummarizes) {
  const auto r = run(preset("fig2-p2"));
  ASSERT_TRUE(r.summary.settled_at);
  EXPECT_LT(*r.summary.settled_at, 50.0);
  EXPECT_GE(r.summary.final_f_gap, 0.0);
  ASSERT_TRUE(r.summary.certificate);
  EXPECT_NEAR(r.summary.certificate->a, 0.6, 0.05);
  ASSERT_TRUE(r.summary.admissibility);
  EXPECT_EQ(r.summary.admissibility->verdict, Verdict::certified);
  EXPECT_EQ(r.summary.seed, preset("fig2-p2").seed);
}

TEST(Run, RosenbrockConvergesToMinimizer) {
  const auto r = run(preset("fig1-left-a05"));
  ASSERT_TRUE(r.summary.settled_at);
  EXPECT_LT(*r.summary.final_state_error, 1e-6);
}

TEST(Run, ConservativePresetOscillates) {
  const auto r = run(preset("conservative"));
  EXPECT_FALSE(r.summary.settled_at);
  EXPECT_FALSE(r.summary.certificate);
  ASSERT_TRUE(r.summary.max_energy_drift);
  EXPECT_LE(*r.summary.max_energy_drift, 1e-6);
  double lo = INFINITY, hi = 0.0;
  for (const auto& ch : r.trajectory.channels) {
    lo = std::min(lo, ch.f);
    hi = std::max(hi, ch.f);
  }
  EXPECT_LT(lo, 1e-6);
  EXPECT_NEAR(hi, 0.5, 1e-6);
}

// Property: identical configs give identical results.
TEST(Run, Deterministic) {
  const auto a = run(preset("fig1-right-pi"));
  const auto b = run(preset("fig1-right-pi"));
  EXPECT_EQ(csv_of(a.trajectory), csv_of(b.trajectory));
  EXPECT_EQ(to_json(a.summary).dump(), to_json(b.summary).dump());
}

// Property: a member's summary depends only on its own override.
TEST(Sweep, OrderIndependent) {
  auto c = preset("fig1-left");
  c.workers = 3;
  const auto forward = sweep(c);
  std::reverse(c.sweep.begin(), c.sweep.end());
  c.workers = 1;
  const auto backward = sweep(c);
  ASSERT_EQ(forward.size(), 3u);
  for (std::size_t i = 0; i < forward.size(); ++i) {
    EXPECT_EQ(to_json(forward[i]).dump(), to_json(backward[2 - i]).dump());
  }
}

TEST(Sweep, MemberErrorsAreAttached) {
  auto c = small_config();
  SweepOverride good;
  good.label = "good";
  SweepOverride bad;
  bad.label = "bad";
  bad.objective = ObjectiveSpec{"rosenbrock", {}, {}};
  bad.theta0 = Vector{1.0, 2.0, 3.0};
  c.sweep = {good, bad};
  const auto rows = sweep(c);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].error);
  ASSERT_TRUE(rows[1].error);
  EXPECT_EQ(rows[1].label, "bad");
  c.sweep.clear();
  EXPECT_THROW(sweep(c), InvalidArgument);
}

TEST(Export, EquilibriumSingleRow) {
  IntegratorConfig cfg;
  const auto tr = integrate(FlowState({0.0, 0.0}, {0.0, 0.0}), FlowParams::make(-0.5, 0.5, 0.5, 1.0), p_power(2.0, 2), cfg);
  EXPECT_EQ(csv_of(tr), "t,theta_0,theta_1,v_0,v_1,f,V,Vdot,znorm\n0,0,0,0,0,0,0,0,0\n");
}

// Property: export -> parse -> export is byte-identical, channels bit-identical.
TEST(Export, RoundTrip) {
  const auto r = run(preset("fig1-right-interior"));
  const std::string first = csv_of(r.trajectory);
  std::istringstream in(first);
  const Trajectory parsed = parse_trajectory_csv(in);
  ASSERT_EQ(parsed.size(), r.trajectory.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    EXPECT_EQ(parsed.times[i], r.trajectory.times[i]);
    EXPECT_EQ(parsed.states[i].theta, r.trajectory.states[i].theta);
    EXPECT_EQ(parsed.channels[i].V, r.trajectory.channels[i].V);
    EXPECT_EQ(parsed.channels[i].Vdot, r.trajectory.channels[i].Vdot);
    EXPECT_EQ(parsed.channels[i].z_norm, r.trajectory.channels[i].z_norm);
  }
  EXPECT_EQ(csv_of(parsed), first);
}

TEST(Export, RejectsMalformedInput) {
  std::istringstream bad_header("t,x\n0,1\n");
  EXPECT_THROW(parse_trajectory_csv(bad_header), InvalidArgument);
  std::istringstream bad_row("t,theta_0,v_0,f,V,Vdot,znorm\n0,1,0,abc,0,0,0\n");
  EXPECT_THROW(parse_trajectory_csv(bad_row), InvalidArgument);
}

TEST(Report, SummaryShape) {
  const auto r = run(preset("fig2-p3"));
  const Json j = to_json(r.summary);
  for (const char* k : {"label", "settled_at", "final_f_gap", "final_state_error", "certificate", "admissibility"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  for (const char* k : {"c", "a", "t_bound", "residual"}) EXPECT_TRUE(j["certificate"].contains(k)) << k;
  for (const char* k : {"verdict", "alpha_interval", "structural_case"}) EXPECT_TRUE(j["admissibility"].contains(k)) << k;
  EXPECT_EQ(j["admissibility"]["verdict"], "certified");
}

TEST(Certify, ReportsForP3AtAlphaMinus08) {
  auto c = preset("fig2-p3");
  const auto r = certify(c);
  EXPECT_EQ(r.admissibility.verdict, Verdict::certified);
  EXPECT_NEAR(r.admissibility.alpha_hi, -2.0 / 3.0, 0.01);
  ASSERT_TRUE(r.schur);
  for (const auto& s : r.schur->reports) EXPECT_TRUE(s.pd);
  c.flow = FlowParams::make(-0.5, 0.5, 0.5, 1.0);
  EXPECT_EQ(certify(c).admissibility.verdict, Verdict::not_certified);
}
