#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sgmflow/certificates.hpp"
#include "sgmflow/estimators.hpp"
#include "sgmflow/flow.hpp"
#include "sgmflow/integrator.hpp"
#include "sgmflow/objective.hpp"

namespace sgmflow {

/// Partial replacement applied to a base configuration by a sweep.
struct SweepOverride {
  std::string label;
  std::optional<double> alpha, beta, gamma, kappa;
  bool conservative = false;  // required to reach beta = gamma = 1
  std::optional<ObjectiveSpec> objective;
  std::optional<Vector> theta0;
};

struct ExperimentConfig {
  std::string label = "run";
  ObjectiveSpec objective;
  Vector theta0;
  std::optional<Vector> v0;  // zero when absent
  FlowParams flow = FlowParams::make(-0.8, 0.5, 0.5, 1.0);
  IntegratorConfig integrator;
  std::vector<SweepOverride> sweep;
  std::uint64_t seed = 20240611;  // drives the dominance / Hessian sampling
  std::size_t workers = 0;        // 0: hardware concurrency
  bool compute_certificate = true;

  /// Throws InvalidArgument when dimensions disagree.
  void validate() const;
  FlowState initial_state() const;
  /// Base config with one sweep member applied (sweep list cleared).
  ExperimentConfig apply(const SweepOverride& o, std::size_t index) const;
};

struct RunSummary {
  std::string label;
  std::optional<double> settled_at;
  Termination reason = Termination::horizon;
  double t_end = 0.0;
  double final_f_gap = 0.0;
  std::optional<double> final_state_error;  // |theta(T) - theta*| when theta* is known
  std::optional<CertificateFit> certificate;
  std::optional<std::string> certificate_note;
  std::optional<AdmissibilityReport> admissibility;
  std::optional<std::string> admissibility_note;
  std::optional<DominanceEstimate> dominance;
  std::optional<double> max_energy_drift;  // relative, conservative flows only
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::optional<std::string> error;  // set when the run itself failed (sweeps)
};

struct RunResult {
  Trajectory trajectory;
  RunSummary summary;
};

/// Integrates, summarizes, and fits a certificate on the default window when
/// the flow is dissipative and the window is usable.
RunResult run(const ExperimentConfig& config);

struct SweepMember {
  std::optional<Trajectory> trajectory;
  RunSummary summary;
};

/// Runs every sweep member (concurrently, up to config.workers threads) and
/// returns them in input order. Member failures are recorded in that member's
/// summary; the sweep itself completes.
std::vector<SweepMember> sweep_runs(const ExperimentConfig& config);
std::vector<RunSummary> sweep(const ExperimentConfig& config);

/// Seeded shell samples around the objective's minimizer used for the
/// dominance and Hessian evidence. Throws MissingOptimum without one.
std::vector<Vector> evidence_samples(const Objective& objective, std::uint64_t seed);

struct CertifyResult {
  DominanceEstimate dominance;
  std::optional<HessianEvidence> hessian;
  SmoothnessEstimate smoothness;
  AdmissibilityReport admissibility;
  std::optional<EpsilonSigmaChoice> schur;
  std::optional<std::string> schur_note;
};

/// Admissibility of config.flow for config.objective plus the Schur
/// matrices at a feasible (epsilon, sigma), all from seeded samples.
CertifyResult certify(const ExperimentConfig& config);

/// CSV with header t,theta_0..theta_{n-1},v_0..v_{n-1},f,V,Vdot,znorm and
/// shortest round-trip decimal values.
void export_trajectory(const Trajectory& traj, std::ostream& out);
void export_trajectory(const Trajectory& traj, const std::string& path);

/// Inverse of export_trajectory (times, states and the four channels).
Trajectory parse_trajectory_csv(std::istream& in);

/// Named reproduction presets:
///   fig1-left-a025, fig1-left-a05, fig1-left-a075   Rosenbrock, beta = gamma = 0.5
///   fig1-right-hb, fig1-right-pi, fig1-right-interior  Rosenbrock, alpha = -0.5
///   fig2-p1.5, fig2-p2, fig2-p3                      p-power, alpha = -0.8
///   conservative                                     beta = gamma = 1, alpha = 0
/// and the sweeps fig1-left, fig1-right, fig2.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace sgmflow
