#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sgmflow/estimators.hpp"
#include "sgmflow/flow.hpp"
#include "sgmflow/integrator.hpp"

namespace sgmflow {

// ---------------------------------------------------------------------------
// Lyapunov functions

/// V = f - f* + beta / (2 gamma kappa) |v|^2. MissingOptimum without f*.
double lyapunov_v(const FlowState& state, const FlowParams& params, const Objective& objective);

/// dV/dt along the flow: -|z|^alpha [ (1-beta)|grad f|^2 + beta(1-gamma)/gamma |v|^2 ].
/// Zero where the field vanishes (|z| <= singular_tol).
double lyapunov_vdot(const FlowState& state, const FlowParams& params, const Objective& objective,
                     double singular_tol = kDefaultSingularTol);

struct LyapunovValue {
  double v_plain = 0.0;
  double v_cross = 0.0;  // V - epsilon v^T grad f
  double epsilon = 0.0;
};

LyapunovValue lyapunov_v_cross(const FlowState& state, const FlowParams& params, const Objective& objective,
                               double epsilon);

struct SandwichBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// lower = c1 |z|^2, c1 = min{1/(2L), beta/(2 gamma kappa)};
/// upper = c2 (|grad f|^{1/eta} + |v|^2), c2 = max{eta mu^{1/(1-p)}, beta/(2 gamma kappa)}.
SandwichBounds lower_upper_bounds(const FlowState& state, const FlowParams& params, const Objective& objective,
                                  double L, const DominanceEstimate& dominance);

// ---------------------------------------------------------------------------
// Schur-complement matrices

enum class SchurMatrix { W, W1, W2 };
std::string_view to_string(SchurMatrix m);

struct SchurReport {
  SchurMatrix matrix_id = SchurMatrix::W;
  std::array<double, 4> block_entries{};  // row-major [a, b; c, d]
  double min_eig = 0.0;
  bool pd = false;
  double chosen_epsilon = 0.0;
  std::optional<double> chosen_sigma;
};

/// Smallest eigenvalue of the symmetric 2x2 matrix [a, b; b, d].
double min_eig_2x2(double a, double b, double d);

/// W = [1/L, -eps; -eps, beta/(gamma kappa)].
SchurReport schur_w(const FlowParams& params, double L, double epsilon);
/// W1 = [eps kappa gamma, eps kappa (1-gamma)/2; ., beta(1-gamma)/gamma].
SchurReport schur_w1(const FlowParams& params, double epsilon);
/// W2 = diag(1 - beta + eps kappa - eps L (1-beta)/(2 sigma), eps beta m - L (1-beta) eps sigma / 2).
SchurReport schur_w2(const FlowParams& params, double L, double m, double epsilon, double sigma);

/// sqrt(beta / (gamma kappa L)): W is positive definite iff epsilon is below it.
double w_epsilon_threshold(const FlowParams& params, double L);

struct EpsilonSigmaChoice {
  double epsilon = 0.0;
  std::optional<double> sigma;
  std::vector<SchurReport> reports;
};

/// Picks the cross-term weight epsilon (and Young parameter sigma when
/// gamma = 1) so that W and the applicable dissipation matrix (W1 for
/// gamma < 1, W2 for gamma = 1) are positive definite. Starts at half of
/// each strict threshold and halves up to 30 times. `m` is the Hessian lower
/// bound, required when gamma = 1.
EpsilonSigmaChoice select_epsilon_sigma(const FlowParams& params, double L, std::optional<double> m = std::nullopt);

// ---------------------------------------------------------------------------
// Admissibility of (alpha, beta, gamma) for a given dominance order

enum class StructuralCase { interior, heavy_ball, pi, conservative };
enum class HessianRequirement { none, positive_definite, uniformly_bounded_below };
enum class Verdict { certified, not_certified, evidence_insufficient };

std::string_view to_string(StructuralCase c);
std::string_view to_string(HessianRequirement r);
std::string_view to_string(Verdict v);

struct AdmissibilityReport {
  double p = 0.0;
  double alpha = 0.0;
  double alpha_lo = -1.0;  // interval [alpha_lo, alpha_hi)
  double alpha_hi = 0.0;
  StructuralCase structural_case = StructuralCase::interior;
  HessianRequirement hessian_requirement = HessianRequirement::none;
  std::optional<HessianEvidence> hessian_evidence;
  Verdict verdict = Verdict::not_certified;
  std::vector<std::string> reasons;

  bool alpha_admissible() const { return alpha >= alpha_lo && alpha < alpha_hi; }
};

/// Upper end of the admissible exponent interval: min{2(2-p)/p, 0}.
double alpha_upper_bound(double p);

StructuralCase classify(const FlowParams& params);

AdmissibilityReport check_admissibility(const FlowParams& params, const DominanceEstimate& dominance,
                                        std::optional<HessianEvidence> hessian_evidence);

/// Exponent a expected in dV/dt <= -c V^a near the equilibrium:
/// alpha/2 + 1 for p in (1, 2], alpha/2 + 2(p-1)/p for p in [2, 4).
double expected_certificate_exponent(double alpha, double p);

// ---------------------------------------------------------------------------
// Empirical finite-time certificate

struct TimeWindow {
  double t_begin = 0.0;
  double t_end = 0.0;
};

struct CertificateFit {
  double c = 0.0;
  double a = 0.0;
  TimeWindow fit_window;
  double residual = 0.0;  // RMS of the log-log fit
  double t_bound = 0.0;   // V(t_begin)^{1-a} / (c (1-a))
  std::size_t sample_count = 0;
  double slack = 0.0;  // max over the window of (Vdot + c V^a) / |Vdot|
};

/// Least-squares fit of log(-Vdot) = log c + a log V over the samples inside
/// `window`. Requires at least 20 samples, V > 0 and non-increasing, Vdot < 0.
/// Throws InvalidArgument when the preconditions fail and NumericalError
/// when the fitted a is outside (0, 1).
CertificateFit fit_certificate(const Trajectory& traj, TimeWindow window);

/// Window where V lies in [10 V_floor, 0.1 V(0)], V_floor being the smallest
/// positive recorded V. nullopt when the range is empty.
std::optional<TimeWindow> default_fit_window(const Trajectory& traj);

struct SettlingEnvelope {
  double t_s = 0.0;
  double C = 0.0;
  double alpha = 0.0;

  /// C (t_s - t)^{-1/alpha} on [0, t_s), 0 afterwards.
  double operator()(double t) const;
};

/// t_s = 2 f0_gap^{-alpha/2} / (-alpha rho). Requires alpha in (-1, 0).
SettlingEnvelope settling_envelope(double f0_gap, double alpha, double rho, double C);

struct PowerBoundCheck {
  double C = 0.0;
  double max_violation = 0.0;  // max of (x+y)^a - C(x^a + y); positive means violated
  std::size_t violations = 0;  // beyond a rounding allowance
  std::size_t points = 0;
};

/// Brute-force check of (x+y)^a <= C (x^a + y) on the (grid+1)^2 lattice of
/// [0, delta]^2 with C = 2^{a-1} max{1, delta^{a-1}}.
PowerBoundCheck verify_power_bound(double a, double delta, std::size_t grid);

}  // namespace sgmflow
