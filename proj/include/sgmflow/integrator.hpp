#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "sgmflow/flow.hpp"
#include "sgmflow/objective.hpp"

namespace sgmflow {

struct IntegratorConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-14;
  double initial_step = 1e-4;
  double min_step = 1e-24;
  double max_step = 0.05;
  double t_max = 50.0;
  double settle_tol = 1e-9;     // on |z|
  double record_stride = 1e-2;  // output sampling interval
  double singular_tol = kDefaultSingularTol;
  // Below this |z| a step may change z by at most z_change_cap * |z|.
  double z_cap_threshold = 1e-3;
  double z_change_cap = 0.25;
  std::size_t max_steps = 50'000'000;

  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;
};

enum class Termination { settled, horizon, step_underflow };

std::string_view to_string(Termination t);

struct SampleChannels {
  double f = 0.0;
  double V = 0.0;     // Lyapunov candidate
  double Vdot = 0.0;  // analytic derivative along the field
  double z_norm = 0.0;
  std::optional<double> energy;  // conservative flows only
};

struct Trajectory {
  std::vector<double> times;
  std::vector<FlowState> states;
  std::vector<SampleChannels> channels;
  std::optional<double> settled_at;
  Termination reason = Termination::horizon;
  FlowParams params = FlowParams::make(0.0, 0.5, 0.5, 1.0);
  // Reference value subtracted from f in V and the energy: f* if known,
  // otherwise the smallest recorded f.
  double f_ref = 0.0;
  bool f_ref_is_optimal = true;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

/// Integrates the flow with an embedded Dormand-Prince 5(4) pair.
///
/// Stops at t_max, when |z| <= settle_tol (the crossing is located by
/// bisection on the dense output of the last step and the state is frozen
/// there), or when the step size falls below min_step. Samples are recorded
/// every record_stride plus at the initial and final times. Time is
/// accumulated in double-double so steps much shorter than ulp(t) still
/// advance the clock near the settling time.
///
/// Throws NumericalError (with t and the state) if the field is non-finite
/// at an accepted state.
Trajectory integrate(const FlowState& state0, const FlowParams& params, const Objective& objective,
                     const IntegratorConfig& config);

/// Earliest recorded time after which every sample has z_norm <= settle_tol,
/// refined by bisection on the log-linear interpolant of |z| between the two
/// bracketing samples. nullopt when the last sample is above the tolerance.
std::optional<double> detect_settling(const Trajectory& traj, double settle_tol);

/// V = f - f_ref + beta / (2 gamma kappa) |v|^2 and its analytic derivative
///   Vdot = -|z|^alpha [ (1 - beta) |grad f|^2 + beta (1 - gamma) / gamma |v|^2 ].
SampleChannels compute_channels(const FlowState& state, const FlowParams& params, const Objective& objective,
                                double f_ref, double singular_tol);

}  // namespace sgmflow
