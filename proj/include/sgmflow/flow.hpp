#pragma once

#include <cstddef>
#include <span>

#include "sgmflow/objective.hpp"

namespace sgmflow {

/// Continuous extension radius: the field is exactly zero for |z| <= this.
inline constexpr double kDefaultSingularTol = 1e-13;

/// Parameters (alpha, beta, gamma, kappa) of the scaled gradient-momentum flow
///
///   dtheta/dt = |z|^alpha ( -(1 - beta) grad f + beta v )
///   dv/dt     = -kappa |z|^alpha ( gamma grad f + (1 - gamma) v )
///
/// with z = [grad f(theta); v]. Instances are always valid: beta, gamma in
/// (0, 1], kappa > 0, alpha in [-1, 1]. The energy-conserving configuration
/// beta = gamma = 1 is only reachable through conservative().
class FlowParams {
 public:
  /// General constructor. Rejects beta = gamma = 1.
  static FlowParams make(double alpha, double beta, double gamma, double kappa);
  /// beta = gamma = 1. Tagged non-dissipative; no convergence claim.
  static FlowParams conservative(double alpha, double kappa);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double gamma() const { return gamma_; }
  double kappa() const { return kappa_; }

  /// beta * gamma < 1.
  bool dissipative() const { return beta_ * gamma_ < 1.0; }

  /// Copy with some fields replaced; revalidated. Replacing fields so that
  /// beta = gamma = 1 only succeeds if this instance is already conservative.
  FlowParams with(std::optional<double> alpha, std::optional<double> beta,
                  std::optional<double> gamma, std::optional<double> kappa) const;

  bool operator==(const FlowParams&) const = default;

 private:
  FlowParams(double alpha, double beta, double gamma, double kappa)
      : alpha_(alpha), beta_(beta), gamma_(gamma), kappa_(kappa) {}
  static void validate(double alpha, double beta, double gamma, double kappa);

  double alpha_;
  double beta_;
  double gamma_;
  double kappa_;
};

/// beta = 1: dtheta/dt = |z|^alpha v. Requires gamma in (0, 1).
FlowParams heavy_ball_params(double alpha, double gamma, double kappa);

/// gamma = 1: dv/dt = -kappa |z|^alpha grad f. Requires beta in (0, 1).
FlowParams pi_params(double alpha, double beta, double kappa);

struct FlowState {
  Vector theta;
  Vector v;

  FlowState() = default;
  /// Throws InvalidArgument on dimension mismatch, empty or non-finite input.
  FlowState(Vector theta, Vector v);
  /// theta with zero momentum.
  static FlowState at_rest(Vector theta);

  std::size_t dim() const { return theta.size(); }
};

struct StackedGradientMomentum {
  Vector grad;
  Vector momentum;
  double norm = 0.0;
};

StackedGradientMomentum stack(const FlowState& state, const Objective& objective);

struct FieldValue {
  Vector dtheta;
  Vector dv;
};

FieldValue vector_field(const FlowState& state, const FlowParams& params, const Objective& objective,
                        double singular_tol = kDefaultSingularTol);

/// Span-based field evaluation used in inner loops. `grad` receives grad f(theta).
/// Returns |z|.
double evaluate_field(std::span<const double> theta, std::span<const double> v,
                      const FlowParams& params, const Objective& objective, double singular_tol,
                      std::span<double> grad, std::span<double> dtheta, std::span<double> dv);

/// H = 1/2 |v|^2 + kappa (f(theta) - f_ref). f_ref defaults to the objective's
/// f*; MissingOptimum when neither is available.
double energy(const FlowState& state, const Objective& objective, double kappa,
              std::optional<double> f_ref = std::nullopt);

}  // namespace sgmflow
