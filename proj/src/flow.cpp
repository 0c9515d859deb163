#include "sgmflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "sgmflow/error.hpp"
#include "sgmflow/kernels.hpp"

namespace sgmflow {

namespace {

bool finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double e) { return std::isfinite(e); });
}

std::string describe(double alpha, double beta, double gamma, double kappa) {
  std::ostringstream os;
  os << "(alpha=" << alpha << ", beta=" << beta << ", gamma=" << gamma << ", kappa=" << kappa << ")";
  return os.str();
}

}  // namespace

void FlowParams::validate(double alpha, double beta, double gamma, double kappa) {
  const auto in_unit = [](double x) { return x > 0.0 && x <= 1.0; };
  if (!std::isfinite(alpha) || alpha < -1.0 || alpha > 1.0) {
    throw InvalidArgument("flow params " + describe(alpha, beta, gamma, kappa) + ": alpha must lie in [-1, 1]");
  }
  if (!in_unit(beta)) throw InvalidArgument("flow params " + describe(alpha, beta, gamma, kappa) + ": beta must lie in (0, 1]");
  if (!in_unit(gamma)) throw InvalidArgument("flow params " + describe(alpha, beta, gamma, kappa) + ": gamma must lie in (0, 1]");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw InvalidArgument("flow params " + describe(alpha, beta, gamma, kappa) + ": kappa must be positive");
  }
}

FlowParams FlowParams::make(double alpha, double beta, double gamma, double kappa) {
  validate(alpha, beta, gamma, kappa);
  if (beta == 1.0 && gamma == 1.0) {
    throw InvalidArgument("flow params " + describe(alpha, beta, gamma, kappa) +
                          ": beta = gamma = 1 is the non-dissipative configuration; use FlowParams::conservative");
  }
  return FlowParams(alpha, beta, gamma, kappa);
}

FlowParams FlowParams::conservative(double alpha, double kappa) {
  validate(alpha, 1.0, 1.0, kappa);
  return FlowParams(alpha, 1.0, 1.0, kappa);
}

FlowParams FlowParams::with(std::optional<double> alpha, std::optional<double> beta,
                            std::optional<double> gamma, std::optional<double> kappa) const {
  const double a = alpha.value_or(alpha_);
  const double b = beta.value_or(beta_);
  const double g = gamma.value_or(gamma_);
  const double k = kappa.value_or(kappa_);
  if (b == 1.0 && g == 1.0 && !dissipative()) return conservative(a, k);
  return make(a, b, g, k);
}

FlowParams heavy_ball_params(double alpha, double gamma, double kappa) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw InvalidArgument("heavy-ball params: gamma must lie in (0, 1); gamma = 1 is the conservative case");
  }
  return FlowParams::make(alpha, 1.0, gamma, kappa);
}

FlowParams pi_params(double alpha, double beta, double kappa) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw InvalidArgument("PI params: beta must lie in (0, 1); beta = 1 is the conservative case");
  }
  return FlowParams::make(alpha, beta, 1.0, kappa);
}

FlowState::FlowState(Vector theta_in, Vector v_in) : theta(std::move(theta_in)), v(std::move(v_in)) {
  if (theta.empty()) throw InvalidArgument("flow state: dimension must be >= 1");
  if (theta.size() != v.size()) {
    throw InvalidArgument("flow state: theta has dimension " + std::to_string(theta.size()) +
                          " but v has dimension " + std::to_string(v.size()));
  }
  if (!finite(theta) || !finite(v)) throw InvalidArgument("flow state: entries must be finite");
}

FlowState FlowState::at_rest(Vector theta) {
  Vector v(theta.size(), 0.0);
  return FlowState(std::move(theta), std::move(v));
}

StackedGradientMomentum stack(const FlowState& state, const Objective& objective) {
  StackedGradientMomentum z;
  z.grad = objective.gradient(state.theta);
  if (!finite(z.grad)) throw NumericalError("objective '" + objective.name() + "' returned a non-finite gradient");
  z.momentum = state.v;
  z.norm = std::sqrt(kernels::norm_sq(z.grad) + kernels::norm_sq(z.momentum));
  return z;
}

double evaluate_field(std::span<const double> theta, std::span<const double> v, const FlowParams& params,
                      const Objective& objective, double singular_tol, std::span<double> grad,
                      std::span<double> dtheta, std::span<double> dv) {
  const std::size_t n = theta.size();
  objective.gradient(theta, grad);
  const double znorm = std::sqrt(kernels::norm_sq(grad) + kernels::norm_sq(v));
  if (!std::isfinite(znorm)) {
    throw NumericalError("objective '" + objective.name() + "' returned a non-finite gradient");
  }
  if (znorm <= singular_tol) {
    std::fill(dtheta.begin(), dtheta.end(), 0.0);
    std::fill(dv.begin(), dv.end(), 0.0);
    return znorm;
  }
  const double scale = params.alpha() == 0.0 ? 1.0 : std::pow(znorm, params.alpha());
  const double b = params.beta();
  const double g = params.gamma();
  const double k = params.kappa();
  for (std::size_t i = 0; i < n; ++i) {
    dtheta[i] = scale * (-(1.0 - b) * grad[i] + b * v[i]);
    dv[i] = -k * scale * (g * grad[i] + (1.0 - g) * v[i]);
  }
  return znorm;
}

FieldValue vector_field(const FlowState& state, const FlowParams& params, const Objective& objective,
                        double singular_tol) {
  if (!(singular_tol > 0.0)) throw InvalidArgument("vector_field: singular_tol must be positive");
  if (state.dim() != objective.dim() || state.v.size() != objective.dim()) {
    throw InvalidArgument("vector_field: state dimension " + std::to_string(state.dim()) +
                          " does not match objective dimension " + std::to_string(objective.dim()));
  }
  const std::size_t n = state.dim();
  FieldValue out{Vector(n), Vector(n)};
  Vector grad(n);
  evaluate_field(state.theta, state.v, params, objective, singular_tol, grad, out.dtheta, out.dv);
  return out;
}

double energy(const FlowState& state, const Objective& objective, double kappa, std::optional<double> f_ref) {
  if (!(kappa > 0.0)) throw InvalidArgument("energy: kappa must be positive");
  const double ref = f_ref ? *f_ref : objective.require_f_star("energy");
  const double f = objective.value(state.theta);
  if (!std::isfinite(f)) throw NumericalError("energy: non-finite objective value");
  return 0.5 * kernels::norm_sq(state.v) + kappa * (f - ref);
}

}  // namespace sgmflow
