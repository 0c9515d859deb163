#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sgmflow {

using Vector = std::vector<double>;

struct Optimum {
  Vector theta;
  double f_star = 0.0;
};

/// A smooth objective f : R^n -> R with an analytic gradient, an optional
/// analytic Hessian and optional knowledge of its minimizer.
///
/// Callables must be pure: the same input always yields the same output, and
/// concurrent calls from several threads are allowed.
class Objective {
 public:
  using ValueFn = std::function<double(std::span<const double>)>;
  using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;
  using HessianFn = std::function<Eigen::MatrixXd(std::span<const double>)>;

  /// Validates the registration: the gradient must vanish at the optimum
  /// (to 1e-10) and the Hessian must be symmetric (to 1e-10) at the optimum
  /// and a few fixed probe points.
  Objective(std::string name, std::size_t dim, ValueFn value, GradientFn gradient,
            HessianFn hessian = {}, std::optional<Optimum> optimum = std::nullopt);

  const std::string& name() const { return name_; }
  std::size_t dim() const { return dim_; }

  double value(std::span<const double> theta) const;
  Vector gradient(std::span<const double> theta) const;
  void gradient(std::span<const double> theta, std::span<double> out) const;

  bool has_hessian() const { return static_cast<bool>(hessian_); }
  /// Throws InvalidArgument when no analytic Hessian was registered.
  Eigen::MatrixXd hessian(std::span<const double> theta) const;

  const std::optional<Optimum>& optimum() const { return optimum_; }
  std::optional<double> f_star() const;
  /// f* or MissingOptimum.
  double require_f_star(const char* what) const;

 private:
  void check_dim(std::span<const double> theta) const;

  std::string name_;
  std::size_t dim_;
  ValueFn value_;
  GradientFn gradient_;
  HessianFn hessian_;
  std::optional<Optimum> optimum_;
};

/// f = 100 (t2 - t1^2)^2 + (1 - t1)^2, minimizer (1, 1), f* = 0.
Objective rosenbrock();

/// f = |theta|^p / p, minimizer 0. The gradient |theta|^{p-2} theta is
/// extended by 0 at the origin. Requires p > 1.
Objective p_power(double p, std::size_t dim);

/// f = 1/2 theta^T A theta for symmetric positive definite A.
Objective quadratic(const Eigen::MatrixXd& A);
Objective quadratic_diag(const Vector& diag);

/// Name plus parameter map, as used in configuration files.
///   rosenbrock                      (no parameters)
///   ppower      p: real > 1, dim: integer >= 1 (default 2)
///   quadratic   diag: list of reals  (or)  matrix: row-major n*n list + dim
struct ObjectiveSpec {
  std::string name = "ppower";
  std::map<std::string, double> scalars;
  std::map<std::string, Vector> vectors;

  bool operator==(const ObjectiveSpec&) const = default;
};

/// Resolves a spec through the built-in registry. Throws InvalidArgument for
/// unknown names or bad parameters.
Objective make_objective(const ObjectiveSpec& spec);

/// Names known to make_objective.
std::vector<std::string> registered_objectives();

/// Central-difference gradient, component i = (f(x + h e_i) - f(x - h e_i)) / 2h.
Vector fd_gradient(const Objective& objective, std::span<const double> theta, double h);

/// Symmetrized central-difference Hessian built from the analytic gradient.
Eigen::MatrixXd fd_hessian(const Objective& objective, std::span<const double> theta, double h);

}  // namespace sgmflow
