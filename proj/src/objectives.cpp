#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sgmflow/error.hpp"
#include "sgmflow/kernels.hpp"
#include "sgmflow/objective.hpp"

namespace sgmflow {

namespace {

constexpr double kRegistrationTol = 1e-10;

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double e) { return std::isfinite(e); });
}

}  // namespace

Objective::Objective(std::string name, std::size_t dim, ValueFn value, GradientFn gradient,
                     HessianFn hessian, std::optional<Optimum> optimum)
    : name_(std::move(name)),
      dim_(dim),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      hessian_(std::move(hessian)),
      optimum_(std::move(optimum)) {
  if (dim_ == 0) throw InvalidArgument("objective '" + name_ + "': dimension must be >= 1");
  if (!value_ || !gradient_) throw InvalidArgument("objective '" + name_ + "': value and gradient required");

  std::vector<Vector> probes;
  if (optimum_) {
    if (optimum_->theta.size() != dim_) {
      throw InvalidArgument("objective '" + name_ + "': optimum has wrong dimension");
    }
    const Vector g = this->gradient(optimum_->theta);
    if (kernels::norm(g) > kRegistrationTol) {
      throw InvalidArgument("objective '" + name_ + "': gradient does not vanish at the registered optimum");
    }
    probes.push_back(optimum_->theta);
  }
  if (hessian_) {
    Vector probe(dim_);
    for (std::size_t i = 0; i < dim_; ++i) probe[i] = 0.5 + 0.25 * static_cast<double>(i);
    probes.push_back(probe);
    for (double& e : probe) e = -e * 1.5;
    probes.push_back(probe);
    for (const Vector& p : probes) {
      const Eigen::MatrixXd H = hessian_(p);
      if (H.rows() != static_cast<Eigen::Index>(dim_) || H.cols() != static_cast<Eigen::Index>(dim_)) {
        throw InvalidArgument("objective '" + name_ + "': Hessian has wrong shape");
      }
      if (H.allFinite() && (H - H.transpose()).cwiseAbs().maxCoeff() > kRegistrationTol) {
        throw InvalidArgument("objective '" + name_ + "': Hessian is not symmetric");
      }
    }
  }
}

void Objective::check_dim(std::span<const double> theta) const {
  if (theta.size() != dim_) {
    throw InvalidArgument("objective '" + name_ + "': expected dimension " + std::to_string(dim_) +
                          ", got " + std::to_string(theta.size()));
  }
}

double Objective::value(std::span<const double> theta) const {
  check_dim(theta);
  return value_(theta);
}

Vector Objective::gradient(std::span<const double> theta) const {
  Vector g(dim_);
  gradient(theta, g);
  return g;
}

void Objective::gradient(std::span<const double> theta, std::span<double> out) const {
  check_dim(theta);
  gradient_(theta, out);
}

Eigen::MatrixXd Objective::hessian(std::span<const double> theta) const {
  check_dim(theta);
  if (!hessian_) throw InvalidArgument("objective '" + name_ + "' has no analytic Hessian");
  return hessian_(theta);
}

std::optional<double> Objective::f_star() const {
  if (!optimum_) return std::nullopt;
  return optimum_->f_star;
}

double Objective::require_f_star(const char* what) const {
  if (!optimum_) {
    throw MissingOptimum(std::string(what) + " requires the optimal value f*, but objective '" + name_ +
                         "' does not provide one");
  }
  return optimum_->f_star;
}

Objective rosenbrock() {
  auto value = [](std::span<const double> x) {
    const double a = x[1] - x[0] * x[0];
    const double b = 1.0 - x[0];
    return 100.0 * a * a + b * b;
  };
  auto gradient = [](std::span<const double> x, std::span<double> g) {
    const double a = x[1] - x[0] * x[0];
    g[0] = -400.0 * x[0] * a - 2.0 * (1.0 - x[0]);
    g[1] = 200.0 * a;
  };
  auto hessian = [](std::span<const double> x) {
    Eigen::MatrixXd H(2, 2);
    H(0, 0) = 1200.0 * x[0] * x[0] - 400.0 * x[1] + 2.0;
    H(0, 1) = H(1, 0) = -400.0 * x[0];
    H(1, 1) = 200.0;
    return H;
  };
  return Objective("rosenbrock", 2, value, gradient, hessian, Optimum{{1.0, 1.0}, 0.0});
}

Objective p_power(double p, std::size_t dim) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw InvalidArgument("ppower: order p must be a finite real > 1, got " + std::to_string(p));
  }
  if (dim == 0) throw InvalidArgument("ppower: dimension must be >= 1");
  auto value = [p](std::span<const double> x) {
    const double r = std::sqrt(kernels::norm_sq(x));
    return std::pow(r, p) / p;
  };
  auto gradient = [p](std::span<const double> x, std::span<double> g) {
    const double r = std::sqrt(kernels::norm_sq(x));
    const double s = r > 0.0 ? std::pow(r, p - 2.0) : 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = s * x[i];
  };
  // H = r^{p-2} (I + (p - 2) x x^T / r^2); singular at 0 for p < 2.
  auto hessian = [p, dim](std::span<const double> x) {
    const auto n = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    const double r = std::sqrt(kernels::norm_sq(x));
    if (r == 0.0) {
      if (p == 2.0) H.setIdentity();
      else if (p < 2.0) H.fill(std::numeric_limits<double>::infinity());
      return H;
    }
    const Eigen::Map<const Eigen::VectorXd> u(x.data(), n);
    H.setIdentity();
    H += (p - 2.0) * (u * u.transpose()) / (r * r);
    H *= std::pow(r, p - 2.0);
    return H;
  };
  return Objective("ppower", dim, value, gradient, hessian, Optimum{Vector(dim, 0.0), 0.0});
}

Objective quadratic(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols() || A.rows() == 0) throw InvalidArgument("quadratic: matrix must be square and non-empty");
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > kRegistrationTol) {
    throw InvalidArgument("quadratic: matrix must be symmetric");
  }
  const auto dim = static_cast<std::size_t>(A.rows());
  auto value = [A](std::span<const double> x) {
    const Eigen::Map<const Eigen::VectorXd> u(x.data(), A.rows());
    return 0.5 * u.dot(A * u);
  };
  auto gradient = [A](std::span<const double> x, std::span<double> g) {
    const Eigen::Map<const Eigen::VectorXd> u(x.data(), A.rows());
    Eigen::Map<Eigen::VectorXd>(g.data(), A.rows()) = A * u;
  };
  auto hessian = [A](std::span<const double>) { return A; };
  return Objective("quadratic", dim, value, gradient, hessian, Optimum{Vector(dim, 0.0), 0.0});
}

Objective quadratic_diag(const Vector& diag) {
  if (diag.empty()) throw InvalidArgument("quadratic: diag must be non-empty");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(diag.size()), static_cast<Eigen::Index>(diag.size()));
  for (std::size_t i = 0; i < diag.size(); ++i) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = diag[i];
  return quadratic(A);
}

std::vector<std::string> registered_objectives() { return {"rosenbrock", "ppower", "quadratic"}; }

namespace {

std::size_t integer_param(const ObjectiveSpec& spec, const std::string& key, std::size_t fallback) {
  const auto it = spec.scalars.find(key);
  if (it == spec.scalars.end()) return fallback;
  const double d = it->second;
  if (!(d >= 1.0) || d != std::floor(d) || d > 1e6) {
    throw InvalidArgument(spec.name + ": parameter '" + key + "' must be a positive integer");
  }
  return static_cast<std::size_t>(d);
}

}  // namespace

Objective make_objective(const ObjectiveSpec& spec) {
  if (spec.name == "rosenbrock") return rosenbrock();
  if (spec.name == "ppower") {
    const auto it = spec.scalars.find("p");
    if (it == spec.scalars.end()) throw InvalidArgument("ppower: parameter 'p' is required");
    return p_power(it->second, integer_param(spec, "dim", 2));
  }
  if (spec.name == "quadratic") {
    if (const auto d = spec.vectors.find("diag"); d != spec.vectors.end()) return quadratic_diag(d->second);
    if (const auto m = spec.vectors.find("matrix"); m != spec.vectors.end()) {
      const std::size_t n = integer_param(spec, "dim", 0);
      if (n == 0 || m->second.size() != n * n) {
        throw InvalidArgument("quadratic: 'matrix' needs 'dim' and dim*dim entries");
      }
      Eigen::MatrixXd A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m->second[i * n + j];
      return quadratic(A);
    }
    return quadratic_diag(Vector(integer_param(spec, "dim", 2), 1.0));
  }
  throw InvalidArgument("unknown objective '" + spec.name + "' (known: rosenbrock, ppower, quadratic)");
}

Vector fd_gradient(const Objective& objective, std::span<const double> theta, double h) {
  if (!(h > 0.0)) throw InvalidArgument("fd_gradient: step h must be positive");
  Vector x(theta.begin(), theta.end());
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = objective.value(x);
    x[i] = xi - h;
    const double fm = objective.value(x);
    x[i] = xi;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericalError("fd_gradient: non-finite objective value near coordinate " + std::to_string(i));
    }
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const Objective& objective, std::span<const double> theta, double h) {
  if (!(h > 0.0)) throw InvalidArgument("fd_hessian: step h must be positive");
  const std::size_t n = theta.size();
  Vector x(theta.begin(), theta.end());
  Eigen::MatrixXd H(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Vector gp(n), gm(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double xj = x[j];
    x[j] = xj + h;
    objective.gradient(x, gp);
    x[j] = xj - h;
    objective.gradient(x, gm);
    x[j] = xj;
    for (std::size_t i = 0; i < n; ++i) {
      H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (gp[i] - gm[i]) / (2.0 * h);
    }
  }
  if (!all_finite(std::span<const double>(H.data(), static_cast<std::size_t>(H.size())))) {
    throw NumericalError("fd_hessian: non-finite gradient differences");
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace sgmflow
