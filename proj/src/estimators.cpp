#include "sgmflow/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "sgmflow/error.hpp"
#include "sgmflow/kernels.hpp"

namespace sgmflow {

namespace {

constexpr std::size_t kMinSamples = 8;

Vector random_direction(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector d(n);
  double s = 0.0;
  do {
    for (double& e : d) e = normal(rng);
    s = kernels::norm(d);
  } while (s < 1e-12);
  for (double& e : d) e /= s;
  return d;
}

double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double spectral_norm(const Eigen::MatrixXd& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

std::vector<Vector> shell_samples(std::span<const double> center, double r_min, double r_max,
                                  std::size_t shells, std::size_t per_shell, std::uint64_t seed) {
  if (!(r_min > 0.0) || !(r_max >= r_min) || shells == 0 || per_shell == 0) {
    throw InvalidArgument("shell_samples: need 0 < r_min <= r_max and non-empty shells");
  }
  std::mt19937_64 rng(seed);
  std::vector<Vector> out;
  out.reserve(shells * per_shell);
  // One direction set shared by every shell: the log-log slope is then exact for
  // homogeneous objectives instead of picking up anisotropy as noise.
  std::vector<Vector> dirs;
  dirs.reserve(per_shell);
  for (std::size_t k = 0; k < per_shell; ++k) dirs.push_back(random_direction(center.size(), rng));
  const double lmin = std::log(r_min);
  const double lmax = std::log(r_max);
  for (std::size_t s = 0; s < shells; ++s) {
    const double t = shells == 1 ? 0.0 : static_cast<double>(s) / static_cast<double>(shells - 1);
    const double r = std::exp(lmin + t * (lmax - lmin));
    for (const Vector& d : dirs) {
      Vector x(center.size());
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = center[i] + r * d[i];
      out.push_back(std::move(x));
    }
  }
  return out;
}

std::vector<Vector> ball_samples(std::span<const double> center, double radius, std::size_t count,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double n = static_cast<double>(center.size());
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Vector x = random_direction(center.size(), rng);
    const double r = radius * std::pow(unit(rng), 1.0 / n);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = center[i] + r * x[i];
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<std::pair<Vector, Vector>> pair_samples(std::span<const double> center, double radius,
                                                    std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto base = ball_samples(center, radius, count, seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::pair<Vector, Vector>> out;
  out.reserve(count);
  for (const Vector& x : base) {
    const Vector d = random_direction(center.size(), rng);
    const double len = radius * std::pow(10.0, -4.0 * unit(rng));
    Vector y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += len * d[i];
    // Keep y in the ball: flip the step, then shrink it until it fits.
    double step = len;
    for (int flip = 0; dist(y, center) > radius; ++flip) {
      if (flip % 2 == 1) step *= 0.5;
      const double sign = flip % 2 == 0 ? -1.0 : 1.0;
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + sign * step * d[i];
    }
    out.emplace_back(x, std::move(y));
  }
  return out;
}

DominanceEstimate estimate_dominance(const Objective& objective, std::span<const Vector> samples) {
  const double f_star = objective.require_f_star("estimate_dominance");
  if (samples.size() < kMinSamples) {
    throw InvalidArgument("estimate_dominance: need at least 8 samples, got " + std::to_string(samples.size()));
  }
  std::vector<double> log_gap, log_grad, gap, grad_norm;
  for (const Vector& x : samples) {
    const double g = objective.value(x) - f_star;
    const double gn = kernels::norm(objective.gradient(x));
    if (!(g > 0.0) || !(gn > 0.0) || !std::isfinite(g) || !std::isfinite(gn)) {
      throw InvalidArgument("estimate_dominance: sample with f - f* <= 0 or zero gradient (at or too near the minimizer)");
    }
    gap.push_back(g);
    grad_norm.push_back(gn);
    log_gap.push_back(std::log(g));
    log_grad.push_back(std::log(gn));
  }

  // log|grad| = intercept + eta * log(gap)
  const double m = static_cast<double>(samples.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < log_gap.size(); ++i) {
    mx += log_gap[i];
    my += log_grad[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < log_gap.size(); ++i) {
    sxx += (log_gap[i] - mx) * (log_gap[i] - mx);
    sxy += (log_gap[i] - mx) * (log_grad[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("estimate_dominance: samples must span more than one objective level");
  const double eta = sxy / sxx;
  if (!(eta > 0.0 && eta < 1.0)) {
    throw NumericalError("estimate_dominance: fitted slope " + std::to_string(eta) + " is outside (0, 1)");
  }
  const double intercept = my - eta * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < log_gap.size(); ++i) {
    const double r = log_grad[i] - intercept - eta * log_gap[i];
    ss += r * r;
  }

  DominanceEstimate est;
  est.p = 1.0 / (1.0 - eta);
  est.sample_count = samples.size();
  est.residual = std::sqrt(ss / m);

  // mu^{1/(p-1)} <= (p-1)/p |grad|^{p/(p-1)} / gap at every sample.
  const double p = est.p;
  double log_bound = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gap.size(); ++i) {
    const double lb = std::log((p - 1.0) / p) + (p / (p - 1.0)) * log_grad[i] - log_gap[i];
    log_bound = std::min(log_bound, lb);
  }
  // Shave a few ulps so that re-evaluation never flips the inequality.
  est.mu = std::exp((p - 1.0) * log_bound) * (1.0 - 1e-12);
  return est;
}

bool dominance_holds(const Objective& objective, const DominanceEstimate& est, std::span<const Vector> samples,
                     double tol) {
  const double f_star = objective.require_f_star("dominance_holds");
  const double p = est.p;
  for (const Vector& x : samples) {
    const double gap = objective.value(x) - f_star;
    const double gn = kernels::norm(objective.gradient(x));
    const double lhs = (p - 1.0) / p * std::pow(gn, p / (p - 1.0));
    const double rhs = std::pow(est.mu, 1.0 / (p - 1.0)) * gap;
    if (lhs < rhs - tol) return false;
  }
  return true;
}

SmoothnessEstimate estimate_smoothness(const Objective& objective,
                                       std::span<const std::pair<Vector, Vector>> pairs) {
  if (pairs.size() < kMinSamples) {
    throw InvalidArgument("estimate_smoothness: need at least 8 pairs, got " + std::to_string(pairs.size()));
  }
  double L = 0.0;
  for (const auto& [x, y] : pairs) {
    Vector d(x.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = x[i] - y[i];
    const double dist = kernels::norm(d);
    if (!(dist > 0.0)) throw InvalidArgument("estimate_smoothness: coincident pair points");
    Vector gx = objective.gradient(x);
    const Vector gy = objective.gradient(y);
    kernels::axpy(-1.0, gy, gx);
    L = std::max(L, kernels::norm(gx) / dist);
    if (objective.has_hessian()) {
      for (const Vector* pt : {&x, &y}) {
        const Eigen::MatrixXd H = objective.hessian(*pt);
        if (H.allFinite()) L = std::max(L, spectral_norm(H));
      }
    }
  }
  return SmoothnessEstimate{L, pairs.size()};
}

HessianEvidence hessian_definiteness(const Objective& objective, std::span<const Vector> samples) {
  if (samples.empty()) throw InvalidArgument("hessian_definiteness: no samples");
  HessianEvidence ev{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0};
  for (const Vector& x : samples) {
    Eigen::MatrixXd H;
    if (objective.has_hessian()) {
      H = objective.hessian(x);
    } else {
      H = fd_hessian(objective, x, 1e-5 * std::max(1.0, kernels::norm(x)));
    }
    if (!H.allFinite()) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    ev.min_eig = std::min(ev.min_eig, es.eigenvalues().minCoeff());
    ev.max_eig = std::max(ev.max_eig, es.eigenvalues().maxCoeff());
    ++ev.sample_count;
  }
  if (ev.sample_count == 0) throw NumericalError("hessian_definiteness: Hessian non-finite at every sample");
  return ev;
}

}  // namespace sgmflow
