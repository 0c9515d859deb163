#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sgmflow/objective.hpp"

namespace sgmflow {

/// Gradient dominance of order p with constant mu:
///   (p-1)/p |grad f|^{p/(p-1)} >= mu^{1/(p-1)} (f - f*)
struct DominanceEstimate {
  double p = 2.0;
  double mu = 0.0;
  std::size_t sample_count = 0;
  double residual = 0.0;  // RMS of the log-log fit

  double eta() const { return (p - 1.0) / p; }
};

struct SmoothnessEstimate {
  double L = 0.0;
  std::size_t sample_count = 0;
};

struct HessianEvidence {
  double min_eig = 0.0;
  double max_eig = 0.0;
  std::size_t sample_count = 0;
};

/// Points on `shells` spheres around `center`, radii log-spaced in
/// [r_min, r_max]. The same `per_shell` random directions are used on every shell.
std::vector<Vector> shell_samples(std::span<const double> center, double r_min, double r_max,
                                  std::size_t shells, std::size_t per_shell, std::uint64_t seed);

/// Uniform points in the ball of radius `radius` around `center`.
std::vector<Vector> ball_samples(std::span<const double> center, double radius, std::size_t count,
                                 std::uint64_t seed);

/// Pairs (x, y) with x uniform in the ball and |y - x| log-uniform in [1e-4, 1]·radius.
/// Both points lie in the ball (the step is flipped or shortened when needed).
std::vector<std::pair<Vector, Vector>> pair_samples(std::span<const double> center, double radius,
                                                    std::size_t count, std::uint64_t seed);

/// Fits p from the slope of log|grad f| against log(f - f*) (slope = (p-1)/p),
/// then takes the largest mu for which the dominance inequality holds on every
/// sample with that p. Requires f* and at least 8 samples, none at the minimizer.
DominanceEstimate estimate_dominance(const Objective& objective, std::span<const Vector> samples);

/// True if the dominance inequality holds at every sample with slack `tol`.
bool dominance_holds(const Objective& objective, const DominanceEstimate& est,
                     std::span<const Vector> samples, double tol = 1e-8);

/// Largest secant ratio |grad f(x) - grad f(y)| / |x - y| over the pairs, and
/// the largest Hessian spectral norm at the pair points when a Hessian exists.
/// This is a sampled lower bound on the global constant.
SmoothnessEstimate estimate_smoothness(const Objective& objective,
                                       std::span<const std::pair<Vector, Vector>> pairs);

/// Extreme Hessian eigenvalues over the samples. Falls back to a
/// finite-difference Hessian of the gradient when no analytic one exists.
HessianEvidence hessian_definiteness(const Objective& objective, std::span<const Vector> samples);

}  // namespace sgmflow
