#include "sgmflow/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sgmflow/error.hpp"
#include "sgmflow/kernels.hpp"

namespace sgmflow {

namespace {

void check_state(const FlowState& state, const Objective& objective, const char* what) {
  if (state.theta.size() != objective.dim() || state.v.size() != objective.dim()) {
    throw InvalidArgument(std::string(what) + ": state dimension does not match the objective");
  }
}

double momentum_weight(const FlowParams& p) { return p.beta() / (2.0 * p.gamma() * p.kappa()); }

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

double lyapunov_v(const FlowState& state, const FlowParams& params, const Objective& objective) {
  check_state(state, objective, "lyapunov_v");
  const double f_star = objective.require_f_star("lyapunov_v");
  return objective.value(state.theta) - f_star + momentum_weight(params) * kernels::norm_sq(state.v);
}

double lyapunov_vdot(const FlowState& state, const FlowParams& params, const Objective& objective,
                     double singular_tol) {
  check_state(state, objective, "lyapunov_vdot");
  const Vector g = objective.gradient(state.theta);
  const double g2 = kernels::norm_sq(g);
  const double v2 = kernels::norm_sq(state.v);
  const double z = std::sqrt(g2 + v2);
  if (z <= singular_tol) return 0.0;
  const double scale = params.alpha() == 0.0 ? 1.0 : std::pow(z, params.alpha());
  const double b = params.beta(), gm = params.gamma();
  return -scale * ((1.0 - b) * g2 + b * (1.0 - gm) / gm * v2);
}

LyapunovValue lyapunov_v_cross(const FlowState& state, const FlowParams& params, const Objective& objective,
                               double epsilon) {
  if (!(epsilon >= 0.0)) throw InvalidArgument("lyapunov_v_cross: epsilon must be nonnegative");
  LyapunovValue out;
  out.epsilon = epsilon;
  out.v_plain = lyapunov_v(state, params, objective);
  const Vector g = objective.gradient(state.theta);
  out.v_cross = out.v_plain - epsilon * kernels::dot(state.v, g);
  return out;
}

SandwichBounds lower_upper_bounds(const FlowState& state, const FlowParams& params, const Objective& objective,
                                  double L, const DominanceEstimate& dominance) {
  check_state(state, objective, "lower_upper_bounds");
  if (!(L > 0.0)) throw InvalidArgument("lower_upper_bounds: L must be positive");
  if (!(dominance.p > 1.0) || !(dominance.mu > 0.0)) {
    throw InvalidArgument("lower_upper_bounds: dominance estimate needs p > 1 and mu > 0");
  }
  const Vector g = objective.gradient(state.theta);
  const double g2 = kernels::norm_sq(g);
  const double v2 = kernels::norm_sq(state.v);
  const double w = momentum_weight(params);
  const double p = dominance.p;
  const double eta = dominance.eta();
  const double c1 = std::min(1.0 / (2.0 * L), w);
  const double c2 = std::max(eta * std::pow(dominance.mu, 1.0 / (1.0 - p)), w);
  return SandwichBounds{c1 * (g2 + v2), c2 * (std::pow(std::sqrt(g2), 1.0 / eta) + v2)};
}

std::string_view to_string(SchurMatrix m) {
  switch (m) {
    case SchurMatrix::W: return "W";
    case SchurMatrix::W1: return "W1";
    case SchurMatrix::W2: return "W2";
  }
  return "?";
}

double min_eig_2x2(double a, double b, double d) {
  const double mean = 0.5 * (a + d);
  const double half_diff = 0.5 * (a - d);
  return mean - std::hypot(half_diff, b);
}

namespace {

SchurReport make_report(SchurMatrix id, double a, double b, double d, double eps, std::optional<double> sigma) {
  SchurReport r;
  r.matrix_id = id;
  r.block_entries = {a, b, b, d};
  r.min_eig = min_eig_2x2(a, b, d);
  r.pd = r.min_eig > 0.0;
  r.chosen_epsilon = eps;
  r.chosen_sigma = sigma;
  return r;
}

}  // namespace

SchurReport schur_w(const FlowParams& params, double L, double epsilon) {
  if (!(L > 0.0)) throw InvalidArgument("schur_w: L must be positive");
  return make_report(SchurMatrix::W, 1.0 / L, -epsilon, params.beta() / (params.gamma() * params.kappa()), epsilon,
                     std::nullopt);
}

SchurReport schur_w1(const FlowParams& params, double epsilon) {
  const double k = params.kappa(), g = params.gamma(), b = params.beta();
  return make_report(SchurMatrix::W1, epsilon * k * g, epsilon * k * (1.0 - g) / 2.0, b * (1.0 - g) / g, epsilon,
                     std::nullopt);
}

SchurReport schur_w2(const FlowParams& params, double L, double m, double epsilon, double sigma) {
  if (!(L > 0.0) || !(m > 0.0) || !(sigma > 0.0)) {
    throw InvalidArgument("schur_w2: L, m and sigma must be positive");
  }
  const double b = params.beta(), k = params.kappa();
  const double d1 = 1.0 - b + epsilon * k - epsilon * L * (1.0 - b) / (2.0 * sigma);
  const double d2 = epsilon * b * m - L * (1.0 - b) * epsilon * sigma / 2.0;
  return make_report(SchurMatrix::W2, d1, 0.0, d2, epsilon, sigma);
}

double w_epsilon_threshold(const FlowParams& params, double L) {
  if (!(L > 0.0)) throw InvalidArgument("w_epsilon_threshold: L must be positive");
  return std::sqrt(params.beta() / (params.gamma() * params.kappa() * L));
}

EpsilonSigmaChoice select_epsilon_sigma(const FlowParams& params, double L, std::optional<double> m) {
  if (!(L > 0.0)) throw InvalidArgument("select_epsilon_sigma: L must be positive");
  if (!params.dissipative()) {
    throw InvalidArgument("select_epsilon_sigma: the conservative configuration has no dissipation to certify");
  }
  const double b = params.beta(), g = params.gamma(), k = params.kappa();
  const bool pi_case = g == 1.0;
  if (pi_case && !(m && *m > 0.0)) {
    throw InvalidArgument("select_epsilon_sigma: gamma = 1 needs a positive Hessian lower bound m");
  }

  double eps = w_epsilon_threshold(params, L);
  if (!pi_case) eps = std::min(eps, b / (k * (1.0 - g)));
  eps *= 0.5;

  // W2's momentum entry eps (beta m - L (1-beta) sigma / 2) is positive iff
  // sigma < 2 beta m / (L (1-beta)); take half of that bound.
  std::optional<double> sigma;
  if (pi_case) sigma = b * (*m) / (L * (1.0 - b));

  for (int halvings = 0; halvings <= 30; ++halvings) {
    EpsilonSigmaChoice out;
    out.epsilon = eps;
    out.sigma = sigma;
    out.reports.push_back(schur_w(params, L, eps));
    out.reports.push_back(pi_case ? schur_w2(params, L, *m, eps, *sigma) : schur_w1(params, eps));
    if (std::all_of(out.reports.begin(), out.reports.end(), [](const SchurReport& r) { return r.pd; })) return out;
    eps *= 0.5;
  }
  throw NumericalError("select_epsilon_sigma: no epsilon made the Schur matrices positive definite within 30 halvings");
}

std::string_view to_string(StructuralCase c) {
  switch (c) {
    case StructuralCase::interior: return "interior";
    case StructuralCase::heavy_ball: return "heavy_ball";
    case StructuralCase::pi: return "pi";
    case StructuralCase::conservative: return "conservative";
  }
  return "?";
}

std::string_view to_string(HessianRequirement r) {
  switch (r) {
    case HessianRequirement::none: return "none";
    case HessianRequirement::positive_definite: return "positive_definite";
    case HessianRequirement::uniformly_bounded_below: return "uniformly_bounded_below";
  }
  return "?";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::certified: return "certified";
    case Verdict::not_certified: return "not_certified";
    case Verdict::evidence_insufficient: return "evidence_insufficient";
  }
  return "?";
}

double alpha_upper_bound(double p) { return std::min(2.0 * (2.0 - p) / p, 0.0); }

StructuralCase classify(const FlowParams& params) {
  const bool b1 = params.beta() == 1.0;
  const bool g1 = params.gamma() == 1.0;
  if (b1 && g1) return StructuralCase::conservative;
  if (b1) return StructuralCase::heavy_ball;
  if (g1) return StructuralCase::pi;
  return StructuralCase::interior;
}

AdmissibilityReport check_admissibility(const FlowParams& params, const DominanceEstimate& dominance,
                                        std::optional<HessianEvidence> hessian_evidence) {
  AdmissibilityReport r;
  r.p = dominance.p;
  r.alpha = params.alpha();
  r.alpha_lo = -1.0;
  r.alpha_hi = alpha_upper_bound(dominance.p);
  r.structural_case = classify(params);
  r.hessian_evidence = hessian_evidence;
  switch (r.structural_case) {
    case StructuralCase::interior:
    case StructuralCase::conservative: r.hessian_requirement = HessianRequirement::none; break;
    case StructuralCase::heavy_ball: r.hessian_requirement = HessianRequirement::positive_definite; break;
    case StructuralCase::pi: r.hessian_requirement = HessianRequirement::uniformly_bounded_below; break;
  }

  bool ok = true;
  if (!(dominance.p > 1.0 && dominance.p <= 4.0)) {
    ok = false;
    r.reasons.push_back("dominance order p = " + fmt_double(dominance.p) + " is outside (1, 4]");
  } else if (!(r.alpha_hi > r.alpha_lo)) {
    ok = false;
    r.reasons.push_back("admissible alpha interval is empty at p = " + fmt_double(dominance.p));
  } else if (!r.alpha_admissible()) {
    ok = false;
    r.reasons.push_back("alpha = " + fmt_double(r.alpha) + " is outside [" + fmt_double(r.alpha_lo) + ", " +
                        fmt_double(r.alpha_hi) + ")");
  }
  if (r.structural_case == StructuralCase::conservative) {
    ok = false;
    r.reasons.push_back("beta = gamma = 1 conserves energy and cannot converge");
  }
  if (!ok) {
    r.verdict = Verdict::not_certified;
    return r;
  }
  if (r.hessian_requirement == HessianRequirement::none) {
    r.verdict = Verdict::certified;
    return r;
  }
  if (!hessian_evidence || hessian_evidence->sample_count == 0) {
    r.verdict = Verdict::evidence_insufficient;
    r.reasons.push_back("Hessian condition required but no sampled evidence supplied");
    return r;
  }
  if (hessian_evidence->min_eig > 0.0) {
    r.verdict = Verdict::certified;
    r.reasons.push_back("Hessian condition supported by sampled evidence only (min eigenvalue " +
                        fmt_double(hessian_evidence->min_eig) + ")");
  } else {
    r.verdict = Verdict::not_certified;
    r.reasons.push_back("sampled Hessian has min eigenvalue " + fmt_double(hessian_evidence->min_eig) +
                        " <= 0");
  }
  return r;
}

double expected_certificate_exponent(double alpha, double p) {
  if (p <= 2.0) return alpha / 2.0 + 1.0;
  return alpha / 2.0 + 2.0 * (p - 1.0) / p;
}

CertificateFit fit_certificate(const Trajectory& traj, TimeWindow window) {
  if (!(window.t_end > window.t_begin)) throw InvalidArgument("fit_certificate: empty window");
  std::vector<double> xs, ys;
  double v_first = 0.0;
  double prev_v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    if (t < window.t_begin || t > window.t_end) continue;
    const SampleChannels& ch = traj.channels[i];
    if (!(ch.V > 0.0)) throw InvalidArgument("fit_certificate: V is not strictly positive on the window");
    if (ch.V > prev_v * (1.0 + 1e-9)) {
      throw InvalidArgument("fit_certificate: V is not decreasing on the window (t = " + fmt_double(t) + ")");
    }
    if (!(ch.Vdot < 0.0)) throw InvalidArgument("fit_certificate: Vdot is not negative on the window");
    if (xs.empty()) v_first = ch.V;
    prev_v = ch.V;
    xs.push_back(std::log(ch.V));
    ys.push_back(std::log(-ch.Vdot));
  }
  if (xs.size() < 20) {
    throw InvalidArgument("fit_certificate: need at least 20 samples in the window, got " + std::to_string(xs.size()));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit_certificate: V is constant on the window");

  CertificateFit fit;
  fit.a = sxy / sxx;
  fit.c = std::exp(my - fit.a * mx);
  fit.fit_window = window;
  fit.sample_count = xs.size();
  if (!(fit.a > 0.0 && fit.a < 1.0)) {
    throw NumericalError("fit_certificate: fitted exponent a = " + fmt_double(fit.a) +
                         " is outside (0, 1); no finite-time certificate");
  }
  double ss = 0.0;
  double slack = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - std::log(fit.c) - fit.a * xs[i];
    ss += r * r;
    const double vdot = -std::exp(ys[i]);
    slack = std::max(slack, (vdot + fit.c * std::exp(fit.a * xs[i])) / std::abs(vdot));
  }
  fit.residual = std::sqrt(ss / n);
  fit.slack = slack;
  fit.t_bound = std::pow(v_first, 1.0 - fit.a) / (fit.c * (1.0 - fit.a));
  return fit;
}

std::optional<TimeWindow> default_fit_window(const Trajectory& traj) {
  if (traj.size() < 2) return std::nullopt;
  double v_floor = std::numeric_limits<double>::infinity();
  for (const auto& ch : traj.channels) {
    if (ch.V > 0.0) v_floor = std::min(v_floor, ch.V);
  }
  const double hi = 0.1 * traj.channels.front().V;
  const double lo = 10.0 * v_floor;
  if (!std::isfinite(v_floor) || !(hi > lo)) return std::nullopt;
  std::optional<double> begin, end;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double V = traj.channels[i].V;
    if (V <= hi && V >= lo) {
      if (!begin) begin = traj.times[i];
      end = traj.times[i];
    }
  }
  if (!begin || !(*end > *begin)) return std::nullopt;
  return TimeWindow{*begin, *end};
}

double SettlingEnvelope::operator()(double t) const {
  if (t >= t_s) return 0.0;
  return C * std::pow(t_s - t, -1.0 / alpha);
}

SettlingEnvelope settling_envelope(double f0_gap, double alpha, double rho, double C) {
  if (!(alpha > -1.0 && alpha < 0.0)) throw InvalidArgument("settling_envelope: alpha must lie in (-1, 0)");
  if (!(f0_gap > 0.0) || !(rho > 0.0) || !(C > 0.0)) {
    throw InvalidArgument("settling_envelope: f0_gap, rho and C must be positive");
  }
  SettlingEnvelope env;
  env.alpha = alpha;
  env.C = C;
  env.t_s = 2.0 * std::pow(f0_gap, -alpha / 2.0) / (-alpha * rho);
  return env;
}

PowerBoundCheck verify_power_bound(double a, double delta, std::size_t grid) {
  if (!(a >= 1.0) || !std::isfinite(a)) throw InvalidArgument("verify_power_bound: exponent a must be >= 1");
  if (!(delta > 0.0)) throw InvalidArgument("verify_power_bound: delta must be positive");
  if (grid < 10) throw InvalidArgument("verify_power_bound: grid must be >= 10");
  PowerBoundCheck out;
  out.C = std::pow(2.0, a - 1.0) * std::max(1.0, std::pow(delta, a - 1.0));
  out.max_violation = -std::numeric_limits<double>::infinity();
  constexpr double kRounding = 16.0 * std::numeric_limits<double>::epsilon();
  for (std::size_t i = 0; i <= grid; ++i) {
    const double x = delta * static_cast<double>(i) / static_cast<double>(grid);
    const double xa = std::pow(x, a);
    for (std::size_t j = 0; j <= grid; ++j) {
      const double y = delta * static_cast<double>(j) / static_cast<double>(grid);
      const double lhs = std::pow(x + y, a);
      const double rhs = out.C * (xa + y);
      const double gap = lhs - rhs;
      out.max_violation = std::max(out.max_violation, gap);
      if (gap > kRounding * std::max(lhs, rhs)) ++out.violations;
      ++out.points;
    }
  }
  return out;
}

}  // namespace sgmflow
