#include "sgmflow/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "sgmflow/error.hpp"
#include "sgmflow/kernels.hpp"

namespace sgmflow {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Continuous extension (Hairer, Norsett & Wanner, DOPRI5 dense output).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// Unevaluated sum hi + lo.
struct Clock {
  double hi = 0.0;
  double lo = 0.0;

  void advance(double h) {
    const double s = hi + h;
    const double bp = s - hi;
    const double err = (hi - (s - bp)) + (h - bp);
    lo += err;
    hi = s + lo;
    lo -= hi - s;
  }
  double value() const { return hi + lo; }
  // target - *this, accurate when the two are close.
  double until(double target) const { return (target - hi) - lo; }
};

struct Workspace {
  std::size_t n;  // theta dimension
  std::array<Vector, 7> k;
  Vector y, ynew, stage, err, grad, grad_new;
  std::array<Vector, 5> dense;

  explicit Workspace(std::size_t dim) : n(dim) {
    for (auto& v : k) v.assign(2 * n, 0.0);
    for (auto& v : dense) v.assign(2 * n, 0.0);
    y.assign(2 * n, 0.0);
    ynew = stage = err = y;
    grad.assign(n, 0.0);
    grad_new = grad;
  }
};

bool finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double e) { return std::isfinite(e); });
}

std::string state_string(std::span<const double> y, std::size_t n) {
  std::ostringstream os;
  os.precision(17);
  os << "theta=[";
  for (std::size_t i = 0; i < n; ++i) os << (i ? ", " : "") << y[i];
  os << "], v=[";
  for (std::size_t i = 0; i < n; ++i) os << (i ? ", " : "") << y[n + i];
  os << "]";
  return os.str();
}

class Stepper {
 public:
  Stepper(const FlowParams& params, const Objective& objective, const IntegratorConfig& config)
      : params_(params), obj_(objective), cfg_(config), ws_(objective.dim()) {}

  Workspace& ws() { return ws_; }

  // k = f(y); grad receives grad f. Returns |z|.
  double rhs(std::span<const double> y, std::span<double> k, std::span<double> grad) {
    const std::size_t n = ws_.n;
    return evaluate_field(y.first(n), y.subspan(n), params_, obj_, cfg_.singular_tol, grad, k.first(n),
                          k.subspan(n));
  }

  double znorm_of(std::span<const double> y, std::span<double> grad) {
    const std::size_t n = ws_.n;
    obj_.gradient(y.first(n), grad);
    return std::sqrt(kernels::norm_sq(grad) + kernels::norm_sq(y.subspan(n)));
  }

  // Attempts a step of size h from ws.y (k[0] holds f(y)). On success ynew,
  // k[6] = f(ynew), grad_new = grad f at ynew, and the dense coefficients are
  // valid. Returns the scaled error norm, or +inf for a non-finite trial.
  double attempt(double h, double& znew) {
    auto& w = ws_;
    const auto& K = kernels::active();
    const std::size_t m = 2 * w.n;
    const double* kp[7];
    for (int i = 0; i < 7; ++i) kp[i] = w.k[static_cast<std::size_t>(i)].data();

    const auto stage = [&](std::size_t idx, std::initializer_list<double> coeffs) -> bool {
      K.combine(w.stage.data(), w.y.data(), h, std::data(coeffs), kp, coeffs.size(), m);
      if (!finite(w.stage)) return false;
      try {
        rhs(w.stage, w.k[idx], w.grad_new);
      } catch (const NumericalError&) {
        return false;
      }
      return finite(w.k[idx]);
    };
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (!stage(1, {a21})) return inf;
    if (!stage(2, {a31, a32})) return inf;
    if (!stage(3, {a41, a42, a43})) return inf;
    if (!stage(4, {a51, a52, a53, a54})) return inf;
    if (!stage(5, {a61, a62, a63, a64, a65})) return inf;
    {
      const double b[6] = {a71, 0.0, a73, a74, a75, a76};
      K.combine(w.ynew.data(), w.y.data(), h, b, kp, 6, m);
      if (!finite(w.ynew)) return inf;
      try {
        znew = rhs(w.ynew, w.k[6], w.grad_new);
      } catch (const NumericalError&) {
        return inf;
      }
      if (!finite(w.k[6])) return inf;
    }
    const double ec[7] = {e1, 0.0, e3, e4, e5, e6, e7};
    const std::vector<double> zero(m, 0.0);
    K.combine(w.err.data(), zero.data(), h, ec, kp, 7, m);
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double sc = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(w.y[i]), std::abs(w.ynew[i]));
      const double r = w.err[i] / sc;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(m));
  }

  void build_dense(double h) {
    auto& w = ws_;
    const std::size_t m = 2 * w.n;
    for (std::size_t i = 0; i < m; ++i) {
      const double ydiff = w.ynew[i] - w.y[i];
      const double bspl = h * w.k[0][i] - ydiff;
      w.dense[0][i] = w.y[i];
      w.dense[1][i] = ydiff;
      w.dense[2][i] = bspl;
      w.dense[3][i] = ydiff - h * w.k[6][i] - bspl;
      w.dense[4][i] = h * (d1 * w.k[0][i] + d3 * w.k[2][i] + d4 * w.k[3][i] + d5 * w.k[4][i] +
                           d6 * w.k[5][i] + d7 * w.k[6][i]);
    }
  }

  // Dense output at fraction s of the last accepted step.
  void interpolate(double s, std::span<double> out) const {
    const auto& d = ws_.dense;
    if (s >= 1.0) {
      std::copy(ws_.ynew.begin(), ws_.ynew.end(), out.begin());
      return;
    }
    const double s1 = 1.0 - s;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = d[0][i] + s * (d[1][i] + s1 * (d[2][i] + s * (d[3][i] + s1 * d[4][i])));
    }
  }

 private:
  const FlowParams& params_;
  const Objective& obj_;
  const IntegratorConfig& cfg_;
  Workspace ws_;
};

FlowState to_state(std::span<const double> y, std::size_t n) {
  FlowState s;
  s.theta.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
  s.v.assign(y.begin() + static_cast<std::ptrdiff_t>(n), y.end());
  return s;
}

}  // namespace

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::settled: return "settled";
    case Termination::horizon: return "horizon";
    case Termination::step_underflow: return "step_underflow";
  }
  return "unknown";
}

void IntegratorConfig::validate() const {
  const auto pos = [](double x) { return x > 0.0 && std::isfinite(x); };
  if (!pos(rel_tol) || !pos(abs_tol)) throw InvalidArgument("integrator: tolerances must be positive");
  if (!pos(initial_step) || !pos(min_step) || !pos(max_step)) {
    throw InvalidArgument("integrator: step sizes must be positive");
  }
  if (!(min_step <= initial_step && initial_step <= max_step)) {
    throw InvalidArgument("integrator: need min_step <= initial_step <= max_step");
  }
  if (!pos(t_max)) throw InvalidArgument("integrator: t_max must be positive");
  if (!pos(record_stride)) throw InvalidArgument("integrator: record_stride must be positive");
  if (!pos(singular_tol)) throw InvalidArgument("integrator: singular_tol must be positive");
  if (!pos(settle_tol) || !(settle_tol > singular_tol)) {
    throw InvalidArgument("integrator: settle_tol must exceed the field's singular_tol");
  }
  if (!pos(z_cap_threshold) || !(z_change_cap > 0.0 && z_change_cap < 1.0)) {
    throw InvalidArgument("integrator: z_change_cap must lie in (0, 1)");
  }
  if (max_steps == 0) throw InvalidArgument("integrator: max_steps must be positive");
}

SampleChannels compute_channels(const FlowState& state, const FlowParams& params, const Objective& objective,
                                double f_ref, double singular_tol) {
  SampleChannels ch;
  const Vector g = objective.gradient(state.theta);
  const double g2 = kernels::norm_sq(g);
  const double v2 = kernels::norm_sq(state.v);
  ch.f = objective.value(state.theta);
  ch.z_norm = std::sqrt(g2 + v2);
  const double b = params.beta(), gm = params.gamma(), k = params.kappa();
  ch.V = ch.f - f_ref + b / (2.0 * gm * k) * v2;
  if (ch.z_norm <= singular_tol) {
    ch.Vdot = 0.0;
  } else {
    const double scale = params.alpha() == 0.0 ? 1.0 : std::pow(ch.z_norm, params.alpha());
    ch.Vdot = -scale * ((1.0 - b) * g2 + b * (1.0 - gm) / gm * v2);
  }
  if (!params.dissipative()) ch.energy = 0.5 * v2 + k * (ch.f - f_ref);
  return ch;
}

Trajectory integrate(const FlowState& state0, const FlowParams& params, const Objective& objective,
                     const IntegratorConfig& config) {
  config.validate();
  const std::size_t n = objective.dim();
  if (state0.theta.size() != n || state0.v.size() != n) {
    throw InvalidArgument("integrate: initial state dimension does not match the objective");
  }

  Trajectory traj;
  traj.params = params;
  Stepper stepper(params, objective, config);
  Workspace& w = stepper.ws();
  std::copy(state0.theta.begin(), state0.theta.end(), w.y.begin());
  std::copy(state0.v.begin(), state0.v.end(), w.y.begin() + static_cast<std::ptrdiff_t>(n));

  std::vector<double> times;
  std::vector<FlowState> states;
  const auto record = [&](double t, std::span<const double> y) {
    times.push_back(t);
    states.push_back(to_state(y, n));
  };

  Clock clock;
  double z = stepper.rhs(w.y, w.k[0], w.grad);
  if (!finite(w.k[0])) {
    throw NumericalError("integrate: non-finite field at t=0, " + state_string(w.y, n));
  }
  record(0.0, w.y);
  std::size_t next_record = 1;

  double h = config.initial_step;
  double last_rate = 0.0;  // |dz|/h of the last accepted step
  Vector probe(2 * n), probe_grad(n);

  if (z <= config.settle_tol) {
    traj.settled_at = 0.0;
    traj.reason = Termination::settled;
  } else {
    traj.reason = Termination::horizon;
    for (;;) {
      const double remaining = clock.until(config.t_max);
      if (remaining <= 0.0) break;
      if (traj.accepted_steps + traj.rejected_steps >= config.max_steps) {
        throw NumericalError("integrate: step budget exhausted at t=" + std::to_string(clock.value()) + ", " +
                             state_string(w.y, n));
      }
      h = std::min({h, config.max_step, remaining});
      if (z < config.z_cap_threshold && last_rate > 0.0) {
        h = std::min(h, 0.9 * config.z_change_cap * z / last_rate);
      }
      if (h < config.min_step) {
        traj.reason = Termination::step_underflow;
        break;
      }

      double znew = 0.0;
      const double err = stepper.attempt(h, znew);
      bool accept = err <= 1.0;
      double dz = 0.0;
      if (accept) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double dg = w.grad_new[i] - w.grad[i];
          const double dv = w.ynew[n + i] - w.y[n + i];
          s += dg * dg + dv * dv;
        }
        dz = std::sqrt(s);
        if (z < config.z_cap_threshold && dz > config.z_change_cap * z) {
          accept = false;
          ++traj.rejected_steps;
          h *= std::max(0.1, 0.9 * config.z_change_cap * z / dz);
          continue;
        }
      }
      if (!accept) {
        ++traj.rejected_steps;
        const double fac = std::isfinite(err) ? std::max(0.1, 0.9 * std::pow(err, -0.2)) : 0.1;
        h *= fac;
        continue;
      }

      ++traj.accepted_steps;
      stepper.build_dense(h);
      const double t_start_hi = clock.hi;
      const double t_start_lo = clock.lo;
      Clock end = clock;
      end.advance(h);

      // Settling inside this step: bisect |z(s)| - settle_tol on the dense output.
      double s_settle = -1.0;
      if (znew <= config.settle_tol) {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 200 && (hi - lo) * h > 0.0 && hi - lo > 1e-17; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi) break;
          stepper.interpolate(mid, probe);
          if (stepper.znorm_of(probe, probe_grad) <= config.settle_tol) hi = mid;
          else lo = mid;
        }
        s_settle = hi;
      }

      // Samples on the stride grid inside (t_start, t_end] (before settling).
      const Clock start{t_start_hi, t_start_lo};
      for (;;) {
        const double tr = static_cast<double>(next_record) * config.record_stride;
        if (tr > config.t_max) break;
        const double off = start.until(tr);
        if (end.until(tr) > 0.0) break;  // beyond this step
        const double s = std::clamp(off / h, 0.0, 1.0);
        if (s_settle >= 0.0 && s >= s_settle) break;
        stepper.interpolate(s, probe);
        record(tr, probe);
        ++next_record;
      }

      if (s_settle >= 0.0) {
        stepper.interpolate(s_settle, probe);
        Clock ts = start;
        ts.advance(s_settle * h);
        double t_settle = ts.value();
        if (t_settle <= times.back()) t_settle = std::nextafter(times.back(), config.t_max + 1.0);
        record(t_settle, probe);
        std::copy(probe.begin(), probe.end(), w.y.begin());
        traj.settled_at = t_settle;
        traj.reason = Termination::settled;
        break;
      }

      // Advance.
      clock = end;
      last_rate = dz / h;
      std::swap(w.y, w.ynew);
      std::swap(w.k[0], w.k[6]);
      std::swap(w.grad, w.grad_new);
      z = znew;
      if (!finite(w.k[0])) {
        throw NumericalError("integrate: non-finite field at t=" + std::to_string(clock.value()) + ", " +
                             state_string(w.y, n));
      }
      const double fac = err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
      h *= fac;
    }
    if (traj.reason != Termination::settled) {
      const double t_end = std::min(clock.value(), config.t_max);
      if (t_end > times.back()) record(t_end, w.y);
    }
  }

  // Channels.
  const std::optional<double> fs = objective.f_star();
  traj.f_ref_is_optimal = fs.has_value();
  if (fs) {
    traj.f_ref = *fs;
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (const FlowState& s : states) best = std::min(best, objective.value(s.theta));
    traj.f_ref = best;
  }
  traj.channels.reserve(states.size());
  for (const FlowState& s : states) {
    traj.channels.push_back(compute_channels(s, params, objective, traj.f_ref, config.singular_tol));
  }
  traj.times = std::move(times);
  traj.states = std::move(states);
  return traj;
}

std::optional<double> detect_settling(const Trajectory& traj, double settle_tol) {
  if (traj.empty()) return std::nullopt;
  const auto& ch = traj.channels;
  if (ch.back().z_norm > settle_tol) return std::nullopt;
  std::size_t k = ch.size() - 1;
  while (k > 0 && ch[k - 1].z_norm <= settle_tol) --k;
  if (k == 0) return traj.times[0];

  const double t0 = traj.times[k - 1], t1 = traj.times[k];
  const double z0 = ch[k - 1].z_norm, z1 = ch[k].z_norm;
  if (!(z1 > 0.0)) {
    // log-interpolation undefined; fall back to linear.
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (z0 + mid * (z1 - z0) <= settle_tol) hi = mid;
      else lo = mid;
    }
    return t0 + hi * (t1 - t0);
  }
  const double l0 = std::log(z0), l1 = std::log(z1), lt = std::log(settle_tol);
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (l0 + mid * (l1 - l0) <= lt) hi = mid;
    else lo = mid;
  }
  return std::min(t1, t0 + hi * (t1 - t0));
}

}  // namespace sgmflow
