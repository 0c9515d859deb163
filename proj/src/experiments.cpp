#include "sgmflow/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "sgmflow/error.hpp"
#include "sgmflow/kernels.hpp"

namespace sgmflow {

void ExperimentConfig::validate() const {
  const Objective obj = make_objective(objective);
  if (theta0.size() != obj.dim()) {
    throw InvalidArgument("config '" + label + "': theta0 has dimension " + std::to_string(theta0.size()) +
                          ", objective '" + obj.name() + "' has " + std::to_string(obj.dim()));
  }
  if (v0 && v0->size() != theta0.size()) throw InvalidArgument("config '" + label + "': v0 dimension differs from theta0");
  integrator.validate();
}

FlowState ExperimentConfig::initial_state() const {
  return FlowState(theta0, v0 ? *v0 : Vector(theta0.size(), 0.0));
}

ExperimentConfig ExperimentConfig::apply(const SweepOverride& o, std::size_t index) const {
  ExperimentConfig c = *this;
  c.sweep.clear();
  c.label = o.label.empty() ? label + "-" + std::to_string(index) : o.label;
  if (o.conservative) {
    c.flow = FlowParams::conservative(o.alpha.value_or(flow.alpha()), o.kappa.value_or(flow.kappa()));
  } else {
    c.flow = flow.with(o.alpha, o.beta, o.gamma, o.kappa);
  }
  if (o.objective) c.objective = *o.objective;
  if (o.theta0) c.theta0 = *o.theta0;
  if (o.objective || o.theta0) {
    if (c.v0 && c.v0->size() != c.theta0.size()) c.v0.reset();
  }
  return c;
}

namespace {

constexpr double kShellMin = 1e-3;
constexpr double kShellMax = 2.0;

void attach_admissibility(const ExperimentConfig& config, const Objective& obj, RunSummary& s) {
  if (!obj.optimum()) {
    s.admissibility_note = "objective has no known optimum; dominance cannot be estimated";
    return;
  }
  try {
    const auto samples = evidence_samples(obj, config.seed);
    const DominanceEstimate dom = estimate_dominance(obj, samples);
    s.dominance = dom;
    std::optional<HessianEvidence> hess;
    try {
      hess = hessian_definiteness(obj, samples);
    } catch (const Error&) {
    }
    s.admissibility = check_admissibility(config.flow, dom, hess);
  } catch (const Error& e) {
    s.admissibility_note = e.what();
  }
}

}  // namespace

std::vector<Vector> evidence_samples(const Objective& objective, std::uint64_t seed) {
  if (!objective.optimum()) throw MissingOptimum("objective '" + objective.name() + "' has no known minimizer");
  return shell_samples(objective.optimum()->theta, kShellMin, kShellMax, 12, 64, seed);
}

CertifyResult certify(const ExperimentConfig& config) {
  const Objective obj = make_objective(config.objective);
  const auto samples = evidence_samples(obj, config.seed);
  CertifyResult out;
  out.dominance = estimate_dominance(obj, samples);
  try {
    out.hessian = hessian_definiteness(obj, samples);
  } catch (const Error&) {
  }
  out.admissibility = check_admissibility(config.flow, out.dominance, out.hessian);
  const auto pairs = pair_samples(obj.optimum()->theta, kShellMax, 256, config.seed + 1);
  out.smoothness = estimate_smoothness(obj, pairs);

  if (!config.flow.dissipative()) {
    out.schur_note = "conservative flow: no dissipation matrix";
  } else {
    std::optional<double> m;
    if (out.hessian && out.hessian->min_eig > 0.0) m = out.hessian->min_eig;
    try {
      out.schur = select_epsilon_sigma(config.flow, out.smoothness.L, m);
    } catch (const Error& e) {
      out.schur_note = e.what();
    }
  }
  return out;
}

RunResult run(const ExperimentConfig& config) {
  config.validate();
  const Objective obj = make_objective(config.objective);
  RunResult out;
  out.trajectory = integrate(config.initial_state(), config.flow, obj, config.integrator);
  const Trajectory& tr = out.trajectory;
  RunSummary& s = out.summary;
  s.label = config.label;
  s.settled_at = tr.settled_at;
  s.reason = tr.reason;
  s.t_end = tr.times.back();
  s.seed = config.seed;
  s.samples = tr.size();
  s.accepted_steps = tr.accepted_steps;
  s.rejected_steps = tr.rejected_steps;
  s.final_f_gap = std::max(0.0, tr.channels.back().f - tr.f_ref);
  if (obj.optimum()) {
    Vector d = tr.states.back().theta;
    kernels::axpy(-1.0, obj.optimum()->theta, d);
    s.final_state_error = kernels::norm(d);
  }
  if (!config.flow.dissipative()) {
    const double h0 = tr.channels.front().energy.value_or(0.0);
    double drift = 0.0;
    for (const auto& ch : tr.channels) drift = std::max(drift, std::abs(ch.energy.value_or(0.0) - h0));
    s.max_energy_drift = drift / std::max(h0, 1e-12);
  }
  attach_admissibility(config, obj, s);

  if (config.compute_certificate) {
    if (!config.flow.dissipative()) {
      s.certificate_note = "conservative flow: V is not decreasing";
    } else if (const auto window = default_fit_window(tr)) {
      try {
        s.certificate = fit_certificate(tr, *window);
      } catch (const Error& e) {
        s.certificate_note = e.what();
      }
    } else {
      s.certificate_note = "no usable fit window";
    }
  }
  return out;
}

std::vector<SweepMember> sweep_runs(const ExperimentConfig& config) {
  if (config.sweep.empty()) throw InvalidArgument("sweep: config '" + config.label + "' has an empty sweep list");
  const std::size_t count = config.sweep.size();
  std::vector<SweepMember> members(count);
  std::size_t workers = config.workers ? config.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      SweepMember& m = members[i];
      std::string label = config.sweep[i].label.empty() ? config.label + "-" + std::to_string(i) : config.sweep[i].label;
      try {
        RunResult r = run(config.apply(config.sweep[i], i));
        m.trajectory = std::move(r.trajectory);
        m.summary = std::move(r.summary);
      } catch (const std::exception& e) {
        m.summary = RunSummary{};
        m.summary.label = label;
        m.summary.seed = config.seed;
        m.summary.error = e.what();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return members;
}

std::vector<RunSummary> sweep(const ExperimentConfig& config) {
  std::vector<RunSummary> out;
  for (SweepMember& m : sweep_runs(config)) out.push_back(std::move(m.summary));
  return out;
}

namespace {

void put(std::ostream& out, double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  out.write(buf, res.ptr - buf);
}

double parse_double(std::string_view s, std::size_t line) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidArgument("trajectory csv: bad number '" + std::string(s) + "' on line " + std::to_string(line));
  }
  return x;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string csv_header(std::size_t n) {
  std::string h = "t";
  for (std::size_t i = 0; i < n; ++i) h += ",theta_" + std::to_string(i);
  for (std::size_t i = 0; i < n; ++i) h += ",v_" + std::to_string(i);
  h += ",f,V,Vdot,znorm";
  return h;
}

}  // namespace

void export_trajectory(const Trajectory& traj, std::ostream& out) {
  if (traj.empty()) throw InvalidArgument("export_trajectory: empty trajectory");
  const std::size_t n = traj.states.front().dim();
  out << csv_header(n) << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    put(out, traj.times[k]);
    for (double x : traj.states[k].theta) {
      out << ',';
      put(out, x);
    }
    for (double x : traj.states[k].v) {
      out << ',';
      put(out, x);
    }
    const SampleChannels& ch = traj.channels[k];
    for (double x : {ch.f, ch.V, ch.Vdot, ch.z_norm}) {
      out << ',';
      put(out, x);
    }
    out << '\n';
  }
  if (!out) throw Error("export_trajectory: write failed");
}

void export_trajectory(const Trajectory& traj, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("export_trajectory: cannot open '" + path + "' for writing");
  export_trajectory(traj, f);
  f.flush();
  if (!f) throw Error("export_trajectory: write to '" + path + "' failed");
}

Trajectory parse_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("trajectory csv: missing header");
  const auto head = split(line);
  if (head.size() < 7 || (head.size() - 5) % 2 != 0) throw InvalidArgument("trajectory csv: malformed header");
  const std::size_t n = (head.size() - 5) / 2;
  if (line != csv_header(n)) throw InvalidArgument("trajectory csv: unexpected header '" + line + "'");

  Trajectory traj;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != head.size()) {
      throw InvalidArgument("trajectory csv: wrong column count on line " + std::to_string(lineno));
    }
    traj.times.push_back(parse_double(cells[0], lineno));
    FlowState s;
    for (std::size_t i = 0; i < n; ++i) s.theta.push_back(parse_double(cells[1 + i], lineno));
    for (std::size_t i = 0; i < n; ++i) s.v.push_back(parse_double(cells[1 + n + i], lineno));
    traj.states.push_back(std::move(s));
    SampleChannels ch;
    ch.f = parse_double(cells[1 + 2 * n], lineno);
    ch.V = parse_double(cells[2 + 2 * n], lineno);
    ch.Vdot = parse_double(cells[3 + 2 * n], lineno);
    ch.z_norm = parse_double(cells[4 + 2 * n], lineno);
    traj.channels.push_back(ch);
  }
  return traj;
}

namespace {

ObjectiveSpec ppower_spec(double p, std::size_t dim) {
  ObjectiveSpec s;
  s.name = "ppower";
  s.scalars["p"] = p;
  s.scalars["dim"] = static_cast<double>(dim);
  return s;
}

ExperimentConfig rosenbrock_base(const std::string& label) {
  ExperimentConfig c;
  c.label = label;
  c.objective.name = "rosenbrock";
  c.theta0 = {-1.5, 2.0};
  c.integrator.rel_tol = 1e-10;
  c.integrator.abs_tol = 1e-14;
  c.integrator.t_max = 50.0;
  c.integrator.settle_tol = 1e-9;
  c.integrator.record_stride = 1e-3;
  c.integrator.max_step = 0.01;
  return c;
}

ExperimentConfig ppower_base(const std::string& label, double p) {
  ExperimentConfig c;
  c.label = label;
  c.objective = ppower_spec(p, 2);
  c.theta0 = {1.0, 0.0};
  c.flow = FlowParams::make(-0.8, 0.5, 0.5, 1.0);
  c.integrator.rel_tol = 1e-10;
  c.integrator.abs_tol = 1e-14;
  c.integrator.t_max = 50.0;
  // p < 2 is stiff near the origin (explicit step count grows like 1/settle_tol).
  c.integrator.settle_tol = 1e-6;
  c.integrator.record_stride = 1e-3;
  c.integrator.max_step = 0.01;
  return c;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig1-left-a025", "fig1-left-a05", "fig1-left-a075", "fig1-right-hb",  "fig1-right-pi",
          "fig1-right-interior", "fig2-p1.5", "fig2-p2", "fig2-p3", "conservative",
          "fig1-left", "fig1-right", "fig2"};
}

ExperimentConfig preset(const std::string& name) {
  if (name == "fig1-left-a025" || name == "fig1-left-a05" || name == "fig1-left-a075") {
    ExperimentConfig c = rosenbrock_base(name);
    const double alpha = name == "fig1-left-a025" ? -0.25 : name == "fig1-left-a05" ? -0.5 : -0.75;
    c.flow = FlowParams::make(alpha, 0.5, 0.5, 1.0);
    return c;
  }
  if (name == "fig1-right-hb") {
    ExperimentConfig c = rosenbrock_base(name);
    c.flow = heavy_ball_params(-0.5, 0.5, 1.0);
    return c;
  }
  if (name == "fig1-right-pi") {
    ExperimentConfig c = rosenbrock_base(name);
    c.flow = pi_params(-0.5, 0.5, 1.0);
    return c;
  }
  if (name == "fig1-right-interior") {
    ExperimentConfig c = rosenbrock_base(name);
    c.flow = FlowParams::make(-0.5, 0.5, 0.5, 1.0);
    return c;
  }
  if (name == "fig2-p1.5") return ppower_base(name, 1.5);
  if (name == "fig2-p2") return ppower_base(name, 2.0);
  if (name == "fig2-p3") return ppower_base(name, 3.0);
  if (name == "conservative") {
    ExperimentConfig c = ppower_base(name, 2.0);
    c.flow = FlowParams::conservative(0.0, 1.0);
    return c;
  }
  if (name == "fig1-left") {
    ExperimentConfig c = rosenbrock_base(name);
    c.flow = FlowParams::make(-0.5, 0.5, 0.5, 1.0);
    for (const auto& [lbl, a] : {std::pair{"fig1-left-a025", -0.25}, {"fig1-left-a05", -0.5}, {"fig1-left-a075", -0.75}}) {
      SweepOverride o;
      o.label = lbl;
      o.alpha = a;
      c.sweep.push_back(o);
    }
    return c;
  }
  if (name == "fig1-right") {
    ExperimentConfig c = rosenbrock_base(name);
    c.flow = FlowParams::make(-0.5, 0.5, 0.5, 1.0);
    SweepOverride hb;
    hb.label = "fig1-right-hb";
    hb.beta = 1.0;
    hb.gamma = 0.5;
    SweepOverride pi;
    pi.label = "fig1-right-pi";
    pi.beta = 0.5;
    pi.gamma = 1.0;
    SweepOverride interior;
    interior.label = "fig1-right-interior";
    interior.beta = 0.5;
    interior.gamma = 0.5;
    c.sweep = {hb, pi, interior};
    return c;
  }
  if (name == "fig2") {
    ExperimentConfig c = ppower_base(name, 2.0);
    for (const auto& [lbl, p] : {std::pair{"fig2-p1.5", 1.5}, {"fig2-p2", 2.0}, {"fig2-p3", 3.0}}) {
      SweepOverride o;
      o.label = lbl;
      o.objective = ppower_spec(p, 2);
      c.sweep.push_back(o);
    }
    return c;
  }
  throw InvalidArgument("unknown preset '" + name + "'");
}

}  // namespace sgmflow
