// sgmflow command-line front end.
//
// Exit status: 0 success, 1 usage error, 2 configuration error,
// 3 runtime or numerical failure.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sgmflow/config.hpp"
#include "sgmflow/error.hpp"
#include "sgmflow/experiments.hpp"
#include "sgmflow/kernels.hpp"
#include "sgmflow/report.hpp"

namespace fs = std::filesystem;
using namespace sgmflow;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kRuntime = 3 };

struct Overrides {
  std::optional<double> alpha, beta, gamma, kappa, p, t_max, settle_tol;
  std::optional<std::string> objective;
  std::optional<std::vector<double>> theta0;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool conservative = false;
};

struct Common {
  std::string config_path;
  std::string preset_name;
  std::string output_dir = "sgmflow-out";
  Overrides ov;
};

void add_flow_flags(CLI::App* app, Overrides& ov) {
  app->add_option("--alpha", ov.alpha, "scaling exponent, in [-1, 1]");
  app->add_option("--beta", ov.beta, "gradient/momentum mix in the position equation, in (0, 1]");
  app->add_option("--gamma", ov.gamma, "gradient/momentum mix in the momentum equation, in (0, 1]");
  app->add_option("--kappa", ov.kappa, "momentum gain, > 0");
  app->add_flag("--conservative", ov.conservative, "use beta = gamma = 1 (energy conserving)");
}

void add_objective_flags(CLI::App* app, Overrides& ov) {
  app->add_option("--objective", ov.objective, "rosenbrock | ppower | quadratic");
  app->add_option("--p", ov.p, "order of the ppower objective");
  app->add_option("--seed", ov.seed, "seed for sampled estimates");
}

void add_run_flags(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app->add_option("--preset", c.preset_name, "named preset (see `sgmflow presets`)");
  app->add_option("--output-dir", c.output_dir, "directory for reports")->capture_default_str();
  add_flow_flags(app, c.ov);
  add_objective_flags(app, c.ov);
  app->add_option("--theta0", c.ov.theta0, "initial position")->expected(1, -1);
  app->add_option("--t-max", c.ov.t_max, "integration horizon");
  app->add_option("--settle-tol", c.ov.settle_tol, "settling threshold on |z|");
}

Vector default_theta0(const ObjectiveSpec& spec) {
  if (spec.name == "rosenbrock") return {-1.5, 2.0};
  const Objective obj = make_objective(spec);
  Vector t(obj.dim(), 0.0);
  t[0] = 1.0;
  return t;
}

ObjectiveSpec default_spec(const std::string& name) {
  ObjectiveSpec s;
  s.name = name;
  if (name == "ppower") s.scalars["p"] = 2.0;
  if (name == "quadratic") s.vectors["diag"] = {1.0, 1.0};
  return s;
}

void apply_objective(ObjectiveSpec& spec, const Overrides& ov) {
  if (ov.objective && *ov.objective != spec.name) spec = default_spec(*ov.objective);
  if (ov.p) {
    if (spec.name != "ppower") throw InvalidArgument("--p only applies to the ppower objective");
    spec.scalars["p"] = *ov.p;
  }
}

FlowParams apply_flow(const FlowParams& base, const Overrides& ov) {
  if (ov.conservative) return FlowParams::conservative(ov.alpha.value_or(base.alpha()), ov.kappa.value_or(base.kappa()));
  return base.with(ov.alpha, ov.beta, ov.gamma, ov.kappa);
}

ExperimentConfig base_config(const Common& c, const std::string& default_label) {
  if (!c.config_path.empty() && !c.preset_name.empty()) throw InvalidArgument("--config and --preset are exclusive");
  ExperimentConfig cfg;
  if (!c.config_path.empty()) {
    cfg = load_config(c.config_path);
  } else if (!c.preset_name.empty()) {
    cfg = preset(c.preset_name);
  } else {
    cfg.label = default_label;
    cfg.objective = default_spec(c.ov.objective.value_or("ppower"));
    cfg.theta0 = default_theta0(cfg.objective);
  }
  return cfg;
}

ExperimentConfig with_overrides(ExperimentConfig cfg, const Overrides& ov) {
  const ObjectiveSpec before = cfg.objective;
  apply_objective(cfg.objective, ov);
  if (ov.theta0) {
    cfg.theta0 = *ov.theta0;
  } else if (!(cfg.objective == before) && make_objective(cfg.objective).dim() != cfg.theta0.size()) {
    cfg.theta0 = default_theta0(cfg.objective);
  }
  if (cfg.v0 && cfg.v0->size() != cfg.theta0.size()) cfg.v0.reset();
  cfg.flow = apply_flow(cfg.flow, ov);
  if (ov.t_max) cfg.integrator.t_max = *ov.t_max;
  if (ov.settle_tol) cfg.integrator.settle_tol = *ov.settle_tol;
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.workers) cfg.workers = *ov.workers;

  // Flags win over sweep members too.
  for (auto& o : cfg.sweep) {
    if (ov.alpha) o.alpha = ov.alpha;
    if (ov.beta) o.beta = ov.beta;
    if (ov.gamma) o.gamma = ov.gamma;
    if (ov.kappa) o.kappa = ov.kappa;
    if (ov.conservative) o.conservative = true;
    if (o.objective && (ov.objective || ov.p)) apply_objective(*o.objective, ov);
    if (ov.theta0) o.theta0 = *ov.theta0;
  }
  return cfg;
}

std::string file_stem(const std::string& label) {
  std::string s = label;
  for (char& ch : s) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) ch = '_';
  }
  return s.empty() ? "run" : s;
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string describe(const RunSummary& s) {
  std::string line = s.label + ": ";
  if (s.error) return line + "failed (" + *s.error + ")";
  line += s.settled_at ? "settled at t=" + fmt(*s.settled_at) : "not settled by t=" + fmt(s.t_end);
  if (s.final_state_error) line += ", |theta-theta*|=" + fmt(*s.final_state_error);
  if (s.certificate) line += ", certificate a=" + fmt(s.certificate->a) + " c=" + fmt(s.certificate->c);
  return line;
}

void write_member(const fs::path& dir, const Trajectory* traj, const RunSummary& s) {
  const std::string stem = file_stem(s.label);
  if (traj) export_trajectory(*traj, (dir / (stem + ".csv")).string());
  write_json(to_json(s), (dir / (stem + ".summary.json")).string());
}

void write_table(const fs::path& path, const std::vector<RunSummary>& rows) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path.string() + "' for writing");
  f << "label,settled_at,terminated_reason,final_f_gap,final_state_error,cert_a,cert_c,cert_t_bound,verdict,error\n";
  auto num = [](std::optional<double> x) { return x ? fmt(*x) : std::string(); };
  for (const auto& s : rows) {
    f << s.label << ',' << num(s.settled_at) << ',' << to_string(s.reason) << ',' << fmt(s.final_f_gap) << ','
      << num(s.final_state_error) << ',' << num(s.certificate ? std::optional(s.certificate->a) : std::nullopt) << ','
      << num(s.certificate ? std::optional(s.certificate->c) : std::nullopt) << ','
      << num(s.certificate ? std::optional(s.certificate->t_bound) : std::nullopt) << ','
      << (s.admissibility ? std::string(to_string(s.admissibility->verdict)) : std::string()) << ','
      << (s.error ? '"' + *s.error + '"' : std::string()) << '\n';
  }
  if (!f) throw Error("write to '" + path.string() + "' failed");
}

// Runs a sweep, writes per-member CSV and summary plus a combined table.
// Returns the summaries; the caller decides the exit status.
std::vector<RunSummary> run_sweep(const ExperimentConfig& cfg, const fs::path& dir, const std::string& name) {
  const auto members = sweep_runs(cfg);
  std::vector<RunSummary> rows;
  Json combined{{"label", name}, {"config", to_json(cfg)}, {"members", Json::array()}};
  for (const auto& m : members) {
    write_member(dir, m.trajectory ? &*m.trajectory : nullptr, m.summary);
    combined["members"].push_back(to_json(m.summary));
    rows.push_back(m.summary);
  }
  write_json(combined, (dir / (file_stem(name) + ".summary.json")).string());
  write_table(dir / (file_stem(name) + ".summary.csv"), rows);
  return rows;
}

int cmd_run(const Common& c) {
  const ExperimentConfig cfg = with_overrides(base_config(c, "run"), c.ov);
  const fs::path dir = ensure_dir(c.output_dir);
  const RunResult r = run(cfg);
  write_member(dir, &r.trajectory, r.summary);
  write_json(to_json(cfg), (dir / (file_stem(cfg.label) + ".config.json")).string());
  std::cout << describe(r.summary) << "; wrote " << (dir / (file_stem(cfg.label) + ".csv")).string() << '\n';
  return kOk;
}

int cmd_sweep(const Common& c) {
  const ExperimentConfig cfg = with_overrides(base_config(c, "sweep"), c.ov);
  const fs::path dir = ensure_dir(c.output_dir);
  const auto rows = run_sweep(cfg, dir, cfg.label);
  std::size_t settled = 0, failed = 0;
  for (const auto& s : rows) {
    settled += s.settled_at.has_value();
    failed += s.error.has_value();
  }
  std::cout << cfg.label << ": " << rows.size() << " members, " << settled << " settled, " << failed << " failed; wrote "
            << (dir / (file_stem(cfg.label) + ".summary.csv")).string() << '\n';
  for (const auto& s : rows) {
    if (s.error) std::cerr << "error: " << s.label << ": " << *s.error << '\n';
  }
  return failed ? kRuntime : kOk;
}

int cmd_certify(const Common& c) {
  const ExperimentConfig cfg = with_overrides(base_config(c, "certify"), c.ov);
  const fs::path dir = ensure_dir(c.output_dir);
  const CertifyResult r = certify(cfg);
  Json doc = to_json(r);
  doc["objective"] = to_json(cfg.objective);
  doc["flow"] = to_json(cfg.flow);
  doc["seed"] = cfg.seed;
  write_json(doc, (dir / "certify.json").string());
  const auto& a = r.admissibility;
  char interval[64];
  std::snprintf(interval, sizeof interval, "[%.3f, %.3f)", a.alpha_lo, a.alpha_hi);
  std::cout << "verdict " << to_string(a.verdict) << ", interval " << interval << ", p=" << fmt(a.p)
            << ", alpha=" << fmt(a.alpha) << ", case " << to_string(a.structural_case) << "; wrote "
            << (dir / "certify.json").string() << '\n';
  return kOk;
}

int cmd_gradcheck(const Common& c, std::size_t samples, double radius, double tol) {
  const ExperimentConfig cfg = with_overrides(base_config(c, "gradcheck"), c.ov);
  const Objective obj = make_objective(cfg.objective);
  const fs::path dir = ensure_dir(c.output_dir);
  const auto points = ball_samples(Vector(obj.dim(), 0.0), radius, samples, cfg.seed);
  double worst = 0.0;
  Vector worst_at;
  Json rows = Json::array();
  for (const auto& x : points) {
    const Vector g = obj.gradient(x);
    const Vector fd = fd_gradient(obj, x, 1e-6 * std::max(1.0, kernels::norm(x)));
    Vector d = g;
    kernels::axpy(-1.0, fd, d);
    const double rel = kernels::norm(d) / std::max(kernels::norm(g), 1e-12);
    rows.push_back(Json{{"theta", x}, {"relative_error", rel}});
    if (rel >= worst) {
      worst = rel;
      worst_at = x;
    }
  }
  const bool pass = worst <= tol;
  write_json(Json{{"objective", to_json(cfg.objective)},
                  {"samples", points.size()},
                  {"radius", radius},
                  {"seed", cfg.seed},
                  {"tolerance", tol},
                  {"max_relative_error", worst},
                  {"pass", pass},
                  {"points", rows}},
             (dir / "gradcheck.json").string());
  std::cout << obj.name() << ": max relative error " << fmt(worst) << " over " << points.size() << " points ("
            << (pass ? "within" : "exceeds") << " " << fmt(tol) << "); wrote " << (dir / "gradcheck.json").string()
            << '\n';
  return kOk;
}

int cmd_power_bound(const std::string& output_dir, double a, double delta, std::size_t grid) {
  const fs::path dir = ensure_dir(output_dir);
  const PowerBoundCheck r = verify_power_bound(a, delta, grid);
  Json doc = to_json(r);
  doc["a"] = a;
  doc["delta"] = delta;
  doc["grid"] = grid;
  write_json(doc, (dir / "lemma1.json").string());
  std::cout << "a=" << fmt(a) << " delta=" << fmt(delta) << ": C=" << fmt(r.C) << ", " << r.violations
            << " violations over " << r.points << " points; wrote " << (dir / "lemma1.json").string() << '\n';
  return kOk;
}

int cmd_repro(const Common& c, const std::string& which) {
  const fs::path dir = ensure_dir(c.output_dir);
  std::vector<std::string> sweeps;
  if (which == "fig1") sweeps = {"fig1-left", "fig1-right"};
  else if (which == "fig2") sweeps = {"fig2"};
  else throw InvalidArgument("repro: expected fig1 or fig2, got '" + which + "'");

  int status = kOk;
  for (const auto& name : sweeps) {
    const ExperimentConfig cfg = with_overrides(preset(name), c.ov);
    const auto rows = run_sweep(cfg, dir, name);
    std::cout << name << ":";
    for (const auto& s : rows) {
      std::cout << ' ' << s.label << '=' << (s.error ? "error" : s.settled_at ? fmt(*s.settled_at) : "none");
      if (s.error) status = kRuntime;
    }
    std::cout << " (settling times); wrote " << (dir / (name + ".summary.csv")).string() << '\n';
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scaled gradient-momentum flow simulator and certificate tools"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "sgmflow 0.1.0");
  std::string kernel_name;
  app.add_option("--kernels", kernel_name, "force a kernel table (scalar, avx2, neon)");

  Common common;

  auto* run_cmd = app.add_subcommand("run", "integrate one configuration, write CSV and summary");
  add_run_flags(run_cmd, common);

  auto* sweep_cmd = app.add_subcommand("sweep", "run the sweep list of a configuration");
  add_run_flags(sweep_cmd, common);
  sweep_cmd->add_option("--workers", common.ov.workers, "concurrent sweep members (0: all cores)");

  auto* certify_cmd = app.add_subcommand("certify", "admissibility and Schur report for an objective and flow");
  add_run_flags(certify_cmd, common);

  std::size_t samples = 100;
  double radius = 2.0, grad_tol = 1e-5;
  auto* grad_cmd = app.add_subcommand("gradcheck", "compare analytic and central-difference gradients");
  grad_cmd->add_option("--config", common.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  grad_cmd->add_option("--output-dir", common.output_dir, "directory for reports")->capture_default_str();
  add_objective_flags(grad_cmd, common.ov);
  grad_cmd->add_option("--samples", samples, "random points")->capture_default_str()->check(CLI::PositiveNumber);
  grad_cmd->add_option("--radius", radius, "sampling radius around the origin")->capture_default_str();
  grad_cmd->add_option("--tol", grad_tol, "relative error threshold")->capture_default_str();

  double power_a = 1.0, power_delta = 1.0;
  std::size_t grid = 200;
  auto* power_cmd = app.add_subcommand("verify-lemma1", "brute-force (x+y)^a <= C(x^a + y) on [0, delta]^2");
  power_cmd->add_option("--a", power_a, "exponent, >= 1")->capture_default_str();
  power_cmd->add_option("--delta", power_delta, "box size, > 0")->capture_default_str();
  power_cmd->add_option("--grid", grid, "lattice cells per side")->capture_default_str();
  power_cmd->add_option("--output-dir", common.output_dir, "directory for reports")->capture_default_str();

  std::string figure;
  auto* repro_cmd = app.add_subcommand("repro", "run the reproduction sweeps");
  repro_cmd->add_option("figure", figure, "fig1 | fig2")->required()->check(CLI::IsMember({"fig1", "fig2"}));
  repro_cmd->add_option("--output-dir", common.output_dir, "directory for reports")->capture_default_str();
  add_flow_flags(repro_cmd, common.ov);
  repro_cmd->add_option("--t-max", common.ov.t_max, "integration horizon");
  repro_cmd->add_option("--settle-tol", common.ov.settle_tol, "settling threshold on |z|");

  app.add_subcommand("presets", "list preset names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (!kernel_name.empty()) kernels::select(kernel_name);
    if (*run_cmd) return cmd_run(common);
    if (*sweep_cmd) return cmd_sweep(common);
    if (*certify_cmd) return cmd_certify(common);
    if (*grad_cmd) return cmd_gradcheck(common, samples, radius, grad_tol);
    if (*power_cmd) return cmd_power_bound(common.output_dir, power_a, power_delta, grid);
    if (*repro_cmd) return cmd_repro(common, figure);
    for (const auto& n : preset_names()) std::cout << n << '\n';
    return kOk;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const MissingOptimum& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}
