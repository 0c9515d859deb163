#include "sgmflow/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "sgmflow/error.hpp"

namespace sgmflow {

namespace {

double number(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = j.at(key);
  if (!v.is_number()) throw InvalidArgument(where + ": '" + key + "' must be a number");
  return v.get<double>();
}

std::optional<double> maybe_number(const Json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return number(j, key, where);
}

Vector vec(const Json& j, const std::string& where) {
  if (!j.is_array()) throw InvalidArgument(where + " must be a list of numbers");
  Vector out;
  for (const Json& e : j) {
    if (!e.is_number()) throw InvalidArgument(where + " must be a list of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

ObjectiveSpec objective_from_json(const Json& j) {
  if (j.is_string()) return ObjectiveSpec{j.get<std::string>(), {}, {}};
  if (!j.is_object() || !j.contains("name") || !j.at("name").is_string()) {
    throw InvalidArgument("config: 'objective' must be a name or an object with a 'name'");
  }
  ObjectiveSpec s;
  s.name = j.at("name").get<std::string>();
  for (const auto& [k, v] : j.items()) {
    if (k == "name") continue;
    if (v.is_number()) s.scalars[k] = v.get<double>();
    else if (v.is_array()) s.vectors[k] = vec(v, "objective parameter '" + k + "'");
    else throw InvalidArgument("config: objective parameter '" + k + "' must be a number or a list");
  }
  return s;
}

IntegratorConfig integrator_from_json(const Json& j, IntegratorConfig c) {
  const std::string w = "integrator";
  static const char* const known[] = {"rel_tol",       "abs_tol",     "initial_step",    "min_step",
                                      "max_step",      "t_max",       "settle_tol",      "record_stride",
                                      "singular_tol",  "z_cap_threshold", "z_change_cap", "max_steps"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(std::begin(known), std::end(known), k) == std::end(known)) {
      throw InvalidArgument("config: unknown integrator field '" + k + "'");
    }
  }
  if (auto x = maybe_number(j, "rel_tol", w)) c.rel_tol = *x;
  if (auto x = maybe_number(j, "abs_tol", w)) c.abs_tol = *x;
  if (auto x = maybe_number(j, "initial_step", w)) c.initial_step = *x;
  if (auto x = maybe_number(j, "min_step", w)) c.min_step = *x;
  if (auto x = maybe_number(j, "max_step", w)) c.max_step = *x;
  if (auto x = maybe_number(j, "t_max", w)) c.t_max = *x;
  if (auto x = maybe_number(j, "settle_tol", w)) c.settle_tol = *x;
  if (auto x = maybe_number(j, "record_stride", w)) c.record_stride = *x;
  if (auto x = maybe_number(j, "singular_tol", w)) c.singular_tol = *x;
  if (auto x = maybe_number(j, "z_cap_threshold", w)) c.z_cap_threshold = *x;
  if (auto x = maybe_number(j, "z_change_cap", w)) c.z_change_cap = *x;
  if (auto x = maybe_number(j, "max_steps", w)) {
    if (!(*x >= 1.0)) throw InvalidArgument("config: max_steps must be >= 1");
    c.max_steps = static_cast<std::size_t>(*x);
  }
  return c;
}

FlowParams flow_from_json(const Json& j) {
  const std::string w = "flow";
  if (!j.is_object()) throw InvalidArgument("config: 'flow' must be an object");
  const double alpha = number(j, "alpha", w);
  const double kappa = maybe_number(j, "kappa", w).value_or(1.0);
  if (j.value("conservative", false)) return FlowParams::conservative(alpha, kappa);
  return FlowParams::make(alpha, number(j, "beta", w), number(j, "gamma", w), kappa);
}

SweepOverride override_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidArgument("config: sweep entries must be objects");
  const std::string w = "sweep entry";
  SweepOverride o;
  o.label = j.value("label", std::string());
  o.alpha = maybe_number(j, "alpha", w);
  o.beta = maybe_number(j, "beta", w);
  o.gamma = maybe_number(j, "gamma", w);
  o.kappa = maybe_number(j, "kappa", w);
  o.conservative = j.value("conservative", false);
  if (j.contains("objective")) o.objective = objective_from_json(j.at("objective"));
  if (j.contains("theta0")) o.theta0 = vec(j.at("theta0"), "sweep theta0");
  return o;
}

}  // namespace

ExperimentConfig config_from_json(const Json& doc) {
  try {
    if (!doc.is_object()) throw InvalidArgument("config: document must be an object");
    const int version = doc.value("schema_version", kConfigSchemaVersion);
    if (version != kConfigSchemaVersion) {
      throw InvalidArgument("config: unsupported schema_version " + std::to_string(version));
    }
    ExperimentConfig c;
    c.label = doc.value("label", std::string("run"));
    if (!doc.contains("objective")) throw InvalidArgument("config: 'objective' is required");
    c.objective = objective_from_json(doc.at("objective"));
    if (!doc.contains("theta0")) throw InvalidArgument("config: 'theta0' is required");
    c.theta0 = vec(doc.at("theta0"), "theta0");
    if (doc.contains("v0") && !doc.at("v0").is_null()) c.v0 = vec(doc.at("v0"), "v0");
    if (doc.contains("flow")) c.flow = flow_from_json(doc.at("flow"));
    if (doc.contains("integrator")) c.integrator = integrator_from_json(doc.at("integrator"), c.integrator);
    if (doc.contains("sweep")) {
      if (!doc.at("sweep").is_array()) throw InvalidArgument("config: 'sweep' must be a list");
      for (const Json& e : doc.at("sweep")) c.sweep.push_back(override_from_json(e));
    }
    if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("workers")) c.workers = doc.at("workers").get<std::size_t>();
    if (doc.contains("compute_certificate")) c.compute_certificate = doc.at("compute_certificate").get<bool>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
}

Json to_json(const ObjectiveSpec& spec) {
  Json j{{"name", spec.name}};
  for (const auto& [k, v] : spec.scalars) j[k] = v;
  for (const auto& [k, v] : spec.vectors) j[k] = v;
  return j;
}

Json to_json(const IntegratorConfig& c) {
  return Json{{"rel_tol", c.rel_tol},           {"abs_tol", c.abs_tol},
              {"initial_step", c.initial_step}, {"min_step", c.min_step},
              {"max_step", c.max_step},         {"t_max", c.t_max},
              {"settle_tol", c.settle_tol},     {"record_stride", c.record_stride},
              {"singular_tol", c.singular_tol}, {"z_cap_threshold", c.z_cap_threshold},
              {"z_change_cap", c.z_change_cap}, {"max_steps", c.max_steps}};
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["label"] = c.label;
  j["objective"] = to_json(c.objective);
  j["theta0"] = c.theta0;
  j["v0"] = c.v0 ? Json(*c.v0) : Json(nullptr);
  Json flow{{"alpha", c.flow.alpha()}, {"beta", c.flow.beta()}, {"gamma", c.flow.gamma()}, {"kappa", c.flow.kappa()}};
  if (!c.flow.dissipative()) flow["conservative"] = true;
  j["flow"] = flow;
  j["integrator"] = to_json(c.integrator);
  Json sweep = Json::array();
  for (const SweepOverride& o : c.sweep) {
    Json e;
    if (!o.label.empty()) e["label"] = o.label;
    if (o.alpha) e["alpha"] = *o.alpha;
    if (o.beta) e["beta"] = *o.beta;
    if (o.gamma) e["gamma"] = *o.gamma;
    if (o.kappa) e["kappa"] = *o.kappa;
    if (o.conservative) e["conservative"] = true;
    if (o.objective) e["objective"] = to_json(*o.objective);
    if (o.theta0) e["theta0"] = *o.theta0;
    sweep.push_back(e);
  }
  if (!sweep.empty()) j["sweep"] = sweep;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["compute_certificate"] = c.compute_certificate;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("config: cannot open '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config '" + path + "': " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace sgmflow
