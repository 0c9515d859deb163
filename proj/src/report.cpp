#include "sgmflow/report.hpp"

#include <fstream>

#include "sgmflow/error.hpp"

namespace sgmflow {

namespace {

template <class T>
Json opt(const std::optional<T>& x) {
  return x ? Json(*x) : Json(nullptr);
}

}  // namespace

Json to_json(const FlowParams& p) {
  return Json{{"alpha", p.alpha()},
              {"beta", p.beta()},
              {"gamma", p.gamma()},
              {"kappa", p.kappa()},
              {"dissipative", p.dissipative()}};
}

Json to_json(const DominanceEstimate& d) {
  return Json{{"p", d.p}, {"mu", d.mu}, {"eta", d.eta()}, {"sample_count", d.sample_count}, {"residual", d.residual}};
}

Json to_json(const SmoothnessEstimate& s) {
  return Json{{"L", s.L}, {"sample_count", s.sample_count}, {"sampled_lower_bound", true}};
}

Json to_json(const HessianEvidence& h) {
  return Json{{"min_eig", h.min_eig}, {"max_eig", h.max_eig}, {"sample_count", h.sample_count}, {"sampled", true}};
}

Json to_json(const SchurReport& r) {
  return Json{{"matrix_id", std::string(to_string(r.matrix_id))},
              {"block_entries", r.block_entries},
              {"min_eig", r.min_eig},
              {"pd", r.pd},
              {"chosen_epsilon", r.chosen_epsilon},
              {"chosen_sigma", opt(r.chosen_sigma)}};
}

Json to_json(const AdmissibilityReport& r) {
  Json j{{"verdict", std::string(to_string(r.verdict))},
         {"p", r.p},
         {"alpha", r.alpha},
         {"alpha_interval", Json::array({r.alpha_lo, r.alpha_hi})},
         {"alpha_interval_closed", Json::array({true, false})},
         {"structural_case", std::string(to_string(r.structural_case))},
         {"hessian_requirement", std::string(to_string(r.hessian_requirement))}};
  j["hessian_evidence"] = r.hessian_evidence ? to_json(*r.hessian_evidence) : Json(nullptr);
  j["reasons"] = r.reasons;
  return j;
}

Json to_json(const CertificateFit& f) {
  return Json{{"c", f.c},
              {"a", f.a},
              {"t_bound", f.t_bound},
              {"residual", f.residual},
              {"fit_window", Json::array({f.fit_window.t_begin, f.fit_window.t_end})},
              {"sample_count", f.sample_count},
              {"slack", f.slack}};
}

Json to_json(const PowerBoundCheck& c) {
  return Json{{"C", c.C}, {"max_violation", c.max_violation}, {"violations", c.violations}, {"points", c.points}};
}

Json to_json(const EpsilonSigmaChoice& c) {
  Json j{{"epsilon", c.epsilon}, {"sigma", opt(c.sigma)}, {"matrices", Json::array()}};
  for (const auto& r : c.reports) j["matrices"].push_back(to_json(r));
  return j;
}

Json to_json(const CertifyResult& r) {
  Json j;
  j["admissibility"] = to_json(r.admissibility);
  j["dominance"] = to_json(r.dominance);
  j["hessian"] = r.hessian ? to_json(*r.hessian) : Json(nullptr);
  j["smoothness"] = to_json(r.smoothness);
  j["schur"] = r.schur ? to_json(*r.schur) : Json(nullptr);
  if (r.schur_note) j["schur_note"] = *r.schur_note;
  return j;
}

Json to_json(const RunSummary& s) {
  Json j;
  j["label"] = s.label;
  j["settled_at"] = opt(s.settled_at);
  j["terminated_reason"] = std::string(to_string(s.reason));
  j["t_end"] = s.t_end;
  j["final_f_gap"] = s.final_f_gap;
  j["final_state_error"] = opt(s.final_state_error);
  j["certificate"] = s.certificate ? to_json(*s.certificate) : Json(nullptr);
  if (s.certificate_note) j["certificate_note"] = *s.certificate_note;
  j["admissibility"] = s.admissibility ? to_json(*s.admissibility) : Json(nullptr);
  if (s.admissibility_note) j["admissibility_note"] = *s.admissibility_note;
  j["dominance"] = s.dominance ? to_json(*s.dominance) : Json(nullptr);
  if (s.max_energy_drift) j["max_energy_drift"] = *s.max_energy_drift;
  j["seed"] = s.seed;
  j["samples"] = s.samples;
  j["accepted_steps"] = s.accepted_steps;
  j["rejected_steps"] = s.rejected_steps;
  j["error"] = opt(s.error);
  return j;
}

void write_json(const Json& doc, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << doc.dump(2) << '\n';
  if (!f) throw Error("write to '" + path + "' failed");
}

}  // namespace sgmflow
