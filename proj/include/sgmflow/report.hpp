#pragma once

// JSON-shaped reports for certificates, estimates and run summaries.

#include <string>

#include "json.hpp"
#include "sgmflow/certificates.hpp"
#include "sgmflow/experiments.hpp"

namespace sgmflow {

using Json = nlohmann::ordered_json;

Json to_json(const FlowParams& p);
Json to_json(const DominanceEstimate& d);
Json to_json(const SmoothnessEstimate& s);
Json to_json(const HessianEvidence& h);
Json to_json(const SchurReport& r);
Json to_json(const AdmissibilityReport& r);
Json to_json(const CertificateFit& f);
Json to_json(const PowerBoundCheck& c);
Json to_json(const EpsilonSigmaChoice& c);
Json to_json(const CertifyResult& r);

/// {label, settled_at, final_f_gap, final_state_error,
///  certificate: {c, a, t_bound, residual}, admissibility: {verdict,
///  alpha_interval, structural_case}, ...} with null for absent values.
Json to_json(const RunSummary& s);

/// Writes `doc` pretty-printed to `path`, replacing any existing file.
void write_json(const Json& doc, const std::string& path);

}  // namespace sgmflow
