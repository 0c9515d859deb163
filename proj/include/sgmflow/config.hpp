#pragma once

// Experiment configuration documents.
//
//   {
//     "schema_version": 1,
//     "label": "fig2-p3",
//     "objective": {"name": "ppower", "p": 3, "dim": 2},
//     "theta0": [1, 0],
//     "v0": [0, 0],                                    (optional, default 0)
//     "flow": {"alpha": -0.8, "beta": 0.5, "gamma": 0.5, "kappa": 1,
//              "conservative": false},
//     "integrator": {"rel_tol": 1e-10, "t_max": 50, ...},   (all optional)
//     "sweep": [{"label": "...", "alpha": -0.5, "objective": {...}}],
//     "seed": 20240611,
//     "workers": 0
//   }

#include <string>

#include "sgmflow/experiments.hpp"
#include "sgmflow/report.hpp"

namespace sgmflow {

inline constexpr int kConfigSchemaVersion = 1;

ExperimentConfig config_from_json(const Json& doc);
Json to_json(const ExperimentConfig& config);
Json to_json(const IntegratorConfig& config);
Json to_json(const ObjectiveSpec& spec);

/// Reads and parses a config file. Throws InvalidArgument on malformed input.
ExperimentConfig load_config(const std::string& path);

}  // namespace sgmflow
