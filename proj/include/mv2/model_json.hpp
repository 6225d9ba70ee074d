#pragma once

#include <json.hpp>

#include "mv2/model.hpp"

namespace mv2 {

// Parses the published model document:
//   {"v1": [c0,...], "v2": [...],
//    "interaction": {"grad_f11": [...], "grad_f12": [...],
//                    "grad_f21": [...], "grad_f22": [...]}
//                 | {"quadratic": [[a11,a12],[a21,a22]]},
//    "a": 0.5, "sigma": 0.5}
// Coefficient order: constant term first. Throws SchemaError with a
// path-precise message; `path` prefixes field names (e.g. "model").
ModelConfig model_from_json(const nlohmann::json& j, const std::string& path = "model");

nlohmann::json model_to_json(const ModelConfig& cfg);

} // namespace mv2
