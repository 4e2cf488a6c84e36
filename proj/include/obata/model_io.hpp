#pragma once

// JSON model files, schema 1. Unknown fields are rejected.
//
//   {"schema": 1, "type": "flat" | "quadric" | "warped" | "custom",
//    "dimension": n, "signature": [r, p],
//    quadric: "ambient_signature": [R, P], "level": c,
//             "chart": {"solved_axis": k, "branch": 1 | -1}, "min_radicand_fraction"?
//    warped:  "base_sign": 1 | -1, "alpha": "<expr in t>", "t_interval"?: [lo, hi],
//             "fiber": {<model without schema/omega/kappa>}
//    custom:  "entries": [["<expr>", ...], ...]
//    optional: "domain": {"lo": [...], "hi": [...]}, "sample_box": {...},
//              "omega": "<expr>", "omega_linear": [a_0, ..., a_n] (quadric only),
//              "kappa": number}
//
// Interval and box bounds may be null for an infinite bound.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "obata/manifold.hpp"

namespace obata {

struct ModelFile {
  MetricModel model = MetricModel::flat(Signature{0, 1});
  std::optional<Expression> omega;
  std::optional<std::vector<double>> omega_linear;
  std::optional<double> kappa;
};

/// ModelError on schema violations, ParseError on bad expressions.
ModelFile model_from_json(const nlohmann::json& j);
ModelFile load_model_file(const std::string& path);
ModelFile parse_model_text(const std::string& text);

nlohmann::json model_to_json(const MetricModel& m);
nlohmann::json model_file_to_json(const ModelFile& f);

}  // namespace obata
