#pragma once

#include <string>

#include "json.hpp"

#include "smot/coupling.hpp"
#include "smot/decomposition.hpp"
#include "smot/measure.hpp"
#include "smot/wsot.hpp"

namespace smot {

// File formats:
//   measure  {"atoms": [[x, w], ...]}            x strictly increasing
//   coupling {"rows": [{"x", "w", "kernel": [[y, p], ...]}, ...]}
//   cost     {"kind": "pairwise", "c": [[..]], "xs": [..], "ys": [..]}
//            {"kind": "abs_diff" | "squared"}
//            {"kind": "barycentre_convex", "quad": q, "phi": {...}}
//            {"kind": "variance_penalty", "lambda": l}
//            {"kind": "linear_combination", "weights": [..], "terms": [..]}
// The pairwise grid axes default to the marginal atoms when "xs"/"ys" are
// omitted; the CLI passes those in.

DiscreteMeasure measure_from_json(const nlohmann::json& j);
nlohmann::json measure_to_json(const DiscreteMeasure& m);

FiniteCoupling coupling_from_json(const nlohmann::json& j);
nlohmann::json coupling_to_json(const FiniteCoupling& pi);

CostSpec cost_from_json(const nlohmann::json& j, const std::vector<double>& default_xs = {},
                        const std::vector<double>& default_ys = {});

nlohmann::json decomposition_to_json(const IrreducibleDecomposition& dec);

DiscreteMeasure load_measure(const std::string& path);
FiniteCoupling load_coupling(const std::string& path);
nlohmann::json load_json(const std::string& path);

/// Round-trip-safe decimal rendering (17 significant digits).
std::string format_double(double v);

}  // namespace smot
