#include "smot/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace smot {

using nlohmann::json;

DiscreteMeasure measure_from_json(const json& j) {
  if (!j.is_object() || !j.contains("atoms") || !j["atoms"].is_array())
    throw DomainError("measure JSON must be an object with an \"atoms\" array");
  std::vector<double> atoms, weights;
  for (const auto& pair : j["atoms"]) {
    if (!pair.is_array() || pair.size() != 2)
      throw DomainError("measure atoms must be [x, w] pairs");
    atoms.push_back(pair[0].get<double>());
    weights.push_back(pair[1].get<double>());
    if (!std::isfinite(atoms.back()) || !std::isfinite(weights.back()))
      throw DomainError("non-finite value in measure JSON");
    if (weights.back() < 0) throw DomainError("negative weight in measure JSON");
  }
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

json measure_to_json(const DiscreteMeasure& m) {
  json atoms = json::array();
  for (std::size_t i = 0; i < m.size(); ++i)
    atoms.push_back(json::array({m.atoms()[i], m.weights()[i]}));
  return json{{"atoms", std::move(atoms)}};
}

FiniteCoupling coupling_from_json(const json& j) {
  if (!j.is_object() || !j.contains("rows") || !j["rows"].is_array())
    throw DomainError("coupling JSON must be an object with a \"rows\" array");
  std::vector<CouplingRow> rows;
  for (const auto& r : j["rows"]) {
    CouplingRow row;
    row.x = r.at("x").get<double>();
    row.w = r.at("w").get<double>();
    std::vector<double> atoms, weights;
    for (const auto& pair : r.at("kernel")) {
      atoms.push_back(pair.at(0).get<double>());
      weights.push_back(pair.at(1).get<double>());
    }
    row.kernel = DiscreteMeasure(std::move(atoms), std::move(weights));
    rows.push_back(std::move(row));
  }
  return FiniteCoupling(std::move(rows));
}

json coupling_to_json(const FiniteCoupling& pi) {
  json rows = json::array();
  for (const auto& r : pi.rows()) {
    json kernel = json::array();
    for (std::size_t i = 0; i < r.kernel.size(); ++i)
      kernel.push_back(json::array({r.kernel.atoms()[i], r.kernel.weights()[i]}));
    rows.push_back(json{{"x", r.x}, {"w", r.w}, {"kernel", std::move(kernel)}});
  }
  return json{{"rows", std::move(rows)}};
}

namespace {

PiecewiseLinearConvex phi_from_json(const json& j) {
  std::vector<double> breakpoints, increments;
  double left_slope = 0.0, anchor = 0.0;
  if (j.contains("breakpoints"))
    breakpoints = j["breakpoints"].get<std::vector<double>>();
  if (j.contains("increments"))
    increments = j["increments"].get<std::vector<double>>();
  if (j.contains("left_slope")) left_slope = j["left_slope"].get<double>();
  if (j.contains("anchor")) anchor = j["anchor"].get<double>();
  return PiecewiseLinearConvex(std::move(breakpoints), left_slope, std::move(increments),
                               anchor);
}

}  // namespace

CostSpec cost_from_json(const json& j, const std::vector<double>& default_xs,
                        const std::vector<double>& default_ys) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "pairwise") {
    std::vector<double> xs =
        j.contains("xs") ? j["xs"].get<std::vector<double>>() : default_xs;
    std::vector<double> ys =
        j.contains("ys") ? j["ys"].get<std::vector<double>>() : default_ys;
    const auto& grid = j.at("c");
    if (!grid.is_array() || grid.size() != xs.size())
      throw CostDomainError("pairwise grid must have one row per x atom");
    Eigen::MatrixXd c(xs.size(), ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (grid[i].size() != ys.size())
        throw CostDomainError("pairwise grid row has the wrong length");
      for (std::size_t k = 0; k < ys.size(); ++k) c(i, k) = grid[i][k].get<double>();
    }
    return CostSpec::pairwise(std::move(xs), std::move(ys), std::move(c));
  }
  if (kind == "abs_diff")
    return CostSpec::pairwise_fn([](double x, double y) { return std::abs(x - y); });
  if (kind == "squared")
    return CostSpec::pairwise_fn([](double x, double y) { return (x - y) * (x - y); });
  if (kind == "barycentre_convex") {
    const double quad = j.value("quad", 0.0);
    PiecewiseLinearConvex phi;
    if (j.contains("phi")) phi = phi_from_json(j["phi"]);
    return CostSpec::barycentre_convex(quad, std::move(phi));
  }
  if (kind == "variance_penalty") return CostSpec::variance_penalty(j.at("lambda").get<double>());
  if (kind == "linear_combination") {
    std::vector<double> weights = j.at("weights").get<std::vector<double>>();
    std::vector<CostSpec> terms;
    for (const auto& t : j.at("terms")) terms.push_back(cost_from_json(t, default_xs, default_ys));
    return CostSpec::combination(std::move(weights), std::move(terms));
  }
  throw CostDomainError("unknown cost kind \"" + kind + "\"");
}

namespace {

// JSON has no literal for infinities; render them as strings
json finite_or_str(double v) {
  if (std::isinf(v)) return json(v > 0 ? "inf" : "-inf");
  return json(v);
}

}  // namespace

json decomposition_to_json(const IrreducibleDecomposition& dec) {
  json comps = json::array();
  for (const auto& c : dec.components) {
    json interval = json::array(
        {finite_or_str(c.interval.lo), finite_or_str(c.interval.hi),
         std::string(c.interval.lo_closed ? "closed" : "open") + "/" +
             (c.interval.hi_closed ? "closed" : "open")});
    std::string kind;
    switch (c.kind) {
      case ComponentKind::diagonal: kind = "diagonal"; break;
      case ComponentKind::supermartingale: kind = "supermartingale"; break;
      case ComponentKind::martingale: kind = "martingale"; break;
    }
    comps.push_back(json{{"interval", std::move(interval)},
                         {"kind", std::move(kind)},
                         {"index", c.index},
                         {"mu", measure_to_json(c.mu_part)},
                         {"nu", measure_to_json(c.nu_part)}});
  }
  return json{{"x_star", finite_or_str(dec.x_star)}, {"components", std::move(comps)}};
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path);
  json j;
  in >> j;
  return j;
}

DiscreteMeasure load_measure(const std::string& path) {
  return measure_from_json(load_json(path));
}

FiniteCoupling load_coupling(const std::string& path) {
  return coupling_from_json(load_json(path));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace smot
