// Command-line front end: JSON in, JSON/CSV out, one subcommand per library
// entry point. Exit codes: 0 success, 1 domain error (structured JSON on
// stdout), 2 usage error.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "smot/approximation.hpp"
#include "smot/json_io.hpp"
#include "smot/solvers.hpp"
#include "smot/wsot.hpp"

using nlohmann::json;

namespace {

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw smot::DomainError("cannot write " + out_path);
  out << text << "\n";
}

void emit_json(const json& j, const std::string& out_path) { emit(j.dump(2), out_path); }

std::vector<double> parse_schedule(const std::string& s) {
  std::vector<double> schedule;
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const int lo = std::stoi(s.substr(0, dots));
    const int hi = std::stoi(s.substr(dots + 2));
    for (int j = lo; j <= hi; ++j) schedule.push_back(std::ldexp(1.0, -j));
    return schedule;
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) schedule.push_back(std::stod(item));
  return schedule;
}

std::vector<double> parse_levels(const std::string& s) { return parse_schedule(s); }

smot::CostSpec load_cost(const std::string& path, const smot::DiscreteMeasure& mu,
                         const smot::DiscreteMeasure& nu) {
  return smot::cost_from_json(smot::load_json(path), mu.atoms(), nu.atoms());
}

json report_to_json(const smot::MonotonicityReport& rep) {
  json j{{"is_monotone", rep.is_monotone}};
  if (!rep.is_monotone) {
    j["improvement"] = rep.improvement;
    j["witness_rows"] = rep.witness_rows;
    json kernels = json::array();
    for (const auto& k : rep.witness_kernels) kernels.push_back(smot::measure_to_json(k));
    j["witness_kernels"] = std::move(kernels);
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"supermartingale optimal transport toolbox"};
  app.require_subcommand(1);

  std::string mu_path, nu_path, pi_path, cost_path, out_path, trace_path;
  std::string a_path, b_path;  // positional measure/coupling pair
  std::string schedule_str = "2..7", levels_str = "0.2,0.1,0.05,0.025", mode_str = "mollify";
  double r = 1.0;
  int n_max = 3, threads = 0;
  std::uint64_t seed = 1;
  bool martingale = false, convex = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_path, "write the result here instead of stdout");
    cmd->add_option("--threads", threads, "worker cap (advisory)");
  };

  CLI::App* order = app.add_subcommand("order-check", "convex (decreasing) order predicates");
  order->add_option("--mu", mu_path)->required();
  order->add_option("--nu", nu_path)->required();
  add_common(order);

  CLI::App* potential = app.add_subcommand("potential", "put potential breakpoints as CSV");
  potential->add_option("--mu", mu_path)->required();
  add_common(potential);

  CLI::App* wass = app.add_subcommand("wasserstein", "W_r between two measures");
  wass->add_option("--r", r);
  wass->add_option("a", a_path)->required();
  wass->add_option("b", b_path)->required();
  add_common(wass);

  CLI::App* aw = app.add_subcommand("aw-distance", "adapted W_r between two couplings");
  aw->add_option("--r", r);
  aw->add_option("a", a_path)->required();
  aw->add_option("b", b_path)->required();
  add_common(aw);

  CLI::App* dec_cmd = app.add_subcommand("decompose", "irreducible decomposition");
  dec_cmd->add_option("--mu", mu_path)->required();
  dec_cmd->add_option("--nu", nu_path)->required();
  add_common(dec_cmd);

  CLI::App* feas = app.add_subcommand("feasible-coupling", "a feasible (super)martingale coupling");
  feas->add_option("--mu", mu_path)->required();
  feas->add_option("--nu", nu_path)->required();
  feas->add_flag("--martingale", martingale, "require a martingale coupling");
  add_common(feas);

  CLI::App* approx = app.add_subcommand("approximate", "rebuild a coupling on perturbed marginals");
  approx->add_option("--pi", pi_path)->required();
  approx->add_option("--mu-k", mu_path)->required();
  approx->add_option("--nu-k", nu_path)->required();
  approx->add_option("--schedule", schedule_str, "epsilon schedule, \"2..7\" or comma list");
  approx->add_option("--trace", trace_path, "per-stage CSV (stage, aw_gap, defect, mass)");
  add_common(approx);

  CLI::App* solve = app.add_subcommand("wsot-solve", "weak supermartingale transport value");
  solve->add_option("--mu", mu_path)->required();
  solve->add_option("--nu", nu_path)->required();
  solve->add_option("--cost", cost_path)->required();
  solve->add_flag("--convex", convex, "use the conditional-gradient solver");
  add_common(solve);

  CLI::App* mono = app.add_subcommand("monotonicity-check", "competitor-based optimality check");
  mono->add_option("--pi", pi_path)->required();
  mono->add_option("--cost", cost_path)->required();
  mono->add_option("--n-max", n_max, "largest competitor subset");
  add_common(mono);

  CLI::App* stab = app.add_subcommand("stability-run", "value stability under perturbations");
  stab->add_option("--mu", mu_path)->required();
  stab->add_option("--nu", nu_path)->required();
  stab->add_option("--cost", cost_path)->required();
  stab->add_option("--levels", levels_str, "comma-separated perturbation sizes");
  stab->add_option("--mode", mode_str, "mollify | translate");
  stab->add_option("--seed", seed);
  add_common(stab);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (const char* tol = std::getenv("SMOT_TOL")) {
    try {
      smot::set_order_tol(std::stod(tol));
    } catch (const std::exception&) {
      std::cout << json{{"error", "domain_error"}, {"detail", "bad SMOT_TOL value"}}.dump()
                << "\n";
      return 1;
    }
  }

  try {
    if (order->parsed()) {
      const auto mu = smot::load_measure(mu_path);
      const auto nu = smot::load_measure(nu_path);
      emit_json({{"leq_cd", smot::leq_cd(mu, nu)}, {"leq_c", smot::leq_c(mu, nu)}}, out_path);
    } else if (potential->parsed()) {
      const auto mu = smot::load_measure(mu_path);
      std::string csv = "x,P\n";
      for (double x : mu.atoms())
        csv += smot::format_double(x) + "," + smot::format_double(smot::put_value(mu, x)) + "\n";
      emit(csv.substr(0, csv.size() - 1), out_path);
    } else if (wass->parsed()) {
      const double w = smot::wasserstein(smot::load_measure(a_path), smot::load_measure(b_path), r);
      emit_json({{"w", w}}, out_path);
    } else if (aw->parsed()) {
      const double d =
          smot::aw_distance(smot::load_coupling(a_path), smot::load_coupling(b_path), r);
      emit_json({{"aw", d}}, out_path);
    } else if (dec_cmd->parsed()) {
      const auto dec =
          smot::irreducible_components(smot::load_measure(mu_path), smot::load_measure(nu_path));
      emit_json(smot::decomposition_to_json(dec), out_path);
    } else if (feas->parsed()) {
      const auto mu = smot::load_measure(mu_path);
      const auto nu = smot::load_measure(nu_path);
      const auto pi = martingale ? smot::feasible_martingale(mu, nu)
                                 : smot::feasible_supermartingale(mu, nu);
      emit_json(smot::coupling_to_json(pi), out_path);
    } else if (approx->parsed()) {
      const auto pi = smot::load_coupling(pi_path);
      const auto res = smot::approximate(pi, smot::load_measure(mu_path),
                                         smot::load_measure(nu_path),
                                         parse_schedule(schedule_str));
      if (!trace_path.empty()) {
        std::string csv = "stage,aw_gap,defect,mass\n";
        for (const auto& s : res.trace.stages)
          csv += s.stage + "," + smot::format_double(s.aw_gap) + "," +
                 smot::format_double(s.defect) + "," + smot::format_double(s.mass) + "\n";
        emit(csv.substr(0, csv.size() - 1), trace_path);
      }
      json j = smot::coupling_to_json(res.coupling);
      j["aw_to_reference"] = res.trace.aw_to_reference;
      j["eps_used"] = res.trace.eps_used;
      emit_json(j, out_path);
    } else if (solve->parsed()) {
      const auto mu = smot::load_measure(mu_path);
      const auto nu = smot::load_measure(nu_path);
      const auto C = load_cost(cost_path, mu, nu);
      const auto res =
          (convex || !C.is_linear()) ? smot::solve_convex(mu, nu, C) : smot::solve_linear(mu, nu, C);
      json j{{"value", res.value}, {"gap", res.gap}};
      j["coupling"] = smot::coupling_to_json(res.coupling);
      emit_json(j, out_path);
    } else if (mono->parsed()) {
      const auto pi = smot::load_coupling(pi_path);
      const auto mu = pi.first_marginal();
      const auto nu = pi.second_marginal();
      const auto C = load_cost(cost_path, mu, nu);
      const auto dec = smot::irreducible_components(mu, nu);
      emit_json(report_to_json(smot::check_monotone(pi, C, dec, n_max)), out_path);
    } else if (stab->parsed()) {
      const auto mu = smot::load_measure(mu_path);
      const auto nu = smot::load_measure(nu_path);
      const auto C = load_cost(cost_path, mu, nu);
      const auto mode = mode_str == "translate" ? smot::PerturbationMode::translate
                                                : smot::PerturbationMode::mollify;
      const auto rows = smot::stability_run(mu, nu, C, mode, parse_levels(levels_str), seed);
      std::string csv = "h,marginal_gap,value,value_gap,aw_gap\n";
      for (const auto& row : rows)
        csv += smot::format_double(row.h) + "," + smot::format_double(row.marginal_gap) + "," +
               smot::format_double(row.value) + "," + smot::format_double(row.value_gap) + "," +
               smot::format_double(row.aw_gap) + "\n";
      emit(csv.substr(0, csv.size() - 1), out_path);
    }
  } catch (const smot::Error& e) {
    std::cout << json{{"error", e.kind()}, {"detail", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cout << json{{"error", "internal"}, {"detail", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
