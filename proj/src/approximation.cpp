#include "smot/approximation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "smot/solvers.hpp"

namespace smot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double abs_moment(const DiscreteMeasure& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m.weights()[i] * std::abs(m.atoms()[i]);
  return s;
}

double potential_gap(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  double d = std::abs(a.mass() - b.mass());
  for (double x : a.atoms()) d = std::max(d, std::abs(put_value(a, x) - put_value(b, x)));
  for (double x : b.atoms()) d = std::max(d, std::abs(put_value(a, x) - put_value(b, x)));
  return d;
}

}  // namespace

FiniteCoupling truncate(const FiniteCoupling& pi, double R) {
  if (!(R > 0)) throw DomainError("truncation radius must be positive");
  std::vector<CouplingRow> rows;
  for (const auto& r : pi.rows()) {
    if (std::abs(r.x) > R) {
      rows.push_back({r.x, r.w, DiscreteMeasure::dirac(r.x)});
      continue;
    }
    const double m = r.kernel.barycentre();
    if (std::abs(m) >= R) {
      // the two-point envelope degenerates; collapse to the mean instead
      rows.push_back({r.x, r.w, DiscreteMeasure::dirac(m)});
      continue;
    }
    const DiscreteMeasure envelope({-R, R}, {(R - m) / (2 * R), (R + m) / (2 * R)});
    rows.push_back({r.x, r.w, inf_cd(r.kernel, envelope)});
  }
  return FiniteCoupling(std::move(rows));
}

FiniteCoupling contract(const FiniteCoupling& pi, double alpha) {
  if (!(alpha > 0) || alpha > 1) throw DomainError("contraction factor must be in (0, 1]");
  if (alpha == 1.0) return pi;
  std::vector<CouplingRow> rows;
  for (const auto& r : pi.rows()) {
    std::vector<double> atoms(r.kernel.atoms());
    for (double& y : atoms) y = alpha * y + (1 - alpha) * r.x;
    rows.push_back({r.x, r.w, DiscreteMeasure(std::move(atoms), r.kernel.weights())});
  }
  return FiniteCoupling(std::move(rows));
}

PipelineParams choose_params(const FiniteCoupling& pi, const DiscreteMeasure& mu,
                             const DiscreteMeasure& nu, double eps) {
  if (!(eps > 0) || !(eps < 0.5)) throw DomainError("eps must lie in (0, 1/2)");
  if (mu.is_zero()) throw DomainError("empty first marginal");
  PipelineParams p;
  p.eps = eps;

  // the irreducibility interval I = (ell, rho): the single maximal open
  // interval where the potential gap is positive
  PiecewiseLinearFn D = defect_potential(mu, nu);
  double scale = 1.0;
  for (double v : D.values) scale = std::max(scale, std::abs(v));
  const double ztol = 1e-12 * scale;
  const double mean_gap = mu.first_moment() - nu.first_moment();
  std::size_t first_pos = D.values.size(), last_pos = 0;
  for (std::size_t i = 0; i < D.values.size(); ++i)
    if (D.values[i] > ztol) {
      first_pos = std::min(first_pos, i);
      last_pos = i;
    }
  if (first_pos == D.values.size())
    throw DomainError("marginals coincide; nothing to approximate");
  for (std::size_t i = first_pos; i <= last_pos; ++i)
    if (D.values[i] <= ztol)
      throw DomainError("pair is not irreducible: the potential gap has interior zeros");
  if (first_pos == 0) throw InternalConsistencyError("potential gap positive at the leftmost atom");
  p.ell = D.breakpoints[first_pos - 1];
  if (last_pos + 1 < D.values.size())
    p.rho = D.breakpoints[last_pos + 1];
  else
    p.rho = mean_gap > ztol ? kInf : D.breakpoints.back();

  // K = [a, b]: the narrowest atom window of mu holding mass >= 1 - eps
  {
    const double target = (1 - eps) * mu.mass() - 1e-12;
    std::size_t best_i = 0, best_j = mu.size() - 1;
    double best_width = kInf;
    std::size_t i = 0;
    double window = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      window += mu.weights()[j];
      while (window - mu.weights()[i] >= target) window -= mu.weights()[i++];
      if (window >= target && mu.atoms()[j] - mu.atoms()[i] < best_width) {
        best_width = mu.atoms()[j] - mu.atoms()[i];
        best_i = i;
        best_j = j;
      }
    }
    p.a = mu.atoms()[best_i];
    p.b = mu.atoms()[best_j];
  }
  if (!(p.ell < p.a) || !(p.b < p.rho))
    throw DomainError("mass window touches the boundary of the irreducibility interval");
  p.a_tilde = 0.5 * (p.ell + p.a);
  p.b_tilde = p.rho < kInf ? 0.5 * (p.b + p.rho) : p.b + 1.0;
  p.L_minus = {p.ell, 0.5 * (p.a + p.a_tilde), true, false};
  p.K_tilde = Interval::open(0.25 * (3 * p.a + p.a_tilde), 0.25 * (3 * p.b + p.b_tilde));
  p.L_tilde_minus = Interval::open(p.ell - 1.0, 0.5 * (p.a + p.a_tilde));
  p.e = 0.25 * (p.a - p.a_tilde);

  // doubling search: R large enough that truncation is cheap and the
  // contracted target still charges the reservoir left of K
  double R = 1.0;
  for (int t = 0; t <= 40; ++t, R *= 2) {
    if (R <= std::max({std::abs(p.a_tilde), std::abs(p.b_tilde), std::abs(p.a), std::abs(p.b)}))
      continue;
    const FiniteCoupling piR = truncate(pi, R);
    if (aw_distance(piR, pi, 1.0) >= 0.5 * eps) continue;
    const DiscreteMeasure nuR = piR.second_marginal();
    if (restrict(nuR, {p.ell, p.a_tilde, true, false}).mass() <= 0) continue;

    const double bound1 = (2 * R - p.a - p.a_tilde) / (2 * R - 2 * p.a_tilde);
    const double bound2 = (2 * R + p.b + p.b_tilde) / (2 * R + 2 * p.b_tilde);
    const double moments = abs_moment(mu) + abs_moment(nuR);
    const double bound3 = moments > 0 ? 1.0 - 0.5 * eps / moments : 0.0;
    double alpha = std::max({bound1, bound2, bound3, 0.5});
    if (alpha >= 1.0) continue;
    alpha += std::min(1e-6, 0.5 * (1.0 - alpha));

    const FiniteCoupling piRA = contract(piR, alpha);
    if (restrict(piRA.second_marginal(), p.L_minus).mass() <= 0) continue;

    p.R = R;
    p.alpha = alpha;
    const double lo_brk = std::max(-R, alpha * p.ell + (1 - alpha) * p.a);
    const double hi_brk =
        p.rho < kInf ? std::min(R, alpha * p.rho + (1 - alpha) * p.b) : R;
    p.L = Interval::closed(0.5 * (p.ell + lo_brk),
                           p.rho < kInf ? 0.5 * (hi_brk + p.rho) : hi_brk + 1.0);
    p.J = Interval::closed(p.ell - 1.0, std::max(hi_brk, p.b_tilde) + 1.0);
    p.delta = 0.5 * restrict(piRA.second_marginal(), p.L_minus).mass();
    return p;
  }
  throw ParameterSearchError("no truncation radius below 2^40 meets the stage bounds");
}

DiscreteMeasure build_target(const DiscreteMeasure& nu_k, const DiscreteMeasure& mu_k,
                             const DiscreteMeasure& nu_ra) {
  const double delta = nu_k.barycentre() - nu_ra.barycentre();
  const DiscreteMeasure shifted = translate(nu_ra, delta);
  const DiscreteMeasure upper = sup_cd(mu_k, shifted);
  const DiscreteMeasure out = inf_c(nu_k, upper);
  if (!leq_cd(mu_k, out)) {
    auto [bp, gap] = max_put_violation(mu_k, out);
    throw TargetConstructionError("target fails to dominate mu_k: gap " + std::to_string(gap) +
                                  " at x=" + std::to_string(bp));
  }
  if (!leq_c(out, nu_k)) {
    auto [bp, gap] = max_put_violation(out, nu_k);
    throw TargetConstructionError("target not below nu_k in convex order: gap " +
                                  std::to_string(gap) + " at x=" + std::to_string(bp));
  }
  return out;
}

FiniteCoupling quantile_transfer(const FiniteCoupling& pi, const DiscreteMeasure& mu_new) {
  if (std::abs(pi.mass() - mu_new.mass()) > order_tol())
    throw MassError("quantile_transfer: mass mismatch");
  const auto& rows = pi.rows();
  std::vector<double> cum(rows.size() + 1, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) cum[i + 1] = cum[i] + rows[i].w;
  std::vector<CouplingRow> out;
  double d0 = 0.0;
  for (std::size_t j = 0; j < mu_new.size(); ++j) {
    const double d1 = d0 + mu_new.weights()[j];
    std::vector<std::pair<double, DiscreteMeasure>> parts;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double o = std::max(0.0, std::min(cum[i + 1], d1) - std::max(cum[i], d0));
      if (o > 1e-15) parts.emplace_back(o / (d1 - d0), rows[i].kernel);
    }
    out.push_back({mu_new.atoms()[j], mu_new.weights()[j], mix(parts)});
    d0 = d1;
  }
  return FiniteCoupling(std::move(out));
}

Localization localize(const FiniteCoupling& pi_k, const FiniteCoupling& reference,
                      const Interval& A, const Interval& B, const Interval& C) {
  const double mass_A = restrict(reference.first_marginal(), A).mass();
  if (mass_A <= 0) throw LocalizationError("reference puts no mass on the window");
  const AwPlan plan = aw_distance_with_plan(pi_k, reference, 1.0);

  Localization loc;
  std::vector<CouplingRow> rows;
  double transported = 0.0;
  for (int i = 0; i < plan.plan.rows(); ++i) {
    double tilde = 0.0;
    for (int j = 0; j < plan.plan.cols(); ++j)
      if (A.contains(reference.rows()[static_cast<std::size_t>(j)].x))
        tilde += plan.plan(i, j);
    if (tilde <= 1e-14) continue;
    transported += tilde;
    const auto& row = pi_k.rows()[static_cast<std::size_t>(i)];
    if (!B.contains(row.x)) continue;
    DiscreteMeasure inside = restrict(row.kernel, C);
    if (inside.mass() <= 1e-14) continue;
    const double w = tilde * inside.mass();
    rows.push_back({row.x, w, scale_mass(inside, 1.0 / inside.mass())});
  }
  loc.pi_hat = FiniteCoupling(std::move(rows));
  loc.mu_hat = loc.pi_hat.first_marginal();
  loc.eps_k = 1.0 - transported / mass_A;
  loc.eps_prime_k = 1.0 - loc.pi_hat.mass() / mass_A;
  if (loc.eps_k < -1e-7 || loc.eps_prime_k < loc.eps_k - 1e-7)
    throw LocalizationError("localisation mass bookkeeping inconsistent");
  loc.eps_k = std::max(0.0, loc.eps_k);
  loc.eps_prime_k = std::max(loc.eps_prime_k, loc.eps_k);
  return loc;
}

FiniteCoupling correct_barycentres(const FiniteCoupling& pi_hat,
                                   const DiscreteMeasure& nu_minus, double e) {
  bool any_defect = false;
  for (const auto& r : pi_hat.rows())
    any_defect = any_defect || r.kernel.barycentre() > r.x + 1e-15;
  if (nu_minus.mass() <= 0) {
    if (any_defect) throw CorrectionError("no reservoir mass available for the correction");
    return pi_hat;
  }
  std::vector<CouplingRow> rows;
  for (const auto& r : pi_hat.rows()) {
    const double defect_x = std::max(0.0, r.kernel.barycentre() - r.x);
    if (defect_x <= 1e-15) {
      rows.push_back(r);
      continue;
    }
    if (nu_minus.atoms().back() > r.x - e + 1e-12)
      throw CorrectionError("reservoir is not strictly left of the defective row at x=" +
                            std::to_string(r.x));
    const double denom = r.x * nu_minus.mass() - nu_minus.first_moment();
    if (denom <= 0)
      throw CorrectionError("reservoir lies right of x=" + std::to_string(r.x));
    const double c = defect_x / denom;
    const double d = 1.0 + c * nu_minus.mass();
    rows.push_back({r.x, r.w, mix({{1.0 / d, r.kernel}, {c / d, nu_minus}})});
  }
  FiniteCoupling out(std::move(rows));
  if (!out.is_supermartingale())
    throw InternalConsistencyError("barycentre correction left a positive defect");
  return out;
}

FiniteCoupling complete(const DiscreteMeasure& mu_rem, const DiscreteMeasure& nu_rem) {
  if (std::abs(mu_rem.mass() - nu_rem.mass()) > order_tol())
    throw MassError("completion: remainder masses differ");
  if (mu_rem.is_zero() && nu_rem.is_zero()) return FiniteCoupling();
  if (!leq_cd(mu_rem, nu_rem)) {
    auto [bp, gap] = max_put_violation(mu_rem, nu_rem);
    throw CompletionError("remainders are not in convex decreasing order: put gap " +
                          std::to_string(gap) + " at x=" + std::to_string(bp));
  }
  return feasible_supermartingale(mu_rem, nu_rem);
}

FiniteCoupling final_adjust(const FiniteCoupling& pi_bar, const DiscreteMeasure& nu_k) {
  const DiscreteMeasure nu_mid = pi_bar.second_marginal();
  if (!leq_c(nu_mid, nu_k)) {
    auto [bp, gap] = max_put_violation(nu_mid, nu_k);
    throw OrderViolationError("intermediate second marginal not below nu_k in convex order",
                              bp, gap);
  }
  const MartingaleCoupling M = quantitative_martingale(nu_mid, nu_k);
  FiniteCoupling out = compose(pi_bar, M.coupling);
  if (aw_distance(out, pi_bar, 1.0) > M.cost + 1e-7)
    throw InternalConsistencyError("final adjustment moved further than the martingale hop");
  return out;
}

// -- Orchestration -----------------------------------------------------------------

namespace {

FiniteCoupling run_component(const FiniteCoupling& pi, const DiscreteMeasure& mu,
                             const DiscreteMeasure& nu, const DiscreteMeasure& mu_k,
                             const DiscreteMeasure& nu_k, double eps,
                             std::vector<StageRecord>& records) {
  auto guard = [](const char* stage, auto&& fn) -> decltype(fn()) {
    try {
      return fn();
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(stage, e);
    }
  };

  const PipelineParams p = guard("choose_params", [&] { return choose_params(pi, mu, nu, eps); });

  const FiniteCoupling piR = guard("truncate", [&] { return truncate(pi, p.R); });
  records.push_back({"truncate", aw_distance(piR, pi, 1.0), piR.defect(), piR.mass()});

  const FiniteCoupling piRA = guard("contract", [&] {
    FiniteCoupling c = contract(piR, p.alpha);
    const double bound =
        (1 - p.alpha) * (abs_moment(mu) + abs_moment(piR.second_marginal()));
    if (aw_distance(c, piR, 1.0) > bound + 1e-7)
      throw InternalConsistencyError("contraction moved further than its moment bound");
    return c;
  });
  records.push_back({"contract", aw_distance(piRA, piR, 1.0), piRA.defect(), piRA.mass()});
  const DiscreteMeasure nuRA = piRA.second_marginal();

  const DiscreteMeasure nuRAK =
      guard("build_target", [&] { return build_target(nu_k, mu_k, nuRA); });

  const FiniteCoupling pre = guard("transfer", [&] {
    const FiniteCoupling moved = quantile_transfer(piRA, mu_k);
    return compose(moved, comonotone_coupling(moved.second_marginal(), nuRAK));
  });
  records.push_back({"transfer", aw_distance(pre, piRA, 1.0), pre.defect(), pre.mass()});

  const Interval K = Interval::closed(p.a, p.b);
  const Interval C = Interval::open(p.L.lo, p.L.hi);
  const Localization loc =
      guard("localize", [&] { return localize(pre, piRA, K, p.K_tilde, C); });
  {
    // defect is 1-Lipschitz under AW1 against a supermartingale reference
    const FiniteCoupling ref =
        scale_coupling(restrict_first(piRA, K), 1.0 - loc.eps_prime_k);
    const double gap = aw_distance(loc.pi_hat, ref, 1.0);
    if (loc.pi_hat.defect() > gap + 1e-7)
      throw StageError("localize", InternalConsistencyError(
                                       "localized defect exceeds its AW1 bound"));
    records.push_back({"localize", gap, loc.pi_hat.defect(), loc.pi_hat.mass()});
  }

  const DiscreteMeasure nu_minus = restrict(nuRAK, p.L_minus);
  const FiniteCoupling pit =
      guard("correct", [&] { return correct_barycentres(loc.pi_hat, nu_minus, p.e); });
  records.push_back({"correct", aw_distance(pit, loc.pi_hat, 1.0), pit.defect(), pit.mass()});

  const FiniteCoupling eta = guard("complete", [&] {
    const DiscreteMeasure mu_rem =
        subtract(mu_k, scale_mass(pit.first_marginal(), 1 - 2 * eps), 1e-9);
    const DiscreteMeasure nu_mid_target =
        add(scale_mass(nu_k, eps), scale_mass(nuRAK, 1 - eps));
    const DiscreteMeasure nu_rem =
        subtract(nu_mid_target, scale_mass(pit.second_marginal(), 1 - 2 * eps), 1e-9);
    return complete(mu_rem, nu_rem);
  });
  const FiniteCoupling pi_bar = add(scale_coupling(pit, 1 - 2 * eps), eta);
  records.push_back({"glue", 0.0, pi_bar.defect(), pi_bar.mass()});

  const FiniteCoupling out = guard("final_adjust", [&] { return final_adjust(pi_bar, nu_k); });
  records.push_back({"final_adjust", aw_distance(out, pi_bar, 1.0), out.defect(), out.mass()});
  return out;
}

}  // namespace

ApproximationResult approximate(const FiniteCoupling& pi, const DiscreteMeasure& mu_k,
                                const DiscreteMeasure& nu_k,
                                const std::vector<double>& eps_schedule) {
  std::vector<double> schedule(eps_schedule);
  if (schedule.empty())
    for (int j = 2; j <= 7; ++j) schedule.push_back(std::ldexp(1.0, -j));

  if (!pi.is_supermartingale())
    throw CouplingInconsistentError("reference coupling is not a supermartingale");
  const DiscreteMeasure mu = pi.first_marginal();
  const DiscreteMeasure nu = pi.second_marginal();
  if (std::abs(mu_k.mass() - mu.mass()) > order_tol())
    throw MassError("perturbed marginals have a different mass");
  if (!leq_cd(mu_k, nu_k)) {
    auto [bp, gap] = max_put_violation(mu_k, nu_k);
    throw OrderViolationError("perturbed marginals not in convex decreasing order", bp, gap);
  }

  const IrreducibleDecomposition dec = irreducible_components(mu, nu);
  const std::vector<FiniteCoupling> pieces = decompose_coupling(pi, dec);
  const FiniteCoupling aux = feasible_supermartingale(mu_k, nu_k);
  const std::vector<ApproxComponent> parts = approx_decomposition(mu, nu, aux, mu_k, nu_k, dec);

  ApproximationResult result;
  for (std::size_t ci = 0; ci < dec.components.size(); ++ci) {
    const Component& comp = dec.components[ci];
    const ApproxComponent* part = nullptr;
    for (const auto& q : parts)
      if (q.kind == comp.kind && q.index == comp.index) part = &q;
    if (!part) {
      if (comp.mu_part.mass() > order_tol())
        throw InternalConsistencyError("missing perturbed component");
      continue;
    }

    if (comp.kind == ComponentKind::diagonal) {
      FiniteCoupling diag =
          wasserstein(part->mu_part, part->nu_part, 1.0) <= 1e-12
              ? FiniteCoupling::identity(part->mu_part)
              : feasible_supermartingale(part->mu_part, part->nu_part);
      result.coupling = add(result.coupling, diag);
      result.trace.stages.push_back({"diagonal", aw_distance(diag, pieces[ci], 1.0),
                                     diag.defect(), diag.mass()});
      continue;
    }

    const double m = comp.mu_part.mass();
    const FiniteCoupling pi_c = scale_coupling(pieces[ci], 1.0 / m);
    const DiscreteMeasure mu_c = scale_mass(comp.mu_part, 1.0 / m);
    const DiscreteMeasure nu_c = scale_mass(comp.nu_part, 1.0 / m);
    const DiscreteMeasure mu_kc = scale_mass(part->mu_part, 1.0 / m);
    const DiscreteMeasure nu_kc = scale_mass(part->nu_part, 1.0 / m);

    std::optional<FiniteCoupling> best;
    std::vector<StageRecord> best_records;
    double best_gap = kInf, best_eps = 0.0;
    std::optional<StageError> last_error;
    for (double eps : schedule) {
      std::vector<StageRecord> records;
      try {
        FiniteCoupling out = run_component(pi_c, mu_c, nu_c, mu_kc, nu_kc, eps, records);
        const double gap = aw_distance(out, pi_c, 1.0);
        if (gap < best_gap) {
          best_gap = gap;
          best = std::move(out);
          best_records = std::move(records);
          best_eps = eps;
        }
      } catch (const StageError& e) {
        last_error = e;
      }
    }
    if (!best) {
      if (last_error) throw *last_error;
      throw InternalConsistencyError("empty epsilon schedule");
    }
    result.coupling = add(result.coupling, scale_coupling(*best, m));
    for (auto& rec : best_records) result.trace.stages.push_back(std::move(rec));
    result.trace.eps_used = best_eps;
  }

  if (potential_gap(result.coupling.first_marginal(), mu_k) > order_tol() ||
      potential_gap(result.coupling.second_marginal(), nu_k) > order_tol())
    throw InternalConsistencyError("assembled coupling has wrong marginals");
  if (result.coupling.defect() > order_tol())
    throw InternalConsistencyError("assembled coupling has a positive defect");
  result.trace.aw_to_reference = aw_distance(result.coupling, pi, 1.0);
  return result;
}

}  // namespace smot
