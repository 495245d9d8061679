#include "smot/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace smot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_leq_cd(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (!leq_cd(mu, nu)) {
    auto [bp, gap] = max_put_violation(mu, nu);
    throw OrderViolationError("marginals not in convex decreasing order; put gap " +
                                  std::to_string(gap) + " at x=" + std::to_string(bp),
                              bp, gap);
  }
}

// sup over the union of atoms of |P_a - P_b| plus the mass gap
double potential_distance(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  double d = std::abs(a.mass() - b.mass());
  for (double x : a.atoms()) d = std::max(d, std::abs(put_value(a, x) - put_value(b, x)));
  for (double x : b.atoms()) d = std::max(d, std::abs(put_value(a, x) - put_value(b, x)));
  return d;
}

}  // namespace

PiecewiseLinearFn defect_potential(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  require_leq_cd(mu, nu);
  PiecewiseLinearFn D;
  D.breakpoints = mu.atoms();
  D.breakpoints.insert(D.breakpoints.end(), nu.atoms().begin(), nu.atoms().end());
  std::sort(D.breakpoints.begin(), D.breakpoints.end());
  D.breakpoints.erase(std::unique(D.breakpoints.begin(), D.breakpoints.end(),
                                  [](double p, double q) { return q - p <= kMergeTol; }),
                      D.breakpoints.end());
  D.values.resize(D.breakpoints.size());
  for (std::size_t i = 0; i < D.breakpoints.size(); ++i)
    D.values[i] = put_value(nu, D.breakpoints[i]) - put_value(mu, D.breakpoints[i]);
  D.left_slope = 0.0;
  D.right_slope = nu.mass() - mu.mass();
  return D;
}

double x_star(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  PiecewiseLinearFn D = defect_potential(mu, nu);
  if (D.breakpoints.empty()) return kInf;
  double scale = 1.0;
  for (double v : D.values) scale = std::max(scale, std::abs(v));
  const double tol = 1e-12 * scale;
  auto zero = [&](std::size_t i) { return std::abs(D.values[i]) <= tol; };

  bool all_zero = true;
  for (std::size_t i = 0; i < D.values.size(); ++i) all_zero = all_zero && zero(i);
  if (all_zero) return kInf;

  const double mean_gap = mu.first_moment() - nu.first_moment();
  if (mean_gap <= tol) {
    // D decays back to zero at +inf: the boundary is where the terminal zero
    // ray begins
    std::size_t j = D.values.size();
    while (j > 0 && zero(j - 1)) --j;
    return D.breakpoints[j];  // j < size since not all breakpoints are zero
  }
  double best = -kInf;
  for (std::size_t i = 0; i < D.values.size(); ++i)
    if (zero(i)) best = std::max(best, D.breakpoints[i]);
  return best;  // D(leftmost atom) = 0, so a zero always exists
}

IrreducibleDecomposition irreducible_components(const DiscreteMeasure& mu,
                                                const DiscreteMeasure& nu) {
  IrreducibleDecomposition dec;
  PiecewiseLinearFn D = defect_potential(mu, nu);
  dec.x_star = x_star(mu, nu);
  if (mu.is_zero() && nu.is_zero()) return dec;

  if (dec.x_star == kInf) {
    if (potential_distance(mu, nu) > order_tol())
      throw InternalConsistencyError("vanishing potential gap but marginals differ");
    dec.components.push_back({Interval::all(), ComponentKind::diagonal, -1, mu, nu});
    return dec;
  }

  double scale = 1.0;
  for (double v : D.values) scale = std::max(scale, std::abs(v));
  const double ztol = 1e-12 * scale;

  // maximal runs of strictly positive breakpoints left of x_star; each run is
  // flanked by zero breakpoints which become the open component's endpoints
  std::vector<std::pair<double, double>> mart;
  std::size_t i = 0;
  const auto& xs = D.breakpoints;
  while (i < xs.size() && xs[i] < dec.x_star - kMergeTol) {
    if (D.values[i] > ztol) {
      std::size_t j = i;
      while (j + 1 < xs.size() && D.values[j + 1] > ztol && xs[j + 1] < dec.x_star - kMergeTol)
        ++j;
      const double l = (i == 0) ? xs[0] : xs[i - 1];  // i>0 always: D(xs[0])=0
      const double r = (j + 1 < xs.size()) ? xs[j + 1] : dec.x_star;
      mart.emplace_back(l, r);
      i = j + 1;
    } else {
      ++i;
    }
  }

  // mu side: plain restrictions to the open intervals
  std::vector<double> avail(nu.weights());
  auto draw = [&](double x, double w) {
    if (w <= 1e-12) return;
    auto it = std::lower_bound(nu.atoms().begin(), nu.atoms().end(), x - 1e-9);
    std::size_t k = static_cast<std::size_t>(it - nu.atoms().begin());
    if (k >= nu.size() || std::abs(nu.atoms()[k] - x) > 1e-9)
      throw InternalConsistencyError("component boundary needs mass at x=" +
                                     std::to_string(x) + " where nu has no atom");
    avail[k] -= w;
    if (avail[k] < -1e-9)
      throw InternalConsistencyError("boundary atom over-allocated at x=" + std::to_string(x));
    if (avail[k] < 0) avail[k] = 0;
  };
  auto consume = [&](const DiscreteMeasure& part) {
    for (std::size_t k = 0; k < part.size(); ++k) draw(part.atoms()[k], part.weights()[k]);
  };
  // open-interval restriction with the same boundary tolerance as draw(), so
  // atoms a rounding error away from an endpoint count as boundary atoms
  constexpr double btol = 1e-9;
  auto interior_of = [&](const DiscreteMeasure& m, double l, double r) {
    return restrict(m, Interval::closed(l + btol, r == kInf ? kInf : r - btol));
  };

  int next_index = 1;
  for (auto [l, r] : mart) {
    const Interval I = Interval::open(l, r);
    DiscreteMeasure mu_n = interior_of(mu, l, r);
    DiscreteMeasure interior = interior_of(nu, l, r);
    const double m = mu_n.mass() - interior.mass();
    const double s = mu_n.first_moment() - interior.first_moment();
    double wr = (s - l * m) / (r - l);
    double wl = m - wr;
    if (wl < -1e-9 || wr < -1e-9)
      throw InternalConsistencyError("negative boundary allocation on (" +
                                     std::to_string(l) + ", " + std::to_string(r) + ")");
    wl = std::max(0.0, wl);
    wr = std::max(0.0, wr);
    consume(interior);
    draw(l, wl);
    draw(r, wr);
    DiscreteMeasure nu_n = interior;
    if (wl > 1e-12) nu_n = add(nu_n, DiscreteMeasure::dirac(l, wl));
    if (wr > 1e-12) nu_n = add(nu_n, DiscreteMeasure::dirac(r, wr));
    if (!mu_n.is_zero() && !leq_c(mu_n, nu_n))
      throw InternalConsistencyError("martingale component violates convex order");
    dec.components.push_back({I, ComponentKind::martingale, next_index++, mu_n, nu_n});
  }

  // supermartingale block on (x_star, inf)
  {
    const Interval I0{dec.x_star, kInf, false, false};
    DiscreteMeasure mu_0 = interior_of(mu, dec.x_star, kInf);
    DiscreteMeasure interior = interior_of(nu, dec.x_star, kInf);
    const double need = mu_0.mass() - interior.mass();
    if (need < -1e-9)
      throw InternalConsistencyError("supermartingale block has excess nu mass");
    consume(interior);
    DiscreteMeasure nu_0 = interior;
    if (need > 1e-12) {
      draw(dec.x_star, need);
      nu_0 = add(nu_0, DiscreteMeasure::dirac(dec.x_star, need));
    }
    if (!mu_0.is_zero() && !leq_cd(mu_0, nu_0))
      throw InternalConsistencyError("supermartingale component violates order");
    if (!mu_0.is_zero())
      dec.components.push_back({I0, ComponentKind::supermartingale, 0, mu_0, nu_0});
  }

  // diagonal = everything left over; must match on both sides
  DiscreteMeasure mu_diag = mu;
  for (const auto& c : dec.components) mu_diag = subtract(mu_diag, c.mu_part);
  std::vector<double> datoms, dweights;
  for (std::size_t k = 0; k < nu.size(); ++k)
    if (avail[k] > 1e-12) {
      datoms.push_back(nu.atoms()[k]);
      dweights.push_back(avail[k]);
    }
  DiscreteMeasure nu_diag(std::move(datoms), std::move(dweights));
  if (potential_distance(mu_diag, nu_diag) > order_tol())
    throw InternalConsistencyError("diagonal remainders of mu and nu disagree");
  if (!mu_diag.is_zero())
    dec.components.push_back({Interval::all(), ComponentKind::diagonal, -1, mu_diag, nu_diag});
  return dec;
}

std::vector<FiniteCoupling> decompose_coupling(const FiniteCoupling& pi,
                                               const IrreducibleDecomposition& dec) {
  std::vector<FiniteCoupling> out;
  // same boundary tolerance as irreducible_components: rows a rounding error
  // from an open endpoint belong to the boundary, not the component
  constexpr double btol = 1e-9;
  auto shrunk = [&](const Interval& I) {
    return Interval::closed(I.lo == -kInf ? -kInf : I.lo + btol,
                            I.hi == kInf ? kInf : I.hi - btol);
  };
  std::vector<Interval> open_parts;
  for (const auto& c : dec.components)
    if (c.kind != ComponentKind::diagonal) open_parts.push_back(shrunk(c.interval));

  for (const auto& c : dec.components) {
    FiniteCoupling piece;
    if (c.kind == ComponentKind::diagonal) {
      std::vector<CouplingRow> rows;
      for (const auto& r : pi.rows()) {
        bool claimed = false;
        for (const Interval& oc : open_parts) claimed = claimed || oc.contains(r.x);
        if (!claimed) rows.push_back(r);
      }
      piece = FiniteCoupling(std::move(rows));
      for (const auto& r : piece.rows())
        if (wasserstein(r.kernel, DiscreteMeasure::dirac(r.x), 1.0) > order_tol())
          throw CouplingInconsistentError("diagonal row at x=" + std::to_string(r.x) +
                                          " is not a point kernel");
    } else {
      piece = restrict_first(pi, shrunk(c.interval));
      if (c.kind == ComponentKind::martingale && !piece.is_martingale())
        throw CouplingInconsistentError("restriction to a martingale component is not a martingale");
      if (c.kind == ComponentKind::supermartingale && !piece.is_supermartingale())
        throw CouplingInconsistentError("restriction to the supermartingale component has positive defect");
    }
    if (potential_distance(piece.first_marginal(), c.mu_part) > order_tol() ||
        potential_distance(piece.second_marginal(), c.nu_part) > order_tol())
      throw CouplingInconsistentError("component marginals do not match the decomposition");
    out.push_back(std::move(piece));
  }
  return out;
}

std::vector<ApproxComponent> approx_decomposition(const DiscreteMeasure& mu,
                                                  const DiscreteMeasure& nu,
                                                  const FiniteCoupling& pi_k,
                                                  const DiscreteMeasure& mu_k,
                                                  const DiscreteMeasure& nu_k,
                                                  const IrreducibleDecomposition& dec) {
  require_leq_cd(mu_k, nu_k);
  if (potential_distance(pi_k.first_marginal(), mu_k) > order_tol())
    throw CouplingInconsistentError("coupling's first marginal is not mu_k");
  (void)nu;

  // cumulative spans of pi_k's rows along mu_k
  const auto& rows = pi_k.rows();
  std::vector<double> cum(rows.size() + 1, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) cum[i + 1] = cum[i] + rows[i].w;

  auto segment = [&](double u0, double u1) {
    ApproxComponent part;
    std::vector<double> atoms, weights;
    std::vector<std::pair<double, DiscreteMeasure>> kparts;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double o = std::max(0.0, std::min(cum[i + 1], u1) - std::max(cum[i], u0));
      if (o > 1e-14) {
        atoms.push_back(rows[i].x);
        weights.push_back(o);
        kparts.emplace_back(o, rows[i].kernel);
      }
    }
    part.mu_part = DiscreteMeasure(std::move(atoms), std::move(weights));
    part.nu_part = mix(kparts);
    return part;
  };

  std::vector<ApproxComponent> out;
  std::vector<std::pair<double, double>> taken;
  for (const auto& c : dec.components) {
    if (c.kind == ComponentKind::diagonal) continue;
    const double l = c.interval.lo;
    const double u0 = mu.cdf(l);
    const double u1 = u0 + c.mu_part.mass();
    ApproxComponent part = segment(u0, u1);
    part.kind = c.kind;
    part.index = c.index;
    if (!part.mu_part.is_zero() && !leq_cd(part.mu_part, part.nu_part))
      throw InternalConsistencyError("quantile-transferred component violates order");
    taken.emplace_back(u0, u1);
    out.push_back(std::move(part));
  }

  // diagonal piece: complement of the taken cumulative ranges
  std::sort(taken.begin(), taken.end());
  std::vector<double> atoms, weights;
  std::vector<std::pair<double, DiscreteMeasure>> kparts;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double rem = rows[i].w;
    for (auto [u0, u1] : taken)
      rem -= std::max(0.0, std::min(cum[i + 1], u1) - std::max(cum[i], u0));
    if (rem > 1e-14) {
      atoms.push_back(rows[i].x);
      weights.push_back(rem);
      kparts.emplace_back(rem, rows[i].kernel);
    }
  }
  if (!atoms.empty()) {
    ApproxComponent diag;
    diag.kind = ComponentKind::diagonal;
    diag.index = -1;
    diag.mu_part = DiscreteMeasure(std::move(atoms), std::move(weights));
    diag.nu_part = mix(kparts);
    out.push_back(std::move(diag));
  }
  return out;
}

}  // namespace smot
