#include "smot/wsot.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "smot/linprog.hpp"
#include "smot/solvers.hpp"

namespace smot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int grid_index(const std::vector<double>& axis, double v) {
  auto it = std::lower_bound(axis.begin(), axis.end(), v - 1e-9);
  if (it == axis.end() || std::abs(*it - v) > 1e-9) return -1;
  return static_cast<int>(it - axis.begin());
}

double phi_value(const CostSpec& C, double b) {
  return C.bary_quad * b * b + C.phi.value(b);
}

double phi_slope(const CostSpec& C, double b) {
  return 2.0 * C.bary_quad * b + C.phi.slope_right_of(b);
}

}  // namespace

CostSpec CostSpec::pairwise(std::vector<double> xs, std::vector<double> ys, Eigen::MatrixXd c) {
  CostSpec s;
  s.kind = Kind::pairwise;
  if (c.rows() != static_cast<Eigen::Index>(xs.size()) ||
      c.cols() != static_cast<Eigen::Index>(ys.size()))
    throw DomainError("pairwise cost grid shape mismatch");
  s.xs = std::move(xs);
  s.ys = std::move(ys);
  s.c = std::move(c);
  return s;
}

CostSpec CostSpec::pairwise_fn(std::function<double(double, double)> fn) {
  CostSpec s;
  s.kind = Kind::pairwise_fn;
  s.fn = std::move(fn);
  return s;
}

CostSpec CostSpec::barycentre_convex(double quad, PiecewiseLinearConvex phi) {
  if (quad < 0) throw DomainError("barycentre cost needs a convex phi (quad >= 0)");
  CostSpec s;
  s.kind = Kind::barycentre_convex;
  s.bary_quad = quad;
  s.phi = std::move(phi);
  return s;
}

CostSpec CostSpec::variance_penalty(double lambda) {
  if (lambda < 0) throw DomainError("variance penalty weight must be >= 0");
  CostSpec s;
  s.kind = Kind::variance_penalty;
  s.lambda = lambda;
  return s;
}

CostSpec CostSpec::combination(std::vector<double> weights, std::vector<CostSpec> terms) {
  if (weights.size() != terms.size()) throw DomainError("combination arity mismatch");
  CostSpec s;
  s.kind = Kind::linear_combination;
  s.term_weights = std::move(weights);
  s.terms = std::move(terms);
  return s;
}

bool CostSpec::is_linear() const {
  switch (kind) {
    case Kind::pairwise:
    case Kind::pairwise_fn:
      return true;
    case Kind::barycentre_convex:
    case Kind::variance_penalty:
      return false;
    case Kind::linear_combination:
      for (const auto& t : terms)
        if (!t.is_linear()) return false;
      return true;
  }
  return false;
}

double CostSpec::kernel_cost(double x, const DiscreteMeasure& p) const {
  switch (kind) {
    case Kind::pairwise: {
      const int i = grid_index(xs, x);
      if (i < 0) throw CostDomainError("x=" + std::to_string(x) + " missing from cost grid");
      double s = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        const int j = grid_index(ys, p.atoms()[k]);
        if (j < 0)
          throw CostDomainError("y=" + std::to_string(p.atoms()[k]) + " missing from cost grid");
        s += p.weights()[k] * c(i, j);
      }
      return s;
    }
    case Kind::pairwise_fn: {
      double s = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) s += p.weights()[k] * fn(x, p.atoms()[k]);
      return s;
    }
    case Kind::barycentre_convex:
      return phi_value(*this, p.barycentre());
    case Kind::variance_penalty: {
      const double b = p.barycentre();
      double s = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double d = p.atoms()[k] - b;
        s += p.weights()[k] * d * d;
      }
      return lambda * s / p.mass();
    }
    case Kind::linear_combination: {
      double s = 0.0;
      for (std::size_t k = 0; k < terms.size(); ++k)
        s += term_weights[k] * terms[k].kernel_cost(x, p);
      return s;
    }
  }
  throw DomainError("unknown cost kind");
}

double CostSpec::gradient(double x, double y, const DiscreteMeasure& p) const {
  switch (kind) {
    case Kind::pairwise: {
      const int i = grid_index(xs, x);
      const int j = grid_index(ys, y);
      if (i < 0 || j < 0)
        throw CostDomainError("(" + std::to_string(x) + ", " + std::to_string(y) +
                              ") missing from cost grid");
      return c(i, j);
    }
    case Kind::pairwise_fn:
      return fn(x, y);
    case Kind::barycentre_convex:
      return phi_slope(*this, p.barycentre()) * y;
    case Kind::variance_penalty: {
      const double b = p.barycentre();
      return lambda * (y * y - 2.0 * b * y);
    }
    case Kind::linear_combination: {
      double s = 0.0;
      for (std::size_t k = 0; k < terms.size(); ++k)
        s += term_weights[k] * terms[k].gradient(x, y, p);
      return s;
    }
  }
  throw DomainError("unknown cost kind");
}

double eval_cost(const CostSpec& C, const FiniteCoupling& pi) {
  double s = 0.0;
  for (const auto& r : pi.rows()) s += r.w * C.kernel_cost(r.x, r.kernel);
  return s;
}

// -- Solvers --------------------------------------------------------------------

namespace {

void require_order(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (std::abs(mu.mass() - nu.mass()) > order_tol())
    throw MassError("solver: mass mismatch");
  if (!leq_cd(mu, nu)) {
    auto [bp, gap] = max_put_violation(mu, nu);
    throw OrderViolationError("marginals not in convex decreasing order", bp, gap);
  }
}

Eigen::MatrixXd pairwise_matrix(const CostSpec& C, const DiscreteMeasure& mu,
                                const DiscreteMeasure& nu) {
  const int n1 = static_cast<int>(mu.size());
  const int n2 = static_cast<int>(nu.size());
  Eigen::MatrixXd m(n1, n2);
  const DiscreteMeasure dummy = DiscreteMeasure::dirac(0.0);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j)
      m(i, j) = C.gradient(mu.atoms()[static_cast<std::size_t>(i)],
                           nu.atoms()[static_cast<std::size_t>(j)], dummy);
  return m;
}

}  // namespace

SolveResult solve_linear(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const CostSpec& C) {
  if (!C.is_linear()) throw DomainError("solve_linear needs a kernel-linear cost");
  require_order(mu, nu);
  if (mu.is_zero()) return {0.0, FiniteCoupling(), 0.0};
  LinearProgram lp = coupling_polytope_lp(mu, nu, pairwise_matrix(C, mu, nu), false);
  LpResult res = solve_lp(lp);
  if (res.status != LpStatus::optimal)
    throw SolverError("supermartingale polytope LP did not reach optimality");
  return {res.value, coupling_from_vector(mu, nu, res.x), 0.0};
}

SolveResult solve_convex(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const CostSpec& C) {
  require_order(mu, nu);
  if (mu.is_zero()) return {0.0, FiniteCoupling(), 0.0};
  if (C.is_linear()) return solve_linear(mu, nu, C);

  const int n1 = static_cast<int>(mu.size());
  const int n2 = static_cast<int>(nu.size());
  LinearProgram lp = coupling_polytope_lp(mu, nu, Eigen::MatrixXd::Zero(n1, n2), false);

  auto objective = [&](const Eigen::VectorXd& z) {
    return eval_cost(C, coupling_from_vector(mu, nu, z));
  };
  auto grad = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd g(n1 * n2);
    const FiniteCoupling pi = coupling_from_vector(mu, nu, z);
    // coupling_from_vector drops empty rows; align back to mu's atoms
    std::size_t r = 0;
    for (int i = 0; i < n1; ++i) {
      const double x = mu.atoms()[static_cast<std::size_t>(i)];
      const DiscreteMeasure* kernel = nullptr;
      if (r < pi.size() && std::abs(pi.rows()[r].x - x) <= 1e-9) kernel = &pi.rows()[r++].kernel;
      for (int j = 0; j < n2; ++j) {
        const double y = nu.atoms()[static_cast<std::size_t>(j)];
        g(i * n2 + j) = kernel ? C.gradient(x, y, *kernel)
                               : C.gradient(x, y, DiscreteMeasure::dirac(y));
      }
    }
    return g;
  };

  // start from the canonical feasible point
  Eigen::VectorXd z(n1 * n2);
  z.setZero();
  {
    const FiniteCoupling start = feasible_supermartingale(mu, nu);
    for (std::size_t r = 0; r < start.size(); ++r) {
      const auto& row = start.rows()[r];
      const int i = grid_index(mu.atoms(), row.x);
      for (std::size_t k = 0; k < row.kernel.size(); ++k) {
        const int j = grid_index(nu.atoms(), row.kernel.atoms()[k]);
        z(i * n2 + j) += row.w * row.kernel.weights()[k];
      }
    }
  }

  double best_value = objective(z);
  Eigen::VectorXd best_z = z;
  double gap = kInf;
  for (int iter = 0; iter < 10000; ++iter) {
    const Eigen::VectorXd g = grad(z);
    lp.c = g;
    LpResult vertex = solve_lp(lp);
    if (vertex.status != LpStatus::optimal)
      throw SolverError("conditional-gradient oracle failed");
    const Eigen::VectorXd d = vertex.x - z;
    gap = -g.dot(d);
    if (gap <= 1e-7) break;
    // golden-section line search on [0, 1]
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0, hi = 1.0;
    double m1 = hi - invphi * (hi - lo), m2 = lo + invphi * (hi - lo);
    double f1 = objective(z + m1 * d), f2 = objective(z + m2 * d);
    for (int it = 0; it < 60; ++it) {
      if (f1 <= f2) {
        hi = m2;
        m2 = m1;
        f2 = f1;
        m1 = hi - invphi * (hi - lo);
        f1 = objective(z + m1 * d);
      } else {
        lo = m1;
        m1 = m2;
        f1 = f2;
        m2 = lo + invphi * (hi - lo);
        f2 = objective(z + m2 * d);
      }
    }
    const double t = 0.5 * (lo + hi);
    z += t * d;
    const double v = objective(z);
    if (v < best_value - 1e-15) {
      best_value = v;
      best_z = z;
    } else if (t <= 1e-14) {
      break;  // stalled
    }
  }
  return {best_value, coupling_from_vector(mu, nu, best_z), std::max(0.0, gap)};
}

// -- Monotonicity ----------------------------------------------------------------

MartingaleRegions martingale_regions(const FiniteCoupling& pi,
                                     const IrreducibleDecomposition& dec) {
  (void)pi;
  MartingaleRegions reg;
  for (const auto& c : dec.components) {
    if (c.kind == ComponentKind::martingale) reg.M1.push_back(c.interval);
    if (c.kind == ComponentKind::supermartingale) reg.M0.push_back(c.interval);
  }
  return reg;
}

namespace {

// How a competitor kernel's barycentre is constrained. Martingale components
// and the diagonal pin it; inside the strict-supermartingale block only the
// rows where the coupling is itself a martingale (bary = x) belong to M0 and
// may decrease; strictly supermartingale rows are unconstrained.
enum class BaryConstraint { pinned, may_decrease, free_ };

BaryConstraint bary_constraint(const CouplingRow& row, const MartingaleRegions& reg) {
  for (const auto& I : reg.M1)
    if (I.contains(row.x)) return BaryConstraint::pinned;
  for (const auto& I : reg.M0)
    if (I.contains(row.x))
      return row.kernel.barycentre() >= row.x - order_tol() ? BaryConstraint::may_decrease
                                                            : BaryConstraint::free_;
  return BaryConstraint::pinned;  // diagonal remainder: point kernels
}

struct CompetitorProblem {
  LinearProgram lp;          // constraints; objective filled by caller
  std::vector<double> ys;    // pooled support
  Eigen::VectorXd q0;        // current kernels, feasible start
};

CompetitorProblem competitor_problem(const FiniteCoupling& pi,
                                     const std::vector<std::size_t>& subset,
                                     const MartingaleRegions& reg) {
  CompetitorProblem cp;
  for (std::size_t i : subset)
    for (double y : pi.rows()[i].kernel.atoms()) cp.ys.push_back(y);
  std::sort(cp.ys.begin(), cp.ys.end());
  cp.ys.erase(std::unique(cp.ys.begin(), cp.ys.end(),
                          [](double a, double b) { return b - a <= 1e-9; }),
              cp.ys.end());
  const int S = static_cast<int>(subset.size());
  const int K = static_cast<int>(cp.ys.size());
  std::vector<BaryConstraint> con;
  int n_bary = 0;
  for (std::size_t i : subset) {
    con.push_back(bary_constraint(pi.rows()[i], reg));
    if (con.back() != BaryConstraint::free_) ++n_bary;
  }
  const int rows = K + S + n_bary;
  cp.lp.A = Eigen::MatrixXd::Zero(rows, S * K);
  cp.lp.b = Eigen::VectorXd::Zero(rows);
  cp.lp.c = Eigen::VectorXd::Zero(S * K);
  cp.lp.row_is_ineq.assign(static_cast<std::size_t>(rows), false);
  cp.q0 = Eigen::VectorXd::Zero(S * K);
  for (int s = 0; s < S; ++s) {
    const auto& row = pi.rows()[subset[static_cast<std::size_t>(s)]];
    for (std::size_t k = 0; k < row.kernel.size(); ++k) {
      const int j = grid_index(cp.ys, row.kernel.atoms()[k]);
      cp.q0(s * K + j) += row.kernel.weights()[k];
      cp.lp.b(j) += row.kernel.weights()[k];  // pooled-sum rows
    }
  }
  for (int j = 0; j < K; ++j)
    for (int s = 0; s < S; ++s) cp.lp.A(j, s * K + j) = 1.0;
  int at = K + S;
  for (int s = 0; s < S; ++s) {
    for (int j = 0; j < K; ++j) cp.lp.A(K + s, s * K + j) = 1.0;
    cp.lp.b(K + s) = 1.0;
    if (con[static_cast<std::size_t>(s)] == BaryConstraint::free_) continue;
    const auto& row = pi.rows()[subset[static_cast<std::size_t>(s)]];
    for (int j = 0; j < K; ++j) cp.lp.A(at, s * K + j) = cp.ys[static_cast<std::size_t>(j)];
    cp.lp.b(at) = row.kernel.barycentre();
    cp.lp.row_is_ineq[static_cast<std::size_t>(at)] =
        con[static_cast<std::size_t>(s)] == BaryConstraint::may_decrease;
    ++at;
  }
  return cp;
}

double competitor_cost(const CostSpec& C, const FiniteCoupling& pi,
                       const std::vector<std::size_t>& subset,
                       const std::vector<double>& ys, const Eigen::VectorXd& q) {
  const int K = static_cast<int>(ys.size());
  double total = 0.0;
  for (int s = 0; s < static_cast<int>(subset.size()); ++s) {
    std::vector<double> atoms, weights;
    for (int j = 0; j < K; ++j)
      if (q(s * K + j) > 1e-12) {
        atoms.push_back(ys[static_cast<std::size_t>(j)]);
        weights.push_back(q(s * K + j));
      }
    total += C.kernel_cost(pi.rows()[subset[static_cast<std::size_t>(s)]].x,
                           DiscreteMeasure(std::move(atoms), std::move(weights)));
  }
  return total;
}

Eigen::VectorXd competitor_gradient(const CostSpec& C, const FiniteCoupling& pi,
                                    const std::vector<std::size_t>& subset,
                                    const std::vector<double>& ys, const Eigen::VectorXd& q) {
  const int K = static_cast<int>(ys.size());
  Eigen::VectorXd g(static_cast<int>(subset.size()) * K);
  for (int s = 0; s < static_cast<int>(subset.size()); ++s) {
    std::vector<double> atoms, weights;
    for (int j = 0; j < K; ++j)
      if (q(s * K + j) > 1e-12) {
        atoms.push_back(ys[static_cast<std::size_t>(j)]);
        weights.push_back(q(s * K + j));
      }
    const DiscreteMeasure p(std::move(atoms), std::move(weights));
    const double x = pi.rows()[subset[static_cast<std::size_t>(s)]].x;
    for (int j = 0; j < K; ++j) g(s * K + j) = C.gradient(x, ys[static_cast<std::size_t>(j)], p);
  }
  return g;
}

}  // namespace

MonotonicityReport check_monotone(const FiniteCoupling& pi, const CostSpec& C,
                                  const IrreducibleDecomposition& dec, int n_max) {
  MonotonicityReport rep;
  const MartingaleRegions reg = martingale_regions(pi, dec);
  const std::size_t n = pi.size();

  std::vector<std::vector<std::size_t>> subsets;
  std::vector<std::size_t> cur;
  std::function<void(std::size_t, int)> gen = [&](std::size_t from, int left) {
    if (!cur.empty()) subsets.push_back(cur);
    if (left == 0) return;
    for (std::size_t i = from; i < n; ++i) {
      cur.push_back(i);
      gen(i + 1, left - 1);
      cur.pop_back();
    }
  };
  gen(0, n_max);

  for (const auto& subset : subsets) {
    CompetitorProblem cp = competitor_problem(pi, subset, reg);
    const double baseline = competitor_cost(C, pi, subset, cp.ys, cp.q0);
    Eigen::VectorXd q;
    double value;
    if (C.is_linear()) {
      cp.lp.c = competitor_gradient(C, pi, subset, cp.ys, cp.q0);
      LpResult res = solve_lp(cp.lp);
      if (res.status != LpStatus::optimal)
        throw SolverError("competitor LP did not reach optimality");
      q = res.x;
      value = res.value;
    } else {
      // conditional gradient from the incumbent kernels
      q = cp.q0;
      value = baseline;
      for (int iter = 0; iter < 300; ++iter) {
        cp.lp.c = competitor_gradient(C, pi, subset, cp.ys, q);
        LpResult res = solve_lp(cp.lp);
        if (res.status != LpStatus::optimal) break;
        const Eigen::VectorXd d = res.x - q;
        if (-cp.lp.c.dot(d) <= 1e-9) break;
        double best_t = 0.0, best_f = value;
        for (int g = 1; g <= 32; ++g) {
          const double t = g / 32.0;
          const double f = competitor_cost(C, pi, subset, cp.ys, q + t * d);
          if (f < best_f) {
            best_f = f;
            best_t = t;
          }
        }
        if (best_t == 0.0) break;
        q += best_t * d;
        value = best_f;
      }
    }
    if (value < baseline - 1e-7) {
      rep.is_monotone = false;
      rep.witness_rows = subset;
      rep.improvement = baseline - value;
      const int K = static_cast<int>(cp.ys.size());
      for (int s = 0; s < static_cast<int>(subset.size()); ++s) {
        std::vector<double> atoms, weights;
        for (int j = 0; j < K; ++j)
          if (q(s * K + j) > 1e-12) {
            atoms.push_back(cp.ys[static_cast<std::size_t>(j)]);
            weights.push_back(q(s * K + j));
          }
        rep.witness_kernels.emplace_back(std::move(atoms), std::move(weights));
      }
      return rep;
    }
  }
  return rep;
}

MonotonicityReport check_finitely_optimal(const FiniteCoupling& pi, const CostSpec& c,
                                          const IrreducibleDecomposition& dec, int n_max) {
  if (!c.is_linear())
    throw DomainError("finite optimality check needs an integrated pairwise cost");
  return check_monotone(pi, c, dec, n_max);
}

// -- Stability --------------------------------------------------------------------

PerturbedPair perturb_pair(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double h,
                           PerturbationMode mode, std::uint64_t seed) {
  if (h == 0.0) return {mu, nu};
  if (mode == PerturbationMode::translate)
    return {translate(mu, h), translate(nu, h)};

  // split each nu atom into a +-h/2 pair, then take the envelope upward
  std::vector<double> atoms, weights;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    atoms.push_back(nu.atoms()[i] - 0.5 * h);
    weights.push_back(0.5 * nu.weights()[i]);
    atoms.push_back(nu.atoms()[i] + 0.5 * h);
    weights.push_back(0.5 * nu.weights()[i]);
  }
  const DiscreteMeasure nu_h = sup_cd(nu, DiscreteMeasure(std::move(atoms), std::move(weights)));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> jittered(mu.atoms());
  for (double& x : jittered) x += 0.5 * h * U(rng);
  const DiscreteMeasure mu_j(std::move(jittered), mu.weights());
  // envelope projection restores mu_h <=_cd nu_h; identity when already feasible
  const DiscreteMeasure mu_h = inf_cd(mu_j, nu_h);
  if (!leq_cd(mu_h, nu_h))
    throw PerturbationError("perturbation repair failed to restore the order");
  return {mu_h, nu_h};
}

std::vector<StabilityRow> stability_run(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                        const CostSpec& C, PerturbationMode mode,
                                        const std::vector<double>& levels,
                                        std::uint64_t seed) {
  auto solve = [&](const DiscreteMeasure& m, const DiscreteMeasure& n) {
    return C.is_linear() ? solve_linear(m, n, C) : solve_convex(m, n, C);
  };
  const SolveResult base = solve(mu, nu);
  std::vector<StabilityRow> out;
  for (double h : levels) {
    const PerturbedPair p = perturb_pair(mu, nu, h, mode, seed);
    const SolveResult r = solve(p.mu, p.nu);
    StabilityRow row;
    row.h = h;
    row.marginal_gap = wasserstein(p.mu, mu, 1.0) + wasserstein(p.nu, nu, 1.0);
    row.value = r.value;
    row.value_gap = std::abs(r.value - base.value);
    row.aw_gap = aw_distance(r.coupling, base.coupling, 1.0);
    out.push_back(row);
  }
  return out;
}

}  // namespace smot
