#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "smot/coupling.hpp"
#include "smot/decomposition.hpp"
#include "smot/measure.hpp"

namespace smot {

/// Cost of placing kernel p at point x. Kinds:
///  - pairwise: grid c(x_i, y_j) over fixed supports (linear in the kernel)
///  - pairwise_fn: c(x, y) as a callable (linear in the kernel)
///  - barycentre_convex: phi(bary(p)) with phi = quad*b^2 + piecewise-linear
///  - variance_penalty: lambda * second moment of p about its mean
///  - linear_combination: weighted sum of sub-costs
struct CostSpec {
  enum class Kind {
    pairwise,
    pairwise_fn,
    barycentre_convex,
    variance_penalty,
    linear_combination
  };
  Kind kind = Kind::pairwise;

  std::vector<double> xs, ys;  // pairwise grid axes
  Eigen::MatrixXd c;           // pairwise values, xs x ys
  std::function<double(double, double)> fn;

  double bary_quad = 0.0;
  PiecewiseLinearConvex phi;

  double lambda = 0.0;

  std::vector<double> term_weights;
  std::vector<CostSpec> terms;

  static CostSpec pairwise(std::vector<double> xs, std::vector<double> ys, Eigen::MatrixXd c);
  static CostSpec pairwise_fn(std::function<double(double, double)> fn);
  static CostSpec barycentre_convex(double quad, PiecewiseLinearConvex phi = {});
  static CostSpec variance_penalty(double lambda);
  static CostSpec combination(std::vector<double> weights, std::vector<CostSpec> terms);

  /// True when the kind is linear in the kernel (pairwise grids/functions).
  bool is_linear() const;

  double kernel_cost(double x, const DiscreteMeasure& p) const;
  /// c(x, y) seen as the linearization at kernel p (gradient for the
  /// conditional-gradient solver; exact for linear kinds).
  double gradient(double x, double y, const DiscreteMeasure& p) const;
};

double eval_cost(const CostSpec& C, const FiniteCoupling& pi);

struct SolveResult {
  double value = 0.0;
  FiniteCoupling coupling;
  double gap = 0.0;  // duality gap certificate (0 for the linear solver)
};

/// Exact LP over the supermartingale polytope; cost must be linear in the kernel.
SolveResult solve_linear(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const CostSpec& C);

/// Conditional gradient (Frank-Wolfe) with solve_linear as the oracle; stops
/// at duality gap <= 1e-7 or 10^4 iterations.
SolveResult solve_convex(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const CostSpec& C);

struct MartingaleRegions {
  std::vector<Interval> M0;  // barycentre may decrease here
  std::vector<Interval> M1;  // barycentre pinned here
};
MartingaleRegions martingale_regions(const FiniteCoupling& pi,
                                     const IrreducibleDecomposition& dec);

struct MonotonicityReport {
  bool is_monotone = true;
  std::vector<std::size_t> witness_rows;           // indices into pi's rows
  std::vector<DiscreteMeasure> witness_kernels;    // improving competitors
  double improvement = 0.0;                        // cost drop achieved
};

/// Searches all row subsets of size <= n_max for an improving competitor:
/// kernels supported on the subset's pooled atoms, with the pooled kernel sum
/// preserved and barycentres pinned (M1) or allowed to drop (M0).
MonotonicityReport check_monotone(const FiniteCoupling& pi, const CostSpec& C,
                                  const IrreducibleDecomposition& dec, int n_max = 3);

/// check_monotone specialized to integrated pairwise costs.
MonotonicityReport check_finitely_optimal(const FiniteCoupling& pi, const CostSpec& c,
                                          const IrreducibleDecomposition& dec, int n_max = 3);

enum class PerturbationMode { mollify, translate };

struct StabilityRow {
  double h = 0.0;
  double marginal_gap = 0.0;  // W1(mu_h, mu) + W1(nu_h, nu)
  double value = 0.0;
  double value_gap = 0.0;
  double aw_gap = 0.0;  // AW1 of the perturbed optimizer to the base one
};

struct PerturbedPair {
  DiscreteMeasure mu;
  DiscreteMeasure nu;
};
/// Order-preserving perturbation at level h: nu is pushed up in convex
/// decreasing order by blending with a split-atom copy; mu is jittered and
/// projected back under nu via the lattice envelope. Translate mode shifts
/// both marginals rigidly.
PerturbedPair perturb_pair(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double h,
                           PerturbationMode mode, std::uint64_t seed);

std::vector<StabilityRow> stability_run(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                        const CostSpec& C, PerturbationMode mode,
                                        const std::vector<double>& levels,
                                        std::uint64_t seed = 1);

}  // namespace smot
