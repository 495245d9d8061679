#pragma once

#include <vector>

#include "smot/errors.hpp"
#include "smot/interval.hpp"

namespace smot {

/// Finitely supported positive measure on the real line. Atoms are kept
/// strictly increasing; atoms closer than kMergeTol are merged on
/// construction. Mass need not be 1; the empty list is the zero measure.
/// Immutable after construction.
class DiscreteMeasure {
public:
  DiscreteMeasure() = default;
  DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights);

  static DiscreteMeasure dirac(double x, double w = 1.0);

  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }
  bool is_zero() const { return atoms_.empty(); }

  double mass() const { return mass_; }
  double first_moment() const { return moment_; }
  double barycentre() const;

  /// F(x) = m((-inf, x]).
  double cdf(double x) const;
  /// Mass of the single atom at x (0 if none within kMergeTol).
  double weight_at(double x) const;

private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
  double mass_ = 0.0;
  double moment_ = 0.0;
};

/// Piecewise-linear convex function stored as breakpoints with positive slope
/// increments, the slope left of all breakpoints, and an anchor value at the
/// first breakpoint. With no breakpoints the function is affine.
class PiecewiseLinearConvex {
public:
  PiecewiseLinearConvex() = default;
  PiecewiseLinearConvex(std::vector<double> breakpoints, double left_slope,
                        std::vector<double> increments, double anchor_value);

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  double left_slope() const { return left_slope_; }
  const std::vector<double>& increments() const { return increments_; }
  double anchor_value() const { return anchor_value_; }

  double value(double x) const;
  /// Slope on the piece immediately right of x.
  double slope_right_of(double x) const;

private:
  std::vector<double> breakpoints_;
  double left_slope_ = 0.0;
  std::vector<double> increments_;
  double anchor_value_ = 0.0;
};

/// General piecewise-linear function (not necessarily convex): values at
/// breakpoints plus the two asymptotic slopes. Used for potential differences.
struct PiecewiseLinearFn {
  std::vector<double> breakpoints;
  std::vector<double> values;
  double left_slope = 0.0;
  double right_slope = 0.0;

  double value(double x) const;
};

// -- Quantiles, potentials, distances ---------------------------------------

/// Left-continuous quantile F^{-1}(u) = inf{x : F(x) >= u}, 0 < u <= mass.
double quantile(const DiscreteMeasure& m, double u);

/// Put potential P_m(x) = sum_i w_i (x - a_i)^+ evaluated directly.
double put_value(const DiscreteMeasure& m, double x);

PiecewiseLinearConvex put_potential(const DiscreteMeasure& m);

/// Inverse of put_potential: atoms at the slope-change points, weights equal
/// to the slope increments. Requires left slope ~ 0 and anchor value ~ 0.
DiscreteMeasure measure_from_put(const PiecewiseLinearConvex& f);

/// W_r on the common quantile partition; masses must agree within order_tol().
double wasserstein(const DiscreteMeasure& m1, const DiscreteMeasure& m2, double r = 1.0);

// -- Stochastic orders --------------------------------------------------------

/// Convex decreasing order: P_{m1} <= P_{m2} pointwise (checked at the union
/// of atoms, which is exact for piecewise-linear potentials).
bool leq_cd(const DiscreteMeasure& m1, const DiscreteMeasure& m2);
/// Convex order: leq_cd plus equal first moments.
bool leq_c(const DiscreteMeasure& m1, const DiscreteMeasure& m2);

/// Largest violation of P_{m1} <= P_{m2}: returns (breakpoint, gap); the gap
/// is <= 0 when the order holds.
std::pair<double, double> max_put_violation(const DiscreteMeasure& m1,
                                            const DiscreteMeasure& m2);

// -- Lattice operations -------------------------------------------------------

/// Measure whose put potential is max(P_a, P_b).
DiscreteMeasure sup_cd(const DiscreteMeasure& a, const DiscreteMeasure& b);
/// Measure whose put potential is the convex hull of min(P_a, P_b).
DiscreteMeasure inf_cd(const DiscreteMeasure& a, const DiscreteMeasure& b);
/// Same envelope construction as inf_cd; call sites that rely on the
/// convex-order (equal mean) property must check it there.
DiscreteMeasure inf_c(const DiscreteMeasure& a, const DiscreteMeasure& b);

// -- Elementary transforms ----------------------------------------------------

DiscreteMeasure translate(const DiscreteMeasure& m, double delta);
DiscreteMeasure scale_mass(const DiscreteMeasure& m, double s);
DiscreteMeasure restrict(const DiscreteMeasure& m, const Interval& I);

DiscreteMeasure add(const DiscreteMeasure& a, const DiscreteMeasure& b);
/// a - b where b <= a atom-wise; entries below -tol raise MassError, smaller
/// negatives are clamped to zero.
DiscreteMeasure subtract(const DiscreteMeasure& a, const DiscreteMeasure& b,
                         double tol = 1e-9);

}  // namespace smot
