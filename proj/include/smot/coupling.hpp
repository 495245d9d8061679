#pragma once

#include <Eigen/Dense>
#include <vector>

#include "smot/measure.hpp"

namespace smot {

struct CouplingRow {
  double x = 0.0;
  double w = 0.0;                // row mass
  DiscreteMeasure kernel;        // probability measure (mass 1)
};

/// Finitely supported coupling stored by disintegration: first-marginal atoms
/// with one probability kernel each. Rows are sorted by x; duplicate x values
/// are merged by weight-proportional kernel mixture. Sub-couplings (total
/// mass < 1) and the zero coupling are legal.
class FiniteCoupling {
public:
  FiniteCoupling() = default;
  explicit FiniteCoupling(std::vector<CouplingRow> rows);

  static FiniteCoupling identity(const DiscreteMeasure& m);
  static FiniteCoupling product(const DiscreteMeasure& m, const DiscreteMeasure& prob_kernel);

  const std::vector<CouplingRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool is_zero() const { return rows_.empty(); }
  double mass() const;

  DiscreteMeasure first_marginal() const;
  DiscreteMeasure second_marginal() const;

  /// Integrated positive part of (kernel barycentre - x).
  double defect() const;
  /// Same with the sign flipped (martingale diagnostics).
  double reverse_defect() const;
  bool is_supermartingale() const { return defect() <= order_tol(); }
  bool is_martingale() const { return defect() <= order_tol() && reverse_defect() <= order_tol(); }

private:
  std::vector<CouplingRow> rows_;
};

/// Mixture sum_i w_i * kernel_i of a weighted kernel family.
DiscreteMeasure mix(const std::vector<std::pair<double, DiscreteMeasure>>& parts);

double aw_distance(const FiniteCoupling& a, const FiniteCoupling& b, double r = 1.0);

struct AwPlan {
  double value = 0.0;
  Eigen::MatrixXd plan;  // rows of a x rows of b
};
AwPlan aw_distance_with_plan(const FiniteCoupling& a, const FiniteCoupling& b, double r = 1.0);

/// Chains pi with the kernel family M: the result moves x to z via pi, then z
/// to y via M. Requires second_marginal(pi) == first_marginal(M).
FiniteCoupling compose(const FiniteCoupling& pi, const FiniteCoupling& M);

FiniteCoupling add(const FiniteCoupling& a, const FiniteCoupling& b);
FiniteCoupling restrict_first(const FiniteCoupling& pi, const Interval& I);
FiniteCoupling scale_coupling(const FiniteCoupling& pi, double s);

/// Monotone (quantile) coupling of two equal-mass measures.
FiniteCoupling comonotone_coupling(const DiscreteMeasure& m1, const DiscreteMeasure& m2);

}  // namespace smot
