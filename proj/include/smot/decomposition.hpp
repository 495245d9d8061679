#pragma once

#include <vector>

#include "smot/coupling.hpp"
#include "smot/measure.hpp"

namespace smot {

enum class ComponentKind { diagonal = -1, supermartingale = 0, martingale = 1 };

struct Component {
  Interval interval;        // open for martingale/supermartingale pieces
  ComponentKind kind = ComponentKind::diagonal;
  int index = -1;           // -1 diagonal, 0 supermartingale, 1.. martingale
  DiscreteMeasure mu_part;
  DiscreteMeasure nu_part;
};

/// Splitting of a convex-decreasing-ordered pair at the zeros of the
/// potential gap D = P_nu - P_mu: martingale components on the open intervals
/// where D > 0 left of x_star, one supermartingale component on (x_star, inf),
/// and a diagonal remainder where mu and nu agree.
struct IrreducibleDecomposition {
  double x_star = 0.0;  // +inf when D vanishes identically
  std::vector<Component> components;  // martingale pieces left to right, then
                                      // supermartingale, then diagonal
};

/// D = P_nu - P_mu as a piecewise-linear function (zero far left; constant
/// equal to the mean gap far right when masses agree).
PiecewiseLinearFn defect_potential(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// Boundary between the martingale and strict-supermartingale regimes: the
/// largest finite zero of D, +inf when D vanishes identically. When D has a
/// terminal zero ray, its left endpoint is returned.
double x_star(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

IrreducibleDecomposition irreducible_components(const DiscreteMeasure& mu,
                                                const DiscreteMeasure& nu);

/// Restricts a supermartingale coupling of the decomposed pair to the
/// components; verifies the per-piece marginals and kinds.
std::vector<FiniteCoupling> decompose_coupling(const FiniteCoupling& pi,
                                               const IrreducibleDecomposition& dec);

/// Transfers dec onto perturbed marginals via the quantile map of mu: each
/// piece takes the mu_k-quantile segment matching its mu-part's cumulative
/// range, with nu-parts mixed from pi_k's kernels over that segment.
struct ApproxComponent {
  ComponentKind kind = ComponentKind::diagonal;
  int index = -1;
  DiscreteMeasure mu_part;
  DiscreteMeasure nu_part;
};
std::vector<ApproxComponent> approx_decomposition(const DiscreteMeasure& mu,
                                                  const DiscreteMeasure& nu,
                                                  const FiniteCoupling& pi_k,
                                                  const DiscreteMeasure& mu_k,
                                                  const DiscreteMeasure& nu_k,
                                                  const IrreducibleDecomposition& dec);

}  // namespace smot
