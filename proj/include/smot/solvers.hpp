#pragma once

#include "smot/coupling.hpp"
#include "smot/linprog.hpp"
#include "smot/measure.hpp"

namespace smot {

/// Supermartingale coupling of (mu, nu), canonicalized by minimizing the
/// transport cost sum |x-y|. Throws OrderViolationError (with the worst put
/// breakpoint) when mu is not below nu in convex decreasing order.
FiniteCoupling feasible_supermartingale(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// Same with barycentre equality rows (martingale); requires convex order.
FiniteCoupling feasible_martingale(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// Cost-minimal martingale coupling of eta <=_c nu under sum |z-y|; the
/// returned cost is checked against the 2*W1(eta, nu) bound.
struct MartingaleCoupling {
  FiniteCoupling coupling;
  double cost = 0.0;
};
MartingaleCoupling quantitative_martingale(const DiscreteMeasure& eta, const DiscreteMeasure& nu);

/// Shared plumbing: the LP over the (super)martingale polytope of (mu, nu)
/// with an arbitrary pairwise objective c(i,j) laid out row-major.
LinearProgram coupling_polytope_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                   const Eigen::MatrixXd& cost, bool martingale);
FiniteCoupling coupling_from_vector(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                    const Eigen::VectorXd& z);

}  // namespace smot
