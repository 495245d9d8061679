#pragma once

#include <Eigen/Dense>
#include <vector>

namespace smot {

/// min c.z  s.t.  A z (= or <=) b,  z >= 0.  Rows with row_is_ineq[i] true are
/// "<=" rows; all others are equalities.
struct LinearProgram {
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<bool> row_is_ineq;  // empty means all-equality
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Eigen::VectorXd x;  // original variables only
  double value = 0.0;
};

/// Two-phase dense simplex. Deterministic: Dantzig pivoting with a Bland
/// fallback once the iteration count suggests cycling.
LpResult solve_lp(const LinearProgram& lp);

/// All basic feasible points of the polytope (slack variables stripped).
/// Exponential in size; intended for small oracle instances only.
std::vector<Eigen::VectorXd> enumerate_basic_feasible(const LinearProgram& lp);

}  // namespace smot
