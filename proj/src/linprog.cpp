#include "smot/linprog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "smot/errors.hpp"

namespace smot {

namespace {

constexpr double kPivTol = 1e-10;

struct Tableau {
  Eigen::MatrixXd rows;  // m x (ncols+1), last column = rhs
  Eigen::RowVectorXd z;  // reduced costs, size ncols+1 (last = -objective)
  std::vector<int> basis;

  void pivot(int r, int col) {
    rows.row(r) /= rows(r, col);
    for (int i = 0; i < rows.rows(); ++i)
      if (i != r && rows(i, col) != 0.0) rows.row(i) -= rows(i, col) * rows.row(r);
    z -= z(col) * rows.row(r);
    basis[static_cast<std::size_t>(r)] = col;
  }
};

// Returns false on iteration blow-up.
bool run_simplex(Tableau& t, int n_enterable, std::int64_t max_iters) {
  const int rhs = static_cast<int>(t.rows.cols()) - 1;
  std::int64_t iters = 0;
  const std::int64_t bland_after = max_iters / 2;
  while (true) {
    if (++iters > max_iters) return false;
    const bool bland = iters > bland_after;
    int enter = -1;
    double best = -kPivTol;
    for (int j = 0; j < n_enterable; ++j) {
      if (t.z(j) < best) {
        enter = j;
        if (bland) break;
        best = t.z(j);
      }
    }
    if (enter < 0) return true;  // optimal
    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < t.rows.rows(); ++i) {
      const double a = t.rows(i, enter);
      if (a > kPivTol) {
        const double ratio = t.rows(i, rhs) / a;
        if (leave < 0 || ratio < best_ratio - 1e-15 ||
            (ratio < best_ratio + 1e-15 &&
             t.basis[static_cast<std::size_t>(i)] <
                 t.basis[static_cast<std::size_t>(leave)])) {
          leave = i;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) {
      t.basis[0] = -1 - enter;  // marker: unbounded along `enter`
      return true;
    }
    t.pivot(leave, enter);
  }
}

}  // namespace

LpResult solve_lp(const LinearProgram& lp) {
  const int m = static_cast<int>(lp.A.rows());
  const int n = static_cast<int>(lp.A.cols());
  if (lp.b.size() != m || lp.c.size() != n)
    throw DomainError("linear program dimensions inconsistent");
  int n_slack = 0;
  for (std::size_t i = 0; i < lp.row_is_ineq.size(); ++i)
    if (lp.row_is_ineq[i]) ++n_slack;

  const int ncols = n + n_slack + m;  // vars, slacks, artificials
  Tableau t;
  t.rows = Eigen::MatrixXd::Zero(m, ncols + 1);
  t.basis.assign(static_cast<std::size_t>(m), 0);
  int slack_at = n;
  for (int i = 0; i < m; ++i) {
    const bool ineq = i < static_cast<int>(lp.row_is_ineq.size()) && lp.row_is_ineq[i];
    double sign = 1.0;
    if (lp.b(i) < 0) sign = -1.0;
    t.rows.block(i, 0, 1, n) = sign * lp.A.row(i);
    t.rows(i, ncols) = sign * lp.b(i);
    if (ineq) t.rows(i, slack_at++) = sign;
    t.rows(i, n + n_slack + i) = 1.0;
    t.basis[static_cast<std::size_t>(i)] = n + n_slack + i;
  }

  // Phase 1: minimize the sum of artificials.
  t.z = Eigen::RowVectorXd::Zero(ncols + 1);
  for (int i = 0; i < m; ++i) t.z -= t.rows.row(i);
  for (int j = n + n_slack; j < ncols; ++j) t.z(j) = 0.0;
  const std::int64_t cap = 20000 + 200LL * (m + ncols);
  if (!run_simplex(t, n + n_slack, cap))
    throw SolverError("simplex iteration limit exceeded (phase 1)");
  if (-t.z(ncols) > 1e-7) return {LpStatus::infeasible, Eigen::VectorXd(), 0.0};

  // Drive leftover zero-level artificials out of the basis so they cannot
  // drift positive during phase 2. Pivot on the largest element of the row:
  // a near-zero pivot scales the row by its reciprocal and wrecks the other
  // basic values. Rows whose largest element is still tiny are numerically
  // redundant and stay put (their artificial is pinned at level ~0).
  for (int i = 0; i < m; ++i) {
    if (t.basis[static_cast<std::size_t>(i)] < n + n_slack) continue;
    int best_j = -1;
    double best_a = 1e-7;
    for (int j = 0; j < n + n_slack; ++j)
      if (std::abs(t.rows(i, j)) > best_a) {
        best_j = j;
        best_a = std::abs(t.rows(i, j));
      }
    if (best_j >= 0) t.pivot(i, best_j);
  }

  // Phase 2: real objective; artificials may linger in the basis at level 0
  // but can never re-enter.
  t.z = Eigen::RowVectorXd::Zero(ncols + 1);
  for (int j = 0; j < n; ++j) t.z(j) = lp.c(j);
  for (int i = 0; i < m; ++i) {
    const int bj = t.basis[static_cast<std::size_t>(i)];
    if (bj < n && lp.c(bj) != 0.0) t.z -= lp.c(bj) * t.rows.row(i);
  }
  if (!run_simplex(t, n + n_slack, cap))
    throw SolverError("simplex iteration limit exceeded (phase 2)");
  if (t.basis[0] < 0) return {LpStatus::unbounded, Eigen::VectorXd(), 0.0};

  LpResult res;
  res.status = LpStatus::optimal;
  res.x = Eigen::VectorXd::Zero(n);
  const int rhs = ncols;
  for (int i = 0; i < m; ++i) {
    const int bj = t.basis[static_cast<std::size_t>(i)];
    if (bj < n) res.x(bj) = std::max(0.0, t.rows(i, rhs));
  }
  res.value = lp.c.dot(res.x);
  return res;
}

std::vector<Eigen::VectorXd> enumerate_basic_feasible(const LinearProgram& lp) {
  const int m = static_cast<int>(lp.A.rows());
  const int n = static_cast<int>(lp.A.cols());
  int n_slack = 0;
  for (std::size_t i = 0; i < lp.row_is_ineq.size(); ++i)
    if (lp.row_is_ineq[i]) ++n_slack;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, n + n_slack);
  A.block(0, 0, m, n) = lp.A;
  int slack_at = n;
  for (int i = 0; i < m; ++i)
    if (i < static_cast<int>(lp.row_is_ineq.size()) && lp.row_is_ineq[i])
      A(i, slack_at++) = 1.0;
  const int N = n + n_slack;

  // equality systems from transport problems carry redundant rows, so bases
  // have rank(A) columns, not m
  Eigen::FullPivLU<Eigen::MatrixXd> rank_lu(A);
  rank_lu.setThreshold(1e-10);
  const int r = static_cast<int>(rank_lu.rank());

  std::vector<Eigen::VectorXd> out;
  if (r == 0 || r > N) {
    if (r == 0 && lp.b.lpNorm<Eigen::Infinity>() <= 1e-10)
      out.push_back(Eigen::VectorXd::Zero(n));
    return out;
  }
  std::vector<int> cols(static_cast<std::size_t>(r));
  // iterate all r-subsets of columns in lexicographic order
  for (int i = 0; i < r; ++i) cols[static_cast<std::size_t>(i)] = i;
  while (true) {
    Eigen::MatrixXd B(m, r);
    for (int i = 0; i < r; ++i) B.col(i) = A.col(cols[static_cast<std::size_t>(i)]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
    qr.setThreshold(1e-10);
    if (qr.rank() == r) {
      Eigen::VectorXd xb = qr.solve(lp.b);
      if ((B * xb - lp.b).lpNorm<Eigen::Infinity>() <= 1e-8 && (xb.array() >= -1e-9).all()) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < r; ++i)
          if (cols[static_cast<std::size_t>(i)] < n)
            x(cols[static_cast<std::size_t>(i)]) = std::max(0.0, xb(i));
        bool dup = false;
        for (const auto& y : out)
          if ((y - x).lpNorm<Eigen::Infinity>() <= 1e-8) {
            dup = true;
            break;
          }
        if (!dup) out.push_back(std::move(x));
      }
    }
    // next combination
    int k = r - 1;
    while (k >= 0 && cols[static_cast<std::size_t>(k)] == N - r + k) --k;
    if (k < 0) break;
    ++cols[static_cast<std::size_t>(k)];
    for (int j = k + 1; j < r; ++j)
      cols[static_cast<std::size_t>(j)] = cols[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

}  // namespace smot
