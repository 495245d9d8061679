#include "smot/solvers.hpp"

#include <cmath>

namespace smot {

LinearProgram coupling_polytope_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                   const Eigen::MatrixXd& cost, bool martingale) {
  const int n1 = static_cast<int>(mu.size());
  const int n2 = static_cast<int>(nu.size());
  LinearProgram lp;
  lp.c = Eigen::VectorXd(n1 * n2);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) lp.c(i * n2 + j) = cost(i, j);
  const int n_rows = n1 + n2 + n1;  // marginals + one barycentre row per x
  lp.A = Eigen::MatrixXd::Zero(n_rows, n1 * n2);
  lp.b = Eigen::VectorXd::Zero(n_rows);
  lp.row_is_ineq.assign(static_cast<std::size_t>(n_rows), false);
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) lp.A(i, i * n2 + j) = 1.0;
    lp.b(i) = mu.weights()[static_cast<std::size_t>(i)];
  }
  for (int j = 0; j < n2; ++j) {
    for (int i = 0; i < n1; ++i) lp.A(n1 + j, i * n2 + j) = 1.0;
    lp.b(n1 + j) = nu.weights()[static_cast<std::size_t>(j)];
  }
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j)
      lp.A(n1 + n2 + i, i * n2 + j) =
          nu.atoms()[static_cast<std::size_t>(j)] - mu.atoms()[static_cast<std::size_t>(i)];
    lp.b(n1 + n2 + i) = 0.0;
    lp.row_is_ineq[static_cast<std::size_t>(n1 + n2 + i)] = !martingale;
  }
  return lp;
}

FiniteCoupling coupling_from_vector(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                    const Eigen::VectorXd& z) {
  const int n1 = static_cast<int>(mu.size());
  const int n2 = static_cast<int>(nu.size());
  std::vector<CouplingRow> rows;
  for (int i = 0; i < n1; ++i) {
    std::vector<double> atoms, weights;
    double w = 0.0;
    for (int j = 0; j < n2; ++j) {
      const double v = z(i * n2 + j);
      if (v > 1e-13) {
        atoms.push_back(nu.atoms()[static_cast<std::size_t>(j)]);
        weights.push_back(v);
        w += v;
      }
    }
    if (w <= 1e-13) continue;
    for (double& x : weights) x /= w;
    rows.push_back({mu.atoms()[static_cast<std::size_t>(i)], w,
                    DiscreteMeasure(std::move(atoms), std::move(weights))});
  }
  return FiniteCoupling(std::move(rows));
}

namespace {

FiniteCoupling feasible_impl(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             bool martingale, double* cost_out = nullptr) {
  if (std::abs(mu.mass() - nu.mass()) > order_tol())
    throw MassError("feasibility: mass mismatch");
  if (mu.is_zero() && nu.is_zero()) return FiniteCoupling();
  const int n1 = static_cast<int>(mu.size());
  const int n2 = static_cast<int>(nu.size());
  Eigen::MatrixXd cost(n1, n2);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j)
      cost(i, j) = std::abs(mu.atoms()[static_cast<std::size_t>(i)] -
                            nu.atoms()[static_cast<std::size_t>(j)]);
  LpResult res = solve_lp(coupling_polytope_lp(mu, nu, cost, martingale));
  if (res.status != LpStatus::optimal) {
    auto [bp, gap] = max_put_violation(mu, nu);
    const double mean_gap = mu.first_moment() - nu.first_moment();
    std::string what = martingale ? "no martingale coupling exists"
                                  : "no supermartingale coupling exists";
    if (gap > 0)
      what += "; put potentials cross at x=" + std::to_string(bp) +
              " by " + std::to_string(gap);
    else if (martingale && std::abs(mean_gap) > order_tol())
      what += "; first moments differ by " + std::to_string(mean_gap);
    throw OrderViolationError(what, bp, std::max(gap, std::abs(mean_gap)));
  }
  if (cost_out) *cost_out = res.value;
  return coupling_from_vector(mu, nu, res.x);
}

}  // namespace

FiniteCoupling feasible_supermartingale(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  return feasible_impl(mu, nu, /*martingale=*/false);
}

FiniteCoupling feasible_martingale(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  return feasible_impl(mu, nu, /*martingale=*/true);
}

MartingaleCoupling quantitative_martingale(const DiscreteMeasure& eta, const DiscreteMeasure& nu) {
  MartingaleCoupling out;
  out.coupling = feasible_impl(eta, nu, /*martingale=*/true, &out.cost);
  if (!eta.is_zero()) {
    const double bound = 2.0 * wasserstein(eta, nu, 1.0);
    if (out.cost > bound + 1e-7)
      throw InternalConsistencyError("martingale transport cost " + std::to_string(out.cost) +
                                     " exceeds twice the W1 distance " + std::to_string(bound));
  }
  return out;
}

}  // namespace smot
