#include "smot/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "smot/linprog.hpp"

namespace smot {

FiniteCoupling::FiniteCoupling(std::vector<CouplingRow> rows) {
  std::sort(rows.begin(), rows.end(),
            [](const CouplingRow& a, const CouplingRow& b) { return a.x < b.x; });
  for (auto& row : rows) {
    if (row.w < 0) throw CouplingInconsistentError("negative row weight");
    if (row.w <= kMergeTol) continue;
    if (std::abs(row.kernel.mass() - 1.0) > order_tol())
      throw CouplingInconsistentError("kernel mass " + std::to_string(row.kernel.mass()) +
                                      " at x=" + std::to_string(row.x));
    DiscreteMeasure kernel = scale_mass(row.kernel, 1.0 / row.kernel.mass());
    if (!rows_.empty() && row.x - rows_.back().x <= kMergeTol) {
      CouplingRow& prev = rows_.back();
      prev.kernel = mix({{prev.w, prev.kernel}, {row.w, kernel}});
      prev.kernel = scale_mass(prev.kernel, 1.0 / prev.kernel.mass());
      prev.w += row.w;
    } else {
      rows_.push_back({row.x, row.w, std::move(kernel)});
    }
  }
}

FiniteCoupling FiniteCoupling::identity(const DiscreteMeasure& m) {
  std::vector<CouplingRow> rows;
  for (std::size_t i = 0; i < m.size(); ++i)
    rows.push_back({m.atoms()[i], m.weights()[i], DiscreteMeasure::dirac(m.atoms()[i])});
  return FiniteCoupling(std::move(rows));
}

FiniteCoupling FiniteCoupling::product(const DiscreteMeasure& m,
                                       const DiscreteMeasure& prob_kernel) {
  std::vector<CouplingRow> rows;
  for (std::size_t i = 0; i < m.size(); ++i)
    rows.push_back({m.atoms()[i], m.weights()[i], prob_kernel});
  return FiniteCoupling(std::move(rows));
}

double FiniteCoupling::mass() const {
  double s = 0.0;
  for (const auto& r : rows_) s += r.w;
  return s;
}

DiscreteMeasure FiniteCoupling::first_marginal() const {
  std::vector<double> atoms, weights;
  for (const auto& r : rows_) {
    atoms.push_back(r.x);
    weights.push_back(r.w);
  }
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

DiscreteMeasure FiniteCoupling::second_marginal() const {
  std::vector<std::pair<double, DiscreteMeasure>> parts;
  parts.reserve(rows_.size());
  for (const auto& r : rows_) parts.emplace_back(r.w, r.kernel);
  return mix(parts);
}

double FiniteCoupling::defect() const {
  double s = 0.0;
  for (const auto& r : rows_) s += r.w * std::max(0.0, r.kernel.barycentre() - r.x);
  return s;
}

double FiniteCoupling::reverse_defect() const {
  double s = 0.0;
  for (const auto& r : rows_) s += r.w * std::max(0.0, r.x - r.kernel.barycentre());
  return s;
}

DiscreteMeasure mix(const std::vector<std::pair<double, DiscreteMeasure>>& parts) {
  std::vector<double> atoms, weights;
  for (const auto& [w, k] : parts) {
    if (w == 0.0) continue;
    for (std::size_t i = 0; i < k.size(); ++i) {
      atoms.push_back(k.atoms()[i]);
      weights.push_back(w * k.weights()[i]);
    }
  }
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

// -- Adapted Wasserstein -------------------------------------------------------

AwPlan aw_distance_with_plan(const FiniteCoupling& a, const FiniteCoupling& b, double r) {
  if (r < 1) throw DomainError("aw_distance order must be >= 1");
  if (std::abs(a.mass() - b.mass()) > order_tol())
    throw MassError("aw_distance: first-marginal mass mismatch");
  const int n1 = static_cast<int>(a.size());
  const int n2 = static_cast<int>(b.size());
  if (n1 == 0 || n2 == 0) return {0.0, Eigen::MatrixXd::Zero(n1, n2)};

  Eigen::MatrixXd C(n1, n2);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      const auto& ri = a.rows()[static_cast<std::size_t>(i)];
      const auto& rj = b.rows()[static_cast<std::size_t>(j)];
      C(i, j) = std::pow(std::abs(ri.x - rj.x), r) +
                std::pow(wasserstein(ri.kernel, rj.kernel, r), r);
    }

  LinearProgram lp;
  lp.c = Eigen::VectorXd(n1 * n2);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) lp.c(i * n2 + j) = C(i, j);
  lp.A = Eigen::MatrixXd::Zero(n1 + n2, n1 * n2);
  lp.b = Eigen::VectorXd(n1 + n2);
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) lp.A(i, i * n2 + j) = 1.0;
    lp.b(i) = a.rows()[static_cast<std::size_t>(i)].w;
  }
  for (int j = 0; j < n2; ++j) {
    for (int i = 0; i < n1; ++i) lp.A(n1 + j, i * n2 + j) = 1.0;
    lp.b(n1 + j) = b.rows()[static_cast<std::size_t>(j)].w;
  }
  LpResult res = solve_lp(lp);
  if (res.status != LpStatus::optimal)
    throw SolverError("transport subproblem not optimal");
  AwPlan out;
  out.plan = Eigen::MatrixXd(n1, n2);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) out.plan(i, j) = res.x(i * n2 + j);
  out.value = std::pow(std::max(0.0, res.value), 1.0 / r);
  return out;
}

double aw_distance(const FiniteCoupling& a, const FiniteCoupling& b, double r) {
  return aw_distance_with_plan(a, b, r).value;
}

// -- Composition and algebra ----------------------------------------------------

FiniteCoupling compose(const FiniteCoupling& pi, const FiniteCoupling& M) {
  const DiscreteMeasure mid = pi.second_marginal();
  const DiscreteMeasure head = M.first_marginal();
  if (mid.size() != head.size())
    throw ChainingError("intermediate marginals have different supports");
  for (std::size_t i = 0; i < mid.size(); ++i)
    if (std::abs(mid.atoms()[i] - head.atoms()[i]) > order_tol() ||
        std::abs(mid.weights()[i] - head.weights()[i]) > order_tol())
      throw ChainingError("intermediate marginal mismatch at z=" +
                          std::to_string(mid.atoms()[i]));

  auto kernel_at = [&M](double z) -> const DiscreteMeasure& {
    const auto& rows = M.rows();
    auto it = std::lower_bound(rows.begin(), rows.end(), z - 1e-9,
                               [](const CouplingRow& r, double v) { return r.x < v; });
    if (it == rows.end() || std::abs(it->x - z) > 1e-9)
      throw ChainingError("no kernel for intermediate point z=" + std::to_string(z));
    return it->kernel;
  };

  std::vector<CouplingRow> rows;
  for (const auto& row : pi.rows()) {
    std::vector<std::pair<double, DiscreteMeasure>> parts;
    for (std::size_t i = 0; i < row.kernel.size(); ++i)
      parts.emplace_back(row.kernel.weights()[i], kernel_at(row.kernel.atoms()[i]));
    rows.push_back({row.x, row.w, mix(parts)});
  }
  FiniteCoupling out(std::move(rows));
  if (pi.is_supermartingale() && M.is_martingale() && !out.is_supermartingale())
    throw InternalConsistencyError(
        "martingale composition broke the supermartingale property");
  return out;
}

FiniteCoupling add(const FiniteCoupling& a, const FiniteCoupling& b) {
  std::vector<CouplingRow> rows(a.rows());
  rows.insert(rows.end(), b.rows().begin(), b.rows().end());
  return FiniteCoupling(std::move(rows));
}

FiniteCoupling restrict_first(const FiniteCoupling& pi, const Interval& I) {
  std::vector<CouplingRow> rows;
  for (const auto& r : pi.rows())
    if (I.contains(r.x)) rows.push_back(r);
  return FiniteCoupling(std::move(rows));
}

FiniteCoupling scale_coupling(const FiniteCoupling& pi, double s) {
  if (s < 0) throw DomainError("scale_coupling: negative factor");
  if (s == 0) return FiniteCoupling();
  std::vector<CouplingRow> rows(pi.rows());
  for (auto& r : rows) r.w *= s;
  return FiniteCoupling(std::move(rows));
}

FiniteCoupling comonotone_coupling(const DiscreteMeasure& m1, const DiscreteMeasure& m2) {
  if (std::abs(m1.mass() - m2.mass()) > order_tol())
    throw MassError("comonotone_coupling: mass mismatch");
  if (m1.is_zero() || m2.is_zero()) return FiniteCoupling();
  std::vector<CouplingRow> rows;
  std::size_t j = 0;
  double take2 = m2.weights()[0];
  for (std::size_t i = 0; i < m1.size(); ++i) {
    double rem = m1.weights()[i];
    std::vector<double> atoms, weights;
    while (rem > 1e-15 * m1.mass()) {
      const double t = std::min(rem, take2);
      if (t <= 0.0) {
        // rounding residue past the last m2 atom: dump it there
        atoms.push_back(m2.atoms()[j]);
        weights.push_back(rem / m1.weights()[i]);
        break;
      }
      atoms.push_back(m2.atoms()[j]);
      weights.push_back(t / m1.weights()[i]);
      rem -= t;
      take2 -= t;
      if (take2 <= 1e-15 * m2.mass() && j + 1 < m2.size()) take2 = m2.weights()[++j];
    }
    rows.push_back({m1.atoms()[i], m1.weights()[i],
                    DiscreteMeasure(std::move(atoms), std::move(weights))});
  }
  return FiniteCoupling(std::move(rows));
}

}  // namespace smot
