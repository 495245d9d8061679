#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "smot/linprog.hpp"
#include "smot/solvers.hpp"
#include "smot/wsot.hpp"

using namespace smot;
using testutil::Rng;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

DiscreteMeasure half(double a, double b) { return DiscreteMeasure({a, b}, {0.5, 0.5}); }

CostSpec abs_cost() {
  return CostSpec::pairwise_fn([](double x, double y) { return std::abs(x - y); });
}

CostSpec squared_cost() {
  return CostSpec::pairwise_fn([](double x, double y) { return (x - y) * (x - y); });
}

// brute-force optimum over all vertices of the supermartingale polytope
double vertex_optimum(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& C) {
  const std::size_t n1 = mu.size(), n2 = nu.size();
  LinearProgram lp;
  const int nv = static_cast<int>(n1 * n2);
  lp.A = Eigen::MatrixXd::Zero(static_cast<int>(n1 + n2 + n1), nv);
  lp.b = Eigen::VectorXd::Zero(static_cast<int>(n1 + n2 + n1));
  lp.c = Eigen::VectorXd::Zero(nv);
  lp.row_is_ineq.assign(n1 + n2 + n1, false);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      const int v = static_cast<int>(i * n2 + j);
      lp.A(static_cast<int>(i), v) = 1.0;
      lp.A(static_cast<int>(n1 + j), v) = 1.0;
      lp.A(static_cast<int>(n1 + n2 + i), v) = nu.atoms()[j] - mu.atoms()[i];
      lp.c(v) = C.gradient(mu.atoms()[i], nu.atoms()[j], DiscreteMeasure());
    }
    lp.b(static_cast<int>(i)) = mu.weights()[i];
    lp.row_is_ineq[n1 + n2 + i] = true;
  }
  for (std::size_t j = 0; j < n2; ++j) lp.b(static_cast<int>(n1 + j)) = nu.weights()[j];
  double best = kInf;
  for (const auto& x : enumerate_basic_feasible(lp)) best = std::min(best, lp.c.dot(x));
  return best;
}
}  // namespace

TEST_CASE("eval_cost worked values") {
  CHECK(eval_cost(abs_cost(), FiniteCoupling::product(DiscreteMeasure::dirac(0.0),
                                                      DiscreteMeasure::dirac(1.0))) ==
        doctest::Approx(1.0));
  CHECK(eval_cost(CostSpec::variance_penalty(1.0),
                  FiniteCoupling::product(DiscreteMeasure::dirac(0.0), half(-1.0, 1.0))) ==
        doctest::Approx(1.0));
  CHECK(eval_cost(CostSpec::barycentre_convex(1.0),
                  FiniteCoupling::product(DiscreteMeasure::dirac(0.0),
                                          DiscreteMeasure::dirac(-2.0))) ==
        doctest::Approx(4.0));
  // grid costs demand complete coverage of the support
  CostSpec grid = CostSpec::pairwise({0.0}, {0.0}, Eigen::MatrixXd::Zero(1, 1));
  CHECK_THROWS_AS(eval_cost(grid, FiniteCoupling::product(DiscreteMeasure::dirac(0.0),
                                                          DiscreteMeasure::dirac(1.0))),
                  CostDomainError);
}

TEST_CASE("solve_linear worked instance") {
  const DiscreteMeasure mu = half(0.0, 1.0);
  const DiscreteMeasure nu = half(-1.0, 1.0);
  const SolveResult res = solve_linear(mu, nu, squared_cost());
  CHECK(res.value == doctest::Approx(0.5));
  REQUIRE(res.coupling.size() == 2);
  CHECK(res.coupling.rows()[0].kernel.weight_at(-1.0) == doctest::Approx(1.0));
  CHECK(res.coupling.rows()[1].kernel.weight_at(1.0) == doctest::Approx(1.0));
  CHECK(res.coupling.is_supermartingale());

  // c(x,y) = y: value is the nu-mean regardless of the plan
  const SolveResult lin =
      solve_linear(mu, nu, CostSpec::pairwise_fn([](double, double y) { return y; }));
  CHECK(lin.value == doctest::Approx(nu.first_moment()));

  CHECK_THROWS_AS(solve_linear(DiscreteMeasure::dirac(0.0), DiscreteMeasure::dirac(1.0),
                               abs_cost()),
                  OrderViolationError);
}

TEST_CASE("solve_linear matches vertex enumeration on small instances") {
  Rng rng(61);
  for (int k = 0; k < 60; ++k) {
    auto [mu, nu] = testutil::random_cd_pair(rng, 3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Eigen::MatrixXd c(mu.size(), nu.size());
    for (int i = 0; i < c.rows(); ++i)
      for (int j = 0; j < c.cols(); ++j) c(i, j) = U(rng);
    const CostSpec C = CostSpec::pairwise(mu.atoms(), nu.atoms(), c);
    const SolveResult res = solve_linear(mu, nu, C);
    CHECK(res.value == doctest::Approx(vertex_optimum(mu, nu, C)).epsilon(1e-7));
    CHECK(res.coupling.is_supermartingale());
    CHECK(wasserstein(res.coupling.first_marginal(), mu, 1.0) <= 1e-9);
    CHECK(wasserstein(res.coupling.second_marginal(), nu, 1.0) <= 1e-9);
    // any feasible coupling is an upper bound
    CHECK(eval_cost(C, feasible_supermartingale(mu, nu)) >= res.value - 1e-7);
  }
}

TEST_CASE("solve_convex agrees with solve_linear on linear costs") {
  Rng rng(62);
  for (int k = 0; k < 20; ++k) {
    auto [mu, nu] = testutil::random_cd_pair(rng, 3);
    const SolveResult lin = solve_linear(mu, nu, abs_cost());
    const SolveResult fw = solve_convex(mu, nu, abs_cost());
    CHECK(fw.value == doctest::Approx(lin.value).epsilon(1e-7));
    CHECK(fw.gap <= 1e-7);
  }
}

TEST_CASE("solve_convex on the forced variance instance") {
  // only one feasible coupling exists, with kernel variance 1
  const SolveResult res =
      solve_convex(DiscreteMeasure::dirac(0.0), half(-1.0, 1.0), CostSpec::variance_penalty(1.0));
  CHECK(res.value == doctest::Approx(1.0).epsilon(1e-7));
  REQUIRE(res.coupling.size() == 1);
  CHECK(res.coupling.rows()[0].kernel.weight_at(1.0) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("solve_convex barycentre cost matches the one-parameter scan") {
  // family: x=0 sends mass a to +1 (a in [1/4, 1/2]); x=1 takes the rest.
  // cost = phi(bary(p_0))/2 + phi(bary(p_1))/2 with phi(b) = b^2
  const DiscreteMeasure mu = half(0.0, 1.0);
  const DiscreteMeasure nu = half(-1.0, 1.0);
  const CostSpec C = CostSpec::barycentre_convex(1.0);
  double best = kInf;
  for (double a = 0.25; a <= 0.5 + 1e-12; a += 1e-4) {
    const double b0 = (a * 1.0 + (0.5 - a) * (-1.0)) / 0.5;         // bary at x=0
    const double b1 = ((0.5 - a) * 1.0 + (a - 0.25) * 2 * (-1.0));  // mass balance at x=1
    // row x=1 holds mass 1/2: nu mass at +1 left is 1/2 - a, at -1 is a - 1/4... enumerate
    const double w1p = 0.5 - a, w1m = 0.5 - w1p;
    const double bary1 = (w1p * 1.0 + w1m * (-1.0)) / 0.5;
    if (bary1 > 1.0 + 1e-12) continue;  // infeasible: bary must be <= x = 1
    (void)b1;
    best = std::min(best, 0.5 * b0 * b0 + 0.5 * bary1 * bary1);
  }
  const SolveResult res = solve_convex(mu, nu, C);
  CHECK(res.value == doctest::Approx(best).epsilon(1e-4));
  CHECK(res.value - res.gap <= best + 1e-7);
}

TEST_CASE("solve_convex uniqueness under strict convexity") {
  Rng rng(63);
  for (int k = 0; k < 10; ++k) {
    auto [mu, nu] = testutil::random_cd_pair(rng, 3);
    const CostSpec C = CostSpec::combination(
        {1.0, 0.05}, {CostSpec::variance_penalty(1.0), CostSpec::barycentre_convex(1.0)});
    const SolveResult a = solve_convex(mu, nu, C);
    const SolveResult b = solve_convex(mu, nu, C);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-6));
    CHECK(aw_distance(a.coupling, b.coupling, 1.0) <= 1e-5);
  }
}

TEST_CASE("martingale_regions worked values") {
  const DiscreteMeasure mu = half(-2.0, 1.0);
  const DiscreteMeasure nu = DiscreteMeasure({-3.0, -1.0, 0.0}, {0.25, 0.25, 0.5});
  const IrreducibleDecomposition dec = irreducible_components(mu, nu);
  const FiniteCoupling pi = feasible_supermartingale(mu, nu);
  const MartingaleRegions reg = martingale_regions(pi, dec);
  REQUIRE(reg.M1.size() == 1);
  CHECK(reg.M1[0].lo == doctest::Approx(-3.0));
  CHECK(reg.M1[0].hi == doctest::Approx(-1.0));
  REQUIRE(reg.M0.size() == 1);
  CHECK(reg.M0[0].lo == doctest::Approx(0.0));
  CHECK(reg.M0[0].hi == kInf);

  // pure martingale pair: M0 empty
  const IrreducibleDecomposition mdec =
      irreducible_components(DiscreteMeasure::dirac(0.0), half(-1.0, 1.0));
  const MartingaleRegions mreg = martingale_regions(
      FiniteCoupling::product(DiscreteMeasure::dirac(0.0), half(-1.0, 1.0)), mdec);
  CHECK(mreg.M0.empty());
  REQUIRE(mreg.M1.size() == 1);

  // strictly supermartingale pair: M1 empty, M0 = (-1, inf)
  const IrreducibleDecomposition sdec =
      irreducible_components(DiscreteMeasure::dirac(0.0), DiscreteMeasure::dirac(-1.0));
  const MartingaleRegions sreg = martingale_regions(
      FiniteCoupling::product(DiscreteMeasure::dirac(0.0), DiscreteMeasure::dirac(-1.0)), sdec);
  CHECK(sreg.M1.empty());
  REQUIRE(sreg.M0.size() == 1);
  CHECK(sreg.M0[0].lo == doctest::Approx(-1.0));
}

TEST_CASE("check_monotone on the worked linear instance") {
  const DiscreteMeasure mu = half(0.0, 1.0);
  const DiscreteMeasure nu = half(-1.0, 1.0);
  const IrreducibleDecomposition dec = irreducible_components(mu, nu);
  const CostSpec C = squared_cost();

  // the optimal coupling (a = 1/2): monotone
  const FiniteCoupling opt = FiniteCoupling(
      {{0.0, 0.5, DiscreteMeasure::dirac(-1.0)}, {1.0, 0.5, DiscreteMeasure::dirac(1.0)}});
  CHECK(check_monotone(opt, C, dec).is_monotone);

  // the suboptimal a = 1/4 coupling: an improving competitor exists
  const FiniteCoupling sub = FiniteCoupling({{0.0, 0.5, half(-1.0, 1.0)},
                                             {1.0, 0.5, half(-1.0, 1.0)}});
  const MonotonicityReport rep = check_monotone(sub, C, dec);
  CHECK_FALSE(rep.is_monotone);
  CHECK(rep.improvement > 1e-7);
  REQUIRE(rep.witness_rows.size() == rep.witness_kernels.size());
  // replay: the witness strictly improves the cost over the touched rows
  double before = 0.0, after = 0.0;
  for (std::size_t t = 0; t < rep.witness_rows.size(); ++t) {
    const auto& row = sub.rows()[rep.witness_rows[t]];
    before += row.w * C.kernel_cost(row.x, row.kernel);
    after += row.w * C.kernel_cost(row.x, rep.witness_kernels[t]);
  }
  CHECK(before - after > 1e-7);

  // single forced row
  const IrreducibleDecomposition sdec =
      irreducible_components(DiscreteMeasure::dirac(0.0), DiscreteMeasure::dirac(-1.0));
  CHECK(check_monotone(FiniteCoupling::product(DiscreteMeasure::dirac(0.0),
                                               DiscreteMeasure::dirac(-1.0)),
                       C, sdec)
            .is_monotone);
}

TEST_CASE("check_finitely_optimal matches optimality on random instances") {
  Rng rng(64);
  int found_false = 0;
  for (int k = 0; k < 20; ++k) {
    auto [mu, nu] = testutil::random_cd_pair(rng, 3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Eigen::MatrixXd c(mu.size(), nu.size());
    for (int i = 0; i < c.rows(); ++i)
      for (int j = 0; j < c.cols(); ++j) c(i, j) = U(rng);
    const CostSpec C = CostSpec::pairwise(mu.atoms(), nu.atoms(), c);
    const IrreducibleDecomposition dec = irreducible_components(mu, nu);

    // necessity: the solver's optimum passes the checker
    const SolveResult res = solve_linear(mu, nu, C);
    CHECK(check_finitely_optimal(res.coupling, C, dec).is_monotone);

    // a feasible coupling that costs strictly more must fail it
    const FiniteCoupling feas = feasible_supermartingale(mu, nu);
    if (eval_cost(C, feas) > res.value + 1e-6) {
      const MonotonicityReport rep = check_finitely_optimal(feas, C, dec);
      CHECK_FALSE(rep.is_monotone);
      CHECK(rep.improvement > 1e-7);
      ++found_false;
    }
  }
  CHECK(found_false > 0);

  // identity coupling on mu = nu is always finitely optimal
  const DiscreteMeasure m = half(0.0, 1.0);
  const IrreducibleDecomposition ddec = irreducible_components(m, m);
  CHECK(check_finitely_optimal(FiniteCoupling::identity(m), abs_cost(), ddec).is_monotone);
}

TEST_CASE("stability_run trends") {
  const DiscreteMeasure mu = half(0.0, 1.0);
  const DiscreteMeasure nu = half(-1.0, 1.0);
  const CostSpec C = abs_cost();

  // h = 0 reproduces the base value exactly
  const std::vector<StabilityRow> zero =
      stability_run(mu, nu, C, PerturbationMode::mollify, {0.0});
  REQUIRE(zero.size() == 1);
  CHECK(zero[0].value_gap == doctest::Approx(0.0));
  CHECK(zero[0].marginal_gap == doctest::Approx(0.0));

  // rigid translation with |x - y|: the value is exactly invariant
  for (const StabilityRow& row :
       stability_run(mu, nu, C, PerturbationMode::translate, {0.2, 0.1, 0.05})) {
    CHECK(row.value_gap <= 1e-9);
  }

  // shrinking mollification: gaps bounded by the marginal movement (Lip = 1
  // in each marginal) and nonincreasing up to slack
  const std::vector<StabilityRow> rows =
      stability_run(mu, nu, C, PerturbationMode::mollify, {0.2, 0.1, 0.05, 0.025});
  REQUIRE(rows.size() == 4);
  double prev = kInf;
  for (const StabilityRow& row : rows) {
    CHECK(row.value_gap <= row.marginal_gap + 1e-7);
    CHECK(row.value_gap <= 1.05 * prev + 1e-9);
    prev = row.value_gap;
  }
}

TEST_CASE("perturb_pair preserves the order") {
  Rng rng(65);
  for (int k = 0; k < 30; ++k) {
    auto [mu, nu] = testutil::random_cd_pair(rng, 5);
    for (double h : {0.2, 0.05}) {
      const PerturbedPair p = perturb_pair(mu, nu, h, PerturbationMode::mollify, 7);
      CHECK(leq_cd(p.mu, p.nu));
      CHECK(wasserstein(p.mu, mu, 1.0) + wasserstein(p.nu, nu, 1.0) <= 4 * h + 1e-9);
      // determinism
      const PerturbedPair q = perturb_pair(mu, nu, h, PerturbationMode::mollify, 7);
      CHECK(wasserstein(p.mu, q.mu, 1.0) == doctest::Approx(0.0));
      CHECK(wasserstein(p.nu, q.nu, 1.0) == doctest::Approx(0.0));
    }
  }
}
