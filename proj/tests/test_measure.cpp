#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "smot/measure.hpp"

using namespace smot;
using testutil::Rng;

namespace {
DiscreteMeasure half(double a, double b) { return DiscreteMeasure({a, b}, {0.5, 0.5}); }

bool same_measure(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol = 1e-12) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a.atoms()[i] - b.atoms()[i]) > tol ||
        std::abs(a.weights()[i] - b.weights()[i]) > tol)
      return false;
  return true;
}
}  // namespace

TEST_CASE("construction sorts, merges, and drops zero weights") {
  DiscreteMeasure m({2.0, -1.0, 2.0 + 1e-13, 0.0}, {0.25, 0.25, 0.25, 0.0});
  REQUIRE(m.size() == 2);
  CHECK(m.atoms()[0] == -1.0);
  CHECK(m.atoms()[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.weights()[1] == doctest::Approx(0.5));
  CHECK(m.mass() == doctest::Approx(0.75));
  CHECK_THROWS_AS(DiscreteMeasure({0.0}, {-0.5}), DomainError);
}

TEST_CASE("quantile") {
  const DiscreteMeasure m = half(0.0, 2.0);
  CHECK(quantile(m, 0.3) == 0.0);
  CHECK(quantile(m, 0.7) == 2.0);
  CHECK(quantile(DiscreteMeasure::dirac(5.0), 0.99) == 5.0);
  CHECK_THROWS_AS(quantile(m, -0.1), DomainError);
  CHECK_THROWS_AS(quantile(m, 1.1), DomainError);
}

TEST_CASE("put potential values") {
  CHECK(put_value(DiscreteMeasure::dirac(0.0), 1.0) == doctest::Approx(1.0));
  CHECK(put_value(half(-1.0, 1.0), 0.0) == doctest::Approx(0.5));
  const DiscreteMeasure m({-3.0, -1.0, 0.0}, {0.25, 0.25, 0.5});
  CHECK(put_value(m, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("measure_from_put inverts put_potential") {
  CHECK(same_measure(measure_from_put(put_potential(DiscreteMeasure::dirac(0.0))),
                     DiscreteMeasure::dirac(0.0)));
  CHECK(same_measure(measure_from_put(put_potential(half(-1.0, 1.0))), half(-1.0, 1.0)));
  // f(x) = (x+1)^+  ->  unit atom at -1
  PiecewiseLinearConvex f({-1.0}, 0.0, {1.0}, 0.0);
  CHECK(same_measure(measure_from_put(f), DiscreteMeasure::dirac(-1.0)));
  // nonzero left slope is not a put potential
  PiecewiseLinearConvex bad({0.0}, -1.0, {1.0}, 0.0);
  CHECK_THROWS_AS(measure_from_put(bad), InvalidPotentialError);

  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    const DiscreteMeasure m = testutil::random_measure(rng);
    CHECK(same_measure(measure_from_put(put_potential(m)), m, 1e-10));
  }
}

TEST_CASE("wasserstein on worked pairs") {
  CHECK(wasserstein(half(0.0, 2.0), half(1.0, 3.0), 1.0) == doctest::Approx(1.0));
  CHECK(wasserstein(DiscreteMeasure::dirac(0.0), DiscreteMeasure::dirac(3.0), 2.0) ==
        doctest::Approx(3.0));
  CHECK(wasserstein(DiscreteMeasure::dirac(0.0), half(-1.0, 1.0), 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(wasserstein(DiscreteMeasure::dirac(0.0), DiscreteMeasure::dirac(0.0, 0.5), 1.0),
                  MassError);
}

TEST_CASE("wasserstein metric properties") {
  Rng rng(12);
  for (int k = 0; k < 100; ++k) {
    const DiscreteMeasure a = testutil::random_measure(rng);
    const DiscreteMeasure b = testutil::random_measure(rng);
    const DiscreteMeasure c = testutil::random_measure(rng);
    CHECK(wasserstein(a, b, 1.0) == doctest::Approx(wasserstein(b, a, 1.0)).epsilon(1e-9));
    CHECK(wasserstein(a, c, 1.0) <= wasserstein(a, b, 1.0) + wasserstein(b, c, 1.0) + 1e-9);
    CHECK(wasserstein(a, a, 1.0) == doctest::Approx(0.0));
    const double d = 0.7;
    CHECK(wasserstein(a, translate(a, d), 1.0) == doctest::Approx(d * a.mass()).epsilon(1e-9));
  }
}

TEST_CASE("order predicates") {
  const DiscreteMeasure d0 = DiscreteMeasure::dirac(0.0);
  CHECK(leq_cd(d0, DiscreteMeasure::dirac(-1.0)));
  CHECK_FALSE(leq_c(d0, DiscreteMeasure::dirac(-1.0)));
  CHECK_FALSE(leq_cd(d0, DiscreteMeasure::dirac(1.0)));
  CHECK(leq_c(d0, half(-1.0, 1.0)));
  CHECK_THROWS_AS(leq_cd(d0, DiscreteMeasure::dirac(0.0, 0.5)), MassError);
}

TEST_CASE("order predicates agree with the sampled-dual oracle") {
  Rng rng(13);
  for (int k = 0; k < 300; ++k) {
    DiscreteMeasure m1, m2;
    if (k % 2 == 0) {
      auto [mu, nu] = testutil::random_cd_pair(rng);
      m1 = mu;
      m2 = nu;
    } else {
      m1 = testutil::random_measure(rng);
      m2 = testutil::random_measure(rng);
      m2 = scale_mass(m2, m1.mass() / m2.mass());
    }
    CHECK(leq_cd(m1, m2) == testutil::leq_cd_sampled(rng, m1, m2));
  }
}

TEST_CASE("max_put_violation locates the gap") {
  auto [bp, gap] = max_put_violation(DiscreteMeasure::dirac(0.0), DiscreteMeasure::dirac(1.0));
  CHECK(gap == doctest::Approx(1.0));
  CHECK(bp == doctest::Approx(1.0));
  auto ok = max_put_violation(DiscreteMeasure::dirac(0.0), DiscreteMeasure::dirac(-1.0));
  CHECK(ok.second <= 0.0);
}

TEST_CASE("lattice operations on worked pairs") {
  const DiscreteMeasure d0 = DiscreteMeasure::dirac(0.0);
  const DiscreteMeasure dm1 = DiscreteMeasure::dirac(-1.0);
  CHECK(same_measure(sup_cd(d0, dm1), dm1));
  CHECK(same_measure(inf_cd(d0, dm1), d0));
  CHECK(same_measure(inf_cd(half(-1.0, 1.0), d0), d0, 1e-10));
  const DiscreteMeasure m = half(-0.5, 2.0);
  CHECK(same_measure(sup_cd(m, m), m, 1e-10));
}

TEST_CASE("lattice order and barycentre properties") {
  Rng rng(14);
  for (int k = 0; k < 200; ++k) {
    const DiscreteMeasure a = testutil::random_measure(rng);
    DiscreteMeasure b = testutil::random_measure(rng);
    b = scale_mass(b, a.mass() / b.mass());
    const DiscreteMeasure s = sup_cd(a, b);
    const DiscreteMeasure i = inf_cd(a, b);
    CHECK(leq_cd(a, s));
    CHECK(leq_cd(b, s));
    CHECK(leq_cd(i, a));
    CHECK(leq_cd(i, b));
    CHECK(s.barycentre() ==
          doctest::Approx(std::min(a.barycentre(), b.barycentre())).epsilon(1e-8));
    CHECK(i.barycentre() ==
          doctest::Approx(std::max(a.barycentre(), b.barycentre())).epsilon(1e-8));
  }
}

TEST_CASE("lattice convergence under translation") {
  Rng rng(15);
  const DiscreteMeasure m = testutil::random_measure(rng);
  DiscreteMeasure n = testutil::random_measure(rng);
  n = scale_mass(n, m.mass() / n.mass());
  const DiscreteMeasure target = sup_cd(m, n);
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 64; k *= 2) {
    const double d = wasserstein(sup_cd(translate(m, 1.0 / k), n), target, 1.0);
    CHECK(d <= prev + 1e-9);
    prev = d;
  }
  CHECK(prev <= wasserstein(translate(m, 1.0 / 64), m, 1.0) + 1e-6);
}

TEST_CASE("put-stability bound") {
  Rng rng(16);
  for (int k = 0; k < 500; ++k) {
    const DiscreteMeasure a = testutil::random_measure(rng);
    DiscreteMeasure b = testutil::random_measure(rng);
    b = scale_mass(b, a.mass() / b.mass());
    const double w = wasserstein(a, b, 1.0);
    for (double x : a.atoms()) CHECK(std::abs(put_value(a, x) - put_value(b, x)) <= w + 1e-9);
    for (double x : b.atoms()) CHECK(std::abs(put_value(a, x) - put_value(b, x)) <= w + 1e-9);
  }
}

TEST_CASE("transforms") {
  CHECK(same_measure(translate(DiscreteMeasure::dirac(0.0), -1.0), DiscreteMeasure::dirac(-1.0)));
  CHECK(same_measure(restrict(half(0.0, 2.0), {-std::numeric_limits<double>::infinity(), 1.0,
                                               false, true}),
                     DiscreteMeasure::dirac(0.0, 0.5)));
  CHECK(restrict(DiscreteMeasure::dirac(0.0), Interval::open(0.0, 1.0)).is_zero());
  CHECK_THROWS_AS(scale_mass(DiscreteMeasure::dirac(0.0), -1.0), DomainError);
}

TEST_CASE("add and subtract") {
  const DiscreteMeasure a = half(0.0, 1.0);
  const DiscreteMeasure b = DiscreteMeasure::dirac(0.0, 0.25);
  const DiscreteMeasure s = add(a, b);
  CHECK(s.weight_at(0.0) == doctest::Approx(0.75));
  const DiscreteMeasure d = subtract(s, b);
  CHECK(same_measure(d, a, 1e-12));
  CHECK(subtract(a, a).is_zero());
  CHECK_THROWS_AS(subtract(b, a), MassError);
}
