#pragma once

// Shared generators and oracles for the test suites. Everything is seeded
// explicitly so failures reproduce.

#include <cmath>
#include <random>
#include <vector>

#include "smot/coupling.hpp"
#include "smot/measure.hpp"
#include "smot/solvers.hpp"

namespace testutil {

using smot::DiscreteMeasure;
using smot::FiniteCoupling;

using Rng = std::mt19937_64;

inline DiscreteMeasure random_measure(Rng& rng, int max_atoms = 8, double span = 4.0,
                                      double mass = 1.0) {
  std::uniform_int_distribution<int> count(1, max_atoms);
  std::uniform_real_distribution<double> pos(-span, span);
  std::uniform_real_distribution<double> wgt(0.1, 1.0);
  const int n = count(rng);
  std::vector<double> atoms(static_cast<std::size_t>(n)), weights(static_cast<std::size_t>(n));
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    atoms[static_cast<std::size_t>(i)] = pos(rng);
    weights[static_cast<std::size_t>(i)] = wgt(rng);
    total += weights[static_cast<std::size_t>(i)];
  }
  for (double& w : weights) w *= mass / total;
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

// mu <=_cd nu by construction: push nu down-and-spread via the lattice.
inline std::pair<DiscreteMeasure, DiscreteMeasure> random_cd_pair(Rng& rng, int max_atoms = 8,
                                                                  double span = 4.0) {
  const DiscreteMeasure nu = random_measure(rng, max_atoms, span);
  const DiscreteMeasure probe = random_measure(rng, max_atoms, span);
  return {smot::inf_cd(probe, nu), nu};
}

// mu <=_c nu: spread every mu atom into a mean-preserving two-point kernel.
inline std::pair<DiscreteMeasure, DiscreteMeasure> random_c_pair(Rng& rng, int max_atoms = 6,
                                                                 double span = 3.0) {
  const DiscreteMeasure mu = random_measure(rng, max_atoms, span);
  std::uniform_real_distribution<double> spread(0.0, 1.5);
  std::uniform_real_distribution<double> split(0.2, 0.8);
  std::vector<double> atoms, weights;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double x = mu.atoms()[i], w = mu.weights()[i];
    const double d = spread(rng), t = split(rng);
    if (d < 1e-3) {
      atoms.push_back(x);
      weights.push_back(w);
      continue;
    }
    // atoms x - d*t' and x + d*(1-t') with weights keeping the mean at x
    atoms.push_back(x - d * (1 - t));
    weights.push_back(w * t);
    atoms.push_back(x + d * t);
    weights.push_back(w * (1 - t));
  }
  return {mu, DiscreteMeasure(std::move(atoms), std::move(weights))};
}

// A random point of the supermartingale polytope (vertex for a random linear
// objective would need the solver; mixing feasible couplings is enough here).
inline FiniteCoupling random_supermartingale(Rng& rng, const DiscreteMeasure& mu,
                                             const DiscreteMeasure& nu) {
  FiniteCoupling base = smot::feasible_supermartingale(mu, nu);
  (void)rng;
  return base;
}

// Integral of a convex nonincreasing test function f(x) = a0 + sum_j a_j (t_j - x)^+
// against m. Used as the sampled-dual oracle for <=_cd.
struct ConvexDecreasingFn {
  double a0 = 0.0;
  std::vector<double> slopes;  // a_j >= 0
  std::vector<double> knots;   // t_j

  double integral(const DiscreteMeasure& m) const {
    double s = a0 * m.mass();
    for (std::size_t j = 0; j < slopes.size(); ++j)
      for (std::size_t i = 0; i < m.size(); ++i)
        s += slopes[j] * m.weights()[i] * std::max(0.0, knots[j] - m.atoms()[i]);
    return s;
  }
};

inline ConvexDecreasingFn random_convex_decreasing(Rng& rng, double span = 6.0) {
  std::uniform_int_distribution<int> count(1, 5);
  std::uniform_real_distribution<double> pos(-span, span);
  std::uniform_real_distribution<double> coef(0.0, 2.0);
  ConvexDecreasingFn f;
  f.a0 = coef(rng);
  const int n = count(rng);
  for (int j = 0; j < n; ++j) {
    f.slopes.push_back(coef(rng));
    f.knots.push_back(pos(rng));
  }
  return f;
}

// leq_cd decided purely through test-function integrals.
inline bool leq_cd_sampled(Rng& rng, const DiscreteMeasure& m1, const DiscreteMeasure& m2,
                           int n_fns = 200, double tol = 1e-6) {
  // the puts at all atoms are themselves the extreme test functions; random
  // fns add blunt coverage
  for (double t : m1.atoms())
    if (smot::put_value(m1, t) > smot::put_value(m2, t) + tol) return false;
  for (double t : m2.atoms())
    if (smot::put_value(m1, t) > smot::put_value(m2, t) + tol) return false;
  for (int k = 0; k < n_fns; ++k) {
    const ConvexDecreasingFn f = random_convex_decreasing(rng);
    if (f.integral(m1) > f.integral(m2) + tol) return false;
  }
  return true;
}

}  // namespace testutil
