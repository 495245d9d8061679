#pragma once

#include <string>
#include <vector>

#include "smot/coupling.hpp"
#include "smot/decomposition.hpp"
#include "smot/measure.hpp"

namespace smot {

/// Geometry chosen once per component and epsilon: truncation radius R,
/// contraction factor alpha, the mass window K = [a, b], its relaxations, and
/// the correction reservoir on the left of K.
struct PipelineParams {
  double eps = 0.0;
  double R = 0.0;
  double alpha = 0.0;
  double ell = 0.0, rho = 0.0;  // the irreducibility interval I = (ell, rho)
  double a = 0.0, b = 0.0;      // K = [a, b]
  double a_tilde = 0.0, b_tilde = 0.0;
  Interval L;         // compact landing zone of the contracted kernels
  Interval L_minus;   // reservoir left of K charged by the contracted target
  Interval L_tilde_minus;
  Interval K_tilde;   // open fattening of K
  Interval J;
  double delta = 0.0;  // mass floor of the reservoir
  double e = 0.0;      // gap between the reservoir cover and K_tilde
};

struct StageRecord {
  std::string stage;
  double aw_gap = 0.0;  // distance to the stage's reference coupling
  double defect = 0.0;
  double mass = 0.0;
};

struct PipelineTrace {
  std::vector<StageRecord> stages;
  double eps_used = 0.0;
  double aw_to_reference = 0.0;
};

// -- Individual stages ---------------------------------------------------------

/// Rows with |x| <= R get their kernel squeezed under the matching-mean
/// two-point measure on {-R, R}; rows outside become point masses.
FiniteCoupling truncate(const FiniteCoupling& pi, double R);

/// Pushes every kernel through y -> alpha*y + (1-alpha)*x.
FiniteCoupling contract(const FiniteCoupling& pi, double alpha);

PipelineParams choose_params(const FiniteCoupling& pi, const DiscreteMeasure& mu,
                             const DiscreteMeasure& nu, double eps);

/// Intermediate target nu_k /\_c (mu_k \/_cd translated nu_ra), squeezed
/// between mu_k (convex decreasing) and nu_k (convex order).
DiscreteMeasure build_target(const DiscreteMeasure& nu_k, const DiscreteMeasure& mu_k,
                             const DiscreteMeasure& nu_ra);

struct Localization {
  DiscreteMeasure mu_hat;
  FiniteCoupling pi_hat;  // concentrated on B x C
  double eps_k = 0.0;
  double eps_prime_k = 0.0;
};
/// Restricts pi_k to the part transported near A (per the AW-optimal plan
/// against the reference), then to kernels inside C; B is the allowed
/// fattening of A for the surviving rows.
Localization localize(const FiniteCoupling& pi_k, const FiniteCoupling& reference,
                      const Interval& A, const Interval& B, const Interval& C);

/// Mixes reservoir mass into every defective kernel so the row barycentre
/// drops back to x; rows without defect are untouched.
FiniteCoupling correct_barycentres(const FiniteCoupling& pi_hat, const DiscreteMeasure& nu_minus,
                                   double e);

/// Checks mu_rem <=_cd nu_rem and couples the remainders.
FiniteCoupling complete(const DiscreteMeasure& mu_rem, const DiscreteMeasure& nu_rem);

/// Reroutes the second marginal onto nu_k through a cost-minimal martingale
/// hop; the detour is bounded by twice the W1 gap of the marginals.
FiniteCoupling final_adjust(const FiniteCoupling& pi_bar, const DiscreteMeasure& nu_k);

/// Re-disintegrates pi along a new first marginal of equal mass using the
/// quantile correspondence of the two first marginals.
FiniteCoupling quantile_transfer(const FiniteCoupling& pi, const DiscreteMeasure& mu_new);

// -- Orchestration ---------------------------------------------------------------

struct ApproximationResult {
  FiniteCoupling coupling;
  PipelineTrace trace;
};

/// Given pi coupling (mu, nu) and perturbed marginals mu_k <=_cd nu_k, builds
/// an element of the supermartingale polytope of (mu_k, nu_k) close to pi in
/// AW1: decomposes into irreducible components, runs the
/// truncate/contract/target/localize/correct/complete/adjust chain per
/// component and epsilon in the schedule, and keeps the best glued result.
ApproximationResult approximate(const FiniteCoupling& pi, const DiscreteMeasure& mu_k,
                                const DiscreteMeasure& nu_k,
                                const std::vector<double>& eps_schedule = {});

}  // namespace smot
