#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "cdk/core.hpp"

namespace cdk {

struct SolverOptions {
  double eps_pd_base = 1e-8;    // scaled per matrix: eps_pd_base * (1 + |G|_inf)
  double eps_grad = 0.0;        // stationarity tolerance; 0 = auto 1e-8 * (1 + |f|)
  int max_iter = 400;
  double barrier_mu0 = 1.0;
  double barrier_shrink = 0.25;
  double backtrack_ratio = 0.5;
  double armijo_c1 = 1e-4;
  int multistart_count = 8;
  std::uint64_t seed = 0;
  bool sweep_sminus = true;     // multistart also walks the S_c^- branches

  void validate() const;
  double grad_tol(const QuadraticCanonicalProblem& p) const;
};

struct PerturbationSchedule {
  double delta0 = 0.1;
  double delta_shrink = 0.5;           // delta_{k+1} = max(shrink * delta_k, delta_min)
  double beta = 0.5;                   // constant beta_k in [0, 1]
  std::vector<double> beta_sequence;   // optional per-iteration override
  double omega = 0.0;                  // stopping tolerance; 0 = auto
  int max_outer = 80;
  double delta_min = 1e-10;

  void validate() const;
  double beta_at(int k) const;
};

/// Searches for S with G(S) strictly definite of the requested sign
/// (+1 for S_c^+, -1 for S_c^-).  Line search along heuristic directions,
/// starting with S = 0 and the all-ones combination of the measures.
std::optional<DualPoint> find_interior_point(const QuadraticCanonicalProblem& p,
                                             const SolverOptions& opts, int sign);

/// Concave maximization of Pi^d over S_c^+: damped Newton with a log-det
/// barrier that fades out as iterates settle in the interior.  Returns a
/// Boundary-converged report (min-eig -> 0, gradient not vanishing) when the
/// supremum sits on the cone boundary; that is the hard-case signal.
SolveReport maximize_dual_on_Splus(const QuadraticCanonicalProblem& p, const SolverOptions& opts);

/// Newton search for stationary points of Pi^d constrained to G < 0, seeded
/// from deterministic rescalings of `start`.  Results are deduplicated,
/// classified, and ordered by Pi^d value (descending, lexicographic smaller
/// dual first on ties).
std::vector<SolveReport> find_stationary_in_Sminus(const QuadraticCanonicalProblem& p,
                                                   const DualPoint& start,
                                                   const SolverOptions& opts);

/// Newton search for a stationary point of Pi^d without a cone constraint;
/// steps are damped away from the singular set.  Used for branches whose dual
/// points sit where G is indefinite.
std::optional<SolveReport> newton_dual_stationary(const QuadraticCanonicalProblem& p,
                                                  const DualPoint& start,
                                                  const SolverOptions& opts);

/// Quadratic-perturbation primal-dual algorithm:
///   1) maximize the perturbed dual with G_d = G + delta_k I, F_d = F + delta_k chi_k;
///   2) chi_k = chi_{k-1} + beta_k (recovered - chi_{k-1});
///   3) stop when |Pi(chi_k) - Pi(chi_{k-1})| <= omega.
/// For indicator-constrained problems the stopping rule uses the smooth
/// quadratic part of Pi, which the iterates approach as they turn feasible.
SolveReport perturbed_primal_dual(const QuadraticCanonicalProblem& p,
                                  const PerturbationSchedule& sched, const Vector& chi0,
                                  const SolverOptions& opts);

/// As above, invoking on_iterate(k, chi_k) after every outer update; rounding
/// consumers harvest candidates from the whole trajectory this way.
SolveReport perturbed_primal_dual(const QuadraticCanonicalProblem& p,
                                  const PerturbationSchedule& sched, const Vector& chi0,
                                  const SolverOptions& opts,
                                  const std::function<void(int, const Vector&)>& on_iterate);

/// Copy of p with f replaced by f + magnitude * direction.
QuadraticCanonicalProblem linear_perturbation(const QuadraticCanonicalProblem& p,
                                              const Vector& direction, double magnitude);

/// Newton polish of a primal stationary point (ShiftedQuadratic Phi only),
/// reported as the canonical pair (chi, dPhi(Lambda(chi))).  Returns nothing
/// when the iteration stalls away from stationarity.
std::optional<SolveReport> polish_primal_stationary(const QuadraticCanonicalProblem& p,
                                                    const Vector& chi0,
                                                    const SolverOptions& opts);

struct MultistartResult {
  SolveReport best;
  std::vector<SolveReport> candidates;  // every stationary point found, ranked
};

/// Interior maximization first; perturbed fallback on boundary/no-interior;
/// optional S_c^- sweep for the local branches.  Ranking is deterministic:
/// triality class, then Pi, then lexicographic dual.
MultistartResult multistart(const QuadraticCanonicalProblem& p, const SolverOptions& opts,
                            const Vector& chi0 = {});

}  // namespace cdk
