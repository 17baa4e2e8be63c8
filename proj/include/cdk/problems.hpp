#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cdk/core.hpp"
#include "cdk/solvers.hpp"

namespace cdk::problems {

// --- double well ----------------------------------------------------------

/// Pi(x) = 1/2 alpha (1/2 |x|^2 - lambda)^2 - x^T f.
struct DoubleWellSpec {
  std::size_t n = 1;
  double alpha = 1.0;
  double lambda = 2.0;
  Vector f;
};

QuadraticCanonicalProblem build_double_well(const DoubleWellSpec& spec);

struct DoubleWellStationaryPoint {
  double sigma = 0.0;
  Vector x;
  double pi = 0.0;
  double pi_dual = 0.0;
  TrialityClass cls = TrialityClass::Unclassified;
};

struct DoubleWellSolution {
  std::vector<DoubleWellStationaryPoint> points;  // ordered sigma_1 >= sigma_2 >= ...
  bool symmetric_boundary_case = false;           // f = 0: minimizers on |x|^2 = 2 lambda
  double minimizer_radius = 0.0;                  // sqrt(2 lambda) in the symmetric case
};

/// All stationary points from the dual algebraic equation
/// 2 (alpha^{-1} s + lambda) s^2 = f^T f, classified per the triality theorem.
DoubleWellSolution solve_double_well_analytic(const DoubleWellSpec& spec);

// --- boolean quadratic program ---------------------------------------------

/// min 1/2 x^T Q x - f^T x over x in {0,1}^n.
struct BooleanQPSpec {
  SymMatrix Q;
  Vector f;
};

QuadraticCanonicalProblem build_boolean_qp(const BooleanQPSpec& spec);

struct BqpSecondDualResult {
  Vector sigma;
  Vector x;                 // recovered candidate
  double objective = 0.0;   // second-dual value at sigma
  double energy = 0.0;      // primal energy of the candidate
  bool oracle_checked = false;
  bool oracle_match = false;
};

/// Second dual: min -1/2 sigma^T Q^{-1} sigma - sum |f_i - sigma_i|, solved by
/// proximal-gradient steps with the closed-form prox of the concave absolute
/// terms, from deterministic multistarts.  Candidate recovery uses the sign
/// pattern x_i = (f_i - sigma_i > 0).
BqpSecondDualResult solve_bqp_second_dual(const BooleanQPSpec& spec, const SolverOptions& opts);

/// Dominance rule: when |f_i| > sum_j |Q_ij| for every i (and no f_i is 0),
/// the minimizer is the sign pattern x_i = (f_i > 0).
std::optional<Vector> bqp_big_input_rule(const BooleanQPSpec& spec);

struct BqpSolveResult {
  SolveReport report;      // best engine report (interior or perturbed route)
  Vector x;                // binary candidate (rounded when the iterate is fractional)
  double energy = 0.0;     // exact primal energy of x
  bool interior = false;   // interior dual stationary point found
  bool hard_case = false;  // NoInteriorStationaryPoint observed
};

/// Engine solve plus vertex rounding: interior maximization first, the
/// quadratic-perturbation route as fallback, then the iterate is snapped to
/// the nearest vertex and re-evaluated exactly.
BqpSolveResult solve_boolean_qp(const BooleanQPSpec& spec, const SolverOptions& opts);

struct BruteForceResult {
  Vector argmin;
  double value = 0.0;
};

enum class BinaryDomain { ZeroOne, PlusMinusOne };

/// Exhaustive minimization of 1/2 x^T Q x - f^T x over the binary domain.
/// Gray-code traversal, deterministic lexicographic tie-break, n <= 24.
BruteForceResult brute_force_binary(const SymMatrix& Q, const Vector& f, BinaryDomain domain);

// --- max cut ----------------------------------------------------------------

struct MaxCutSpec {
  SymMatrix weights;  // symmetric, nonnegative, zero diagonal

  void validate() const;
};

/// Equivalent +-1 minimization with measures x_k^2 - 1 and linear term
/// epsilon * 1^T x added for symmetry breaking.
QuadraticCanonicalProblem build_max_cut(const MaxCutSpec& spec, double epsilon);

double cut_value(const MaxCutSpec& spec, const std::vector<int>& signs);
std::vector<int> round_signs(const Vector& x);

struct MaxCutResult {
  std::vector<int> signs;
  double cut = 0.0;
  bool no_interior_stationary = false;
  SolveReport report;
};

MaxCutResult solve_max_cut(const MaxCutSpec& spec, double epsilon, const SolverOptions& opts);

/// Oracle: exhaustive max cut over 2^n sign vectors (n <= 24).
double max_cut_oracle(const MaxCutSpec& spec);

/// {0,1}-variable BQP equivalent to the +-1 cut minimization (x = 2u - 1);
/// returned constant makes the energies equal: E_pm(x) = E_01(u) + constant.
std::pair<BooleanQPSpec, double> bqp_from_max_cut(const MaxCutSpec& spec);

// --- distance geometry -------------------------------------------------------

struct DistanceGeometryEdge {
  std::size_t i = 0;  // node ids; sensors first, then anchors
  std::size_t j = 0;
  double weight = 1.0;
  double target = 1.0;  // squared-distance target d_ij
};

struct DistanceGeometrySpec {
  std::size_t dimension = 2;
  std::size_t sensors = 1;
  std::vector<Vector> anchors;
  std::vector<DistanceGeometryEdge> edges;
  bool gauge_fix = false;  // pin sensor 0 to the origin (and sensor 1 ordinate)
};

struct DistanceGeometryProblem {
  QuadraticCanonicalProblem problem;
  // free-coordinate layout: for sensor s and axis t, index into chi or -1 if fixed
  std::vector<std::vector<int>> coordinate_index;
  std::vector<Vector> fixed_values;

  std::vector<Vector> positions(const Vector& chi) const;
};

DistanceGeometryProblem build_distance_geometry(const DistanceGeometrySpec& spec);

// --- two-surface minimal distance -------------------------------------------

/// min 1/2 |x - y|^2  s.t.  g(x) = 1/2(|x|^2 - 1) = 0,
///                          h(y) = 1/2 (1/2 |y-c|^2 - 1)^2 - f^T (y-c) = 0.
struct TwoSurfaceSpec {
  Vector c = {1.0, 0.0};
  Vector f = {0.025515518153991442, 0.0};  // sqrt(6)/96 along x
  double perturbation = 0.0;               // added to f[1]; 1/k breaks the mirror symmetry
};

struct TwoSurfaceSolution {
  Vector x;
  Vector y;
  double lambda_g = 0.0;  // multiplier for g
  double mu = 0.0;        // multiplier for h (nonzero by construction)
  double sigma = 0.0;     // second-level dual for the quartic in h
  double objective = 0.0;
  double residual_g = 0.0;
  double residual_h = 0.0;
  double stationarity = 0.0;   // norm of the full stationarity system
  Definiteness chi_block;      // definiteness of the (x,y)-block Hessian of Xi
};

struct TwoSurfaceResult {
  std::vector<TwoSurfaceSolution> solutions;  // ascending objective
};

/// Damped Newton on the joint stationarity system of Xi(x, y, lambda, mu, sigma)
/// from deterministic seeds on both surface parameterizations.
TwoSurfaceResult solve_two_surface(const TwoSurfaceSpec& spec, const SolverOptions& opts);

/// Dense polar-grid oracle for the minimal feasible distance; x is eliminated
/// exactly by projecting y onto the unit circle.
double two_surface_grid_oracle(const TwoSurfaceSpec& spec, std::size_t samples = 20000);

// --- least-squares dynamics ---------------------------------------------------

/// chi' = F(t, chi) with quadratic right-hand side (logistic family
/// F(chi) = r chi (1 - chi)), discretized by the forward recursion
/// chi_k = chi_{k-1} + h F(t_{k-1}, chi_{k-1}) and fit in least squares.
struct DynamicsSpec {
  double rate = 2.5;       // logistic r
  double horizon = 1.0;    // T
  std::size_t steps = 10;  // n, so h = T / n
  double chi0 = 0.2;
  std::optional<double> chi_end;  // pin chi_n to an observed value
};

struct DynamicsProblem {
  QuadraticCanonicalProblem problem;
  std::vector<int> index_of_step;  // step k (1..n) -> unknown index, -1 if pinned
  Vector pinned_values;            // aligned with steps, NaN when free

  Vector trajectory(const Vector& chi) const;  // full (chi_0 .. chi_n)
};

DynamicsProblem build_dynamics_least_squares(const DynamicsSpec& spec);

/// Exact forward recursion under the same step rule the builder uses.
Vector dynamics_forward_trajectory(const DynamicsSpec& spec);

/// Perturbation-route solve from a deterministic fan of starts (the forward
/// trajectory, rescalings of it, constant levels); best final objective wins.
SolveReport solve_dynamics_least_squares(const DynamicsSpec& spec, const SolverOptions& opts);

/// Multistart local-descent oracle: Gauss-Newton polish from deterministic
/// starts around the forward trajectory; returns the best objective found.
double dynamics_descent_oracle(const DynamicsSpec& spec, int starts = 64,
                               std::uint64_t seed = 1234);

/// Dense 1-D grid oracle for the double-well global minimum.  The minimizer
/// is radial along f (or any radius when f = 0), so a line scan is exact up
/// to grid resolution; three golden-section refinements follow.
double double_well_grid_oracle(const DoubleWellSpec& spec, std::size_t samples = 200001);

/// Dense grid oracle over the free coordinates (at most 2, else OracleRefused).
double distance_geometry_grid_oracle(const DistanceGeometrySpec& spec,
                                     std::size_t samples_per_axis = 801);

}  // namespace cdk::problems
