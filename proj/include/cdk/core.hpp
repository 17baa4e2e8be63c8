#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdk/linalg.hpp"

namespace cdk {

/// One quadratic canonical measure xi_k(chi) = 1/2 chi^T H_k chi + b_k^T chi + c_k.
/// Affine parts carry the shifts that the problem families need (for instance
/// the double-well writes xi = 1/2|x|^2 - lambda with c = -lambda, and the
/// boolean relaxation x o (x - 1) uses b = -e_k).
struct CanonicalMeasure {
  SymMatrix H;
  Vector b;
  double c = 0.0;
};

enum class PhiKind {
  /// Phi(xi) = sum_k 1/2 a_k xi_k^2 with a_k > 0; conjugate s^2 / (2 a_k).
  ShiftedQuadratic,
  /// Phi(xi) = 0 if xi = 0, +inf otherwise; conjugate identically 0 on s != 0.
  ZeroIndicator,
};

struct CanonicalFunction {
  PhiKind kind = PhiKind::ShiftedQuadratic;
  Vector a;  // per-component weights, used by ShiftedQuadratic only

  static CanonicalFunction shifted_quadratic(Vector weights);
  static CanonicalFunction zero_indicator(std::size_t m);

  std::size_t components() const;

  double value(const Vector& xi, double indicator_tol = 0.0) const;
  double conjugate(const Vector& s) const;
  Vector duality_map(const Vector& xi) const;             // dPhi
  Vector conjugate_duality_map(const Vector& s) const;    // dPhi*
  /// Hessian of Phi* is diagonal for both kinds; returns its diagonal.
  Vector conjugate_hessian_diag(const Vector& s) const;
};

/// Pi(chi) = Phi(Lambda(chi)) + 1/2 chi^T A chi - f^T chi + energy_offset.
///
/// The offset carries constants split off during canonical rewriting (the
/// beam's completed square produces one); it shifts Pi and Pi^d identically
/// so every duality identity is unaffected.
struct QuadraticCanonicalProblem {
  std::size_t n = 0;
  SymMatrix A;
  Vector f;
  std::vector<CanonicalMeasure> measures;
  CanonicalFunction phi;
  double energy_offset = 0.0;
  std::string name;
  std::string provenance;

  std::size_t measure_count() const { return measures.size(); }
  void validate() const;
};

using DualPoint = Vector;  // one component per measure

/// G(S) = A + sum_k S_k H_k, F(S) = f - sum_k S_k b_k, const(S) = sum_k S_k c_k.
/// Xi(chi, S) = 1/2 chi^T G chi - Phi*(S) - chi^T F + const(S) + offset.
struct GOperator {
  SymMatrix G;
  Vector F;
  double constant = 0.0;
};

enum class TrialityClass {
  GlobalMin,          // S in S_c^+, canonical min-max branch
  LocalMax,           // S in S_c^-, double-max branch
  LocalMinCandidate,  // S in S_c^-, double-min branch, dim chi == dim S
  LocalMinWeak,       // S in S_c^-, double-min branch, dimensions differ
  Boundary,           // G(S) singular
  Unclassified,       // G(S) indefinite
};

const char* to_string(TrialityClass c);

struct TrialityResult {
  TrialityClass cls;
  double margin;  // definiteness margin of G(S)
};

enum class SolveStatus {
  Converged,
  BoundaryConverged,   // pushed to the cone boundary with non-vanishing gradient
  NoInteriorPoint,
  MaxIterations,
  LeftCone,
  NoStationaryFound,
  NotRun,
};

const char* to_string(SolveStatus s);

struct TraceEntry {
  int iteration = 0;
  double delta = 0.0;     // quadratic perturbation in effect (0 for plain solves)
  double value = 0.0;     // objective at this iterate (Pi^d, or Pi for outer loops)
  double gradient_norm = 0.0;
  double min_eig = 0.0;   // smallest eigenvalue of G at the iterate
};

struct SolveReport {
  Vector primal;
  DualPoint dual;
  double pi = 0.0;
  double pi_dual = 0.0;
  double xi_value = 0.0;
  double gap = 0.0;
  double residual_primal = 0.0;
  double residual_dual = 0.0;
  TrialityClass triality = TrialityClass::Unclassified;
  double margin = 0.0;
  SolveStatus status = SolveStatus::NotRun;
  bool boundary = false;                     // pseudo-inverse fallback used
  bool no_interior_stationary = false;       // hard-case flag
  bool sigma_zero_face = false;              // some |S_k| <= eps_sigma at reporting
  int iterations = 0;
  std::string route;
  std::vector<TraceEntry> trace;
};

// --- evaluation ----------------------------------------------------------

double eval_primal(const QuadraticCanonicalProblem& p, const Vector& chi,
                   double indicator_tol = 1e-8);
Vector eval_measures(const QuadraticCanonicalProblem& p, const Vector& chi);
/// Gradient of Pi at chi (ShiftedQuadratic only; ZeroIndicator has no smooth Pi).
Vector primal_gradient(const QuadraticCanonicalProblem& p, const Vector& chi);

/// Hessian of Pi at chi (ShiftedQuadratic only):
/// A + sum_k [ a_k xi_k H_k + a_k (H_k chi + b_k)(H_k chi + b_k)^T ].
SymMatrix primal_hessian(const QuadraticCanonicalProblem& p, const Vector& chi);

GOperator assemble_G(const QuadraticCanonicalProblem& p, const DualPoint& S);

double eval_total_complementary(const QuadraticCanonicalProblem& p, const Vector& chi,
                                const DualPoint& S);
/// grad_chi Xi(chi, S) = G(S) chi - F(S).
Vector total_complementary_grad_chi(const QuadraticCanonicalProblem& p, const Vector& chi,
                                    const DualPoint& S);

struct DualEval {
  double value = 0.0;
  bool boundary = false;  // G treated by pseudo-inverse
};

DualEval eval_dual(const QuadraticCanonicalProblem& p, const DualPoint& S,
                   double eps_pd_base = 1e-8);

struct PrimalRecovery {
  Vector chi;
  bool boundary = false;
};

/// chi(S) solving G(S) chi = F(S); pseudo-inverse fallback flags the report.
PrimalRecovery recover_primal(const QuadraticCanonicalProblem& p, const DualPoint& S,
                              double eps_pd_base = 1e-8);

/// grad Pi^d(S)_k = xi_k(chi(S)) - dPhi*(S)_k.
Vector dual_gradient(const QuadraticCanonicalProblem& p, const DualPoint& S);
/// hess Pi^d(S) = -J^T G^{-1} J - diag(dPhi*'), with J_k = H_k chi(S) + b_k.
SymMatrix dual_hessian(const QuadraticCanonicalProblem& p, const DualPoint& S);

/// Gradients of the measures at chi, as columns J_k = H_k chi + b_k.
std::vector<Vector> measure_gradients(const QuadraticCanonicalProblem& p, const Vector& chi);

TrialityResult classify_triality(const QuadraticCanonicalProblem& p, const DualPoint& S,
                                 double eps_pd_base = 1e-8);

SolveReport verify_solution(const QuadraticCanonicalProblem& p, const Vector& chi,
                            const DualPoint& S);

}  // namespace cdk
