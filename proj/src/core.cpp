#include "cdk/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cdk {

CanonicalFunction CanonicalFunction::shifted_quadratic(Vector weights) {
  for (double w : weights)
    if (!(w > 0.0)) throw InvalidInput("CanonicalFunction: weights must be positive");
  CanonicalFunction f;
  f.kind = PhiKind::ShiftedQuadratic;
  f.a = std::move(weights);
  return f;
}

CanonicalFunction CanonicalFunction::zero_indicator(std::size_t m) {
  CanonicalFunction f;
  f.kind = PhiKind::ZeroIndicator;
  f.a.assign(m, 0.0);
  return f;
}

std::size_t CanonicalFunction::components() const { return a.size(); }

double CanonicalFunction::value(const Vector& xi, double indicator_tol) const {
  if (xi.size() != a.size()) throw DimensionMismatch("Phi: component mismatch");
  if (kind == PhiKind::ShiftedQuadratic) {
    double s = 0.0;
    for (std::size_t k = 0; k < xi.size(); ++k) s += 0.5 * a[k] * xi[k] * xi[k];
    return s;
  }
  for (double x : xi)
    if (std::abs(x) > indicator_tol) return std::numeric_limits<double>::infinity();
  return 0.0;
}

double CanonicalFunction::conjugate(const Vector& s) const {
  if (s.size() != a.size()) throw DimensionMismatch("Phi*: component mismatch");
  if (kind == PhiKind::ZeroIndicator) return 0.0;
  double v = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) v += s[k] * s[k] / (2.0 * a[k]);
  return v;
}

Vector CanonicalFunction::duality_map(const Vector& xi) const {
  if (xi.size() != a.size()) throw DimensionMismatch("dPhi: component mismatch");
  if (kind == PhiKind::ZeroIndicator)
    throw DomainError("dPhi: indicator function has no single-valued duality map");
  Vector s(xi.size());
  for (std::size_t k = 0; k < xi.size(); ++k) s[k] = a[k] * xi[k];
  return s;
}

Vector CanonicalFunction::conjugate_duality_map(const Vector& s) const {
  if (s.size() != a.size()) throw DimensionMismatch("dPhi*: component mismatch");
  Vector xi(s.size(), 0.0);
  if (kind == PhiKind::ShiftedQuadratic)
    for (std::size_t k = 0; k < s.size(); ++k) xi[k] = s[k] / a[k];
  return xi;
}

Vector CanonicalFunction::conjugate_hessian_diag(const Vector& s) const {
  if (s.size() != a.size()) throw DimensionMismatch("d2Phi*: component mismatch");
  Vector d(s.size(), 0.0);
  if (kind == PhiKind::ShiftedQuadratic)
    for (std::size_t k = 0; k < s.size(); ++k) d[k] = 1.0 / a[k];
  return d;
}

void QuadraticCanonicalProblem::validate() const {
  if (n == 0) throw InvalidInput("problem: n must be >= 1");
  if (A.size() != n) throw DimensionMismatch("problem: A dimension mismatch");
  if (f.size() != n) throw DimensionMismatch("problem: f dimension mismatch");
  if (phi.components() != measures.size())
    throw DimensionMismatch("problem: Phi component count must match measure count");
  for (const auto& m : measures) {
    if (m.H.size() != n || m.b.size() != n)
      throw DimensionMismatch("problem: measure dimension mismatch");
  }
}

const char* to_string(TrialityClass c) {
  switch (c) {
    case TrialityClass::GlobalMin: return "GlobalMin";
    case TrialityClass::LocalMax: return "LocalMax";
    case TrialityClass::LocalMinCandidate: return "LocalMinCandidate";
    case TrialityClass::LocalMinWeak: return "LocalMinWeak";
    case TrialityClass::Boundary: return "Boundary";
    case TrialityClass::Unclassified: return "Unclassified";
  }
  return "?";
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::BoundaryConverged: return "BoundaryConverged";
    case SolveStatus::NoInteriorPoint: return "NoInteriorPoint";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::LeftCone: return "LeftCone";
    case SolveStatus::NoStationaryFound: return "NoStationaryFound";
    case SolveStatus::NotRun: return "NotRun";
  }
  return "?";
}

Vector eval_measures(const QuadraticCanonicalProblem& p, const Vector& chi) {
  if (chi.size() != p.n) throw DimensionMismatch("eval_measures: chi dimension mismatch");
  Vector xi(p.measures.size());
  for (std::size_t k = 0; k < p.measures.size(); ++k) {
    const auto& m = p.measures[k];
    xi[k] = 0.5 * m.H.quad_form(chi) + dot(m.b, chi) + m.c;
  }
  return xi;
}

double eval_primal(const QuadraticCanonicalProblem& p, const Vector& chi, double indicator_tol) {
  if (chi.size() != p.n) throw DimensionMismatch("eval_primal: chi dimension mismatch");
  const Vector xi = eval_measures(p, chi);
  const double quad = 0.5 * p.A.quad_form(chi) - dot(p.f, chi);
  return p.phi.value(xi, indicator_tol) + quad + p.energy_offset;
}

Vector primal_gradient(const QuadraticCanonicalProblem& p, const Vector& chi) {
  if (p.phi.kind != PhiKind::ShiftedQuadratic)
    throw DomainError("primal_gradient: Pi is not differentiable for indicator Phi");
  const Vector s = p.phi.duality_map(eval_measures(p, chi));
  Vector g = p.A.matvec(chi);
  for (std::size_t i = 0; i < p.n; ++i) g[i] -= p.f[i];
  for (std::size_t k = 0; k < p.measures.size(); ++k) {
    const auto& m = p.measures[k];
    Vector mk = m.H.matvec(chi);
    for (std::size_t i = 0; i < p.n; ++i) g[i] += s[k] * (mk[i] + m.b[i]);
  }
  return g;
}

SymMatrix primal_hessian(const QuadraticCanonicalProblem& p, const Vector& chi) {
  if (p.phi.kind != PhiKind::ShiftedQuadratic)
    throw DomainError("primal_hessian: Pi is not twice differentiable for indicator Phi");
  const Vector s = p.phi.duality_map(eval_measures(p, chi));
  SymMatrix H = p.A;
  for (std::size_t k = 0; k < p.measures.size(); ++k) {
    const auto& m = p.measures[k];
    H.add_scaled(m.H, s[k]);
    Vector g = m.H.matvec(chi);
    for (std::size_t i = 0; i < p.n; ++i) g[i] += m.b[i];
    for (std::size_t i = 0; i < p.n; ++i)
      for (std::size_t j = i; j < p.n; ++j) H.add(i, j, p.phi.a[k] * g[i] * g[j]);
  }
  return H;
}

GOperator assemble_G(const QuadraticCanonicalProblem& p, const DualPoint& S) {
  if (S.size() != p.measures.size()) throw DimensionMismatch("assemble_G: dual dimension mismatch");
  GOperator op;
  op.G = p.A;
  op.F = p.f;
  op.constant = 0.0;
  for (std::size_t k = 0; k < S.size(); ++k) {
    const auto& m = p.measures[k];
    op.G.add_scaled(m.H, S[k]);
    for (std::size_t i = 0; i < p.n; ++i) op.F[i] -= S[k] * m.b[i];
    op.constant += S[k] * m.c;
  }
  return op;
}

double eval_total_complementary(const QuadraticCanonicalProblem& p, const Vector& chi,
                                const DualPoint& S) {
  if (chi.size() != p.n) throw DimensionMismatch("Xi: chi dimension mismatch");
  if (p.phi.kind == PhiKind::ZeroIndicator)
    for (double s : S)
      if (s == 0.0) throw DomainError("Xi: S outside conjugate domain (component exactly 0)");
  const GOperator op = assemble_G(p, S);
  return 0.5 * op.G.quad_form(chi) - p.phi.conjugate(S) - dot(chi, op.F) + op.constant +
         p.energy_offset;
}

Vector total_complementary_grad_chi(const QuadraticCanonicalProblem& p, const Vector& chi,
                                    const DualPoint& S) {
  const GOperator op = assemble_G(p, S);
  Vector g = op.G.matvec(chi);
  for (std::size_t i = 0; i < p.n; ++i) g[i] -= op.F[i];
  return g;
}

namespace {

struct GSolve {
  Vector chi;
  bool boundary = false;
};

GSolve solve_G(const GOperator& op, double eps_pd_base) {
  // Three tiers: strictly positive definite (Cholesky, no flag), numerically
  // positive definite but inside the eps_pd margin (Cholesky, flagged), and
  // the spectral pseudo-inverse for everything else.  The rank cut sits at
  // machine-noise level relative to the spectrum so genuinely tiny but real
  // eigenvalues are never dropped.
  const double eps = default_eps_pd(op.G, eps_pd_base);
  if (CholeskyFactor::compute(op.G, -eps)) {
    auto full = CholeskyFactor::compute(op.G);
    return {full->solve(op.F), false};
  }
  if (auto weak = CholeskyFactor::compute(op.G)) {
    return {weak->solve(op.F), true};  // inside the margin: boundary flagged
  }
  const auto eig = sym_eigen(op.G);
  double small = std::abs(eig.values.front());
  for (double w : eig.values) small = std::min(small, std::abs(w));
  const double eps_rank = default_eps_rank(eig, 1e-12);
  return {pinv_apply(eig, op.F, eps_rank), small <= eps};
}

}  // namespace

DualEval eval_dual(const QuadraticCanonicalProblem& p, const DualPoint& S, double eps_pd_base) {
  const GOperator op = assemble_G(p, S);
  const GSolve sol = solve_G(op, eps_pd_base);
  DualEval out;
  out.boundary = sol.boundary;
  out.value = -0.5 * dot(sol.chi, op.F) - p.phi.conjugate(S) + op.constant + p.energy_offset;
  return out;
}

PrimalRecovery recover_primal(const QuadraticCanonicalProblem& p, const DualPoint& S,
                              double eps_pd_base) {
  const GOperator op = assemble_G(p, S);
  const GSolve sol = solve_G(op, eps_pd_base);
  return {sol.chi, sol.boundary};
}

std::vector<Vector> measure_gradients(const QuadraticCanonicalProblem& p, const Vector& chi) {
  std::vector<Vector> J;
  J.reserve(p.measures.size());
  for (const auto& m : p.measures) {
    Vector g = m.H.matvec(chi);
    for (std::size_t i = 0; i < p.n; ++i) g[i] += m.b[i];
    J.push_back(std::move(g));
  }
  return J;
}

Vector dual_gradient(const QuadraticCanonicalProblem& p, const DualPoint& S) {
  const Vector chi = recover_primal(p, S).chi;
  Vector g = eval_measures(p, chi);
  const Vector dconj = p.phi.conjugate_duality_map(S);
  for (std::size_t k = 0; k < g.size(); ++k) g[k] -= dconj[k];
  return g;
}

SymMatrix dual_hessian(const QuadraticCanonicalProblem& p, const DualPoint& S) {
  const GOperator op = assemble_G(p, S);
  const GSolve sol = solve_G(op, 1e-8);
  const auto J = measure_gradients(p, sol.chi);
  const std::size_t m = J.size();

  // G^{-1} J, column by column.
  std::vector<Vector> GinvJ(m);
  auto chol = CholeskyFactor::compute(op.G);
  if (chol) {
    for (std::size_t k = 0; k < m; ++k) GinvJ[k] = chol->solve(J[k]);
  } else {
    const auto eig = sym_eigen(op.G);
    const double eps_rank = default_eps_rank(eig, 1e-12);
    for (std::size_t k = 0; k < m; ++k) GinvJ[k] = pinv_apply(eig, J[k], eps_rank);
  }

  SymMatrix H(m);
  const Vector diag = p.phi.conjugate_hessian_diag(S);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t l = k; l < m; ++l) {
      double v = -dot(J[k], GinvJ[l]);
      if (k == l) v -= diag[k];
      H.set(k, l, v);
    }
  return H;
}

TrialityResult classify_triality(const QuadraticCanonicalProblem& p, const DualPoint& S,
                                 double eps_pd_base) {
  const GOperator op = assemble_G(p, S);
  const double eps = default_eps_pd(op.G, eps_pd_base);
  const auto def = classify_definiteness(op.G, eps);
  switch (def.kind) {
    case Definiteness::PositiveDefinite:
      return {TrialityClass::GlobalMin, def.margin};
    case Definiteness::PositiveSemidefiniteSingular:
    case Definiteness::NegativeSemidefiniteSingular:
      return {TrialityClass::Boundary, def.margin};
    case Definiteness::Indefinite:
      return {TrialityClass::Unclassified, def.margin};
    case Definiteness::NegativeDefinite:
      break;
  }
  // Inside S_c^-: the double-max and double-min branches are told apart by the
  // curvature of Pi^d at S; the double-min branch needs matching dimensions.
  const SymMatrix Hd = dual_hessian(p, S);
  const auto curve = classify_definiteness(Hd, default_eps_pd(Hd, eps_pd_base));
  const bool dims_match = p.n == p.measures.size();
  switch (curve.kind) {
    case Definiteness::NegativeDefinite:
    case Definiteness::NegativeSemidefiniteSingular:
      return {TrialityClass::LocalMax, def.margin};
    case Definiteness::PositiveDefinite:
    case Definiteness::PositiveSemidefiniteSingular:
      return {dims_match ? TrialityClass::LocalMinCandidate : TrialityClass::LocalMinWeak,
              def.margin};
    default:
      return {TrialityClass::Unclassified, def.margin};
  }
}

SolveReport verify_solution(const QuadraticCanonicalProblem& p, const Vector& chi,
                            const DualPoint& S) {
  SolveReport r;
  r.primal = chi;
  r.dual = S;

  const Vector xi = eval_measures(p, chi);
  const double indicator_tol = 1e-6 * (1.0 + norm_inf(xi));
  r.pi = eval_primal(p, chi, indicator_tol);

  const DualEval de = eval_dual(p, S);
  r.pi_dual = de.value;
  r.boundary = de.boundary;
  r.xi_value = eval_total_complementary(p, chi, S);
  r.gap = std::abs(r.pi - r.pi_dual);

  if (p.phi.kind == PhiKind::ShiftedQuadratic) {
    r.residual_primal = norm2(primal_gradient(p, chi));
  } else {
    // No smooth Pi; stationarity of Xi in chi is the meaningful residual, and
    // the measure defect reports the indicator violation.
    r.residual_primal = std::max(norm2(total_complementary_grad_chi(p, chi, S)), norm_inf(xi));
  }
  r.residual_dual = norm2(dual_gradient(p, S));

  const auto tri = classify_triality(p, S);
  r.triality = tri.cls;
  r.margin = tri.margin;
  if (r.boundary) r.triality = TrialityClass::Boundary;

  if (p.phi.kind == PhiKind::ZeroIndicator) {
    for (double s : S)
      if (std::abs(s) <= 1e-10) r.sigma_zero_face = true;
  }
  r.status = SolveStatus::Converged;
  return r;
}

}  // namespace cdk
