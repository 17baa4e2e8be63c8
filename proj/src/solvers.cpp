#include "cdk/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cdk {

namespace {

constexpr double kMuMin = 1e-14;
constexpr double kStepMin = 1e-14;

double smooth_primal(const QuadraticCanonicalProblem& p, const Vector& chi) {
  if (p.phi.kind == PhiKind::ShiftedQuadratic) return eval_primal(p, chi);
  return 0.5 * p.A.quad_form(chi) - dot(p.f, chi) + p.energy_offset;
}

bool cone_member(const QuadraticCanonicalProblem& p, const DualPoint& S, int sign,
                 double margin) {
  GOperator op = assemble_G(p, S);
  if (sign < 0) {
    SymMatrix neg(op.G.size());
    neg.add_scaled(op.G, -1.0);
    return CholeskyFactor::compute(neg, -margin).has_value();
  }
  return CholeskyFactor::compute(op.G, -margin).has_value();
}

// Explicit inverse through the Cholesky factor, used by the barrier terms.
std::vector<Vector> spd_inverse_columns(const CholeskyFactor& chol, std::size_t n) {
  std::vector<Vector> cols(n);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    cols[j] = chol.solve(e);
    e[j] = 0.0;
  }
  return cols;
}

struct DualState {
  GOperator op;
  Vector chi;
  Vector grad;
  double value = 0.0;
  double min_eig = 0.0;  // NaN unless requested
  bool boundary = false;
};

DualState dual_state(const QuadraticCanonicalProblem& p, const DualPoint& S, double eps_pd_base,
                     bool need_min_eig = false) {
  DualState st;
  st.op = assemble_G(p, S);
  st.min_eig = std::numeric_limits<double>::quiet_NaN();

  bool solved = false;
  if (!need_min_eig) {
    if (auto chol = CholeskyFactor::compute(st.op.G)) {
      st.chi = chol->solve(st.op.F);
      solved = true;
    }
  }
  if (!solved) {
    const auto eig = sym_eigen(st.op.G);
    st.min_eig = eig.values.front();
    const double eps = default_eps_pd(st.op.G, eps_pd_base);
    double small = std::abs(eig.values.front());
    for (double w : eig.values) small = std::min(small, std::abs(w));
    st.boundary = small <= eps;
    st.chi = pinv_apply(eig, st.op.F, default_eps_rank(eig, 1e-12));
  }
  st.value = -0.5 * dot(st.chi, st.op.F) - p.phi.conjugate(S) + st.op.constant + p.energy_offset;
  st.grad = eval_measures(p, st.chi);
  const Vector dconj = p.phi.conjugate_duality_map(S);
  for (std::size_t k = 0; k < st.grad.size(); ++k) st.grad[k] -= dconj[k];
  return st;
}

SolveReport report_m0(const QuadraticCanonicalProblem& p, const SolverOptions& opts) {
  // No measures: Pi is plain quadratic, the dual space is empty.
  SolveReport r;
  const double eps = default_eps_pd(p.A, opts.eps_pd_base);
  if (!CholeskyFactor::compute(p.A, -eps)) {
    r.status = SolveStatus::NoInteriorPoint;
    r.route = "interior";
    return r;
  }
  r = verify_solution(p, solve_spd(p.A, p.f), DualPoint{});
  r.status = SolveStatus::Converged;
  r.route = "interior";
  return r;
}

}  // namespace

void SolverOptions::validate() const {
  if (eps_pd_base <= 0.0 || max_iter <= 0 || barrier_mu0 <= 0.0 || armijo_c1 <= 0.0 ||
      multistart_count <= 0)
    throw InvalidInput("SolverOptions: fields must be positive");
  if (backtrack_ratio <= 0.0 || backtrack_ratio >= 1.0)
    throw InvalidInput("SolverOptions: backtrack ratio must lie in (0,1)");
  if (barrier_shrink <= 0.0 || barrier_shrink >= 1.0)
    throw InvalidInput("SolverOptions: barrier shrink must lie in (0,1)");
}

double SolverOptions::grad_tol(const QuadraticCanonicalProblem& p) const {
  if (eps_grad > 0.0) return eps_grad;
  return 1e-8 * (1.0 + norm2(p.f));
}

void PerturbationSchedule::validate() const {
  if (delta0 <= 0.0 || max_outer <= 0 || delta_min <= 0.0)
    throw InvalidInput("PerturbationSchedule: fields must be positive");
  if (delta_shrink <= 0.0 || delta_shrink >= 1.0)
    throw InvalidInput("PerturbationSchedule: delta shrink must lie in (0,1)");
  if (beta < 0.0 || beta > 1.0) throw InvalidInput("PerturbationSchedule: beta must be in [0,1]");
  for (double b : beta_sequence)
    if (b < 0.0 || b > 1.0) throw InvalidInput("PerturbationSchedule: beta must be in [0,1]");
}

double PerturbationSchedule::beta_at(int k) const {
  if (!beta_sequence.empty())
    return beta_sequence[std::min<std::size_t>(k, beta_sequence.size() - 1)];
  return beta;
}

std::optional<DualPoint> find_interior_point(const QuadraticCanonicalProblem& p,
                                             const SolverOptions& opts, int sign) {
  const std::size_t m = p.measures.size();
  const double margin = default_eps_pd(p.A, opts.eps_pd_base);
  if (m == 0) {
    if (cone_member(p, {}, sign, margin)) return DualPoint{};
    return std::nullopt;
  }
  if (cone_member(p, DualPoint(m, 0.0), sign, margin)) return DualPoint(m, 0.0);

  std::vector<Vector> directions;
  directions.push_back(Vector(m, 1.0));
  {
    // Weight against each measure's own scale so badly mixed units still move
    // every H_k at a comparable rate.
    Vector w(m, 1.0);
    for (std::size_t k = 0; k < m; ++k) {
      double tr = 0.0;
      for (std::size_t i = 0; i < p.n; ++i) tr += p.measures[k].H(i, i);
      if (std::abs(tr) > 1e-12) w[k] = 1.0 / std::abs(tr);
    }
    directions.push_back(w);
  }

  for (const auto& dir : directions) {
    for (double t = 1e-3; t <= 1e7; t *= 4.0) {
      DualPoint S = scaled(dir, sign >= 0 ? 2.0 * t : -2.0 * t);
      if (cone_member(p, S, sign, margin)) return S;
    }
  }
  return std::nullopt;
}

SolveReport maximize_dual_on_Splus(const QuadraticCanonicalProblem& p,
                                   const SolverOptions& opts) {
  opts.validate();
  p.validate();
  const std::size_t m = p.measures.size();
  if (m == 0) return report_m0(p, opts);

  const double gtol = opts.grad_tol(p);

  auto start = find_interior_point(p, opts, +1);
  if (!start) {
    SolveReport r;
    r.status = SolveStatus::NoInteriorPoint;
    r.no_interior_stationary = true;
    r.route = "interior";
    return r;
  }

  DualPoint S = *start;
  DualState st = dual_state(p, S, opts.eps_pd_base, true);
  double mu = opts.barrier_mu0;
  SolveReport rep;
  rep.route = "interior";
  int stalls = 0;
  int stagnation = 0;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const double eps_scaled = default_eps_pd(st.op.G, opts.eps_pd_base);
    rep.trace.push_back({iter, 0.0, st.value, norm2(st.grad), st.min_eig});

    if (norm2(st.grad) <= gtol && st.min_eig > eps_scaled) {
      rep = verify_solution(p, st.chi, S);
      rep.route = "interior";
      rep.status = SolveStatus::Converged;
      rep.iterations = iter;
      return rep;
    }

    SymMatrix H = dual_hessian(p, S);
    Vector g = st.grad;
    if (mu > kMuMin && st.min_eig > 0.0) {
      auto chol = CholeskyFactor::compute(st.op.G);
      if (chol) {
        const auto ginv = spd_inverse_columns(*chol, p.n);
        // barrier gradient: mu * tr(G^{-1} H_k)
        std::vector<Vector> M(m);  // rows of G^{-1} H_k packed as full matrices
        for (std::size_t k = 0; k < m; ++k) {
          double tr = 0.0;
          M[k].assign(p.n * p.n, 0.0);
          for (std::size_t i = 0; i < p.n; ++i)
            for (std::size_t j = 0; j < p.n; ++j) {
              double v = 0.0;
              for (std::size_t l = 0; l < p.n; ++l) v += ginv[i][l] * p.measures[k].H(l, j);
              M[k][i * p.n + j] = v;
              if (i == j) tr += v;
            }
          g[k] += mu * tr;
        }
        // barrier hessian: -mu * tr(G^{-1} H_k G^{-1} H_l)
        for (std::size_t k = 0; k < m; ++k)
          for (std::size_t l = k; l < m; ++l) {
            double tr = 0.0;
            for (std::size_t i = 0; i < p.n; ++i)
              for (std::size_t j = 0; j < p.n; ++j) tr += M[k][i * p.n + j] * M[l][j * p.n + i];
            H.add(k, l, -mu * tr);
          }
      }
    }

    SymMatrix negH(m);
    negH.add_scaled(H, -1.0);
    Vector d = sym_solve_regularized(negH, g);  // solves (-H) d = g, an ascent direction

    // cap huge near-boundary directions so backtracking stays effective
    const double dmax = 1e3 * (1.0 + norm2(S));
    if (norm2(d) > dmax) d = scaled(d, dmax / norm2(d));

    double slope_pi = dot(st.grad, d);
    if (slope_pi <= 0.0 && mu <= kMuMin) {
      d = st.grad;  // plain gradient ascent fallback
      slope_pi = dot(st.grad, st.grad);
    }

    double t = 1.0;
    bool accepted = false;
    const double base_value = st.value;
    while (t >= kStepMin) {
      DualPoint Sn = axpy(t, d, S);
      if (cone_member(p, Sn, +1, eps_scaled * 0.01)) {
        DualState stn = dual_state(p, Sn, opts.eps_pd_base);
        // monotone in Pi^d itself, with sufficient increase along ascent slopes
        if (stn.value >= base_value + opts.armijo_c1 * t * std::max(slope_pi, 0.0) - 1e-12) {
          Sn.swap(S);
          st = dual_state(p, S, opts.eps_pd_base, true);
          accepted = true;
          break;
        }
      }
      t *= opts.backtrack_ratio;
    }

    mu = std::max(mu * opts.barrier_shrink, 0.0);
    if (!accepted) {
      ++stalls;
      if (mu > kMuMin) {
        mu = 0.0;  // drop the barrier entirely and retry pure Newton
        continue;
      }
      if (stalls >= 3) break;
    } else {
      if (mu <= kMuMin && st.value - base_value <= 1e-15 * (1.0 + std::abs(base_value))) {
        if (++stagnation >= 8) break;
      } else {
        stagnation = 0;
      }
      stalls = 0;
    }
  }

  // Stalled: either the supremum sits on the boundary or we ran out of budget.
  rep = verify_solution(p, st.chi, S);
  rep.route = "interior";
  rep.iterations = opts.max_iter;
  const double eps_scaled = default_eps_pd(st.op.G, opts.eps_pd_base);
  if (norm2(st.grad) > gtol && st.min_eig <= std::max(1e-5 * (1.0 + st.op.G.norm_inf()),
                                                      10.0 * eps_scaled)) {
    rep.status = SolveStatus::BoundaryConverged;
    rep.no_interior_stationary = true;
  } else if (norm2(st.grad) <= gtol) {
    rep.status = SolveStatus::Converged;
  } else {
    rep.status = SolveStatus::MaxIterations;
  }
  return rep;
}

namespace {

std::optional<DualPoint> newton_root(const QuadraticCanonicalProblem& p, DualPoint S,
                                     const SolverOptions& opts, int cone_sign, double gtol,
                                     SolveStatus* status) {
  *status = SolveStatus::MaxIterations;
  const double margin_base = default_eps_pd(p.A, opts.eps_pd_base);
  DualState st = dual_state(p, S, opts.eps_pd_base);
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (norm2(st.grad) <= gtol) {
      *status = SolveStatus::Converged;
      return S;
    }
    SymMatrix H = dual_hessian(p, S);
    Vector d = sym_solve_regularized(H, scaled(st.grad, -1.0));
    double t = 1.0;
    bool accepted = false;
    const double merit = dot(st.grad, st.grad);
    while (t >= kStepMin) {
      DualPoint Sn = axpy(t, d, S);
      bool ok_cone = true;
      if (cone_sign != 0) ok_cone = cone_member(p, Sn, cone_sign, margin_base * 0.01);
      if (ok_cone) {
        DualState stn = dual_state(p, Sn, opts.eps_pd_base);
        if (!stn.boundary && dot(stn.grad, stn.grad) <= merit * (1.0 - 0.25 * t)) {
          S = std::move(Sn);
          st = std::move(stn);
          accepted = true;
          break;
        }
      }
      t *= opts.backtrack_ratio;
    }
    if (!accepted) {
      *status = (cone_sign != 0) ? SolveStatus::LeftCone : SolveStatus::NoStationaryFound;
      if (norm2(st.grad) <= 10.0 * gtol) {  // close enough to call stationary
        *status = SolveStatus::Converged;
        return S;
      }
      return std::nullopt;
    }
  }
  if (norm2(st.grad) <= 10.0 * gtol) {
    *status = SolveStatus::Converged;
    return S;
  }
  return std::nullopt;
}

}  // namespace

std::vector<SolveReport> find_stationary_in_Sminus(const QuadraticCanonicalProblem& p,
                                                   const DualPoint& start,
                                                   const SolverOptions& opts) {
  opts.validate();
  p.validate();
  if (start.size() != p.measures.size())
    throw DimensionMismatch("find_stationary_in_Sminus: start dimension mismatch");
  const double margin = default_eps_pd(p.A, opts.eps_pd_base);
  if (!cone_member(p, start, -1, margin * 0.01))
    throw InvalidInput("find_stationary_in_Sminus: start must satisfy G(start) < 0");

  const double gtol = opts.grad_tol(p);
  std::vector<SolveReport> found;
  // wide geometric sweep: the cone entry point can sit orders of magnitude
  // away from the stationary set, and the cone check discards bad scales
  const double scales[] = {1.0,  0.5,   0.25,  2.0,   4.0,    8.0,
                           16.0, 64.0,  256.0, 1024.0, 4096.0, 0.125};
  for (double s : scales) {
    DualPoint seed = scaled(start, s);
    if (!cone_member(p, seed, -1, margin * 0.01)) continue;
    SolveStatus status = SolveStatus::NotRun;
    auto S = newton_root(p, seed, opts, -1, gtol, &status);
    if (!S) continue;
    bool duplicate = false;
    for (const auto& r : found)
      if (norm2(axpy(-1.0, r.dual, *S)) <= 1e-6 * (1.0 + norm2(*S))) duplicate = true;
    if (duplicate) continue;
    auto rec = recover_primal(p, *S, opts.eps_pd_base);
    SolveReport rep = verify_solution(p, rec.chi, *S);
    rep.status = status;
    rep.route = "s_minus";
    found.push_back(std::move(rep));
  }

  std::sort(found.begin(), found.end(), [](const SolveReport& a, const SolveReport& b) {
    if (a.pi_dual != b.pi_dual) return a.pi_dual > b.pi_dual;
    return a.dual < b.dual;  // lexicographic tie-break
  });
  return found;
}

std::optional<SolveReport> newton_dual_stationary(const QuadraticCanonicalProblem& p,
                                                  const DualPoint& start,
                                                  const SolverOptions& opts) {
  opts.validate();
  const double gtol = opts.grad_tol(p);
  SolveStatus status = SolveStatus::NotRun;
  auto S = newton_root(p, start, opts, 0, gtol, &status);
  if (!S) return std::nullopt;
  auto rec = recover_primal(p, *S, opts.eps_pd_base);
  SolveReport rep = verify_solution(p, rec.chi, *S);
  rep.status = status;
  rep.route = "s_minus";
  return rep;
}

std::optional<SolveReport> polish_primal_stationary(const QuadraticCanonicalProblem& p,
                                                    const Vector& chi0,
                                                    const SolverOptions& opts) {
  if (p.phi.kind != PhiKind::ShiftedQuadratic) return std::nullopt;
  if (chi0.size() != p.n) throw DimensionMismatch("polish_primal_stationary: chi0 size");
  Vector q = chi0;
  const double stiffness = 1.0 + p.A.norm_inf();
  for (int it = 0; it < std::max(200, opts.max_iter); ++it) {
    const Vector g = primal_gradient(p, q);
    if (norm2(g) <= 1e-12 * stiffness * (1.0 + norm2(q))) break;
    const SymMatrix H = primal_hessian(p, q);
    Vector d = sym_solve_regularized(H, scaled(g, -1.0));
    double t = 1.0;
    const double merit = dot(g, g);
    bool ok = false;
    while (t >= 1e-13) {
      Vector qn = axpy(t, d, q);
      const Vector gn = primal_gradient(p, qn);
      if (dot(gn, gn) <= merit * (1.0 - 0.25 * t)) {
        q = std::move(qn);
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) break;
  }
  if (norm2(primal_gradient(p, q)) > 1e-8 * stiffness * (1.0 + norm2(q))) return std::nullopt;
  const DualPoint S = p.phi.duality_map(eval_measures(p, q));
  SolveReport rep = verify_solution(p, q, S);
  rep.status = SolveStatus::Converged;
  rep.route = "s_minus";
  return rep;
}

QuadraticCanonicalProblem linear_perturbation(const QuadraticCanonicalProblem& p,
                                              const Vector& direction, double magnitude) {
  if (direction.size() != p.n) throw DimensionMismatch("linear_perturbation: direction size");
  QuadraticCanonicalProblem q = p;
  for (std::size_t i = 0; i < p.n; ++i) q.f[i] += magnitude * direction[i];
  if (magnitude != 0.0)
    q.provenance += (q.provenance.empty() ? "" : "; ") + std::string("linear perturbation");
  return q;
}

SolveReport perturbed_primal_dual(const QuadraticCanonicalProblem& p,
                                  const PerturbationSchedule& sched, const Vector& chi0,
                                  const SolverOptions& opts) {
  return perturbed_primal_dual(p, sched, chi0, opts, {});
}

SolveReport perturbed_primal_dual(const QuadraticCanonicalProblem& p,
                                  const PerturbationSchedule& sched, const Vector& chi0,
                                  const SolverOptions& opts,
                                  const std::function<void(int, const Vector&)>& on_iterate) {
  sched.validate();
  opts.validate();
  p.validate();
  if (chi0.size() != p.n) throw DimensionMismatch("perturbed_primal_dual: chi0 size");

  const double omega =
      sched.omega > 0.0 ? sched.omega : 1e-9 * (1.0 + std::abs(smooth_primal(p, chi0)));

  Vector chi = chi0;
  double delta = sched.delta0;
  double prev_pi = smooth_primal(p, chi);
  DualPoint S_last(p.measures.size(), 0.0);
  SolveReport rep;
  rep.route = "perturbed";
  rep.status = SolveStatus::MaxIterations;

  for (int k = 1; k <= sched.max_outer; ++k) {
    QuadraticCanonicalProblem pd = p;
    pd.A.add_identity(delta);
    for (std::size_t i = 0; i < p.n; ++i) pd.f[i] += delta * chi[i];

    SolveReport inner = maximize_dual_on_Splus(pd, opts);
    if (inner.status == SolveStatus::NoInteriorPoint) {
      // enlarge the cone and retry
      delta = std::min(delta * 8.0, 1e8);
      continue;
    }
    S_last = inner.dual;
    const Vector chi_bar = recover_primal(pd, S_last, opts.eps_pd_base).chi;
    const double beta = sched.beta_at(k - 1);
    for (std::size_t i = 0; i < p.n; ++i) chi[i] += beta * (chi_bar[i] - chi[i]);

    if (on_iterate) on_iterate(k, chi);
    const double pi_now = smooth_primal(p, chi);
    const DualEval de = eval_dual(p, S_last);
    rep.trace.push_back({k, delta, pi_now, std::abs(pi_now - de.value),
                         0.0});
    rep.iterations = k;

    if (std::abs(pi_now - prev_pi) <= omega) {
      rep.status = SolveStatus::Converged;
      break;
    }
    prev_pi = pi_now;
    delta = std::max(delta * sched.delta_shrink, sched.delta_min);
  }

  auto trace = std::move(rep.trace);
  auto status = rep.status;
  const auto iterations = rep.iterations;
  rep = verify_solution(p, chi, S_last);
  // the stopping rule alone does not certify a solution; without the
  // zero-gap certificate of a stationary pair the run did not converge
  const bool certified = std::isfinite(rep.pi) && std::isfinite(rep.gap) &&
                         rep.gap <= 1e-5 * (1.0 + std::abs(rep.pi));
  if (status == SolveStatus::Converged && !certified) status = SolveStatus::MaxIterations;
  rep.trace = std::move(trace);
  rep.status = status;
  rep.iterations = iterations;
  rep.route = "perturbed";
  return rep;
}

namespace {

int class_rank(TrialityClass c) {
  switch (c) {
    case TrialityClass::GlobalMin: return 0;
    case TrialityClass::Boundary: return 1;
    case TrialityClass::LocalMinCandidate: return 2;
    case TrialityClass::LocalMinWeak: return 3;
    case TrialityClass::LocalMax: return 4;
    case TrialityClass::Unclassified: return 5;
  }
  return 6;
}

}  // namespace

MultistartResult multistart(const QuadraticCanonicalProblem& p, const SolverOptions& opts,
                            const Vector& chi0) {
  opts.validate();
  p.validate();
  MultistartResult out;
  std::vector<SolveReport> cands;

  SolveReport interior = maximize_dual_on_Splus(p, opts);
  const bool interior_ok =
      interior.status == SolveStatus::Converged && interior.triality == TrialityClass::GlobalMin;
  if (interior.status == SolveStatus::Converged || interior.status == SolveStatus::BoundaryConverged)
    cands.push_back(interior);

  if (!interior_ok) {
    PerturbationSchedule sched;
    Vector start = chi0.empty() ? Vector(p.n, 0.0) : chi0;
    SolveReport pert = perturbed_primal_dual(p, sched, start, opts);
    pert.no_interior_stationary = interior.no_interior_stationary;
    cands.push_back(std::move(pert));
  }

  if (opts.sweep_sminus && !p.measures.empty()) {
    auto sm_start = find_interior_point(p, opts, -1);
    if (sm_start) {
      auto locals = find_stationary_in_Sminus(p, *sm_start, opts);
      for (auto& r : locals) cands.push_back(std::move(r));
    }
  }

  if (cands.empty()) {
    SolveReport none;
    none.status = SolveStatus::NoStationaryFound;
    out.best = none;
    return out;
  }

  std::stable_sort(cands.begin(), cands.end(), [](const SolveReport& a, const SolveReport& b) {
    const int ra = class_rank(a.triality), rb = class_rank(b.triality);
    if (ra != rb) return ra < rb;
    if (a.pi != b.pi) return a.pi < b.pi;
    return a.dual < b.dual;
  });
  out.best = cands.front();
  out.candidates = std::move(cands);
  return out;
}

}  // namespace cdk
