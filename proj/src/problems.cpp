#include "cdk/problems.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

namespace cdk::problems {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

// Dense LU with partial pivoting for the small square systems the
// two-surface Newton needs.
bool lu_solve(std::vector<Vector> A, Vector b, Vector& x) {
  const std::size_t n = A.size();
  std::vector<std::size_t> piv(n);
  for (std::size_t i = 0; i < n; ++i) piv[i] = i;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t best = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[best][col])) best = r;
    if (std::abs(A[best][col]) < 1e-14) return false;
    std::swap(A[col], A[best]);
    std::swap(b[col], b[best]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double m = A[r][col] / A[col][col];
      if (m == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) A[r][c] -= m * A[col][c];
      b[r] -= m * b[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t c = ii + 1; c < n; ++c) s -= A[ii][c] * x[c];
    x[ii] = s / A[ii][ii];
  }
  return true;
}

}  // namespace

// --- double well ------------------------------------------------------------

QuadraticCanonicalProblem build_double_well(const DoubleWellSpec& spec) {
  if (!(spec.alpha > 0.0)) throw InvalidInput("double well: alpha must be positive");
  if (spec.f.size() != spec.n) throw DimensionMismatch("double well: f dimension mismatch");
  QuadraticCanonicalProblem p;
  p.n = spec.n;
  p.A = SymMatrix(spec.n);
  p.f = spec.f;
  CanonicalMeasure m;
  m.H = SymMatrix::identity(spec.n);
  m.b = Vector(spec.n, 0.0);
  m.c = -spec.lambda;
  p.measures.push_back(std::move(m));
  p.phi = CanonicalFunction::shifted_quadratic({spec.alpha});
  p.name = "double_well";
  return p;
}

DoubleWellSolution solve_double_well_analytic(const DoubleWellSpec& spec) {
  const QuadraticCanonicalProblem p = build_double_well(spec);
  const double ff = dot(spec.f, spec.f);
  DoubleWellSolution out;

  auto make_point = [&](double sigma, const Vector& x) {
    DoubleWellStationaryPoint pt;
    pt.sigma = sigma;
    pt.x = x;
    pt.pi = eval_primal(p, x);
    pt.pi_dual = eval_dual(p, {sigma}).value;
    pt.cls = classify_triality(p, {sigma}).cls;
    return pt;
  };

  if (ff == 0.0) {
    out.symmetric_boundary_case = true;
    out.minimizer_radius = std::sqrt(2.0 * spec.lambda);
    // boundary roots sigma_1 = sigma_2 = 0 carry the minimizer manifold
    Vector rep(spec.n, 0.0);
    rep[0] = out.minimizer_radius;
    out.points.push_back(make_point(0.0, rep));
    out.points.back().cls = TrialityClass::Boundary;
    // the lone interior critical point, a local maximizer at the origin
    out.points.push_back(make_point(-spec.alpha * spec.lambda, Vector(spec.n, 0.0)));
    return out;
  }

  const auto roots = real_cubic_roots(2.0 / spec.alpha, 2.0 * spec.lambda, 0.0, -ff);
  for (std::size_t i = roots.roots.size(); i-- > 0;) {
    const double s = roots.roots[i];
    out.points.push_back(make_point(s, scaled(spec.f, 1.0 / s)));
  }
  return out;
}

// --- boolean quadratic program ------------------------------------------------

QuadraticCanonicalProblem build_boolean_qp(const BooleanQPSpec& spec) {
  const std::size_t n = spec.Q.size();
  if (spec.f.size() != n) throw DimensionMismatch("boolean qp: f dimension mismatch");
  QuadraticCanonicalProblem p;
  p.n = n;
  p.A = spec.Q;
  p.f = spec.f;
  for (std::size_t k = 0; k < n; ++k) {
    CanonicalMeasure m;
    m.H = SymMatrix(n);
    m.H.set(k, k, 2.0);
    m.b = Vector(n, 0.0);
    m.b[k] = -1.0;
    m.c = 0.0;
    p.measures.push_back(std::move(m));
  }
  p.phi = CanonicalFunction::zero_indicator(n);
  p.name = "boolean_qp";
  return p;
}

BruteForceResult brute_force_binary(const SymMatrix& Q, const Vector& f, BinaryDomain domain) {
  const std::size_t n = Q.size();
  if (f.size() != n) throw DimensionMismatch("brute_force_binary: f dimension mismatch");
  if (n > 24) throw OracleRefused("brute_force_binary: n > 24");

  const double lo = domain == BinaryDomain::ZeroOne ? 0.0 : -1.0;
  const double hi = 1.0;
  Vector x(n, lo);
  Vector q = Q.matvec(x);
  double energy = 0.5 * dot(x, q) - dot(f, x);

  Vector best_x = x;
  double best = energy;

  std::uint64_t bits = 0;
  const std::uint64_t total = 1ull << n;
  for (std::uint64_t step = 1; step < total; ++step) {
    const int i = std::countr_zero(step);
    bits ^= 1ull << i;
    const double target = (bits >> i) & 1ull ? hi : lo;
    const double d = target - x[i];
    // E(x + d e_i) - E(x) = d (Qx)_i + d^2 Q_ii / 2 - d f_i
    energy += d * q[i] + 0.5 * d * d * Q(i, i) - d * f[i];
    x[i] = target;
    for (std::size_t r = 0; r < n; ++r) q[r] += d * Q(r, i);

    if (energy < best || (energy == best && x < best_x)) {
      best = energy;
      best_x = x;
    }
  }
  return {best_x, best};
}

BqpSolveResult solve_boolean_qp(const BooleanQPSpec& spec, const SolverOptions& opts) {
  const QuadraticCanonicalProblem p = build_boolean_qp(spec);
  SolverOptions local = opts;
  local.sweep_sminus = false;
  const auto ms = multistart(p, local);

  BqpSolveResult out;
  out.report = ms.best;
  out.hard_case = ms.best.no_interior_stationary;
  out.interior = ms.best.status == SolveStatus::Converged &&
                 ms.best.triality == TrialityClass::GlobalMin && !out.hard_case &&
                 !ms.best.boundary;
  // round every candidate iterate and keep the best true vertex energy
  out.x.assign(p.n, 0.0);
  out.energy = 0.5 * spec.Q.quad_form(out.x) - dot(spec.f, out.x);
  for (const auto& cand : ms.candidates) {
    if (cand.primal.size() != p.n) continue;
    Vector x(p.n);
    for (std::size_t i = 0; i < p.n; ++i) x[i] = cand.primal[i] >= 0.5 ? 1.0 : 0.0;
    const double e = 0.5 * spec.Q.quad_form(x) - dot(spec.f, x);
    if (e < out.energy) {
      out.energy = e;
      out.x = std::move(x);
    }
  }
  return out;
}

BqpSecondDualResult solve_bqp_second_dual(const BooleanQPSpec& spec, const SolverOptions& opts) {
  (void)opts;
  const std::size_t n = spec.Q.size();
  const auto eig = sym_eigen(spec.Q);
  double min_abs = std::numeric_limits<double>::infinity();
  double max_abs = 0.0;
  for (double w : eig.values) {
    min_abs = std::min(min_abs, std::abs(w));
    max_abs = std::max(max_abs, std::abs(w));
  }
  if (min_abs <= 1e-10 * std::max(1.0, max_abs))
    throw SingularMatrix("solve_bqp_second_dual: Q is singular");

  auto qinv_apply = [&](const Vector& v) { return pinv_apply(eig, v, 1e-300); };
  auto objective = [&](const Vector& s) {
    double val = -0.5 * dot(s, qinv_apply(s));
    for (std::size_t i = 0; i < n; ++i) val -= std::abs(spec.f[i] - s[i]);
    return val;
  };
  auto recover = [&](const Vector& s) {
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = spec.f[i] - s[i] > 0.0 ? 1.0 : 0.0;
    return x;
  };
  auto energy_of = [&](const Vector& x) { return 0.5 * spec.Q.quad_form(x) - dot(spec.f, x); };

  const double eta = 0.5 * min_abs;  // 1/L with L = |Q^{-1}|_2, halved
  std::vector<Vector> starts;
  starts.push_back(Vector(n, 0.0));
  starts.push_back(spec.f);
  // In each smooth orthant the stationarity rule is sigma = Q sign(f - sigma),
  // so seeded sign vectors driven to their fixed points enumerate candidate
  // stationary orthants cheaply.
  {
    std::vector<Vector> signs;
    Vector sf(n);
    for (std::size_t i = 0; i < n; ++i) sf[i] = spec.f[i] >= 0.0 ? 1.0 : -1.0;
    signs.push_back(sf);
    signs.push_back(Vector(n, 1.0));
    signs.push_back(Vector(n, -1.0));
    std::mt19937_64 rng(9001);
    for (int t = 0; t < 64; ++t) {
      Vector s(n);
      for (auto& v : s) v = (rng() & 1) ? 1.0 : -1.0;
      signs.push_back(std::move(s));
    }
    for (auto s : signs) {
      for (int it = 0; it < 60; ++it) {
        const Vector qs = spec.Q.matvec(s);
        Vector next(n);
        for (std::size_t i = 0; i < n; ++i) next[i] = spec.f[i] - qs[i] > 0.0 ? 1.0 : -1.0;
        if (next == s) break;
        s = std::move(next);
      }
      starts.push_back(spec.Q.matvec(s));
    }
  }

  BqpSecondDualResult best;
  bool have = false;
  for (const auto& s0 : starts) {
    Vector s = s0;
    for (int it = 0; it < 2000; ++it) {
      // gradient step on the smooth part, then the closed-form prox of the
      // concave separable term, which pushes each component away from f_i
      Vector y = axpy(eta, qinv_apply(s), s);
      Vector next(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double sgn = y[i] - spec.f[i] >= 0.0 ? 1.0 : -1.0;
        next[i] = y[i] + eta * sgn;
      }
      const double move = norm2(axpy(-1.0, s, next));
      s = std::move(next);
      if (move <= 1e-12 * (1.0 + norm2(s))) break;
    }
    BqpSecondDualResult cand;
    cand.sigma = s;
    cand.objective = objective(s);
    cand.x = recover(s);
    cand.energy = energy_of(cand.x);
    if (!have || cand.energy < best.energy ||
        (cand.energy == best.energy && cand.objective < best.objective)) {
      best = std::move(cand);
      have = true;
    }
  }

  if (n <= 20) {
    const auto oracle = brute_force_binary(spec.Q, spec.f, BinaryDomain::ZeroOne);
    best.oracle_checked = true;
    best.oracle_match = std::abs(best.energy - oracle.value) <= 1e-9 * (1.0 + std::abs(oracle.value));
  }
  return best;
}

std::optional<Vector> bqp_big_input_rule(const BooleanQPSpec& spec) {
  const std::size_t n = spec.Q.size();
  if (spec.f.size() != n) throw DimensionMismatch("bqp_big_input_rule: f dimension mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (spec.f[i] == 0.0) return std::nullopt;
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(spec.Q(i, j));
    if (!(std::abs(spec.f[i]) > row)) return std::nullopt;
  }
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = spec.f[i] > 0.0 ? 1.0 : 0.0;
  return x;
}

// --- max cut -------------------------------------------------------------------

void MaxCutSpec::validate() const {
  const std::size_t n = weights.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (weights(i, i) != 0.0) throw InvalidInput("max cut: diagonal weights must be zero");
    for (std::size_t j = 0; j < n; ++j)
      if (weights(i, j) < 0.0) throw InvalidInput("max cut: weights must be nonnegative");
  }
}

QuadraticCanonicalProblem build_max_cut(const MaxCutSpec& spec, double epsilon) {
  spec.validate();
  if (epsilon < 0.0) throw InvalidInput("max cut: epsilon must be nonnegative");
  const std::size_t n = spec.weights.size();
  QuadraticCanonicalProblem p;
  p.n = n;
  p.A = SymMatrix(n);
  p.A.add_scaled(spec.weights, 0.5);  // 1/2 x^T A x = 1/4 x^T W x
  // Graded linear perturbation: a uniform direction is invariant under vertex
  // permutations and cannot split the tied cut optima, so the components are
  // staggered deterministically.
  p.f.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    p.f[i] = -epsilon * (1.0 + static_cast<double>(i) / static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    CanonicalMeasure m;
    m.H = SymMatrix(n);
    m.H.set(k, k, 2.0);
    m.b = Vector(n, 0.0);
    m.c = -1.0;  // xi_k = x_k^2 - 1
    p.measures.push_back(std::move(m));
  }
  p.phi = CanonicalFunction::zero_indicator(n);
  p.name = "max_cut";
  return p;
}

double cut_value(const MaxCutSpec& spec, const std::vector<int>& signs) {
  const std::size_t n = spec.weights.size();
  if (signs.size() != n) throw DimensionMismatch("cut_value: sign vector size");
  double cut = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (signs[i] != signs[j]) cut += spec.weights(i, j);
  return cut;
}

std::vector<int> round_signs(const Vector& x) {
  std::vector<int> s(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) s[i] = x[i] >= 0.0 ? 1 : -1;
  return s;
}

double max_cut_oracle(const MaxCutSpec& spec) {
  spec.validate();
  SymMatrix Q(spec.weights.size());
  Q.add_scaled(spec.weights, 0.5);
  const auto bf = brute_force_binary(Q, Vector(spec.weights.size(), 0.0),
                                     BinaryDomain::PlusMinusOne);
  return cut_value(spec, round_signs(bf.argmin));
}

MaxCutResult solve_max_cut(const MaxCutSpec& spec, double epsilon, const SolverOptions& opts) {
  const QuadraticCanonicalProblem p = build_max_cut(spec, epsilon);
  MaxCutResult out;
  out.cut = -1.0;

  SolveReport interior = maximize_dual_on_Splus(p, opts);
  out.no_interior_stationary = interior.no_interior_stationary;

  bool pert_won = false;
  auto consider = [&](const Vector& chi, bool from_pert) {
    if (chi.size() != p.n) return;
    const auto signs = round_signs(chi);
    const double c = cut_value(spec, signs);
    if (c > out.cut) {
      out.cut = c;
      out.signs = signs;
      pert_won = from_pert;
    }
  };
  consider(interior.primal, false);

  // Deterministic sweep of proximal annealing schedules; every outer iterate
  // of every run is a rounding candidate.  Different basins surface under
  // different cooling rates, so the sweep matters more than any single run.
  const std::pair<double, double> anneal[] = {
      {0.1, 0.5}, {0.1, 0.75}, {0.5, 0.9}, {2.0, 0.9}, {8.0, 0.5}};
  SolveReport pert;
  bool have_pert = false;
  for (const auto& [d0, shrink] : anneal) {
    PerturbationSchedule sched;
    sched.delta0 = d0;
    sched.delta_shrink = shrink;
    sched.max_outer = 200;
    SolveReport run = perturbed_primal_dual(
        p, sched, Vector(p.n, 0.0), opts,
        [&](int, const Vector& chi) { consider(chi, true); });
    consider(run.primal, true);
    if (!have_pert || run.gap < pert.gap) {
      pert = std::move(run);
      have_pert = true;
    }
  }

  if (out.signs.empty()) {
    out.signs.assign(p.n, 1);
    out.cut = cut_value(spec, out.signs);
  }
  out.report = pert_won ? std::move(pert) : std::move(interior);
  out.report.no_interior_stationary = out.no_interior_stationary;
  return out;
}

std::pair<BooleanQPSpec, double> bqp_from_max_cut(const MaxCutSpec& spec) {
  // x = 2u - 1 maps 1/4 x^T W x onto 1/2 u^T (2W) u - (W 1)^T u + 1/4 1^T W 1.
  const std::size_t n = spec.weights.size();
  BooleanQPSpec b;
  b.Q = SymMatrix(n);
  b.Q.add_scaled(spec.weights, 2.0);
  b.f = spec.weights.matvec(Vector(n, 1.0));
  double c = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c += spec.weights(i, j);
  return {std::move(b), 0.25 * c};
}

// --- distance geometry ----------------------------------------------------------

std::vector<Vector> DistanceGeometryProblem::positions(const Vector& chi) const {
  std::vector<Vector> pos(coordinate_index.size());
  for (std::size_t s = 0; s < coordinate_index.size(); ++s) {
    pos[s] = fixed_values[s];
    for (std::size_t t = 0; t < coordinate_index[s].size(); ++t)
      if (coordinate_index[s][t] >= 0) pos[s][t] = chi[coordinate_index[s][t]];
  }
  return pos;
}

DistanceGeometryProblem build_distance_geometry(const DistanceGeometrySpec& spec) {
  const std::size_t d = spec.dimension;
  if (d == 0 || spec.sensors == 0) throw InvalidInput("distance geometry: empty geometry");
  for (const auto& a : spec.anchors)
    if (a.size() != d) throw DimensionMismatch("distance geometry: anchor dimension");
  if (spec.anchors.empty() && !spec.gauge_fix)
    throw UnderdeterminedGauge("distance geometry: no anchors and gauge not fixed");

  DistanceGeometryProblem out;
  out.coordinate_index.assign(spec.sensors, std::vector<int>(d, -1));
  out.fixed_values.assign(spec.sensors, Vector(d, 0.0));
  int next = 0;
  for (std::size_t s = 0; s < spec.sensors; ++s)
    for (std::size_t t = 0; t < d; ++t) {
      const bool pinned = spec.gauge_fix && (s == 0 || (s == 1 && t >= 1));
      if (!pinned) out.coordinate_index[s][t] = next++;
    }
  const std::size_t n = static_cast<std::size_t>(next);
  if (n == 0) throw InvalidInput("distance geometry: gauge fixing left no free coordinates");

  QuadraticCanonicalProblem& p = out.problem;
  p.n = n;
  p.A = SymMatrix(n);
  p.f = Vector(n, 0.0);
  Vector weights;

  const std::size_t node_count = spec.sensors + spec.anchors.size();
  for (const auto& e : spec.edges) {
    if (e.i >= node_count || e.j >= node_count || e.i == e.j)
      throw InvalidInput("distance geometry: edge references invalid nodes");
    if (!(e.weight > 0.0)) throw InvalidInput("distance geometry: weights must be positive");
    if (!(e.target > 0.0)) throw InvalidInput("distance geometry: targets must be positive");

    CanonicalMeasure m;
    m.H = SymMatrix(n);
    m.b = Vector(n, 0.0);
    m.c = -e.target;
    for (std::size_t t = 0; t < d; ++t) {
      // endpoint coordinate: free index or fixed value
      auto coord = [&](std::size_t node) -> std::pair<int, double> {
        if (node < spec.sensors)
          return {out.coordinate_index[node][t], out.fixed_values[node][t]};
        return {-1, spec.anchors[node - spec.sensors][t]};
      };
      const auto [pi_, pv] = coord(e.i);
      const auto [qi_, qv] = coord(e.j);
      if (pi_ >= 0 && qi_ >= 0) {
        m.H.add(pi_, pi_, 2.0);
        m.H.add(qi_, qi_, 2.0);
        m.H.add(pi_, qi_, -2.0);
      } else if (pi_ >= 0) {
        m.H.add(pi_, pi_, 2.0);
        m.b[pi_] += -2.0 * qv;
        m.c += qv * qv;
      } else if (qi_ >= 0) {
        m.H.add(qi_, qi_, 2.0);
        m.b[qi_] += -2.0 * pv;
        m.c += pv * pv;
      } else {
        const double diff = pv - qv;
        m.c += diff * diff;
      }
    }
    p.measures.push_back(std::move(m));
    weights.push_back(2.0 * e.weight);  // Phi_e = 1/2 (2 w_e) xi^2 = w_e xi^2
  }
  p.phi = CanonicalFunction::shifted_quadratic(std::move(weights));
  p.name = "distance_geometry";
  return out;
}

// --- two-surface minimal distance ------------------------------------------------

namespace {

struct TwoSurfaceSystem {
  Vector c;
  Vector f;

  Vector residual(const Vector& z) const {
    const double x0 = z[0], x1 = z[1], y0 = z[2], y1 = z[3];
    const double lam = z[4], mu = z[5], sig = z[6];
    Vector r(7);
    r[0] = (x0 - y0) + lam * x0;
    r[1] = (x1 - y1) + lam * x1;
    r[2] = (y0 - x0) + sig * (y0 - c[0]) - mu * f[0];
    r[3] = (y1 - x1) + sig * (y1 - c[1]) - mu * f[1];
    r[4] = 0.5 * (x0 * x0 + x1 * x1 - 1.0);
    r[5] = (0.5 * ((y0 - c[0]) * (y0 - c[0]) + (y1 - c[1]) * (y1 - c[1])) - 1.0) - sig / mu;
    r[6] = sig * sig / (2.0 * mu * mu) - (f[0] * (y0 - c[0]) + f[1] * (y1 - c[1]));
    return r;
  }

  std::vector<Vector> jacobian(const Vector& z) const {
    const double x0 = z[0], x1 = z[1], y0 = z[2], y1 = z[3];
    const double lam = z[4], mu = z[5], sig = z[6];
    std::vector<Vector> J(7, Vector(7, 0.0));
    J[0] = {1.0 + lam, 0.0, -1.0, 0.0, x0, 0.0, 0.0};
    J[1] = {0.0, 1.0 + lam, 0.0, -1.0, x1, 0.0, 0.0};
    J[2] = {-1.0, 0.0, 1.0 + sig, 0.0, 0.0, -f[0], y0 - c[0]};
    J[3] = {0.0, -1.0, 0.0, 1.0 + sig, 0.0, -f[1], y1 - c[1]};
    J[4] = {x0, x1, 0.0, 0.0, 0.0, 0.0, 0.0};
    J[5] = {0.0, 0.0, y0 - c[0], y1 - c[1], 0.0, sig / (mu * mu), -1.0 / mu};
    J[6] = {0.0, 0.0, -f[0], -f[1], 0.0, -sig * sig / (mu * mu * mu), sig / (mu * mu)};
    return J;
  }
};

double h_value(const TwoSurfaceSpec& spec, const Vector& f, const Vector& y) {
  const double z0 = y[0] - spec.c[0], z1 = y[1] - spec.c[1];
  const double zeta = 0.5 * (z0 * z0 + z1 * z1) - 1.0;
  return 0.5 * zeta * zeta - (f[0] * z0 + f[1] * z1);
}

}  // namespace

TwoSurfaceResult solve_two_surface(const TwoSurfaceSpec& spec, const SolverOptions& opts) {
  (void)opts;
  if (spec.c.size() != 2 || spec.f.size() != 2)
    throw DimensionMismatch("two surface: the instance is two-dimensional");
  TwoSurfaceSystem sys;
  sys.c = spec.c;
  sys.f = {spec.f[0], spec.f[1] + spec.perturbation};

  TwoSurfaceResult out;
  auto try_seed = [&](Vector z) {
    for (int iter = 0; iter < 200; ++iter) {
      Vector r = sys.residual(z);
      const double merit = dot(r, r);
      if (merit <= 1e-22) break;
      Vector d;
      if (!lu_solve(sys.jacobian(z), scaled(r, -1.0), d)) return;
      double t = 1.0;
      bool ok = false;
      while (t >= 1e-12) {
        Vector zn = axpy(t, d, z);
        if (std::abs(zn[5]) >= 1e-8) {  // mu must stay away from zero
          Vector rn = sys.residual(zn);
          if (dot(rn, rn) <= merit * (1.0 - 0.25 * t)) {
            z = std::move(zn);
            ok = true;
            break;
          }
        }
        t *= 0.5;
      }
      if (!ok) return;
    }
    Vector r = sys.residual(z);
    if (norm2(r) > 1e-9) return;

    TwoSurfaceSolution sol;
    sol.x = {z[0], z[1]};
    sol.y = {z[2], z[3]};
    sol.lambda_g = z[4];
    sol.mu = z[5];
    sol.sigma = z[6];
    const double dx0 = z[0] - z[2], dx1 = z[1] - z[3];
    sol.objective = 0.5 * (dx0 * dx0 + dx1 * dx1);
    sol.residual_g = std::abs(0.5 * (z[0] * z[0] + z[1] * z[1] - 1.0));
    sol.residual_h = std::abs(h_value(spec, sys.f, sol.y));
    sol.stationarity = norm2(r);
    SymMatrix Hchi(4);
    Hchi.set(0, 0, 1.0 + sol.lambda_g);
    Hchi.set(1, 1, 1.0 + sol.lambda_g);
    Hchi.set(2, 2, 1.0 + sol.sigma);
    Hchi.set(3, 3, 1.0 + sol.sigma);
    Hchi.set(0, 2, -1.0);
    Hchi.set(1, 3, -1.0);
    sol.chi_block = classify_definiteness(Hchi, 1e-10).kind;

    for (const auto& other : out.solutions) {
      if (norm2(axpy(-1.0, other.x, sol.x)) + norm2(axpy(-1.0, other.y, sol.y)) < 1e-6) return;
    }
    out.solutions.push_back(std::move(sol));
  };

  constexpr double kPi = 3.141592653589793;
  for (int k = 0; k < 8; ++k) {
    const double phi = 2.0 * kPi * k / 8.0;
    const Vector u = {std::cos(phi), std::sin(phi)};
    const double s = sys.f[0] * u[0] + sys.f[1] * u[1];
    for (int branch = 0; branch < 2; ++branch) {
      double rr = std::sqrt(2.0);
      if (s > 0.0) {
        for (int it = 0; it < 40; ++it) {
          const double inner = std::sqrt(std::max(2.0 * rr * s, 0.0));
          const double arg = branch == 0 ? 1.0 + inner : 1.0 - inner;
          if (arg <= 0.0) break;
          rr = std::sqrt(2.0 * arg);
        }
      }
      Vector y = {spec.c[0] + rr * u[0], spec.c[1] + rr * u[1]};
      const double ny = std::sqrt(y[0] * y[0] + y[1] * y[1]);
      if (ny < 1e-12) continue;
      Vector x = {y[0] / ny, y[1] / ny};
      const double zeta =
          0.5 * ((y[0] - spec.c[0]) * (y[0] - spec.c[0]) + (y[1] - spec.c[1]) * (y[1] - spec.c[1])) -
          1.0;
      for (double mu0 : {1.0, -1.0}) {
        Vector z = {x[0], x[1], y[0], y[1], ny - 1.0, mu0,
                    mu0 * (std::abs(zeta) > 1e-6 ? zeta : 1e-3)};
        try_seed(std::move(z));
      }
    }
  }

  std::sort(out.solutions.begin(), out.solutions.end(),
            [](const TwoSurfaceSolution& a, const TwoSurfaceSolution& b) {
              if (a.objective != b.objective) return a.objective < b.objective;
              return a.y < b.y;
            });
  return out;
}

double two_surface_grid_oracle(const TwoSurfaceSpec& spec, std::size_t samples) {
  const Vector f = {spec.f[0], spec.f[1] + spec.perturbation};
  double best = std::numeric_limits<double>::infinity();
  constexpr double kPi = 3.141592653589793;
  for (std::size_t k = 0; k < samples; ++k) {
    const double phi = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(samples);
    const Vector u = {std::cos(phi), std::sin(phi)};
    const double s = f[0] * u[0] + f[1] * u[1];
    if (s < 0.0) continue;
    for (int branch = 0; branch < 2; ++branch) {
      double rr = std::sqrt(2.0);
      bool valid = true;
      for (int it = 0; it < 60; ++it) {
        const double inner = std::sqrt(std::max(2.0 * rr * s, 0.0));
        const double arg = branch == 0 ? 1.0 + inner : 1.0 - inner;
        if (arg <= 0.0) {
          valid = false;
          break;
        }
        rr = std::sqrt(2.0 * arg);
      }
      if (!valid) continue;
      const Vector y = {spec.c[0] + rr * u[0], spec.c[1] + rr * u[1]};
      if (std::abs(h_value(spec, f, y)) > 1e-8) continue;
      const double ny = std::sqrt(y[0] * y[0] + y[1] * y[1]);
      // nearest point of the unit circle to y is y/|y|, exactly
      const double val = 0.5 * (ny - 1.0) * (ny - 1.0);
      best = std::min(best, val);
    }
  }
  return best;
}

// --- least-squares dynamics ---------------------------------------------------------

namespace {

double logistic(double rate, double chi) { return rate * chi * (1.0 - chi); }

}  // namespace

Vector dynamics_forward_trajectory(const DynamicsSpec& spec) {
  if (spec.steps == 0) throw InvalidInput("dynamics: steps must be >= 1");
  const double h = spec.horizon / static_cast<double>(spec.steps);
  if (!(h > 0.0)) throw InvalidInput("dynamics: step size must be positive");
  Vector traj(spec.steps + 1);
  traj[0] = spec.chi0;
  for (std::size_t k = 1; k <= spec.steps; ++k)
    traj[k] = traj[k - 1] + h * logistic(spec.rate, traj[k - 1]);
  return traj;
}

Vector DynamicsProblem::trajectory(const Vector& chi) const {
  Vector full(pinned_values.size());
  full[0] = pinned_values[0];
  for (std::size_t k = 1; k < full.size(); ++k)
    full[k] = index_of_step[k - 1] >= 0 ? chi[index_of_step[k - 1]] : pinned_values[k];
  return full;
}

DynamicsProblem build_dynamics_least_squares(const DynamicsSpec& spec) {
  if (spec.steps == 0) throw InvalidInput("dynamics: steps must be >= 1");
  const double h = spec.horizon / static_cast<double>(spec.steps);
  if (!(h > 0.0)) throw InvalidInput("dynamics: step size must be positive");
  const double r = spec.rate;
  const std::size_t nsteps = spec.steps;

  DynamicsProblem out;
  out.index_of_step.assign(nsteps, -1);
  out.pinned_values.assign(nsteps + 1, std::numeric_limits<double>::quiet_NaN());
  out.pinned_values[0] = spec.chi0;
  int next = 0;
  for (std::size_t k = 1; k <= nsteps; ++k) {
    if (k == nsteps && spec.chi_end.has_value()) {
      out.pinned_values[k] = *spec.chi_end;
    } else {
      out.index_of_step[k - 1] = next++;
    }
  }
  const std::size_t n = static_cast<std::size_t>(next);
  if (n == 0) throw UnsupportedProblem("dynamics: no free unknowns");

  QuadraticCanonicalProblem& p = out.problem;
  p.n = n;
  p.A = SymMatrix(n);
  p.f = Vector(n, 0.0);
  // residual_k = chi_k - (1 + h r) chi_{k-1} + h r chi_{k-1}^2, the forward
  // recursion defect; it is itself the quadratic canonical measure.
  for (std::size_t k = 1; k <= nsteps; ++k) {
    CanonicalMeasure m;
    m.H = SymMatrix(n);
    m.b = Vector(n, 0.0);
    m.c = 0.0;

    const int cur = out.index_of_step[k - 1];
    if (cur >= 0)
      m.b[cur] += 1.0;
    else
      m.c += out.pinned_values[k];

    const int prev = k >= 2 ? out.index_of_step[k - 2] : -1;
    if (prev >= 0) {
      m.b[prev] += -(1.0 + h * r);
      m.H.add(prev, prev, 2.0 * h * r);
    } else {
      const double v = out.pinned_values[k - 1];
      m.c += -(1.0 + h * r) * v + h * r * v * v;
    }
    p.measures.push_back(std::move(m));
  }
  p.phi = CanonicalFunction::shifted_quadratic(Vector(nsteps, 1.0));
  p.name = "dynamics_lsq";
  return out;
}

SolveReport solve_dynamics_least_squares(const DynamicsSpec& spec, const SolverOptions& opts) {
  const DynamicsProblem dp = build_dynamics_least_squares(spec);
  const QuadraticCanonicalProblem& p = dp.problem;
  const Vector fwd = dynamics_forward_trajectory(spec);
  Vector base(p.n, 0.0);
  for (std::size_t k = 1; k <= spec.steps; ++k)
    if (dp.index_of_step[k - 1] >= 0) base[dp.index_of_step[k - 1]] = fwd[k];

  std::vector<Vector> starts;
  starts.push_back(base);
  starts.push_back(scaled(base, 0.5));
  starts.push_back(scaled(base, 1.5));
  starts.push_back(scaled(base, -0.5));
  for (double level : {0.0, 0.5, 1.0}) starts.push_back(Vector(p.n, level));
  if (spec.chi_end) {
    // linear ramp from chi0 to the pinned endpoint
    Vector ramp(p.n, 0.0);
    for (std::size_t k = 1; k <= spec.steps; ++k)
      if (dp.index_of_step[k - 1] >= 0)
        ramp[dp.index_of_step[k - 1]] =
            spec.chi0 + (*spec.chi_end - spec.chi0) * static_cast<double>(k) /
                            static_cast<double>(spec.steps);
    starts.push_back(std::move(ramp));
  }
  {
    // seeded jitters widen the coverage; the seed keeps runs reproducible
    std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
    const int extra = std::max(3 * opts.multistart_count, 24);
    for (int t = 0; t < extra; ++t) {
      Vector s = base;
      for (auto& v : s) v += uniform(rng, -1.5, 1.5);
      starts.push_back(std::move(s));
    }
  }

  SolveReport best;
  bool have = false;
  auto offer = [&](const SolveReport& rep) {
    if (rep.primal.size() != p.n) return;
    if (!have || eval_primal(p, rep.primal) < eval_primal(p, best.primal)) {
      best = rep;
      have = true;
    }
  };
  PerturbationSchedule sched;
  for (const auto& chi0 : starts) {
    SolveReport rep = perturbed_primal_dual(p, sched, chi0, opts);
    // Newton polish turns the proximal limit into an exact canonical pair
    if (auto polished = polish_primal_stationary(p, rep.primal, opts)) rep = *polished;
    offer(rep);
  }
  if (!have) best.status = SolveStatus::NoStationaryFound;
  return best;
}

double dynamics_descent_oracle(const DynamicsSpec& spec, int starts, std::uint64_t seed) {
  const DynamicsProblem dp = build_dynamics_least_squares(spec);
  const QuadraticCanonicalProblem& p = dp.problem;
  const double h = spec.horizon / static_cast<double>(spec.steps);
  const double r = spec.rate;
  const std::size_t nsteps = spec.steps;

  auto residuals = [&](const Vector& u, Vector& res, std::vector<Vector>* jac) {
    const Vector traj = dp.trajectory(u);
    res.assign(nsteps, 0.0);
    if (jac) jac->assign(nsteps, Vector(u.size(), 0.0));
    for (std::size_t k = 1; k <= nsteps; ++k) {
      const double prev = traj[k - 1];
      res[k - 1] = traj[k] - prev - h * logistic(r, prev);
      if (jac) {
        const int cur = dp.index_of_step[k - 1];
        if (cur >= 0) (*jac)[k - 1][cur] += 1.0;
        const int pidx = k >= 2 ? dp.index_of_step[k - 2] : -1;
        if (pidx >= 0) (*jac)[k - 1][pidx] += -1.0 - h * r * (1.0 - 2.0 * prev);
      }
    }
  };
  auto objective = [&](const Vector& u) {
    Vector res;
    residuals(u, res, nullptr);
    return 0.5 * dot(res, res);
  };

  // base start: forward trajectory restricted to the free unknowns
  const Vector fwd = dynamics_forward_trajectory(spec);
  Vector base(p.n, 0.0);
  for (std::size_t k = 1; k <= nsteps; ++k)
    if (dp.index_of_step[k - 1] >= 0) base[dp.index_of_step[k - 1]] = fwd[k];

  std::mt19937_64 rng(seed);
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < starts; ++t) {
    Vector u = base;
    if (t > 0)
      for (auto& v : u) v += uniform(rng, -1.5, 1.5);
    double nu = 1e-6;
    for (int it = 0; it < 200; ++it) {
      Vector res;
      std::vector<Vector> J;
      residuals(u, res, &J);
      // normal equations with Levenberg damping
      SymMatrix JTJ(p.n);
      Vector JTr(p.n, 0.0);
      for (std::size_t a = 0; a < p.n; ++a) {
        for (std::size_t b = a; b < p.n; ++b) {
          double s = 0.0;
          for (std::size_t k = 0; k < nsteps; ++k) s += J[k][a] * J[k][b];
          JTJ.set(a, b, s);
        }
        double s = 0.0;
        for (std::size_t k = 0; k < nsteps; ++k) s += J[k][a] * res[k];
        JTr[a] = s;
      }
      if (norm2(JTr) <= 1e-14 * (1.0 + norm2(res))) break;
      JTJ.add_identity(nu);
      Vector d;
      try {
        d = solve_spd(JTJ, JTr);
      } catch (const NotPositiveDefinite&) {
        nu *= 10.0;
        continue;
      }
      const double f0 = 0.5 * dot(res, res);
      Vector un = axpy(-1.0, d, u);
      if (objective(un) < f0) {
        u = std::move(un);
        nu = std::max(nu * 0.3, 1e-12);
      } else {
        nu *= 10.0;
        if (nu > 1e8) break;
      }
    }
    best = std::min(best, objective(u));
  }
  return best;
}

namespace {

double golden_refine(const std::function<double(double)>& fn, double lo, double hi, int iters) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int it = 0; it < iters; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = fn(d);
    }
  }
  return std::min(fc, fd);
}

}  // namespace

double double_well_grid_oracle(const DoubleWellSpec& spec, std::size_t samples) {
  const QuadraticCanonicalProblem p = build_double_well(spec);
  const double fn = norm2(spec.f);
  Vector dir(spec.n, 0.0);
  if (fn > 0.0)
    dir = scaled(spec.f, 1.0 / fn);
  else
    dir[0] = 1.0;
  const double radius = 2.0 * std::sqrt(std::max(2.0 * spec.lambda, 1.0)) + 2.0 * fn / spec.alpha;
  auto line = [&](double t) { return eval_primal(p, scaled(dir, t)); };

  double best = std::numeric_limits<double>::infinity();
  double best_t = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = -radius + 2.0 * radius * static_cast<double>(k) /
                                   static_cast<double>(samples - 1);
    const double v = line(t);
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  const double h = 2.0 * radius / static_cast<double>(samples - 1);
  return std::min(best, golden_refine(line, best_t - 2.0 * h, best_t + 2.0 * h, 60));
}

double distance_geometry_grid_oracle(const DistanceGeometrySpec& spec,
                                     std::size_t samples_per_axis) {
  const DistanceGeometryProblem dg = build_distance_geometry(spec);
  const std::size_t n = dg.problem.n;
  if (n > 2) throw OracleRefused("distance_geometry_grid_oracle: more than 2 free coordinates");

  double radius = 1.0;
  for (const auto& a : spec.anchors)
    for (double v : a) radius = std::max(radius, std::abs(v));
  for (const auto& e : spec.edges) radius = std::max(radius, std::sqrt(e.target));
  radius = 2.0 * radius + 1.0;

  auto value = [&](const Vector& chi) { return eval_primal(dg.problem, chi); };
  double best = std::numeric_limits<double>::infinity();
  Vector best_chi(n, 0.0);
  const std::size_t steps = samples_per_axis;
  if (n == 1) {
    for (std::size_t i = 0; i < steps; ++i) {
      const double x = -radius + 2.0 * radius * static_cast<double>(i) / (steps - 1);
      const double v = value({x});
      if (v < best) {
        best = v;
        best_chi = {x};
      }
    }
  } else {
    for (std::size_t i = 0; i < steps; ++i)
      for (std::size_t j = 0; j < steps; ++j) {
        const double x = -radius + 2.0 * radius * static_cast<double>(i) / (steps - 1);
        const double y = -radius + 2.0 * radius * static_cast<double>(j) / (steps - 1);
        const double v = value({x, y});
        if (v < best) {
          best = v;
          best_chi = {x, y};
        }
      }
  }
  // local polish with coordinate-wise golden sections
  const double h = 2.0 * radius / static_cast<double>(steps - 1);
  for (int round = 0; round < 4; ++round) {
    for (std::size_t axis = 0; axis < n; ++axis) {
      Vector probe = best_chi;
      auto line = [&](double t) {
        probe[axis] = t;
        return value(probe);
      };
      const double center = best_chi[axis];
      (void)golden_refine(line, center - 2.0 * h, center + 2.0 * h, 50);
      // keep the best point the refinement visited
      for (double t : {center - h, center - h / 4, center, center + h / 4, center + h}) {
        const double v = line(t);
        if (v < best) {
          best = v;
          best_chi[axis] = t;
        }
      }
      double lo = best_chi[axis] - 2.0 * h, hi = best_chi[axis] + 2.0 * h;
      constexpr double kInvPhi = 0.6180339887498949;
      double c = hi - kInvPhi * (hi - lo), dpt = lo + kInvPhi * (hi - lo);
      for (int it = 0; it < 60; ++it) {
        if (line(c) < line(dpt)) {
          hi = dpt;
          dpt = c;
          c = hi - kInvPhi * (hi - lo);
        } else {
          lo = c;
          c = dpt;
          dpt = lo + kInvPhi * (hi - lo);
        }
      }
      const double t = 0.5 * (lo + hi);
      if (line(t) < best) {
        best = line(t);
        best_chi[axis] = t;
      }
    }
  }
  return best;
}

}  // namespace cdk::problems
