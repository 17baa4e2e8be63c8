#include "cdk/beam.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace cdk::beam {

namespace {

// Hermite cubic shape functions on the unit interval, dofs (w_i, th_i, w_j, th_j).
std::array<double, 4> shape(double s, double len) {
  return {1.0 - 3.0 * s * s + 2.0 * s * s * s, len * (s - 2.0 * s * s + s * s * s),
          3.0 * s * s - 2.0 * s * s * s, len * (-s * s + s * s * s)};
}

std::array<double, 4> shape_dx(double s, double len) {
  return {(-6.0 * s + 6.0 * s * s) / len, 1.0 - 4.0 * s + 3.0 * s * s,
          (6.0 * s - 6.0 * s * s) / len, -2.0 * s + 3.0 * s * s};
}

std::array<double, 4> shape_dxx(double s, double len) {
  return {(-6.0 + 12.0 * s) / (len * len), (-4.0 + 6.0 * s) / len,
          (6.0 - 12.0 * s) / (len * len), (-2.0 + 6.0 * s) / len};
}

constexpr double kGauss2[2] = {0.21132486540518713, 0.7886751345948129};   // 1/2 -+ 1/(2 sqrt 3)
constexpr double kGauss3s[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
constexpr double kGauss3w[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

std::vector<int> make_reduced_index(std::size_t elements, BoundaryCondition bc) {
  const std::size_t full = 2 * (elements + 1);
  std::vector<int> idx(full, -1);
  std::vector<bool> pinned(full, false);
  pinned[0] = true;                  // w at the left end
  pinned[2 * elements] = true;       // w at the right end
  if (bc == BoundaryCondition::ClampedClamped) {
    pinned[1] = true;
    pinned[2 * elements + 1] = true;
  }
  int next = 0;
  for (std::size_t i = 0; i < full; ++i)
    if (!pinned[i]) idx[i] = next++;
  return idx;
}

struct Pencil {
  double lambda_c = 0.0;
  Vector mode;  // reduced first eigenvector
};

Pencil pencil_smallest(const SymMatrix& Kb, const SymMatrix& K1) {
  const std::size_t n = Kb.size();
  auto chol = CholeskyFactor::compute(K1);
  if (!chol) throw NotPositiveDefinite("beam pencil: geometric matrix not positive definite");
  // C = L^{-1} Kb L^{-T}
  std::vector<Vector> W(n);
  Vector col(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = Kb(i, j);
    W[j] = chol->solve_lower(col);  // W holds columns of L^{-1} Kb
  }
  std::vector<Vector> T(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) col[j] = W[j][i];  // row i of L^{-1} Kb
    T[i] = chol->solve_lower(col);
  }
  SymMatrix C(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) C.set(i, j, 0.5 * (T[i][j] + T[j][i]));
  const auto eig = sym_eigen(C);

  Pencil out;
  out.lambda_c = eig.values.front();
  // Recover the mode in original coordinates by shifted inverse iteration on
  // the pencil, seeded with the transformed eigenvector.
  Vector q = eig.vectors.front();
  for (double gap : {1e-6, 1e-4, 1e-2}) {
    const double mu = out.lambda_c * (1.0 - gap);
    SymMatrix Ksh = Kb;
    Ksh.add_scaled(K1, -mu);
    auto shifted = CholeskyFactor::compute(Ksh);
    if (!shifted) continue;
    for (int it = 0; it < 4; ++it) {
      Vector qn = shifted->solve(K1.matvec(q));
      const double nq = norm2(qn);
      if (nq == 0.0) break;
      for (auto& v : qn) v /= nq;
      q = std::move(qn);
    }
    break;
  }
  const double den = K1.quad_form(q);
  if (den > 0.0) out.lambda_c = Kb.quad_form(q) / den;
  out.mode = q;
  return out;
}

struct FullAssembly {
  SymMatrix Kb;   // full space
  SymMatrix K1;   // full space, consistent
  Vector load;    // full space
};

FullAssembly assemble_full(const BeamModel& model, std::size_t elements) {
  const std::size_t full = 2 * (elements + 1);
  const double len = model.length / static_cast<double>(elements);
  FullAssembly out{SymMatrix(full), SymMatrix(full), Vector(full, 0.0)};
  for (std::size_t e = 0; e < elements; ++e) {
    const std::size_t base = 2 * e;
    // bending: integrand quadratic in s, 2-point Gauss exact
    for (double s : kGauss2) {
      const auto b = shape_dxx(s, len);
      for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j)
          out.Kb.add(base + i, base + j, model.EI * 0.5 * len * b[i] * b[j]);
    }
    // geometric: integrand quartic, 3-point Gauss exact
    for (int g = 0; g < 3; ++g) {
      const auto d = shape_dx(kGauss3s[g], len);
      for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j)
          out.K1.add(base + i, base + j, kGauss3w[g] * len * d[i] * d[j]);
    }
    // consistent load for constant f (cubic integrand, 3-point exact)
    for (int g = 0; g < 3; ++g) {
      const auto nsh = shape(kGauss3s[g], len);
      for (int i = 0; i < 4; ++i) out.load[base + i] += model.load * kGauss3w[g] * len * nsh[i];
    }
  }
  return out;
}

SymMatrix reduce(const SymMatrix& M, const std::vector<int>& idx, std::size_t n) {
  SymMatrix R(n);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0) continue;
    for (std::size_t j = i; j < idx.size(); ++j) {
      if (idx[j] < 0) continue;
      R.set(idx[i], idx[j], M(i, j));
    }
  }
  return R;
}

}  // namespace

BoundaryCondition bc_from_string(const std::string& tag) {
  if (tag == "simply_supported") return BoundaryCondition::SimplySupported;
  if (tag == "clamped" || tag == "clamped_clamped") return BoundaryCondition::ClampedClamped;
  throw InvalidInput("beam: unknown boundary condition tag '" + tag + "'");
}

void BeamModel::validate() const {
  if (!(length > 0.0) || !(EI > 0.0) || !(alphaE > 0.0))
    throw InvalidInput("beam: length, EI and alphaE must be positive");
}

void BeamMesh::validate() const {
  if (elements < 2) throw InvalidInput("beam: mesh needs at least 2 elements");
}

Vector BeamAssembly::full_dofs(const Vector& reduced_q) const {
  Vector full(reduced_index.size(), 0.0);
  for (std::size_t i = 0; i < reduced_index.size(); ++i)
    if (reduced_index[i] >= 0) full[i] = reduced_q[reduced_index[i]];
  return full;
}

BeamAssembly assemble_beam(const BeamModel& model, const BeamMesh& mesh) {
  model.validate();
  mesh.validate();
  const std::size_t elements = mesh.elements;
  const double len = model.length / static_cast<double>(elements);

  BeamAssembly out;
  out.model = model;
  out.elements = elements;
  out.element_length = len;
  out.reduced_index = make_reduced_index(elements, model.bc);
  int reduced_n = 0;
  for (int v : out.reduced_index) reduced_n = std::max(reduced_n, v + 1);
  const std::size_t n = static_cast<std::size_t>(reduced_n);

  const FullAssembly full = assemble_full(model, elements);
  out.K_bending = reduce(full.Kb, out.reduced_index, n);
  out.K_geometric = reduce(full.K1, out.reduced_index, n);

  QuadraticCanonicalProblem& p = out.problem;
  p.n = n;
  p.A = out.K_bending;
  p.f.assign(n, 0.0);
  for (std::size_t i = 0; i < out.reduced_index.size(); ++i)
    if (out.reduced_index[i] >= 0) p.f[out.reduced_index[i]] = full.load[i];

  // One measure per element: the 2-point Gauss average of 1/2 w_x^2, shifted
  // so the quartic energy completes to a square.
  const double shift = 1.5 * model.lambda / model.alphaE;
  Vector weights(elements, 2.0 * len * model.alphaE / 3.0);
  for (std::size_t e = 0; e < elements; ++e) {
    CanonicalMeasure m;
    m.H = SymMatrix(n);
    m.b.assign(n, 0.0);
    m.c = -shift;
    const std::size_t base = 2 * e;
    for (double s : kGauss2) {
      const auto d = shape_dx(s, len);
      for (int i = 0; i < 4; ++i) {
        const int gi = out.reduced_index[base + i];
        if (gi < 0) continue;
        for (int j = 0; j < 4; ++j) {
          const int gj = out.reduced_index[base + j];
          if (gj < 0 || gj < gi) continue;
          // H = 1/2 sum_g d d^T so that 1/2 q^T H q = 1/4 sum_g (d^T q)^2
          m.H.add(gi, gj, 0.5 * d[i] * d[j]);
        }
      }
    }
    p.measures.push_back(std::move(m));
  }
  p.phi = CanonicalFunction::shifted_quadratic(std::move(weights));
  p.energy_offset = -0.75 * model.length * model.lambda * model.lambda / model.alphaE;
  p.name = "beam";
  return out;
}

double buckling_load_at(const BeamModel& model, std::size_t elements) {
  model.validate();
  if (elements < 2) throw InvalidInput("beam: mesh needs at least 2 elements");
  const auto idx = make_reduced_index(elements, model.bc);
  int reduced_n = 0;
  for (int v : idx) reduced_n = std::max(reduced_n, v + 1);
  const FullAssembly full = assemble_full(model, elements);
  const SymMatrix Kb = reduce(full.Kb, idx, reduced_n);
  const SymMatrix K1 = reduce(full.K1, idx, reduced_n);
  return pencil_smallest(Kb, K1).lambda_c;
}

double buckling_load(const BeamModel& model, const BeamMesh& mesh, double rel_tol,
                     std::size_t max_elements) {
  mesh.validate();
  std::size_t ne = mesh.elements;
  double prev = buckling_load_at(model, ne);
  while (2 * ne <= max_elements) {
    ne *= 2;
    const double cur = buckling_load_at(model, ne);
    if (std::abs(cur - prev) <= rel_tol * std::abs(cur)) return cur;
    prev = cur;
  }
  return prev;
}

BeamBranches solve_three_branches(const BeamModel& model, const BeamMesh& mesh,
                                  const SolverOptions& opts, double mode_seed_sign) {
  model.validate();
  mesh.validate();
  BeamBranches out;

  BeamAssembly assembly = assemble_beam(model, mesh);
  const QuadraticCanonicalProblem& p = assembly.problem;
  const Pencil pencil = pencil_smallest(assembly.K_bending, assembly.K_geometric);
  out.lambda_c = pencil.lambda_c;
  out.post_buckled = model.lambda > pencil.lambda_c * (1.0 + 1e-8);

  SolverOptions local_opts = opts;
  local_opts.sweep_sminus = false;

  // First-mode amplitude reduction: Pi(A psi) is an even-plus-linear quartic
  // whose stationary amplitudes come from one cubic.
  const Vector& psi = pencil.mode;
  double c3 = 0.0, c1lin = assembly.K_bending.quad_form(psi);
  const double k_f = dot(p.f, psi);
  for (std::size_t e = 0; e < p.measures.size(); ++e) {
    const double u = p.measures[e].H.quad_form(psi);
    const double a = p.phi.a[e];
    c3 += 0.5 * a * u * u;
    c1lin += a * p.measures[e].c * u;
  }
  std::vector<double> amplitudes;
  try {
    const auto roots = real_cubic_roots(c3, 0.0, c1lin, -k_f);
    amplitudes = roots.roots;
  } catch (const DegenerateLeadingCoefficient&) {
    amplitudes = {0.0};
  }
  if (!out.post_buckled) amplitudes = {0.0};
  if (norm2(p.f) == 0.0 && mode_seed_sign < 0.0)
    for (double& a : amplitudes) a = -a;

  // stationarity tolerance scaled to the stiffness of the assembled operator
  const double stiffness = 1.0 + assembly.K_bending.norm_inf();
  auto polish_primal = [&](Vector q) -> std::optional<Vector> {
    const double target = 1e-12 * stiffness * (1.0 + norm2(q));
    for (int it = 0; it < 200; ++it) {
      const Vector g = primal_gradient(p, q);
      if (norm2(g) <= target) return q;
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
    const double reached = norm2(primal_gradient(p, q));
    return reached <= 1e-8 * stiffness * (1.0 + norm2(q)) ? std::optional<Vector>(q)
                                                          : std::nullopt;
  };

  auto branch_report = [&](const Vector& q) {
    const DualPoint S = p.phi.duality_map(eval_measures(p, q));
    SolveReport rep = verify_solution(p, q, S);
    rep.status = SolveStatus::Converged;
    rep.route = "s_minus";
    return rep;
  };

  auto push_branch = [&](SolveReport rep) {
    for (const auto& b : out.branches)
      if (norm2(axpy(-1.0, b.primal, rep.primal)) <= 1e-6 * (1.0 + norm2(rep.primal))) return;
    out.branches.push_back(std::move(rep));
  };

  std::vector<Vector> polished;
  for (double A : amplitudes) {
    auto q = polish_primal(scaled(psi, A));
    if (q) polished.push_back(std::move(*q));
  }

  // Global branch through the canonical dual route; the deepest polished
  // branch backs it up when the dual path stops on the cone boundary.
  std::optional<SolveReport> global;
  SolveReport interior = maximize_dual_on_Splus(p, local_opts);
  if (interior.status == SolveStatus::Converged && interior.gap <= 1e-6 * (1.0 + std::abs(interior.pi)))
    global = interior;
  if (!global) {
    PerturbationSchedule sched;
    Vector seed(p.n, 0.0);
    if (!polished.empty()) {
      seed = polished.front();
      for (const auto& q : polished)
        if (eval_primal(p, q) < eval_primal(p, seed)) seed = q;
    } else if (norm2(p.f) == 0.0) {
      seed = scaled(pencil.mode, mode_seed_sign / std::max(norm_inf(pencil.mode), 1e-30));
    }
    SolveReport pert = perturbed_primal_dual(p, sched, seed, local_opts);
    if (pert.status == SolveStatus::Converged && pert.gap <= 1e-6 * (1.0 + std::abs(pert.pi)))
      global = pert;
  }
  if (global) push_branch(*global);
  for (const auto& q : polished) push_branch(branch_report(q));

  std::sort(out.branches.begin(), out.branches.end(),
            [](const SolveReport& a, const SolveReport& b) { return a.pi < b.pi; });
  return out;
}

std::vector<std::pair<double, double>> export_deflection(const BeamAssembly& assembly,
                                                         const Vector& reduced,
                                                         std::size_t samples) {
  if (samples < 2) throw InvalidInput("export_deflection: need at least 2 samples");
  const Vector full = assembly.full_dofs(reduced);
  const double L = assembly.model.length;
  const double len = assembly.element_length;
  std::vector<std::pair<double, double>> table;
  table.reserve(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const double x = L * static_cast<double>(k) / static_cast<double>(samples - 1);
    std::size_t e = std::min(static_cast<std::size_t>(x / len), assembly.elements - 1);
    const double s = (x - static_cast<double>(e) * len) / len;
    const auto nsh = shape(s, len);
    const std::size_t base = 2 * e;
    double w = 0.0;
    for (int i = 0; i < 4; ++i) w += nsh[i] * full[base + i];
    table.emplace_back(x, w);
  }
  return table;
}

}  // namespace cdk::beam
