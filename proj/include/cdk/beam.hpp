#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cdk/core.hpp"
#include "cdk/solvers.hpp"

namespace cdk::beam {

enum class BoundaryCondition { SimplySupported, ClampedClamped };

BoundaryCondition bc_from_string(const std::string& tag);

/// Static post-buckling beam with quartic axial strain energy
///   Pi(w) = int [ 1/2 EI w_xx^2 + alphaE/12 w_x^4 - 1/2 lambda w_x^2 - f w ] dx,
/// the elastic modulus normalized to 1 so lambda and alphaE carry the load
/// and nonlinearity scales directly.
struct BeamModel {
  double length = 1.0;
  double EI = 1.0;
  double alphaE = 1.0;
  double lambda = 0.0;  // axial load measure; buckling at lambda_c
  double load = 0.0;    // constant transverse load f
  BoundaryCondition bc = BoundaryCondition::SimplySupported;

  void validate() const;
};

struct BeamMesh {
  std::size_t elements = 30;

  void validate() const;
};

/// Discretization bundle: the canonical problem on the reduced dof space plus
/// everything needed to map back to nodal deflections.
/// Hermite cubic deflection, one piecewise-constant dual unknown per element;
/// the element measure is the 2-point Gauss average of 1/2 w_x^2 shifted by
/// -3 lambda / (2 alphaE) so the quartic term completes to a square.
struct BeamAssembly {
  QuadraticCanonicalProblem problem;
  BeamModel model;
  std::size_t elements = 0;
  double element_length = 0.0;
  std::vector<int> reduced_index;  // full dof (2 per node) -> reduced index or -1
  SymMatrix K_bending;             // reduced, q^T K q = int EI w_xx^2
  SymMatrix K_geometric;           // reduced, consistent, q^T K q = int w_x^2

  Vector full_dofs(const Vector& reduced) const;
};

BeamAssembly assemble_beam(const BeamModel& model, const BeamMesh& mesh);

/// Smallest generalized eigenvalue of K_b q = lambda K_1 q at a fixed mesh.
double buckling_load_at(const BeamModel& model, std::size_t elements);

/// Mesh-converged Euler load via uniform refinement doubling.
double buckling_load(const BeamModel& model, const BeamMesh& mesh, double rel_tol = 1e-6,
                     std::size_t max_elements = 512);

struct BeamBranches {
  bool post_buckled = false;
  double lambda_c = 0.0;
  // ordered by Pi ascending; three entries past buckling (global, local min,
  // local max), one below
  std::vector<SolveReport> branches;
};

/// Global branch through the canonical dual route (interior maximization,
/// perturbed fallback); the other branches are located by a first-mode
/// amplitude reduction whose stationary amplitudes seed full primal Newton,
/// then mapped to dual points for verification.  mode_seed_sign picks the
/// buckling direction when the load does not (f = 0).
BeamBranches solve_three_branches(const BeamModel& model, const BeamMesh& mesh,
                                  const SolverOptions& opts, double mode_seed_sign = 1.0);

/// Sampled (x, w(x)) pairs by Hermite interpolation of a reduced solution.
std::vector<std::pair<double, double>> export_deflection(const BeamAssembly& assembly,
                                                         const Vector& reduced,
                                                         std::size_t samples);

}  // namespace cdk::beam
