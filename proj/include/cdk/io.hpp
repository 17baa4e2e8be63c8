#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdk/beam.hpp"
#include "cdk/problems.hpp"

namespace cdk::io {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitHardCase = 2;     // Boundary / NoInteriorStationaryPoint
inline constexpr int kExitNoConvergence = 3;
inline constexpr int kExitInputError = 64;
inline constexpr int kExitRefused = 65;

/// Parsed problem file: family tag plus the family payload, optional
/// perturbation and solver blocks.  Exactly one family block per file.
struct LoadedProblem {
  std::string family;
  std::uint64_t digest = 0;

  problems::DoubleWellSpec double_well;
  problems::BooleanQPSpec boolean_qp;
  problems::MaxCutSpec max_cut;
  problems::DistanceGeometrySpec distance_geometry;
  problems::TwoSurfaceSpec two_surface;
  problems::DynamicsSpec dynamics;
  beam::BeamModel beam_model;
  beam::BeamMesh beam_mesh;
  double beam_lambda_ratio = 0.0;  // > 0: lambda given as multiple of lambda_c
  QuadraticCanonicalProblem raw_canonical;

  std::optional<Vector> perturb_direction;
  double perturb_magnitude = 0.0;
  SolverOptions solver;

  /// The engine problem for families that reduce to one (throws for
  /// two_surface; beam resolves lambda_ratio through the mesh pencil).
  QuadraticCanonicalProblem engine_problem() const;
  beam::BeamModel resolved_beam_model() const;
};

LoadedProblem parse_problem_json(const json& j);
LoadedProblem load_problem_file(const std::string& path);

std::uint64_t fnv1a64(const std::string& bytes);

struct OracleBlock {
  double solver_value = 0.0;
  double oracle_value = 0.0;
  double abs_gap = 0.0;
  double rel_gap = 0.0;
  bool match = false;
};

struct ResultRecord {
  std::uint64_t digest = 0;
  std::string family;
  std::string route;
  Vector primal;
  Vector dual;
  double pi = 0.0;
  double pi_dual = 0.0;
  double gap = 0.0;
  std::string triality;
  double margin = 0.0;
  double residual_primal = 0.0;
  double residual_dual = 0.0;
  int iterations = 0;
  double wall_time_ms = 0.0;
  std::string status;
  std::vector<std::string> flags;
  std::optional<OracleBlock> oracle;
};

ResultRecord record_from_report(const LoadedProblem& lp, const SolveReport& rep);
json to_json(const ResultRecord& r);
ResultRecord record_from_json(const json& j);
std::string to_csv(const ResultRecord& r);

int exit_code_for(const SolveReport& rep);

}  // namespace cdk::io
