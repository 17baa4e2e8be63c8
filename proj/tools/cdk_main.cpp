#include <chrono>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdk/beam.hpp"
#include "cdk/io.hpp"
#include "cdk/problems.hpp"
#include "cdk/solvers.hpp"

namespace {

using cdk::SolveReport;
using cdk::SolveStatus;
using cdk::Vector;
using cdk::io::LoadedProblem;
using cdk::io::ResultRecord;
using nlohmann::json;

struct CommonFlags {
  std::string format = "json";
  double tol = 1e-6;
  std::uint64_t seed = 0;
  std::size_t elements = 0;
  double perturb = 0.0;
  bool deterministic = false;
};

void emit(const ResultRecord& rec, const CommonFlags& flags) {
  if (flags.format == "csv")
    std::cout << cdk::io::to_csv(rec) << "\n";
  else
    std::cout << cdk::io::to_json(rec).dump() << "\n";
}

class Timer {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(clock::now() - start_).count();
  }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_ = clock::now();
};

// Solves the loaded problem through the route its family calls for.
SolveReport dispatch_solve(const LoadedProblem& lp, cdk::SolverOptions opts,
                           const CommonFlags& flags, ResultRecord* rec) {
  using namespace cdk;

  if (lp.family == "double_well" && flags.perturb == 0.0 && lp.perturb_magnitude == 0.0) {
    const auto sol = problems::solve_double_well_analytic(lp.double_well);
    const auto p = problems::build_double_well(lp.double_well);
    // the first point is the largest dual root; global when positive
    const auto& pt = sol.points.front();
    SolveReport rep = verify_solution(p, pt.x, {pt.sigma});
    rep.status = SolveStatus::Converged;
    rep.route = "analytic";
    if (sol.symmetric_boundary_case) {
      rep.boundary = true;
      rep.no_interior_stationary = true;
    }
    return rep;
  }

  if (lp.family == "max_cut") {
    const double eps = flags.perturb > 0.0 ? flags.perturb
                       : lp.perturb_magnitude != 0.0 ? std::abs(lp.perturb_magnitude)
                                                     : 0.0;
    auto result = problems::solve_max_cut(lp.max_cut, eps, opts);
    SolveReport rep = result.report;
    if (rec) {
      rec->flags.push_back("cut=" + std::to_string(result.cut));
    }
    return rep;
  }

  if (lp.family == "two_surface") {
    auto spec = lp.two_surface;
    if (flags.perturb != 0.0) spec.perturbation = flags.perturb;
    const auto result = problems::solve_two_surface(spec, opts);
    SolveReport rep;
    rep.route = "perturbed";
    if (result.solutions.empty()) {
      rep.status = SolveStatus::NoStationaryFound;
      return rep;
    }
    const auto& best = result.solutions.front();
    rep.status = SolveStatus::Converged;
    rep.primal = {best.x[0], best.x[1], best.y[0], best.y[1]};
    rep.dual = {best.lambda_g, best.mu, best.sigma};
    rep.pi = rep.pi_dual = best.objective;
    rep.gap = 0.0;
    rep.residual_primal = std::max(best.residual_g, best.residual_h);
    rep.residual_dual = best.stationarity;
    rep.triality = best.chi_block == Definiteness::PositiveDefinite ? TrialityClass::GlobalMin
                                                                    : TrialityClass::Unclassified;
    return rep;
  }

  if (lp.family == "beam") {
    const auto model = lp.resolved_beam_model();
    auto branches = beam::solve_three_branches(model, lp.beam_mesh, opts);
    if (branches.branches.empty()) {
      SolveReport rep;
      rep.status = SolveStatus::NoStationaryFound;
      return rep;
    }
    return branches.branches.front();
  }

  if (lp.family == "dynamics_lsq" && flags.perturb == 0.0 && lp.perturb_magnitude == 0.0)
    return problems::solve_dynamics_least_squares(lp.dynamics, opts);

  // engine families: double_well (perturbed), boolean_qp, distance_geometry,
  // dynamics_lsq (with perturbations), raw_canonical
  QuadraticCanonicalProblem p = lp.engine_problem();
  if (flags.perturb != 0.0) p = linear_perturbation(p, Vector(p.n, 1.0), flags.perturb);
  Vector chi0(p.n, 0.0);
  if (lp.family == "dynamics_lsq") {
    const auto dp = problems::build_dynamics_least_squares(lp.dynamics);
    const Vector fwd = problems::dynamics_forward_trajectory(lp.dynamics);
    for (std::size_t k = 1; k <= lp.dynamics.steps; ++k)
      if (dp.index_of_step[k - 1] >= 0) chi0[dp.index_of_step[k - 1]] = fwd[k];
  }
  return multistart(p, opts, chi0).best;
}

int cmd_solve(const std::string& path, const CommonFlags& flags) {
  Timer timer;
  LoadedProblem lp = cdk::io::load_problem_file(path);
  cdk::SolverOptions opts = lp.solver;
  if (flags.seed != 0) opts.seed = flags.seed;

  ResultRecord pre;
  SolveReport rep = dispatch_solve(lp, opts, flags, &pre);
  ResultRecord rec = cdk::io::record_from_report(lp, rep);
  rec.flags.insert(rec.flags.end(), pre.flags.begin(), pre.flags.end());
  rec.wall_time_ms = flags.deterministic ? 0.0 : timer.ms();
  emit(rec, flags);
  return cdk::io::exit_code_for(rep);
}

int cmd_oracle(const std::string& path, const CommonFlags& flags) {
  using namespace cdk;
  Timer timer;
  LoadedProblem lp = io::load_problem_file(path);
  SolverOptions opts = lp.solver;

  double solver_value = 0.0;
  double oracle_value = 0.0;
  SolveReport rep;

  if (lp.family == "boolean_qp") {
    if (lp.boolean_qp.Q.size() > 24) throw OracleRefused("boolean_qp oracle limited to n <= 24");
    rep = multistart(lp.engine_problem(), opts).best;
    solver_value = rep.pi;
    oracle_value =
        problems::brute_force_binary(lp.boolean_qp.Q, lp.boolean_qp.f, problems::BinaryDomain::ZeroOne)
            .value;
  } else if (lp.family == "max_cut") {
    if (lp.max_cut.weights.size() > 24) throw OracleRefused("max_cut oracle limited to n <= 24");
    const double eps = flags.perturb > 0.0 ? flags.perturb : std::abs(lp.perturb_magnitude);
    auto result = problems::solve_max_cut(lp.max_cut, eps, opts);
    rep = result.report;
    solver_value = result.cut;
    oracle_value = problems::max_cut_oracle(lp.max_cut);
  } else if (lp.family == "double_well") {
    rep = dispatch_solve(lp, opts, flags, nullptr);
    solver_value = rep.pi;
    oracle_value = problems::double_well_grid_oracle(lp.double_well);
  } else if (lp.family == "distance_geometry") {
    rep = multistart(lp.engine_problem(), opts).best;
    solver_value = rep.pi;
    oracle_value = problems::distance_geometry_grid_oracle(lp.distance_geometry);
  } else if (lp.family == "dynamics_lsq") {
    rep = dispatch_solve(lp, opts, flags, nullptr);
    solver_value = rep.pi;
    oracle_value = problems::dynamics_descent_oracle(lp.dynamics);
  } else if (lp.family == "two_surface") {
    rep = dispatch_solve(lp, opts, flags, nullptr);
    solver_value = rep.pi;
    oracle_value = problems::two_surface_grid_oracle(lp.two_surface);
  } else {
    throw OracleRefused("no oracle for family " + lp.family);
  }

  ResultRecord rec = cdk::io::record_from_report(lp, rep);
  cdk::io::OracleBlock ob;
  ob.solver_value = solver_value;
  ob.oracle_value = oracle_value;
  ob.abs_gap = std::abs(solver_value - oracle_value);
  ob.rel_gap = ob.abs_gap / (1.0 + std::abs(oracle_value));
  ob.match = ob.abs_gap <= flags.tol * (1.0 + std::abs(oracle_value));
  rec.oracle = ob;
  rec.wall_time_ms = flags.deterministic ? 0.0 : timer.ms();
  emit(rec, flags);
  return ob.match ? cdk::io::kExitOk : cdk::io::kExitNoConvergence;
}

int cmd_beam(const std::string& path, const CommonFlags& flags) {
  using namespace cdk;
  Timer timer;
  LoadedProblem lp = io::load_problem_file(path);
  if (lp.family != "beam") throw InvalidInput("beam command needs a beam scenario file");
  if (flags.elements > 0) {
    lp.beam_mesh.elements = flags.elements;
    lp.beam_mesh.validate();
  }
  const auto model = lp.resolved_beam_model();
  const auto assembly = beam::assemble_beam(model, lp.beam_mesh);
  const auto branches = beam::solve_three_branches(model, lp.beam_mesh, lp.solver);

  static const char* kBranchNames[] = {"global_min", "local_min", "local_max"};
  if (flags.format == "csv") {
    std::cout << "x,chi,branch\n";
    std::cout.precision(17);
    for (std::size_t b = 0; b < branches.branches.size(); ++b) {
      const char* name = b < 3 ? kBranchNames[b] : "extra";
      for (const auto& [x, w] : beam::export_deflection(assembly, branches.branches[b].primal, 101))
        std::cout << x << ',' << w << ',' << name << "\n";
    }
    std::cout << "branch,pi,gap,class\n";
    for (std::size_t b = 0; b < branches.branches.size(); ++b) {
      const auto& r = branches.branches[b];
      std::cout << (b < 3 ? kBranchNames[b] : "extra") << ',' << r.pi << ',' << r.gap << ','
                << to_string(r.triality) << "\n";
    }
  } else {
    json out;
    out["lambda_c"] = branches.lambda_c;
    out["post_buckled"] = branches.post_buckled;
    out["branches"] = json::array();
    for (std::size_t b = 0; b < branches.branches.size(); ++b) {
      const auto& r = branches.branches[b];
      json jb;
      jb["name"] = b < 3 ? kBranchNames[b] : "extra";
      jb["pi"] = r.pi;
      jb["pi_dual"] = r.pi_dual;
      jb["gap"] = r.gap;
      jb["class"] = to_string(r.triality);
      jb["status"] = to_string(r.status);
      json table = json::array();
      for (const auto& [x, w] : beam::export_deflection(assembly, r.primal, 101))
        table.push_back({x, w});
      jb["deflection"] = table;
      jb["wall_time_ms"] = flags.deterministic ? 0.0 : timer.ms();
      out["branches"].push_back(jb);
    }
    std::cout << out.dump() << "\n";
  }
  if (branches.branches.empty()) return io::kExitNoConvergence;
  return io::kExitOk;
}

int cmd_classify(const std::string& path, const std::string& point_path,
                 const CommonFlags& flags) {
  using namespace cdk;
  LoadedProblem lp = io::load_problem_file(path);
  QuadraticCanonicalProblem p = lp.engine_problem();

  std::ifstream in(point_path);
  if (!in) throw InvalidInput("cannot open point file: " + point_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("point file: malformed JSON: ") + e.what());
  }
  Vector S;
  if (j.is_array())
    S = j.get<Vector>();
  else if (j.contains("S"))
    S = j["S"].get<Vector>();
  else
    throw InvalidInput("point file: expected an array or an object with key S");
  if (S.size() != p.measures.size())
    throw DimensionMismatch("point file: dual dimension mismatch");

  const auto tri = classify_triality(p, S);
  const auto de = eval_dual(p, S);
  const double gnorm = norm2(dual_gradient(p, S));

  json out;
  out["triality"] = to_string(tri.cls);
  out["margin"] = tri.margin;
  out["pi_dual"] = de.value;
  out["gradient_norm"] = gnorm;
  if (de.boundary) out["flags"] = json::array({"Boundary"});
  if (flags.format == "csv")
    std::cout << to_string(tri.cls) << ',' << tri.margin << ',' << de.value << ',' << gnorm << "\n";
  else
    std::cout << out.dump() << "\n";
  return io::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"canonical duality solver kit"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string path;
  std::string point_path;

  auto add_common = [&](CLI::App* cmd, bool with_point = false) {
    cmd->add_option("file", path, "problem file (JSON)")->required();
    if (with_point) cmd->add_option("point", point_path, "dual point file (JSON)")->required();
    cmd->add_option("--format", flags.format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--tol", flags.tol, "oracle comparison tolerance");
    cmd->add_option("--seed", flags.seed, "solver seed");
    cmd->add_option("--elements", flags.elements, "beam mesh override");
    cmd->add_option("--perturb", flags.perturb, "linear perturbation magnitude");
    cmd->add_flag("--deterministic", flags.deterministic, "suppress wall-clock fields");
  };

  auto* solve = app.add_subcommand("solve", "solve a problem file");
  add_common(solve);
  auto* oracle = app.add_subcommand("oracle", "solve and compare against the family oracle");
  add_common(oracle);
  auto* beam_cmd = app.add_subcommand("beam", "three-branch beam study");
  add_common(beam_cmd);
  auto* classify = app.add_subcommand("classify", "triality classification of a dual point");
  add_common(classify, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(path, flags);
    if (oracle->parsed()) return cmd_oracle(path, flags);
    if (beam_cmd->parsed()) return cmd_beam(path, flags);
    if (classify->parsed()) return cmd_classify(path, point_path, flags);
  } catch (const cdk::OracleRefused& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return cdk::io::kExitRefused;
  } catch (const cdk::InvalidInput& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return cdk::io::kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cdk::io::kExitNoConvergence;
  }
  return cdk::io::kExitInputError;
}
