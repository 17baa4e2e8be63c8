#include "cdk/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace cdk::io {

namespace {

double finite_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw InvalidInput("problem file: " + where + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InvalidInput("problem file: " + where + " must be finite");
  return v;
}

Vector finite_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw InvalidInput("problem file: " + where + " must be an array");
  Vector v;
  v.reserve(j.size());
  for (const auto& x : j) v.push_back(finite_number(x, where));
  return v;
}

SymMatrix finite_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InvalidInput("problem file: " + where + " must be a matrix");
  std::vector<Vector> rows;
  for (const auto& r : j) rows.push_back(finite_vector(r, where));
  try {
    return SymMatrix::from_rows(rows);
  } catch (const InvalidInput&) {
    throw InvalidInput("problem file: " + where + " must be square and symmetric");
  }
}

const std::vector<std::string>& family_names() {
  static const std::vector<std::string> names = {
      "double_well", "boolean_qp",  "max_cut", "distance_geometry",
      "two_surface", "dynamics_lsq", "beam",    "raw_canonical"};
  return names;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

LoadedProblem parse_problem_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("problem file: top level must be an object");
  if (!j.contains("version")) throw InvalidInput("problem file: missing version");
  if (!j["version"].is_number_integer() || j["version"].get<int>() != 1)
    throw InvalidInput("problem file: unrecognized version");
  if (!j.contains("family") || !j["family"].is_string())
    throw InvalidInput("problem file: missing family tag");

  LoadedProblem lp;
  lp.family = j["family"].get<std::string>();
  lp.digest = fnv1a64(j.dump());

  int family_blocks = 0;
  for (const auto& name : family_names())
    if (j.contains(name)) ++family_blocks;
  if (family_blocks != 1 || !j.contains(lp.family))
    throw InvalidInput("problem file: exactly one family block matching the tag is required");

  const json& b = j[lp.family];
  if (!b.is_object()) throw InvalidInput("problem file: family block must be an object");

  if (lp.family == "double_well") {
    auto& s = lp.double_well;
    s.n = b.value("n", 1);
    s.alpha = finite_number(b.at("alpha"), "alpha");
    s.lambda = finite_number(b.at("lambda"), "lambda");
    if (b.at("f").is_number())
      s.f = Vector(s.n, finite_number(b.at("f"), "f"));
    else
      s.f = finite_vector(b.at("f"), "f");
    if (s.f.size() != s.n) throw InvalidInput("problem file: double_well f has wrong length");
  } else if (lp.family == "boolean_qp") {
    lp.boolean_qp.Q = finite_matrix(b.at("Q"), "Q");
    lp.boolean_qp.f = finite_vector(b.at("f"), "f");
    if (lp.boolean_qp.f.size() != lp.boolean_qp.Q.size())
      throw InvalidInput("problem file: boolean_qp dimensions disagree");
  } else if (lp.family == "max_cut") {
    lp.max_cut.weights = finite_matrix(b.at("weights"), "weights");
    lp.max_cut.validate();
  } else if (lp.family == "distance_geometry") {
    auto& s = lp.distance_geometry;
    s.dimension = b.value("dimension", 2);
    s.sensors = b.at("sensors").get<std::size_t>();
    s.gauge_fix = b.value("gauge_fix", false);
    if (b.contains("anchors"))
      for (const auto& a : b["anchors"]) s.anchors.push_back(finite_vector(a, "anchors"));
    for (const auto& e : b.at("edges")) {
      problems::DistanceGeometryEdge edge;
      edge.i = e.at("i").get<std::size_t>();
      edge.j = e.at("j").get<std::size_t>();
      edge.weight = e.value("weight", 1.0);
      edge.target = finite_number(e.at("d"), "edge target");
      s.edges.push_back(edge);
    }
  } else if (lp.family == "two_surface") {
    auto& s = lp.two_surface;
    if (b.contains("c")) s.c = finite_vector(b["c"], "c");
    if (b.contains("f")) s.f = finite_vector(b["f"], "f");
    if (b.contains("k")) {
      const double k = finite_number(b["k"], "k");
      if (k != 0.0) s.perturbation = 1.0 / k;
    }
    if (b.contains("perturbation")) s.perturbation = finite_number(b["perturbation"], "perturbation");
  } else if (lp.family == "dynamics_lsq") {
    auto& s = lp.dynamics;
    s.rate = finite_number(b.at("r"), "r");
    s.horizon = finite_number(b.at("T"), "T");
    s.steps = b.at("steps").get<std::size_t>();
    s.chi0 = finite_number(b.at("chi0"), "chi0");
    if (b.contains("chi_end")) s.chi_end = finite_number(b["chi_end"], "chi_end");
  } else if (lp.family == "beam") {
    auto& m = lp.beam_model;
    m.length = b.value("L", 1.0);
    m.EI = b.value("EI", 1.0);
    m.alphaE = b.value("alphaE", 1.0);
    m.load = b.value("f", 0.0);
    m.bc = beam::bc_from_string(b.value("bc", std::string("simply_supported")));
    lp.beam_mesh.elements = b.value("elements", 30);
    if (b.contains("lambda"))
      m.lambda = finite_number(b["lambda"], "lambda");
    else if (b.contains("lambda_ratio"))
      lp.beam_lambda_ratio = finite_number(b["lambda_ratio"], "lambda_ratio");
    else
      throw InvalidInput("problem file: beam needs lambda or lambda_ratio");
    lp.beam_mesh.validate();
    m.validate();
  } else if (lp.family == "raw_canonical") {
    auto& p = lp.raw_canonical;
    p.n = b.at("n").get<std::size_t>();
    p.A = finite_matrix(b.at("A"), "A");
    p.f = finite_vector(b.at("f"), "f");
    Vector weights;
    for (const auto& m : b.at("measures")) {
      CanonicalMeasure cm;
      cm.H = finite_matrix(m.at("H"), "H");
      cm.b = finite_vector(m.at("b"), "b");
      cm.c = finite_number(m.at("c"), "c");
      p.measures.push_back(std::move(cm));
    }
    const auto& phi = b.at("phi");
    const std::string kind = phi.at("kind").get<std::string>();
    if (kind == "shifted_quadratic") {
      p.phi = CanonicalFunction::shifted_quadratic(finite_vector(phi.at("a"), "phi.a"));
    } else if (kind == "zero_indicator") {
      p.phi = CanonicalFunction::zero_indicator(p.measures.size());
    } else {
      throw InvalidInput("problem file: unknown phi kind");
    }
    p.name = "raw_canonical";
    p.validate();
  } else {
    throw InvalidInput("problem file: unknown family '" + lp.family + "'");
  }

  if (j.contains("perturbation")) {
    const auto& pb = j["perturbation"];
    lp.perturb_magnitude = finite_number(pb.at("magnitude"), "perturbation magnitude");
    if (pb.contains("direction")) lp.perturb_direction = finite_vector(pb["direction"], "direction");
  }
  if (j.contains("solver")) {
    const auto& sb = j["solver"];
    if (sb.contains("epsilon_pd")) lp.solver.eps_pd_base = finite_number(sb["epsilon_pd"], "epsilon_pd");
    if (sb.contains("epsilon_grad")) lp.solver.eps_grad = finite_number(sb["epsilon_grad"], "epsilon_grad");
    if (sb.contains("max_iter")) lp.solver.max_iter = sb["max_iter"].get<int>();
    if (sb.contains("multistart")) lp.solver.multistart_count = sb["multistart"].get<int>();
    if (sb.contains("seed")) lp.solver.seed = sb["seed"].get<std::uint64_t>();
    lp.solver.validate();
  }
  return lp;
}

LoadedProblem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open problem file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("problem file: malformed JSON: ") + e.what());
  }
  return parse_problem_json(j);
}

beam::BeamModel LoadedProblem::resolved_beam_model() const {
  beam::BeamModel m = beam_model;
  if (beam_lambda_ratio > 0.0)
    m.lambda = beam_lambda_ratio * beam::buckling_load_at(m, beam_mesh.elements);
  return m;
}

QuadraticCanonicalProblem LoadedProblem::engine_problem() const {
  QuadraticCanonicalProblem p;
  if (family == "double_well") {
    p = problems::build_double_well(double_well);
  } else if (family == "boolean_qp") {
    p = problems::build_boolean_qp(boolean_qp);
  } else if (family == "max_cut") {
    p = problems::build_max_cut(max_cut, 0.0);
  } else if (family == "distance_geometry") {
    p = problems::build_distance_geometry(distance_geometry).problem;
  } else if (family == "dynamics_lsq") {
    p = problems::build_dynamics_least_squares(dynamics).problem;
  } else if (family == "beam") {
    p = beam::assemble_beam(resolved_beam_model(), beam_mesh).problem;
  } else if (family == "raw_canonical") {
    p = raw_canonical;
  } else {
    throw UnsupportedProblem("no engine reduction for family " + family);
  }
  if (perturb_magnitude != 0.0) {
    Vector dir = perturb_direction ? *perturb_direction : Vector(p.n, 1.0);
    p = linear_perturbation(p, dir, perturb_magnitude);
  }
  return p;
}

ResultRecord record_from_report(const LoadedProblem& lp, const SolveReport& rep) {
  ResultRecord r;
  r.digest = lp.digest;
  r.family = lp.family;
  r.route = rep.route;
  r.primal = rep.primal;
  r.dual = rep.dual;
  r.pi = rep.pi;
  r.pi_dual = rep.pi_dual;
  r.gap = rep.gap;
  r.triality = to_string(rep.triality);
  r.margin = rep.margin;
  r.residual_primal = rep.residual_primal;
  r.residual_dual = rep.residual_dual;
  r.iterations = rep.iterations;
  r.status = to_string(rep.status);
  if (rep.boundary) r.flags.push_back("Boundary");
  if (rep.no_interior_stationary) r.flags.push_back("NoInteriorStationaryPoint");
  if (rep.sigma_zero_face) r.flags.push_back("SigmaZeroFace");
  return r;
}

json to_json(const ResultRecord& r) {
  json j;
  j["digest"] = r.digest;
  j["family"] = r.family;
  j["route"] = r.route;
  j["primal"] = r.primal;
  j["dual"] = r.dual;
  j["pi"] = r.pi;
  j["pi_dual"] = r.pi_dual;
  j["gap"] = r.gap;
  j["triality"] = r.triality;
  j["margin"] = r.margin;
  j["residual_primal"] = r.residual_primal;
  j["residual_dual"] = r.residual_dual;
  j["iterations"] = r.iterations;
  j["wall_time_ms"] = r.wall_time_ms;
  j["status"] = r.status;
  j["flags"] = r.flags;
  if (r.oracle) {
    j["oracle"] = {{"solver_value", r.oracle->solver_value},
                   {"oracle_value", r.oracle->oracle_value},
                   {"abs_gap", r.oracle->abs_gap},
                   {"rel_gap", r.oracle->rel_gap},
                   {"verdict", r.oracle->match ? "MATCH" : "MISMATCH"}};
  }
  return j;
}

ResultRecord record_from_json(const json& j) {
  ResultRecord r;
  r.digest = j.at("digest").get<std::uint64_t>();
  r.family = j.at("family").get<std::string>();
  r.route = j.at("route").get<std::string>();
  r.primal = j.at("primal").get<Vector>();
  r.dual = j.at("dual").get<Vector>();
  r.pi = j.at("pi").get<double>();
  r.pi_dual = j.at("pi_dual").get<double>();
  r.gap = j.at("gap").get<double>();
  r.triality = j.at("triality").get<std::string>();
  r.margin = j.at("margin").get<double>();
  r.residual_primal = j.at("residual_primal").get<double>();
  r.residual_dual = j.at("residual_dual").get<double>();
  r.iterations = j.at("iterations").get<int>();
  r.wall_time_ms = j.at("wall_time_ms").get<double>();
  r.status = j.at("status").get<std::string>();
  r.flags = j.at("flags").get<std::vector<std::string>>();
  if (j.contains("oracle")) {
    OracleBlock ob;
    ob.solver_value = j["oracle"].at("solver_value").get<double>();
    ob.oracle_value = j["oracle"].at("oracle_value").get<double>();
    ob.abs_gap = j["oracle"].at("abs_gap").get<double>();
    ob.rel_gap = j["oracle"].at("rel_gap").get<double>();
    ob.match = j["oracle"].at("verdict").get<std::string>() == "MATCH";
    r.oracle = ob;
  }
  return r;
}

std::string to_csv(const ResultRecord& r) {
  std::ostringstream out;
  out.precision(17);
  out << r.family << ',' << r.route << ',' << r.status << ',' << r.triality << ',' << r.pi << ','
      << r.pi_dual << ',' << r.gap << ',' << r.residual_primal << ',' << r.residual_dual << ','
      << r.iterations;
  return out.str();
}

int exit_code_for(const SolveReport& rep) {
  // the hard-case flags dominate: they tell pipelines the dual stationary
  // point was missing or on the cone boundary, whatever else happened
  if (rep.boundary || rep.no_interior_stationary) return kExitHardCase;
  switch (rep.status) {
    case SolveStatus::Converged:
      // the clean-exit contract is a converged global minimizer
      if (rep.triality == TrialityClass::GlobalMin) return kExitOk;
      if (rep.triality == TrialityClass::Boundary) return kExitHardCase;
      return kExitNoConvergence;
    case SolveStatus::BoundaryConverged:
    case SolveStatus::NoInteriorPoint:
      return kExitHardCase;
    default:
      return kExitNoConvergence;
  }
}

}  // namespace cdk::io
