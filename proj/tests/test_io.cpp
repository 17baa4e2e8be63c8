#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "cdk/io.hpp"

using namespace cdk;
using namespace cdk::io;

namespace {

json minimal_double_well() {
  return json{{"version", 1},
              {"family", "double_well"},
              {"double_well", {{"n", 1}, {"alpha", 1.0}, {"lambda", 2.0}, {"f", 0.5}}}};
}

bool bits_equal(double a, double b) {
  std::uint64_t ua, ub;
  std::memcpy(&ua, &a, 8);
  std::memcpy(&ub, &b, 8);
  return ua == ub;
}

}  // namespace

TEST_CASE("parse_problem_json: valid double-well file") {
  const auto lp = parse_problem_json(minimal_double_well());
  CHECK(lp.family == "double_well");
  CHECK(lp.double_well.alpha == 1.0);
  CHECK(lp.double_well.f == Vector{0.5});
  const auto p = lp.engine_problem();
  CHECK(p.n == 1);
  CHECK(p.measures.size() == 1);
}

TEST_CASE("parse_problem_json: validation failures") {
  SUBCASE("missing version") {
    auto j = minimal_double_well();
    j.erase("version");
    CHECK_THROWS_AS(parse_problem_json(j), InvalidInput);
  }
  SUBCASE("unknown version") {
    auto j = minimal_double_well();
    j["version"] = 7;
    CHECK_THROWS_AS(parse_problem_json(j), InvalidInput);
  }
  SUBCASE("two family blocks") {
    auto j = minimal_double_well();
    j["boolean_qp"] = {{"Q", {{1.0}}}, {"f", {0.0}}};
    CHECK_THROWS_AS(parse_problem_json(j), InvalidInput);
  }
  SUBCASE("family tag without matching block") {
    auto j = minimal_double_well();
    j["family"] = "boolean_qp";
    CHECK_THROWS_AS(parse_problem_json(j), InvalidInput);
  }
  SUBCASE("non-finite numbers") {
    auto j = minimal_double_well();
    j["double_well"]["alpha"] = "oops";
    CHECK_THROWS_AS(parse_problem_json(j), InvalidInput);
  }
  SUBCASE("asymmetric matrix") {
    json j{{"version", 1},
           {"family", "boolean_qp"},
           {"boolean_qp", {{"Q", {{1.0, 2.0}, {3.0, 1.0}}}, {"f", {0.0, 0.0}}}}};
    CHECK_THROWS_AS(parse_problem_json(j), InvalidInput);
  }
}

TEST_CASE("parse_problem_json: every family block parses") {
  json bqp{{"version", 1},
           {"family", "boolean_qp"},
           {"boolean_qp", {{"Q", {{-1.0, 0.0}, {0.0, -1.0}}}, {"f", {10.0, -10.0}}}}};
  CHECK(parse_problem_json(bqp).engine_problem().n == 2);

  json mc{{"version", 1},
          {"family", "max_cut"},
          {"max_cut", {{"weights", {{0.0, 1.0}, {1.0, 0.0}}}}}};
  CHECK(parse_problem_json(mc).max_cut.weights.size() == 2);

  json dg{{"version", 1},
          {"family", "distance_geometry"},
          {"distance_geometry",
           {{"dimension", 2},
            {"sensors", 1},
            {"anchors", {{0.0, 0.0}, {2.0, 0.0}}},
            {"edges",
             {{{"i", 0}, {"j", 1}, {"weight", 1.0}, {"d", 1.0}},
              {{"i", 0}, {"j", 2}, {"weight", 1.0}, {"d", 1.0}}}}}}};
  CHECK(parse_problem_json(dg).engine_problem().measures.size() == 2);

  json ts{{"version", 1}, {"family", "two_surface"}, {"two_surface", {{"k", 64}}}};
  CHECK(parse_problem_json(ts).two_surface.perturbation == doctest::Approx(1.0 / 64.0));

  json dyn{{"version", 1},
           {"family", "dynamics_lsq"},
           {"dynamics_lsq",
            {{"r", 2.5}, {"T", 0.5}, {"steps", 5}, {"chi0", 0.2}}}};
  CHECK(parse_problem_json(dyn).engine_problem().measures.size() == 5);

  json bm{{"version", 1},
          {"family", "beam"},
          {"beam", {{"lambda_ratio", 2.0}, {"f", -0.1}, {"elements", 8}}}};
  const auto lp = parse_problem_json(bm);
  CHECK(lp.resolved_beam_model().lambda == doctest::Approx(2.0 * 9.8696).epsilon(1e-3));

  json raw{{"version", 1},
           {"family", "raw_canonical"},
           {"raw_canonical",
            {{"n", 1},
             {"A", {{0.0}}},
             {"f", {0.5}},
             {"measures", {{{"H", {{1.0}}}, {"b", {0.0}}, {"c", -2.0}}}},
             {"phi", {{"kind", "shifted_quadratic"}, {"a", {1.0}}}}}}};
  const auto rlp = parse_problem_json(raw);
  CHECK(eval_primal(rlp.engine_problem(), {2.11491}) == doctest::Approx(-1.02951).epsilon(1e-4));
}

TEST_CASE("perturbation and solver blocks") {
  auto j = minimal_double_well();
  j["perturbation"] = {{"direction", {1.0}}, {"magnitude", 0.25}};
  j["solver"] = {{"epsilon_grad", 1e-10}, {"max_iter", 55}, {"seed", 7}};
  const auto lp = parse_problem_json(j);
  CHECK(lp.engine_problem().f[0] == doctest::Approx(0.75));
  CHECK(lp.solver.eps_grad == 1e-10);
  CHECK(lp.solver.max_iter == 55);
  CHECK(lp.solver.seed == 7);
}

TEST_CASE("ResultRecord round-trip is bit-exact") {
  ResultRecord r;
  r.digest = 0x123456789abcdef0ull;
  r.family = "double_well";
  r.route = "analytic";
  r.primal = {1.0 / 3.0, -0.0, 1e-300, 2.11491};
  r.dual = {0.236417};
  r.pi = -1.0295148646632626;
  r.pi_dual = -1.0295148646632628;
  r.gap = std::abs(r.pi - r.pi_dual);
  r.triality = "GlobalMin";
  r.margin = 0.236417;
  r.residual_primal = 7.401486830834377e-17;
  r.residual_dual = 1.1102230246251565e-16;
  r.iterations = 12;
  r.wall_time_ms = 0.0;
  r.status = "Converged";
  r.flags = {"Boundary"};
  OracleBlock ob;
  ob.solver_value = -1.0295148646632626;
  ob.oracle_value = -1.0295148646632584;
  ob.abs_gap = 4.2e-15;
  ob.rel_gap = 2.1e-15;
  ob.match = true;
  r.oracle = ob;

  const std::string text = to_json(r).dump();
  const auto back = record_from_json(json::parse(text));
  CHECK(back.digest == r.digest);
  for (std::size_t i = 0; i < r.primal.size(); ++i) CHECK(bits_equal(back.primal[i], r.primal[i]));
  CHECK(bits_equal(back.pi, r.pi));
  CHECK(bits_equal(back.pi_dual, r.pi_dual));
  CHECK(bits_equal(back.gap, r.gap));
  CHECK(bits_equal(back.margin, r.margin));
  CHECK(bits_equal(back.residual_primal, r.residual_primal));
  CHECK(bits_equal(back.residual_dual, r.residual_dual));
  CHECK(bits_equal(back.oracle->solver_value, r.oracle->solver_value));
  CHECK(bits_equal(back.oracle->oracle_value, r.oracle->oracle_value));
  CHECK(back.flags == r.flags);
  CHECK(back.status == r.status);
}

TEST_CASE("exit code mapping is exhaustive and mutually exclusive") {
  SolveReport rep;
  rep.status = SolveStatus::Converged;
  rep.triality = TrialityClass::GlobalMin;
  CHECK(exit_code_for(rep) == kExitOk);
  rep.no_interior_stationary = true;
  CHECK(exit_code_for(rep) == kExitHardCase);
  rep.no_interior_stationary = false;
  rep.boundary = true;
  CHECK(exit_code_for(rep) == kExitHardCase);
  rep.boundary = false;
  rep.triality = TrialityClass::Boundary;
  CHECK(exit_code_for(rep) == kExitHardCase);
  rep.triality = TrialityClass::Unclassified;  // stop rule fired, no certificate
  CHECK(exit_code_for(rep) == kExitNoConvergence);
  rep.triality = TrialityClass::GlobalMin;
  rep.status = SolveStatus::BoundaryConverged;
  CHECK(exit_code_for(rep) == kExitHardCase);
  rep.status = SolveStatus::NoInteriorPoint;
  CHECK(exit_code_for(rep) == kExitHardCase);
  for (auto s : {SolveStatus::MaxIterations, SolveStatus::LeftCone,
                 SolveStatus::NoStationaryFound, SolveStatus::NotRun})
    CHECK((rep.status = s, exit_code_for(rep)) == kExitNoConvergence);
}

TEST_CASE("digest is stable and input-sensitive") {
  const auto a = parse_problem_json(minimal_double_well());
  const auto b = parse_problem_json(minimal_double_well());
  CHECK(a.digest == b.digest);
  auto j = minimal_double_well();
  j["double_well"]["f"] = 0.25;
  CHECK(parse_problem_json(j).digest != a.digest);
}
