// End-to-end tests of the cdk binary: exit-code contract and deterministic
// output, driven through real problem files in a scratch directory.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(CDK_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  while (std::size_t got = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.exit_code = WEXITSTATUS(status);
  return r;
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "cdk_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const json& j) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << j.dump(2);
  return p.string();
}

std::string write_text(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST_CASE("solve: double-well paper file exits 0 with the printed minimum") {
  const auto path = write_file("dw.json",
                               {{"version", 1},
                                {"family", "double_well"},
                                {"double_well",
                                 {{"n", 1}, {"alpha", 1.0}, {"lambda", 2.0}, {"f", 0.5}}}});
  const auto r = run_cli("solve " + path + " --deterministic");
  CHECK(r.exit_code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["pi"].get<double>() == doctest::Approx(-1.02951).epsilon(1e-4));
  CHECK(j["route"] == "analytic");
  CHECK(j["triality"] == "GlobalMin");
}

TEST_CASE("solve: unperturbed max-cut triangle exits 2 with the hard-case flag") {
  const auto path = write_file(
      "tri.json", {{"version", 1},
                   {"family", "max_cut"},
                   {"max_cut", {{"weights", {{0.0, 1.0, 1.0}, {1.0, 0.0, 1.0}, {1.0, 1.0, 0.0}}}}}});
  const auto r = run_cli("solve " + path + " --deterministic");
  CHECK(r.exit_code == 2);
  CHECK(r.out.find("NoInteriorStationaryPoint") != std::string::npos);

  // with a perturbation the rounded iterate attains the oracle cut even
  // though the dual supremum stays on the cone boundary
  const auto r2 = run_cli("solve " + path + " --perturb 1e-3 --deterministic");
  CHECK(r2.out.find("cut=2.000000") != std::string::npos);
}

TEST_CASE("solve: malformed file exits 64") {
  const auto path = write_text("broken.json", "{ not json");
  CHECK(run_cli("solve " + path).exit_code == 64);
  const auto missing = write_file("noversion.json", {{"family", "double_well"}});
  CHECK(run_cli("solve " + missing).exit_code == 64);
  CHECK(run_cli("solve " + scratch_dir().string() + "/does_not_exist.json").exit_code == 64);
}

TEST_CASE("solve: starved iteration budget exits 3") {
  // an indicator-constrained family cannot be rescued by smooth polishing,
  // so one Newton iteration leaves a certificate-free iterate
  const auto path = write_file("starved.json",
                               {{"version", 1},
                                {"family", "boolean_qp"},
                                {"boolean_qp",
                                 {{"Q", {{-1.0, 0.4}, {0.4, -1.0}}}, {"f", {3.0, -3.0}}}},
                                {"solver", {{"max_iter", 1}}}});
  const auto r = run_cli("solve " + path + " --deterministic");
  CHECK(r.exit_code == 3);
}

TEST_CASE("oracle: BQP n=10 matches, n=30 refused") {
  json Q = json::array();
  for (int i = 0; i < 10; ++i) {
    json row = json::array();
    for (int j = 0; j < 10; ++j) row.push_back(i == j ? -1.0 : 0.1);
    Q.push_back(row);
  }
  json f = json::array();
  for (int i = 0; i < 10; ++i) f.push_back(i % 2 ? 2.5 : -2.5);
  const auto path =
      write_file("bqp10.json", {{"version", 1}, {"family", "boolean_qp"},
                                {"boolean_qp", {{"Q", Q}, {"f", f}}}});
  const auto r = run_cli("oracle " + path + " --deterministic");
  CHECK(r.exit_code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["oracle"]["verdict"] == "MATCH");

  json Q30 = json::array();
  for (int i = 0; i < 30; ++i) {
    json row = json::array();
    for (int j = 0; j < 30; ++j) row.push_back(i == j ? 1.0 : 0.0);
    Q30.push_back(row);
  }
  json f30 = json::array();
  for (int i = 0; i < 30; ++i) f30.push_back(1.0);
  const auto big =
      write_file("bqp30.json", {{"version", 1}, {"family", "boolean_qp"},
                                {"boolean_qp", {{"Q", Q30}, {"f", f30}}}});
  CHECK(run_cli("oracle " + big).exit_code == 65);
}

TEST_CASE("oracle: double-well grid comparison matches") {
  const auto path = write_file("dw2.json",
                               {{"version", 1},
                                {"family", "double_well"},
                                {"double_well",
                                 {{"n", 1}, {"alpha", 1.0}, {"lambda", 2.0}, {"f", 0.5}}}});
  const auto r = run_cli("oracle " + path + " --tol 1e-6 --deterministic");
  CHECK(r.exit_code == 0);
  CHECK(json::parse(r.out)["oracle"]["verdict"] == "MATCH");
}

TEST_CASE("beam: three branches above the buckling load, one below, schema bound") {
  const auto path = write_file("beam.json",
                               {{"version", 1},
                                {"family", "beam"},
                                {"beam",
                                 {{"lambda_ratio", 2.0}, {"f", -0.1}, {"elements", 12}}}});
  const auto r = run_cli("beam " + path + " --deterministic");
  CHECK(r.exit_code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["post_buckled"] == true);
  CHECK(j["branches"].size() == 3);
  // Pi ordering of the named branches
  CHECK(j["branches"][0]["pi"].get<double>() <= j["branches"][1]["pi"].get<double>());
  CHECK(j["branches"][1]["pi"].get<double>() <= j["branches"][2]["pi"].get<double>());

  const auto pre = write_file("beam_pre.json",
                              {{"version", 1},
                               {"family", "beam"},
                               {"beam",
                                {{"lambda_ratio", 0.5}, {"f", -0.1}, {"elements", 12}}}});
  const auto r2 = run_cli("beam " + pre + " --deterministic");
  CHECK(r2.exit_code == 0);
  CHECK(json::parse(r2.out)["branches"].size() == 1);

  CHECK(run_cli("beam " + path + " --elements 1").exit_code == 64);
}

TEST_CASE("classify: double-well points") {
  const auto path = write_file("dw3.json",
                               {{"version", 1},
                                {"family", "double_well"},
                                {"double_well",
                                 {{"n", 1}, {"alpha", 1.0}, {"lambda", 2.0}, {"f", 0.5}}}});
  const auto pt = write_text("pt1.json", "[0.236417]");
  const auto r = run_cli("classify " + path + " " + pt + " --deterministic");
  CHECK(r.exit_code == 0);
  CHECK(json::parse(r.out)["triality"] == "GlobalMin");

  const auto sym = write_file("dw0.json",
                              {{"version", 1},
                               {"family", "double_well"},
                               {"double_well",
                                {{"n", 1}, {"alpha", 1.0}, {"lambda", 2.0}, {"f", 0.0}}}});
  const auto pt3 = write_text("pt3.json", "[-2.0]");
  CHECK(json::parse(run_cli("classify " + sym + " " + pt3).out)["triality"] == "LocalMax");
  const auto pt0 = write_text("pt0.json", "[0.0]");
  CHECK(json::parse(run_cli("classify " + sym + " " + pt0).out)["triality"] == "Boundary");

  const auto bad = write_text("ptbad.json", "[0.1, 0.2]");
  CHECK(run_cli("classify " + path + " " + bad).exit_code == 64);
}

TEST_CASE("deterministic flag yields byte-identical output") {
  const auto path = write_file("dw4.json",
                               {{"version", 1},
                                {"family", "double_well"},
                                {"double_well",
                                 {{"n", 1}, {"alpha", 1.0}, {"lambda", 2.0}, {"f", 0.5}}}});
  const auto a = run_cli("solve " + path + " --deterministic --seed 42");
  const auto b = run_cli("solve " + path + " --deterministic --seed 42");
  CHECK(a.out == b.out);
  CHECK(!a.out.empty());
}

TEST_CASE("csv output carries the record fields") {
  const auto path = write_file("dw5.json",
                               {{"version", 1},
                                {"family", "double_well"},
                                {"double_well",
                                 {{"n", 1}, {"alpha", 1.0}, {"lambda", 2.0}, {"f", 0.5}}}});
  const auto r = run_cli("solve " + path + " --format csv --deterministic");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("double_well,analytic,Converged,GlobalMin,") == 0);
}
