#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cdk/linalg.hpp"
#include "support.hpp"

using namespace cdk;
using testsupport::orthonormality_error;
using testsupport::random_spd;
using testsupport::random_symmetric;
using testsupport::random_vector;
using testsupport::reconstruction_error;

TEST_CASE("sym_eigen identity and diagonal") {
  auto e = sym_eigen(SymMatrix::identity(3));
  for (double w : e.values) CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(orthonormality_error(e) < 1e-12);

  auto d = sym_eigen(SymMatrix::diagonal({5.0, -2.0}));
  CHECK(d.values[0] == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(d.values[1] == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("sym_eigen random reconstruction") {
  std::mt19937_64 rng(11);
  auto M = random_symmetric(rng, 8);
  auto e = sym_eigen(M);
  CHECK(reconstruction_error(M, e) <= 1e-10 * M.norm_fro());
  CHECK(orthonormality_error(e) <= 1e-10);
  for (std::size_t i = 0; i + 1 < e.values.size(); ++i) CHECK(e.values[i] <= e.values[i + 1]);
}

TEST_CASE("sym_eigen reconstruction holds up to n=200") {
  std::mt19937_64 rng(12);
  for (std::size_t n : {2u, 5u, 20u, 60u, 200u}) {
    auto M = random_symmetric(rng, n);
    auto e = sym_eigen(M);
    CHECK(reconstruction_error(M, e) <= 1e-10 * M.norm_fro());
    CHECK(orthonormality_error(e) <= 1e-10);
  }
}

TEST_CASE("sym_eigen rejects non-finite input") {
  SymMatrix m(2);
  m.set(0, 1, std::nan(""));
  CHECK_THROWS_AS(sym_eigen(m), InvalidInput);
}

TEST_CASE("classify_definiteness basics") {
  auto r = classify_definiteness(SymMatrix::diagonal({1.0, 2.0}), 1e-9);
  CHECK(r.kind == Definiteness::PositiveDefinite);
  CHECK(r.margin == doctest::Approx(1.0));

  CHECK(classify_definiteness(SymMatrix::diagonal({1.0, -1.0}), 1e-9).kind ==
        Definiteness::Indefinite);
  CHECK(classify_definiteness(SymMatrix::diagonal({-1.0, -2.0}), 1e-9).kind ==
        Definiteness::NegativeDefinite);
  CHECK(classify_definiteness(SymMatrix::diagonal({0.0, 2.0}), 1e-9).kind ==
        Definiteness::PositiveSemidefiniteSingular);
  CHECK(classify_definiteness(SymMatrix::diagonal({0.0, -2.0}), 1e-9).kind ==
        Definiteness::NegativeSemidefiniteSingular);
}

TEST_CASE("classify_definiteness: G(sigma)=Q+2Diag(sigma) assembled directly") {
  // Q = diag(-1,-1), sigma = (1,1) gives eigenvalues (1,1).
  SymMatrix G = SymMatrix::diagonal({-1.0, -1.0});
  G.add_scaled(SymMatrix::diagonal({2.0, 2.0}), 1.0);
  auto r = classify_definiteness(G, 1e-9);
  CHECK(r.kind == Definiteness::PositiveDefinite);
  CHECK(r.margin == doctest::Approx(1.0));
}

TEST_CASE("classify_definiteness mirror property") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 30; ++t) {
    auto M = random_symmetric(rng, 5);
    auto neg = M;
    neg.add_scaled(M, -2.0);  // neg = -M
    const double eps = default_eps_pd(M);
    auto a = classify_definiteness(M, eps).kind;
    auto b = classify_definiteness(neg, eps).kind;
    auto mirror = [](Definiteness d) {
      switch (d) {
        case Definiteness::PositiveDefinite: return Definiteness::NegativeDefinite;
        case Definiteness::PositiveSemidefiniteSingular:
          return Definiteness::NegativeSemidefiniteSingular;
        case Definiteness::Indefinite: return Definiteness::Indefinite;
        case Definiteness::NegativeSemidefiniteSingular:
          return Definiteness::PositiveSemidefiniteSingular;
        case Definiteness::NegativeDefinite: return Definiteness::PositiveDefinite;
      }
      return Definiteness::Indefinite;
    };
    CHECK(b == mirror(a));
  }
}

TEST_CASE("solve_spd basics") {
  CHECK(solve_spd(SymMatrix::identity(3), {1.0, 2.0, 3.0}) == Vector{1.0, 2.0, 3.0});
  auto x = solve_spd(SymMatrix::diagonal({2.0, 4.0}), {2.0, 8.0});
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(solve_spd(SymMatrix::diagonal({1.0, -1.0}), {1.0, 1.0}), NotPositiveDefinite);
}

TEST_CASE("solve_spd agrees with eigen-inverse oracle") {
  std::mt19937_64 rng(31);
  auto M = random_spd(rng, 10);
  auto b = random_vector(rng, 10);
  auto x = solve_spd(M, b);
  // Oracle: invert through the eigen decomposition.
  auto e = sym_eigen(M);
  Vector ref(10, 0.0);
  for (std::size_t i = 0; i < 10; ++i) {
    const double c = dot(e.vectors[i], b) / e.values[i];
    for (std::size_t k = 0; k < 10; ++k) ref[k] += c * e.vectors[i][k];
  }
  for (std::size_t k = 0; k < 10; ++k) CHECK(x[k] == doctest::Approx(ref[k]).epsilon(1e-9));
}

TEST_CASE("solve_spd residual bound on random SPD") {
  std::mt19937_64 rng(32);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng() % 12);
    auto M = random_spd(rng, n);
    auto b = random_vector(rng, n);
    auto x = solve_spd(M, b);
    auto r = axpy(-1.0, M.matvec(x), b);
    CHECK(norm2(r) <= 1e-10 * (M.norm_fro() * norm2(x) + norm2(b)));
  }
}

TEST_CASE("pinv_apply") {
  SUBCASE("zero matrix maps to zero") {
    CHECK(pinv_apply(SymMatrix(3), {1.0, 2.0, 3.0}, 1e-8) == Vector{0.0, 0.0, 0.0});
  }
  SUBCASE("rank-deficient projection") {
    auto x = pinv_apply(SymMatrix::diagonal({1.0, 0.0}), {3.0, 7.0}, 1e-8);
    CHECK(x[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(x[1] == 0.0);
  }
  SUBCASE("matches solve path when nonsingular") {
    std::mt19937_64 rng(41);
    auto M = random_spd(rng, 7);
    auto b = random_vector(rng, 7);
    auto x1 = pinv_apply(M, b, 1e-10);
    auto x2 = solve_spd(M, b);
    for (std::size_t i = 0; i < 7; ++i) CHECK(x1[i] == doctest::Approx(x2[i]).epsilon(1e-9));
  }
}

TEST_CASE("real_cubic_roots: dual algebraic instance") {
  // varsigma^3 + 2 varsigma^2 - 0.125 = 0; its largest root drives the
  // one-dimensional double-well dual.
  auto r = real_cubic_roots(1.0, 2.0, 0.0, -0.125);
  CHECK(r.roots.size() == 3);
  CHECK(r.roots.back() == doctest::Approx(0.236417).epsilon(1e-4));
  // high-precision value from Newton refinement of the same polynomial
  CHECK(r.roots.back() == doctest::Approx(0.23641658).epsilon(1e-6));
  for (std::size_t i = 0; i < r.roots.size(); ++i) {
    const double x = r.roots[i];
    CHECK(std::abs(((x + 2.0) * x * x) - 0.125) <= 1e-9);
  }
}

TEST_CASE("real_cubic_roots: triple root") {
  auto r = real_cubic_roots(1.0, 0.0, 0.0, 0.0);
  REQUIRE(r.roots.size() == 1);
  CHECK(r.roots[0] == 0.0);
  CHECK(r.multiplicity[0] == 3);
}

TEST_CASE("real_cubic_roots: expanded factored form") {
  // (x-1)(x+2)(x+3) = x^3 + 4x^2 + x - 6
  auto r = real_cubic_roots(1.0, 4.0, 1.0, -6.0);
  REQUIRE(r.roots.size() == 3);
  CHECK(r.roots[0] == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(r.roots[1] == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(r.roots[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("real_cubic_roots: degenerate leading coefficient") {
  CHECK_THROWS_AS(real_cubic_roots(0.0, 1.0, 1.0, 1.0), DegenerateLeadingCoefficient);
}

TEST_CASE("real_cubic_roots: random factored cubics recover roots") {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 200; ++t) {
    double r1 = testsupport::uniform(rng, -5.0, 5.0);
    double r2 = testsupport::uniform(rng, -5.0, 5.0);
    double r3 = testsupport::uniform(rng, -5.0, 5.0);
    // keep roots separated so the discriminant stays clearly nonzero
    if (std::abs(r1 - r2) < 0.1 || std::abs(r2 - r3) < 0.1 || std::abs(r1 - r3) < 0.1) continue;
    const double a2 = -(r1 + r2 + r3);
    const double a1 = r1 * r2 + r1 * r3 + r2 * r3;
    const double a0 = -r1 * r2 * r3;
    auto out = real_cubic_roots(1.0, a2, a1, a0);
    REQUIRE(out.roots.size() == 3);
    Vector want = {r1, r2, r3};
    std::sort(want.begin(), want.end());
    for (int i = 0; i < 3; ++i) CHECK(std::abs(out.roots[i] - want[i]) <= 1e-8);
  }
}

TEST_CASE("real_cubic_roots: single real root branch") {
  // x^3 + x + 1: discriminant negative, one real root near -0.6823278
  auto r = real_cubic_roots(1.0, 0.0, 1.0, 1.0);
  REQUIRE(r.roots.size() == 1);
  const double x = r.roots[0];
  CHECK(std::abs(x * x * x + x + 1.0) <= 1e-12);
}
