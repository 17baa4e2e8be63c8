#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "cdk/linalg.hpp"

namespace testsupport {

// Deterministic uniform in [lo, hi) from a mt19937_64 stream.  We avoid the
// standard distributions because their output is implementation-defined.
inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline cdk::Vector random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0,
                                 double hi = 1.0) {
  cdk::Vector v(n);
  for (auto& x : v) x = uniform(rng, lo, hi);
  return v;
}

inline cdk::SymMatrix random_symmetric(std::mt19937_64& rng, std::size_t n, double lo = -1.0,
                                       double hi = 1.0) {
  cdk::SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m.set(i, j, uniform(rng, lo, hi));
  return m;
}

// SPD built as L L^T + eps I from a random lower-triangular L.
inline cdk::SymMatrix random_spd(std::mt19937_64& rng, std::size_t n, double eps = 1e-3) {
  std::vector<cdk::Vector> L(n, cdk::Vector(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) L[i][j] = uniform(rng, -1.0, 1.0);
  cdk::SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += L[i][k] * L[j][k];
      m.set(i, j, s);
    }
  m.add_identity(eps);
  return m;
}

inline double reconstruction_error(const cdk::SymMatrix& M, const cdk::EigenDecomposition& e) {
  const std::size_t n = M.size();
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += e.vectors[k][i] * e.values[k] * e.vectors[k][j];
      const double d = s - M(i, j);
      err += d * d;
    }
  return std::sqrt(err);
}

inline double orthonormality_error(const cdk::EigenDecomposition& e) {
  const std::size_t n = e.vectors.size();
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double g = cdk::dot(e.vectors[i], e.vectors[j]) - (i == j ? 1.0 : 0.0);
      err = std::max(err, std::abs(g));
    }
  return err;
}

}  // namespace testsupport
