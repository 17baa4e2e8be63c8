#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cdk/errors.hpp"

namespace cdk {

using Vector = std::vector<double>;

// Small dense-vector helpers shared by every module.
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);
double norm_inf(const Vector& a);
Vector axpy(double alpha, const Vector& x, const Vector& y);  // alpha*x + y
Vector scaled(const Vector& x, double alpha);

/// Dense symmetric matrix, fully stored.  set() writes both triangles so the
/// symmetry invariant holds exactly, never approximately.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  static SymMatrix identity(std::size_t n);
  static SymMatrix diagonal(const Vector& d);
  // Validates symmetry of the given rows exactly; throws InvalidInput otherwise.
  static SymMatrix from_rows(const std::vector<Vector>& rows);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    data_[i * n_ + j] = v;
    data_[j * n_ + i] = v;
  }
  void add(std::size_t i, std::size_t j, double v) {
    data_[i * n_ + j] += v;
    if (i != j) data_[j * n_ + i] += v;
  }

  /// this += alpha * other
  void add_scaled(const SymMatrix& other, double alpha);
  void add_identity(double alpha);

  Vector matvec(const Vector& x) const;
  double quad_form(const Vector& x) const;  // x^T M x

  double norm_fro() const;
  double norm_inf() const;  // induced infinity norm (max absolute row sum)

  bool all_finite() const;

  const double* data() const { return data_.data(); }
  double* data() { return data_.data(); }

 private:
  std::size_t n_ = 0;
  Vector data_;
};

struct EigenDecomposition {
  Vector values;                      // ascending
  std::vector<Vector> vectors;       // vectors[i] pairs with values[i], orthonormal
};

enum class Definiteness {
  PositiveDefinite,
  PositiveSemidefiniteSingular,
  Indefinite,
  NegativeSemidefiniteSingular,
  NegativeDefinite,
};

struct DefinitenessResult {
  Definiteness kind;
  double margin;  // smallest-magnitude relevant eigenvalue
};

const char* to_string(Definiteness d);

/// Cyclic Jacobi eigen decomposition of a symmetric matrix.
/// Eigenvalues ascending; V diag(w) V^T reconstructs M to ~1e-10*|M|.
EigenDecomposition sym_eigen(const SymMatrix& M);

/// Default scaled tolerance used for definiteness decisions.
double default_eps_pd(const SymMatrix& M, double base = 1e-8);

DefinitenessResult classify_definiteness(const SymMatrix& M, double eps_pd);
DefinitenessResult classify_definiteness(const EigenDecomposition& eig, double eps_pd);

/// Cholesky factor of an SPD matrix; kept around for repeated solves and for
/// the log-det barrier.
class CholeskyFactor {
 public:
  static std::optional<CholeskyFactor> compute(const SymMatrix& M, double shift = 0.0);

  Vector solve(const Vector& b) const;
  Vector solve_lower(const Vector& b) const;  // L y = b only
  double log_det() const;  // of the factored matrix
  std::size_t size() const { return n_; }

 private:
  std::size_t n_ = 0;
  Vector lower_;  // row-major lower triangle, full storage
};

/// Solves M x = b for M positive definite.  Throws NotPositiveDefinite when a
/// factorization pivot is non-positive.
Vector solve_spd(const SymMatrix& M, const Vector& b);

/// Spectral pseudo-inverse action: sum over |lambda_i| > eps_rank of
/// (v_i^T b / lambda_i) v_i.  Exact inverse action for nonsingular M.
Vector pinv_apply(const SymMatrix& M, const Vector& b, double eps_rank);
Vector pinv_apply(const EigenDecomposition& eig, const Vector& b, double eps_rank);

double default_eps_rank(const EigenDecomposition& eig, double base = 1e-10);

/// Newton-direction solve for a possibly indefinite symmetric matrix:
/// eigenvalues with magnitude below a relative floor are clamped, signs kept.
Vector sym_solve_regularized(const SymMatrix& H, const Vector& rhs);

struct CubicRoots {
  Vector roots;                     // distinct real roots, ascending
  std::vector<int> multiplicity;    // aligned with roots
};

/// Real roots of a3 x^3 + a2 x^2 + a1 x + a0 = 0 via Cardano, trigonometric
/// branch for the three-real-root case, two Newton polish steps per root.
/// Throws DegenerateLeadingCoefficient when a3 == 0.
CubicRoots real_cubic_roots(double a3, double a2, double a1, double a0);

}  // namespace cdk
