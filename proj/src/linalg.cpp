#include "cdk/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cdk {

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const Vector& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

Vector axpy(double alpha, const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw DimensionMismatch("axpy: size mismatch");
  Vector r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = alpha * x[i] + y[i];
  return r;
}

Vector scaled(const Vector& x, double alpha) {
  Vector r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = alpha * x[i];
  return r;
}

SymMatrix SymMatrix::identity(std::size_t n) {
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::diagonal(const Vector& d) {
  SymMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m.set(i, i, d[i]);
  return m;
}

SymMatrix SymMatrix::from_rows(const std::vector<Vector>& rows) {
  const std::size_t n = rows.size();
  if (n == 0) throw InvalidInput("SymMatrix: empty");
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) throw DimensionMismatch("SymMatrix: ragged rows");
    for (std::size_t j = 0; j < n; ++j) {
      if (rows[j][i] != rows[i][j]) throw InvalidInput("SymMatrix: input not symmetric");
      m.data_[i * n + j] = rows[i][j];
    }
  }
  return m;
}

void SymMatrix::add_scaled(const SymMatrix& other, double alpha) {
  if (other.n_ != n_) throw DimensionMismatch("add_scaled: size mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * other.data_[i];
}

void SymMatrix::add_identity(double alpha) {
  for (std::size_t i = 0; i < n_; ++i) data_[i * n_ + i] += alpha;
}

Vector SymMatrix::matvec(const Vector& x) const {
  if (x.size() != n_) throw DimensionMismatch("matvec: size mismatch");
  Vector y(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    const double* row = data_.data() + i * n_;
    for (std::size_t j = 0; j < n_; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

double SymMatrix::quad_form(const Vector& x) const { return dot(x, matvec(x)); }

double SymMatrix::norm_fro() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double SymMatrix::norm_inf() const {
  double m = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n_; ++j) row += std::abs(data_[i * n_ + j]);
    m = std::max(m, row);
  }
  return m;
}

bool SymMatrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

const char* to_string(Definiteness d) {
  switch (d) {
    case Definiteness::PositiveDefinite: return "PositiveDefinite";
    case Definiteness::PositiveSemidefiniteSingular: return "PositiveSemidefiniteSingular";
    case Definiteness::Indefinite: return "Indefinite";
    case Definiteness::NegativeSemidefiniteSingular: return "NegativeSemidefiniteSingular";
    case Definiteness::NegativeDefinite: return "NegativeDefinite";
  }
  return "?";
}

namespace {

// One cyclic Jacobi sweep over the strict upper triangle, rotations applied
// to A in place and accumulated into V (V stored row-major, rows are the
// current basis images; eigenvectors read off as columns of V^T, i.e. rows).
void jacobi_sweep(std::size_t n, Vector& a, Vector& v) {
  for (std::size_t p = 0; p + 1 < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      const double apq = a[p * n + q];
      if (apq == 0.0) continue;
      const double app = a[p * n + p];
      const double aqq = a[q * n + q];
      const double scale = std::abs(app) + std::abs(aqq);
      if (scale + 100.0 * std::abs(apq) == scale) {
        a[p * n + q] = a[q * n + p] = 0.0;
        continue;
      }
      const double theta = (aqq - app) / (2.0 * apq);
      // tan of the rotation angle, smaller root for stability
      double t = (theta >= 0.0) ? 1.0 / (theta + std::sqrt(1.0 + theta * theta))
                                : 1.0 / (theta - std::sqrt(1.0 + theta * theta));
      const double c = 1.0 / std::sqrt(1.0 + t * t);
      const double s = t * c;
      const double tau = s / (1.0 + c);

      a[p * n + p] = app - t * apq;
      a[q * n + q] = aqq + t * apq;
      a[p * n + q] = a[q * n + p] = 0.0;

      for (std::size_t k = 0; k < n; ++k) {
        if (k != p && k != q) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = akp - s * (akq + tau * akp);
          a[k * n + q] = akq + s * (akp - tau * akq);
          a[p * n + k] = a[k * n + p];
          a[q * n + k] = a[k * n + q];
        }
        const double vkp = v[p * n + k];
        const double vkq = v[q * n + k];
        v[p * n + k] = vkp - s * (vkq + tau * vkp);
        v[q * n + k] = vkq + s * (vkp - tau * vkq);
      }
    }
  }
}

double off_diagonal_fro(std::size_t n, const Vector& a) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s += a[i * n + j] * a[i * n + j];
  return std::sqrt(2.0 * s);
}

}  // namespace

EigenDecomposition sym_eigen(const SymMatrix& M) {
  if (M.size() == 0) throw InvalidInput("sym_eigen: empty matrix");
  if (!M.all_finite()) throw InvalidInput("sym_eigen: non-finite entries");
  const std::size_t n = M.size();
  Vector a(M.data(), M.data() + n * n);
  Vector v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  const double tol = 1e-15 * M.norm_fro();
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off_diagonal_fro(n, a) <= tol) break;
    jacobi_sweep(n, a, v);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a[i * n + i] < a[j * n + j]; });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    out.values[k] = a[i * n + i];
    out.vectors[k] = Vector(v.begin() + static_cast<std::ptrdiff_t>(i * n),
                            v.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
  }
  return out;
}

double default_eps_pd(const SymMatrix& M, double base) { return base * (1.0 + M.norm_inf()); }

DefinitenessResult classify_definiteness(const EigenDecomposition& eig, double eps_pd) {
  if (eps_pd <= 0.0) throw InvalidInput("classify_definiteness: eps_pd must be positive");
  const double lo = eig.values.front();
  const double hi = eig.values.back();
  double small = std::abs(lo);
  for (double w : eig.values) small = std::min(small, std::abs(w));

  if (lo > eps_pd) return {Definiteness::PositiveDefinite, lo};
  if (hi < -eps_pd) return {Definiteness::NegativeDefinite, std::abs(hi)};
  const bool has_singular = small <= eps_pd;
  if (has_singular && lo >= -eps_pd) return {Definiteness::PositiveSemidefiniteSingular, small};
  if (has_singular && hi <= eps_pd) return {Definiteness::NegativeSemidefiniteSingular, small};
  return {Definiteness::Indefinite, small};
}

DefinitenessResult classify_definiteness(const SymMatrix& M, double eps_pd) {
  return classify_definiteness(sym_eigen(M), eps_pd);
}

std::optional<CholeskyFactor> CholeskyFactor::compute(const SymMatrix& M, double shift) {
  const std::size_t n = M.size();
  CholeskyFactor f;
  f.n_ = n;
  f.lower_.assign(n * n, 0.0);
  Vector& L = f.lower_;
  for (std::size_t j = 0; j < n; ++j) {
    double d = M(j, j) + shift;
    for (std::size_t k = 0; k < j; ++k) d -= L[j * n + k] * L[j * n + k];
    if (!(d > 0.0)) return std::nullopt;  // pivot <= 0 (or NaN)
    const double ljj = std::sqrt(d);
    L[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = M(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
      L[i * n + j] = s / ljj;
    }
  }
  return f;
}

Vector CholeskyFactor::solve(const Vector& b) const {
  if (b.size() != n_) throw DimensionMismatch("CholeskyFactor::solve: size mismatch");
  Vector y(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= lower_[i * n_ + k] * y[k];
    y[i] = s / lower_[i * n_ + i];
  }
  Vector x(n_);
  for (std::size_t ii = n_; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n_; ++k) s -= lower_[k * n_ + ii] * x[k];
    x[ii] = s / lower_[ii * n_ + ii];
  }
  return x;
}

Vector CholeskyFactor::solve_lower(const Vector& b) const {
  if (b.size() != n_) throw DimensionMismatch("CholeskyFactor::solve_lower: size mismatch");
  Vector y(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= lower_[i * n_ + k] * y[k];
    y[i] = s / lower_[i * n_ + i];
  }
  return y;
}

double CholeskyFactor::log_det() const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += std::log(lower_[i * n_ + i]);
  return 2.0 * s;
}

Vector solve_spd(const SymMatrix& M, const Vector& b) {
  if (b.size() != M.size()) throw DimensionMismatch("solve_spd: size mismatch");
  auto f = CholeskyFactor::compute(M);
  if (!f) throw NotPositiveDefinite("solve_spd: non-positive pivot");
  return f->solve(b);
}

Vector pinv_apply(const EigenDecomposition& eig, const Vector& b, double eps_rank) {
  if (eps_rank <= 0.0) throw InvalidInput("pinv_apply: eps_rank must be positive");
  Vector x(b.size(), 0.0);
  for (std::size_t i = 0; i < eig.values.size(); ++i) {
    const double w = eig.values[i];
    if (std::abs(w) <= eps_rank) continue;
    const double coef = dot(eig.vectors[i], b) / w;
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += coef * eig.vectors[i][k];
  }
  return x;
}

Vector pinv_apply(const SymMatrix& M, const Vector& b, double eps_rank) {
  if (b.size() != M.size()) throw DimensionMismatch("pinv_apply: size mismatch");
  return pinv_apply(sym_eigen(M), b, eps_rank);
}

double default_eps_rank(const EigenDecomposition& eig, double base) {
  double m = 0.0;
  for (double w : eig.values) m = std::max(m, std::abs(w));
  return base * std::max(1.0, m);
}

Vector sym_solve_regularized(const SymMatrix& H, const Vector& rhs) {
  const auto eig = sym_eigen(H);
  double top = 0.0;
  for (double w : eig.values) top = std::max(top, std::abs(w));
  const double floor_mag = std::max(1e-12 * std::max(1.0, top), 1e-300);
  Vector x(rhs.size(), 0.0);
  for (std::size_t i = 0; i < eig.values.size(); ++i) {
    double w = eig.values[i];
    if (std::abs(w) < floor_mag) w = (w < 0.0 ? -floor_mag : floor_mag);
    const double c = dot(eig.vectors[i], rhs) / w;
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += c * eig.vectors[i][k];
  }
  return x;
}

namespace {

double cubic_value(double a3, double a2, double a1, double a0, double x) {
  return ((a3 * x + a2) * x + a1) * x + a0;
}

double polish_root(double a3, double a2, double a1, double a0, double x) {
  for (int it = 0; it < 2; ++it) {
    const double fx = cubic_value(a3, a2, a1, a0, x);
    const double dfx = (3.0 * a3 * x + 2.0 * a2) * x + a1;
    if (dfx == 0.0) break;
    const double step = fx / dfx;
    if (!std::isfinite(step)) break;
    x -= step;
  }
  return x;
}

}  // namespace

CubicRoots real_cubic_roots(double a3, double a2, double a1, double a0) {
  if (a3 == 0.0) throw DegenerateLeadingCoefficient("real_cubic_roots: a3 == 0");
  if (!std::isfinite(a3) || !std::isfinite(a2) || !std::isfinite(a1) || !std::isfinite(a0))
    throw InvalidInput("real_cubic_roots: non-finite coefficient");

  // Normalize and depress: x = t - A/3 turns x^3+Ax^2+Bx+C into t^3+pt+q.
  const double A = a2 / a3;
  const double B = a1 / a3;
  const double C = a0 / a3;
  const double p = B - A * A / 3.0;
  const double q = 2.0 * A * A * A / 27.0 - A * B / 3.0 + C;
  const double shift = A / 3.0;

  const double half_q = 0.5 * q;
  const double third_p = p / 3.0;
  const double disc = half_q * half_q + third_p * third_p * third_p;  // q^2/4 + p^3/27
  const double scale = std::max({std::abs(half_q * half_q),
                                 std::abs(third_p * third_p * third_p), 1e-300});

  CubicRoots out;
  auto push = [&](double t, int mult) {
    out.roots.push_back(polish_root(a3, a2, a1, a0, t - shift));
    out.multiplicity.push_back(mult);
  };

  if (std::abs(disc) <= 1e-12 * scale) {
    // Boundary case: repeated roots.
    if (std::abs(p) <= 1e-12 * std::max(1.0, A * A) && std::abs(q) <= 1e-18) {
      push(0.0, 3);
    } else {
      const double r_double = -3.0 * half_q / p;  // -3q/(2p)
      const double r_single = -2.0 * r_double;
      push(r_single, 1);
      push(r_double, 2);
    }
  } else if (disc < 0.0) {
    // Three distinct real roots, trigonometric branch.
    const double m = 2.0 * std::sqrt(-third_p);
    double arg = 3.0 * q / (p * m);
    arg = std::clamp(arg, -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    constexpr double two_thirds_pi = 2.0943951023931953;
    for (int k = 0; k < 3; ++k) push(m * std::cos(theta - two_thirds_pi * k), 1);
  } else {
    // One real root; avoid cancellation by folding through the larger branch.
    const double sqrt_disc = std::sqrt(disc);
    double t;
    if (half_q == 0.0) {
      t = 0.0;  // q == 0 with disc > 0 means p > 0, only real root is 0
    } else {
      const double u = std::cbrt(std::abs(half_q) + sqrt_disc);
      const double sgn = half_q > 0.0 ? -1.0 : 1.0;
      t = sgn * (u - third_p / u);
    }
    push(t, 1);
  }

  // Sort ascending, merge any roots the polish collapsed together.
  std::vector<std::size_t> order(out.roots.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return out.roots[i] < out.roots[j]; });
  CubicRoots sorted;
  const double merge_tol =
      1e-10 * std::max({std::abs(out.roots.front()), std::abs(out.roots.back()), 1.0});
  for (std::size_t idx : order) {
    if (!sorted.roots.empty() && std::abs(out.roots[idx] - sorted.roots.back()) <= merge_tol) {
      sorted.multiplicity.back() += out.multiplicity[idx];
    } else {
      sorted.roots.push_back(out.roots[idx]);
      sorted.multiplicity.push_back(out.multiplicity[idx]);
    }
  }
  return sorted;
}

}  // namespace cdk
