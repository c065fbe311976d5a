#include "bma/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "bma/kernels.hpp"

namespace bma {

bool cholesky(Matrix& a, double rel_tol) {
  const std::size_t k = a.rows();
  if (a.cols() != k) throw std::invalid_argument("cholesky: matrix not square");
  Vector orig_diag(k);
  for (std::size_t i = 0; i < k; ++i) orig_diag[i] = a(i, i);
  for (std::size_t j = 0; j < k; ++j) {
    double d = a(j, j);
    for (std::size_t t = 0; t < j; ++t) d -= a(j, t) * a(j, t);
    if (!(d > rel_tol * std::abs(orig_diag[j])) || !(d > 0.0)) return false;
    const double root = std::sqrt(d);
    a(j, j) = root;
    for (std::size_t i = j + 1; i < k; ++i) {
      double s = a(i, j);
      for (std::size_t t = 0; t < j; ++t) s -= a(i, t) * a(j, t);
      a(i, j) = s / root;
    }
  }
  return true;
}

void solve_lower(const Matrix& l, Vector& b) {
  const std::size_t k = l.rows();
  for (std::size_t i = 0; i < k; ++i) {
    double s = b[i];
    for (std::size_t t = 0; t < i; ++t) s -= l(i, t) * b[t];
    b[i] = s / l(i, i);
  }
}

void solve_lower_transposed(const Matrix& l, Vector& b) {
  const std::size_t k = l.rows();
  for (std::size_t ii = k; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t t = ii + 1; t < k; ++t) s -= l(t, ii) * b[t];
    b[ii] = s / l(ii, ii);
  }
}

void chol_solve(const Matrix& l, Vector& b) {
  solve_lower(l, b);
  solve_lower_transposed(l, b);
}

Matrix chol_inverse(const Matrix& l) {
  const std::size_t k = l.rows();
  Matrix inv(k, k);
  Vector e(k);
  for (std::size_t j = 0; j < k; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    chol_solve(l, e);
    for (std::size_t i = 0; i < k; ++i) inv(i, j) = e[i];
  }
  // symmetrize against round-off
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = j + 1; i < k; ++i) {
      const double v = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = inv(j, i) = v;
    }
  return inv;
}

Vector matvec(const Matrix& a, const Vector& x) {
  if (x.size() != a.cols()) throw std::invalid_argument("matvec: size mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j)
    kernels::axpy(x[j], a.col(j), y.data(), a.rows());
  return y;
}

Matrix gram(const Matrix& a) {
  const std::size_t k = a.cols();
  const std::size_t n = a.rows();
  Matrix g(k, k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = j; i < k; ++i) {
      const double v = kernels::dot(a.col(i), a.col(j), n);
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

double mean(const Vector& v) {
  if (v.empty()) return std::nan("");
  return kernels::sum(v.data(), v.size()) / static_cast<double>(v.size());
}

double sample_variance(const Vector& v) {
  if (v.size() < 2) return std::nan("");
  const double m = mean(v);
  return kernels::sumsq_shifted(v.data(), m, v.size()) / static_cast<double>(v.size() - 1);
}

double pearson(const Vector& x, const Vector& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nan("");
  const std::size_t n = x.size();
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) sxy += (x[i] - mx) * (y[i] - my);
  const double sxx = kernels::sumsq_shifted(x.data(), mx, n);
  const double syy = kernels::sumsq_shifted(y.data(), my, n);
  if (sxx <= 0.0 || syy <= 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace bma
