#pragma once

#include <cstddef>
#include <vector>

// Small dense linear algebra on top of the kernel layer. Matrices are
// column-major so design columns are contiguous for the dot/sum kernels.
// Dimensions here are small (n in the hundreds, k below ~64); factorizations
// are plain textbook routines.
namespace bma {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  double* col(std::size_t j) { return data_.data() + j * rows_; }
  const double* col(std::size_t j) const { return data_.data() + j * rows_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// In-place lower Cholesky A = L L' on the lower triangle of a. Returns false
// when a pivot falls below rel_tol times the original diagonal entry, which
// is how rank-deficient model Gram matrices are detected.
bool cholesky(Matrix& a, double rel_tol = 1e-12);

// Solve L x = b (lower triangular).
void solve_lower(const Matrix& l, Vector& b);

// Solve L' x = b.
void solve_lower_transposed(const Matrix& l, Vector& b);

// Solve (L L') x = b given the Cholesky factor.
void chol_solve(const Matrix& l, Vector& b);

// Inverse of the SPD matrix whose Cholesky factor is l.
Matrix chol_inverse(const Matrix& l);

// Symmetric matrix-vector and general helpers used by the samplers.
Vector matvec(const Matrix& a, const Vector& x);

// a' * a for the n x k residual matrix (k x k result).
Matrix gram(const Matrix& a);

double mean(const Vector& v);

// Sample variance with the n-1 denominator.
double sample_variance(const Vector& v);

// Pearson correlation; returns NaN for a zero-variance input.
double pearson(const Vector& x, const Vector& y);

}  // namespace bma
