#include "bma/design.hpp"

#include <stdexcept>

namespace bma {

void DesignMatrices::validate() const {
  const std::size_t rows = y.size();
  if (X.cols() > 0 && X.rows() != rows)
    throw std::invalid_argument("DesignMatrices: X row count mismatch");
  if (W.cols() > 0 && W.rows() != rows)
    throw std::invalid_argument("DesignMatrices: W row count mismatch");
  if (Z.cols() != X.cols())
    throw std::invalid_argument("DesignMatrices: Z must have one column per X column");
  if (Z.cols() > 0 && Z.rows() != rows)
    throw std::invalid_argument("DesignMatrices: Z row count mismatch");
  if (!countries.empty() && countries.size() != rows)
    throw std::invalid_argument("DesignMatrices: country label count mismatch");
  if (rows <= static_cast<std::size_t>(p() + q() + 1))
    throw std::invalid_argument("DesignMatrices: need n > p + q + 1");
}

Matrix hcat(const Matrix& a, const Matrix& b) {
  if (a.cols() == 0) return b;
  if (b.cols() == 0) return a;
  if (a.rows() != b.rows()) throw std::invalid_argument("hcat: row mismatch");
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t j = 0; j < a.cols(); ++j)
    std::copy(a.col(j), a.col(j) + a.rows(), out.col(j));
  for (std::size_t j = 0; j < b.cols(); ++j)
    std::copy(b.col(j), b.col(j) + b.rows(), out.col(a.cols() + j));
  return out;
}

RegressionData second_stage_data(const DesignMatrices& d) {
  return RegressionData{d.y, hcat(d.X, d.W)};
}

}  // namespace bma
