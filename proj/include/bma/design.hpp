#pragma once

#include <string>
#include <vector>

#include "bma/bma_engine.hpp"
#include "bma/linalg.hpp"

namespace bma {

// The assembled cross-section system: outcome y, endogenous block X,
// exogenous block W, instruments Z (column j instruments X column j). The
// intercept is implicit and always included. No missing entries; incomplete
// rows are dropped upstream.
struct DesignMatrices {
  std::vector<std::string> countries;
  Vector y;
  Matrix X;
  Matrix W;
  Matrix Z;

  std::size_t n() const { return y.size(); }
  int p() const { return static_cast<int>(X.cols()); }
  int q() const { return static_cast<int>(W.cols()); }

  void validate() const;
};

Matrix hcat(const Matrix& a, const Matrix& b);

// Single-stage view for the plain BMA engine: y against [X W].
RegressionData second_stage_data(const DesignMatrices& d);

}  // namespace bma
