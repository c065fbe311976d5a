#pragma once

#include <cstdint>
#include <optional>

#include "bma/bma_engine.hpp"
#include "bma/design.hpp"

namespace bma {

// Ground-truth generator settings. With the endogeneity block present the
// first `p` candidates are endogenous (instrumented); the rest are exogenous.
struct SyntheticConfig {
  std::size_t n = 100;
  int k = 8;
  InclusionMask true_mask{0};
  Vector true_coefficients;  // one per set bit of true_mask, in column order
  double intercept = 0.0;
  double noise_sd = 1.0;
  std::uint64_t seed = 1;

  struct Endogeneity {
    int p = 1;
    Matrix sigma;  // (p+1) x (p+1) covariance of (eps, eta)
    double instrument_strength = 0.9;  // target corr(Z_j, X_j), in (0,1)
  };
  std::optional<Endogeneity> endogeneity;

  void validate() const;
};

// y = intercept + included columns * true_coefficients + noise, columns iid
// standard normal. No endogeneity block allowed.
RegressionData generate_linear(const SyntheticConfig& config);

// Joint draw of (eps, eta) with covariance sigma; instruments standard normal
// and each X_j = delta_j Z_j + eta_j with delta_j set so the population
// corr(Z_j, X_j) equals instrument_strength exactly.
DesignMatrices generate_endogenous(const SyntheticConfig& config);

// Independent exhaustive oracle for the BMA posterior: evaluates every model
// through explicit projector matrices and Gauss-Jordan inversion instead of
// the centered-Gram R^2 route, then aggregates PIPs and moments. Shares no
// marginal-likelihood code with the engine.
PosteriorSummary brute_force_pips(const Vector& y, const Matrix& columns,
                                  const PriorConfig& prior, int cap = 15);

struct ReferenceFits {
  Vector ols_coef;  // over [X W]
  double ols_intercept = 0.0;
  Vector tsls_coef;
  double tsls_intercept = 0.0;
};

// Textbook OLS on [X W] and two-stage least squares using Z for X.
ReferenceFits reference_fits(const Vector& y, const Matrix& x, const Matrix& w,
                             const Matrix& z);

}  // namespace bma
