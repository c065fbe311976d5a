#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bma/linalg.hpp"
#include "bma/model_space.hpp"
#include "bma/rng.hpp"

namespace bma {

// Zellner-style g-prior on the slopes with flat priors on the intercept and
// error variance. Unit-information mode sets g = n at fit time.
struct PriorConfig {
  enum class Mode { FixedG, UnitInformation };
  Mode mode = Mode::UnitInformation;
  double g = 1.0;  // used in FixedG mode; must be > 0

  double resolve(std::size_t n) const;
};

struct SamplerConfig {
  long iterations = 3000000;
  long burn_in = 200000;
  std::uint64_t seed = 1;
  int enumeration_cap = kDefaultEnumerationCap;
  int thinning = 10;
};

// One regression stage: outcome plus the selectable columns. The intercept is
// implicit (always included, handled by centering).
struct RegressionData {
  Vector y;
  Matrix columns;  // n x K, column order = mask bit order
};

struct ModelRecord {
  std::uint64_t mask_bits = 0;
  double log_ml = 0.0;  // log Bayes factor versus the intercept-only model
  double pmp = 0.0;
};

struct PosteriorSummary {
  Vector pip;        // per selectable column
  Vector post_mean;  // model-averaged coefficient, zero when excluded
  Vector post_sd;
  long models_visited = 0;  // distinct models enumerated or visited
  std::vector<std::pair<InclusionMask, double>> top_models;  // mask, pmp
  long rank_deficient = 0;  // models excluded with a -inf marginal likelihood
};

// Precomputed centered workspace shared by every model evaluation on one
// dataset: column means, Gram matrix of the centered columns, h = C'y and the
// total sum of squares of the centered outcome.
class MarginalLikelihood {
 public:
  MarginalLikelihood(const RegressionData& data, const PriorConfig& prior);

  // ((n-1-k)/2) ln(1+g) - ((n-1)/2) ln(1+g(1-R^2)); null model gives 0.
  // Rank-deficient selections give -infinity.
  double log_bayes_factor(const InclusionMask& mask) const;

  // Conjugate posterior moments of the included slopes: mean is the shrunk
  // OLS estimate, covariance (g/(1+g)) s^2 (C'C)^-1 with s^2 the posterior
  // expected error variance (shrunk RSS over n-3). False on rank deficiency.
  bool coefficient_moments(const InclusionMask& mask, Vector& mean_out,
                           Matrix& cov_out) const;

  // Mean and marginal variance scattered onto the full column set, zeros for
  // excluded columns. False on rank deficiency.
  bool scattered_moments(const InclusionMask& mask, Vector& mean_out,
                         Vector& var_out) const;

  std::size_t n() const { return n_; }
  int k_total() const { return k_total_; }
  double g() const { return g_; }

 private:
  struct Fit {
    bool ok = false;
    double ess = 0.0;
    Matrix chol;           // Cholesky of the selected Gram submatrix
    std::vector<int> idx;  // selected column indices
    Vector h_sel;
  };
  Fit fit(const InclusionMask& mask) const;

  std::size_t n_ = 0;
  int k_total_ = 0;
  double g_ = 0.0;
  Matrix centered_;  // centered columns
  Matrix gram_;      // centered_' * centered_
  Vector h_;         // centered_' * y
  double tss_ = 0.0;
};

// Spec operations on an explicit selected submatrix (the whole submatrix is
// the model; use MarginalLikelihood for mask-driven evaluation).
double log_marginal_likelihood(const Vector& y, const Matrix& selected_columns,
                               const PriorConfig& prior);
std::pair<Vector, Matrix> conditional_posterior_coefficients(
    const Vector& y, const Matrix& selected_columns, const PriorConfig& prior);

// Exhaustive posterior over all 2^K models (Eqs over the full enumeration;
// the uniform model prior cancels in the normalization).
std::pair<std::vector<ModelRecord>, PosteriorSummary> exact_bma(
    const RegressionData& data, const PriorConfig& prior,
    int enumeration_cap = kDefaultEnumerationCap);

struct Mc3Result {
  std::vector<std::uint64_t> chain;  // every iteration, burn-in included
  std::unordered_map<std::uint64_t, double> log_ml;  // per distinct mask
  PosteriorSummary summary;          // aggregated after burn-in
  long accepted = 0;
};

// Metropolis over model space with single-flip proposals; acceptance
// probability min(1, exp(delta log marginal likelihood)). Post-burn-in visit
// frequencies give PIPs; means and variances are Rao-Blackwellized per-model
// analytic moments weighted by visit frequency.
Mc3Result mc3_sample(const RegressionData& data, const PriorConfig& prior,
                     const SamplerConfig& config);

}  // namespace bma
