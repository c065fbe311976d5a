#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bma/design.hpp"
#include "bma/model_space.hpp"
#include "bma/rng.hpp"

namespace bma {

// Raised when the error covariance stops being usable (not positive definite,
// non-positive conditional variance). The run loop tags it with the iteration.
struct StateCorruptionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IvbmaConfig {
  long iterations = 3000000;
  long burn_in = 200000;
  std::uint64_t seed = 1;
  int thinning = 10;
  // second-stage columns pinned in or out of every model (indices into [X W])
  std::vector<int> force_in;
  std::vector<int> force_out;
  bool retain_first_stage_draws = true;
};

// Full sampler state: second-stage model and coefficients, one first-stage
// model per endogenous column, the error covariance and the residuals the
// coefficients imply. Coefficient vectors span the whole column pool with
// zeros at excluded positions; intercepts are separate (never masked).
struct GibbsState {
  InclusionMask outcome_mask{0};  // over [X W]
  Vector outcome_coef;
  double outcome_intercept = 0.0;
  std::vector<InclusionMask> first_stage_mask;  // per endogenous j, over [Z W]
  std::vector<Vector> first_stage_coef;
  Vector first_stage_intercept;
  Matrix sigma;  // (p+1) x (p+1)
  Vector eps;    // n
  Matrix eta;    // n x p
};

// Thinned coefficient draws kept for density export. Stored as float: the
// text export carries six significant digits anyway and paper-scale runs
// retain hundreds of thousands of rows.
struct DrawStore {
  int second_dim = 0;  // slopes + intercept
  int sigma_dim = 0;   // p + 1
  long count = 0;
  std::vector<float> second;               // count x second_dim
  std::vector<float> sigma_upper;          // count x sigma_dim*(sigma_dim+1)/2
  std::vector<std::vector<float>> first;   // per endogenous j
};

struct IvbmaResult {
  PosteriorSummary second_stage;               // over [X W]
  std::vector<PosteriorSummary> first_stage;   // per endogenous j, over [Z W]
  DrawStore draws;
  Matrix sigma_mean;
  long iterations = 0;
  long burn_in = 0;
  int thinning = 1;
  long outcome_accepted = 0;
  long first_stage_accepted = 0;
};

// ytilde = y - eta * Sigma22^-1 Sigma21 and the conditional outcome variance
// sigma11 - Sigma12 Sigma22^-1 Sigma21 (> 0 or StateCorruptionError).
std::pair<Vector, double> condition_outcome(const Vector& y, const Matrix& eta,
                                            const Matrix& sigma);

// One draw from inverse-Wishart(nu0 + n, S0 + R'R) with R = [eps | eta].
Matrix draw_sigma(const Vector& eps, const Matrix& eta, double nu0,
                  const Matrix& s0, Rng& rng);

class IvbmaSampler {
 public:
  IvbmaSampler(const DesignMatrices& design, const PriorConfig& prior,
               const IvbmaConfig& config = {});

  GibbsState initial_state() const;

  // Single-flip CBF Metropolis move on the second-stage model, then a fresh
  // conjugate draw of the included coefficients and the implied eps.
  // Returns true when the proposed model was accepted.
  bool outcome_move(GibbsState& state, Rng& rng) const;

  // Same move structure for the first-stage equation of endogenous column j
  // (0-based), conditioning eta_j on (eps, eta_-j) under the current sigma.
  bool first_stage_move(GibbsState& state, int j, Rng& rng) const;

  void sigma_move(GibbsState& state, Rng& rng) const;

  // Fixed-variance log marginal likelihood of one stage model (up to the
  // stage constant shared by all masks): -k/2 ln(1+g) - (S_c - g/(1+g) ESS)/(2v).
  // -inf on rank deficiency. Exposed for the move-level tests.
  double outcome_log_marginal(const GibbsState& state, const InclusionMask& mask) const;
  double first_stage_log_marginal(const GibbsState& state, int j,
                                  const InclusionMask& mask) const;

  int n_second() const { return k2_; }
  int n_first() const { return k1_; }
  int p() const { return p_; }
  double g() const { return g_; }
  double sigma_prior_dof() const { return nu0_; }

 private:
  struct Pool {
    Matrix raw;
    Matrix centered;
    Matrix gram;
    Vector col_mean;
  };

  double stage_log_marginal(const Pool& pool, const Vector& h, double s_c, double v,
                            const InclusionMask& mask) const;
  bool stage_move(const Pool& pool, const Vector& target_adj, double v,
                  InclusionMask& mask, Vector& coef, double& intercept,
                  const std::vector<int>& flippable, Rng& rng) const;

  const DesignMatrices* design_;
  int p_ = 0, q_ = 0, k2_ = 0, k1_ = 0;
  std::size_t n_ = 0;
  double g_ = 0.0;
  double nu0_ = 0.0;
  Matrix s0_;
  Pool second_;  // [X W]
  Pool first_;   // [Z W]
  std::vector<int> outcome_flippable_;
  std::vector<int> first_flippable_;
  std::uint64_t forced_in_bits_ = 0;
};

// Spec-level wrappers around one sampler step each.
GibbsState cbf_move_outcome(GibbsState state, const DesignMatrices& design,
                            const PriorConfig& prior, Rng& rng);
GibbsState cbf_move_first_stage(GibbsState state, const DesignMatrices& design,
                                int j, const PriorConfig& prior, Rng& rng);

// Full two-phase loop: outcome move, first-stage moves in column order, then
// the sigma draw; burn-in discarded, draws thinned.
IvbmaResult run_ivbma(const DesignMatrices& design, const PriorConfig& prior,
                      const IvbmaConfig& config);

}  // namespace bma
