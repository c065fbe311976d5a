#include "bma/ivbma_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "bma/kernels.hpp"

namespace bma {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Conditional law of component `target` of a zero-mean normal with covariance
// sigma given all other components: weights over the rest (ascending index
// order) and the conditional variance.
std::pair<Vector, double> conditional_given_rest(const Matrix& sigma, int target) {
  const std::size_t d = sigma.rows();
  if (sigma.cols() != d || target < 0 || static_cast<std::size_t>(target) >= d)
    throw std::invalid_argument("conditional_given_rest: bad arguments");
  double scale = 0.0;
  for (std::size_t i = 0; i < d; ++i) scale = std::max(scale, std::abs(sigma(i, i)));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(sigma(i, j) - sigma(j, i)) > 1e-8 * std::max(1.0, scale))
        throw StateCorruptionError("error covariance is not symmetric");

  std::vector<int> rest;
  rest.reserve(d - 1);
  for (std::size_t i = 0; i < d; ++i)
    if (static_cast<int>(i) != target) rest.push_back(static_cast<int>(i));

  const auto t = static_cast<std::size_t>(target);
  if (rest.empty()) {
    const double v = sigma(t, t);
    if (!(v > 0.0))
      throw StateCorruptionError("error covariance is not positive definite");
    return {Vector{}, v};
  }
  const std::size_t m = rest.size();
  Matrix suu(m, m);
  Vector sut(m);
  for (std::size_t a = 0; a < m; ++a) {
    sut[a] = sigma(static_cast<std::size_t>(rest[a]), t);
    for (std::size_t b = 0; b < m; ++b)
      suu(a, b) = sigma(static_cast<std::size_t>(rest[a]),
                        static_cast<std::size_t>(rest[b]));
  }
  if (!cholesky(suu))
    throw StateCorruptionError("error covariance is not positive definite");
  Vector w = sut;
  chol_solve(suu, w);
  double v = sigma(t, t);
  for (std::size_t a = 0; a < m; ++a) v -= sut[a] * w[a];
  if (!(v > 0.0))
    throw StateCorruptionError("conditional error variance is not positive");
  return {std::move(w), v};
}

struct SubsetFit {
  bool ok = false;
  std::vector<int> idx;
  Matrix chol;
  Vector h_sel;
  double ess = 0.0;
};

SubsetFit fit_subset(const Matrix& gram_full, const Vector& h_full,
                     const InclusionMask& mask) {
  SubsetFit f;
  for (int i = 0; i < mask.size(); ++i)
    if (mask.test(i)) f.idx.push_back(i);
  const std::size_t k = f.idx.size();
  f.chol = Matrix(k, k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      const double v = gram_full(static_cast<std::size_t>(f.idx[a]),
                                 static_cast<std::size_t>(f.idx[b]));
      f.chol(a, b) = v;
      f.chol(b, a) = v;
    }
  if (!cholesky(f.chol)) return f;
  f.h_sel.resize(k);
  for (std::size_t a = 0; a < k; ++a)
    f.h_sel[a] = h_full[static_cast<std::size_t>(f.idx[a])];
  Vector w = f.h_sel;
  solve_lower(f.chol, w);
  f.ess = kernels::sumsq(w.data(), k);
  f.ok = true;
  return f;
}

Matrix center_columns(const Matrix& raw, Vector& means_out) {
  Matrix c = raw;
  means_out.resize(raw.cols());
  for (std::size_t j = 0; j < raw.cols(); ++j) {
    double* col = c.col(j);
    const double m = kernels::sum(col, c.rows()) / static_cast<double>(c.rows());
    means_out[j] = m;
    for (std::size_t i = 0; i < c.rows(); ++i) col[i] -= m;
  }
  return c;
}

Matrix inverse_wishart_draw(double dof, const Matrix& scale, Rng& rng) {
  const std::size_t d = scale.rows();
  if (!(dof > static_cast<double>(d) - 1.0))
    throw std::invalid_argument("inverse_wishart_draw: dof too small");
  Matrix ls = scale;
  if (!cholesky(ls))
    throw StateCorruptionError("inverse-Wishart scale is not positive definite");

  // Bartlett factor of Wishart(dof, I)
  Matrix t(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    t(i, i) = std::sqrt(rng.chi_squared(dof - static_cast<double>(i)));
    for (std::size_t j = 0; j < i; ++j) t(i, j) = rng.normal();
  }
  // lower-triangular inverse of t
  Matrix tinv(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    tinv(j, j) = 1.0 / t(j, j);
    for (std::size_t i = j + 1; i < d; ++i) {
      double s = 0.0;
      for (std::size_t u = j; u < i; ++u) s += t(i, u) * tinv(u, j);
      tinv(i, j) = -s / t(i, i);
    }
  }
  // sigma = (ls tinv') (ls tinv')'
  Matrix m(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t u = 0; u <= std::min(i, j); ++u) s += ls(i, u) * tinv(j, u);
      m(i, j) = s;
    }
  Matrix sigma(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t u = 0; u < d; ++u) s += m(i, u) * m(j, u);
      sigma(i, j) = s;
      sigma(j, i) = s;
    }
  return sigma;
}

}  // namespace

std::pair<Vector, double> condition_outcome(const Vector& y, const Matrix& eta,
                                            const Matrix& sigma) {
  const auto p = eta.cols();
  if (sigma.rows() != p + 1)
    throw std::invalid_argument("condition_outcome: sigma must be (p+1) x (p+1)");
  if (p > 0 && eta.rows() != y.size())
    throw std::invalid_argument("condition_outcome: eta row count mismatch");
  auto [w, v] = conditional_given_rest(sigma, 0);
  Vector ytilde = y;
  for (std::size_t j = 0; j < p; ++j)
    kernels::axpy(-w[j], eta.col(j), ytilde.data(), ytilde.size());
  return {std::move(ytilde), v};
}

Matrix draw_sigma(const Vector& eps, const Matrix& eta, double nu0, const Matrix& s0,
                  Rng& rng) {
  const std::size_t p = eta.cols();
  const std::size_t d = p + 1;
  if (s0.rows() != d || s0.cols() != d)
    throw std::invalid_argument("draw_sigma: prior scale must be (p+1) x (p+1)");
  const std::size_t n = eps.size();
  if (p > 0 && eta.rows() != n)
    throw std::invalid_argument("draw_sigma: residual row mismatch");

  Matrix scale = s0;
  scale(0, 0) += kernels::sumsq(eps.data(), n);
  for (std::size_t j = 0; j < p; ++j) {
    const double cj = kernels::dot(eps.data(), eta.col(j), n);
    scale(0, j + 1) += cj;
    scale(j + 1, 0) += cj;
    for (std::size_t i = j; i < p; ++i) {
      const double v = kernels::dot(eta.col(i), eta.col(j), n);
      scale(i + 1, j + 1) += v;
      if (i != j) scale(j + 1, i + 1) += v;
    }
  }
  return inverse_wishart_draw(nu0 + static_cast<double>(n), scale, rng);
}

IvbmaSampler::IvbmaSampler(const DesignMatrices& design, const PriorConfig& prior,
                           const IvbmaConfig& config)
    : design_(&design) {
  p_ = design.p();
  q_ = design.q();
  n_ = design.n();
  k2_ = p_ + q_;
  k1_ = p_ + q_;
  if (k2_ < 1) throw std::invalid_argument("IvbmaSampler: no selectable columns");
  if (k2_ > InclusionMask::kMaxBits || k1_ > InclusionMask::kMaxBits)
    throw std::invalid_argument("IvbmaSampler: more than 64 selectable columns");
  g_ = prior.resolve(n_);
  nu0_ = static_cast<double>(p_) + 3.0;
  s0_ = Matrix::identity(static_cast<std::size_t>(p_) + 1);

  second_.raw = hcat(design.X, design.W);
  second_.centered = center_columns(second_.raw, second_.col_mean);
  second_.gram = gram(second_.centered);
  first_.raw = hcat(design.Z, design.W);
  first_.centered = center_columns(first_.raw, first_.col_mean);
  first_.gram = gram(first_.centered);

  std::vector<bool> pinned(static_cast<std::size_t>(k2_), false);
  for (int i : config.force_in) {
    if (i < 0 || i >= k2_) throw std::invalid_argument("IvbmaSampler: force_in index");
    pinned[static_cast<std::size_t>(i)] = true;
    forced_in_bits_ |= (std::uint64_t{1} << i);
  }
  for (int i : config.force_out) {
    if (i < 0 || i >= k2_) throw std::invalid_argument("IvbmaSampler: force_out index");
    if (pinned[static_cast<std::size_t>(i)])
      throw std::invalid_argument("IvbmaSampler: column forced both in and out");
    pinned[static_cast<std::size_t>(i)] = true;
  }
  for (int i = 0; i < k2_; ++i)
    if (!pinned[static_cast<std::size_t>(i)]) outcome_flippable_.push_back(i);
  for (int i = 0; i < k1_; ++i) first_flippable_.push_back(i);
}

GibbsState IvbmaSampler::initial_state() const {
  GibbsState s;
  s.outcome_mask = InclusionMask::from_bits(forced_in_bits_, k2_);
  s.outcome_coef.assign(static_cast<std::size_t>(k2_), 0.0);
  const double ybar = kernels::sum(design_->y.data(), n_) / static_cast<double>(n_);
  s.outcome_intercept = ybar;
  s.eps = design_->y;
  for (double& v : s.eps) v -= ybar;
  s.first_stage_mask.assign(static_cast<std::size_t>(p_), InclusionMask(k1_));
  s.first_stage_coef.assign(static_cast<std::size_t>(p_),
                            Vector(static_cast<std::size_t>(k1_), 0.0));
  s.first_stage_intercept.assign(static_cast<std::size_t>(p_), 0.0);
  s.eta = Matrix(n_, static_cast<std::size_t>(p_));
  for (int j = 0; j < p_; ++j) {
    const double* xj = design_->X.col(static_cast<std::size_t>(j));
    const double mj = kernels::sum(xj, n_) / static_cast<double>(n_);
    s.first_stage_intercept[static_cast<std::size_t>(j)] = mj;
    double* ej = s.eta.col(static_cast<std::size_t>(j));
    for (std::size_t i = 0; i < n_; ++i) ej[i] = xj[i] - mj;
  }
  s.sigma = Matrix::identity(static_cast<std::size_t>(p_) + 1);
  return s;
}

double IvbmaSampler::stage_log_marginal(const Pool& pool, const Vector& h, double s_c,
                                        double v, const InclusionMask& mask) const {
  const SubsetFit f = fit_subset(pool.gram, h, mask);
  if (!f.ok) return kNegInf;
  const double shrink = g_ / (1.0 + g_);
  return -0.5 * static_cast<double>(f.idx.size()) * std::log1p(g_) -
         (s_c - shrink * f.ess) / (2.0 * v);
}

bool IvbmaSampler::stage_move(const Pool& pool, const Vector& target_adj, double v,
                              InclusionMask& mask, Vector& coef, double& intercept,
                              const std::vector<int>& flippable, Rng& rng) const {
  const std::size_t k_pool = pool.gram.rows();
  Vector h(k_pool);
  for (std::size_t j = 0; j < k_pool; ++j)
    h[j] = kernels::dot(pool.centered.col(j), target_adj.data(), n_);
  const double m_t = kernels::sum(target_adj.data(), n_) / static_cast<double>(n_);
  const double s_c = kernels::sumsq_shifted(target_adj.data(), m_t, n_);
  const double shrink = g_ / (1.0 + g_);

  SubsetFit cur = fit_subset(pool.gram, h, mask);
  if (!cur.ok)
    throw StateCorruptionError("current stage model is rank deficient");

  bool accepted = false;
  if (!flippable.empty()) {
    const int flip = flippable[rng.below(flippable.size())];
    const InclusionMask proposal = mask.with_flipped(flip);
    SubsetFit prop = fit_subset(pool.gram, h, proposal);
    if (prop.ok) {  // rank-deficient proposals have CBF 0 and auto-reject
      const double lm_cur =
          -0.5 * static_cast<double>(cur.idx.size()) * std::log1p(g_) -
          (s_c - shrink * cur.ess) / (2.0 * v);
      const double lm_prop =
          -0.5 * static_cast<double>(prop.idx.size()) * std::log1p(g_) -
          (s_c - shrink * prop.ess) / (2.0 * v);
      const double log_ratio = lm_prop - lm_cur;
      if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) {
        mask = proposal;
        cur = std::move(prop);
        accepted = true;
      }
    }
  }

  // fresh conjugate draw of the included coefficients under the current model
  coef.assign(k_pool, 0.0);
  const std::size_t k = cur.idx.size();
  double alpha_centered = m_t + std::sqrt(v / static_cast<double>(n_)) * rng.normal();
  if (k > 0) {
    Vector b = cur.h_sel;
    chol_solve(cur.chol, b);
    Vector z(k);
    for (std::size_t a = 0; a < k; ++a) z[a] = rng.normal();
    solve_lower_transposed(cur.chol, z);
    const double sd_scale = std::sqrt(shrink * v);
    for (std::size_t a = 0; a < k; ++a)
      coef[static_cast<std::size_t>(cur.idx[a])] = shrink * b[a] + sd_scale * z[a];
  }
  intercept = alpha_centered;
  for (std::size_t j = 0; j < k_pool; ++j) intercept -= coef[j] * pool.col_mean[j];
  return accepted;
}

bool IvbmaSampler::outcome_move(GibbsState& state, Rng& rng) const {
  auto [ytilde, v] = condition_outcome(design_->y, state.eta, state.sigma);
  const bool accepted =
      stage_move(second_, ytilde, v, state.outcome_mask, state.outcome_coef,
                 state.outcome_intercept, outcome_flippable_, rng);
  // structural residual from the raw design, not the adjusted outcome
  state.eps = design_->y;
  for (double& e : state.eps) e -= state.outcome_intercept;
  for (int j = 0; j < k2_; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    if (state.outcome_coef[ju] != 0.0)
      kernels::axpy(-state.outcome_coef[ju], second_.raw.col(ju), state.eps.data(), n_);
  }
  return accepted;
}

bool IvbmaSampler::first_stage_move(GibbsState& state, int j, Rng& rng) const {
  if (j < 0 || j >= p_) throw std::invalid_argument("first_stage_move: bad index");
  const int target = j + 1;
  auto [w, v] = conditional_given_rest(state.sigma, target);
  Vector xtilde(design_->X.col(static_cast<std::size_t>(j)),
                design_->X.col(static_cast<std::size_t>(j)) + n_);
  std::size_t wi = 0;
  for (int r = 0; r <= p_; ++r) {
    if (r == target) continue;
    const double* resid =
        r == 0 ? state.eps.data() : state.eta.col(static_cast<std::size_t>(r - 1));
    kernels::axpy(-w[wi], resid, xtilde.data(), n_);
    ++wi;
  }
  const auto ju = static_cast<std::size_t>(j);
  const bool accepted = stage_move(first_, xtilde, v, state.first_stage_mask[ju],
                                   state.first_stage_coef[ju],
                                   state.first_stage_intercept[ju],
                                   first_flippable_, rng);
  double* eta_j = state.eta.col(ju);
  const double* xj = design_->X.col(ju);
  for (std::size_t i = 0; i < n_; ++i)
    eta_j[i] = xj[i] - state.first_stage_intercept[ju];
  for (int c = 0; c < k1_; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    if (state.first_stage_coef[ju][cu] != 0.0)
      kernels::axpy(-state.first_stage_coef[ju][cu], first_.raw.col(cu), eta_j, n_);
  }
  return accepted;
}

void IvbmaSampler::sigma_move(GibbsState& state, Rng& rng) const {
  state.sigma = draw_sigma(state.eps, state.eta, nu0_, s0_, rng);
}

double IvbmaSampler::outcome_log_marginal(const GibbsState& state,
                                          const InclusionMask& mask) const {
  auto [ytilde, v] = condition_outcome(design_->y, state.eta, state.sigma);
  Vector h(static_cast<std::size_t>(k2_));
  for (int j = 0; j < k2_; ++j)
    h[static_cast<std::size_t>(j)] =
        kernels::dot(second_.centered.col(static_cast<std::size_t>(j)),
                     ytilde.data(), n_);
  const double m_t = kernels::sum(ytilde.data(), n_) / static_cast<double>(n_);
  const double s_c = kernels::sumsq_shifted(ytilde.data(), m_t, n_);
  return stage_log_marginal(second_, h, s_c, v, mask);
}

double IvbmaSampler::first_stage_log_marginal(const GibbsState& state, int j,
                                              const InclusionMask& mask) const {
  const int target = j + 1;
  auto [w, v] = conditional_given_rest(state.sigma, target);
  Vector xtilde(design_->X.col(static_cast<std::size_t>(j)),
                design_->X.col(static_cast<std::size_t>(j)) + n_);
  std::size_t wi = 0;
  for (int r = 0; r <= p_; ++r) {
    if (r == target) continue;
    const double* resid =
        r == 0 ? state.eps.data() : state.eta.col(static_cast<std::size_t>(r - 1));
    kernels::axpy(-w[wi], resid, xtilde.data(), n_);
    ++wi;
  }
  Vector h(static_cast<std::size_t>(k1_));
  for (int c = 0; c < k1_; ++c)
    h[static_cast<std::size_t>(c)] =
        kernels::dot(first_.centered.col(static_cast<std::size_t>(c)),
                     xtilde.data(), n_);
  const double m_t = kernels::sum(xtilde.data(), n_) / static_cast<double>(n_);
  const double s_c = kernels::sumsq_shifted(xtilde.data(), m_t, n_);
  return stage_log_marginal(first_, h, s_c, v, mask);
}

GibbsState cbf_move_outcome(GibbsState state, const DesignMatrices& design,
                            const PriorConfig& prior, Rng& rng) {
  IvbmaSampler sampler(design, prior);
  sampler.outcome_move(state, rng);
  return state;
}

GibbsState cbf_move_first_stage(GibbsState state, const DesignMatrices& design,
                                int j, const PriorConfig& prior, Rng& rng) {
  IvbmaSampler sampler(design, prior);
  sampler.first_stage_move(state, j, rng);
  return state;
}

IvbmaResult run_ivbma(const DesignMatrices& design, const PriorConfig& prior,
                      const IvbmaConfig& config) {
  design.validate();
  if (design.p() < 1)
    throw std::invalid_argument("run_ivbma: needs at least one endogenous column");
  if (config.iterations <= config.burn_in || config.burn_in < 0)
    throw std::invalid_argument("run_ivbma: need iterations > burn_in >= 0");
  if (config.thinning < 1) throw std::invalid_argument("run_ivbma: thinning >= 1");

  IvbmaSampler sampler(design, prior, config);
  Rng rng(config.seed);
  GibbsState state = sampler.initial_state();

  const int p = design.p();
  const int k2 = sampler.n_second();
  const int k1 = sampler.n_first();
  const std::size_t d = static_cast<std::size_t>(p) + 1;
  const long kept = config.iterations - config.burn_in;

  IvbmaResult res;
  res.iterations = config.iterations;
  res.burn_in = config.burn_in;
  res.thinning = config.thinning;

  Vector pip2(static_cast<std::size_t>(k2), 0.0);
  Vector mean2(static_cast<std::size_t>(k2), 0.0);
  Vector m2_2(static_cast<std::size_t>(k2), 0.0);
  std::vector<Vector> pip1(static_cast<std::size_t>(p),
                           Vector(static_cast<std::size_t>(k1), 0.0));
  std::vector<Vector> mean1 = pip1;
  std::vector<Vector> m2_1 = pip1;
  Matrix sigma_acc(d, d);
  std::unordered_map<std::uint64_t, long> visits2;
  std::vector<std::unordered_map<std::uint64_t, long>> visits1(
      static_cast<std::size_t>(p));

  DrawStore& draws = res.draws;
  draws.second_dim = k2 + 1;
  draws.sigma_dim = static_cast<int>(d);
  const long retained = (kept + config.thinning - 1) / config.thinning;
  draws.second.reserve(static_cast<std::size_t>(retained * (k2 + 1)));
  if (config.retain_first_stage_draws)
    draws.first.assign(static_cast<std::size_t>(p), {});

  for (long t = 0; t < config.iterations; ++t) {
    try {
      if (sampler.outcome_move(state, rng)) ++res.outcome_accepted;
      for (int j = 0; j < p; ++j)
        if (sampler.first_stage_move(state, j, rng)) ++res.first_stage_accepted;
      sampler.sigma_move(state, rng);
    } catch (const StateCorruptionError& e) {
      throw StateCorruptionError("iteration " + std::to_string(t) + ": " + e.what());
    }
    if (t < config.burn_in) continue;

    for (int j = 0; j < k2; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (state.outcome_mask.test(j)) pip2[ju] += 1.0;
      mean2[ju] += state.outcome_coef[ju];
      m2_2[ju] += state.outcome_coef[ju] * state.outcome_coef[ju];
    }
    ++visits2[state.outcome_mask.bits()];
    for (int j = 0; j < p; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      ++visits1[ju][state.first_stage_mask[ju].bits()];
      for (int c = 0; c < k1; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        if (state.first_stage_mask[ju].test(c)) pip1[ju][cu] += 1.0;
        mean1[ju][cu] += state.first_stage_coef[ju][cu];
        m2_1[ju][cu] += state.first_stage_coef[ju][cu] * state.first_stage_coef[ju][cu];
      }
    }
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) sigma_acc(a, b) += state.sigma(a, b);

    if ((t - config.burn_in) % config.thinning == 0) {
      ++draws.count;
      for (int j = 0; j < k2; ++j)
        draws.second.push_back(
            static_cast<float>(state.outcome_coef[static_cast<std::size_t>(j)]));
      draws.second.push_back(static_cast<float>(state.outcome_intercept));
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b)
          draws.sigma_upper.push_back(static_cast<float>(state.sigma(a, b)));
      if (config.retain_first_stage_draws)
        for (int j = 0; j < p; ++j) {
          const auto ju = static_cast<std::size_t>(j);
          for (int c = 0; c < k1; ++c)
            draws.first[ju].push_back(
                static_cast<float>(state.first_stage_coef[ju][static_cast<std::size_t>(c)]));
          draws.first[ju].push_back(
              static_cast<float>(state.first_stage_intercept[ju]));
        }
    }
  }

  auto finalize = [&](Vector& pip, Vector& mean_acc, Vector& m2_acc,
                      PosteriorSummary& out) {
    const auto kd = static_cast<double>(kept);
    out.pip = pip;
    out.post_mean = mean_acc;
    out.post_sd.assign(pip.size(), 0.0);
    for (std::size_t j = 0; j < pip.size(); ++j) {
      out.pip[j] /= kd;
      out.post_mean[j] /= kd;
      const double second_moment = m2_acc[j] / kd;
      out.post_sd[j] = std::sqrt(
          std::max(0.0, second_moment - out.post_mean[j] * out.post_mean[j]));
    }
  };
  finalize(pip2, mean2, m2_2, res.second_stage);
  res.second_stage.models_visited = static_cast<long>(visits2.size());
  {
    std::vector<std::pair<std::uint64_t, long>> ordered(visits2.begin(), visits2.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    const std::size_t limit = std::min<std::size_t>(ordered.size(), 10);
    for (std::size_t i = 0; i < limit; ++i)
      res.second_stage.top_models.emplace_back(
          InclusionMask::from_bits(ordered[i].first, k2),
          static_cast<double>(ordered[i].second) / static_cast<double>(kept));
  }
  res.first_stage.resize(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    finalize(pip1[ju], mean1[ju], m2_1[ju], res.first_stage[ju]);
    res.first_stage[ju].models_visited = static_cast<long>(visits1[ju].size());
  }
  res.sigma_mean = Matrix(d, d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      res.sigma_mean(a, b) = sigma_acc(a, b) / static_cast<double>(kept);
  return res;
}

}  // namespace bma
