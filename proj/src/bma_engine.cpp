#include "bma/bma_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bma/kernels.hpp"

namespace bma {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<int> selected_indices(const InclusionMask& mask) {
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(mask.popcount()));
  for (int i = 0; i < mask.size(); ++i)
    if (mask.test(i)) idx.push_back(i);
  return idx;
}

InclusionMask all_included(std::size_t k) {
  const std::uint64_t bits =
      k >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << k) - 1);
  return InclusionMask::from_bits(bits, static_cast<int>(k));
}
}  // namespace

double PriorConfig::resolve(std::size_t n) const {
  if (mode == Mode::UnitInformation) return static_cast<double>(n);
  if (!(g > 0.0)) throw std::invalid_argument("PriorConfig: g must be positive");
  return g;
}

MarginalLikelihood::MarginalLikelihood(const RegressionData& data,
                                       const PriorConfig& prior) {
  n_ = data.y.size();
  k_total_ = static_cast<int>(data.columns.cols());
  if (data.columns.rows() != n_)
    throw std::invalid_argument("MarginalLikelihood: row count mismatch");
  if (n_ < 2) throw std::invalid_argument("MarginalLikelihood: need n >= 2");
  if (k_total_ > InclusionMask::kMaxBits)
    throw std::invalid_argument("MarginalLikelihood: more than 64 selectable columns");
  g_ = prior.resolve(n_);

  centered_ = data.columns;
  for (int j = 0; j < k_total_; ++j) {
    double* c = centered_.col(static_cast<std::size_t>(j));
    const double m = kernels::sum(c, n_) / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) c[i] -= m;
  }
  gram_ = gram(centered_);
  h_.resize(static_cast<std::size_t>(k_total_));
  for (int j = 0; j < k_total_; ++j)
    h_[static_cast<std::size_t>(j)] =
        kernels::dot(centered_.col(static_cast<std::size_t>(j)), data.y.data(), n_);
  const double ybar = kernels::sum(data.y.data(), n_) / static_cast<double>(n_);
  tss_ = kernels::sumsq_shifted(data.y.data(), ybar, n_);
  if (!(tss_ > 0.0))
    throw std::invalid_argument("MarginalLikelihood: outcome has zero variance");
}

MarginalLikelihood::Fit MarginalLikelihood::fit(const InclusionMask& mask) const {
  Fit f;
  f.idx = selected_indices(mask);
  const std::size_t k = f.idx.size();
  if (n_ < k + 2) return f;  // needs n >= k_M + 2
  f.chol = Matrix(k, k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      const double v = gram_(static_cast<std::size_t>(f.idx[a]),
                             static_cast<std::size_t>(f.idx[b]));
      f.chol(a, b) = v;
      f.chol(b, a) = v;
    }
  if (!cholesky(f.chol)) return f;
  f.h_sel.resize(k);
  for (std::size_t a = 0; a < k; ++a)
    f.h_sel[a] = h_[static_cast<std::size_t>(f.idx[a])];
  Vector w = f.h_sel;
  solve_lower(f.chol, w);
  f.ess = kernels::sumsq(w.data(), k);
  f.ok = true;
  return f;
}

double MarginalLikelihood::log_bayes_factor(const InclusionMask& mask) const {
  if (mask.popcount() == 0) return 0.0;  // null versus null
  const Fit f = fit(mask);
  if (!f.ok) return kNegInf;
  const double k = static_cast<double>(f.idx.size());
  const double n = static_cast<double>(n_);
  const double rss = std::max(0.0, tss_ - f.ess);
  // ln(1 + g(1-R^2)) evaluated as ln(tss + g*rss) - ln(tss) for stability
  return 0.5 * (n - 1.0 - k) * std::log1p(g_) -
         0.5 * (n - 1.0) * (std::log(tss_ + g_ * rss) - std::log(tss_));
}

bool MarginalLikelihood::coefficient_moments(const InclusionMask& mask,
                                             Vector& mean_out, Matrix& cov_out) const {
  const Fit f = fit(mask);
  if (!f.ok) return false;
  if (n_ < 4)
    throw std::invalid_argument("coefficient_moments: need n >= 4 for the variance");
  const std::size_t k = f.idx.size();
  const double shrink = g_ / (1.0 + g_);
  mean_out = f.h_sel;
  chol_solve(f.chol, mean_out);
  for (double& v : mean_out) v *= shrink;
  const double rss_shrunk = std::max(0.0, tss_ - shrink * f.ess);
  const double s2 = rss_shrunk / (static_cast<double>(n_) - 3.0);
  cov_out = chol_inverse(f.chol);
  const double scale = shrink * s2;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) cov_out(a, b) *= scale;
  return true;
}

bool MarginalLikelihood::scattered_moments(const InclusionMask& mask, Vector& mean_out,
                                           Vector& var_out) const {
  Vector m;
  Matrix cov;
  mean_out.assign(static_cast<std::size_t>(k_total_), 0.0);
  var_out.assign(static_cast<std::size_t>(k_total_), 0.0);
  if (mask.popcount() == 0) return true;
  if (!coefficient_moments(mask, m, cov)) return false;
  const std::vector<int> idx = selected_indices(mask);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    mean_out[static_cast<std::size_t>(idx[a])] = m[a];
    var_out[static_cast<std::size_t>(idx[a])] = cov(a, a);
  }
  return true;
}

double log_marginal_likelihood(const Vector& y, const Matrix& selected_columns,
                               const PriorConfig& prior) {
  if (selected_columns.cols() == 0) return 0.0;  // null versus null
  RegressionData d{y, selected_columns};
  MarginalLikelihood ml(d, prior);
  return ml.log_bayes_factor(all_included(selected_columns.cols()));
}

std::pair<Vector, Matrix> conditional_posterior_coefficients(
    const Vector& y, const Matrix& selected_columns, const PriorConfig& prior) {
  if (selected_columns.cols() == 0) return {Vector{}, Matrix{}};
  RegressionData d{y, selected_columns};
  MarginalLikelihood ml(d, prior);
  Vector mean;
  Matrix cov;
  if (!ml.coefficient_moments(all_included(selected_columns.cols()), mean, cov))
    throw std::invalid_argument(
        "conditional_posterior_coefficients: rank-deficient columns");
  return {std::move(mean), std::move(cov)};
}

namespace {

// Running top-N models by posterior probability, stable under ties.
void keep_top(std::vector<std::pair<InclusionMask, double>>& top,
              const InclusionMask& mask, double pmp, std::size_t limit = 10) {
  top.emplace_back(mask, pmp);
  std::stable_sort(top.begin(), top.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (top.size() > limit) top.resize(limit);
}

}  // namespace

std::pair<std::vector<ModelRecord>, PosteriorSummary> exact_bma(
    const RegressionData& data, const PriorConfig& prior, int enumeration_cap) {
  const int K = static_cast<int>(data.columns.cols());
  const std::vector<InclusionMask> masks = enumerate_all(K, enumeration_cap);
  MarginalLikelihood ml(data, prior);

  std::vector<ModelRecord> records(masks.size());
  double max_log = kNegInf;
  long rank_deficient = 0;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    records[i].mask_bits = masks[i].bits();
    records[i].log_ml = ml.log_bayes_factor(masks[i]);
    if (std::isinf(records[i].log_ml))
      ++rank_deficient;
    else
      max_log = std::max(max_log, records[i].log_ml);
  }
  if (std::isinf(max_log))
    throw std::runtime_error("exact_bma: every model is rank deficient");

  double norm = 0.0;
  for (const ModelRecord& r : records)
    if (!std::isinf(r.log_ml)) norm += std::exp(r.log_ml - max_log);

  PosteriorSummary s;
  s.pip.assign(static_cast<std::size_t>(K), 0.0);
  s.post_mean.assign(static_cast<std::size_t>(K), 0.0);
  s.post_sd.assign(static_cast<std::size_t>(K), 0.0);
  Vector second_moment(static_cast<std::size_t>(K), 0.0);
  s.rank_deficient = rank_deficient;
  s.models_visited = static_cast<long>(masks.size());

  Vector mean_full, var_full;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    ModelRecord& r = records[i];
    if (std::isinf(r.log_ml)) {
      r.pmp = 0.0;
      continue;
    }
    r.pmp = std::exp(r.log_ml - max_log) / norm;
    keep_top(s.top_models, masks[i], r.pmp);
    if (r.pmp == 0.0) continue;
    if (!ml.scattered_moments(masks[i], mean_full, var_full)) continue;
    for (int j = 0; j < K; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (masks[i].test(j)) s.pip[ju] += r.pmp;
      s.post_mean[ju] += r.pmp * mean_full[ju];
      second_moment[ju] += r.pmp * (var_full[ju] + mean_full[ju] * mean_full[ju]);
    }
  }
  for (int j = 0; j < K; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    s.post_sd[ju] = std::sqrt(std::max(0.0, second_moment[ju] -
                                                s.post_mean[ju] * s.post_mean[ju]));
  }
  return {std::move(records), std::move(s)};
}

Mc3Result mc3_sample(const RegressionData& data, const PriorConfig& prior,
                     const SamplerConfig& config) {
  if (config.iterations <= config.burn_in || config.burn_in < 0)
    throw std::invalid_argument("mc3_sample: need iterations > burn_in >= 0");
  const int K = static_cast<int>(data.columns.cols());
  if (K < 1) throw std::invalid_argument("mc3_sample: no selectable columns");
  MarginalLikelihood ml(data, prior);
  Rng rng(config.seed);

  struct Cached {
    double log_ml = 0.0;
    bool has_moments = false;
    Vector mean, var;  // scattered over all K columns
    long visits = 0;
  };
  std::unordered_map<std::uint64_t, Cached> cache;

  auto lookup = [&](const InclusionMask& mask) -> Cached& {
    auto [it, inserted] = cache.try_emplace(mask.bits());
    if (inserted) it->second.log_ml = ml.log_bayes_factor(mask);
    return it->second;
  };

  Mc3Result result;
  result.chain.reserve(static_cast<std::size_t>(config.iterations));

  InclusionMask current(K);  // start from the empty model
  Cached* cur = &lookup(current);

  const auto total = static_cast<std::size_t>(config.iterations);
  const auto keep = static_cast<double>(config.iterations - config.burn_in);
  PosteriorSummary& s = result.summary;
  s.pip.assign(static_cast<std::size_t>(K), 0.0);
  s.post_mean.assign(static_cast<std::size_t>(K), 0.0);
  s.post_sd.assign(static_cast<std::size_t>(K), 0.0);
  Vector second_moment(static_cast<std::size_t>(K), 0.0);

  for (std::size_t t = 0; t < total; ++t) {
    const InclusionMask proposal = propose_flip(current, rng);
    Cached& prop = lookup(proposal);
    const double log_ratio = prop.log_ml - cur->log_ml;
    if (!std::isinf(prop.log_ml) &&
        (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio)) {
      current = proposal;
      cur = &prop;
      ++result.accepted;
    }
    result.chain.push_back(current.bits());
    if (static_cast<long>(t) < config.burn_in) continue;

    if (!cur->has_moments) {
      if (!ml.scattered_moments(current, cur->mean, cur->var))
        throw std::runtime_error("mc3_sample: current model became rank deficient");
      cur->has_moments = true;
    }
    if (cur->visits == 0) ++s.models_visited;
    ++cur->visits;
    for (int j = 0; j < K; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (current.test(j)) s.pip[ju] += 1.0;
      s.post_mean[ju] += cur->mean[ju];
      second_moment[ju] += cur->var[ju] + cur->mean[ju] * cur->mean[ju];
    }
  }

  for (int j = 0; j < K; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    s.pip[ju] /= keep;
    s.post_mean[ju] /= keep;
    second_moment[ju] /= keep;
    s.post_sd[ju] = std::sqrt(std::max(0.0, second_moment[ju] -
                                                s.post_mean[ju] * s.post_mean[ju]));
  }

  for (const auto& [bits, entry] : cache) {
    result.log_ml.emplace(bits, entry.log_ml);
    if (std::isinf(entry.log_ml)) ++s.rank_deficient;
    if (entry.visits > 0)
      keep_top(s.top_models, InclusionMask::from_bits(bits, K),
               static_cast<double>(entry.visits) / keep);
  }
  return result;
}

}  // namespace bma
