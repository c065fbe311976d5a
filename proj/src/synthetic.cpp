#include "bma/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bma/rng.hpp"

namespace bma {

void SyntheticConfig::validate() const {
  if (k < 0 || k > InclusionMask::kMaxBits)
    throw std::invalid_argument("SyntheticConfig: bad candidate count");
  if (true_mask.size() != k)
    throw std::invalid_argument("SyntheticConfig: mask size != k");
  if (static_cast<int>(true_coefficients.size()) != true_mask.popcount())
    throw std::invalid_argument(
        "SyntheticConfig: one coefficient per included candidate required");
  if (!(noise_sd > 0.0)) throw std::invalid_argument("SyntheticConfig: noise_sd > 0");
  if (endogeneity) {
    const auto& e = *endogeneity;
    if (e.p < 1 || e.p > k)
      throw std::invalid_argument("SyntheticConfig: endogenous count out of range");
    const std::size_t d = static_cast<std::size_t>(e.p) + 1;
    if (e.sigma.rows() != d || e.sigma.cols() != d)
      throw std::invalid_argument("SyntheticConfig: sigma must be (p+1) x (p+1)");
    Matrix chk = e.sigma;
    if (!cholesky(chk))
      throw std::invalid_argument("SyntheticConfig: sigma not positive definite");
    if (!(e.instrument_strength > 0.0) || !(e.instrument_strength < 1.0))
      throw std::invalid_argument(
          "SyntheticConfig: instrument_strength must lie in (0,1); the target "
          "correlation is unreachable otherwise");
  }
}

RegressionData generate_linear(const SyntheticConfig& config) {
  config.validate();
  if (config.endogeneity)
    throw std::invalid_argument("generate_linear: endogeneity block not allowed");
  Rng rng(config.seed);
  RegressionData d;
  d.columns = Matrix(config.n, static_cast<std::size_t>(config.k));
  for (std::size_t j = 0; j < d.columns.cols(); ++j)
    for (std::size_t i = 0; i < config.n; ++i) d.columns(i, j) = rng.normal();
  d.y.assign(config.n, config.intercept);
  std::size_t c = 0;
  for (int j = 0; j < config.k; ++j) {
    if (!config.true_mask.test(j)) continue;
    const double beta = config.true_coefficients[c++];
    const double* col = d.columns.col(static_cast<std::size_t>(j));
    for (std::size_t i = 0; i < config.n; ++i) d.y[i] += beta * col[i];
  }
  for (std::size_t i = 0; i < config.n; ++i) d.y[i] += config.noise_sd * rng.normal();
  return d;
}

DesignMatrices generate_endogenous(const SyntheticConfig& config) {
  config.validate();
  if (!config.endogeneity)
    throw std::invalid_argument("generate_endogenous: endogeneity block required");
  const auto& e = *config.endogeneity;
  const int p = e.p;
  const int q = config.k - p;
  const std::size_t n = config.n;
  Rng rng(config.seed);

  DesignMatrices d;
  d.countries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "S%04u", static_cast<unsigned>(i + 1));
    d.countries.emplace_back(buf);
  }
  d.W = Matrix(n, static_cast<std::size_t>(q));
  for (std::size_t j = 0; j < d.W.cols(); ++j)
    for (std::size_t i = 0; i < n; ++i) d.W(i, j) = rng.normal();
  d.Z = Matrix(n, static_cast<std::size_t>(p));
  for (std::size_t j = 0; j < d.Z.cols(); ++j)
    for (std::size_t i = 0; i < n; ++i) d.Z(i, j) = rng.normal();

  Matrix chol_sigma = e.sigma;
  cholesky(chol_sigma);  // validated already
  const std::size_t dim = static_cast<std::size_t>(p) + 1;
  Vector eps(n);
  Matrix eta(n, static_cast<std::size_t>(p));
  Vector z(dim), corr(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < dim; ++a) z[a] = rng.normal();
    for (std::size_t a = 0; a < dim; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b <= a; ++b) s += chol_sigma(a, b) * z[b];
      corr[a] = s;
    }
    eps[i] = corr[0];
    for (int j = 0; j < p; ++j) eta(i, static_cast<std::size_t>(j)) = corr[static_cast<std::size_t>(j) + 1];
  }

  // X_j = delta_j Z_j + eta_j with delta chosen so corr(Z_j, X_j) hits the
  // strength target exactly in population
  const double s2 = e.instrument_strength * e.instrument_strength;
  d.X = Matrix(n, static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const double var_eta = e.sigma(ju + 1, ju + 1);
    const double delta = std::sqrt(s2 * var_eta / (1.0 - s2));
    for (std::size_t i = 0; i < n; ++i)
      d.X(i, ju) = delta * d.Z(i, ju) + eta(i, ju);
  }

  d.y.assign(n, config.intercept);
  std::size_t c = 0;
  for (int j = 0; j < config.k; ++j) {
    if (!config.true_mask.test(j)) continue;
    const double beta = config.true_coefficients[c++];
    const double* col = j < p ? d.X.col(static_cast<std::size_t>(j))
                              : d.W.col(static_cast<std::size_t>(j - p));
    for (std::size_t i = 0; i < n; ++i) d.y[i] += beta * col[i];
  }
  for (std::size_t i = 0; i < n; ++i) d.y[i] += eps[i];
  return d;
}

namespace {

// Gauss-Jordan inversion with partial pivoting; tracks log|det|. Returns
// false on (numerical) singularity.
bool gauss_jordan_invert(Matrix& a, double& logdet) {
  const std::size_t m = a.rows();
  double scale = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) scale = std::max(scale, std::abs(a(i, j)));
  if (scale == 0.0) return false;
  Matrix inv = Matrix::identity(m);
  logdet = 0.0;
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (std::abs(a(piv, col)) < 1e-12 * scale) return false;
    if (piv != col)
      for (std::size_t j = 0; j < m; ++j) {
        std::swap(a(piv, j), a(col, j));
        std::swap(inv(piv, j), inv(col, j));
      }
    const double pivot = a(col, col);
    logdet += std::log(std::abs(pivot));
    const double inv_pivot = 1.0 / pivot;
    for (std::size_t j = 0; j < m; ++j) {
      a(col, j) *= inv_pivot;
      inv(col, j) *= inv_pivot;
    }
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      const double f = a(r, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) {
        a(r, j) -= f * a(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  a = std::move(inv);
  return true;
}

}  // namespace

PosteriorSummary brute_force_pips(const Vector& y, const Matrix& columns,
                                  const PriorConfig& prior, int cap) {
  const int K = static_cast<int>(columns.cols());
  const std::size_t n = y.size();
  if (K > cap)
    throw std::invalid_argument("brute_force_pips: K=" + std::to_string(K) +
                                " exceeds the oracle cap " + std::to_string(cap));
  if (columns.cols() > 0 && columns.rows() != n)
    throw std::invalid_argument("brute_force_pips: row mismatch");
  if (n < 4) throw std::invalid_argument("brute_force_pips: need n >= 4");
  const double g = prior.resolve(n);

  // demeaning as an explicit projector, applied by matrix multiplication
  auto project = [&](const Vector& v) {
    const double s = [&] {
      double acc = 0.0;
      for (double x : v) acc += x;
      return acc;
    }();
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      out[i] = v[i] - s / static_cast<double>(v.size());
    return out;
  };
  const Vector yt = project(y);
  double tss = 0.0;
  for (double v : yt) tss += v * v;

  const std::vector<InclusionMask> masks = enumerate_all(K, cap);
  std::vector<double> logml(masks.size(), -std::numeric_limits<double>::infinity());
  std::vector<Vector> means(masks.size()), vars(masks.size());
  long rank_deficient = 0;

  for (std::size_t mi = 0; mi < masks.size(); ++mi) {
    const InclusionMask& mask = masks[mi];
    std::vector<int> idx;
    for (int j = 0; j < K; ++j)
      if (mask.test(j)) idx.push_back(j);
    const std::size_t k = idx.size();
    if (n < k + 2) {  // same exclusion rule as the engine
      ++rank_deficient;
      continue;
    }
    if (k == 0) {
      logml[mi] = -0.5 * (static_cast<double>(n) - 1.0) * std::log(tss);
      means[mi].assign(static_cast<std::size_t>(K), 0.0);
      vars[mi].assign(static_cast<std::size_t>(K), 0.0);
      continue;
    }
    // centered selected columns
    Matrix ct(n, k);
    for (std::size_t a = 0; a < k; ++a) {
      Vector col(columns.col(static_cast<std::size_t>(idx[a])),
                 columns.col(static_cast<std::size_t>(idx[a])) + n);
      col = project(col);
      for (std::size_t i = 0; i < n; ++i) ct(i, a) = col[i];
    }
    Matrix gram_o(k, k);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += ct(i, a) * ct(i, b);
        gram_o(a, b) = s;
      }
    Matrix gram_inv = gram_o;
    double ignored = 0.0;
    if (!gauss_jordan_invert(gram_inv, ignored)) {
      ++rank_deficient;
      continue;
    }
    // V = I + g * C (C'C)^-1 C'
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t a = 0; a < k; ++a)
          for (std::size_t b = 0; b < k; ++b)
            s += ct(i, a) * gram_inv(a, b) * ct(j, b);
        v(i, j) = g * s;
      }
      v(i, i) += 1.0;
    }
    double logdet = 0.0;
    if (!gauss_jordan_invert(v, logdet)) {
      ++rank_deficient;
      continue;
    }
    double qf = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) qf += yt[i] * v(i, j) * yt[j];
    logml[mi] = -0.5 * logdet - 0.5 * (static_cast<double>(n) - 1.0) * std::log(qf);

    const double shrink = g / (1.0 + g);
    Vector hy(k, 0.0);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t i = 0; i < n; ++i) hy[a] += ct(i, a) * yt[i];
    means[mi].assign(static_cast<std::size_t>(K), 0.0);
    vars[mi].assign(static_cast<std::size_t>(K), 0.0);
    const double sigma2 = qf / (static_cast<double>(n) - 3.0);
    for (std::size_t a = 0; a < k; ++a) {
      double b = 0.0;
      for (std::size_t t = 0; t < k; ++t) b += gram_inv(a, t) * hy[t];
      means[mi][static_cast<std::size_t>(idx[a])] = shrink * b;
      vars[mi][static_cast<std::size_t>(idx[a])] = shrink * sigma2 * gram_inv(a, a);
    }
  }

  double max_log = -std::numeric_limits<double>::infinity();
  for (double v : logml) max_log = std::max(max_log, v);
  if (std::isinf(max_log))
    throw std::runtime_error("brute_force_pips: every model excluded");
  double norm = 0.0;
  for (double v : logml)
    if (!std::isinf(v)) norm += std::exp(v - max_log);

  PosteriorSummary s;
  s.pip.assign(static_cast<std::size_t>(K), 0.0);
  s.post_mean.assign(static_cast<std::size_t>(K), 0.0);
  s.post_sd.assign(static_cast<std::size_t>(K), 0.0);
  Vector m2(static_cast<std::size_t>(K), 0.0);
  s.models_visited = static_cast<long>(masks.size());
  s.rank_deficient = rank_deficient;
  for (std::size_t mi = 0; mi < masks.size(); ++mi) {
    if (std::isinf(logml[mi])) continue;
    const double pmp = std::exp(logml[mi] - max_log) / norm;
    s.top_models.emplace_back(masks[mi], pmp);
    for (int j = 0; j < K; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (masks[mi].test(j)) s.pip[ju] += pmp;
      s.post_mean[ju] += pmp * means[mi][ju];
      m2[ju] += pmp * (vars[mi][ju] + means[mi][ju] * means[mi][ju]);
    }
  }
  std::stable_sort(s.top_models.begin(), s.top_models.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (s.top_models.size() > 10) s.top_models.resize(10);
  for (int j = 0; j < K; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    s.post_sd[ju] =
        std::sqrt(std::max(0.0, m2[ju] - s.post_mean[ju] * s.post_mean[ju]));
  }
  return s;
}

namespace {

// least squares through the normal equations; throws on rank failure
Vector normal_equation_fit(const Matrix& a, const Vector& y) {
  const std::size_t k = a.cols();
  Matrix ata(k, k);
  Vector aty(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t r = 0; r <= c; ++r) {
      double s = 0.0;
      for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, r) * a(i, c);
      ata(r, c) = s;
      ata(c, r) = s;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, c) * y[i];
    aty[c] = s;
  }
  if (!cholesky(ata)) throw std::runtime_error("reference_fits: rank failure");
  chol_solve(ata, aty);
  return aty;
}

Matrix with_intercept(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() > 0 ? a.rows() : b.rows(), 1 + a.cols() + b.cols());
  for (std::size_t i = 0; i < out.rows(); ++i) out(i, 0) = 1.0;
  for (std::size_t j = 0; j < a.cols(); ++j)
    std::copy(a.col(j), a.col(j) + a.rows(), out.col(1 + j));
  for (std::size_t j = 0; j < b.cols(); ++j)
    std::copy(b.col(j), b.col(j) + b.rows(), out.col(1 + a.cols() + j));
  return out;
}

}  // namespace

ReferenceFits reference_fits(const Vector& y, const Matrix& x, const Matrix& w,
                             const Matrix& z) {
  const std::size_t n = y.size();
  if ((x.cols() > 0 && x.rows() != n) || (w.cols() > 0 && w.rows() != n) ||
      z.cols() != x.cols())
    throw std::invalid_argument("reference_fits: shape mismatch");
  ReferenceFits out;

  const Matrix a_ols = with_intercept(x, w);
  Vector b = normal_equation_fit(a_ols, y);
  out.ols_intercept = b[0];
  out.ols_coef.assign(b.begin() + 1, b.end());

  // first stage: fitted values of each X column on [1 Z W]
  const Matrix a_fs = with_intercept(z, w);
  Matrix xhat(n, x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    Vector xj(x.col(j), x.col(j) + n);
    const Vector c = normal_equation_fit(a_fs, xj);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t t = 0; t < a_fs.cols(); ++t) s += a_fs(i, t) * c[t];
      xhat(i, j) = s;
    }
  }
  const Matrix a_tsls = with_intercept(xhat, w);
  Vector b2 = normal_equation_fit(a_tsls, y);
  out.tsls_intercept = b2[0];
  out.tsls_coef.assign(b2.begin() + 1, b2.end());
  return out;
}

}  // namespace bma
