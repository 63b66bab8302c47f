#include "projlm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace projlm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Mean shifted by the first value; exact for constant input.
double shifted_mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double x0 = x[0];
  double s = 0.0;
  for (double v : x) s += v - x0;
  return x0 + s / static_cast<double>(x.size());
}

std::vector<double> autocov(std::span<const double> x, std::size_t max_lag, double mean) {
  const std::size_t n = x.size();
  std::vector<double> c(n);
  for (std::size_t t = 0; t < n; ++t) c[t] = x[t] - mean;
  std::vector<double> g(max_lag + 1, 0.0);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double s = 0.0;
    for (std::size_t t = k; t < n; ++t) s += c[t] * c[t - k];
    g[k] = s / static_cast<double>(n);
  }
  return g;
}

void check_paths(PathSet paths) {
  if (paths.empty()) throw std::invalid_argument("no paths given");
  const std::size_t n = paths[0].size();
  if (n == 0) throw std::invalid_argument("empty path");
  for (const auto& p : paths) {
    if (p.size() != n) throw std::invalid_argument("paths have different lengths");
  }
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v, double m) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_se = kNaN;
};

LineFit ols(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return f;
}

// Quadratic coefficient of y on centered x and its OLS standard error.
std::pair<double, double> quadratic_term(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 4) return {0.0, kNaN};
  const double mx = mean_of(x);
  double S[5] = {0, 0, 0, 0, 0};
  double T[3] = {0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const double u = x[i] - mx;
    double p = 1.0;
    for (int e = 0; e < 5; ++e) {
      S[e] += p;
      if (e < 3) T[e] += p * y[i];
      p *= u;
    }
  }
  // Normal equations [S0 S1 S2; S1 S2 S3; S2 S3 S4] c = T, by Cramer's rule.
  const double A[3][3] = {{S[0], S[1], S[2]}, {S[1], S[2], S[3]}, {S[2], S[3], S[4]}};
  auto det3 = [](const double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  const double D = det3(A);
  double coef[3];
  for (int j = 0; j < 3; ++j) {
    double M[3][3];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) M[r][c] = c == j ? T[r] : A[r][c];
    coef[j] = det3(M) / D;
  }
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = x[i] - mx;
    const double r = y[i] - coef[0] - coef[1] * u - coef[2] * u * u;
    rss += r * r;
  }
  const double sigma2 = rss / static_cast<double>(n - 3);
  // (A^{-1})_{22} = cofactor / det
  const double inv22 = (A[0][0] * A[1][1] - A[0][1] * A[1][0]) / D;
  return {coef[2], std::sqrt(sigma2 * inv22)};
}

std::pair<double, double> percentile_ci(std::vector<double> v, double level) {
  if (v.empty()) return {kNaN, kNaN};
  std::sort(v.begin(), v.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return i + 1 < v.size() ? v[i] * (1.0 - f) + v[i + 1] * f : v[i];
  };
  const double a = 0.5 * (1.0 - level);
  return {q(a), q(1.0 - a)};
}

std::vector<std::size_t> geometric_grid(double lo, double hi, std::size_t count) {
  std::vector<std::size_t> out;
  if (count == 0 || hi < lo) return out;
  for (std::size_t i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    const double v = std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
    const auto k = static_cast<std::size_t>(std::llround(v));
    if (k >= 1 && (out.empty() || out.back() != k)) out.push_back(k);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// sample_acf
// ---------------------------------------------------------------------------

AcfEstimate sample_acf(PathSet paths, std::size_t max_lag, const AcfOptions& options) {
  check_paths(paths);
  const std::size_t n = paths[0].size();
  if (4 * max_lag >= n) {
    throw std::invalid_argument("max_lag " + std::to_string(max_lag) + " must be below n/4 (n = " +
                                std::to_string(n) + ")");
  }
  AcfEstimate est;
  est.n = n;
  est.replicates = paths.size();
  est.lags.resize(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) est.lags[k] = k;
  for (const auto& p : paths) {
    const double m = options.known_mean.value_or(shifted_mean(p));
    est.per_replicate.push_back(autocov(p, max_lag, m));
  }
  est.gamma.assign(max_lag + 1, 0.0);
  est.se.assign(max_lag + 1, 0.0);
  const double R = static_cast<double>(paths.size());
  std::vector<double> col(paths.size());
  for (std::size_t k = 0; k <= max_lag; ++k) {
    for (std::size_t r = 0; r < paths.size(); ++r) col[r] = est.per_replicate[r][k];
    est.gamma[k] = mean_of(col);
    if (paths.size() > 1) est.se[k] = sd_of(col, est.gamma[k]) / std::sqrt(R);
  }
  if (paths.size() == 1) {
    const auto& g = est.gamma;
    auto at = [&](std::ptrdiff_t j) {
      const auto a = static_cast<std::size_t>(j < 0 ? -j : j);
      return a <= max_lag ? g[a] : 0.0;
    };
    const auto L = static_cast<std::ptrdiff_t>(max_lag);
    for (std::size_t k = 0; k <= max_lag; ++k) {
      double v = 0.0;
      const auto kk = static_cast<std::ptrdiff_t>(k);
      for (std::ptrdiff_t j = -L; j <= L; ++j) v += at(j) * at(j) + at(j + kk) * at(j - kk);
      est.se[k] = std::sqrt(std::max(0.0, v) / static_cast<double>(n));
    }
  }
  return est;
}

AcfEstimate sample_acf(std::span<const double> path, std::size_t max_lag,
                       const AcfOptions& options) {
  const std::vector<std::vector<double>> one{std::vector<double>(path.begin(), path.end())};
  return sample_acf(PathSet(one), max_lag, options);
}

// ---------------------------------------------------------------------------
// theoretical_linear_acf
// ---------------------------------------------------------------------------

double theoretical_linear_acf(std::span<const double> b, std::size_t k) {
  double s = 0.0;
  for (std::size_t j = 0; j + k < b.size(); ++j) s += b[j] * b[j + k];
  return s;
}

LinearAcf theoretical_linear_acf(const Sequence& b, std::size_t k, const TruncationPolicy& policy,
                                 std::optional<std::size_t> truncate_at) {
  LinearAcf out;
  if (truncate_at) {
    const auto v = b.materialize(*truncate_at + 1);
    out.value = theoretical_linear_acf(v, k);
    out.method = SeriesMethod::TruncatedSeries;
    return out;
  }
  const bool plain = b.base() == SeqBase::Zero && !b.zero_at_origin();
  if (b.is_zero()) return out;
  if (auto* g = std::get_if<GeometricSeq>(&b.shape()); g && plain) {
    if (std::abs(g->ratio) >= 1.0) {
      out.status = SeriesStatus::Diverged;
      return out;
    }
    out.value = g->scale * g->scale * std::pow(g->ratio, static_cast<double>(k)) /
                (1.0 - g->ratio * g->ratio);
    return out;
  }
  if (auto* a = std::get_if<ArfimaSeq>(&b.shape()); a && plain) {
    const double d = a->d, s2 = a->scale * a->scale;
    if (d >= 0.5) {
      out.status = SeriesStatus::Diverged;
      return out;
    }
    if (d == 0.0) {
      out.value = k == 0 ? s2 : 0.0;
      return out;
    }
    if (k == 0) {
      out.value = s2 * std::exp(std::lgamma(1.0 - 2.0 * d) - 2.0 * std::lgamma(1.0 - d));
    } else {
      // Gamma(1-2d) Gamma(k+d) / (Gamma(d) Gamma(1-d) Gamma(k+1-d))
      out.value = s2 * std::tgamma(1.0 - 2.0 * d) / (std::tgamma(d) * std::tgamma(1.0 - d)) *
                  std::exp(std::lgamma(k + d) - std::lgamma(k + 1.0 - d));
    }
    if (d > 0.0 && k > 0) {
      const double kappa = a->scale / std::tgamma(d);
      out.asymptotic = kappa * kappa * std::exp(log_beta(d, 1.0 - 2.0 * d)) *
                       std::pow(static_cast<double>(k), 2.0 * d - 1.0);
    }
    return out;
  }
  if (auto s = b.support()) {
    out.value = theoretical_linear_acf(b.materialize(*s), k);
    return out;
  }
  const auto r = sum_series([&](std::size_t j) { return b.at(j) * b.at(j + k); }, policy);
  out.value = r.value;
  out.remainder = r.remainder;
  out.status = r.status;
  out.method = SeriesMethod::TruncatedSeries;
  return out;
}

LongMemoryParams long_memory_params(double d, double kappa) {
  if (!(d > 0.0 && d < 0.5)) throw std::invalid_argument("long memory needs 0 < d < 1/2");
  LongMemoryParams p;
  p.d = d;
  p.kappa = kappa;
  p.H = d + 0.5;
  p.kappa_d2_stated = kappa * kappa * std::exp(log_beta(d, 1.0 - d));
  p.kappa_d2 = kappa * kappa * std::exp(log_beta(d, 1.0 - 2.0 * d));
  p.c_kd2_stated = p.kappa_d2_stated / (d * (1.0 + 2.0 * d));
  p.c_kd2 = p.kappa_d2 / (d * (1.0 + 2.0 * d));
  return p;
}

// ---------------------------------------------------------------------------
// Fits
// ---------------------------------------------------------------------------

std::vector<std::size_t> default_fit_lags(std::size_t n, std::size_t count) {
  const double nn = static_cast<double>(n);
  return geometric_grid(std::pow(nn, 0.3), std::pow(nn, 0.7), count);
}

DecayFit acf_decay_fit(const AcfEstimate& acf, const FitOptions& options) {
  const std::size_t max_lag = acf.gamma.empty() ? 0 : acf.gamma.size() - 1;
  std::vector<std::size_t> lags = options.lags.empty() ? default_fit_lags(acf.n) : options.lags;
  DecayFit fit;
  for (std::size_t k : lags) {
    if (k == 0 || k > max_lag || !(acf.gamma[k] > 0.0)) {
      fit.range_shrunk = true;
      continue;
    }
    fit.lags_used.push_back(k);
  }
  if (fit.lags_used.size() < 3) {
    throw std::invalid_argument("fewer than three usable lags for the decay fit");
  }
  std::vector<double> x, y;
  for (std::size_t k : fit.lags_used) {
    x.push_back(std::log(static_cast<double>(k)));
    y.push_back(std::log(acf.gamma[k]));
  }
  const LineFit lf = ols(x, y);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  fit.d_hat = 0.5 * (lf.slope + 1.0);
  const auto [c2, c2se] = quadratic_term(x, y);
  fit.curvature = c2;
  fit.curvature_se = c2se;
  // The absolute floor keeps rounding noise on exact power laws from flagging.
  fit.curvature_flag = std::isfinite(c2se) && std::abs(c2) > 3.0 * c2se && std::abs(c2) > 1e-8;

  const std::size_t R = acf.per_replicate.size();
  if (R >= 2 && options.bootstrap > 0) {
    std::mt19937_64 rng(options.bootstrap_seed);
    std::uniform_int_distribution<std::size_t> pick(0, R - 1);
    std::vector<double> ds, yb(fit.lags_used.size());
    for (std::size_t b = 0; b < options.bootstrap; ++b) {
      std::vector<double> g(fit.lags_used.size(), 0.0);
      for (std::size_t r = 0; r < R; ++r) {
        const auto& row = acf.per_replicate[pick(rng)];
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += row[fit.lags_used[i]];
      }
      bool ok = true;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(g[i] > 0.0)) ok = false;
        yb[i] = ok ? std::log(g[i] / static_cast<double>(R)) : 0.0;
      }
      if (ok) ds.push_back(0.5 * (ols(x, yb).slope + 1.0));
    }
    std::tie(fit.ci_lo, fit.ci_hi) = percentile_ci(std::move(ds), options.level);
  } else if (std::isfinite(lf.slope_se)) {
    const double z = normal_quantile(0.5 + 0.5 * options.level);
    fit.ci_lo = fit.d_hat - 0.5 * z * lf.slope_se;
    fit.ci_hi = fit.d_hat + 0.5 * z * lf.slope_se;
  } else {
    fit.ci_lo = fit.ci_hi = kNaN;
  }
  return fit;
}

ScalingFit partial_sum_scaling(PathSet paths, const ScalingOptions& options) {
  check_paths(paths);
  const std::size_t n = paths[0].size();
  std::vector<std::size_t> sizes = options.block_sizes;
  if (sizes.empty()) sizes = geometric_grid(10.0, static_cast<double>(n / 8), 12);
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  if (sizes.size() < 2) throw std::invalid_argument("need at least two block sizes");
  for (std::size_t m : sizes) {
    if (m == 0 || 8 * m > n) {
      throw std::invalid_argument("block size " + std::to_string(m) + " exceeds n/8 (n = " +
                                  std::to_string(n) + ")");
    }
  }
  const std::size_t R = paths.size();
  std::vector<double> centers(R);
  for (std::size_t r = 0; r < R; ++r) {
    centers[r] = options.known_mean.value_or(shifted_mean(paths[r]));
  }

  // ss[r][i]: sum of squared centered block sums of replicate r at size i.
  std::vector<std::vector<double>> ss(R, std::vector<double>(sizes.size(), 0.0));
  std::vector<std::size_t> blocks(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const std::size_t m = sizes[i];
    blocks[i] = n / m;
    for (std::size_t r = 0; r < R; ++r) {
      const auto& p = paths[r];
      for (std::size_t b = 0; b < blocks[i]; ++b) {
        double s = 0.0;
        for (std::size_t t = b * m; t < (b + 1) * m; ++t) s += p[t] - centers[r];
        ss[r][i] += s * s;
      }
    }
  }
  const std::size_t dof_loss = options.known_mean ? 0 : 1;
  auto pooled = [&](const std::vector<std::size_t>& reps) {
    std::vector<double> v(sizes.size(), 0.0);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      for (std::size_t r : reps) v[i] += ss[r][i];
      const std::size_t cnt = reps.size() * (blocks[i] - dof_loss);
      v[i] /= static_cast<double>(cnt);
    }
    return v;
  };
  std::vector<std::size_t> all(R);
  for (std::size_t r = 0; r < R; ++r) all[r] = r;

  ScalingFit fit;
  fit.block_sizes = sizes;
  fit.block_variance = pooled(all);
  std::vector<double> x;
  for (std::size_t m : sizes) x.push_back(std::log(static_cast<double>(m)));
  auto h_of = [&](const std::vector<double>& v) {
    std::vector<double> y;
    for (double w : v) y.push_back(std::log(w));
    return 0.5 * ols(x, y).slope;
  };
  for (double v : fit.block_variance) {
    if (!(v > 0.0)) fit.degenerate = true;
  }
  if (fit.degenerate) {
    fit.H_hat = fit.ci_lo = fit.ci_hi = kNaN;
    fit.skewness = fit.kurtosis = kNaN;
    return fit;
  }
  fit.H_hat = h_of(fit.block_variance);

  // Shape of the standardized block sums at the largest block.
  const std::size_t m = sizes.back();
  const double sd = std::sqrt(fit.block_variance.back());
  double s3 = 0.0, s4 = 0.0;
  std::size_t N = 0;
  for (std::size_t r = 0; r < R; ++r) {
    const auto& p = paths[r];
    for (std::size_t b = 0; b < n / m; ++b) {
      double s = 0.0;
      for (std::size_t t = b * m; t < (b + 1) * m; ++t) s += p[t] - centers[r];
      const double z = s / sd;
      s3 += z * z * z;
      s4 += z * z * z * z;
      ++N;
    }
  }
  fit.largest_block_count = N;
  fit.skewness = s3 / static_cast<double>(N);
  fit.kurtosis = s4 / static_cast<double>(N);
  fit.skewness_se = std::sqrt(6.0 / static_cast<double>(N));
  fit.kurtosis_se = std::sqrt(24.0 / static_cast<double>(N));

  if (R >= 2 && options.bootstrap > 0) {
    std::mt19937_64 rng(options.bootstrap_seed);
    std::uniform_int_distribution<std::size_t> pick(0, R - 1);
    std::vector<double> hs;
    std::vector<std::size_t> reps(R);
    for (std::size_t b = 0; b < options.bootstrap; ++b) {
      for (auto& r : reps) r = pick(rng);
      const auto v = pooled(reps);
      if (std::all_of(v.begin(), v.end(), [](double w) { return w > 0.0; })) hs.push_back(h_of(v));
    }
    std::tie(fit.ci_lo, fit.ci_hi) = percentile_ci(std::move(hs), options.level);
  } else {
    std::vector<double> y;
    for (double w : fit.block_variance) y.push_back(std::log(w));
    const LineFit lf = ols(x, y);
    const double z = normal_quantile(0.5 + 0.5 * options.level);
    fit.ci_lo = fit.H_hat - 0.5 * z * lf.slope_se;
    fit.ci_hi = fit.H_hat + 0.5 * z * lf.slope_se;
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Dependence and marginals
// ---------------------------------------------------------------------------

Statistic squared_lag_cov(PathSet paths, std::size_t lag) {
  check_paths(paths);
  if (lag == 0) throw std::invalid_argument("squared_lag_cov needs lag >= 1");
  const std::size_t n = paths[0].size();
  if (lag >= n) throw std::invalid_argument("lag exceeds the path length");
  Statistic out;
  std::vector<double> per;
  std::vector<double> prod;
  for (const auto& p : paths) {
    std::vector<double> y(n);
    for (std::size_t t = 0; t < n; ++t) y[t] = p[t] * p[t];
    const double m = shifted_mean(y);
    prod.assign(n - lag, 0.0);
    for (std::size_t t = lag; t < n; ++t) prod[t - lag] = (y[t] - m) * (y[t - lag] - m);
    per.push_back(mean_of(prod));
    out.samples += prod.size();
  }
  if (paths.size() > 1) {
    out.value = mean_of(per);
    out.se = sd_of(per, out.value) / std::sqrt(static_cast<double>(per.size()));
    return out;
  }
  constexpr std::size_t kBatches = 20;
  const std::size_t len = prod.size() / kBatches;
  out.value = per[0];
  if (len == 0) {
    out.se = kNaN;
    return out;
  }
  std::vector<double> bm(kBatches);
  for (std::size_t b = 0; b < kBatches; ++b) {
    bm[b] = mean_of(std::span<const double>(prod).subspan(b * len, len));
  }
  out.se = sd_of(bm, mean_of(bm)) / std::sqrt(static_cast<double>(kBatches));
  return out;
}

Histogram histogram(PathSet paths, std::size_t bins) {
  if (bins < 2) throw std::invalid_argument("histogram needs at least two bins");
  check_paths(paths);
  std::vector<double> all;
  for (const auto& p : paths) all.insert(all.end(), p.begin(), p.end());
  Histogram h;
  h.samples = all.size();
  const auto [mn, mx] = std::minmax_element(all.begin(), all.end());
  double lo = *mn, hi = *mx;
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double w = (hi - lo) / static_cast<double>(bins);
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + w * static_cast<double>(i);
  h.edges[bins] = hi;
  h.counts.assign(bins, 0);
  for (double x : all) {
    auto i = static_cast<std::size_t>(std::floor((x - lo) / w));
    h.counts[std::min(i, bins - 1)]++;
  }
  h.mean = shifted_mean(all);
  double v = 0.0;
  for (double x : all) v += (x - h.mean) * (x - h.mean);
  h.variance = v / static_cast<double>(all.size());
  const double N = static_cast<double>(all.size());
  const double sd = std::sqrt(h.variance);
  for (std::size_t i = 0; i < bins; ++i) {
    const double p = static_cast<double>(h.counts[i]) / N;
    h.density.push_back(p / w);
    h.density_se.push_back(std::sqrt(p * (1.0 - p) / N) / w);
    if (sd > 0.0) {
      const double c = 0.5 * (h.edges[i] + h.edges[i + 1]);
      const double z = (c - h.mean) / sd;
      h.overlay.push_back(std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi)));
      h.overlay_bin.push_back((normal_cdf((h.edges[i + 1] - h.mean) / sd) -
                               normal_cdf((h.edges[i] - h.mean) / sd)) /
                              w);
    } else {
      h.overlay.push_back(0.0);
      h.overlay_bin.push_back(0.0);
    }
  }
  return h;
}

double bounded_kernel_envelope(const Kernel& kernel, std::span<const double> innovations,
                               std::size_t M) {
  const double sup = kernel_sup(kernel);
  if (!std::isfinite(sup)) throw std::invalid_argument("kernel " + kernel.name() + " is unbounded");
  if (innovations.size() < M + 1) throw std::invalid_argument("too few innovations for M");
  double best = 0.0;
  for (std::size_t u = M; u < innovations.size(); ++u) {
    double s = 0.0;
    for (std::size_t k = 0; k <= M; ++k) s += std::abs(innovations[u - k]);
    best = std::max(best, s);
  }
  return sup * best;
}

}  // namespace projlm
