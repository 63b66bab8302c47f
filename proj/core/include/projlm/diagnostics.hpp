#pragma once

/// \file
/// Long-memory and distributional diagnostics on simulated paths.
///
/// Functions taking `std::span<const std::vector<double>>` treat each vector
/// as an independent replicate of equal length.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "projlm/model.hpp"
#include "projlm/series.hpp"

namespace projlm {

using PathSet = std::span<const std::vector<double>>;

// ---------------------------------------------------------------------------
// Autocovariance
// ---------------------------------------------------------------------------

struct AcfOptions {
  /// Center at this mean instead of the per-path sample mean.
  std::optional<double> known_mean;
};

struct AcfEstimate {
  std::vector<std::size_t> lags;  ///< 0..max_lag
  std::vector<double> gamma;      ///< average over replicates
  /// Between-replicate standard error, or Bartlett's approximation for a
  /// single path.
  std::vector<double> se;
  std::size_t n = 0;
  std::size_t replicates = 0;
  std::vector<std::vector<double>> per_replicate;
};

/// Biased (divide-by-n) autocovariances for lags 0..max_lag.
/// Throws std::invalid_argument unless 4 max_lag < n.
[[nodiscard]] AcfEstimate sample_acf(PathSet paths, std::size_t max_lag,
                                     const AcfOptions& options = {});
[[nodiscard]] AcfEstimate sample_acf(std::span<const double> path, std::size_t max_lag,
                                     const AcfOptions& options = {});

struct LinearAcf {
  double value = 0.0;
  double remainder = 0.0;
  SeriesStatus status = SeriesStatus::Converged;
  SeriesMethod method = SeriesMethod::ClosedForm;
  /// kappa^2 B(d, 1-2d) k^{2d-1} for ARFIMA-type coefficients.
  std::optional<double> asymptotic;
};

/// gamma(k) = sum_j b_j b_{k+j}. Finite and geometric sequences and ARFIMA
/// weights are exact; `truncate_at` keeps only b_0..b_M (the autocovariance
/// of the truncated moving average) and is then summed directly.
[[nodiscard]] LinearAcf theoretical_linear_acf(const Sequence& b, std::size_t k,
                                               const TruncationPolicy& policy = {},
                                               std::optional<std::size_t> truncate_at = {});

/// gamma(k) = sum_j b_j b_{k+j} for an explicit finite vector.
[[nodiscard]] double theoretical_linear_acf(std::span<const double> b, std::size_t k);

struct LongMemoryParams {
  double d = 0.0;
  double kappa = 0.0;
  double H = 0.5;
  /// kappa^2 B(d, 1-d). Kept for comparison; it is not the limit below.
  double kappa_d2_stated = 0.0;
  /// kappa^2 B(d, 1-2d), the limit of sum_k b_k b_{t+k} / t^{2d-1}.
  double kappa_d2 = 0.0;
  /// Partial-sum variance constants, kappa_d2_* / (d (1 + 2d)).
  double c_kd2_stated = 0.0;
  double c_kd2 = 0.0;
};

/// Constants for b_j ~ kappa j^{d-1}, 0 < d < 1/2.
[[nodiscard]] LongMemoryParams long_memory_params(double d, double kappa);

// ---------------------------------------------------------------------------
// Decay and scaling fits
// ---------------------------------------------------------------------------

struct FitOptions {
  /// Lags to fit; empty picks 12 geometric lags in [n^0.3, n^0.7].
  std::vector<std::size_t> lags;
  std::size_t bootstrap = 200;
  std::uint64_t bootstrap_seed = 20240521;
  double level = 0.95;
};

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double d_hat = 0.0;
  double ci_lo = 0.0;  ///< for d_hat
  double ci_hi = 0.0;
  std::vector<std::size_t> lags_used;
  bool range_shrunk = false;
  /// Quadratic log-log term exceeds 3 standard errors.
  bool curvature_flag = false;
  double curvature = 0.0;
  double curvature_se = 0.0;
};

/// Least-squares slope of log gamma(k) on log k. Nonpositive averaged
/// values drop out of the range (flagged); throws std::invalid_argument if
/// fewer than three lags survive.
[[nodiscard]] DecayFit acf_decay_fit(const AcfEstimate& acf, const FitOptions& options = {});

/// Default fit lags for a path of length n (deduplicated, within max_lag).
[[nodiscard]] std::vector<std::size_t> default_fit_lags(std::size_t n, std::size_t count = 12);

struct ScalingOptions {
  /// Block sizes; empty picks 12 geometric sizes in [10, n/8].
  std::vector<std::size_t> block_sizes;
  std::optional<double> known_mean;
  std::size_t bootstrap = 200;
  std::uint64_t bootstrap_seed = 20240521;
  double level = 0.95;
};

struct ScalingFit {
  double H_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::vector<std::size_t> block_sizes;
  std::vector<double> block_variance;  ///< pooled over replicates
  /// Standardized block sums at the largest block, pooled.
  double skewness = 0.0;
  double skewness_se = 0.0;
  double kurtosis = 0.0;  ///< not excess
  double kurtosis_se = 0.0;
  std::size_t largest_block_count = 0;
  /// Zero block-sum variance (e.g. a constant path); H_hat is then NaN.
  bool degenerate = false;
};

/// Aggregated-variance estimate: the variance of block sums grows like
/// m^{2H}; H_hat is half the log-log slope. Throws std::invalid_argument
/// when a block exceeds n/8 or fewer than two block sizes are given.
[[nodiscard]] ScalingFit partial_sum_scaling(PathSet paths, const ScalingOptions& options = {});

// ---------------------------------------------------------------------------
// Dependence and marginal checks
// ---------------------------------------------------------------------------

struct Statistic {
  double value = 0.0;
  double se = 0.0;
  std::size_t samples = 0;
};

/// cov(X_t^2, X_{t-lag}^2). Between-replicate standard error for several
/// paths, batch means (20 batches) for one path. Throws for lag == 0.
[[nodiscard]] Statistic squared_lag_cov(PathSet paths, std::size_t lag);

struct Histogram {
  std::vector<double> edges;    ///< bins + 1
  std::vector<std::size_t> counts;
  std::vector<double> density;  ///< counts / (N width)
  std::vector<double> density_se;
  /// Normal density with the empirical mean and variance at bin centers,
  /// and its average over each bin.
  std::vector<double> overlay;
  std::vector<double> overlay_bin;
  double mean = 0.0;
  double variance = 0.0;
  std::size_t samples = 0;
};

/// Equal-width histogram over [min, max] (a unit interval around a
/// constant sample). Throws for bins < 2 or empty input.
[[nodiscard]] Histogram histogram(PathSet paths, std::size_t bins);

/// Per-time bound on |X_t - mu| for a kernel with finite sup |Q|:
/// sup|Q| * sum_{k=0}^{M} |zeta_{t-k}|, maximized over t = 1..n.
/// `innovations` holds zeta_{1-M}..zeta_n.
[[nodiscard]] double bounded_kernel_envelope(const Kernel& kernel,
                                             std::span<const double> innovations, std::size_t M);

}  // namespace projlm
