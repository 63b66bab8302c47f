#pragma once

/// \file
/// Coefficient recursions and truncated simulation
///
///   X_t = mu + sum_{k=0}^{M} g_{t-k,t} zeta_{t-k},   t = 1..n.
///
/// Slices are stored in lag order: values[k] = g_{t-k,t}.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "projlm/model.hpp"
#include "projlm/rng.hpp"

namespace projlm {

struct CoefficientSlice {
  std::int64_t t = 0;
  std::size_t M = 0;
  std::vector<double> values;  ///< g_{t-k,t}, k = 0..M
};

/// Thrown by `simulate` when the spec fails its existence check and the
/// caller did not force the run.
class RefusalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Past state for the families whose slices depend on earlier slices.
/// `prev[m-1]` is the slice at time t - m. `window` must cover the
/// innovations of those slices (see `coefficient_slice`).
struct SliceHistory {
  std::span<const CoefficientSlice> prev;
  /// Treat missing past slices with the cold-start rule instead of failing:
  /// Lagged uses g_{t-1-k,t-1} = Q(alpha_k), TvArfima uses zero partial
  /// projections.
  bool cold_start = false;
};

/// One slice at time t from the lag-ordered window window[k] = zeta_{t-k},
/// k = 0..M (window.size() = M + 1).
///
/// Lagged needs prev[0] (time t-1) and reads zeta_{t-1-i} = window[i+1];
/// the last previous coefficient therefore does not enter. TvArfima needs
/// prev[m-1] for m = 1..M-1.
///
/// Throws std::invalid_argument when history is missing and cold start is
/// off, std::overflow_error on a non-finite coefficient (naming k).
[[nodiscard]] CoefficientSlice coefficient_slice(const EquationSpec& spec,
                                                 std::span<const double> window,
                                                 const SliceHistory& history = {},
                                                 std::int64_t t = 0);

struct Path {
  std::vector<double> values;  ///< X_1..X_n
  std::size_t n = 0;
  std::size_t M = 0;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  double mu = 0.0;
  /// Filled when slices are retained: zeta_{1-M}..zeta_n and the slices at
  /// t = 1..n.
  std::vector<double> innovations;
  std::vector<std::vector<double>> slices;

  [[nodiscard]] bool retained() const noexcept { return !slices.empty(); }
  /// zeta_u for 1 - M <= u <= n (requires retention).
  [[nodiscard]] double zeta(std::int64_t u) const;
  /// g_{t-k,t} (requires retention).
  [[nodiscard]] const std::vector<double>& slice(std::int64_t t) const;
};

struct SimulationConfig {
  std::size_t n = 1;
  /// Truncation level; defaults to n.
  std::optional<std::size_t> M;
  std::size_t replicates = 1;
  /// Worker count; 0 picks min(hardware threads, PROJLM_THREADS).
  std::size_t threads = 0;
  bool retain_slices = false;
  /// Skip the existence check.
  bool force = false;
  /// Index of the first replicate (substream ids are first_replicate + r).
  std::uint64_t first_replicate = 0;
};

/// Number of workers used for `replicates` units with a requested count
/// (0 = automatic).
[[nodiscard]] std::size_t worker_count(std::size_t requested, std::size_t units);

/// Burn-in steps run before t = 1 (M for Lagged and TvArfima, else 0).
[[nodiscard]] std::size_t burn_in(const EquationSpec& spec, std::size_t M);

/// Simulates replicate paths. Replicate r uses substream first_replicate + r
/// and its result does not depend on the worker count.
/// Throws RefusalError if the spec's existence verdict is "no" and
/// config.force is false, std::overflow_error on non-finite values.
[[nodiscard]] std::vector<Path> simulate(const EquationSpec& spec, const SimulationConfig& config,
                                         const InnovationStream& stream);

/// Single path; no existence check.
[[nodiscard]] Path simulate_path(const EquationSpec& spec, std::size_t n, std::size_t M,
                                 const InnovationStream& stream, std::uint64_t replicate,
                                 bool retain_slices = false);

/// E_{[s,t]} X_t = mu + sum_{u=s}^{t} zeta_u g_{u,t}. An empty range
/// (s = t + 1) gives mu. Requires retained slices and t - s <= M.
[[nodiscard]] double project(const Path& path, std::int64_t s, std::int64_t t);

struct FilteredPath {
  /// u_t = sum_j a_j X_{t-j} for t = first_t..n
  std::vector<double> values;
  std::int64_t first_t = 1;
  /// G_{t-k,t} = sum_{j=0}^{k} a_j g_{t-k,t-j} for t = first_t..n
  std::vector<std::vector<double>> slices;
  double mean = 0.0;  ///< E u_t = mu * sum_j a_j
};

/// Linear filter of a retained path with coefficients a_0..a_{J}. Outputs
/// start at t = J + 1 so every term has data; coefficient lags reaching
/// before t = 1 are dropped (truncation).
[[nodiscard]] FilteredPath linear_filter(const Path& path, std::span<const double> a);

/// Direct truncated linear moving average mu + sum_{k=0}^{M} b_k zeta_{t-k}
/// for t = 1..n from the same stream (reference for linear specs).
[[nodiscard]] std::vector<double> linear_moving_average(double mu, std::span<const double> b,
                                                        std::size_t n,
                                                        const InnovationStream& stream,
                                                        std::uint64_t replicate);

}  // namespace projlm
