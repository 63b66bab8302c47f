#pragma once

/// \file
/// Brute-force nested Volterra evaluation on small windows.
///
/// Sets S = {s_1 < ... < s_n} of a finite index set T are encoded as bit
/// masks over the ascending elements of T (bit b <-> T[b]). The successor
/// relation S < S' appends one element larger than max S.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "projlm/model.hpp"
#include "projlm/rng.hpp"

namespace projlm {

using SetMask = std::uint32_t;

/// Largest index set the oracle accepts.
inline constexpr std::size_t kOracleMaxWindow = 24;

/// Thrown when a window exceeds kOracleMaxWindow.
class OracleLimitError : public std::length_error {
 public:
  using std::length_error::length_error;
};

class IndexFamily {
 public:
  /// All nonempty subsets of T.
  static IndexFamily all_subsets(std::vector<std::int64_t> T);
  /// Nonempty subsets with at most k elements (maximal = exactly k, or
  /// ending at max T).
  static IndexFamily up_to_size(std::vector<std::int64_t> T, std::size_t k);
  /// Explicit class, closed under taking prefixes by construction of the
  /// caller; non-members are skipped.
  static IndexFamily explicit_class(std::vector<std::int64_t> T, std::vector<SetMask> members);

  [[nodiscard]] const std::vector<std::int64_t>& T() const noexcept { return T_; }
  [[nodiscard]] std::size_t size() const noexcept { return T_.size(); }
  [[nodiscard]] bool contains(SetMask S) const;
  /// Successors S' with S < S' inside the class (ascending new element).
  [[nodiscard]] std::vector<SetMask> successors(SetMask S) const;
  [[nodiscard]] bool maximal(SetMask S) const { return successors(S).empty(); }
  /// Elements of S in ascending order.
  [[nodiscard]] std::vector<std::int64_t> elements(SetMask S) const;

 private:
  IndexFamily(std::vector<std::int64_t> T, std::function<bool(SetMask)> member);
  std::vector<std::int64_t> T_;
  std::function<bool(SetMask)> member_;
};

struct Envelope {
  double alpha = 0.0;
  double beta = 0.0;
};

/// Functions G_S. For maximal S only G(S, 0) is used (the constant a_S).
struct GFamily {
  std::function<double(SetMask, double)> G;
  /// (alpha_S, beta_S) with |G_S(x)|^2 <= alpha_S^2 + beta_S^2 x^2.
  std::function<Envelope(SetMask)> envelope;
};

/// Nested Volterra series V(G_T) with zeta given per element of T (zeta[b]
/// belongs to T[b]). Top-level and inner sums run from the largest element
/// downwards. Throws OracleLimitError if |T| > kOracleMaxWindow.
[[nodiscard]] double nested_eval(const IndexFamily& family, const GFamily& g,
                                 std::span<const double> zeta);

/// Chain-sum bound A(S) = alpha_S^2 + beta_S^2 sum_{S < S'} A(S') for
/// non-maximal S and alpha_S^2 for maximal S, summed over singletons.
[[nodiscard]] double convergence_bound(const IndexFamily& family, const GFamily& g);

/// G_S table of a FamilyI spec on T = {t-W+1, ..., t} (all subsets):
///   {t}                 -> Q(alpha_0)
///   {s}, s < t          -> Q(alpha_{t-s} + x)
///   {s_1..s_k}, s_k = t -> beta_{0, t-s_{k-1}} Q(alpha_0)
///   {s_1..s_k}, s_k < t -> beta_{t-s_k, s_k-s_{k-1}} Q(alpha_{t-s_k} + x)
/// Envelopes use |Q(a + x)| <= c_Q (|a| + |x|). Throws for non-FamilyI
/// specs (LARCH is normalized first) and windows above the cap.
[[nodiscard]] std::pair<IndexFamily, GFamily> build_gfamily(const EquationSpec& spec,
                                                             std::int64_t t, std::size_t window);

struct VolterraTerm {
  double value = 0.0;
  /// Set when the order does not fit in the window (value is then 0).
  bool beyond_window = false;
};

/// X^{(k+1)}_t for a linear-kernel FamilyI spec, summed over all
/// multi-indices inside the window: order k = 0 is c_Q sum_i alpha_i
/// zeta_{t-i}; order k adds k factors c_Q beta zeta. window[i] = zeta_{t-i}.
[[nodiscard]] VolterraTerm linear_volterra_terms(const EquationSpec& spec, std::size_t order,
                                                 std::span<const double> window);

struct MomentEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t replicates = 0;
};

/// Monte Carlo estimate of E X^{(k)}_t X^{(l)}_{t-lag} (orders counted from
/// one, as in X^{(1)} = linear term) over independent windows.
[[nodiscard]] MomentEstimate mc_orthogonality_check(const EquationSpec& spec, std::size_t k,
                                                    std::size_t l, std::size_t replicates,
                                                    std::size_t window,
                                                    const InnovationStream& stream,
                                                    std::size_t lag = 0);

struct CompareTrial {
  double engine = 0.0;  ///< X_1 from simulate_path with M = window - 1
  double oracle = 0.0;  ///< mu + nested_eval on the same innovations
  double abs_dev = 0.0;
  double rel_dev = 0.0;
};

struct CompareReport {
  std::vector<CompareTrial> trials;
  double max_abs_dev = 0.0;
  double max_rel_dev = 0.0;
};

/// Oracle-versus-engine comparison at t = 1 on T = {2-W, ..., 1}. Trial i
/// reads innovations from substream `first_replicate + i`. Throws
/// std::invalid_argument for non-FamilyI specs (after LARCH normalization)
/// and OracleLimitError above the oracle cap.
[[nodiscard]] CompareReport oracle_compare(const EquationSpec& spec, std::size_t window,
                                           std::size_t trials, const InnovationStream& stream,
                                           std::uint64_t first_replicate = 0);

/// Random FamilyI spec for property tests (kernel linear / relu / triangle,
/// all alpha shapes, all beta shapes); deterministic in `seed`. Finite
/// tables cover lags up to `max_lag`.
[[nodiscard]] EquationSpec random_family_i_spec(std::uint64_t seed, std::size_t max_lag = 8);

}  // namespace projlm
