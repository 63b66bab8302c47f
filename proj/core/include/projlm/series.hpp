#pragma once

/// \file
/// Truncated evaluation of the infinite series that appear in the
/// solvability conditions: plain square sums (A^2, B^2_k) and the nested
/// "total lag" sums behind K_Q, K_{Q,p}, tilde-K_Q and the Omega(2) bound.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "projlm/model.hpp"

namespace projlm {

/// Series evaluation stops at the first of `max_terms` terms or an absolute
/// tail increment below `abs_tail_tol`.
struct TruncationPolicy {
  std::size_t max_terms = 1'000'000;
  double abs_tail_tol = 1e-12;
  /// Cap on the nesting depth k of the nested series; 0 means the depth is
  /// bounded only by the total-lag truncation.
  std::size_t max_depth = 0;
  /// Total-lag cap for nested series whose evaluation is quadratic in the lag.
  std::size_t max_dp_lag = 8192;
};

enum class SeriesMethod { ClosedForm, TruncatedSeries };
enum class SeriesStatus {
  Converged,  ///< closed form, or increments fell below the tolerance
  Estimated,  ///< budget exhausted before the increments fell below tolerance
  Diverged,   ///< increments failed to shrink (heuristic)
};

[[nodiscard]] std::string to_string(SeriesMethod m);
[[nodiscard]] std::string to_string(SeriesStatus s);

struct SeriesResult {
  SeriesStatus status = SeriesStatus::Converged;
  double value = 0.0;      ///< partial sum (meaningless when Diverged)
  double remainder = 0.0;  ///< estimate of the neglected tail, >= 0
  SeriesMethod method = SeriesMethod::ClosedForm;
  std::size_t terms = 0;   ///< terms or total lag used
  /// Observed ratio of consecutive increments at the end of the evaluation.
  double increment_ratio = 0.0;

  [[nodiscard]] bool convergent() const noexcept { return status != SeriesStatus::Diverged; }

  static SeriesResult exact(double v) {
    SeriesResult r;
    r.value = v;
    return r;
  }
  static SeriesResult diverged(SeriesMethod m = SeriesMethod::ClosedForm) {
    SeriesResult r;
    r.status = SeriesStatus::Diverged;
    r.method = m;
    r.value = 0.0;
    return r;
  }
};

/// Sums term(0) + term(1) + ... under the policy. Convergence is decided
/// from partial sums at doubling checkpoints: the tail is declared small
/// once the last doubling added less than `abs_tail_tol`; it is declared
/// divergent when increments stop shrinking. This is a heuristic.
[[nodiscard]] SeriesResult sum_series(const std::function<double(std::size_t)>& term,
                                      const TruncationPolicy& policy);

/// A^2_k = sum_{i >= k} alpha_i^2. Closed forms for Geometric, ARFIMA (the
/// full sum Gamma(1-2d)/Gamma(1-d)^2 minus the head) and finite sequences.
[[nodiscard]] SeriesResult tail_energy(const Sequence& seq, std::size_t k,
                                       const TruncationPolicy& policy = {});

/// B^2_k = sum_{j >= k} beta_j^2 for schemes with a one-index sequence
/// (SumForm, ColumnForm), ConstantOne (divergent) and Zero. `k` is clamped
/// to at least 1 since beta_0 never enters the equations.
[[nodiscard]] SeriesResult tail_energy(const BetaScheme& scheme, std::size_t k,
                                       const TruncationPolicy& policy = {});

/// sum_{i >= 0} |a_i| (absolute first moment of a sequence).
[[nodiscard]] SeriesResult abs_sum(const Sequence& seq, const TruncationPolicy& policy = {});

/// Description of a nested total-lag series
///
///   outer_factor * sum_i a(i) * F(i),
///   F(i) = 1 + inner_factor * sum_{j >= 1} b(i, j) F(i + j).
///
/// Expanding F reproduces sum_i a(i) sum_k inner^k sum_{j_1..j_k} b(i, j_1)
/// b(i + j_1, j_2) ... b(i + j_1 + ... + j_{k-1}, j_k), the shape of K_Q
/// and its relatives.
struct NestedSeries {
  enum class Structure {
    Zero,    ///< b == 0
    Sum,     ///< b(i, j) = w(i + j)
    Column,  ///< b(i, j) = w(j)
    Finite,  ///< b(i, j) = 0 for j > width
    Dense,   ///< anything else
  };

  /// a(0 .. count-1)
  std::function<std::vector<double>(std::size_t count)> a;
  /// w(0 .. count-1), used by the Sum and Column structures.
  std::function<std::vector<double>(std::size_t count)> w;
  /// b(i, j), used by the Finite and Dense structures. Only called with
  /// i + j <= the lag passed to `prepare`.
  std::function<double(std::size_t i, std::size_t j)> b;
  /// Called once with the largest total lag before `b` is used.
  std::function<void(std::size_t max_lag)> prepare;
  Structure structure = Structure::Dense;
  std::size_t width = 0;
  double outer_factor = 1.0;
  double inner_factor = 1.0;
};

/// Evaluates the nested series truncated at total lag L for L = 64, 128, ...
/// until the increment drops below tolerance or the lag budget is exhausted.
[[nodiscard]] SeriesResult evaluate_nested(const NestedSeries& series,
                                           const TruncationPolicy& policy);

/// Value of the nested series truncated at exactly total lag `lag`.
[[nodiscard]] double evaluate_nested_at(const NestedSeries& series, std::size_t lag,
                                        std::size_t max_depth = 0);

}  // namespace projlm
