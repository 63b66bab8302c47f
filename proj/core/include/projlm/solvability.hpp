#pragma once

/// \file
/// Solvability series and moment / weak-dependence bounds.

#include <optional>
#include <string>
#include <vector>

#include "projlm/model.hpp"
#include "projlm/series.hpp"

namespace projlm {

enum class Verdict { Yes, No, Undetermined };

[[nodiscard]] std::string to_string(Verdict v);

/// Moment parameters for the p-th moment bound: mu_p = E|zeta_0|^p and the
/// Rosenthal-type constant C_p.
struct MomentParams {
  double p = 2.0;
  double mu_p = 1.0;
  double c_p = 1.0;

  /// Throws std::invalid_argument unless p >= 2, mu_p >= 1 and c_p > 0.
  void validate() const;

  /// p with Gaussian mu_p and the default C_p.
  static MomentParams gaussian(double p);
};

/// E|Z|^p for standard normal Z.
[[nodiscard]] double gaussian_abs_moment(double p);

/// Default for C_p: 1 at p = 2, otherwise (p / ln p)^p. Only the growth
/// order C_p^{1/p} = O(p / log p) is known; this is a heuristic placeholder
/// and callers with a better constant should pass it explicitly.
[[nodiscard]] double default_rosenthal_constant(double p);

struct SolvabilityReport {
  Family family = Family::FamilyI;
  /// K_Q. Absent when it does not apply (FamilyII, or a finitely supported
  /// spec without c_Q).
  std::optional<SeriesResult> kq;
  std::optional<SeriesResult> kq_p;
  std::optional<MomentParams> moment;
  std::optional<SeriesResult> tilde_kq;
  /// c0^2 sum_k (c1 bar-beta)^{2k} A^2_0 ... A^2_k, an upper bound for tilde_kq.
  std::optional<SeriesResult> tilde_kq_envelope;
  std::optional<SeriesResult> omega2_bound;
  /// c_Q^2 A^2 sum_k c_Q^{2k} B^2_1 ... B^2_k, upper bound for SumForm K_Q.
  std::optional<SeriesResult> kq_sum_form_bound;
  double a2 = 0.0;
  std::optional<double> b2;
  Verdict exists = Verdict::Undetermined;
  SeriesMethod method = SeriesMethod::ClosedForm;
  double truncation_remainder = 0.0;
  std::vector<std::string> notes;
};

/// Maps a series outcome to an existence verdict: closed-form or converged
/// series give yes, a series still moving at the budget with increment
/// ratio >= 0.99 gives undetermined, divergence gives no.
[[nodiscard]] Verdict verdict_from(const SeriesResult& r);

/// K_Q for FamilyI, Lagged and Larch (mapped to FamilyI) specs.
/// Throws std::invalid_argument for FamilyII / TvArfima specs and when c_Q
/// is not declared.
[[nodiscard]] SolvabilityReport compute_kq(const EquationSpec& spec,
                                           const TruncationPolicy& trunc = {});

/// K_Q by truncated nested summation regardless of the beta structure
/// (bypasses the ColumnForm closed form; used for cross-checks).
[[nodiscard]] SeriesResult kq_truncated_series(const EquationSpec& spec,
                                               const TruncationPolicy& trunc = {});

/// K_{Q,p}: C_p^{2/p} times K_Q evaluated with c_Q replaced by
/// c_Q (C_p mu_p)^{1/p}.
[[nodiscard]] SeriesResult compute_kq_p(const EquationSpec& spec, const MomentParams& m,
                                        const TruncationPolicy& trunc = {});

/// tilde-K_Q for FamilyII specs. The report carries the envelope bound when
/// bar-beta = sup |beta_{i,j}| is finite.
[[nodiscard]] SolvabilityReport compute_tilde_kq(const EquationSpec& spec,
                                                 const TruncationPolicy& trunc = {});

/// Right-hand side of the Omega(2) bound:
/// c_Q sum_i |alpha_i| F(i), F(i) = 1 + c_Q sum_j |beta_{i,j}| F(i + j).
[[nodiscard]] SeriesResult compute_omega2_bound(const EquationSpec& spec,
                                                const TruncationPolicy& trunc = {});

struct LarchReport {
  bool exists = false;
  double b2 = 0.0;
  /// alpha^2 B^2 / (1 - B^2); absent when B >= 1.
  std::optional<double> variance;
  /// C_p^{1/p} mu_p^{1/p} B < 1
  std::optional<bool> p_condition_holds;
  std::optional<SeriesResult> p_moment_bound;
  /// (2^p - p - 1)^{1/2} mu_p^{1/p} B < 1
  std::optional<bool> old_condition_holds;
};

[[nodiscard]] LarchReport larch_check(double alpha, const Sequence& beta,
                                      const std::optional<MomentParams>& m = std::nullopt,
                                      const TruncationPolicy& trunc = {});

struct RowCheck {
  Verdict verdict = Verdict::Undetermined;
  /// sup of c_Q^2 sum_j beta_{i,j}^2 over burn-in <= i <= horizon
  double sup_row_sum = 0.0;
  std::vector<double> row_sums;  ///< rows 0..horizon
  /// Set when some row sums are truncated series rather than exact values.
  bool tail_flagged = false;
};

/// Numerical version of limsup_i sum_j c_Q^2 beta_{i,j}^2 < 1: the verdict is
/// yes when the running sup over rows horizon/2..horizon is below one and no
/// otherwise.
[[nodiscard]] RowCheck limsup_row_check(const BetaScheme& beta, double c_q, std::size_t horizon,
                                        const TruncationPolicy& trunc = {});

struct CheckOptions {
  TruncationPolicy trunc;
  std::optional<MomentParams> moment;
  bool omega2 = true;
};

/// Runs the calculators that apply to the spec's family.
[[nodiscard]] SolvabilityReport check_spec(const EquationSpec& spec,
                                           const CheckOptions& options = {});

}  // namespace projlm
