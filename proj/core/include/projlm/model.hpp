#pragma once

/// \file
/// Kernels, coefficient schemes and equation specifications.
///
/// Everything in this header is immutable after construction and contains no
/// randomness, so instances can be shared freely between worker threads.

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace projlm {

// ---------------------------------------------------------------------------
// Kernels Q
// ---------------------------------------------------------------------------

/// Q(x) = slope * x
struct LinearKernel {
  double slope = 1.0;
};

/// Q(x) = max(0, x)
struct ReluKernel {};

/// Q(x) = x on [0,1], 2 - x on [1,2], 0 elsewhere.
struct TriangleKernel {};

/// Q(x) = intercept + slope * x
struct AffineKernel {
  double intercept = 0.0;
  double slope = 1.0;
};

/// Piecewise constant kernel. With breakpoints b_1 < ... < b_{q-1} the cells
/// are (-inf, b_1), [b_1, b_2), ..., [b_{q-1}, +inf) and `values` holds one
/// value per cell.
struct StepKernel {
  std::vector<double> breakpoints;
  std::vector<double> values;
};

/// Q(x) = 1 if x lies in the interval, 0 otherwise.
struct IndicatorKernel {
  double lo = 0.0;
  double hi = 1.0;
  bool closed_lo = true;
  bool closed_hi = false;
};

using KernelShape = std::variant<LinearKernel, ReluKernel, TriangleKernel,
                                 AffineKernel, StepKernel, IndicatorKernel>;

/// Declared analytic constants of a kernel. They are trusted inputs; the
/// library only verifies them by sampling (see `verify_kernel_constants`).
struct KernelConstants {
  std::optional<double> c_q;  ///< |Q(x)| <= c_q |x|
  std::optional<double> c_l;  ///< |Q(x) - Q(y)| <= c_l |x - y|
  std::optional<double> c0;   ///< Q(x)^2 <= c0^2 + c1^2 x^2
  std::optional<double> c1;
};

struct KernelFlags {
  bool antisymmetric = false;
  bool monotone_nonneg = false;  ///< monotone nondecreasing on [0, inf)
  bool bounded = false;
};

class Kernel {
 public:
  /// Constructs a kernel with the default constants of its shape.
  explicit Kernel(KernelShape shape);
  /// Constructs a kernel with explicitly declared constants. Absent fields
  /// of `declared` fall back to the shape defaults.
  Kernel(KernelShape shape, const KernelConstants& declared);

  static Kernel linear(double slope = 1.0);
  static Kernel relu();
  static Kernel triangle();
  static Kernel affine(double intercept, double slope);
  static Kernel step(std::vector<double> breakpoints, std::vector<double> values);
  static Kernel indicator(double lo, double hi, bool closed_lo = true,
                          bool closed_hi = false);

  /// Evaluates Q(x). Throws std::domain_error for non-finite x.
  [[nodiscard]] double operator()(double x) const;
  /// Evaluates Q(x) without the finiteness check.
  [[nodiscard]] double eval_unchecked(double x) const noexcept;

  [[nodiscard]] const KernelShape& shape() const noexcept { return shape_; }
  [[nodiscard]] const KernelConstants& constants() const noexcept { return constants_; }
  [[nodiscard]] KernelFlags flags() const noexcept;
  [[nodiscard]] std::string name() const;

  /// Default constants implied by the shape alone.
  [[nodiscard]] static KernelConstants default_constants(const KernelShape& shape);

 private:
  KernelShape shape_;
  KernelConstants constants_;
};

[[nodiscard]] double eval_kernel(const Kernel& kernel, double x);

/// sup_x |Q(x)|; +infinity for unbounded kernels.
[[nodiscard]] double kernel_sup(const Kernel& kernel);

/// Result of checking declared kernel constants on a sampling grid.
struct KernelCheck {
  bool dominating_ok = true;  ///< |Q(x)| <= c_q |x|
  bool lipschitz_ok = true;   ///< |Q(x)-Q(y)| <= c_l |x-y|
  bool affine_bound_ok = true;  ///< Q(x)^2 <= c0^2 + c1^2 x^2
  double worst_dominating_excess = 0.0;
  double worst_lipschitz_excess = 0.0;
  double worst_affine_excess = 0.0;
};

/// Samples `points` equally spaced values on [lo, hi] (and all pairs of a
/// coarser subgrid for the Lipschitz check) and reports any violation of the
/// declared constants larger than `slack`.
[[nodiscard]] KernelCheck verify_kernel_constants(const Kernel& kernel, double lo = -50.0,
                                                  double hi = 50.0, std::size_t points = 20001,
                                                  double slack = 1e-12);

// ---------------------------------------------------------------------------
// One-index sequences (alpha_i, and the beta_j used by the structured beta
// schemes)
// ---------------------------------------------------------------------------

/// scale * ratio^i
struct GeometricSeq {
  double ratio = 0.5;
  double scale = 1.0;
};

/// scale * Gamma(d + i) / (Gamma(d) Gamma(i + 1)), generated by the
/// multiplicative recursion psi_i = psi_{i-1} (d + i - 1) / i, psi_0 = 1.
struct ArfimaSeq {
  double d = 0.4;
  double scale = 1.0;
};

/// Explicit finite list of values, zero beyond it.
struct FiniteSeq {
  std::vector<double> values;
};

struct ZeroSeq {};

using SequenceShape = std::variant<GeometricSeq, ArfimaSeq, FiniteSeq, ZeroSeq>;

/// Which index the first stored value of a `FiniteSeq` refers to.
///
/// Alpha sequences start at index 0; the one-index beta sequences of the
/// structured beta schemes start at index 1 (beta_1, beta_2, ...).
enum class SeqBase { Zero, One };

class Sequence {
 public:
  Sequence() : shape_(ZeroSeq{}) {}
  explicit Sequence(SequenceShape shape, SeqBase base = SeqBase::Zero,
                    bool zero_at_origin = false);

  static Sequence geometric(double ratio, double scale = 1.0);
  static Sequence arfima(double d, double scale = 1.0);
  static Sequence finite(std::vector<double> values, SeqBase base = SeqBase::Zero);
  static Sequence zero();

  /// Value at index i. ARFIMA values use the multiplicative recursion.
  [[nodiscard]] double at(std::size_t i) const;
  /// The first `count` values (indices 0..count-1).
  [[nodiscard]] std::vector<double> materialize(std::size_t count) const;
  /// Number of leading indices that can be nonzero, if finite.
  [[nodiscard]] std::optional<std::size_t> support() const;
  [[nodiscard]] bool is_zero() const;

  [[nodiscard]] const SequenceShape& shape() const noexcept { return shape_; }
  [[nodiscard]] SeqBase base() const noexcept { return base_; }
  /// When set, the value at index 0 is forced to zero (used by the LARCH
  /// normalization alpha_j = a * beta_j with beta_0 = 0).
  [[nodiscard]] bool zero_at_origin() const noexcept { return zero_at_origin_; }

  /// Returns a copy multiplied by `factor`.
  [[nodiscard]] Sequence scaled(double factor) const;

 private:
  SequenceShape shape_;
  SeqBase base_ = SeqBase::Zero;
  bool zero_at_origin_ = false;
};

using AlphaScheme = Sequence;

/// Psi-weights of ARFIMA(0,d,0): psi_0 .. psi_{count-1}.
[[nodiscard]] std::vector<double> arfima_weights(double d, std::size_t count);

[[nodiscard]] double alpha_at(const AlphaScheme& scheme, std::size_t i);

// ---------------------------------------------------------------------------
// Beta schemes beta_{i,j}, i >= 0, j >= 1
// ---------------------------------------------------------------------------

/// rows[i][j-1] = beta_{i,j}; zero outside the table.
struct BetaTable {
  std::vector<std::vector<double>> rows;
};

/// beta_{i,j} = row(i) * col(j)
struct BetaProduct {
  Sequence row;
  Sequence col;
};

/// General scheme: a finite table or a product-form generator rule.
struct GeneralBeta {
  std::variant<BetaTable, BetaProduct> rule;
};

/// beta_{i,j} = seq(i + j)
struct SumFormBeta {
  Sequence seq;
};

/// beta_{i,j} = seq(j)
struct ColumnFormBeta {
  Sequence seq;
};

/// beta_{i,j} = 1
struct ConstantOneBeta {};

struct ZeroBeta {};

/// Finite table whose entries vanish whenever i + j > p.
struct FiniteLagBeta {
  std::size_t p = 0;
  BetaTable table;
};

using BetaShape = std::variant<GeneralBeta, SumFormBeta, ColumnFormBeta, ConstantOneBeta,
                               ZeroBeta, FiniteLagBeta>;

class BetaScheme {
 public:
  BetaScheme() : shape_(ZeroBeta{}) {}
  explicit BetaScheme(BetaShape shape);

  static BetaScheme zero();
  static BetaScheme constant_one();
  static BetaScheme sum_form(Sequence seq);
  static BetaScheme column_form(Sequence seq);
  static BetaScheme table(std::vector<std::vector<double>> rows);
  static BetaScheme product(Sequence row, Sequence col);
  static BetaScheme finite_lag(std::size_t p, std::vector<std::vector<double>> rows);

  /// beta_{i,j}. Throws std::invalid_argument for j == 0.
  [[nodiscard]] double at(std::size_t i, std::size_t j) const;
  /// bar-beta_j = max_{0 <= i < j} |beta_{i, j-i}|.
  [[nodiscard]] double bar(std::size_t j) const;
  [[nodiscard]] bool is_zero() const;

  /// The one-index sequence of SumForm / ColumnForm schemes, else nullptr.
  [[nodiscard]] const Sequence* one_index_sequence() const noexcept;

  [[nodiscard]] const BetaShape& shape() const noexcept { return shape_; }

 private:
  BetaShape shape_;
};

[[nodiscard]] double beta_at(const BetaScheme& scheme, std::size_t i, std::size_t j);

/// Materializes a scheme into a General table covering all (i, j) with
/// i + j <= max_total.
[[nodiscard]] BetaScheme materialize_beta(const BetaScheme& scheme, std::size_t max_total);

// ---------------------------------------------------------------------------
// Equation specifications
// ---------------------------------------------------------------------------

enum class Family { FamilyI, FamilyII, Lagged, TvArfima, Larch };

[[nodiscard]] std::string to_string(Family f);
[[nodiscard]] Family family_from_string(const std::string& s);

/// Time-varying ARFIMA memory function d(x) and its declared bound.
struct TvArfimaParams {
  Kernel dfun = Kernel::affine(0.4, 0.0);
  double d_bar = 0.4;
};

/// LARCH: r_t = sigma_t zeta_t, sigma_t = intercept + sum_j beta_j r_{t-j}.
/// `beta` lists beta_1, beta_2, ... (finite sequences use SeqBase::One).
struct LarchParams {
  double intercept = 1.0;
  Sequence beta;
};

struct EquationSpec {
  Family family = Family::FamilyI;
  double mu = 0.0;
  Kernel kernel = Kernel::linear();
  AlphaScheme alpha;
  BetaScheme beta;
  std::optional<TvArfimaParams> tv;
  std::optional<LarchParams> larch;
  /// When set, g_{t-k,t} = 0 for k > lag_support (finitely supported outer
  /// sum, e.g. threshold equations with Q(0) != 0).
  std::optional<std::size_t> lag_support;

  /// Throws std::invalid_argument when the family's declared-constant
  /// requirements are not met.
  void validate() const;
};

/// Maps a LARCH spec to the equivalent FamilyI spec: identity kernel,
/// mu = intercept, alpha_j = intercept * beta_j (alpha_0 = 0) and
/// ColumnForm beta_{i,j} = beta_j. Other families are returned unchanged.
[[nodiscard]] EquationSpec normalize(const EquationSpec& spec);

[[nodiscard]] EquationSpec make_larch_spec(double intercept, Sequence beta);

}  // namespace projlm
