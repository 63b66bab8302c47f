#include "projlm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace projlm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

// ---------------------------------------------------------------------------
// Kernel
// ---------------------------------------------------------------------------

Kernel::Kernel(KernelShape shape) : shape_(std::move(shape)) {
  std::visit(overloaded{
                 [](const StepKernel& s) {
                   require(s.values.size() == s.breakpoints.size() + 1,
                           "step kernel needs one value per cell");
                   require(std::is_sorted(s.breakpoints.begin(), s.breakpoints.end()) &&
                               std::adjacent_find(s.breakpoints.begin(), s.breakpoints.end()) ==
                                   s.breakpoints.end(),
                           "step kernel breakpoints must be strictly increasing");
                 },
                 [](const IndicatorKernel& k) {
                   require(k.lo <= k.hi, "indicator interval must satisfy lo <= hi");
                 },
                 [](const auto&) {},
             },
             shape_);
  constants_ = default_constants(shape_);
}

Kernel::Kernel(KernelShape shape, const KernelConstants& declared) : Kernel(std::move(shape)) {
  if (declared.c_q) constants_.c_q = declared.c_q;
  if (declared.c_l) constants_.c_l = declared.c_l;
  if (declared.c0) constants_.c0 = declared.c0;
  if (declared.c1) constants_.c1 = declared.c1;
  for (auto c : {constants_.c_q, constants_.c_l, constants_.c0, constants_.c1}) {
    require(!c || (std::isfinite(*c) && *c >= 0.0), "kernel constants must be finite and >= 0");
  }
  require(constants_.c0.has_value() == constants_.c1.has_value(),
          "c0 and c1 must be declared together");
}

Kernel Kernel::linear(double slope) { return Kernel(LinearKernel{slope}); }
Kernel Kernel::relu() { return Kernel(ReluKernel{}); }
Kernel Kernel::triangle() { return Kernel(TriangleKernel{}); }
Kernel Kernel::affine(double intercept, double slope) {
  return Kernel(AffineKernel{intercept, slope});
}
Kernel Kernel::step(std::vector<double> breakpoints, std::vector<double> values) {
  return Kernel(StepKernel{std::move(breakpoints), std::move(values)});
}
Kernel Kernel::indicator(double lo, double hi, bool closed_lo, bool closed_hi) {
  return Kernel(IndicatorKernel{lo, hi, closed_lo, closed_hi});
}

KernelConstants Kernel::default_constants(const KernelShape& shape) {
  return std::visit(
      overloaded{
          [](const LinearKernel& k) {
            const double c = std::abs(k.slope);
            return KernelConstants{c, c, 0.0, c};
          },
          [](const ReluKernel&) { return KernelConstants{1.0, 1.0, 0.0, 1.0}; },
          [](const TriangleKernel&) { return KernelConstants{1.0, 1.0, 0.0, 1.0}; },
          [](const AffineKernel& k) {
            // (a + b x)^2 <= 2 a^2 + 2 b^2 x^2
            KernelConstants c;
            if (k.intercept == 0.0) c.c_q = std::abs(k.slope);
            c.c_l = std::abs(k.slope);
            c.c0 = std::sqrt(2.0) * std::abs(k.intercept);
            c.c1 = std::sqrt(2.0) * std::abs(k.slope);
            if (k.intercept == 0.0) {
              c.c0 = 0.0;
              c.c1 = std::abs(k.slope);
            }
            return c;
          },
          [](const StepKernel& k) {
            KernelConstants c;
            double m = 0.0;
            for (double v : k.values) m = std::max(m, std::abs(v));
            c.c0 = m;
            c.c1 = 0.0;
            return c;
          },
          [](const IndicatorKernel&) {
            KernelConstants c;
            c.c0 = 1.0;
            c.c1 = 0.0;
            return c;
          },
      },
      shape);
}

double Kernel::eval_unchecked(double x) const noexcept {
  return std::visit(
      overloaded{
          [x](const LinearKernel& k) { return k.slope * x; },
          [x](const ReluKernel&) { return x > 0.0 ? x : 0.0; },
          [x](const TriangleKernel&) {
            if (x >= 0.0 && x <= 1.0) return x;
            if (x > 1.0 && x <= 2.0) return 2.0 - x;
            return 0.0;
          },
          [x](const AffineKernel& k) { return k.intercept + k.slope * x; },
          [x](const StepKernel& k) {
            auto it = std::upper_bound(k.breakpoints.begin(), k.breakpoints.end(), x);
            return k.values[static_cast<std::size_t>(it - k.breakpoints.begin())];
          },
          [x](const IndicatorKernel& k) {
            const bool above = k.closed_lo ? x >= k.lo : x > k.lo;
            const bool below = k.closed_hi ? x <= k.hi : x < k.hi;
            return (above && below) ? 1.0 : 0.0;
          },
      },
      shape_);
}

double Kernel::operator()(double x) const {
  if (!std::isfinite(x)) throw std::domain_error("kernel argument is not finite");
  return eval_unchecked(x);
}

KernelFlags Kernel::flags() const noexcept {
  return std::visit(
      overloaded{
          [](const LinearKernel&) { return KernelFlags{true, false, false}; },
          [](const ReluKernel&) { return KernelFlags{false, true, false}; },
          [](const TriangleKernel&) { return KernelFlags{false, false, true}; },
          [](const AffineKernel& k) {
            return KernelFlags{k.intercept == 0.0, k.slope >= 0.0, k.slope == 0.0};
          },
          [](const StepKernel& k) {
            bool mono = std::is_sorted(k.values.begin(), k.values.end());
            return KernelFlags{false, mono, true};
          },
          [](const IndicatorKernel&) { return KernelFlags{false, false, true}; },
      },
      shape_);
}

double kernel_sup(const Kernel& kernel) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return std::visit(
      overloaded{
          [&](const LinearKernel& k) { return k.slope == 0.0 ? 0.0 : inf; },
          [](const ReluKernel&) { return inf; },
          [](const TriangleKernel&) { return 1.0; },
          [&](const AffineKernel& k) { return k.slope == 0.0 ? std::abs(k.intercept) : inf; },
          [](const StepKernel& k) {
            double m = 0.0;
            for (double v : k.values) m = std::max(m, std::abs(v));
            return m;
          },
          [](const IndicatorKernel& k) {
            const bool empty = k.hi < k.lo || (k.hi == k.lo && !(k.closed_lo && k.closed_hi));
            return empty ? 0.0 : 1.0;
          },
      },
      kernel.shape());
}

std::string Kernel::name() const {
  return std::visit(overloaded{
                        [](const LinearKernel&) { return std::string("linear"); },
                        [](const ReluKernel&) { return std::string("relu"); },
                        [](const TriangleKernel&) { return std::string("triangle"); },
                        [](const AffineKernel&) { return std::string("affine"); },
                        [](const StepKernel&) { return std::string("step"); },
                        [](const IndicatorKernel&) { return std::string("indicator"); },
                    },
                    shape_);
}

double eval_kernel(const Kernel& kernel, double x) { return kernel(x); }

KernelCheck verify_kernel_constants(const Kernel& kernel, double lo, double hi,
                                    std::size_t points, double slack) {
  KernelCheck out;
  const auto& c = kernel.constants();
  std::vector<double> xs(points);
  std::vector<double> qs(points);
  for (std::size_t i = 0; i < points; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    qs[i] = kernel(xs[i]);
  }
  for (std::size_t i = 0; i < points; ++i) {
    if (c.c_q) {
      const double excess = std::abs(qs[i]) - *c.c_q * std::abs(xs[i]);
      out.worst_dominating_excess = std::max(out.worst_dominating_excess, excess);
    }
    if (c.c0) {
      const double excess =
          qs[i] * qs[i] - (*c.c0 * *c.c0 + *c.c1 * *c.c1 * xs[i] * xs[i]);
      out.worst_affine_excess = std::max(out.worst_affine_excess, excess);
    }
  }
  if (c.c_l) {
    // All pairs on a subgrid: 401 points -> 80k pairs.
    const std::size_t stride = std::max<std::size_t>(1, points / 400);
    for (std::size_t i = 0; i < points; i += stride) {
      for (std::size_t j = i + stride; j < points; j += stride) {
        const double excess =
            std::abs(qs[i] - qs[j]) - *c.c_l * std::abs(xs[i] - xs[j]);
        out.worst_lipschitz_excess = std::max(out.worst_lipschitz_excess, excess);
      }
      // Adjacent points catch local slope violations the subgrid misses.
      if (i + 1 < points) {
        const double excess =
            std::abs(qs[i] - qs[i + 1]) - *c.c_l * std::abs(xs[i] - xs[i + 1]);
        out.worst_lipschitz_excess = std::max(out.worst_lipschitz_excess, excess);
      }
    }
  }
  out.dominating_ok = out.worst_dominating_excess <= slack;
  out.lipschitz_ok = out.worst_lipschitz_excess <= slack;
  out.affine_bound_ok = out.worst_affine_excess <= slack;
  return out;
}

// ---------------------------------------------------------------------------
// Sequence
// ---------------------------------------------------------------------------

Sequence::Sequence(SequenceShape shape, SeqBase base, bool zero_at_origin)
    : shape_(std::move(shape)), base_(base), zero_at_origin_(zero_at_origin) {
  std::visit(overloaded{
                 [](const GeometricSeq& g) {
                   require(std::isfinite(g.ratio) && std::isfinite(g.scale),
                           "geometric sequence parameters must be finite");
                 },
                 [](const ArfimaSeq& a) {
                   require(std::isfinite(a.d) && std::isfinite(a.scale),
                           "ARFIMA parameters must be finite");
                   require(a.d > -1.0 && a.d < 1.0, "ARFIMA d must lie in (-1, 1)");
                 },
                 [](const FiniteSeq& f) {
                   for (double v : f.values) require(std::isfinite(v), "sequence values must be finite");
                 },
                 [](const ZeroSeq&) {},
             },
             shape_);
}

Sequence Sequence::geometric(double ratio, double scale) {
  return Sequence(GeometricSeq{ratio, scale});
}
Sequence Sequence::arfima(double d, double scale) { return Sequence(ArfimaSeq{d, scale}); }
Sequence Sequence::finite(std::vector<double> values, SeqBase base) {
  return Sequence(FiniteSeq{std::move(values)}, base);
}
Sequence Sequence::zero() { return Sequence(ZeroSeq{}); }

std::vector<double> arfima_weights(double d, std::size_t count) {
  std::vector<double> out(count);
  double v = 1.0;
  for (std::size_t j = 0; j < count; ++j) {
    if (j > 0) v *= (d + static_cast<double>(j - 1)) / static_cast<double>(j);
    out[j] = v;
  }
  return out;
}

double Sequence::at(std::size_t i) const {
  if (zero_at_origin_ && i == 0) return 0.0;
  return std::visit(overloaded{
                        [i](const GeometricSeq& g) {
                          return g.scale * std::pow(g.ratio, static_cast<double>(i));
                        },
                        [i](const ArfimaSeq& a) {
                          double v = 1.0;
                          for (std::size_t j = 1; j <= i; ++j) {
                            v *= (a.d + static_cast<double>(j - 1)) / static_cast<double>(j);
                          }
                          return a.scale * v;
                        },
                        [i, this](const FiniteSeq& f) {
                          const std::size_t off = base_ == SeqBase::One ? 1 : 0;
                          if (i < off) return 0.0;
                          const std::size_t k = i - off;
                          return k < f.values.size() ? f.values[k] : 0.0;
                        },
                        [](const ZeroSeq&) { return 0.0; },
                    },
                    shape_);
}

std::vector<double> Sequence::materialize(std::size_t count) const {
  std::vector<double> out(count, 0.0);
  std::visit(overloaded{
                 [&](const GeometricSeq& g) {
                   double v = g.scale;
                   for (std::size_t i = 0; i < count; ++i) {
                     out[i] = v;
                     v *= g.ratio;
                   }
                 },
                 [&](const ArfimaSeq& a) {
                   double v = 1.0;
                   for (std::size_t j = 0; j < count; ++j) {
                     if (j > 0) v *= (a.d + static_cast<double>(j - 1)) / static_cast<double>(j);
                     out[j] = a.scale * v;
                   }
                 },
                 [&](const FiniteSeq&) {
                   for (std::size_t i = 0; i < count; ++i) out[i] = at(i);
                 },
                 [](const ZeroSeq&) {},
             },
             shape_);
  if (zero_at_origin_ && count > 0) out[0] = 0.0;
  return out;
}

std::optional<std::size_t> Sequence::support() const {
  return std::visit(overloaded{
                        [](const GeometricSeq& g) -> std::optional<std::size_t> {
                          if (g.scale == 0.0) return 0;
                          if (g.ratio == 0.0) return 1;
                          return std::nullopt;
                        },
                        [](const ArfimaSeq& a) -> std::optional<std::size_t> {
                          if (a.scale == 0.0) return 0;
                          if (a.d == 0.0) return 1;
                          return std::nullopt;
                        },
                        [this](const FiniteSeq& f) -> std::optional<std::size_t> {
                          std::size_t n = f.values.size();
                          while (n > 0 && f.values[n - 1] == 0.0) --n;
                          if (n == 0) return 0;
                          return n + (base_ == SeqBase::One ? 1 : 0);
                        },
                        [](const ZeroSeq&) -> std::optional<std::size_t> { return 0; },
                    },
                    shape_);
}

bool Sequence::is_zero() const {
  auto s = support();
  if (s && *s == 0) return true;
  if (s && *s == 1 && zero_at_origin_) return true;
  return false;
}

Sequence Sequence::scaled(double factor) const {
  SequenceShape shape = std::visit(
      overloaded{
          [factor](GeometricSeq g) -> SequenceShape {
            g.scale *= factor;
            return g;
          },
          [factor](ArfimaSeq a) -> SequenceShape {
            a.scale *= factor;
            return a;
          },
          [factor](FiniteSeq f) -> SequenceShape {
            for (double& v : f.values) v *= factor;
            return f;
          },
          [](ZeroSeq z) -> SequenceShape { return z; },
      },
      shape_);
  return Sequence(std::move(shape), base_, zero_at_origin_);
}

double alpha_at(const AlphaScheme& scheme, std::size_t i) { return scheme.at(i); }

// ---------------------------------------------------------------------------
// BetaScheme
// ---------------------------------------------------------------------------

namespace {

double table_at(const BetaTable& t, std::size_t i, std::size_t j) {
  if (i >= t.rows.size()) return 0.0;
  const auto& row = t.rows[i];
  return j - 1 < row.size() ? row[j - 1] : 0.0;
}

void check_table(const BetaTable& t) {
  for (const auto& row : t.rows)
    for (double v : row) require(std::isfinite(v), "beta table values must be finite");
}

}  // namespace

namespace {

// Finite one-index beta sequences list beta_1, beta_2, ...
Sequence one_based(const Sequence& s) {
  if (std::holds_alternative<FiniteSeq>(s.shape()) && s.base() == SeqBase::Zero) {
    return Sequence(s.shape(), SeqBase::One, s.zero_at_origin());
  }
  return s;
}

}  // namespace

BetaScheme::BetaScheme(BetaShape shape) : shape_(std::move(shape)) {
  if (auto* s = std::get_if<SumFormBeta>(&shape_)) s->seq = one_based(s->seq);
  if (auto* c = std::get_if<ColumnFormBeta>(&shape_)) c->seq = one_based(c->seq);
  if (auto* g = std::get_if<GeneralBeta>(&shape_)) {
    if (auto* p = std::get_if<BetaProduct>(&g->rule)) p->col = one_based(p->col);
  }
  std::visit(overloaded{
                 [](const GeneralBeta& g) {
                   if (auto* t = std::get_if<BetaTable>(&g.rule)) check_table(*t);
                 },
                 [](const FiniteLagBeta& f) {
                   check_table(f.table);
                   for (std::size_t i = 0; i < f.table.rows.size(); ++i) {
                     for (std::size_t j = 1; j <= f.table.rows[i].size(); ++j) {
                       require(i + j <= f.p || f.table.rows[i][j - 1] == 0.0,
                               "finite-lag beta has a nonzero entry with i + j > p");
                     }
                   }
                 },
                 [](const auto&) {},
             },
             shape_);
}

BetaScheme BetaScheme::zero() { return BetaScheme(ZeroBeta{}); }
BetaScheme BetaScheme::constant_one() { return BetaScheme(ConstantOneBeta{}); }
BetaScheme BetaScheme::sum_form(Sequence seq) { return BetaScheme(SumFormBeta{std::move(seq)}); }
BetaScheme BetaScheme::column_form(Sequence seq) {
  return BetaScheme(ColumnFormBeta{std::move(seq)});
}
BetaScheme BetaScheme::table(std::vector<std::vector<double>> rows) {
  return BetaScheme(GeneralBeta{BetaTable{std::move(rows)}});
}
BetaScheme BetaScheme::product(Sequence row, Sequence col) {
  return BetaScheme(GeneralBeta{BetaProduct{std::move(row), std::move(col)}});
}
BetaScheme BetaScheme::finite_lag(std::size_t p, std::vector<std::vector<double>> rows) {
  return BetaScheme(FiniteLagBeta{p, BetaTable{std::move(rows)}});
}

double BetaScheme::at(std::size_t i, std::size_t j) const {
  if (j == 0) throw std::invalid_argument("beta_{i,j} requires j >= 1");
  return std::visit(
      overloaded{
          [&](const GeneralBeta& g) {
            return std::visit(overloaded{
                                  [&](const BetaTable& t) { return table_at(t, i, j); },
                                  [&](const BetaProduct& p) { return p.row.at(i) * p.col.at(j); },
                              },
                              g.rule);
          },
          [&](const SumFormBeta& s) { return s.seq.at(i + j); },
          [&](const ColumnFormBeta& c) { return c.seq.at(j); },
          [](const ConstantOneBeta&) { return 1.0; },
          [](const ZeroBeta&) { return 0.0; },
          [&](const FiniteLagBeta& f) { return i + j > f.p ? 0.0 : table_at(f.table, i, j); },
      },
      shape_);
}

double BetaScheme::bar(std::size_t j) const {
  double m = 0.0;
  for (std::size_t i = 0; i < j; ++i) m = std::max(m, std::abs(at(i, j - i)));
  return m;
}

bool BetaScheme::is_zero() const {
  return std::visit(overloaded{
                        [](const ZeroBeta&) { return true; },
                        [](const ConstantOneBeta&) { return false; },
                        [](const SumFormBeta& s) { return s.seq.is_zero(); },
                        [](const ColumnFormBeta& c) { return c.seq.is_zero(); },
                        [](const GeneralBeta& g) {
                          return std::visit(
                              overloaded{
                                  [](const BetaTable& t) {
                                    for (const auto& r : t.rows)
                                      for (double v : r)
                                        if (v != 0.0) return false;
                                    return true;
                                  },
                                  [](const BetaProduct& p) {
                                    return p.row.is_zero() || p.col.is_zero();
                                  },
                              },
                              g.rule);
                        },
                        [](const FiniteLagBeta& f) {
                          for (const auto& r : f.table.rows)
                            for (double v : r)
                              if (v != 0.0) return false;
                          return true;
                        },
                    },
                    shape_);
}

const Sequence* BetaScheme::one_index_sequence() const noexcept {
  if (auto* s = std::get_if<SumFormBeta>(&shape_)) return &s->seq;
  if (auto* c = std::get_if<ColumnFormBeta>(&shape_)) return &c->seq;
  return nullptr;
}

double beta_at(const BetaScheme& scheme, std::size_t i, std::size_t j) { return scheme.at(i, j); }

BetaScheme materialize_beta(const BetaScheme& scheme, std::size_t max_total) {
  std::vector<std::vector<double>> rows(max_total);
  for (std::size_t i = 0; i < max_total; ++i) {
    rows[i].resize(max_total - i);
    for (std::size_t j = 1; i + j <= max_total; ++j) rows[i][j - 1] = scheme.at(i, j);
  }
  return BetaScheme::table(std::move(rows));
}

// ---------------------------------------------------------------------------
// EquationSpec
// ---------------------------------------------------------------------------

std::string to_string(Family f) {
  switch (f) {
    case Family::FamilyI: return "FamilyI";
    case Family::FamilyII: return "FamilyII";
    case Family::Lagged: return "Lagged";
    case Family::TvArfima: return "TvArfima";
    case Family::Larch: return "Larch";
  }
  return "unknown";
}

Family family_from_string(const std::string& s) {
  if (s == "FamilyI") return Family::FamilyI;
  if (s == "FamilyII") return Family::FamilyII;
  if (s == "Lagged") return Family::Lagged;
  if (s == "TvArfima") return Family::TvArfima;
  if (s == "Larch") return Family::Larch;
  throw std::invalid_argument("unknown equation family '" + s + "'");
}

void EquationSpec::validate() const {
  require(std::isfinite(mu), "mu must be finite");
  const auto& c = kernel.constants();
  switch (family) {
    case Family::FamilyI:
    case Family::Lagged:
      require(c.c_q.has_value() || lag_support.has_value(),
              "FamilyI/Lagged require a declared dominating constant c_Q "
              "(or a finite lag_support)");
      break;
    case Family::FamilyII:
      require(c.c0.has_value() && c.c1.has_value(),
              "FamilyII requires declared constants c0, c1");
      break;
    case Family::TvArfima: {
      require(tv.has_value(), "TvArfima spec needs dfun and d_bar");
      require(tv->d_bar > 0.0 && tv->d_bar < 0.5, "TvArfima requires 0 < d_bar < 1/2");
      // Declared bound verified on a grid.
      for (int i = 0; i <= 20000; ++i) {
        const double x = -50.0 + 100.0 * i / 20000.0;
        const double d = tv->dfun(x);
        require(std::abs(d) <= tv->d_bar && d > -0.5,
                "TvArfima d(x) exceeds the declared bound d_bar on the check grid");
      }
      break;
    }
    case Family::Larch:
      require(larch.has_value(), "Larch spec needs intercept and beta sequence");
      require(std::isfinite(larch->intercept), "LARCH intercept must be finite");
      break;
  }
}

EquationSpec normalize(const EquationSpec& spec) {
  if (spec.family != Family::Larch) return spec;
  if (!spec.larch) throw std::invalid_argument("Larch spec needs intercept and beta sequence");
  LarchParams lp = *spec.larch;
  lp.beta = one_based(lp.beta);
  EquationSpec out;
  out.family = Family::FamilyI;
  out.mu = lp.intercept;
  out.kernel = Kernel::linear(1.0);
  // alpha_j = a * beta_j with beta_0 = 0.
  Sequence a = lp.beta.scaled(lp.intercept);
  if (std::holds_alternative<FiniteSeq>(a.shape())) {
    out.alpha = a;  // one-based finite storage already has alpha_0 = 0
  } else {
    out.alpha = Sequence(a.shape(), a.base(), true);
  }
  out.beta = BetaScheme::column_form(lp.beta);
  out.lag_support = spec.lag_support;
  return out;
}

EquationSpec make_larch_spec(double intercept, Sequence beta) {
  EquationSpec s;
  s.family = Family::Larch;
  s.mu = intercept;
  s.larch = LarchParams{intercept, one_based(beta)};
  return s;
}

}  // namespace projlm
