#include "projlm/solvability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace projlm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

enum class Power { Square, Abs };

double apply(Power p, double x) { return p == Power::Square ? x * x : std::abs(x); }

std::vector<double> powered(std::vector<double> v, Power p) {
  for (double& x : v) x = apply(p, x);
  return v;
}

/// alpha_0..alpha_{count-1}, zeroed beyond the lag support.
std::vector<double> alpha_values(const EquationSpec& s, std::size_t count) {
  auto v = s.alpha.materialize(count);
  if (s.lag_support) {
    for (std::size_t i = *s.lag_support + 1; i < v.size(); ++i) v[i] = 0.0;
  }
  return v;
}

std::size_t table_width(const BetaTable& t) {
  std::size_t w = 0;
  for (const auto& r : t.rows) w = std::max(w, r.size());
  return w;
}

/// Lazily materialized rows/columns of a product-form beta.
struct ProductCache {
  Sequence row, col;
  std::vector<double> u, v;
  void prepare(std::size_t lag) {
    if (u.size() <= lag) {
      u = row.materialize(lag + 1);
      v = col.materialize(lag + 1);
    }
  }
};

/// Configures `ns` to represent F(i) = 1 + inner * sum_j f(beta_{i,j}) F(i+j)
/// with f = square or abs. The caller fills a, outer_factor, inner_factor.
void set_beta_structure(NestedSeries& ns, const BetaScheme& beta, Power pw) {
  using St = NestedSeries::Structure;
  std::visit(
      overloaded{
          [&](const ZeroBeta&) { ns.structure = St::Zero; },
          [&](const ConstantOneBeta&) {
            ns.structure = St::Sum;
            ns.w = [](std::size_t n) { return std::vector<double>(n, 1.0); };
          },
          [&](const SumFormBeta& f) {
            ns.structure = St::Sum;
            ns.w = [seq = f.seq, pw](std::size_t n) { return powered(seq.materialize(n), pw); };
          },
          [&](const ColumnFormBeta& f) {
            ns.structure = St::Column;
            ns.w = [seq = f.seq, pw](std::size_t n) { return powered(seq.materialize(n), pw); };
          },
          [&](const FiniteLagBeta& f) {
            ns.structure = St::Finite;
            ns.width = std::min(f.p, table_width(f.table));
            ns.b = [beta, pw](std::size_t i, std::size_t j) { return apply(pw, beta.at(i, j)); };
          },
          [&](const GeneralBeta& g) {
            if (auto* t = std::get_if<BetaTable>(&g.rule)) {
              ns.structure = St::Finite;
              ns.width = table_width(*t);
              ns.b = [beta, pw](std::size_t i, std::size_t j) { return apply(pw, beta.at(i, j)); };
            } else {
              const auto& p = std::get<BetaProduct>(g.rule);
              auto cache = std::make_shared<ProductCache>(ProductCache{p.row, p.col, {}, {}});
              ns.structure = St::Dense;
              ns.prepare = [cache](std::size_t lag) { cache->prepare(lag); };
              ns.b = [cache, pw](std::size_t i, std::size_t j) {
                return apply(pw, cache->u[i] * cache->v[j]);
              };
            }
          },
      },
      beta.shape());
}

SeriesResult evaluate(const NestedSeries& ns, const EquationSpec& s,
                      const TruncationPolicy& trunc) {
  if (s.lag_support && *s.lag_support <= std::max(trunc.max_dp_lag, std::size_t{1} << 20)) {
    // g vanishes beyond the support, so the series is a finite sum.
    auto r = SeriesResult::exact(evaluate_nested_at(ns, *s.lag_support, trunc.max_depth));
    r.method = SeriesMethod::TruncatedSeries;
    r.terms = *s.lag_support;
    if (!std::isfinite(r.value)) return SeriesResult::diverged(SeriesMethod::TruncatedSeries);
    return r;
  }
  return evaluate_nested(ns, trunc);
}

/// sum_i f(alpha_i) with the lag support honoured.
SeriesResult alpha_sum(const EquationSpec& s, Power pw, const TruncationPolicy& trunc) {
  if (s.lag_support) {
    const auto v = alpha_values(s, *s.lag_support + 1);
    double acc = 0.0;
    for (double x : v) acc += apply(pw, x);
    return SeriesResult::exact(acc);
  }
  return pw == Power::Square ? tail_energy(s.alpha, 0, trunc) : abs_sum(s.alpha, trunc);
}

/// sum_{j >= 1} f(beta_j) for one-index schemes.
SeriesResult beta_sum(const Sequence& seq, Power pw, const TruncationPolicy& trunc) {
  if (pw == Power::Square) return tail_energy(seq, 1, trunc);
  if (seq.at(0) == 0.0) return abs_sum(seq, trunc);
  auto r = abs_sum(seq, trunc);
  r.value -= std::abs(seq.at(0));
  return r;
}

/// c-weighted nested series; Square: c^2 sum alpha^2 F, Abs: c sum |alpha| F.
SeriesResult nested_kq(const EquationSpec& s, double c, Power pw, const TruncationPolicy& trunc,
                       bool allow_closed_form) {
  const double factor = pw == Power::Square ? c * c : c;
  if (s.alpha.is_zero() || c == 0.0) return SeriesResult::exact(0.0);

  const auto* col = std::get_if<ColumnFormBeta>(&s.beta.shape());
  const bool zero_beta = s.beta.is_zero();
  if (allow_closed_form && !s.lag_support && (col || zero_beta)) {
    const auto a = alpha_sum(s, pw, trunc);
    if (!a.convergent()) return SeriesResult::diverged();
    if (zero_beta) {
      auto r = a;
      r.value *= factor;
      r.remainder *= factor;
      return r;
    }
    const auto b = beta_sum(col->seq, pw, trunc);
    if (!b.convergent()) return SeriesResult::diverged();
    const double q = factor * b.value;
    if (!(q < 1.0)) return SeriesResult::diverged();
    auto r = a;
    r.value = factor * a.value / (1.0 - q);
    r.remainder = factor * (a.remainder + a.value * b.remainder / (1.0 - q)) / (1.0 - q);
    return r;
  }

  NestedSeries ns;
  ns.a = [s, pw](std::size_t n) { return powered(alpha_values(s, n), pw); };
  ns.outer_factor = factor;
  ns.inner_factor = factor;
  set_beta_structure(ns, s.beta, pw);
  return evaluate(ns, s, trunc);
}

EquationSpec kq_ready(const EquationSpec& spec) {
  EquationSpec s = normalize(spec);
  if (s.family == Family::FamilyII) {
    throw std::invalid_argument("FamilyII specs use tilde-K_Q (compute_tilde_kq)");
  }
  if (s.family == Family::TvArfima) {
    throw std::invalid_argument("K_Q does not apply to TvArfima specs");
  }
  if (!s.kernel.constants().c_q) {
    throw std::invalid_argument("K_Q requires a declared dominating constant c_Q");
  }
  return s;
}

/// sup_{j >= from} |seq(j)|, or nullopt when unbounded.
std::optional<double> sequence_sup(const Sequence& seq, std::size_t from) {
  return std::visit(
      overloaded{
          [](const ZeroSeq&) -> std::optional<double> { return 0.0; },
          [&](const FiniteSeq&) -> std::optional<double> {
            const std::size_t n = *seq.support();
            double m = 0.0;
            for (std::size_t i = from; i < n; ++i) m = std::max(m, std::abs(seq.at(i)));
            return m;
          },
          [&](const GeometricSeq& g) -> std::optional<double> {
            if (std::abs(g.ratio) > 1.0 && g.scale != 0.0) return std::nullopt;
            return std::abs(seq.at(from));
          },
          [&](const ArfimaSeq&) -> std::optional<double> {
            // |psi_j| is eventually monotone; scan a long head.
            const auto v = seq.materialize(from + 10000);
            double m = 0.0;
            for (std::size_t i = from; i < v.size(); ++i) m = std::max(m, std::abs(v[i]));
            return m;
          },
      },
      seq.shape());
}

std::optional<double> beta_sup(const BetaScheme& beta) {
  return std::visit(
      overloaded{
          [](const ZeroBeta&) -> std::optional<double> { return 0.0; },
          [](const ConstantOneBeta&) -> std::optional<double> { return 1.0; },
          [](const SumFormBeta& f) { return sequence_sup(f.seq, 1); },
          [](const ColumnFormBeta& f) { return sequence_sup(f.seq, 1); },
          [](const FiniteLagBeta& f) -> std::optional<double> {
            double m = 0.0;
            for (const auto& r : f.table.rows)
              for (double v : r) m = std::max(m, std::abs(v));
            return m;
          },
          [](const GeneralBeta& g) -> std::optional<double> {
            if (auto* t = std::get_if<BetaTable>(&g.rule)) {
              double m = 0.0;
              for (const auto& r : t->rows)
                for (double v : r) m = std::max(m, std::abs(v));
              return m;
            }
            const auto& p = std::get<BetaProduct>(g.rule);
            auto u = sequence_sup(p.row, 0);
            auto v = sequence_sup(p.col, 1);
            if (!u || !v) return std::nullopt;
            return *u * *v;
          },
      },
      beta.shape());
}

/// factor * sum_{k >= 0} q^k prod_{m=m0}^{m0+k-1} E_m with E_m = energy(m),
/// stopping when the terms are negligible.
SeriesResult product_series(double factor, double q, std::size_t m0,
                            const std::function<SeriesResult(std::size_t)>& energy,
                            const TruncationPolicy& trunc) {
  double term = 1.0;
  double sum = 0.0;
  constexpr std::size_t kMaxDepth = 100000;
  for (std::size_t k = 0; k < kMaxDepth; ++k) {
    sum += term;
    const auto e = energy(m0 + k);
    if (!e.convergent()) return SeriesResult::diverged();
    const double next = term * q * e.value;
    if (!std::isfinite(next)) return SeriesResult::diverged();
    if (next <= trunc.abs_tail_tol * std::max(1.0, sum) && q * e.value < 1.0) {
      // Later factors are no larger than q * E_m (E_m is nonincreasing).
      const double ratio = q * e.value;
      auto r = SeriesResult::exact(factor * sum);
      r.remainder = factor * next / (1.0 - ratio);
      r.terms = k + 1;
      return r;
    }
    term = next;
  }
  auto r = SeriesResult::exact(factor * sum);
  r.status = SeriesStatus::Estimated;
  r.remainder = std::numeric_limits<double>::infinity();
  r.terms = kMaxDepth;
  return r;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Yes: return "yes";
    case Verdict::No: return "no";
    case Verdict::Undetermined: return "undetermined";
  }
  return "undetermined";
}

void MomentParams::validate() const {
  if (!(p >= 2.0) || !std::isfinite(p)) throw std::invalid_argument("moment order p must be >= 2");
  if (!(mu_p >= 1.0) || !std::isfinite(mu_p)) {
    throw std::invalid_argument("mu_p must be >= 1 for standardized innovations");
  }
  if (!(c_p > 0.0) || !std::isfinite(c_p)) throw std::invalid_argument("C_p must be positive");
}

double gaussian_abs_moment(double p) {
  return std::exp(0.5 * p * std::log(2.0) + std::lgamma(0.5 * (p + 1.0)) -
                  0.5 * std::log(M_PI));
}

double default_rosenthal_constant(double p) {
  if (p == 2.0) return 1.0;
  return std::pow(p / std::log(p), p);
}

MomentParams MomentParams::gaussian(double p) {
  MomentParams m;
  m.p = p;
  m.mu_p = p == 2.0 ? 1.0 : gaussian_abs_moment(p);
  m.c_p = default_rosenthal_constant(p);
  return m;
}

Verdict verdict_from(const SeriesResult& r) {
  switch (r.status) {
    case SeriesStatus::Converged: return Verdict::Yes;
    case SeriesStatus::Estimated:
      return std::isfinite(r.remainder) ? Verdict::Yes : Verdict::Undetermined;
    case SeriesStatus::Diverged: return Verdict::No;
  }
  return Verdict::Undetermined;
}

SolvabilityReport compute_kq(const EquationSpec& spec, const TruncationPolicy& trunc) {
  SolvabilityReport rep;
  rep.family = spec.family;
  EquationSpec s = normalize(spec);
  if (s.family == Family::FamilyII) {
    throw std::invalid_argument("FamilyII specs use tilde-K_Q (compute_tilde_kq)");
  }
  if (s.family == Family::TvArfima) {
    throw std::invalid_argument("K_Q does not apply to TvArfima specs");
  }
  if (spec.family == Family::Larch) rep.notes.push_back("LARCH mapped to FamilyI");
  if (s.family == Family::Lagged) {
    rep.notes.push_back("lagged equation: existence follows from the FamilyI K_Q condition");
  }

  const auto a2 = alpha_sum(s, Power::Square, trunc);
  rep.a2 = a2.convergent() ? a2.value : std::numeric_limits<double>::infinity();
  if (s.beta.is_zero()) {
    rep.b2 = 0.0;
  } else if (const Sequence* seq = s.beta.one_index_sequence()) {
    const auto b2 = tail_energy(*seq, 1, trunc);
    rep.b2 = b2.convergent() ? b2.value : std::numeric_limits<double>::infinity();
  } else if (std::holds_alternative<ConstantOneBeta>(s.beta.shape())) {
    rep.b2 = std::numeric_limits<double>::infinity();
  }

  if (!s.kernel.constants().c_q) {
    if (!s.lag_support) {
      throw std::invalid_argument("K_Q requires a declared dominating constant c_Q");
    }
    rep.exists = Verdict::Yes;
    rep.method = SeriesMethod::ClosedForm;
    rep.notes.push_back("finite lag support without c_Q: the solution is a finite sum");
    return rep;
  }
  const double c = *s.kernel.constants().c_q;

  const bool closed = s.alpha.is_zero() || c == 0.0 ||
                      (!s.lag_support && (s.beta.is_zero() ||
                                          std::holds_alternative<ColumnFormBeta>(s.beta.shape())));
  SeriesResult kq = nested_kq(s, c, Power::Square, trunc, true);
  if (!closed) kq.method = SeriesMethod::TruncatedSeries;
  rep.kq = kq;
  rep.method = kq.method;
  rep.truncation_remainder = kq.remainder;
  rep.exists = verdict_from(kq);
  if (!s.lag_support && !closed && std::holds_alternative<SumFormBeta>(s.beta.shape()) &&
      a2.convergent()) {
    const Sequence seq = *s.beta.one_index_sequence();
    rep.kq_sum_form_bound = product_series(
        c * c * a2.value, c * c, 1, [&](std::size_t k) { return tail_energy(seq, k, trunc); },
        trunc);
  }
  if (s.lag_support) rep.notes.push_back("finite lag support: K_Q is a finite sum");
  return rep;
}

SeriesResult kq_truncated_series(const EquationSpec& spec, const TruncationPolicy& trunc) {
  const EquationSpec s = kq_ready(spec);
  auto r = nested_kq(s, *s.kernel.constants().c_q, Power::Square, trunc, false);
  r.method = SeriesMethod::TruncatedSeries;
  return r;
}

SeriesResult compute_kq_p(const EquationSpec& spec, const MomentParams& m,
                          const TruncationPolicy& trunc) {
  m.validate();
  const EquationSpec s = kq_ready(spec);
  const double c = *s.kernel.constants().c_q * std::pow(m.c_p * m.mu_p, 1.0 / m.p);
  const double outer = std::pow(m.c_p, 2.0 / m.p);
  auto r = nested_kq(s, c, Power::Square, trunc, true);
  r.value *= outer;
  r.remainder *= outer;
  return r;
}

SolvabilityReport compute_tilde_kq(const EquationSpec& spec, const TruncationPolicy& trunc) {
  if (spec.family != Family::FamilyII) {
    throw std::invalid_argument("tilde-K_Q applies to FamilyII specs");
  }
  const auto& k = spec.kernel.constants();
  if (!k.c0 || !k.c1) throw std::invalid_argument("tilde-K_Q requires declared c0 and c1");
  const double c0 = *k.c0;
  const double c1 = *k.c1;

  SolvabilityReport rep;
  rep.family = spec.family;
  const auto a2 = alpha_sum(spec, Power::Square, trunc);
  rep.a2 = a2.convergent() ? a2.value : std::numeric_limits<double>::infinity();
  if (const Sequence* seq = spec.beta.one_index_sequence()) {
    const auto b2 = tail_energy(*seq, 1, trunc);
    rep.b2 = b2.convergent() ? b2.value : std::numeric_limits<double>::infinity();
  } else if (spec.beta.is_zero()) {
    rep.b2 = 0.0;
  }

  SeriesResult tk;
  if (spec.alpha.is_zero() || c0 == 0.0) {
    tk = SeriesResult::exact(0.0);
  } else if (c1 == 0.0 || spec.beta.is_zero()) {
    // Only the k = 0 term survives.
    tk = a2;
    if (tk.convergent()) {
      tk.value *= c0 * c0;
      tk.remainder *= c0 * c0;
    }
  } else {
    using St = NestedSeries::Structure;
    NestedSeries ns;
    ns.a = [spec](std::size_t n) { return powered(alpha_values(spec, n), Power::Square); };
    ns.outer_factor = c0 * c0;
    ns.inner_factor = c1 * c1;
    const auto& shape = spec.beta.shape();
    if (std::holds_alternative<ConstantOneBeta>(shape) ||
        std::holds_alternative<SumFormBeta>(shape)) {
      // alpha^2_{i+j} beta^2_{i,j} depends on i + j only.
      ns.structure = St::Sum;
      const auto* sf = std::get_if<SumFormBeta>(&shape);
      std::optional<Sequence> bseq;
      if (sf) bseq = sf->seq;
      ns.w = [spec, bseq](std::size_t n) {
        auto a = powered(alpha_values(spec, n), Power::Square);
        if (bseq) {
          const auto b = bseq->materialize(n);
          for (std::size_t m = 0; m < n; ++m) a[m] *= b[m] * b[m];
        }
        return a;
      };
    } else {
      // b(i, j) = alpha^2_{i+j} beta^2_{i,j}; the beta part reuses the
      // K_Q structures through a dense wrapper.
      NestedSeries inner;
      set_beta_structure(inner, spec.beta, Power::Square);
      ns.structure = inner.structure == St::Finite ? St::Finite : St::Dense;
      ns.width = inner.width;
      struct Cache {
        std::vector<double> a2, w;
      };
      auto cache = std::make_shared<Cache>();
      const bool column = inner.structure == St::Column;
      auto inner_prepare = inner.prepare;
      auto inner_w = inner.w;
      auto inner_b = inner.b;
      ns.prepare = [cache, spec, column, inner_prepare, inner_w](std::size_t lag) {
        if (cache->a2.size() <= lag) {
          cache->a2 = powered(alpha_values(spec, lag + 1), Power::Square);
          if (column) cache->w = inner_w(lag + 1);
        }
        if (inner_prepare) inner_prepare(lag);
      };
      ns.b = [cache, column, inner_b](std::size_t i, std::size_t j) {
        const double b2 = column ? cache->w[j] : inner_b(i, j);
        return cache->a2[i + j] * b2;
      };
    }
    tk = evaluate(ns, spec, trunc);
  }
  rep.tilde_kq = tk;
  rep.method = tk.method;
  rep.truncation_remainder = tk.remainder;
  rep.exists = verdict_from(tk);

  if (auto bb = beta_sup(spec.beta); bb && a2.convergent() && !spec.lag_support) {
    const double q = (c1 * *bb) * (c1 * *bb);
    rep.tilde_kq_envelope = product_series(
        c0 * c0 * a2.value, q, 1, [&](std::size_t m) { return tail_energy(spec.alpha, m, trunc); }, trunc);
  }
  return rep;
}

SeriesResult compute_omega2_bound(const EquationSpec& spec, const TruncationPolicy& trunc) {
  const EquationSpec s = kq_ready(spec);
  return nested_kq(s, *s.kernel.constants().c_q, Power::Abs, trunc, true);
}

LarchReport larch_check(double alpha, const Sequence& beta, const std::optional<MomentParams>& m,
                        const TruncationPolicy& trunc) {
  LarchReport rep;
  const EquationSpec spec = make_larch_spec(alpha, beta);
  const Sequence& b = spec.larch->beta;
  const auto b2 = tail_energy(b, 1, trunc);
  rep.b2 = b2.convergent() ? b2.value : std::numeric_limits<double>::infinity();
  rep.exists = rep.b2 < 1.0;
  if (rep.exists) {
    const auto kq = compute_kq(spec, trunc);
    rep.variance = kq.kq->value;
  }
  if (m) {
    m->validate();
    const double bnorm = std::sqrt(rep.b2);
    const double mu_root = std::pow(m->mu_p, 1.0 / m->p);
    rep.p_condition_holds = std::pow(m->c_p, 1.0 / m->p) * mu_root * bnorm < 1.0;
    rep.old_condition_holds =
        std::sqrt(std::pow(2.0, m->p) - m->p - 1.0) * mu_root * bnorm < 1.0;
    rep.p_moment_bound = compute_kq_p(spec, *m, trunc);
  }
  return rep;
}

RowCheck limsup_row_check(const BetaScheme& beta, double c_q, std::size_t horizon,
                          const TruncationPolicy& trunc) {
  if (horizon < 1) throw std::invalid_argument("limsup row check needs horizon >= 1");
  RowCheck out;
  out.row_sums.assign(horizon + 1, 0.0);
  const double c2 = c_q * c_q;
  const double inf = std::numeric_limits<double>::infinity();
  auto set_tail = [&](const SeriesResult& r, std::size_t i) {
    if (!r.convergent()) {
      out.row_sums[i] = inf;
    } else {
      out.row_sums[i] = c2 * r.value;
      if (r.status != SeriesStatus::Converged) out.tail_flagged = true;
    }
  };
  std::visit(
      overloaded{
          [&](const ZeroBeta&) {},
          [&](const ConstantOneBeta&) { std::fill(out.row_sums.begin(), out.row_sums.end(), inf); },
          [&](const SumFormBeta& f) {
            for (std::size_t i = 0; i <= horizon; ++i) set_tail(tail_energy(f.seq, i + 1, trunc), i);
          },
          [&](const ColumnFormBeta& f) {
            const auto r = tail_energy(f.seq, 1, trunc);
            for (std::size_t i = 0; i <= horizon; ++i) set_tail(r, i);
          },
          [&](const FiniteLagBeta& f) {
            for (std::size_t i = 0; i <= horizon && i < f.table.rows.size(); ++i) {
              double acc = 0.0;
              for (std::size_t j = 1; i + j <= f.p && j <= f.table.rows[i].size(); ++j) {
                const double v = f.table.rows[i][j - 1];
                acc += v * v;
              }
              out.row_sums[i] = c2 * acc;
            }
          },
          [&](const GeneralBeta& g) {
            if (auto* t = std::get_if<BetaTable>(&g.rule)) {
              for (std::size_t i = 0; i <= horizon && i < t->rows.size(); ++i) {
                double acc = 0.0;
                for (double v : t->rows[i]) acc += v * v;
                out.row_sums[i] = c2 * acc;
              }
              return;
            }
            const auto& p = std::get<BetaProduct>(g.rule);
            const auto col = tail_energy(p.col, 1, trunc);
            const auto u = p.row.materialize(horizon + 1);
            for (std::size_t i = 0; i <= horizon; ++i) {
              if (u[i] == 0.0) continue;
              auto r = col;
              r.value *= u[i] * u[i];
              set_tail(r, i);
            }
          },
      },
      beta.shape());
  const std::size_t burn = horizon / 2;
  out.sup_row_sum = 0.0;
  for (std::size_t i = burn; i <= horizon; ++i) {
    out.sup_row_sum = std::max(out.sup_row_sum, out.row_sums[i]);
  }
  out.verdict = out.sup_row_sum < 1.0 ? Verdict::Yes : Verdict::No;
  return out;
}

SolvabilityReport check_spec(const EquationSpec& spec, const CheckOptions& options) {
  spec.validate();
  const auto& trunc = options.trunc;
  switch (spec.family) {
    case Family::FamilyII: {
      auto rep = compute_tilde_kq(spec, trunc);
      return rep;
    }
    case Family::TvArfima: {
      SolvabilityReport rep;
      rep.family = spec.family;
      // |Q_j| <= psi_j(d_bar), so the coefficients are dominated by the
      // ARFIMA(0, d_bar, 0) weights; their energy bounds Var X_t.
      const double d = spec.tv->d_bar;
      const double bound = std::exp(std::lgamma(1.0 - 2.0 * d) - 2.0 * std::lgamma(1.0 - d));
      rep.a2 = bound;
      rep.kq = SeriesResult::exact(bound);
      rep.exists = Verdict::Yes;
      rep.notes.push_back("sup |d(x)| <= d_bar < 1/2; kq holds the dominating ARFIMA energy");
      return rep;
    }
    default: break;
  }
  auto rep = compute_kq(spec, trunc);
  const EquationSpec s = normalize(spec);
  if (s.kernel.constants().c_q) {
    if (options.moment) {
      rep.moment = options.moment;
      rep.kq_p = compute_kq_p(spec, *options.moment, trunc);
    }
    if (options.omega2) rep.omega2_bound = compute_omega2_bound(spec, trunc);
  }
  return rep;
}

}  // namespace projlm
