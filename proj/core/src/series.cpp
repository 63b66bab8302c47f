#include "projlm/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace projlm {

namespace {

constexpr std::size_t kFirstCheckpoint = 64;
// Increment ratio at or above which a budget-limited series is not trusted.
constexpr double kSlowRatio = 0.99;
// Consecutive non-shrinking increments that mark divergence.
constexpr int kGrowthStrikes = 3;

/// Tracks partial sums at doubling checkpoints and classifies the series.
class CheckpointTracker {
 public:
  explicit CheckpointTracker(double tol) : tol_(tol) {}

  /// Feeds the partial sum at a checkpoint. Returns true when evaluation can
  /// stop (converged or diverged).
  bool feed(double partial, std::size_t terms) {
    result_.terms = terms;
    result_.value = partial;
    if (!std::isfinite(partial)) {
      result_.status = SeriesStatus::Diverged;
      return true;
    }
    if (!have_prev_) {
      prev_ = partial;
      have_prev_ = true;
      return false;
    }
    const double inc = std::abs(partial - prev_);
    prev_ = partial;
    if (have_inc_) {
      ratio_ = last_inc_ > 0.0 ? inc / last_inc_ : (inc > 0.0 ? 2.0 : 0.0);
      strikes_ = (ratio_ >= 1.0 && inc > tol_) ? strikes_ + 1 : 0;
    }
    last_inc_ = inc;
    have_inc_ = true;
    result_.increment_ratio = ratio_;
    if (inc <= tol_) {
      result_.status = SeriesStatus::Converged;
      result_.remainder = (ratio_ > 0.0 && ratio_ < 1.0) ? inc * ratio_ / (1.0 - ratio_) : inc;
      return true;
    }
    if (strikes_ >= kGrowthStrikes) {
      result_.status = SeriesStatus::Diverged;
      return true;
    }
    return false;
  }

  /// Classification when the budget ran out before convergence.
  SeriesResult finish() {
    if (result_.status == SeriesStatus::Diverged) return result_;
    if (result_.status == SeriesStatus::Converged && done_) return result_;
    if (!have_inc_) {
      result_.status = SeriesStatus::Converged;
      return result_;
    }
    if (last_inc_ <= tol_) {
      result_.status = SeriesStatus::Converged;
    } else {
      // Still moving when the budget ran out. A ratio close to one gives no
      // usable tail estimate; callers treat that case as undetermined.
      result_.status = SeriesStatus::Estimated;
      result_.remainder = ratio_ < kSlowRatio ? last_inc_ * ratio_ / (1.0 - ratio_)
                                              : std::numeric_limits<double>::infinity();
    }
    return result_;
  }

  void mark_done() { done_ = true; }
  SeriesResult result() const { return result_; }

 private:
  double tol_;
  double prev_ = 0.0;
  bool have_prev_ = false;
  double last_inc_ = 0.0;
  bool have_inc_ = false;
  double ratio_ = 0.0;
  int strikes_ = 0;
  bool done_ = false;
  SeriesResult result_{SeriesStatus::Converged, 0.0, 0.0, SeriesMethod::TruncatedSeries, 0, 0.0};
};

SeriesResult finite_sum(const std::vector<double>& v, bool squared) {
  double s = 0.0;
  for (double x : v) s += squared ? x * x : std::abs(x);
  auto r = SeriesResult::exact(s);
  r.terms = v.size();
  return r;
}

}  // namespace

std::string to_string(SeriesMethod m) {
  return m == SeriesMethod::ClosedForm ? "closed-form" : "truncated-series";
}

std::string to_string(SeriesStatus s) {
  switch (s) {
    case SeriesStatus::Converged: return "converged";
    case SeriesStatus::Estimated: return "estimated";
    case SeriesStatus::Diverged: return "non-convergent";
  }
  return "unknown";
}

SeriesResult sum_series(const std::function<double(std::size_t)>& term,
                        const TruncationPolicy& policy) {
  CheckpointTracker tracker(policy.abs_tail_tol);
  double sum = 0.0;
  std::size_t checkpoint = kFirstCheckpoint;
  for (std::size_t i = 0; i < policy.max_terms; ++i) {
    sum += term(i);
    if (i + 1 == checkpoint || i + 1 == policy.max_terms) {
      if (tracker.feed(sum, i + 1)) {
        tracker.mark_done();
        return tracker.finish();
      }
      checkpoint *= 2;
    }
  }
  return tracker.finish();
}

SeriesResult tail_energy(const Sequence& seq, std::size_t k, const TruncationPolicy& policy) {
  const auto& shape = seq.shape();
  if (std::holds_alternative<ZeroSeq>(shape)) return SeriesResult::exact(0.0);
  if (auto* f = std::get_if<FiniteSeq>(&shape)) {
    const std::size_t n = f->values.size() + (seq.base() == SeqBase::One ? 1 : 0);
    std::vector<double> v;
    for (std::size_t i = k; i < n; ++i) v.push_back(seq.at(i));
    return finite_sum(v, true);
  }
  if (auto* g = std::get_if<GeometricSeq>(&shape)) {
    if (g->scale == 0.0) return SeriesResult::exact(0.0);
    if (std::abs(g->ratio) >= 1.0) return SeriesResult::diverged();
    const double r2 = g->ratio * g->ratio;
    double v = g->scale * g->scale * std::pow(r2, static_cast<double>(k)) / (1.0 - r2);
    if (k == 0 && seq.zero_at_origin()) v -= g->scale * g->scale;
    return SeriesResult::exact(v);
  }
  const auto& a = std::get<ArfimaSeq>(shape);
  if (a.scale == 0.0) return SeriesResult::exact(0.0);
  if (a.d >= 0.5) return SeriesResult::diverged();
  constexpr std::size_t kHeadLimit = 100000;
  if (k <= kHeadLimit) {
    // sum_{j>=0} psi_j^2 = Gamma(1-2d) / Gamma(1-d)^2
    const double total = std::exp(std::lgamma(1.0 - 2.0 * a.d) - 2.0 * std::lgamma(1.0 - a.d));
    const auto head = arfima_weights(a.d, k);
    double h = 0.0;
    for (std::size_t i = 0; i < k; ++i) h += head[i] * head[i];
    double v = total - h;
    if (k == 0 && seq.zero_at_origin()) v -= 1.0;
    return SeriesResult::exact(a.scale * a.scale * v);
  }
  double psi = arfima_weights(a.d, k + 1).back();
  std::size_t next = k + 1;
  auto r = sum_series(
      [&](std::size_t i) {
        if (i == 0) return psi * psi;
        psi *= (a.d + static_cast<double>(next - 1)) / static_cast<double>(next);
        ++next;
        return psi * psi;
      },
      policy);
  r.value *= a.scale * a.scale;
  r.remainder *= a.scale * a.scale;
  return r;
}

SeriesResult tail_energy(const BetaScheme& scheme, std::size_t k, const TruncationPolicy& policy) {
  k = std::max<std::size_t>(k, 1);
  const auto& shape = scheme.shape();
  if (std::holds_alternative<ZeroBeta>(shape)) return SeriesResult::exact(0.0);
  if (std::holds_alternative<ConstantOneBeta>(shape)) return SeriesResult::diverged();
  if (const Sequence* seq = scheme.one_index_sequence()) return tail_energy(*seq, k, policy);
  throw std::invalid_argument("tail energy needs a one-index beta scheme");
}

SeriesResult abs_sum(const Sequence& seq, const TruncationPolicy& policy) {
  const auto& shape = seq.shape();
  if (std::holds_alternative<ZeroSeq>(shape)) return SeriesResult::exact(0.0);
  if (std::holds_alternative<FiniteSeq>(shape)) {
    const std::size_t n = *seq.support();
    return finite_sum(seq.materialize(n), false);
  }
  if (auto* g = std::get_if<GeometricSeq>(&shape)) {
    if (g->scale == 0.0) return SeriesResult::exact(0.0);
    if (std::abs(g->ratio) >= 1.0) return SeriesResult::diverged();
    double v = std::abs(g->scale) / (1.0 - std::abs(g->ratio));
    if (seq.zero_at_origin()) v -= std::abs(g->scale);
    return SeriesResult::exact(v);
  }
  const auto& a = std::get<ArfimaSeq>(shape);
  if (a.scale == 0.0) return SeriesResult::exact(0.0);
  if (a.d == 0.0) return SeriesResult::exact(seq.zero_at_origin() ? 0.0 : std::abs(a.scale));
  // Everything else goes through the heuristic so divergence (d > 0) is
  // detected the same way as for user-provided sequences.
  double psi = 1.0;
  auto r = sum_series(
      [&](std::size_t i) {
        if (i > 0) psi *= (a.d + static_cast<double>(i - 1)) / static_cast<double>(i);
        if (i == 0 && seq.zero_at_origin()) return 0.0;
        return std::abs(psi);
      },
      policy);
  r.value *= std::abs(a.scale);
  r.remainder *= std::abs(a.scale);
  return r;
}

// ---------------------------------------------------------------------------
// Nested series
// ---------------------------------------------------------------------------

namespace {

/// One relaxation pass F_out(i) = 1 + inner * sum_j b(i,j) F_in(i+j) on
/// 0..lag. With F_in == F_out the pass is the exact backward recursion.
void nested_pass(const NestedSeries& s, std::size_t lag, const std::vector<double>& w,
                 const std::vector<double>& f_in, std::vector<double>& f_out) {
  const double c = s.inner_factor;
  using St = NestedSeries::Structure;
  switch (s.structure) {
    case St::Zero:
      std::fill(f_out.begin(), f_out.end(), 1.0);
      return;
    case St::Sum: {
      double suffix = 0.0;  // sum_{m > i} w(m) F_in(m)
      for (std::size_t ii = lag + 1; ii-- > 0;) {
        const double fin = f_in[ii];  // read before overwrite when in place
        f_out[ii] = 1.0 + c * suffix;
        suffix += w[ii] * (&f_in == &f_out ? f_out[ii] : fin);
      }
      return;
    }
    case St::Column: {
      // F(i) = G(lag - i), G(m) = 1 + c sum_{j=1}^m w(j) G(m - j)
      std::vector<double> g_in(lag + 1), g_out(lag + 1);
      for (std::size_t m = 0; m <= lag; ++m) g_in[m] = f_in[lag - m];
      const bool in_place = &f_in == &f_out;
      for (std::size_t m = 0; m <= lag; ++m) {
        const std::vector<double>& src = in_place ? g_out : g_in;
        double acc = 0.0;
        for (std::size_t j = 1; j <= m; ++j) acc += w[j] * src[m - j];
        g_out[m] = 1.0 + c * acc;
      }
      for (std::size_t m = 0; m <= lag; ++m) f_out[lag - m] = g_out[m];
      return;
    }
    case St::Finite:
    case St::Dense: {
      for (std::size_t ii = lag + 1; ii-- > 0;) {
        std::size_t jmax = lag - ii;
        if (s.structure == St::Finite) jmax = std::min(jmax, s.width);
        double acc = 0.0;
        for (std::size_t j = 1; j <= jmax; ++j) acc += s.b(ii, j) * f_in[ii + j];
        f_out[ii] = 1.0 + c * acc;
      }
      return;
    }
  }
}

}  // namespace

double evaluate_nested_at(const NestedSeries& s, std::size_t lag, std::size_t max_depth) {
  using St = NestedSeries::Structure;
  if (s.prepare) s.prepare(lag);
  const std::vector<double> a = s.a(lag + 1);
  std::vector<double> w;
  if (s.structure == St::Sum || s.structure == St::Column) w = s.w(lag + 1);

  std::vector<double> f(lag + 1, 1.0);
  if (max_depth == 0) {
    nested_pass(s, lag, w, f, f);
  } else {
    std::vector<double> next(lag + 1, 1.0);
    for (std::size_t d = 0; d < max_depth; ++d) {
      nested_pass(s, lag, w, f, next);
      f.swap(next);
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i <= lag; ++i) total += a[i] * f[i];
  return s.outer_factor * total;
}

SeriesResult evaluate_nested(const NestedSeries& s, const TruncationPolicy& policy) {
  using St = NestedSeries::Structure;
  const bool quadratic = s.structure == St::Column || s.structure == St::Dense;
  std::size_t cap = policy.max_terms;
  if (quadratic) cap = std::min(cap, policy.max_dp_lag);
  cap = std::max<std::size_t>(cap, 1);

  CheckpointTracker tracker(policy.abs_tail_tol);
  std::size_t lag = std::min(kFirstCheckpoint, cap);
  while (true) {
    const double v = evaluate_nested_at(s, lag, policy.max_depth);
    if (tracker.feed(v, lag)) {
      tracker.mark_done();
      break;
    }
    if (lag >= cap) break;
    lag = std::min(lag * 2, cap);
  }
  auto r = tracker.finish();
  r.method = SeriesMethod::TruncatedSeries;
  return r;
}

}  // namespace projlm
