#include "projlm/oracle.hpp"

#include "projlm/engine.hpp"

#include <algorithm>
#include <bit>
#include <random>
#include <cmath>
#include <stdexcept>
#include <string>

namespace projlm {

namespace {

void check_window(std::size_t n) {
  if (n > kOracleMaxWindow) {
    throw OracleLimitError("oracle window " + std::to_string(n) + " exceeds the limit of " +
                           std::to_string(kOracleMaxWindow));
  }
}

int top_bit(SetMask S) { return 31 - std::countl_zero(S); }

double eval_set(const IndexFamily& fam, const GFamily& g, std::span<const double> zeta,
                SetMask S) {
  const auto succ = fam.successors(S);
  if (succ.empty()) return g.G(S, 0.0);
  double x = 0.0;
  for (auto it = succ.rbegin(); it != succ.rend(); ++it) {
    const int b = top_bit(*it);
    x += zeta[static_cast<std::size_t>(b)] * eval_set(fam, g, zeta, *it);
  }
  return g.G(S, x);
}

double bound_set(const IndexFamily& fam, const GFamily& g, SetMask S) {
  const Envelope e = g.envelope(S);
  const auto succ = fam.successors(S);
  if (succ.empty()) return e.alpha * e.alpha;
  double acc = 0.0;
  for (SetMask s : succ) acc += bound_set(fam, g, s);
  return e.alpha * e.alpha + e.beta * e.beta * acc;
}

double linear_slope(const Kernel& k) {
  if (auto* l = std::get_if<LinearKernel>(&k.shape())) return l->slope;
  if (auto* a = std::get_if<AffineKernel>(&k.shape()); a && a->intercept == 0.0) return a->slope;
  throw std::invalid_argument("Volterra expansion needs a linear kernel Q(x) = c x");
}

}  // namespace

IndexFamily::IndexFamily(std::vector<std::int64_t> T, std::function<bool(SetMask)> member)
    : T_(std::move(T)), member_(std::move(member)) {
  check_window(T_.size());
  std::sort(T_.begin(), T_.end());
  if (std::adjacent_find(T_.begin(), T_.end()) != T_.end()) {
    throw std::invalid_argument("index set T has repeated elements");
  }
}

IndexFamily IndexFamily::all_subsets(std::vector<std::int64_t> T) {
  return IndexFamily(std::move(T), [](SetMask S) { return S != 0; });
}

IndexFamily IndexFamily::up_to_size(std::vector<std::int64_t> T, std::size_t k) {
  return IndexFamily(std::move(T), [k](SetMask S) {
    return S != 0 && static_cast<std::size_t>(std::popcount(S)) <= k;
  });
}

IndexFamily IndexFamily::explicit_class(std::vector<std::int64_t> T, std::vector<SetMask> members) {
  std::sort(members.begin(), members.end());
  return IndexFamily(std::move(T), [m = std::move(members)](SetMask S) {
    return std::binary_search(m.begin(), m.end(), S);
  });
}

bool IndexFamily::contains(SetMask S) const { return member_(S); }

std::vector<SetMask> IndexFamily::successors(SetMask S) const {
  std::vector<SetMask> out;
  const int start = S == 0 ? 0 : top_bit(S) + 1;
  for (int b = start; b < static_cast<int>(T_.size()); ++b) {
    const SetMask next = S | (SetMask{1} << b);
    if (member_(next)) out.push_back(next);
  }
  return out;
}

std::vector<std::int64_t> IndexFamily::elements(SetMask S) const {
  std::vector<std::int64_t> out;
  for (std::size_t b = 0; b < T_.size(); ++b) {
    if (S & (SetMask{1} << b)) out.push_back(T_[b]);
  }
  return out;
}

double nested_eval(const IndexFamily& family, const GFamily& g, std::span<const double> zeta) {
  check_window(family.size());
  if (zeta.size() != family.size()) {
    throw std::invalid_argument("nested_eval needs one innovation per element of T");
  }
  double v = 0.0;
  for (std::size_t b = family.size(); b-- > 0;) {
    const SetMask S = SetMask{1} << b;
    if (!family.contains(S)) continue;
    v += zeta[b] * eval_set(family, g, zeta, S);
  }
  return v;
}

double convergence_bound(const IndexFamily& family, const GFamily& g) {
  check_window(family.size());
  double a = 0.0;
  for (std::size_t b = family.size(); b-- > 0;) {
    const SetMask S = SetMask{1} << b;
    if (family.contains(S)) a += bound_set(family, g, S);
  }
  return a;
}

std::pair<IndexFamily, GFamily> build_gfamily(const EquationSpec& input, std::int64_t t,
                                              std::size_t window) {
  check_window(window);
  if (window == 0) throw std::invalid_argument("oracle window must be >= 1");
  const EquationSpec spec = normalize(input);
  if (spec.family != Family::FamilyI) {
    throw std::invalid_argument("build_gfamily needs a FamilyI spec");
  }
  std::vector<std::int64_t> T(window);
  const std::int64_t first = t - static_cast<std::int64_t>(window) + 1;
  for (std::size_t b = 0; b < window; ++b) T[b] = first + static_cast<std::int64_t>(b);
  IndexFamily fam = IndexFamily::all_subsets(T);

  const auto alpha = spec.alpha.materialize(window);
  const BetaScheme beta = spec.beta;
  const Kernel Q = spec.kernel;
  const std::optional<std::size_t> support = spec.lag_support;
  const double c = spec.kernel.constants().c_q.value_or(std::nan(""));

  // Last two elements of S as lags from t.
  struct Tail {
    std::size_t lag;       // t - s_k
    std::size_t gap;       // s_k - s_{k-1}, 0 for singletons
  };
  auto tail = [first, t](SetMask S) {
    const int hi = top_bit(S);
    const SetMask rest = S & ~(SetMask{1} << hi);
    const std::int64_t sk = first + hi;
    Tail out{static_cast<std::size_t>(t - sk), 0};
    if (rest) out.gap = static_cast<std::size_t>(hi - top_bit(rest));
    return out;
  };

  GFamily g;
  g.G = [=](SetMask S, double x) {
    const Tail tl = tail(S);
    if (support && tl.lag > *support) return 0.0;
    const double coef = tl.gap == 0 ? 1.0 : beta.at(tl.lag, tl.gap);
    if (tl.lag == 0) return coef * Q(alpha[0]);
    return coef * Q(alpha[tl.lag] + x);
  };
  g.envelope = [=](SetMask S) {
    const Tail tl = tail(S);
    if (support && tl.lag > *support) return Envelope{0.0, 0.0};
    const double coef = tl.gap == 0 ? 1.0 : std::abs(beta.at(tl.lag, tl.gap));
    if (tl.lag == 0) return Envelope{coef * std::abs(Q(alpha[0])), 0.0};
    const double a = alpha[tl.lag];
    if (a == 0.0) return Envelope{0.0, coef * c};
    return Envelope{std::sqrt(2.0) * coef * c * std::abs(a), std::sqrt(2.0) * coef * c};
  };
  return {std::move(fam), std::move(g)};
}

VolterraTerm linear_volterra_terms(const EquationSpec& input, std::size_t order,
                                   std::span<const double> window) {
  const EquationSpec spec = normalize(input);
  if (spec.family != Family::FamilyI) {
    throw std::invalid_argument("Volterra expansion needs a FamilyI spec");
  }
  const double c = linear_slope(spec.kernel);
  const std::size_t W = window.size();
  VolterraTerm out;
  if (order >= W) {
    out.beyond_window = true;
    return out;
  }
  std::size_t last = W - 1;
  if (spec.lag_support) last = std::min(last, *spec.lag_support);
  const auto alpha = spec.alpha.materialize(W);
  // T[m]: sum of all order-d chains whose outermost innovation sits at lag m.
  std::vector<double> T(W, 0.0), next(W, 0.0);
  for (std::size_t m = 0; m <= last; ++m) T[m] = c * alpha[m] * window[m];
  for (std::size_t d = 0; d < order; ++d) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t m2 = 1; m2 <= last; ++m2) {
      double acc = 0.0;
      for (std::size_t m = 0; m < m2; ++m) {
        if (T[m] != 0.0) acc += spec.beta.at(m, m2 - m) * T[m];
      }
      next[m2] = c * window[m2] * acc;
    }
    T.swap(next);
  }
  for (std::size_t m = 0; m <= last; ++m) out.value += T[m];
  return out;
}

MomentEstimate mc_orthogonality_check(const EquationSpec& spec, std::size_t k, std::size_t l,
                                      std::size_t replicates, std::size_t window,
                                      const InnovationStream& stream, std::size_t lag) {
  if (k == 0 || l == 0) throw std::invalid_argument("Volterra orders start at 1");
  if (replicates < 2) throw std::invalid_argument("need at least two replicates");
  std::vector<double> z(window + lag);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t r = 0; r < replicates; ++r) {
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = stream.at(r, -static_cast<std::int64_t>(i));
    const std::span<const double> all(z);
    const double a = linear_volterra_terms(spec, k - 1, all.subspan(0, window)).value;
    const double b = linear_volterra_terms(spec, l - 1, all.subspan(lag, window)).value;
    const double p = a * b;
    sum += p;
    sum2 += p * p;
  }
  MomentEstimate out;
  out.replicates = replicates;
  const double n = static_cast<double>(replicates);
  out.mean = sum / n;
  const double var = std::max(0.0, (sum2 - n * out.mean * out.mean) / (n - 1.0));
  out.se = std::sqrt(var / n);
  return out;
}

CompareReport oracle_compare(const EquationSpec& input, std::size_t window, std::size_t trials,
                             const InnovationStream& stream, std::uint64_t first_replicate) {
  check_window(window);
  if (window == 0) throw std::invalid_argument("oracle window must be >= 1");
  const EquationSpec spec = normalize(input);
  if (spec.family != Family::FamilyI) {
    throw std::invalid_argument("oracle comparison needs a FamilyI spec");
  }
  const auto [fam, g] = build_gfamily(spec, 1, window);
  CompareReport rep;
  std::vector<double> zeta(window);
  for (std::size_t i = 0; i < trials; ++i) {
    const std::uint64_t r = first_replicate + i;
    for (std::size_t b = 0; b < window; ++b) zeta[b] = stream.at(r, fam.T()[b]);
    CompareTrial tr;
    tr.oracle = spec.mu + nested_eval(fam, g, zeta);
    tr.engine = simulate_path(spec, 1, window - 1, stream, r).values[0];
    tr.abs_dev = std::abs(tr.engine - tr.oracle);
    const double scale = std::max(std::abs(tr.engine), std::abs(tr.oracle));
    tr.rel_dev = scale > 0.0 ? tr.abs_dev / scale : 0.0;
    rep.max_abs_dev = std::max(rep.max_abs_dev, tr.abs_dev);
    rep.max_rel_dev = std::max(rep.max_rel_dev, tr.rel_dev);
    rep.trials.push_back(tr);
  }
  return rep;
}

EquationSpec random_family_i_spec(std::uint64_t seed, std::size_t max_lag) {
  std::mt19937_64 rng(seed);
  auto U = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  std::normal_distribution<double> N(0.0, 1.0);

  EquationSpec s;
  s.family = Family::FamilyI;
  s.mu = U(-1.0, 1.0);
  switch (pick(3)) {
    case 0: s.kernel = Kernel::linear(U(0.5, 1.2)); break;
    case 1: s.kernel = Kernel::relu(); break;
    default: s.kernel = Kernel::triangle(); break;
  }
  switch (pick(3)) {
    case 0: s.alpha = Sequence::geometric(U(-0.9, 0.9), U(0.5, 2.0)); break;
    case 1: s.alpha = Sequence::arfima(U(0.05, 0.45), U(0.5, 2.0)); break;
    default: {
      std::vector<double> v(max_lag + 1);
      for (auto& x : v) x = N(rng);
      s.alpha = Sequence::finite(v);
    }
  }
  auto small_geometric = [&] { return Sequence::geometric(U(0.1, 0.8), U(0.1, 0.6)); };
  auto table = [&](std::size_t p) {
    std::vector<std::vector<double>> rows(p);
    for (std::size_t i = 0; i < p; ++i) {
      rows[i].resize(p - i);
      for (auto& x : rows[i]) x = 0.3 * N(rng);
    }
    return rows;
  };
  switch (pick(6)) {
    case 0: s.beta = BetaScheme::zero(); break;
    case 1: s.beta = BetaScheme::sum_form(small_geometric()); break;
    case 2: s.beta = BetaScheme::column_form(small_geometric()); break;
    case 3: s.beta = BetaScheme::table(table(max_lag)); break;
    case 4:
      s.beta = BetaScheme::product(Sequence::geometric(U(0.3, 0.9), U(0.5, 1.0)), small_geometric());
      break;
    default: {
      const std::size_t p = std::max<std::size_t>(2, max_lag / 2);
      s.beta = BetaScheme::finite_lag(p, table(p));
    }
  }
  return s;
}

}  // namespace projlm
