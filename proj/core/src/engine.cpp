#include "projlm/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "projlm/solvability.hpp"

namespace projlm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// ---------------------------------------------------------------------------
// Kernel functors. They reproduce Kernel::eval_unchecked exactly.
// ---------------------------------------------------------------------------

struct LinearQ {
  double c;
  double operator()(double x) const noexcept { return c * x; }
};
struct ReluQ {
  double operator()(double x) const noexcept { return x > 0.0 ? x : 0.0; }
};
struct TriangleQ {
  double operator()(double x) const noexcept {
    if (x >= 0.0 && x <= 1.0) return x;
    if (x > 1.0 && x <= 2.0) return 2.0 - x;
    return 0.0;
  }
};
struct AffineQ {
  double a, b;
  double operator()(double x) const noexcept { return a + b * x; }
};
struct GenericQ {
  const Kernel* k;
  double operator()(double x) const noexcept { return k->eval_unchecked(x); }
};

template <class F>
decltype(auto) with_kernel(const Kernel& kernel, F&& f) {
  return std::visit(overloaded{
                        [&](const LinearKernel& k) { return f(LinearQ{k.slope}); },
                        [&](const ReluKernel&) { return f(ReluQ{}); },
                        [&](const TriangleKernel&) { return f(TriangleQ{}); },
                        [&](const AffineKernel& k) { return f(AffineQ{k.intercept, k.slope}); },
                        [&](const auto&) { return f(GenericQ{&kernel}); },
                    },
                    kernel.shape());
}

// ---------------------------------------------------------------------------
// Inner sums S_k = sum_{i<k} beta_{i,k-i} h_i, fed one h_k at a time.
// ---------------------------------------------------------------------------

struct ZeroAcc {
  void begin() noexcept {}
  double inner(std::size_t) const noexcept { return 0.0; }
  void push(std::size_t, double) noexcept {}
};

/// beta_{i,j} = w(i + j): S_k = w_k * sum_{i<k} h_i
struct RunningSumAcc {
  const double* w;
  double s = 0.0;
  void begin() noexcept { s = 0.0; }
  double inner(std::size_t k) const noexcept { return w[k] * s; }
  void push(std::size_t, double h) noexcept { s += h; }
};

/// beta_{i,j} = c r^j: S_k = c R_k, R_{k+1} = r (R_k + h_k)
struct GeometricColumnAcc {
  double c, r;
  double R = 0.0;
  void begin() noexcept { R = 0.0; }
  double inner(std::size_t) const noexcept { return c * R; }
  void push(std::size_t, double h) noexcept { R = r * (R + h); }
};

/// beta_{i,j} = w_j, w_j = 0 for j > L
struct DenseColumnAcc {
  const double* w;
  std::size_t L;
  double* h;
  void begin() noexcept {}
  double inner(std::size_t k) const noexcept {
    const std::size_t lo = k > L ? k - L : 0;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = lo;
    for (; i + 4 <= k; i += 4) {
      s0 += w[k - i] * h[i];
      s1 += w[k - i - 1] * h[i + 1];
      s2 += w[k - i - 2] * h[i + 2];
      s3 += w[k - i - 3] * h[i + 3];
    }
    for (; i < k; ++i) s0 += w[k - i] * h[i];
    return (s0 + s1) + (s2 + s3);
  }
  void push(std::size_t k, double v) noexcept { h[k] = v; }
};

/// Finite table tab[i * width + j - 1] = beta_{i,j}, i < rows, j <= width
struct FiniteAcc {
  const double* tab;
  std::size_t rows, width;
  double* h;
  void begin() noexcept {}
  double inner(std::size_t k) const noexcept {
    double s = 0.0;
    const std::size_t jmax = std::min(width, k);
    for (std::size_t j = 1; j <= jmax; ++j) {
      const std::size_t i = k - j;
      if (i < rows) s += tab[i * width + j - 1] * h[i];
    }
    return s;
  }
  void push(std::size_t k, double v) noexcept { h[k] = v; }
};

/// beta_{i,j} = u_i v_j
struct ProductAcc {
  const double* u;
  const double* v;
  double* uh;
  void begin() noexcept {}
  double inner(std::size_t k) const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += uh[i] * v[k - i];
    return s;
  }
  void push(std::size_t k, double h) noexcept { uh[k] = u[k] * h; }
};

enum class AccKind { Zero, RunningSum, GeometricColumn, DenseColumn, Finite, Product };

/// Coefficients materialized once per (spec, M); read-only across workers.
struct Prepared {
  EquationSpec spec;  // normalized
  std::size_t M = 0;
  std::size_t K = 0;  // last lag with possibly nonzero g
  std::size_t burn = 0;
  std::vector<double> alpha;
  AccKind acc = AccKind::Zero;
  std::vector<double> w;  // RunningSum / DenseColumn
  std::size_t L = 0;      // DenseColumn support
  double gc = 0.0, gr = 0.0;
  std::vector<double> table;
  std::size_t rows = 0, width = 0;
  std::vector<double> u, v;
};

Prepared prepare(const EquationSpec& input, std::size_t M) {
  Prepared p;
  p.spec = normalize(input);
  const EquationSpec& s = p.spec;
  p.M = M;
  p.K = s.lag_support ? std::min(M, *s.lag_support) : M;
  p.burn = burn_in(s, M);
  p.alpha = s.alpha.materialize(M + 1);
  for (std::size_t k = p.K + 1; k <= M; ++k) p.alpha[k] = 0.0;
  if (s.family == Family::TvArfima) return p;

  std::visit(overloaded{
                 [&](const ZeroBeta&) { p.acc = AccKind::Zero; },
                 [&](const ConstantOneBeta&) {
                   p.acc = AccKind::RunningSum;
                   p.w.assign(M + 1, 1.0);
                 },
                 [&](const SumFormBeta& f) {
                   p.acc = AccKind::RunningSum;
                   p.w = f.seq.materialize(M + 1);
                 },
                 [&](const ColumnFormBeta& f) {
                   if (auto* g = std::get_if<GeometricSeq>(&f.seq.shape())) {
                     p.acc = AccKind::GeometricColumn;
                     p.gc = g->scale;
                     p.gr = g->ratio;
                   } else {
                     p.acc = AccKind::DenseColumn;
                     p.w = f.seq.materialize(M + 1);
                     const auto sup = f.seq.support();
                     p.L = sup ? std::min(M, *sup > 0 ? *sup - 1 : 0) : M;
                   }
                 },
                 [&](const FiniteLagBeta& f) {
                   p.acc = AccKind::Finite;
                   p.rows = std::min(f.table.rows.size(), M + 1);
                   for (const auto& r : f.table.rows) p.width = std::max(p.width, r.size());
                   p.width = std::min(p.width, f.p);
                 },
                 [&](const GeneralBeta& g) {
                   if (auto* t = std::get_if<BetaTable>(&g.rule)) {
                     p.acc = AccKind::Finite;
                     p.rows = std::min(t->rows.size(), M + 1);
                     for (const auto& r : t->rows) p.width = std::max(p.width, r.size());
                   } else {
                     const auto& pr = std::get<BetaProduct>(g.rule);
                     p.acc = AccKind::Product;
                     p.u = pr.row.materialize(M + 1);
                     p.v = pr.col.materialize(M + 1);
                   }
                 },
             },
             s.beta.shape());
  if (p.acc == AccKind::Finite) {
    p.width = std::min(p.width, M);
    p.table.assign(p.rows * p.width, 0.0);
    for (std::size_t i = 0; i < p.rows; ++i) {
      for (std::size_t j = 1; j <= p.width; ++j) p.table[i * p.width + j - 1] = s.beta.at(i, j);
    }
  }
  return p;
}

[[noreturn]] void throw_nonfinite(std::int64_t t) {
  throw std::overflow_error("non-finite path value at t=" + std::to_string(t));
}

/// Per-path scratch and output.
struct Run {
  const Prepared& p;
  std::vector<double> z;  // zeta_tau for tau = zmin..n
  std::int64_t zmin;
  std::size_t n;
  bool retain;
  Path& out;

  const double* zeta_at(std::int64_t t) const { return z.data() + (t - zmin); }

  void store(std::int64_t t, double sum, const double* g) {
    if (t < 1) return;
    const double x = p.spec.mu + sum;
    if (!std::isfinite(x)) throw_nonfinite(t);
    out.values[static_cast<std::size_t>(t - 1)] = x;
    if (retain) {
      auto& sl = out.slices[static_cast<std::size_t>(t - 1)];
      std::copy(g, g + p.K + 1, sl.begin());
    }
  }
};

template <bool kFamilyII, class Q, class Acc>
void run_direct(Run& run, const Q& q, Acc acc) {
  const Prepared& p = run.p;
  const double* alpha = p.alpha.data();
  std::vector<double> g(p.M + 1, 0.0);
  for (std::int64_t t = 1; t <= static_cast<std::int64_t>(run.n); ++t) {
    const double* zt = run.zeta_at(t);
    acc.begin();
    double sum = 0.0;
    for (std::size_t k = 0; k <= p.K; ++k) {
      const double s = acc.inner(k);
      const double gk = kFamilyII ? alpha[k] * q(s) : q(alpha[k] + s);
      const double h = zt[-static_cast<std::ptrdiff_t>(k)] * gk;
      acc.push(k, h);
      sum += h;
      g[k] = gk;
    }
    if (!std::isfinite(sum)) throw_nonfinite(t);
    run.store(t, sum, g.data());
  }
}

template <class Q, class Acc>
void run_lagged(Run& run, const Q& q, Acc acc) {
  const Prepared& p = run.p;
  const double* alpha = p.alpha.data();
  const std::size_t K = p.K;
  std::vector<double> g(p.M + 1, 0.0), hprev(p.M + 1, 0.0), hcur(p.M + 1, 0.0);
  const std::int64_t t0 = 1 - static_cast<std::int64_t>(p.burn);
  {
    // Cold start: the slice before t0 takes its deterministic values Q(alpha_k).
    const double* zp = run.zeta_at(t0 - 1);
    for (std::size_t k = 0; k <= K; ++k) hprev[k] = zp[-static_cast<std::ptrdiff_t>(k)] * q(alpha[k]);
  }
  for (std::int64_t t = t0; t <= static_cast<std::int64_t>(run.n); ++t) {
    const double* zt = run.zeta_at(t);
    acc.begin();
    g[0] = q(alpha[0] + 0.0);
    double sum = zt[0] * g[0];
    hcur[0] = sum;
    for (std::size_t m = 0; m < K; ++m) {
      const double s = acc.inner(m);
      acc.push(m, hprev[m]);
      const double gk = q(alpha[m + 1] + s);
      const double h = zt[-static_cast<std::ptrdiff_t>(m + 1)] * gk;
      g[m + 1] = gk;
      hcur[m + 1] = h;
      sum += h;
    }
    if (!std::isfinite(sum)) throw_nonfinite(t);
    run.store(t, sum, g.data());
    hprev.swap(hcur);
  }
}

template <class D>
void run_tvarfima(Run& run, const D& dfun) {
  const Prepared& p = run.p;
  const std::size_t M = p.M;
  const std::size_t K = p.K;
  // Ring of prefix sums P^{(tau)}(L) = sum_{k<L} zeta_{tau-k} g^{(tau)}_k for
  // the previous M slices; unavailable slices are zero (cold start).
  std::vector<double> ring(M * (M + 1), 0.0);
  std::size_t head = 0;  // slot of time t-1
  auto prefix = [&](std::size_t m) -> const double* {
    return ring.data() + ((head + M - (m - 1)) % M) * (M + 1);
  };
  std::vector<double> g(M + 1, 0.0);
  const std::int64_t t0 = 1 - static_cast<std::int64_t>(p.burn);
  for (std::int64_t t = t0; t <= static_cast<std::int64_t>(run.n); ++t) {
    const double* zt = run.zeta_at(t);
    g[0] = 1.0;
    for (std::size_t j = 1; j <= K; ++j) {
      double v = 1.0;
      for (std::size_t m = 1; m <= j; ++m) {
        const double x = m < j ? prefix(m)[j - m] : 0.0;
        v *= (dfun(x) + static_cast<double>(m - 1)) / static_cast<double>(m);
      }
      g[j] = v;
    }
    double sum = 0.0;
    if (M > 0) {
      head = (head + 1) % M;
      double* P = ring.data() + head * (M + 1);
      P[0] = 0.0;
      for (std::size_t k = 0; k <= K; ++k) {
        const double h = zt[-static_cast<std::ptrdiff_t>(k)] * g[k];
        sum += h;
        if (k < M) P[k + 1] = P[k] + h;
      }
      for (std::size_t k = K + 1; k < M; ++k) P[k + 1] = P[k];
    } else {
      sum = zt[0] * g[0];
    }
    if (!std::isfinite(sum)) throw_nonfinite(t);
    run.store(t, sum, g.data());
  }
}

template <class F>
void with_accumulator(const Prepared& p, std::vector<double>& scratch, F&& f) {
  switch (p.acc) {
    case AccKind::Zero: f(ZeroAcc{}); return;
    case AccKind::RunningSum: f(RunningSumAcc{p.w.data()}); return;
    case AccKind::GeometricColumn: f(GeometricColumnAcc{p.gc, p.gr}); return;
    case AccKind::DenseColumn: f(DenseColumnAcc{p.w.data(), p.L, scratch.data()}); return;
    case AccKind::Finite: f(FiniteAcc{p.table.data(), p.rows, p.width, scratch.data()}); return;
    case AccKind::Product: f(ProductAcc{p.u.data(), p.v.data(), scratch.data()}); return;
  }
}

Path run_path(const Prepared& p, std::size_t n, const InnovationStream& stream,
              std::uint64_t replicate, bool retain) {
  Path out;
  out.n = n;
  out.M = p.M;
  out.seed = stream.seed();
  out.replicate = replicate;
  out.mu = p.spec.mu;
  out.values.assign(n, 0.0);
  if (retain) out.slices.assign(n, std::vector<double>(p.M + 1, 0.0));

  const std::int64_t zmin = -static_cast<std::int64_t>(p.M + p.burn);
  Run run{p, std::vector<double>(static_cast<std::size_t>(static_cast<std::int64_t>(n) - zmin + 1)),
          zmin, n, retain, out};
  stream.fill(replicate, zmin, run.z);
  if (retain) {
    const std::int64_t first = 1 - static_cast<std::int64_t>(p.M);
    out.innovations.assign(run.z.begin() + (first - zmin), run.z.end());
  }

  std::vector<double> scratch(p.M + 1, 0.0);
  const Family fam = p.spec.family;
  if (fam == Family::TvArfima) {
    with_kernel(p.spec.tv->dfun, [&](const auto& d) { run_tvarfima(run, d); });
    return out;
  }
  with_kernel(p.spec.kernel, [&](const auto& q) {
    with_accumulator(p, scratch, [&](auto acc) {
      switch (fam) {
        case Family::FamilyII: run_direct<true>(run, q, acc); break;
        case Family::Lagged: run_lagged(run, q, acc); break;
        default: run_direct<false>(run, q, acc); break;
      }
    });
  });
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Reference slice computation
// ---------------------------------------------------------------------------

CoefficientSlice coefficient_slice(const EquationSpec& input, std::span<const double> window,
                                   const SliceHistory& history, std::int64_t t) {
  if (window.empty()) throw std::invalid_argument("coefficient window must hold M + 1 values");
  const EquationSpec spec = normalize(input);
  const std::size_t M = window.size() - 1;
  const std::size_t K = spec.lag_support ? std::min(M, *spec.lag_support) : M;
  CoefficientSlice out;
  out.t = t;
  out.M = M;
  out.values.assign(M + 1, 0.0);
  auto& g = out.values;
  const Kernel& Q = spec.kernel;
  auto check = [](double v, std::size_t k) {
    if (!std::isfinite(v)) {
      throw std::overflow_error("non-finite coefficient at lag k=" + std::to_string(k));
    }
    return v;
  };
  const auto alpha = spec.alpha.materialize(M + 1);

  switch (spec.family) {
    case Family::FamilyI:
    case Family::FamilyII:
    case Family::Larch: {
      const bool two = spec.family == Family::FamilyII;
      for (std::size_t k = 0; k <= K; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += spec.beta.at(i, k - i) * window[i] * g[i];
        check(s, k);
        g[k] = check(two ? alpha[k] * Q.eval_unchecked(s) : Q.eval_unchecked(alpha[k] + s), k);
      }
      break;
    }
    case Family::Lagged: {
      std::vector<double> gp;
      if (!history.prev.empty()) {
        gp = history.prev[0].values;
        gp.resize(M + 1, 0.0);
      } else if (history.cold_start) {
        gp.resize(M + 1);
        for (std::size_t k = 0; k <= M; ++k) gp[k] = Q.eval_unchecked(alpha[k]);
      } else {
        throw std::invalid_argument("Lagged slices need the previous slice (or cold start)");
      }
      for (std::size_t k = 0; k <= K; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i + 2 <= k; ++i) {
          s += spec.beta.at(i, k - 1 - i) * window[i + 1] * gp[i];
        }
        g[k] = check(Q.eval_unchecked(alpha[k] + s), k);
      }
      break;
    }
    case Family::TvArfima: {
      if (!spec.tv) throw std::invalid_argument("TvArfima spec needs dfun");
      const std::size_t need = M > 0 ? M - 1 : 0;
      if (history.prev.size() < need && !history.cold_start) {
        throw std::invalid_argument("TvArfima slices need the previous M - 1 slices");
      }
      // x_m = sum_{k < j-m} zeta_{t-m-k} g^{(t-m)}_k
      auto partial = [&](std::size_t m, std::size_t len) {
        if (m > history.prev.size()) return 0.0;
        const auto& pv = history.prev[m - 1].values;
        double s = 0.0;
        for (std::size_t k = 0; k < len && k < pv.size(); ++k) s += window[m + k] * pv[k];
        return s;
      };
      g[0] = 1.0;
      for (std::size_t j = 1; j <= K; ++j) {
        double v = 1.0;
        for (std::size_t m = 1; m <= j; ++m) {
          const double x = m < j ? partial(m, j - m) : 0.0;
          v *= (spec.tv->dfun.eval_unchecked(x) + static_cast<double>(m - 1)) /
               static_cast<double>(m);
        }
        g[j] = check(v, j);
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

double Path::zeta(std::int64_t u) const {
  if (innovations.empty()) throw std::logic_error("path innovations were not retained");
  const std::int64_t first = 1 - static_cast<std::int64_t>(M);
  if (u < first || u > static_cast<std::int64_t>(n)) {
    throw std::out_of_range("innovation index outside the retained range");
  }
  return innovations[static_cast<std::size_t>(u - first)];
}

const std::vector<double>& Path::slice(std::int64_t t) const {
  if (slices.empty()) throw std::logic_error("path slices were not retained");
  if (t < 1 || t > static_cast<std::int64_t>(n)) throw std::out_of_range("slice time outside 1..n");
  return slices[static_cast<std::size_t>(t - 1)];
}

std::size_t burn_in(const EquationSpec& spec, std::size_t M) {
  return spec.family == Family::Lagged || spec.family == Family::TvArfima ? M : 0;
}

std::size_t worker_count(std::size_t requested, std::size_t units) {
  std::size_t n = requested;
  if (n == 0) {
    n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PROJLM_THREADS")) {
      char* end = nullptr;
      const long cap = std::strtol(env, &end, 10);
      if (end != env && cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
    }
  }
  return std::max<std::size_t>(1, std::min(n, std::max<std::size_t>(units, 1)));
}

Path simulate_path(const EquationSpec& spec, std::size_t n, std::size_t M,
                   const InnovationStream& stream, std::uint64_t replicate, bool retain_slices) {
  if (n < 1) throw std::invalid_argument("path length n must be >= 1");
  const Prepared p = prepare(spec, M);
  return run_path(p, n, stream, replicate, retain_slices);
}

std::vector<Path> simulate(const EquationSpec& spec, const SimulationConfig& config,
                           const InnovationStream& stream) {
  if (config.n < 1) throw std::invalid_argument("path length n must be >= 1");
  if (!config.force) {
    CheckOptions opts;
    opts.omega2 = false;
    const auto rep = check_spec(spec, opts);
    if (rep.exists == Verdict::No) {
      throw RefusalError("existence check failed (exists=no); rerun with force to simulate anyway");
    }
  }
  const std::size_t M = config.M.value_or(config.n);
  const Prepared p = prepare(spec, M);
  std::vector<Path> paths(config.replicates);
  const std::size_t workers = worker_count(config.threads, config.replicates);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= paths.size()) return;
      try {
        paths[r] = run_path(p, config.n, stream, config.first_replicate + r, config.retain_slices);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(paths.size());
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return paths;
}

double project(const Path& path, std::int64_t s, std::int64_t t) {
  if (s > t + 1) throw std::invalid_argument("projection needs s <= t + 1");
  if (s == t + 1) return path.mu;
  if (t - s > static_cast<std::int64_t>(path.M)) {
    throw std::invalid_argument("projection range exceeds the truncation level");
  }
  const auto& g = path.slice(t);
  double acc = 0.0;
  for (std::int64_t k = 0; k <= t - s; ++k) {
    acc += path.zeta(t - k) * g[static_cast<std::size_t>(k)];
  }
  return path.mu + acc;
}

FilteredPath linear_filter(const Path& path, std::span<const double> a) {
  if (a.empty()) throw std::invalid_argument("filter needs at least one coefficient");
  if (!path.retained()) throw std::logic_error("path slices were not retained");
  FilteredPath out;
  const std::size_t J = a.size() - 1;
  out.first_t = static_cast<std::int64_t>(J) + 1;
  double asum = 0.0;
  for (double v : a) asum += v;
  out.mean = path.mu * asum;
  const std::size_t M = path.M;
  for (std::int64_t t = out.first_t; t <= static_cast<std::int64_t>(path.n); ++t) {
    double u = 0.0;
    for (std::size_t j = 0; j <= J; ++j) u += a[j] * path.values[static_cast<std::size_t>(t - 1) - j];
    out.values.push_back(u);
    std::vector<double> G(M + 1, 0.0);
    for (std::size_t k = 0; k <= M; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j <= std::min(k, J); ++j) {
        const std::int64_t tj = t - static_cast<std::int64_t>(j);
        if (tj < 1) break;
        acc += a[j] * path.slices[static_cast<std::size_t>(tj - 1)][k - j];
      }
      G[k] = acc;
    }
    out.slices.push_back(std::move(G));
  }
  return out;
}

std::vector<double> linear_moving_average(double mu, std::span<const double> b, std::size_t n,
                                          const InnovationStream& stream,
                                          std::uint64_t replicate) {
  if (b.empty()) return std::vector<double>(n, mu);
  const std::size_t M = b.size() - 1;
  const std::int64_t first = 1 - static_cast<std::int64_t>(M);
  std::vector<double> z(n + M);
  stream.fill(replicate, first, z);
  std::vector<double> out(n);
  for (std::size_t t = 1; t <= n; ++t) {
    double acc = 0.0;
    for (std::size_t k = 0; k <= M; ++k) acc += b[k] * z[t - 1 + M - k];
    out[t - 1] = mu + acc;
  }
  return out;
}

}  // namespace projlm
