#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "projlm/engine.hpp"
#include "projlm/oracle.hpp"

using namespace projlm;

namespace {

std::vector<double> window_at(const Path& p, std::int64_t t) {
  std::vector<double> w(p.M + 1);
  for (std::size_t k = 0; k <= p.M; ++k) w[k] = p.zeta(t - static_cast<std::int64_t>(k));
  return w;
}

void expect_slices_close(const std::vector<double>& a, const std::vector<double>& b,
                         const std::string& what) {
  ASSERT_EQ(a.size(), b.size()) << what;
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_NEAR(a[k], b[k], 1e-11 * (1.0 + std::abs(b[k]))) << what << " k=" << k;
  }
}

EquationSpec tv_const(double d) {
  EquationSpec e;
  e.family = Family::TvArfima;
  e.tv = TvArfimaParams{Kernel::affine(d, 0.0), 0.45};
  return e;
}

}  // namespace

TEST(Engine, FastPathMatchesReferenceSlices) {
  const InnovationStream stream(99);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const EquationSpec e = random_family_i_spec(seed, 12);
    const Path p = simulate_path(e, 20, 12, stream, seed, true);
    for (std::int64_t t : {1, 7, 20}) {
      const auto ref = coefficient_slice(e, window_at(p, t));
      expect_slices_close(p.slice(t), ref.values, "seed " + std::to_string(seed));
      double x = e.mu;
      for (std::size_t k = 0; k <= p.M; ++k) x += ref.values[k] * p.zeta(t - static_cast<std::int64_t>(k));
      EXPECT_NEAR(p.values[t - 1], x, 1e-10 * (1.0 + std::abs(x)));
    }
  }
}

TEST(Engine, ExplicitExpansionAtLowLags) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 100; ++trial) {
    const EquationSpec e = random_family_i_spec(500 + trial, 6);
    std::vector<double> w(7);
    for (double& z : w) z = nd(rng);
    const auto g = coefficient_slice(e, w).values;
    const Kernel& Q = e.kernel;
    const double a0 = e.alpha.at(0), a1 = e.alpha.at(1), a2 = e.alpha.at(2);
    const double g0 = Q(a0);
    const double g1 = Q(a1 + e.beta.at(0, 1) * w[0] * g0);
    const double g2 = Q(a2 + e.beta.at(0, 2) * w[0] * g0 + e.beta.at(1, 1) * w[1] * g1);
    EXPECT_DOUBLE_EQ(g[0], g0) << trial;
    EXPECT_NEAR(g[1], g1, 1e-14 * (1 + std::abs(g1))) << trial;
    EXPECT_NEAR(g[2], g2, 1e-14 * (1 + std::abs(g2))) << trial;
  }
}

TEST(Engine, ZeroAlphaGivesConstantPath) {
  EquationSpec e;
  e.mu = 1.25;
  e.kernel = Kernel::relu();
  e.beta = BetaScheme::sum_form(Sequence::geometric(0.5));
  const Path p = simulate_path(e, 500, 100, InnovationStream(3), 0);
  for (double x : p.values) EXPECT_EQ(x, 1.25);
}

TEST(Engine, ZeroBetaLinearIsBitIdenticalToMovingAverage) {
  EquationSpec e;
  e.mu = 0.3;
  e.alpha = Sequence::arfima(0.3);
  const InnovationStream stream(11);
  const std::size_t n = 400, M = 150;
  const Path p = simulate_path(e, n, M, stream, 2);
  const auto b = e.alpha.materialize(M + 1);
  const auto ref = linear_moving_average(0.3, b, n, stream, 2);
  ASSERT_EQ(p.values.size(), ref.size());
  for (std::size_t t = 0; t < n; ++t) ASSERT_EQ(p.values[t], ref[t]) << t;
}

TEST(Engine, ConstantTvArfimaIsBitIdenticalToArfima) {
  const InnovationStream stream(12);
  const std::size_t n = 300, M = 120;
  const Path p = simulate_path(tv_const(0.35), n, M, stream, 0);
  const auto ref = linear_moving_average(0.0, arfima_weights(0.35, M + 1), n, stream, 0);
  for (std::size_t t = 0; t < n; ++t) ASSERT_EQ(p.values[t], ref[t]) << t;
}

TEST(Engine, TvArfimaMatchesReferenceSlices) {
  EquationSpec e;
  e.family = Family::TvArfima;
  e.tv = TvArfimaParams{Kernel::step({0.0}, {0.1, 0.4}), 0.4};
  const InnovationStream stream(13);
  const std::size_t M = 10;
  const Path p = simulate_path(e, 30, M, stream, 0, true);
  for (std::int64_t t = static_cast<std::int64_t>(M); t <= 30; ++t) {
    std::vector<CoefficientSlice> prev;
    for (std::size_t m = 1; m < M; ++m) {
      CoefficientSlice s;
      s.values = p.slice(t - static_cast<std::int64_t>(m));
      prev.push_back(s);
    }
    SliceHistory h{prev, false};
    const auto ref = coefficient_slice(e, window_at(p, t), h, t);
    expect_slices_close(p.slice(t), ref.values, "t=" + std::to_string(t));
  }
}

TEST(Engine, LaggedMatchesReferenceSlices) {
  EquationSpec e;
  e.family = Family::Lagged;
  e.kernel = Kernel::relu();
  e.alpha = Sequence::geometric(0.6);
  e.beta = BetaScheme::sum_form(Sequence::geometric(0.7, 0.5));
  const InnovationStream stream(14);
  const Path p = simulate_path(e, 25, 9, stream, 0, true);
  for (std::int64_t t = 2; t <= 25; ++t) {
    CoefficientSlice prev;
    prev.values = p.slice(t - 1);
    std::vector<CoefficientSlice> hist{prev};
    const auto ref = coefficient_slice(e, window_at(p, t), SliceHistory{hist, false}, t);
    expect_slices_close(p.slice(t), ref.values, "t=" + std::to_string(t));
  }
  EXPECT_THROW((void)coefficient_slice(e, window_at(p, 3)), std::invalid_argument);
  EXPECT_NO_THROW((void)coefficient_slice(e, window_at(p, 3), SliceHistory{{}, true}));
}

TEST(Engine, FamilyIIMatchesReferenceSlices) {
  EquationSpec e;
  e.family = Family::FamilyII;
  e.kernel = Kernel::affine(1.0, 0.5);
  e.alpha = Sequence::geometric(0.5);
  e.beta = BetaScheme::column_form(Sequence::geometric(0.5, 0.5));
  const Path p = simulate_path(e, 10, 8, InnovationStream(15), 0, true);
  for (std::int64_t t : {1, 5, 10}) {
    expect_slices_close(p.slice(t), coefficient_slice(e, window_at(p, t)).values, "FamilyII");
  }
}

TEST(Engine, LagSupportTruncatesOuterSum) {
  EquationSpec e;
  e.kernel = Kernel::indicator(0.0, 2.0);
  e.alpha = Sequence::geometric(0.5);
  e.beta = BetaScheme::column_form(Sequence::geometric(0.5));
  e.lag_support = 3;
  const Path p = simulate_path(e, 10, 8, InnovationStream(16), 0, true);
  for (std::int64_t t = 1; t <= 10; ++t) {
    const auto& g = p.slice(t);
    for (std::size_t k = 4; k < g.size(); ++k) EXPECT_EQ(g[k], 0.0);
    EXPECT_EQ(g[0], 1.0);
  }
}

TEST(Engine, WorkerCountDoesNotChangeResults) {
  const EquationSpec e = random_family_i_spec(77, 8);
  SimulationConfig c1;
  c1.n = 300;
  c1.M = 100;
  c1.replicates = 16;
  c1.threads = 1;
  c1.force = true;
  SimulationConfig c8 = c1;
  c8.threads = 8;
  const InnovationStream stream(17);
  const auto a = simulate(e, c1, stream);
  const auto b = simulate(e, c8, stream);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    ASSERT_EQ(a[r].values, b[r].values) << r;
    EXPECT_EQ(a[r].replicate, r);
  }
}

TEST(Engine, ReplicateOffsetSelectsSubstream) {
  const EquationSpec e = random_family_i_spec(78, 8);
  SimulationConfig c;
  c.n = 50;
  c.M = 20;
  c.replicates = 3;
  c.force = true;
  const InnovationStream stream(18);
  const auto all = simulate(e, c, stream);
  c.first_replicate = 2;
  c.replicates = 1;
  const auto one = simulate(e, c, stream);
  EXPECT_EQ(one[0].values, all[2].values);
}

TEST(Engine, RefusesSpecWithoutSolution) {
  EquationSpec e;
  e.alpha = Sequence::geometric(0.5);
  e.beta = BetaScheme::column_form(Sequence::finite({1.1}));
  SimulationConfig c;
  c.n = 20;
  c.M = 10;
  EXPECT_THROW((void)simulate(e, c, InnovationStream(1)), RefusalError);
  c.force = true;
  EXPECT_NO_THROW((void)simulate(e, c, InnovationStream(1)));
}

TEST(Engine, NonFiniteValuesThrow) {
  EquationSpec e;
  e.alpha = Sequence::finite({1e308});
  e.beta = BetaScheme::constant_one();
  SimulationConfig c;
  c.n = 50;
  c.M = 50;
  c.force = true;
  EXPECT_THROW((void)simulate(e, c, InnovationStream(2)), std::overflow_error);
}

TEST(Engine, ProjectionRecoversPathAndMean) {
  const EquationSpec e = random_family_i_spec(79, 10);
  const Path p = simulate_path(e, 40, 10, InnovationStream(19), 0, true);
  for (std::int64_t t : {1, 20, 40}) {
    EXPECT_EQ(project(p, t + 1, t), e.mu);
    EXPECT_NEAR(project(p, t - 10, t), p.values[t - 1], 1e-10 * (1 + std::abs(p.values[t - 1])));
    // E_{[t,t]} X_t = mu + zeta_t g_{t,t}
    EXPECT_DOUBLE_EQ(project(p, t, t), e.mu + p.zeta(t) * p.slice(t)[0]);
  }
}

TEST(Engine, LinearFilter) {
  EquationSpec e;
  e.mu = 2.0;
  e.alpha = Sequence::geometric(0.5);
  const Path p = simulate_path(e, 30, 10, InnovationStream(20), 0, true);
  const std::vector<double> a{1.0, -0.5};
  const FilteredPath f = linear_filter(p, a);
  EXPECT_EQ(f.first_t, 2);
  EXPECT_DOUBLE_EQ(f.mean, 1.0);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const std::size_t t = i + 2;
    EXPECT_NEAR(f.values[i], p.values[t - 1] - 0.5 * p.values[t - 2], 1e-13);
  }
  // G_{t,t} = a_0 g_{t,t}; G_{t-1,t} = a_0 g_{t-1,t} + a_1 g_{t-1,t-1}
  EXPECT_DOUBLE_EQ(f.slices[0][0], p.slice(2)[0]);
  EXPECT_DOUBLE_EQ(f.slices[0][1], p.slice(2)[1] - 0.5 * p.slice(1)[0]);
}

TEST(Engine, LarchSimulatesSigma) {
  const EquationSpec e = make_larch_spec(1.0, Sequence::finite({0.6}));
  const InnovationStream stream(21);
  const Path p = simulate_path(e, 200, 60, stream, 0);
  // sigma_t = 1 + 0.6 r_{t-1} = 1 + 0.6 sigma_{t-1} zeta_{t-1}
  for (std::size_t t = 2; t <= 200; ++t) {
    const double expect = 1.0 + 0.6 * p.values[t - 2] * stream.at(0, static_cast<std::int64_t>(t - 1));
    EXPECT_NEAR(p.values[t - 1], expect, 1e-9);
  }
}

TEST(Engine, BurnIn) {
  EXPECT_EQ(burn_in(tv_const(0.2), 40), 40u);
  EXPECT_EQ(burn_in(EquationSpec{}, 40), 0u);
  EXPECT_GE(worker_count(0, 4), 1u);
  EXPECT_EQ(worker_count(8, 3), 3u);
}
