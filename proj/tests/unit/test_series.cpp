#include <gtest/gtest.h>

#include <cmath>

#include "projlm/series.hpp"

using namespace projlm;

TEST(SumSeries, GeometricConverges) {
  const auto r = sum_series([](std::size_t k) { return std::pow(0.5, k); }, {});
  EXPECT_EQ(r.status, SeriesStatus::Converged);
  EXPECT_NEAR(r.value, 2.0, 1e-12);
}

TEST(SumSeries, HarmonicDiverges) {
  const auto r = sum_series([](std::size_t k) { return 1.0 / (k + 1.0); }, {});
  EXPECT_EQ(r.status, SeriesStatus::Diverged);
}

TEST(SumSeries, SlowSeriesIsEstimatedWithFiniteRemainder) {
  TruncationPolicy p;
  p.max_terms = 1 << 16;
  const auto r = sum_series([](std::size_t k) { return std::pow(k + 1.0, -1.5); }, p);
  EXPECT_EQ(r.status, SeriesStatus::Estimated);
  EXPECT_TRUE(std::isfinite(r.remainder));
  // zeta(1.5) = 2.6123753...
  EXPECT_NEAR(r.value + r.remainder, 2.6123753486854883, 0.02);
}

TEST(TailEnergy, GeometricClosedForm) {
  const auto r = tail_energy(Sequence::geometric(0.5, 2.0), 3);
  EXPECT_EQ(r.method, SeriesMethod::ClosedForm);
  EXPECT_NEAR(r.value, 4.0 * std::pow(0.25, 3) / 0.75, 1e-15);
}

TEST(TailEnergy, ArfimaClosedFormMatchesDirectSum) {
  const double d = 0.3;
  const auto w = arfima_weights(d, 2'000'000);
  double direct = 0.0;
  for (std::size_t j = w.size(); j-- > 5;) direct += w[j] * w[j];
  // Tail beyond the materialized range: psi_j ~ j^{d-1}/Gamma(d).
  const double g = std::tgamma(d);
  const double N = static_cast<double>(w.size());
  direct += std::pow(N, 2 * d - 1) / ((1 - 2 * d) * g * g);
  const auto r = tail_energy(Sequence::arfima(d), 5);
  EXPECT_NEAR(r.value, direct, 1e-9);
}

TEST(TailEnergy, FiniteAndBeta) {
  EXPECT_DOUBLE_EQ(tail_energy(Sequence::finite({1.0, 2.0, 3.0}), 1).value, 13.0);
  const BetaScheme col = BetaScheme::column_form(Sequence::finite({3.0, 4.0}));
  EXPECT_DOUBLE_EQ(tail_energy(col, 0).value, 25.0);
  EXPECT_DOUBLE_EQ(tail_energy(col, 2).value, 16.0);
  EXPECT_EQ(tail_energy(BetaScheme::constant_one(), 1).status, SeriesStatus::Diverged);
  EXPECT_EQ(tail_energy(BetaScheme::zero(), 1).value, 0.0);
}

TEST(AbsSum, Geometric) {
  EXPECT_NEAR(abs_sum(Sequence::geometric(-0.5)).value, 2.0, 1e-12);
}

TEST(Nested, ColumnStructureMatchesClosedForm) {
  // sum_i a_i F(i), F = 1 + q sum_j w_j F  =>  sum a / (1 - q sum w)
  NestedSeries ns;
  ns.a = [](std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::pow(0.25, i);
    return v;
  };
  ns.w = [](std::size_t n) {
    std::vector<double> v(n, 0.0);
    for (std::size_t j = 1; j < n; ++j) v[j] = std::pow(0.5, j);
    return v;
  };
  ns.structure = NestedSeries::Structure::Column;
  ns.inner_factor = 0.5;
  const auto r = evaluate_nested(ns, {});
  EXPECT_EQ(r.status, SeriesStatus::Converged);
  EXPECT_NEAR(r.value, (1.0 / 0.75) / (1.0 - 0.5), 1e-10);
}

TEST(Nested, DenseEqualsColumnStructure) {
  NestedSeries col;
  col.a = [](std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::pow(0.6, i);
    return v;
  };
  col.w = [](std::size_t n) {
    std::vector<double> v(n, 0.0);
    for (std::size_t j = 1; j < n; ++j) v[j] = std::pow(0.3, j);
    return v;
  };
  col.structure = NestedSeries::Structure::Column;
  NestedSeries dense = col;
  dense.structure = NestedSeries::Structure::Dense;
  dense.b = [](std::size_t, std::size_t j) { return std::pow(0.3, j); };
  dense.prepare = [](std::size_t) {};
  for (std::size_t L : {1u, 5u, 40u}) {
    EXPECT_NEAR(evaluate_nested_at(col, L), evaluate_nested_at(dense, L), 1e-12) << L;
  }
}

TEST(Nested, DepthCapLimitsChains) {
  NestedSeries ns;
  ns.structure = NestedSeries::Structure::Dense;
  ns.a = [](std::size_t n) {
    std::vector<double> v(n, 0.0);
    v[0] = 1.0;
    return v;
  };
  ns.b = [](std::size_t, std::size_t j) { return j == 1 ? 1.0 : 0.0; };
  ns.prepare = [](std::size_t) {};
  // Chains 0 -> 1 -> 2 -> ... of depth k each contribute 1.
  EXPECT_DOUBLE_EQ(evaluate_nested_at(ns, 5), 6.0);
  EXPECT_DOUBLE_EQ(evaluate_nested_at(ns, 5, 2), 3.0);
}

TEST(SeriesNames, Strings) {
  EXPECT_EQ(to_string(SeriesStatus::Estimated), "estimated");
  EXPECT_EQ(to_string(SeriesMethod::ClosedForm), "closed-form");
}
