#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "projlm/engine.hpp"
#include "projlm/oracle.hpp"

using namespace projlm;

TEST(IndexFamily, AllSubsetsAndSuccessors) {
  const auto f = IndexFamily::all_subsets({3, 1, 2});
  EXPECT_EQ(f.T(), (std::vector<std::int64_t>{1, 2, 3}));
  EXPECT_TRUE(f.contains(0b101));
  EXPECT_FALSE(f.contains(0));
  EXPECT_EQ(f.successors(0b001), (std::vector<SetMask>{0b011, 0b101}));
  EXPECT_EQ(f.successors(0b010), (std::vector<SetMask>{0b110}));
  EXPECT_TRUE(f.maximal(0b100));
  EXPECT_EQ(f.elements(0b101), (std::vector<std::int64_t>{1, 3}));
  EXPECT_THROW((void)IndexFamily::all_subsets({1, 1}), std::invalid_argument);
}

TEST(IndexFamily, UpToSize) {
  const auto f = IndexFamily::up_to_size({1, 2, 3, 4}, 2);
  EXPECT_TRUE(f.contains(0b0011));
  EXPECT_FALSE(f.contains(0b0111));
  EXPECT_TRUE(f.maximal(0b0011));
  EXPECT_EQ(f.successors(0b0001).size(), 3u);
}

TEST(IndexFamily, ExplicitClass) {
  const auto f = IndexFamily::explicit_class({1, 2, 3}, {0b001, 0b011, 0b010});
  EXPECT_EQ(f.successors(0b001), (std::vector<SetMask>{0b011}));
  EXPECT_TRUE(f.maximal(0b011));
  EXPECT_FALSE(f.contains(0b100));
}

TEST(IndexFamily, CapIsEnforced) {
  std::vector<std::int64_t> T(kOracleMaxWindow + 1);
  std::iota(T.begin(), T.end(), 0);
  EXPECT_THROW((void)IndexFamily::all_subsets(T), OracleLimitError);
  EXPECT_THROW((void)build_gfamily(EquationSpec{}, 1, kOracleMaxWindow + 1), OracleLimitError);
}

TEST(Oracle, NestedSeriesMatchesEngineOnRandomSpecs) {
  const InnovationStream stream(4242);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const std::size_t W = 1 + s % 8;
    const EquationSpec e = random_family_i_spec(s, W);
    const auto rep = oracle_compare(e, W, 2, stream, 10 * s);
    EXPECT_LT(rep.max_rel_dev, 1e-10) << "spec " << s << " window " << W;
  }
}

TEST(Oracle, ZeroBetaIsSingleSum) {
  EquationSpec e;
  e.kernel = Kernel::relu();
  e.alpha = Sequence::geometric(-0.7);
  const auto rep = oracle_compare(e, 8, 20, InnovationStream(1));
  EXPECT_LT(rep.max_rel_dev, 1e-14);
}

TEST(Oracle, LarchIsNormalized) {
  const EquationSpec e = make_larch_spec(1.0, Sequence::finite({0.6, 0.2}));
  const auto rep = oracle_compare(e, 6, 20, InnovationStream(2));
  EXPECT_LT(rep.max_rel_dev, 1e-12);
  EquationSpec two;
  two.family = Family::FamilyII;
  two.kernel = Kernel::affine(1.0, 1.0);
  EXPECT_THROW((void)oracle_compare(two, 4, 1, InnovationStream(2)), std::invalid_argument);
}

TEST(Oracle, WiderWindowsBelowCap) {
  const EquationSpec e = random_family_i_spec(9, 12);
  const auto rep = oracle_compare(e, 12, 2, InnovationStream(3));
  EXPECT_LT(rep.max_rel_dev, 1e-10);
}

TEST(Oracle, LinearVolterraTermsSumToPath) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    EquationSpec e;
    e.kernel = Kernel::linear(0.9);
    e.alpha = Sequence::geometric(0.6);
    e.beta = trial % 2 ? BetaScheme::sum_form(Sequence::geometric(0.7, 0.8))
                       : BetaScheme::table({{0.5, -0.3}, {0.2, 0.1}, {0.4}});
    const std::size_t W = 6;
    std::vector<double> w(W);
    for (double& z : w) z = nd(rng);
    double total = 0.0;
    for (std::size_t k = 0; k < W; ++k) {
      const auto term = linear_volterra_terms(e, k, w);
      EXPECT_FALSE(term.beyond_window);
      total += term.value;
    }
    EXPECT_TRUE(linear_volterra_terms(e, W, w).beyond_window);
    const auto g = coefficient_slice(e, w).values;
    double x = 0.0;
    for (std::size_t k = 0; k < W; ++k) x += g[k] * w[k];
    EXPECT_NEAR(total, x, 1e-12 * (1 + std::abs(x))) << trial;
  }
}

TEST(Oracle, LinearVolterraFirstOrder) {
  EquationSpec e;
  e.kernel = Kernel::linear(2.0);
  e.alpha = Sequence::finite({1.0, 0.5});
  const std::vector<double> w{0.3, -1.2, 0.7};
  EXPECT_DOUBLE_EQ(linear_volterra_terms(e, 0, w).value, 2.0 * (0.3 - 0.6));
}

TEST(Oracle, MonteCarloSecondMomentWithinBound) {
  EquationSpec e;
  e.kernel = Kernel::relu();
  e.alpha = Sequence::geometric(0.7);
  e.beta = BetaScheme::sum_form(Sequence::geometric(0.8, 0.5));
  const std::size_t W = 7;
  const auto [fam, g] = build_gfamily(e, 0, W);
  const double bound = convergence_bound(fam, g);
  const InnovationStream stream(5);
  std::vector<double> z(W);
  double s = 0, s2 = 0;
  const int N = 4000;
  for (int r = 0; r < N; ++r) {
    for (std::size_t b = 0; b < W; ++b) z[b] = stream.at(r, fam.T()[b]);
    const double v = nested_eval(fam, g, z);
    s += v * v;
    s2 += v * v * v * v;
  }
  const double mean = s / N;
  const double se = std::sqrt((s2 / N - mean * mean) / N);
  EXPECT_GT(bound, 0.0);
  EXPECT_LE(mean, bound + 3 * se);
}

TEST(Oracle, ConvergenceBoundOfChainFamily) {
  // T = {0, 1}; G constant with envelopes alpha = 1, beta = 0.5:
  // A({1}) = 1, A({0,1}) = 1, A({0}) = 1 + 0.25 A({0,1})
  const auto fam = IndexFamily::all_subsets({0, 1});
  GFamily g;
  g.G = [](SetMask, double) { return 1.0; };
  g.envelope = [](SetMask) { return Envelope{1.0, 0.5}; };
  EXPECT_DOUBLE_EQ(convergence_bound(fam, g), 1.0 + 1.25);
}

TEST(Oracle, OrthogonalityOfVolterraOrders) {
  EquationSpec e;
  e.alpha = Sequence::geometric(0.6);
  e.beta = BetaScheme::column_form(Sequence::geometric(0.6, 0.6));
  const InnovationStream stream(6);
  for (auto [k, l, lag] : {std::tuple{1u, 2u, 0u}, {2u, 3u, 0u}, {1u, 2u, 1u}, {2u, 1u, 2u}}) {
    const auto m = mc_orthogonality_check(e, k, l, 20000, 7, stream, lag);
    EXPECT_LT(std::abs(m.mean), 4 * m.se + 1e-12) << k << " " << l << " " << lag;
  }
  const auto same = mc_orthogonality_check(e, 2, 2, 20000, 7, stream, 0);
  EXPECT_GT(same.mean, 5 * same.se);
}

TEST(Oracle, RandomSpecsAreDeterministicAndValid) {
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto a = random_family_i_spec(s);
    const auto b = random_family_i_spec(s);
    EXPECT_NO_THROW(a.validate());
    EXPECT_EQ(a.mu, b.mu);
    EXPECT_EQ(a.kernel.name(), b.kernel.name());
    EXPECT_EQ(a.alpha.at(3), b.alpha.at(3));
    EXPECT_EQ(a.beta.at(1, 2), b.beta.at(1, 2));
  }
}
