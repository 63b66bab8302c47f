#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "projlm/model.hpp"

using namespace projlm;

TEST(Kernel, Evaluates) {
  EXPECT_DOUBLE_EQ(Kernel::linear(2.0)(1.5), 3.0);
  EXPECT_DOUBLE_EQ(Kernel::relu()(-1.0), 0.0);
  EXPECT_DOUBLE_EQ(Kernel::relu()(2.5), 2.5);
  const Kernel tri = Kernel::triangle();
  EXPECT_DOUBLE_EQ(tri(-0.5), 0.0);
  EXPECT_DOUBLE_EQ(tri(0.5), 0.5);
  EXPECT_DOUBLE_EQ(tri(1.5), 0.5);
  EXPECT_DOUBLE_EQ(tri(2.5), 0.0);
  EXPECT_DOUBLE_EQ(Kernel::affine(1.0, -2.0)(3.0), -5.0);
  const Kernel st = Kernel::step({0.0, 1.0}, {-1.0, 0.5, 2.0});
  EXPECT_DOUBLE_EQ(st(-3.0), -1.0);
  EXPECT_DOUBLE_EQ(st(0.0), 0.5);
  EXPECT_DOUBLE_EQ(st(1.0), 2.0);
  const Kernel ind = Kernel::indicator(0.0, 1.0);
  EXPECT_DOUBLE_EQ(ind(0.0), 1.0);
  EXPECT_DOUBLE_EQ(ind(1.0), 0.0);
}

TEST(Kernel, RejectsNonFiniteInput) {
  EXPECT_THROW((void)Kernel::relu()(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
}

TEST(Kernel, SimulationKernelsSatisfyDeclaredBounds) {
  for (const Kernel& k : {Kernel::linear(), Kernel::relu(), Kernel::triangle()}) {
    ASSERT_TRUE(k.constants().c_q.has_value());
    EXPECT_DOUBLE_EQ(*k.constants().c_q, 1.0) << k.name();
    EXPECT_DOUBLE_EQ(*k.constants().c_l, 1.0) << k.name();
    const KernelCheck c = verify_kernel_constants(k);
    EXPECT_TRUE(c.dominating_ok) << k.name();
    EXPECT_TRUE(c.lipschitz_ok) << k.name();
    EXPECT_TRUE(c.affine_bound_ok) << k.name();
  }
}

TEST(Kernel, AffineBoundForBoundedKernels) {
  const Kernel st = Kernel::step({0.0}, {-1.0, 1.0});
  const KernelCheck c = verify_kernel_constants(st);
  EXPECT_TRUE(c.affine_bound_ok);
  EXPECT_FALSE(st.constants().c_q.has_value());
}

TEST(Kernel, DetectsFalseDeclaredConstants) {
  KernelConstants wrong;
  wrong.c_q = 0.5;
  wrong.c_l = 0.5;
  const KernelCheck c = verify_kernel_constants(Kernel(ReluKernel{}, wrong));
  EXPECT_FALSE(c.dominating_ok);
  EXPECT_FALSE(c.lipschitz_ok);
  EXPECT_GT(c.worst_dominating_excess, 0.0);
}

TEST(Kernel, Sup) {
  EXPECT_EQ(kernel_sup(Kernel::triangle()), 1.0);
  EXPECT_EQ(kernel_sup(Kernel::step({0.0}, {-3.0, 2.0})), 3.0);
  EXPECT_TRUE(std::isinf(kernel_sup(Kernel::relu())));
  EXPECT_EQ(kernel_sup(Kernel::linear(0.0)), 0.0);
}

TEST(Sequence, ArfimaMatchesGammaRatio) {
  const Sequence s = Sequence::arfima(0.4);
  for (std::size_t j = 0; j <= 150; ++j) {
    const double ref =
        std::exp(std::lgamma(0.4 + j) - std::lgamma(0.4) - std::lgamma(j + 1.0));
    EXPECT_NEAR(s.at(j), ref, 1e-12 * ref) << j;
  }
  const auto w = arfima_weights(0.4, 20);
  for (std::size_t j = 0; j < 20; ++j) EXPECT_EQ(w[j], s.at(j));
}

TEST(Sequence, GeometricAndFinite) {
  const Sequence g = Sequence::geometric(0.5, 2.0);
  EXPECT_DOUBLE_EQ(g.at(3), 0.25);
  const auto m = g.materialize(4);
  ASSERT_EQ(m.size(), 4u);
  EXPECT_DOUBLE_EQ(m[3], 0.25);

  const Sequence f = Sequence::finite({1.0, 2.0});
  EXPECT_EQ(f.at(0), 1.0);
  EXPECT_EQ(f.at(1), 2.0);
  EXPECT_EQ(f.at(2), 0.0);
  EXPECT_EQ(*f.support(), 2u);

  const Sequence one = Sequence::finite({1.0, 2.0}, SeqBase::One);
  EXPECT_EQ(one.at(0), 0.0);
  EXPECT_EQ(one.at(1), 1.0);
  EXPECT_EQ(one.at(2), 2.0);
  EXPECT_TRUE(Sequence::zero().is_zero());
}

TEST(Beta, Shapes) {
  const Sequence s = Sequence::geometric(0.5);
  const BetaScheme sum = BetaScheme::sum_form(s);
  const BetaScheme col = BetaScheme::column_form(s);
  EXPECT_DOUBLE_EQ(sum.at(2, 3), std::pow(0.5, 5));
  EXPECT_DOUBLE_EQ(col.at(2, 3), std::pow(0.5, 3));
  EXPECT_EQ(BetaScheme::constant_one().at(7, 2), 1.0);
  EXPECT_EQ(BetaScheme::zero().at(1, 1), 0.0);
  EXPECT_THROW((void)col.at(0, 0), std::invalid_argument);

  const BetaScheme tab = BetaScheme::table({{1.0, 2.0}, {3.0}});
  EXPECT_EQ(tab.at(0, 1), 1.0);
  EXPECT_EQ(tab.at(0, 2), 2.0);
  EXPECT_EQ(tab.at(1, 1), 3.0);
  EXPECT_EQ(tab.at(2, 1), 0.0);

  const BetaScheme prod = BetaScheme::product(Sequence::geometric(0.5), Sequence::geometric(0.25));
  EXPECT_DOUBLE_EQ(prod.at(1, 2), 0.5 * 0.0625);
}

TEST(Beta, FiniteOneIndexListsAreOneBased) {
  const BetaScheme col = BetaScheme::column_form(Sequence::finite({0.6, 0.2}));
  EXPECT_EQ(col.at(0, 1), 0.6);
  EXPECT_EQ(col.at(5, 2), 0.2);
  EXPECT_EQ(col.at(5, 3), 0.0);
}

TEST(Beta, BarIsMaxAlongAntiDiagonal) {
  const BetaScheme tab = BetaScheme::table({{1.0, -4.0}, {3.0}});
  EXPECT_EQ(tab.bar(2), 4.0);
  EXPECT_EQ(tab.bar(1), 1.0);
}

TEST(Beta, FiniteLagRejectsEntriesBeyondP) {
  EXPECT_NO_THROW((void)BetaScheme::finite_lag(2, {{1.0, 1.0}, {1.0}}));
  EXPECT_THROW((void)BetaScheme::finite_lag(1, {{1.0, 1.0}}), std::invalid_argument);
}

TEST(Spec, LarchNormalization) {
  const EquationSpec l = make_larch_spec(2.0, Sequence::finite({0.6, 0.1}));
  const EquationSpec f = normalize(l);
  EXPECT_EQ(f.family, Family::FamilyI);
  EXPECT_EQ(f.mu, 2.0);
  EXPECT_EQ(f.kernel(3.0), 3.0);
  EXPECT_EQ(f.alpha.at(0), 0.0);
  EXPECT_DOUBLE_EQ(f.alpha.at(1), 1.2);
  EXPECT_DOUBLE_EQ(f.alpha.at(2), 0.2);
  EXPECT_EQ(f.beta.at(4, 1), 0.6);
  EXPECT_EQ(f.beta.at(0, 2), 0.1);
}

TEST(Spec, ValidationRequiresDeclaredConstants) {
  EquationSpec s;
  s.kernel = Kernel::step({0.0}, {0.0, 1.0});
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.lag_support = 3;
  EXPECT_NO_THROW(s.validate());

  EquationSpec tv;
  tv.family = Family::TvArfima;
  tv.tv = TvArfimaParams{Kernel::affine(0.45, 0.0), 0.4};
  EXPECT_THROW(tv.validate(), std::invalid_argument);
}

TEST(Spec, FamilyNamesRoundTrip) {
  for (Family f : {Family::FamilyI, Family::FamilyII, Family::Lagged, Family::TvArfima,
                   Family::Larch}) {
    EXPECT_EQ(family_from_string(to_string(f)), f);
  }
  EXPECT_THROW((void)family_from_string("nope"), std::invalid_argument);
}
