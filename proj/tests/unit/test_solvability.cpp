#include <gtest/gtest.h>

#include <cmath>

#include "projlm/oracle.hpp"
#include "projlm/solvability.hpp"

using namespace projlm;

namespace {

// Independent backward recursion for K_Q truncated at total lag L:
// c^2 sum_i alpha_i^2 F(i), F(i) = 1 + c^2 sum_j beta_{i,j}^2 F(i + j).
double kq_reference(const EquationSpec& s, std::size_t L) {
  const double c2 = std::pow(*s.kernel.constants().c_q, 2);
  std::vector<double> F(L + 1, 1.0);
  for (std::size_t i = L + 1; i-- > 0;) {
    double acc = 0.0;
    for (std::size_t j = 1; i + j <= L; ++j) acc += std::pow(s.beta.at(i, j), 2) * F[i + j];
    F[i] = 1.0 + c2 * acc;
  }
  double total = 0.0;
  for (std::size_t i = 0; i <= L; ++i) total += std::pow(s.alpha.at(i), 2) * F[i];
  return c2 * total;
}

EquationSpec column_spec(double b2) {
  // beta_j = s 0.9^j with sum_j beta_j^2 = b2
  const double s = std::sqrt(b2 * (1 - 0.81) / 0.81);
  EquationSpec e;
  e.alpha = Sequence::geometric(0.5);
  e.beta = BetaScheme::column_form(Sequence::geometric(0.9, s));
  return e;
}

}  // namespace

TEST(Kq, ColumnFormClosedForm) {
  const auto rep = compute_kq(column_spec(0.9));
  ASSERT_TRUE(rep.kq);
  EXPECT_EQ(rep.exists, Verdict::Yes);
  EXPECT_EQ(rep.method, SeriesMethod::ClosedForm);
  // A^2 / (1 - B^2) = (4/3) / 0.1
  EXPECT_NEAR(rep.kq->value, 40.0 / 3.0, 1e-12);
  EXPECT_NEAR(rep.a2, 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(*rep.b2, 0.9, 1e-14);
}

TEST(Kq, ColumnFormClosedFormAgreesWithTruncatedSeries) {
  const EquationSpec e = column_spec(0.5);
  const auto closed = compute_kq(e);
  const auto series = kq_truncated_series(e);
  EXPECT_NE(series.status, SeriesStatus::Diverged);
  EXPECT_NEAR(closed.kq->value, series.value, 1e-8);
  EXPECT_NEAR(series.value, kq_reference(e, 2000), 1e-8);
}

TEST(Kq, NoSolutionAboveUnitEnergy) {
  const auto rep = compute_kq(column_spec(1.2));
  EXPECT_EQ(rep.exists, Verdict::No);
}

TEST(Kq, EmptyAlphaGivesZero) {
  EquationSpec e = column_spec(5.0);
  e.alpha = Sequence::zero();
  const auto rep = compute_kq(e);
  EXPECT_EQ(rep.kq->value, 0.0);
  EXPECT_EQ(rep.exists, Verdict::Yes);
}

TEST(Kq, SumFormMatchesReferenceRecursion) {
  EquationSpec e;
  e.kernel = Kernel::relu();
  e.alpha = Sequence::geometric(0.7);
  e.beta = BetaScheme::sum_form(Sequence::geometric(0.8, 0.6));
  const auto rep = compute_kq(e);
  ASSERT_TRUE(rep.kq);
  EXPECT_EQ(rep.exists, Verdict::Yes);
  EXPECT_NEAR(rep.kq->value, kq_reference(e, 600), 1e-9);
  ASSERT_TRUE(rep.kq_sum_form_bound);
  EXPECT_GE(rep.kq_sum_form_bound->value, rep.kq->value);
}

TEST(Kq, TableMatchesReferenceRecursion) {
  EquationSpec e;
  e.alpha = Sequence::finite({1.0, -0.5, 0.25, 0.1});
  e.beta = BetaScheme::table({{0.3, -0.2, 0.1}, {0.5, 0.4}, {0.2}});
  const auto rep = compute_kq(e);
  EXPECT_NEAR(rep.kq->value, kq_reference(e, 10), 1e-13);
}

TEST(Kq, FiniteSupportWithoutCqIsYes) {
  EquationSpec e;
  e.kernel = Kernel::indicator(0.0, 1.0);
  e.lag_support = 4;
  e.alpha = Sequence::geometric(0.5);
  const auto rep = check_spec(e);
  EXPECT_EQ(rep.exists, Verdict::Yes);
}

TEST(Kq, ConstantOneBetaDiverges) {
  EquationSpec e;
  e.alpha = Sequence::geometric(0.5);
  e.beta = BetaScheme::constant_one();
  EXPECT_EQ(compute_kq(e).exists, Verdict::No);
}

TEST(KqP, SecondMomentIdentityOnRandomSpecs) {
  MomentParams m;  // p = 2, mu_2 = 1, C_2 = 1
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const EquationSpec e = random_family_i_spec(1000 + seed);
    const auto kq = compute_kq(e);
    const auto kq2 = compute_kq_p(e, m);
    ASSERT_TRUE(kq.kq) << seed;
    EXPECT_EQ(kq.kq->status, kq2.status) << seed;
    if (kq2.convergent()) EXPECT_EQ(kq.kq->value, kq2.value) << seed;
  }
}

TEST(KqP, ScalesAsDocumented) {
  const EquationSpec e = column_spec(0.1);
  MomentParams m;
  m.p = 4.0;
  m.mu_p = 3.0;
  m.c_p = 2.0;
  const double a2 = 4.0 / 3.0;
  const double c2 = std::pow(m.c_p * m.mu_p, 2.0 / m.p);
  const double expected = std::pow(m.c_p, 2.0 / m.p) * c2 * a2 / (1.0 - c2 * 0.1);
  EXPECT_NEAR(compute_kq_p(e, m).value, expected, 1e-12);
}

TEST(Moments, GaussianAbsoluteMoments) {
  EXPECT_NEAR(gaussian_abs_moment(2.0), 1.0, 1e-14);
  EXPECT_NEAR(gaussian_abs_moment(4.0), 3.0, 1e-13);
  EXPECT_NEAR(gaussian_abs_moment(1.0), std::sqrt(2.0 / M_PI), 1e-14);
  EXPECT_EQ(default_rosenthal_constant(2.0), 1.0);
  MomentParams bad;
  bad.p = 1.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Omega2, ColumnFormClosedFormMatchesTruncated) {
  EquationSpec e;
  e.alpha = Sequence::geometric(0.5);
  e.beta = BetaScheme::column_form(Sequence::geometric(0.4, 0.5));
  // sum |alpha| / (1 - sum_j |beta_j|) with sum_j 0.5 * 0.4^j = 1/3
  const auto r = compute_omega2_bound(e);
  EXPECT_NEAR(r.value, 2.0 / (1.0 - 1.0 / 3.0), 1e-10);
}

TEST(TildeKq, EnvelopeBoundsSeries) {
  EquationSpec e;
  e.family = Family::FamilyII;
  e.kernel = Kernel::affine(1.0, 0.5);
  e.alpha = Sequence::geometric(0.5);
  e.beta = BetaScheme::column_form(Sequence::geometric(0.5, 0.5));
  const auto rep = compute_tilde_kq(e);
  ASSERT_TRUE(rep.tilde_kq);
  EXPECT_EQ(rep.exists, Verdict::Yes);
  EXPECT_GT(rep.tilde_kq->value, 2.0 * (4.0 / 3.0));
  ASSERT_TRUE(rep.tilde_kq_envelope);
  EXPECT_LE(rep.tilde_kq->value, rep.tilde_kq_envelope->value + 1e-12);
  EXPECT_THROW((void)compute_kq(e), std::invalid_argument);
}

TEST(Larch, ClosedFormVariance) {
  const auto rep = larch_check(1.0, Sequence::finite({0.6}));
  EXPECT_TRUE(rep.exists);
  EXPECT_NEAR(rep.b2, 0.36, 1e-15);
  ASSERT_TRUE(rep.variance);
  EXPECT_NEAR(*rep.variance, 0.5625, 1e-14);
}

TEST(Larch, VerdictFlipsAtUnitB) {
  for (double b : {0.5, 0.9, 0.99, 0.999999, 1.0, 1.000001, 1.2}) {
    const auto rep = larch_check(1.0, Sequence::finite({b}));
    EXPECT_EQ(rep.exists, b < 1.0) << b;
    EXPECT_EQ(rep.variance.has_value(), b < 1.0) << b;
  }
}

TEST(Larch, MomentConditions) {
  const auto rep = larch_check(1.0, Sequence::finite({0.3}), MomentParams::gaussian(4.0));
  ASSERT_TRUE(rep.p_condition_holds);
  ASSERT_TRUE(rep.old_condition_holds);
  // (2^4 - 5)^{1/2} 3^{1/4} 0.3 = 1.318... fails; the p-condition uses C_4.
  EXPECT_FALSE(*rep.old_condition_holds);
}

TEST(Verdict, Mapping) {
  SeriesResult r;
  EXPECT_EQ(verdict_from(r), Verdict::Yes);
  r.status = SeriesStatus::Estimated;
  r.remainder = 0.1;
  EXPECT_EQ(verdict_from(r), Verdict::Yes);
  r.remainder = INFINITY;
  EXPECT_EQ(verdict_from(r), Verdict::Undetermined);
  EXPECT_EQ(verdict_from(SeriesResult::diverged()), Verdict::No);
}

TEST(RowCheck, ColumnFormRowSums) {
  const auto rc = limsup_row_check(column_spec(0.9).beta, 1.0, 50);
  EXPECT_EQ(rc.verdict, Verdict::Yes);
  EXPECT_NEAR(rc.sup_row_sum, 0.9, 1e-12);
  const auto bad = limsup_row_check(column_spec(1.1).beta, 1.0, 50);
  EXPECT_EQ(bad.verdict, Verdict::No);
}

TEST(Check, TvArfimaUsesDominatingArfima) {
  EquationSpec e;
  e.family = Family::TvArfima;
  e.tv = TvArfimaParams{Kernel::affine(0.3, 0.0), 0.4};
  const auto rep = check_spec(e);
  EXPECT_EQ(rep.exists, Verdict::Yes);
  EXPECT_NEAR(rep.kq->value, std::tgamma(0.2) / std::pow(std::tgamma(0.6), 2), 1e-10);
}
