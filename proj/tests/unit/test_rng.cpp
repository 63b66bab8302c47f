#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "projlm/rng.hpp"

using namespace projlm;

// Known-answer vectors for Philox4x32-10.
TEST(Philox, KnownAnswers) {
  using A4 = std::array<std::uint32_t, 4>;
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          {0xffffffffu, 0xffffffffu}),
            (A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          {0xa4093822u, 0x299f31d0u}),
            (A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Stream, PureFunctionOfCoordinates) {
  const InnovationStream a(7), b(7), c(8);
  EXPECT_EQ(a.at(3, -5), b.at(3, -5));
  EXPECT_NE(a.at(3, -5), c.at(3, -5));
  EXPECT_NE(a.at(3, -5), a.at(4, -5));
  std::vector<double> buf(10);
  a.fill(2, -4, buf);
  for (std::size_t i = 0; i < buf.size(); ++i) EXPECT_EQ(buf[i], a.at(2, -4 + static_cast<int>(i)));
}

class StreamMoments : public ::testing::TestWithParam<Distribution> {};

TEST_P(StreamMoments, ZeroMeanUnitVariance) {
  const InnovationStream s(123, GetParam());
  const std::size_t n = 400000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = s.at(0, static_cast<std::int64_t>(i));
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  EXPECT_NEAR(m1, 0.0, 5.0 / std::sqrt(double(n)));
  EXPECT_NEAR(m2, 1.0, 0.02);
  const double k4 = GetParam() == Distribution::Normal       ? 3.0
                    : GetParam() == Distribution::Rademacher ? 1.0
                                                             : 1.8;
  EXPECT_NEAR(m4, k4, 0.05 * k4);
}

INSTANTIATE_TEST_SUITE_P(All, StreamMoments,
                         ::testing::Values(Distribution::Normal, Distribution::Rademacher,
                                           Distribution::Uniform));

TEST(Stream, DistributionNames) {
  for (Distribution d : {Distribution::Normal, Distribution::Rademacher, Distribution::Uniform}) {
    EXPECT_EQ(distribution_from_string(to_string(d)), d);
  }
  EXPECT_THROW((void)distribution_from_string("cauchy"), std::invalid_argument);
}
