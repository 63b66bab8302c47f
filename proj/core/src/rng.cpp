#include "projlm/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace projlm {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

constexpr double kTwoPow53 = 9007199254740992.0;

inline std::uint64_t bits53(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 21) ^ (b >> 11);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::string to_string(Distribution d) {
  switch (d) {
    case Distribution::Normal: return "normal";
    case Distribution::Rademacher: return "rademacher";
    case Distribution::Uniform: return "uniform";
  }
  return "normal";
}

Distribution distribution_from_string(const std::string& s) {
  if (s == "normal") return Distribution::Normal;
  if (s == "rademacher") return Distribution::Rademacher;
  if (s == "uniform") return Distribution::Uniform;
  throw std::invalid_argument("unknown innovation distribution '" + s + "'");
}

double InnovationStream::at(std::uint64_t replicate, std::int64_t index) const noexcept {
  const auto idx = static_cast<std::uint64_t>(index);
  const auto w = philox4x32_10(
      {static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32),
       static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(replicate >> 32)},
      {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
  switch (dist_) {
    case Distribution::Rademacher: return (w[0] & 1u) ? 1.0 : -1.0;
    case Distribution::Uniform: {
      const double u = (static_cast<double>(bits53(w[0], w[1])) + 0.5) / kTwoPow53;
      return std::sqrt(3.0) * (2.0 * u - 1.0);
    }
    case Distribution::Normal:
    default: {
      // u1 in (0, 1], u2 in [0, 1)
      const double u1 = (static_cast<double>(bits53(w[0], w[1])) + 1.0) / kTwoPow53;
      const double u2 = static_cast<double>(bits53(w[2], w[3])) / kTwoPow53;
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
  }
}

void InnovationStream::fill(std::uint64_t replicate, std::int64_t first,
                            std::span<double> out) const noexcept {
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = at(replicate, first + static_cast<std::int64_t>(i));
  }
}

}  // namespace projlm
