#pragma once

/// \file
/// Counter-based innovations: the value at (seed, replicate, time index) is a
/// pure function of those three numbers, so scheduling cannot change it.

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace projlm {

/// Philox4x32 with 10 rounds.
[[nodiscard]] std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                         std::array<std::uint32_t, 2> key) noexcept;

enum class Distribution { Normal, Rademacher, Uniform };

[[nodiscard]] std::string to_string(Distribution d);
[[nodiscard]] Distribution distribution_from_string(const std::string& s);

/// i.i.d. innovations with mean 0 and variance 1.
///
/// Counter layout: (index low, index high, replicate low, replicate high),
/// key = seed. Normals use Box-Muller on two 53-bit uniforms (one normal per
/// counter); Rademacher uses one bit; Uniform is sqrt(3) (2u - 1).
class InnovationStream {
 public:
  explicit InnovationStream(std::uint64_t seed, Distribution dist = Distribution::Normal)
      : seed_(seed), dist_(dist) {}

  [[nodiscard]] double at(std::uint64_t replicate, std::int64_t index) const noexcept;
  /// out[i] = at(replicate, first + i)
  void fill(std::uint64_t replicate, std::int64_t first, std::span<double> out) const noexcept;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] Distribution distribution() const noexcept { return dist_; }

 private:
  std::uint64_t seed_;
  Distribution dist_;
};

}  // namespace projlm
