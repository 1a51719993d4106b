#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace centroidkit {

/// Purpose tags used when deriving independent seeds from one user seed.
enum class StreamTag : std::uint64_t {
  samples = 1,
  bootstrap = 2,
  saa = 3,
  outer = 4,
  candidates = 5,
  starts = 6,
  volume = 7,
  experiment = 8,
  covariance = 9,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a child seed from (seed, tag, index). Distinct inputs give
/// statistically independent children.
std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) noexcept;

/// Philox4x32-10 counter-based generator.
///
/// A generator is identified by (seed, stream); its output is a pure function
/// of (seed, stream, draw position), so any row or task can be regenerated
/// without replaying other streams.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1]; safe as a log argument.
  double uniform_pos() noexcept;
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;
  /// +1 or -1 with equal probability.
  double sign() noexcept;
  double normal() noexcept;
  /// Exp(1).
  double exponential() noexcept;
  /// Gamma(shape, 1) by Marsaglia-Tsang.
  double gamma(double shape) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int pos_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace centroidkit
