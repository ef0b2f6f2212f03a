#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace extinctia {

/// Philox4x32-10 counter-based generator.
///
/// Key = 64-bit seed, counter = (64-bit stream id, 64-bit block index), so
/// `CounterRng(seed, r)` for distinct r are disjoint streams that never share
/// state. Satisfies UniformRandomBitGenerator with 64-bit output.
class CounterRng {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Raw Philox4x32-10 bijection.
  static Block philox(Block counter, std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Block buffer_{};
  int used_ = 4;
};

}  // namespace extinctia
