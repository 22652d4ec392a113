#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace alo {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The stream is a pure function of (seed, stream id, draw index), so any
/// reimplementation of Philox4x32-10 reproduces the generated datasets:
/// block b of stream s under seed k is philox(counter = {b_lo, b_hi, s, 0},
/// key = {k_lo, k_hi}), and 32-bit words are consumed in order.
class Philox {
public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox(std::uint64_t seed, std::uint32_t stream = 0);

  static Block round10(Block counter, Key key);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform();
  /// Standard normal via Box-Muller; both variates of a pair are used.
  double normal();
  /// Uniform integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound);

private:
  void refill();

  Key key_;
  std::uint32_t stream_;
  std::uint64_t block_index_ = 0;
  Block buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> random_permutation(std::size_t n, Philox& rng);

}  // namespace alo
