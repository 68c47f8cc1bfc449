#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "plom/types.hpp"

namespace plom {

// Philox4x32-10 counter-based generator.  Each (seed, stream) pair is an
// independent stream: the seed is the key, the stream id occupies the upper
// 64 bits of the 128-bit counter and the block index the lower 64.  Streams
// never overlap, and adding streams does not perturb existing ones.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  std::uint64_t next_u64() {
    if (word_ >= 4) {
      block_ = run_block(block_index_++);
      word_ = 0;
    }
    std::uint64_t lo = block_[word_];
    std::uint64_t hi = block_[word_ + 1];
    word_ += 2;
    return lo | (hi << 32);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  // Avoids std::normal_distribution, whose output is implementation defined.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u = 1.0 - uniform();  // (0, 1], keeps log() finite
    double r = std::sqrt(-2.0 * std::log(u));
    double t = 6.283185307179586476925286766559 * uniform();
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  // Column-major fill, matching Eigen's default storage order.
  void fill_gaussian(Matrix& m) {
    double* p = m.data();
    const Index n = m.size();
    for (Index i = 0; i < n; ++i) p[i] = gaussian();
  }

  std::uint64_t stream() const { return stream_; }

 private:
  using Block = std::array<std::uint32_t, 4>;

  static std::uint32_t mul_hi(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>(
        (static_cast<std::uint64_t>(a) * b) >> 32);
  }

  Block run_block(std::uint64_t index) const {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;

    Block c{static_cast<std::uint32_t>(index),
            static_cast<std::uint32_t>(index >> 32),
            static_cast<std::uint32_t>(stream_),
            static_cast<std::uint32_t>(stream_ >> 32)};
    std::uint32_t k0 = key_[0];
    std::uint32_t k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0 = mul_hi(kM0, c[0]);
      std::uint32_t lo0 = kM0 * c[0];
      std::uint32_t hi1 = mul_hi(kM1, c[2]);
      std::uint32_t lo1 = kM1 * c[2];
      c = Block{hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
      k0 += kW0;
      k1 += kW1;
    }
    return c;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Block block_{};
  int word_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace plom
