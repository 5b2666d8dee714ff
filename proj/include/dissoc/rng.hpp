#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "dissoc/types.hpp"

namespace dissoc {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// The 128-bit counter is split into a 64-bit draw counter and a 64-bit stream
// id, the key is the master seed.  Distinct (seed, stream) pairs give
// independent sequences, and a given pair always replays the same sequence
// regardless of which thread consumes it — that is the whole point: ensemble
// results depend only on (seed, trajectory index), never on scheduling.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  std::uint32_t next_u32() {
    if (avail_ == 0) refill();
    return block_[4 - avail_--];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform in [0, 1) with 53 random bits.
  Real uniform() { return static_cast<Real>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the partner sample is cached.
  Real gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const Real r = std::sqrt(-2.0 * std::log(1.0 - uniform()));
    const Real theta = 2.0 * std::numbers::pi_v<Real> * uniform();
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Complex normal with E|z|^2 = 1 (independent re/im, variance 1/2 each).
  Complex gaussian_complex() {
    const Real r = std::sqrt(-std::log(1.0 - uniform()));
    const Real theta = 2.0 * std::numbers::pi_v<Real> * uniform();
    return Complex(r * std::cos(theta), r * std::sin(theta));
  }

  void fill_gaussian(RealArray& out) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = gaussian();
  }

 private:
  static std::uint32_t mulhi(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) >> 32);
  }

  void refill() {
    std::uint32_t c0 = static_cast<std::uint32_t>(draw_);
    std::uint32_t c1 = static_cast<std::uint32_t>(draw_ >> 32);
    std::uint32_t c2 = stream_lo_;
    std::uint32_t c3 = stream_hi_;
    std::uint32_t k0 = key0_;
    std::uint32_t k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      const std::uint32_t lo0 = kMultA * c0;
      const std::uint32_t hi0 = mulhi(kMultA, c0);
      const std::uint32_t lo1 = kMultB * c2;
      const std::uint32_t hi1 = mulhi(kMultB, c2);
      c0 = hi1 ^ c1 ^ k0;
      c1 = lo1;
      c2 = hi0 ^ c3 ^ k1;
      c3 = lo0;
      k0 += kWeylA;
      k1 += kWeylB;
    }
    block_[0] = c0;
    block_[1] = c1;
    block_[2] = c2;
    block_[3] = c3;
    ++draw_;
    avail_ = 4;
  }

  static constexpr std::uint32_t kMultA = 0xD2511F53u;
  static constexpr std::uint32_t kMultB = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
  static constexpr std::uint32_t kWeylB = 0xBB67AE85u;

  std::uint32_t key0_, key1_;
  std::uint32_t stream_lo_, stream_hi_;
  std::uint64_t draw_ = 0;
  std::uint32_t block_[4] = {0, 0, 0, 0};
  int avail_ = 0;
  Real spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace dissoc
