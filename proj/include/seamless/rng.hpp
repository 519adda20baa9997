#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace seamless {

// Philox4x32-10 (Salmon et al., SC'11). Stateless: the output block is a
// pure function of (counter, key).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
           static_cast<std::uint32_t>(p0)};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

/// Random stream for one replicate, keyed by (seed, replicate index, stream
/// tag). Draws never depend on how replicates are split across threads.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t index, std::uint32_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        index_lo_(static_cast<std::uint32_t>(index)),
        index_hi_(static_cast<std::uint32_t>(index >> 32)),
        stream_(stream) {}

  /// Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform() {
    if (cached_uniforms_ == 0) refill();
    return buffer_[--cached_uniforms_];
  }

  double normal() {
    if (has_spare_normal_) {
      has_spare_normal_ = false;
      return spare_normal_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_normal_ = radius * std::sin(angle);
    has_spare_normal_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform integer in [0, bound), bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(bound)) % bound;
  }

 private:
  void refill() {
    const auto out = philox4x32({index_lo_, index_hi_, block_++, stream_}, key_);
    const std::uint64_t a = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    const std::uint64_t b = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    constexpr double kScale = 0x1.0p-53;
    buffer_[0] = (static_cast<double>(b >> 11) + 0.5) * kScale;
    buffer_[1] = (static_cast<double>(a >> 11) + 0.5) * kScale;
    cached_uniforms_ = 2;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t index_lo_;
  std::uint32_t index_hi_;
  std::uint32_t stream_;
  std::uint32_t block_ = 0;
  std::array<double, 2> buffer_{};
  int cached_uniforms_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_normal_ = false;
};

}  // namespace seamless
