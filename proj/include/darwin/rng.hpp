#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace darwin {

// Stafford mix13 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

// Deterministic stream RNG. A stream is named by (master seed, path of
// indices); the same name yields the same sequence on every run and for any
// thread schedule, so Monte Carlo work can be farmed out by stream id and
// reduced in fixed order. State is xoshiro256++ filled from a splitmix64
// walk over a hash of the stream name.
class Rng {
 public:
  explicit Rng(std::uint64_t master, std::initializer_list<std::uint64_t> stream = {})
      : Rng(master, stream.begin(), stream.end()) {}

  Rng(std::uint64_t master, const std::vector<std::uint64_t>& stream)
      : Rng(master, stream.data(), stream.data() + stream.size()) {}

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on the open interval (0,1): (k + 1/2) * 2^-53 for k in [0, 2^53).
  // Never returns 0 or 1, so logs and quantile transforms are safe.
  double next_open01() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  template <typename It>
  Rng(std::uint64_t master, It first, It last) {
    std::uint64_t key = mix64(master ^ 0x9E3779B97F4A7C15ULL);
    for (It it = first; it != last; ++it) {
      key = mix64(key ^ (*it + 0x9E3779B97F4A7C15ULL + (key << 6) + (key >> 2)));
    }
    std::uint64_t walk = key;
    for (auto& word : s_) {
      walk += 0x9E3779B97F4A7C15ULL;
      word = mix64(walk);
    }
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // xoshiro state must be nonzero
  }

  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

}  // namespace darwin
