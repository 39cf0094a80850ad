#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace minitrain {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// xoshiro256++ with a fixed Box-Muller gaussian. std::mt19937 plus the
// standard distributions are not bitwise portable across library
// implementations, and every determinism contract here is bitwise.
class Rng {
 public:
  explicit Rng(uint64_t seed) : root_seed_(seed) {
    uint64_t sm = seed;
    for (auto& s : state_) s = splitmix64(sm);
  }

  // Independent stream keyed by name off the root seed, not the evolved
  // state, so adding parameters never perturbs existing ones.
  Rng fork(std::string_view name) const {
    return Rng(root_seed_ ^ fnv1a64(name));
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  uint64_t uniform_below(uint64_t n) { return next_u64() % n; }

  // One gaussian per pair of uniforms; no cached second value, so streams
  // stay position-independent.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t root_seed_;
  uint64_t state_[4];
};

}  // namespace minitrain
