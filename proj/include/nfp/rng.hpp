#pragma once

#include <cmath>
#include <cstdint>

namespace nfp {

// splitmix64 finalizer. Used both as a stream generator and as a stateless
// mixing function for counter-based seed derivation, so identical
// (seed, counter) pairs produce identical values on every platform.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derive an independent stream seed from (master seed, stream counter).
inline uint64_t derive_seed(uint64_t master, uint64_t counter) {
  return mix64(mix64(master) ^ mix64(counter * 0xd6e8feb86659fd93ull + 1));
}

// Small deterministic generator. Not a stdlib engine on purpose: the
// stdlib distributions are implementation-defined, and dataset generation
// has to be bit-reproducible across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint32_t next_u32() { return static_cast<uint32_t>(next_u64() >> 32); }

  // Uniform in [0, 1) with 24 bits of mantissa, exact in float.
  float uniform() { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }

  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n) { return next_u64() % n; }

  bool coin() { return (next_u64() & 1ull) != 0; }

  // Box-Muller on our own uniforms, again for portability.
  float gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    float u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 1e-12f);
    u2 = uniform();
    float r = std::sqrt(-2.0f * std::log(u1));
    float a = 6.2831853071795864769f * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  uint64_t state_;
  float spare_ = 0.0f;
  bool have_spare_ = false;
};

}  // namespace nfp
