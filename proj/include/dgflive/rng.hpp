#pragma once

#include <cstdint>
#include <random>

namespace dgflive {

// Deterministic random stream. Bounded draws avoid std::*_distribution on
// purpose: their output is implementation-defined, and campaign replays must
// be byte-identical across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next() { return gen_(); }

  uint64_t below(uint64_t n) { return gen_() % n; }

  // Uniform in [0, 1) with 53 bits of precision.
  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return unit() < p; }

 private:
  std::mt19937_64 gen_;
};

inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace dgflive
