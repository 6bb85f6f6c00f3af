#pragma once

#include <cstdint>

namespace pergrad {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen because the whole algorithm is
// three lines, so any other implementation can reproduce a seed bit for bit.
// Doubles take the top 53 bits: u = (x >> 11) * 2^-53, which lies in [0, 1).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  // Integer in [lo, hi]. Modulo bias is irrelevant at the ranges used here.
  std::uint64_t range(std::uint64_t lo, std::uint64_t hi) {
    return lo + next() % (hi - lo + 1);
  }

 private:
  std::uint64_t state_;
};

// Derives an independent stream seed from (seed, salt).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  SplitMix64 g(seed ^ (salt * 0xD1B54A32D192ED03ULL));
  return g.next();
}

}  // namespace pergrad
