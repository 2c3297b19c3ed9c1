#pragma once

#include <cstdint>
#include <vector>

namespace advfilter {

// SplitMix64. Every random draw in the toolkit flows through this generator
// so that a (seed, input) pair fixes all outputs bitwise, independent of
// platform and thread count.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1): zero draws are rejected so callers can form open
  // intervals like (min, max) without degenerate endpoints.
  double next_open_unit() {
    for (;;) {
      double u = next_unit();
      if (u > 0.0) return u;
    }
  }

  // Uniform in [-a, a].
  double next_symmetric(double a) { return (2.0 * next_unit() - 1.0) * a; }

  // Uniform index in [0, n). Plain modulo; the bias is immaterial for the
  // small n used here and the rule is trivially portable.
  std::size_t next_index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

  // n decorrelated substream seeds, e.g. one per isolation tree, drawn up
  // front so parallel consumers stay schedule-independent.
  static std::vector<std::uint64_t> substream_seeds(std::uint64_t seed, std::size_t n) {
    SplitMix64 master(seed);
    std::vector<std::uint64_t> seeds(n);
    for (auto& s : seeds) s = master.next();
    return seeds;
  }

 private:
  std::uint64_t state_;
};

}  // namespace advfilter
