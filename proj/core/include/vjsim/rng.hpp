#pragma once
#include <cstdint>

namespace vjsim {

/// SplitMix64 generator (public-domain reference algorithm).
/// The state advances by a fixed odd constant per draw, so jumping ahead n
/// draws is a single multiply-add and every (seed, draw index) pair is
/// reproducible across platforms and compilers.
struct SplitMix64 {
  std::uint64_t state = 0x853c49e6748fea9bULL;

  SplitMix64() = default;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Skip ahead n draws without generating them.
  void jump(std::uint64_t n) { state += n * 0x9e3779b97f4a7c15ULL; }
};

/// Seed for replicate `run_index`, a pure function of the master seed so
/// results cannot depend on scheduling order or thread count.
inline std::uint64_t sub_seed(std::uint64_t master_seed, std::uint64_t run_index) {
  SplitMix64 g(master_seed ^ (0x9e3779b97f4a7c15ULL * (run_index + 1)));
  return g.next();
}

}  // namespace vjsim
