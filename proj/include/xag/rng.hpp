#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace xag {

/// Seeded random stream. Uniform and gaussian draws are derived from raw
/// mt19937_64 output (53-bit scaling, Box-Muller) so a given seed produces
/// the same sequence on every standard library.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal. Consumes exactly two uniform draws.
  double gaussian();

  /// Uniform integer in [lo, hi], inclusive. Requires lo <= hi.
  int uniform_int(int lo, int hi);

  std::string save_state() const;
  void restore_state(const std::string& state);

private:
  std::mt19937_64 engine_;
};

/// Derives an independent sub-seed for a named stream (splitmix64 step).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace xag
