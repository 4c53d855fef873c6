#pragma once

#include "gnssfgo/types.hpp"

#include <cstdint>
#include <random>

namespace gnssfgo {

/// Independent noise channels. Each (seed, receiver, satellite, channel)
/// tuple owns its own stream, so adding a satellite leaves the draws of the
/// others untouched.
enum class RngChannel : std::uint32_t {
  Geometry = 1,
  Clock = 2,
  Ambiguity = 3,
  Code = 4,
  Carrier = 5,
  Doppler = 6,
  Snr = 7,
  Nlos = 8,
};

/// mt19937_64 seeded through std::seed_seq, with uniform and normal variates
/// computed here rather than by std distributions (whose output is
/// implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  Rng(std::uint64_t seed, int receiver, SatId sat, RngChannel channel);

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal via Box-Muller.
  double normal();
  double normal(double sigma) { return sigma * normal(); }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gnssfgo
