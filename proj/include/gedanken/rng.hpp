#pragma once

#include <cmath>
#include <cstdint>

#include "gedanken/constants.hpp"

namespace gedanken {

// Counter-based per-trial random stream.  Trial i of a run with master seed s
// draws from SplitMix64 started at state mix(s + GOLDEN * (i + 1)), so the
// stream depends only on (seed, trial) and never on worker scheduling.
class TrialRng {
 public:
  TrialRng(std::uint64_t seed, std::uint64_t trial) {
    state_ = seed + kGolden * (trial + 1);
    // Two warm-up outputs decorrelate nearby (seed, trial) keys.
    next();
    next();
  }

  std::uint64_t next() {
    state_ += kGolden;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() { return 1.0 - uniform(); }

  double exponential(double mean) { return -mean * std::log(uniform_pos()); }

  double gaussian(double sigma) {
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    return sigma * r * std::cos(2.0 * kPi * uniform());
  }

  static constexpr const char* derivation() {
    return "splitmix64(seed + 0x9E3779B97F4A7C15 * (trial + 1))";
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  std::uint64_t state_ = 0;
};

}  // namespace gedanken
