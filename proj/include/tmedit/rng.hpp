#pragma once

#include <cstdint>
#include <random>

namespace tmedit {

// Deterministic random stream: std::mt19937_64 (fully specified by the
// standard) with hand-written distributions, since the std:: distributions
// are implementation-defined. Same seed, same stream, on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream for one work item: splitmix64(seed ^ index).
  static Rng derive(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform01();
  // Uniform integer in [lo, hi], inclusive; unbiased (rejection sampling).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Uniform real in [lo, hi).
  double uniform_real(double lo, double hi);
  bool bernoulli(double p);
  // Number of failures before the first success, success probability p.
  std::int64_t geometric(double p);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace tmedit
