#pragma once

#include <cstdint>

namespace mdepth {

// Deterministic generator with explicit draw algorithms. std::*_distribution
// output is implementation-defined, so all draws are spelled out here to keep
// byte-level reproducibility contracts independent of the standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();                    // splitmix64
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double normal();                        // standard normal (Box-Muller)
  bool bernoulli(double p);
  int uniform_int(int lo, int hi);        // inclusive bounds

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stable stream splitting for per-sample / per-step generators.
uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0);

}  // namespace mdepth
