#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace arena {

// Deterministic RNG: mt19937_64 raw stream plus hand-rolled draws, so results
// do not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Rejection sampling, unbiased.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller (cosine branch only; two uniforms per draw).
  double normal();

  double gamma(double shape);

  std::vector<double> dirichlet(const std::vector<double>& alpha);

  // Index into a probability vector by inverse-CDF walk.
  int categorical(const std::vector<double>& probs);

 private:
  std::mt19937_64 eng_;
};

// splitmix64-style key derivation for independent substreams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace arena
