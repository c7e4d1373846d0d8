#pragma once

#include <cstdint>
#include <random>
#include <vector>

// Deterministic random streams for the simulation layer.  Everything here is
// reproducible across platforms: the generator is std::mt19937_64 driven only
// through raw 64-bit draws, so no distribution object with
// implementation-defined behaviour appears anywhere.
namespace ctx::rng {

// Derives an independent substream seed from a base seed and two indices
// (e.g. edge index and batch index) via splitmix64 mixing.  Distinct index
// pairs yield decorrelated streams for any base seed.
std::uint64_t substream_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform();

  // Standard normal via Box-Muller; draws are cached in pairs.
  double normal();

  // Binomial(n, p) sample.  Uses CDF inversion when n * min(p, 1-p) <= 30 and
  // the BTRS transformed-rejection sampler otherwise, so single draws stay
  // O(1) even for particle counts in the millions.
  long binomial(long n, double p);

  // Multinomial(n, p) via sequential binomial conditioning.  The returned
  // counts always sum to exactly n; p must be nonnegative and is normalized
  // internally.
  std::vector<long> multinomial(long n, const std::vector<double>& p);

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace ctx::rng
