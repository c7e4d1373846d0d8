#include "ctx/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ctx::rng {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Tail of the Stirling series for log(k!); exact table for small k, the
// three-term expansion beyond.
double stirling_approx_tail(double k) {
  static const double table[] = {0.0810614667953272,  0.0413406959554092,
                                 0.0276779256849983,  0.02079067210376509,
                                 0.0166446911898211,  0.0138761288230707,
                                 0.0118967099458917,  0.0104112652619720,
                                 0.00925546218271273, 0.00833056343336287};
  if (k <= 9.0) return table[static_cast<int>(k)];
  const double kp1 = k + 1.0;
  const double kp1sq = kp1 * kp1;
  return (1.0 / 12 - (1.0 / 360 - 1.0 / 1260 / kp1sq) / kp1sq) / kp1;
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(base) ^ a) ^ b);
}

double Stream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Stream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

long Stream::binomial(long n, double p) {
  if (n < 0) throw std::invalid_argument("binomial: negative trial count");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial: p outside [0, 1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) return n - binomial(n, 1.0 - p);

  const double np = static_cast<double>(n) * p;
  if (np <= 30.0) {
    // CDF inversion; the expected loop length is np + O(sqrt(np)).
    const double odds = p / (1.0 - p);
    double pmf = std::exp(static_cast<double>(n) * std::log1p(-p));
    double cdf = pmf;
    const double u = uniform();
    long k = 0;
    while (u > cdf && k < n) {
      ++k;
      pmf *= odds * static_cast<double>(n - k + 1) / static_cast<double>(k);
      cdf += pmf;
      if (pmf < 1e-318 && cdf > 0.999999999) break;  // deep-tail underflow guard
    }
    return k;
  }

  // BTRS transformed rejection (Hormann).  Valid for np >= 10; we switch at 30.
  const double count = static_cast<double>(n);
  const double stddev = std::sqrt(count * p * (1.0 - p));
  const double b = 1.15 + 2.53 * stddev;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = count * p + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double odds = p / (1.0 - p);
  const double alpha = (2.83 + 5.1 / b) * stddev;
  const double m = std::floor((count + 1.0) * p);
  while (true) {
    const double u = uniform() - 0.5;
    double v = uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + c);
    if (us >= 0.07 && v <= v_r) return static_cast<long>(k);
    if (k < 0.0 || k > count) continue;
    v = std::log(v * alpha / (a / (us * us) + b));
    const double bound =
        (m + 0.5) * std::log((m + 1.0) / (odds * (count - m + 1.0))) +
        (count + 1.0) * std::log((count - m + 1.0) / (count - k + 1.0)) +
        (k + 0.5) * std::log(odds * (count - k + 1.0) / (k + 1.0)) +
        stirling_approx_tail(m) + stirling_approx_tail(count - m) -
        stirling_approx_tail(k) - stirling_approx_tail(count - k);
    if (v <= bound) return static_cast<long>(k);
  }
}

std::vector<long> Stream::multinomial(long n, const std::vector<double>& p) {
  if (n < 0) throw std::invalid_argument("multinomial: negative trial count");
  if (p.empty()) throw std::invalid_argument("multinomial: empty probability vector");
  double total = 0.0;
  for (double w : p) {
    if (w < 0.0 || !std::isfinite(w))
      throw std::invalid_argument("multinomial: probabilities must be nonnegative");
    total += w;
  }
  if (total <= 0.0)
    throw std::invalid_argument("multinomial: probabilities sum to zero");

  std::vector<long> counts(p.size(), 0);
  long remaining = n;
  double mass = total;
  for (size_t i = 0; i + 1 < p.size(); ++i) {
    if (remaining == 0) break;
    if (p[i] <= 0.0) continue;
    double cond = p[i] / mass;
    if (cond >= 1.0 || mass <= p[i]) {
      counts[i] = remaining;
      remaining = 0;
      break;
    }
    counts[i] = binomial(remaining, cond);
    remaining -= counts[i];
    mass -= p[i];
  }
  counts.back() += remaining;
  return counts;
}

}  // namespace ctx::rng
