#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace nextcat {

// Deterministic PRNG with hand-rolled distributions so that streams are
// bit-identical across platforms and standard library versions.
// Counter-derived sub-seeds let per-customer streams run independently:
// serial and parallel generation produce the same bytes.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // splitmix warm-up so nearby seeds decorrelate
    next_u64();
    next_u64();
  }

  // Independent child stream for item `index` under this stream's seed.
  Rng substream(std::uint64_t index) const {
    std::uint64_t s = state_ ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return Rng(s);
  }

  std::uint64_t next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    // Box-Muller, one value per call (the twin is discarded to keep the
    // stream position independent of call parity)
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    return mean + stddev * z;
  }

  double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

  // Index drawn from a discrete distribution (weights need not be normalized).
  std::size_t discrete(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double r = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (r < acc) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_u64() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::uint64_t state_;
};

}  // namespace nextcat
