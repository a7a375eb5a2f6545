#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace genhop {

/// Deterministic RNG. Distributions are implemented here rather than with
/// std::*_distribution so that identical seeds give identical streams on
/// every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform index in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

/// SplitMix64 finalizer; combines a root seed with stream coordinates so
/// that per-(epoch, graph, view) streams are independent and reproducible.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                              std::uint64_t d = 0) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t h = mix(a);
  h = mix(h ^ mix(b + 0x517cc1b727220a95ULL));
  h = mix(h ^ mix(c + 0x2545f4914f6cdd1dULL));
  h = mix(h ^ mix(d + 0x9e3779b97f4a7c15ULL));
  return h;
}

}  // namespace genhop
