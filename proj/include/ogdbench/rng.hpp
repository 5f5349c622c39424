#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace ogdbench {

// Deterministic RNG used everywhere results must be reproducible.
// mt19937_64 output is fully specified by the standard; the helpers below
// avoid std::uniform_*_distribution, whose mapping is implementation-defined,
// so the same seed gives the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n), rejection sampled.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

  // k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<int> sample_indices(int n, int k);

 private:
  std::mt19937_64 engine_;
};

// The four independent streams derived from one run seed. Keeping them
// separate means e.g. changing how a method subsamples never perturbs the
// shared batch order.
enum class Stream : std::uint64_t {
  kInit = 1,
  kShuffle = 2,
  kSubsample = 3,
  kMtl = 4,
};

// splitmix64 finalizer; decorrelates seed+stream pairs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_stream(std::uint64_t run_seed, Stream stream) {
  return Rng(mix_seed(run_seed, static_cast<std::uint64_t>(stream)));
}

inline std::vector<int> Rng::sample_indices(int n, int k) {
  if (k >= n) {
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    shuffle(all);
    return all;
  }
  // Floyd's algorithm, then shuffle for uniform order.
  std::vector<int> picked;
  picked.reserve(k);
  std::vector<bool> seen(n, false);
  for (int j = n - k; j < n; ++j) {
    int t = static_cast<int>(below(static_cast<std::uint64_t>(j) + 1));
    if (seen[t]) t = j;
    seen[t] = true;
    picked.push_back(t);
  }
  shuffle(picked);
  return picked;
}

}  // namespace ogdbench
