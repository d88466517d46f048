#ifndef CAHAR_SRC_RNG_H_
#define CAHAR_SRC_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace cahar::rng {

// Distributions and std::shuffle are implementation-defined; everything
// here is built on mt19937_64 and seed_seq alone so that a seed yields the
// same data with every standard library.

inline std::uint32_t fnv1a(std::string_view s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::string_view stream,
                                   std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), fnv1a(stream),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

// Uniform in [0, n) by rejection.
inline std::uint64_t below(std::mt19937_64& engine, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine();
  } while (x >= limit);
  return x % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double unit(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(std::mt19937_64& engine, double p) {
  return unit(engine) < p;
}

template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& engine) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[below(engine, i)]);
  }
}

}  // namespace cahar::rng

#endif  // CAHAR_SRC_RNG_H_
