#pragma once
// Deterministic random numbers. One root seed is expanded into independent
// per-subsystem streams via fixed string labels, so adding a consumer never
// shifts the draws seen by existing ones. All math is exact 64-bit integer
// arithmetic; results are identical across platforms and toolchains.

#include <cstdint>
#include <string_view>
#include <vector>

namespace logo {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed for a named subsystem stream derived from the run's root seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view label) {
  std::uint64_t state = root ^ fnv1a64(label);
  return splitmix64(state);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform index in [0, n). n must be positive.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace logo
