#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace emokd {

uint64_t splitmix64(uint64_t& state);

// Deterministic random stream. mt19937_64 has a standardized output
// sequence, and all distribution mapping (bounded ints, uniforms,
// normals) is done here rather than with std:: distributions, whose
// results vary across standard libraries. Identical seeds therefore give
// identical draws everywhere.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  double uniform();                  // [0, 1), 53-bit resolution
  double uniform(double lo, double hi);
  double normal();                   // standard normal, Box-Muller
  std::size_t uniform_index(std::size_t n);  // [0, n)

  // Independent stream derived from this stream's seed and a tag;
  // unaffected by how many draws were consumed here.
  Rng child(uint64_t tag) const;

  template <class T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::swap(v[i], v[uniform_index(i + 1)]);
    }
  }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

// Seed-keyed permutation of [0, n).
std::vector<std::size_t> random_permutation(std::size_t n, uint64_t seed);

}  // namespace emokd
