#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace rfgap {

// Mixes a base seed with stream identifiers (tree index, repeat, ...) so that
// independent work items draw from independent, order-free streams.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> stream);

// Seeded generator whose every distribution is implemented here rather than
// through <random> distributions, which are implementation-defined. Output is
// identical across standard libraries for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, bound).
  std::uint64_t uniform_index(std::uint64_t bound);

  // Uniform real in [0, 1) with 53 random bits.
  double uniform();

  double normal();

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  // k distinct values from 0..n-1, in draw order (partial Fisher-Yates).
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rfgap
