// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace acorl {

// Portable deterministic RNG used everywhere randomness is needed.
//
// Generator: xoshiro256** seeded by four splitmix64 steps from a 64-bit
// seed. Uniform doubles take the top 53 bits; gaussians come from the
// Box-Muller transform with the sine variate cached, so the stream of
// consumed u64 words is exactly specified. Bounded integers use 53-bit
// rejection sampling. Identical seeds give identical streams on every
// platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller; consumes two uniforms per pair and
  // caches the second variate.
  double gaussian();

  // Uniform integer in [0, n), unbiased, n in [1, 2^53].
  std::uint64_t below(std::uint64_t n);

  // In-place Fisher-Yates, descending index order.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// splitmix64 single step; the seeding and subseed primitives are exposed
// so file formats and docs can state the derivation exactly.
std::uint64_t splitmix64(std::uint64_t& state);

// FNV-1a over the bytes of `s`.
std::uint64_t fnv1a64(std::string_view s);

// Per-component stream derivation: every run derives one stream per
// component label from the single experiment seed,
//   subseed(root, label) = splitmix64(splitmix64(root) ^ fnv1a64(label)).
std::uint64_t subseed(std::uint64_t root, std::string_view component);

}  // namespace acorl
