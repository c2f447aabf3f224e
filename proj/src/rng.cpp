// SPDX-License-Identifier: Apache-2.0
#include "acorl/rng.hpp"

#include <cmath>

#include "acorl/errors.hpp"

namespace acorl {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t subseed(std::uint64_t root, std::string_view component) {
  std::uint64_t t = root;
  std::uint64_t mixed = splitmix64(t) ^ fnv1a64(component);
  return splitmix64(mixed);
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t t = seed;
  for (auto& word : state_) word = splitmix64(t);
}

std::uint64_t Rng::next_u64() {
  std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] keeps the log finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(kTwoPi * u2);
  has_spare_ = true;
  return r * std::cos(kTwoPi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0 || n > (1ULL << 53)) {
    throw ContractError("Rng::below: n must be in [1, 2^53]");
  }
  const std::uint64_t span = 1ULL << 53;
  const std::uint64_t limit = span - span % n;
  for (;;) {
    std::uint64_t r = next_u64() >> 11;
    if (r < limit) return r % n;
  }
}

}  // namespace acorl
