#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "icon/errors.hpp"

namespace icon {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e9b5ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
inline std::uint64_t mix(std::uint64_t state, std::uint64_t v) {
  return splitmix64(state ^ splitmix64(v));
}
inline std::uint64_t hash_str(std::uint64_t state, const std::string& s) {
  for (unsigned char c : s) state = mix(state, c);
  return mix(state, s.size());
}
}  // namespace detail

// Deterministic stream of uniform/normal variates. All sampling in the
// project goes through this wrapper so draws are reproducible per seed on
// a given platform (std::mt19937_64 output is fully specified; the
// uniform/normal mappings below avoid the unspecified std distributions).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0,1).
  double uniform01() { return double(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    if (lo > hi) throw InvalidInputError("uniform: lo > hi");
    return lo + (hi - lo) * uniform01();
  }

  // Marsaglia polar method; caches the second variate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw InvalidInputError("Rng::below(0)");
    // Rejection sampling for an unbiased draw.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Hash-split seed derivation: the same (root, path) always yields the same
// stream, and distinct paths yield independent streams. Safe to derive in
// parallel since derivation is pure.
class SeedTree {
 public:
  explicit SeedTree(std::uint64_t root_seed) : state_(detail::splitmix64(root_seed ^ 0x1c09e57ULL)) {}

  SeedTree child(const std::string& label, std::uint64_t index = 0) const {
    SeedTree t(*this);
    t.state_ = detail::mix(detail::hash_str(t.state_, label), index);
    return t;
  }

  std::uint64_t seed() const { return state_; }
  Rng rng() const { return Rng(state_); }

 private:
  std::uint64_t state_;
};

}  // namespace icon
