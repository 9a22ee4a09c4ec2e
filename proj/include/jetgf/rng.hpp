#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "jetgf/types.hpp"

namespace jetgf {

// Counter-based random source: every draw is a pure function of
// (seed, op_name, index, lane), so results are independent of evaluation
// order and thread count.  Mixing is the splitmix64 finalizer applied twice.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::string_view op_name)
      : key_(mix(seed ^ mix(fnv1a(op_name)))) {}

  // Uniform in [0, 1), 53-bit resolution.
  double uniform(std::uint64_t index, std::uint64_t lane = 0) const {
    return static_cast<double>(word(index, lane) >> 11) * 0x1.0p-53;
  }

  double uniform_in(std::uint64_t index, std::uint64_t lane, double lo, double hi) const {
    return lo + (hi - lo) * uniform(index, lane);
  }

  // Standard normal via Box-Muller; consumes lanes 2*lane and 2*lane+1.
  double normal(std::uint64_t index, std::uint64_t lane = 0) const {
    const double u1 = uniform(index, 2 * lane);
    const double u2 = uniform(index, 2 * lane + 1);
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniformly distributed direction on the unit sphere in R^dim.
  Vec unit_vector(std::uint64_t index, int dim) const {
    Vec v(dim);
    while (true) {
      for (int i = 0; i < dim; ++i) v(i) = normal(index, static_cast<std::uint64_t>(i));
      const double nrm = v.norm();
      if (nrm > 1e-8) return v / nrm;
      index = mix(index) | (std::uint64_t{1} << 63);  // astronomically unlikely retry
    }
  }

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    x = x ^ (x >> 31);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

 private:
  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return h;
  }

  std::uint64_t word(std::uint64_t index, std::uint64_t lane) const {
    return mix(key_ ^ mix(index * 0xd1342543de82ef95ull + lane));
  }

  std::uint64_t key_;
};

}  // namespace jetgf
