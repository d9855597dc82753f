#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>
#include <span>

namespace rkde {

// SplitMix64 output finalizer. Bit-exact on every platform; used both as a
// standalone mixer for seed derivation and (via the standard seeding of
// mt19937_64) nowhere else.
inline constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a master seed and a path of
// integers (e.g. {n_index, trial, role}). Each step absorbs one value:
//   s <- mix(s ^ (v + golden)), mix = SplitMix64 finalizer.
// Same master + same path => same seed, regardless of platform.
inline constexpr std::uint64_t derive_seed(std::uint64_t master,
                                           std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = master;
  for (std::uint64_t v : path) {
    std::uint64_t st = s ^ (v + 0x9E3779B97F4A7C15ULL);
    s = splitmix64(st);
  }
  return s;
}

// Deterministic double/normal generator over mt19937_64. The standard pins
// the mt19937_64 output sequence bit-exactly; uniform doubles take the top
// 53 bits and normals go through Box-Muller (std::normal_distribution is not
// specified bit-exactly, so it is avoided).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0,1): top 53 bits of one engine draw.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller with a cached spare.
  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();  // log(0) guard
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double two_pi = 2.0 * std::acos(-1.0);
    spare_ = r * std::sin(two_pi * u2);
    return r * std::cos(two_pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace rkde
