#pragma once

// Random number plumbing.
//
// Two kinds of generators are used throughout:
//  * CounterStream: a stateless-by-construction SplitMix64 stream keyed by a
//    64-bit value. Keys are derived by hashing (seed, coordinates, tag), so any
//    draw can be recomputed from its key alone. Used for the environment.
//  * Rng: std::mt19937_64 behind a thin wrapper with bit-exact uniform and
//    exponential conversions, so replays do not depend on the standard
//    library's distribution implementations.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace rwde {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Order-sensitive combination of a key with one more word.
constexpr std::uint64_t hash_combine(std::uint64_t key, std::uint64_t word) noexcept {
  return mix64(key ^ (word + kGolden + (key << 6) + (key >> 2)));
}

inline std::uint64_t hash_words(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (auto w : words) h = hash_combine(h, w);
  return h;
}

/// Uniform in the open interval (0, 1) from 64 random bits.
constexpr double bits_to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t key) noexcept : state_(key) {}

  constexpr std::uint64_t next() noexcept {
    state_ += kGolden;
    return mix64(state_);
  }
  constexpr double uniform() noexcept { return bits_to_open_unit(next()); }

  /// Standard normal via Box-Muller (one variate per call, the sine branch is dropped).
  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::uint64_t state_;
};

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  double uniform() { return bits_to_open_unit(engine_()); }
  double exponential() { return -std::log(uniform()); }
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n; }

  /// Failures before the first success, success probability p.
  std::uint64_t geometric(double p) {
    if (p >= 1.0) return 0;
    return static_cast<std::uint64_t>(std::floor(std::log(uniform()) / std::log1p(-p)));
  }

 private:
  std::mt19937_64 engine_;
};

/// Seed for the i-th child of a master seed under a named purpose tag.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index) noexcept {
  return hash_words({master, tag, index});
}

}  // namespace rwde
