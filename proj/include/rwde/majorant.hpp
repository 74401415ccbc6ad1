#pragma once

// Concave minorant of the slowly growing step weight used to upgrade a finite
// first moment into E[Phi(X)] < infinity.
//
// Given a sample pool for X >= 0 with E[X] = m:
//   t_0 = 0, t_{i+1} = 1 + inf{x >= t_i : E[X 1{X > x}] <= 2^{-(i+1)} m}
//   f(x) = 1 + #{i : x >= t_i}
//   a_0 = 1, a_{i+1} = a_i + b_i (t_{i+1} - t_i)
//   b_i = min(b_{i-1}, ((i + 2) - a_i) / (t_{i+1} - t_i))   (b_{-1} = +inf)
//   phi(x) = a_i + b_i (x - t_i) on [t_i, t_{i+1})
// so that phi <= f, phi is concave and increasing, and E[X f(X)] <= 3 m.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rwde/rng.hpp"

namespace rwde {

struct ConcaveMajorant {
  std::vector<double> t;  // breakpoints, t[0] = 0
  std::vector<double> a;  // phi(t[i])
  std::vector<double> b;  // slope on [t[i], t[i+1]); the last slope extends to infinity
  std::vector<double> integral_at;  // Phi(t[i])

  std::size_t segment(double x) const;
  double phi(double x) const;
  /// Phi(x) = int_0^x phi, closed form per segment.
  double Phi(double x) const;
  /// The step function f(x) = 1 + #{i : x >= t_i}.
  double step(double x) const;
};

struct MajorantOptions {
  std::size_t pool_size = 200000;
  std::uint64_t seed = 22;
  double mean_stability = 0.10;     // half-sample means must agree within this relative gap
  std::size_t trailing_segments = 8;  // unit-spaced breakpoints appended past the largest sample
};

/// Build from a sampler of X >= 0 (pool drawn with Rng(options.seed)).
/// Throws ErrorKind::Precondition when the two half-sample means disagree by more than
/// options.mean_stability (unstable or infinite mean) or the mean is not positive.
ConcaveMajorant build_concave_majorant(const std::function<double(Rng&)>& sampler, const MajorantOptions& options = {});

/// Build from an explicit sample pool (same preconditions).
ConcaveMajorant build_concave_majorant(std::span<const double> pool, const MajorantOptions& options = {});

}  // namespace rwde
