#pragma once

// One-sided kappa-stable laws, subordinator paths, cadlag inverses and tail-index estimation.

#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "rwde/rng.hpp"
#include "rwde/stats.hpp"

namespace rwde {

/// Characteristic function of S_s: exp(-s |l|^kappa (1 - i sgn(l) tan(pi kappa / 2))).
std::complex<double> stable_characteristic(double kappa, double s, double lambda);

/// One draw of S_s for the kappa-stable subordinator, 0 < kappa < 1.
///
/// Kanter's representation: with U uniform on (0, pi) and W ~ Exp(1),
///   K = sin(kappa U) / sin(U)^{1/kappa} * (sin((1 - kappa) U) / W)^{(1 - kappa) / kappa}
/// has Laplace transform exp(-lambda^kappa). Multiplying by cos(pi kappa / 2)^{-1/kappa}
/// gives the characteristic function above at s = 1; S_s = s^{1/kappa} S_1.
/// Evaluated in log space; the result is always > 0.
/// Throws ErrorKind::Parameter for kappa outside (0, 1) or s <= 0.
double sample_stable_increment(double kappa, double s, Rng& rng);

/// Nondecreasing right-continuous step function with f(0) = 0:
/// f(t) = values[k] for locations[k] <= t < locations[k+1], and 0 before locations[0].
struct CadlagStep {
  std::vector<double> locations;  // strictly increasing, > 0 unless values[0] = 0
  std::vector<double> values;     // nondecreasing, >= 0

  double operator()(double t) const;
  /// Throws ErrorKind::Precondition on unsorted or decreasing data.
  void validate() const;
  double sup() const noexcept { return values.empty() ? 0.0 : values.back(); }
};

/// Returned by invert_cadlag when t exceeds the range of f.
inline constexpr double kBeyondRange = std::numeric_limits<double>::infinity();

/// inf{s : f(s) >= t} by binary search over the jump values; 0 for t <= 0 and
/// kBeyondRange for t > sup f.
double invert_cadlag(const CadlagStep& f, double t);

/// Subordinator sampled on the grid 0, h, 2h, ..., n h.
struct SubordinatorPath {
  double kappa = 0.0;
  std::vector<double> times;       // n + 1 grid points starting at 0
  std::vector<double> increments;  // n positive increments
  std::vector<double> values;      // n + 1 cumulative values starting at 0

  /// The path as a cadlag step function (jumps at grid points h, 2h, ...).
  CadlagStep as_step() const;
  /// Hitting-time inverse inf{t : S_t >= x} evaluated on the grid.
  double inverse(double x) const;
};

SubordinatorPath sample_subordinator(double kappa, double step, std::size_t steps, Rng& rng);

/// Draw of the inverse subordinator at time t using the scaling identity
/// inf{u : S_u >= t} = (t / S_1)^kappa in law.
double sample_inverse_subordinator(double kappa, double t, Rng& rng);

// ---------------------------------------------------------------------------
// Tail index.

struct TailIndexOptions {
  int bootstrap_resamples = 200;
  double level = 0.95;
  std::uint64_t seed = 1;
  double stability_tolerance = 0.2;  // max relative drift of the estimate over k/4..k
  double heavy_tail_ceiling = 4.0;   // estimates above this are treated as light tailed
};

struct TailIndexEstimate {
  double hill = 0.0;         // alpha-hat from the top k order statistics
  double regression = 0.0;   // minus the log-log survival slope over the same top k
  std::size_t k = 0;
  stats::Interval ci{};      // bootstrap interval of the Hill estimate
  std::vector<double> path;  // Hill estimate at k/4, k/2, 3k/4, k
  bool heavy_tail = false;
};

/// Hill estimate 1 / mean(log(X_(i) / X_(k+1))), i = 1..k, on positive samples.
/// Throws ErrorKind::StatisticalPower unless 1 <= k < samples.size().
double hill_estimate(std::span<const double> samples, std::size_t k);

/// Hill estimate with a log-log regression fallback, bootstrap interval and heavy-tail flag.
TailIndexEstimate tail_index(std::span<const double> samples, std::size_t k, const TailIndexOptions& options = {});

/// Draw from the Pareto law P(X > x) = x^{-index}, x >= 1.
inline double sample_pareto(double index, Rng& rng) { return std::exp(-std::log(rng.uniform()) / index); }

}  // namespace rwde
