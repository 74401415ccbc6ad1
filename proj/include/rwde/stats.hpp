#pragma once

// Small statistics toolkit shared by the analysis modules and the experiments.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rwde/rng.hpp"

namespace rwde::stats {

double mean(std::span<const double> x);
/// Unbiased sample variance (n - 1 denominator); 0 for fewer than two points.
double variance(std::span<const double> x);
double standard_error(std::span<const double> x);
/// Standard error of the sample variance, sqrt((m4 - s^4) / n).
double variance_standard_error(std::span<const double> x);

double pearson(std::span<const double> x, std::span<const double> y);
double lag1_autocorrelation(std::span<const double> x);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Linear-interpolated quantile of already sorted data.
double quantile_sorted(std::span<const double> sorted, double q);
double median(std::vector<double> x);

/// Two-sample Kolmogorov-Smirnov distance; ties are handled by stepping over equal values together.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
/// One-sample distance against a continuous CDF.
double ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf);
/// Asymptotic two-sample critical distance at significance `alpha`.
double ks_critical_two_sample(std::size_t n, std::size_t m, double alpha);
/// Asymptotic Kolmogorov survival function Q(lambda) = P(sqrt(n) D > lambda).
double kolmogorov_survival(double lambda);

struct Interval {
  double low = 0.0;
  double high = 0.0;
  bool contains(double v) const noexcept { return v >= low && v <= high; }
  bool overlaps(const Interval& o) const noexcept { return low <= o.high && o.low <= high; }
};

/// Percentile bootstrap interval of `statistic` over `resamples` resamples with replacement.
Interval bootstrap_interval(std::span<const double> data, const std::function<double(std::span<const double>)>& statistic,
                            int resamples, double level, std::uint64_t seed);

/// Empirical survival P(X >= a) for each threshold.
std::vector<double> survival_at(std::span<const double> data, std::span<const double> thresholds);

/// Least-squares slope of log P(X >= A) against log A over the given grid
/// (grid points with zero mass are skipped).
LinearFit loglog_tail_slope(std::span<const double> data, std::span<const double> grid);

std::vector<double> log_grid(double lo, double hi, int points);

/// Percentile bootstrap interval of loglog_tail_slope. Resampling with replacement only
/// moves mass between the grid cells, so the resample is drawn as a multinomial over
/// cell counts; this matches the plain bootstrap exactly and costs O(grid) per resample.
Interval tail_slope_interval(std::span<const double> data, std::span<const double> grid, int resamples, double level,
                             std::uint64_t seed);

}  // namespace rwde::stats
