#include "rwde/stats.hpp"

#include <algorithm>
#include <random>
#include <cmath>
#include <numeric>

#include "rwde/error.hpp"

namespace rwde::stats {

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double standard_error(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

double variance_standard_error(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : x) {
    const double d2 = (v - m) * (v - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  const double n = static_cast<double>(x.size());
  m2 /= n;
  m4 /= n;
  return std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  RWDE_REQUIRE(x.size() == y.size(), ErrorKind::Precondition, "pearson needs equal lengths");
  if (x.size() < 2) return 0.0;
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double lag1_autocorrelation(std::span<const double> x) {
  if (x.size() < 3) return 0.0;
  const double m = mean(x);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    den += (x[i] - m) * (x[i] - m);
    if (i + 1 < x.size()) num += (x[i] - m) * (x[i + 1] - m);
  }
  return den == 0.0 ? 0.0 : num / den;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  RWDE_REQUIRE(x.size() == y.size() && x.size() >= 2, ErrorKind::StatisticalPower, "linear fit needs two points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  RWDE_REQUIRE(sxx > 0.0, ErrorKind::StatisticalPower, "linear fit needs distinct abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_se = std::sqrt(rss / static_cast<double>(x.size() - 2) / sxx);
  }
  return fit;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  RWDE_REQUIRE(!sorted.empty(), ErrorKind::StatisticalPower, "quantile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

double median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  return quantile_sorted(x, 0.5);
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  RWDE_REQUIRE(!a.empty() && !b.empty(), ErrorKind::StatisticalPower, "KS needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  RWDE_REQUIRE(!x.empty(), ErrorKind::StatisticalPower, "KS needs a non-empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_critical_two_sample(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    q += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

Interval bootstrap_interval(std::span<const double> data, const std::function<double(std::span<const double>)>& statistic,
                            int resamples, double level, std::uint64_t seed) {
  RWDE_REQUIRE(!data.empty() && resamples > 1, ErrorKind::StatisticalPower, "bootstrap needs data");
  Rng rng(seed);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(resamples));
  std::vector<double> buf(data.size());
  for (int r = 0; r < resamples; ++r) {
    for (auto& v : buf) v = data[rng.below(data.size())];
    values.push_back(statistic(buf));
  }
  std::sort(values.begin(), values.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(values, tail), quantile_sorted(values, 1.0 - tail)};
}

std::vector<double> survival_at(std::span<const double> data, std::span<const double> thresholds) {
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(thresholds.size());
  const double n = static_cast<double>(sorted.size());
  for (double a : thresholds) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), a);
    out.push_back(n == 0.0 ? 0.0 : static_cast<double>(sorted.end() - it) / n);
  }
  return out;
}

LinearFit loglog_tail_slope(std::span<const double> data, std::span<const double> grid) {
  const auto surv = survival_at(data, grid);
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (surv[i] <= 0.0) continue;
    lx.push_back(std::log(grid[i]));
    ly.push_back(std::log(surv[i]));
  }
  RWDE_REQUIRE(lx.size() >= 2, ErrorKind::StatisticalPower, "tail slope needs two populated grid points");
  return linear_fit(lx, ly);
}

std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    g.push_back(std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo))));
  }
  return g;
}

Interval tail_slope_interval(std::span<const double> data, std::span<const double> grid, int resamples, double level,
                             std::uint64_t seed) {
  RWDE_REQUIRE(!data.empty() && resamples > 1, ErrorKind::StatisticalPower, "tail slope interval needs data");
  RWDE_REQUIRE(std::is_sorted(grid.begin(), grid.end()), ErrorKind::Parameter, "grid must be increasing");
  // cells[0] = below grid[0], cells[i] = [grid[i-1], grid[i]), cells[g] = at or above the top.
  const auto surv = survival_at(data, grid);
  const double n = static_cast<double>(data.size());
  std::vector<double> cell_p(grid.size() + 1, 0.0);
  cell_p[0] = 1.0 - surv[0];
  for (std::size_t i = 1; i < grid.size(); ++i) cell_p[i] = surv[i - 1] - surv[i];
  cell_p[grid.size()] = surv.back();

  Rng rng(seed);
  std::vector<double> slopes;
  std::vector<double> counts(cell_p.size());
  std::vector<double> lx;
  std::vector<double> ly;
  for (int b = 0; b < resamples; ++b) {
    auto left = static_cast<std::int64_t>(data.size());
    double mass = 1.0;
    for (std::size_t c = 0; c < cell_p.size(); ++c) {
      const double p = mass > 0.0 ? std::clamp(cell_p[c] / mass, 0.0, 1.0) : 0.0;
      const auto k = c + 1 == cell_p.size() ? left : std::binomial_distribution<std::int64_t>(left, p)(rng);
      counts[c] = static_cast<double>(k);
      left -= k;
      mass -= cell_p[c];
    }
    lx.clear();
    ly.clear();
    double above = 0.0;
    std::vector<double> tail(grid.size());
    for (std::size_t i = grid.size(); i-- > 0;) {
      above += counts[i + 1];
      tail[i] = above;
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (tail[i] <= 0.0) continue;
      lx.push_back(std::log(grid[i]));
      ly.push_back(std::log(tail[i] / n));
    }
    if (lx.size() >= 2) slopes.push_back(linear_fit(lx, ly).slope);
  }
  RWDE_REQUIRE(slopes.size() >= 2, ErrorKind::StatisticalPower, "tail slope interval: too few populated grid points");
  std::sort(slopes.begin(), slopes.end());
  const double tail_q = 0.5 * (1.0 - level);
  return {quantile_sorted(slopes, tail_q), quantile_sorted(slopes, 1.0 - tail_q)};
}

}  // namespace rwde::stats
