#include "rwde/stable.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rwde/error.hpp"

namespace rwde {

std::complex<double> stable_characteristic(double kappa, double s, double lambda) {
  if (lambda == 0.0) return {1.0, 0.0};
  const double mag = s * std::pow(std::abs(lambda), kappa);
  const double skew = (lambda > 0 ? 1.0 : -1.0) * std::tan(std::numbers::pi * kappa / 2.0);
  return std::exp(std::complex<double>(-mag, mag * skew));
}

double sample_stable_increment(double kappa, double s, Rng& rng) {
  RWDE_REQUIRE(kappa > 0.0 && kappa < 1.0, ErrorKind::Parameter, "stable index must lie in (0, 1)");
  RWDE_REQUIRE(s > 0.0, ErrorKind::Parameter, "stable duration must be positive");
  const double u = std::numbers::pi * rng.uniform();
  const double w = rng.exponential();
  const double log_k = std::log(std::sin(kappa * u)) - std::log(std::sin(u)) / kappa +
                       (1.0 - kappa) / kappa * (std::log(std::sin((1.0 - kappa) * u)) - std::log(w));
  const double log_scale = -std::log(std::cos(std::numbers::pi * kappa / 2.0)) / kappa + std::log(s) / kappa;
  return std::max(std::exp(log_k + log_scale), std::numeric_limits<double>::min());
}

double CadlagStep::operator()(double t) const {
  const auto it = std::upper_bound(locations.begin(), locations.end(), t);
  if (it == locations.begin()) return 0.0;
  return values[static_cast<std::size_t>(it - locations.begin()) - 1];
}

void CadlagStep::validate() const {
  RWDE_REQUIRE(locations.size() == values.size(), ErrorKind::Precondition, "cadlag step: size mismatch");
  for (std::size_t i = 0; i < locations.size(); ++i) {
    RWDE_REQUIRE(values[i] >= 0.0 && locations[i] >= 0.0, ErrorKind::Precondition, "cadlag step: negative entry");
    if (i > 0) {
      RWDE_REQUIRE(locations[i] > locations[i - 1], ErrorKind::Precondition, "cadlag step: unsorted locations");
      RWDE_REQUIRE(values[i] >= values[i - 1], ErrorKind::Precondition, "cadlag step: decreasing values");
    }
  }
}

double invert_cadlag(const CadlagStep& f, double t) {
  if (t <= 0.0) return 0.0;
  const auto it = std::lower_bound(f.values.begin(), f.values.end(), t);
  if (it == f.values.end()) return kBeyondRange;
  return f.locations[static_cast<std::size_t>(it - f.values.begin())];
}

CadlagStep SubordinatorPath::as_step() const {
  CadlagStep f;
  f.locations.assign(times.begin() + 1, times.end());
  f.values.assign(values.begin() + 1, values.end());
  return f;
}

double SubordinatorPath::inverse(double x) const { return invert_cadlag(as_step(), x); }

SubordinatorPath sample_subordinator(double kappa, double step, std::size_t steps, Rng& rng) {
  RWDE_REQUIRE(step > 0.0 && steps > 0, ErrorKind::Parameter, "subordinator grid must be non-empty");
  SubordinatorPath p;
  p.kappa = kappa;
  p.times.reserve(steps + 1);
  p.values.reserve(steps + 1);
  p.increments.reserve(steps);
  p.times.push_back(0.0);
  p.values.push_back(0.0);
  for (std::size_t i = 0; i < steps; ++i) {
    const double inc = sample_stable_increment(kappa, step, rng);
    p.increments.push_back(inc);
    p.times.push_back(step * static_cast<double>(i + 1));
    p.values.push_back(p.values.back() + inc);
  }
  return p;
}

double sample_inverse_subordinator(double kappa, double t, Rng& rng) {
  if (t <= 0.0) return 0.0;
  return std::pow(t / sample_stable_increment(kappa, 1.0, rng), kappa);
}

namespace {

std::vector<double> descending(std::span<const double> samples) {
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end(), std::greater<>());
  return x;
}

double hill_sorted(std::span<const double> desc, std::size_t k) {
  const double ref = std::log(desc[k]);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += std::log(desc[i]) - ref;
  return total > 0.0 ? static_cast<double>(k) / total : std::numeric_limits<double>::infinity();
}

}  // namespace

double hill_estimate(std::span<const double> samples, std::size_t k) {
  RWDE_REQUIRE(k >= 1 && k < samples.size(), ErrorKind::StatisticalPower, "Hill estimator needs 1 <= k < n");
  RWDE_REQUIRE(std::all_of(samples.begin(), samples.end(), [](double v) { return v > 0.0; }), ErrorKind::Precondition,
               "Hill estimator needs positive samples");
  const auto desc = descending(samples);
  return hill_sorted(desc, k);
}

TailIndexEstimate tail_index(std::span<const double> samples, std::size_t k, const TailIndexOptions& options) {
  RWDE_REQUIRE(k >= 8 && k < samples.size(), ErrorKind::StatisticalPower, "too few tail samples for a tail index");
  RWDE_REQUIRE(std::all_of(samples.begin(), samples.end(), [](double v) { return v > 0.0; }), ErrorKind::Precondition,
               "tail index needs positive samples");
  const auto desc = descending(samples);
  TailIndexEstimate est;
  est.k = k;
  est.hill = hill_sorted(desc, k);

  // Regression of log rank against log value over the top k order statistics.
  std::vector<double> lx;
  std::vector<double> ly;
  const double n = static_cast<double>(desc.size());
  for (std::size_t i = 0; i < k; ++i) {
    if (i > 0 && desc[i] == desc[i - 1]) continue;
    lx.push_back(std::log(desc[i]));
    ly.push_back(std::log(static_cast<double>(i + 1) / n));
  }
  if (lx.size() >= 2) {
    try {
      est.regression = -stats::linear_fit(lx, ly).slope;
    } catch (const Error&) {
      est.regression = std::numeric_limits<double>::quiet_NaN();
    }
  }
  if (!std::isfinite(est.hill)) est.hill = est.regression;

  for (std::size_t part = 1; part <= 4; ++part) est.path.push_back(hill_sorted(desc, std::max<std::size_t>(1, k * part / 4)));
  double drift = 0.0;
  for (double v : est.path) drift = std::max(drift, std::abs(v - est.hill) / est.hill);

  const auto kk = k;
  est.ci = stats::bootstrap_interval(
      samples,
      [kk](std::span<const double> s) {
        std::vector<double> d(s.begin(), s.end());
        std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end(), std::greater<>());
        std::sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), std::greater<>());
        return hill_sorted(d, kk);
      },
      options.bootstrap_resamples, options.level, options.seed);
  est.heavy_tail = drift <= options.stability_tolerance && est.hill < options.heavy_tail_ceiling;
  return est;
}

}  // namespace rwde
