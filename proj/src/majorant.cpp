#include "rwde/majorant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rwde/error.hpp"

namespace rwde {

std::size_t ConcaveMajorant::segment(double x) const {
  const auto it = std::upper_bound(t.begin(), t.end(), x);
  return it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
}

double ConcaveMajorant::phi(double x) const {
  const auto i = segment(x);
  return a[i] + b[i] * (x - t[i]);
}

double ConcaveMajorant::Phi(double x) const {
  if (x <= 0.0) return 0.0;
  const auto i = segment(x);
  const double dx = x - t[i];
  return integral_at[i] + a[i] * dx + 0.5 * b[i] * dx * dx;
}

double ConcaveMajorant::step(double x) const {
  return 1.0 + static_cast<double>(std::upper_bound(t.begin(), t.end(), x) - t.begin());
}

ConcaveMajorant build_concave_majorant(const std::function<double(Rng&)>& sampler, const MajorantOptions& options) {
  Rng rng(options.seed);
  std::vector<double> pool(options.pool_size);
  for (auto& v : pool) v = sampler(rng);
  return build_concave_majorant(pool, options);
}

ConcaveMajorant build_concave_majorant(std::span<const double> pool, const MajorantOptions& options) {
  RWDE_REQUIRE(pool.size() >= 2, ErrorKind::Precondition, "majorant needs a sample pool");
  RWDE_REQUIRE(std::all_of(pool.begin(), pool.end(), [](double v) { return v >= 0.0 && std::isfinite(v); }),
               ErrorKind::Precondition, "majorant needs finite non-negative samples");
  const std::size_t half = pool.size() / 2;
  const double m1 = std::accumulate(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(half), 0.0) / static_cast<double>(half);
  const double m2 = std::accumulate(pool.begin() + static_cast<std::ptrdiff_t>(half), pool.end(), 0.0) /
                    static_cast<double>(pool.size() - half);
  RWDE_REQUIRE(m1 > 0.0 && m2 > 0.0, ErrorKind::Precondition, "majorant needs a positive mean");
  RWDE_REQUIRE(std::abs(m1 - m2) <= options.mean_stability * std::max(m1, m2), ErrorKind::Precondition,
               "sample mean is unstable across halves; the first moment looks infinite");

  std::vector<double> x(pool.begin(), pool.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  // tail[k] = (1/n) * sum of x[k..] (ascending order), tail[size] = 0.
  std::vector<double> tail(x.size() + 1, 0.0);
  for (std::size_t k = x.size(); k-- > 0;) tail[k] = tail[k + 1] + x[k] / n;
  const double mean = tail[0];
  // E[X 1{X > v}]
  auto tail_above = [&](double v) { return tail[static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), v) - x.begin())]; };

  ConcaveMajorant maj;
  maj.t.push_back(0.0);
  const double top = x.back();
  std::size_t past_top = 0;
  for (int i = 0; past_top < options.trailing_segments; ++i) {
    const double ti = maj.t.back();
    const double target = std::ldexp(mean, -(i + 1));
    double inf_x;
    if (tail_above(ti) <= target) {
      inf_x = ti;
    } else {
      // First sample value v >= ti with E[X 1{X > v}] <= target; tail_above is a step
      // function that only drops at sample values.
      auto k = static_cast<std::size_t>(std::lower_bound(x.begin(), x.end(), ti) - x.begin());
      while (k < x.size() && tail_above(x[k]) > target) {
        // Skip ties in one go.
        k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), x[k]) - x.begin());
      }
      inf_x = k < x.size() ? x[k] : top;
    }
    maj.t.push_back(1.0 + inf_x);
    if (maj.t.back() > top) ++past_top;
  }

  const std::size_t count = maj.t.size();
  maj.a.assign(count, 0.0);
  maj.b.assign(count, 0.0);
  maj.integral_at.assign(count, 0.0);
  maj.a[0] = 1.0;
  double prev_b = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < count; ++i) {
    const double width = maj.t[i + 1] - maj.t[i];
    maj.b[i] = std::min(prev_b, (static_cast<double>(i) + 2.0 - maj.a[i]) / width);
    maj.a[i + 1] = maj.a[i] + maj.b[i] * width;
    maj.integral_at[i + 1] = maj.integral_at[i] + maj.a[i] * width + 0.5 * maj.b[i] * width * width;
    prev_b = maj.b[i];
  }
  maj.b[count - 1] = prev_b;
  return maj;
}

}  // namespace rwde
