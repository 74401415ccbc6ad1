#include "rwde/trap_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "rwde/error.hpp"

namespace rwde {

EdgeLaw edge_law(const AlphaParams& alpha, int dir) {
  alpha.validate();
  RWDE_REQUIRE(dir >= 0 && dir < alpha.directions(), ErrorKind::Parameter, "edge direction out of range");
  double total = 0.0;
  for (double w : alpha.weights) total += w;
  EdgeLaw law;
  law.dir = dir;
  law.axis = axis_of(dir, alpha.d);
  law.b_x = alpha.weights[static_cast<std::size_t>(dir)];
  law.b_y = alpha.weights[static_cast<std::size_t>(opposite(dir, alpha.d))];
  law.a_x = total - law.b_x;
  law.a_y = total - law.b_y;
  return law;
}

RadialPoint to_radial(double eps_x, double eps_y) {
  const double r = 0.5 * (eps_x + eps_y);
  return {r, r > 0.0 ? (eps_x - eps_y) / (eps_x + eps_y) : 0.0};
}

void from_radial(const RadialPoint& p, double& eps_x, double& eps_y) {
  eps_x = p.r * (1.0 + p.k);
  eps_y = p.r * (1.0 - p.k);
}

ExitLaw exit_law(double eps_x, double eps_y) {
  const double d = eps_x + eps_y - eps_x * eps_y;
  return {eps_x / d, eps_y * (1.0 - eps_x) / d, eps_x * (1.0 - eps_y) / d, eps_y / d};
}

double configuration_likelihood(double eps_x, double eps_y, const TrapConfiguration& c) {
  const ExitLaw p = exit_law(eps_x, eps_y);
  auto term = [](double prob, std::int64_t n) { return n == 0 ? 0.0 : static_cast<double>(n) * std::log(prob); };
  return std::exp(term(p.xx, c.n_xx) + term(p.xy, c.n_xy) + term(p.yx, c.n_yx) + term(p.yy, c.n_yy));
}

double sample_beta(double a, double b, Rng& rng) {
  const double lx = log_gamma_variate(a, rng);
  const double ly = log_gamma_variate(b, rng);
  return 1.0 / (1.0 + std::exp(ly - lx));
}

EdgeDraw sample_trap_edge_naive(const AlphaParams& alpha, int dir, Rng& rng, std::uint64_t* attempts) {
  alpha.validate();
  RWDE_REQUIRE(dir >= 0 && dir < alpha.directions(), ErrorKind::Parameter, "edge direction out of range");
  const int back = opposite(dir, alpha.d);
  std::array<double, 2 * kMaxDim> wx{};
  std::array<double, 2 * kMaxDim> wy{};
  const std::span<double> ox(wx.data(), alpha.weights.size());
  const std::span<double> oy(wy.data(), alpha.weights.size());
  for (;;) {
    if (attempts) ++*attempts;
    sample_dirichlet(alpha.weights, rng, ox);
    sample_dirichlet(alpha.weights, rng, oy);
    const double fx = ox[static_cast<std::size_t>(dir)];
    const double fy = oy[static_cast<std::size_t>(back)];
    if (is_trap(fx, fy)) return {1.0 - fx, 1.0 - fy, 1.0};
  }
}

namespace {

// eps ~ Beta(a, b) conditioned on eps < 1/2: propose from the density eps^{a-1} on
// (0, 1/2) and accept with (1 - eps)^{b-1} over its maximum on that interval.
double truncated_escape(double a, double b, Rng& rng) {
  const double log_max = b >= 1.0 ? 0.0 : (1.0 - b) * std::log(2.0);
  for (;;) {
    const double eps = 0.5 * std::exp(std::log(rng.uniform()) / a);
    if (std::log(rng.uniform()) <= (b - 1.0) * std::log1p(-eps) - log_max) return eps;
  }
}

}  // namespace

EdgeDraw sample_trap_edge(const EdgeLaw& law, Rng& rng, const TrapConfiguration* config) {
  for (;;) {
    const double ex = truncated_escape(law.a_x, law.b_x, rng);
    const double ey = truncated_escape(law.a_y, law.b_y, rng);
    if (ex + ey >= 0.5) continue;
    if (config && rng.uniform() > configuration_likelihood(ex, ey, *config)) continue;
    return {ex, ey, 1.0};
  }
}

EdgeDraw sample_trap_edge_weighted(const EdgeLaw& law, const TrapConfiguration& c, Rng& rng) {
  RadialPoint p;
  p.r = 0.25 * std::exp(std::log(rng.uniform()) / law.kappa_j());
  const double u = sample_beta(static_cast<double>(c.n_x()) + law.a_x, static_cast<double>(c.n_y()) + law.a_y, rng);
  p.k = 2.0 * u - 1.0;
  EdgeDraw d;
  from_radial(p, d.eps_x, d.eps_y);
  const double n = static_cast<double>(c.total());
  const double log_w = (static_cast<double>(c.n_xy) + law.b_x - 1.0) * std::log1p(-d.eps_x) +
                       (static_cast<double>(c.n_yx) + law.b_y - 1.0) * std::log1p(-d.eps_y) -
                       n * std::log1p(-d.eps_x * d.eps_y / (d.eps_x + d.eps_y));
  d.weight = std::exp(log_w);
  return d;
}

std::vector<double> oracle_strengths(const EdgeLaw& law, std::size_t count, std::uint64_t seed,
                                     const TrapConfiguration* config) {
  Rng rng(seed);
  std::vector<double> out(count);
  for (auto& s : out) s = sample_trap_edge(law, rng, config).strength();
  return out;
}

std::vector<double> weighted_survival(std::span<const EdgeDraw> draws, std::span<const double> grid) {
  std::vector<double> out(grid.size(), 0.0);
  double total = 0.0;
  for (const auto& d : draws) {
    total += d.weight;
    const double s = d.strength();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (s >= grid[i]) out[i] += d.weight;
    }
  }
  RWDE_REQUIRE(total > 0.0, ErrorKind::StatisticalPower, "no weighted mass");
  for (auto& v : out) v /= total;
  return out;
}

stats::LinearFit weighted_tail_slope(std::span<const EdgeDraw> draws, std::span<const double> grid) {
  const auto surv = weighted_survival(draws, grid);
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (surv[i] <= 0.0) continue;
    lx.push_back(std::log(grid[i]));
    ly.push_back(std::log(surv[i]));
  }
  RWDE_REQUIRE(lx.size() >= 2, ErrorKind::StatisticalPower, "tail slope needs two populated grid points");
  return stats::linear_fit(lx, ly);
}

}  // namespace rwde
