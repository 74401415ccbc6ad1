#pragma once

// Single-edge sampler for the environment on one edge {x, x + e} conditioned on the
// edge being a trap, optionally also conditioned on a visit configuration. Used as the
// reference law for the trap-strength tail tests.
//
// Notation: eps_x = 1 - omega(x, y), eps_y = 1 - omega(y, x). The edge is a trap iff
// eps_x + eps_y < 1/2, and its strength is 1 / (eps_x + eps_y).

#include <cstdint>
#include <span>
#include <vector>

#include "rwde/dirichlet.hpp"
#include "rwde/rng.hpp"
#include "rwde/stats.hpp"
#include "rwde/traps.hpp"

namespace rwde {

/// Beta exponents of the two escape probabilities for an edge in direction `dir`:
/// eps_x ~ Beta(a_x, b_x), eps_y ~ Beta(a_y, b_y), independent.
struct EdgeLaw {
  int dir = 0;
  int axis = 0;
  double a_x = 0.0;  // alpha_bar - alpha(dir)
  double b_x = 0.0;  // alpha(dir)
  double a_y = 0.0;
  double b_y = 0.0;
  double kappa_j() const noexcept { return a_x + a_y; }
};
EdgeLaw edge_law(const AlphaParams& alpha, int dir);

/// eps_x = r (1 + k), eps_y = r (1 - k), so r = (eps_x + eps_y) / 2 and strength = 1 / (2 r).
struct RadialPoint {
  double r = 0.0;
  double k = 0.0;
};
RadialPoint to_radial(double eps_x, double eps_y);
void from_radial(const RadialPoint& p, double& eps_x, double& eps_y);

/// Probability that a visit entered at `from` is left from `to` (x or y), with
/// D = eps_x + eps_y - eps_x eps_y: p(x,x) = eps_x / D, p(x,y) = eps_y (1 - eps_x) / D, ...
struct ExitLaw {
  double xx = 0.0;
  double xy = 0.0;
  double yx = 0.0;
  double yy = 0.0;
};
ExitLaw exit_law(double eps_x, double eps_y);
/// prod p^N over the four entry/exit pairs; at most 1.
double configuration_likelihood(double eps_x, double eps_y, const TrapConfiguration& config);

struct EdgeDraw {
  double eps_x = 0.0;
  double eps_y = 0.0;
  double weight = 1.0;
  double strength() const noexcept { return 1.0 / (eps_x + eps_y); }
};

/// Full two-site Dirichlet draws until the edge is a trap. Slow for small weights;
/// `attempts`, when given, accumulates the number of draws.
EdgeDraw sample_trap_edge_naive(const AlphaParams& alpha, int dir, Rng& rng, std::uint64_t* attempts = nullptr);

/// Exact draw of the trap-conditioned edge from the Beta marginals restricted to
/// eps < 1/2, followed by rejection on eps_x + eps_y < 1/2 and, when `config` is given,
/// on the configuration likelihood.
EdgeDraw sample_trap_edge(const EdgeLaw& law, Rng& rng, const TrapConfiguration* config = nullptr);

/// Weighted draw for a configuration: r from density r^{kappa_j - 1} on (0, 1/4),
/// (1 + k) / 2 from Beta(N_x + a_x, N_y + a_y), weight = the remaining density factor.
EdgeDraw sample_trap_edge_weighted(const EdgeLaw& law, const TrapConfiguration& config, Rng& rng);

/// Strength samples from the exact sampler (weights all 1).
std::vector<double> oracle_strengths(const EdgeLaw& law, std::size_t count, std::uint64_t seed,
                                     const TrapConfiguration* config = nullptr);

/// Weighted survival P(s >= A) on a grid and its log-log slope.
std::vector<double> weighted_survival(std::span<const EdgeDraw> draws, std::span<const double> grid);
stats::LinearFit weighted_tail_slope(std::span<const EdgeDraw> draws, std::span<const double> grid);

/// Beta(a, b) variate.
double sample_beta(double a, double b, Rng& rng);

}  // namespace rwde
