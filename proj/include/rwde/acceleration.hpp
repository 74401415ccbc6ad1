#pragma once

// Acceleration functions: the inverse weight of all simple paths from a site to the
// border of a region around it, on the lattice and on finite graphs with a cemetery
// vertex, plus the continuous-time walk that jumps at these rates.

#include <cstdint>
#include <span>
#include <vector>

#include "rwde/dirichlet.hpp"
#include "rwde/lattice.hpp"
#include "rwde/walk.hpp"

namespace rwde {

/// Region around the centre x whose interior the paths may use:
/// SupBox interior {y : |y - x|_inf < m}, L1Ball interior {y : |y - x|_1 < m}.
enum class RegionShape { SupBox, L1Ball };
const char* to_string(RegionShape s);

/// Directed weighted graph with a cemetery vertex that has no outgoing edges.
struct FiniteGraph {
  struct Arc {
    std::size_t to = 0;
    double weight = 0.0;
  };
  std::vector<std::vector<Arc>> out;
  std::size_t cemetery = 0;

  std::size_t size() const noexcept { return out.size(); }
  /// Throws ErrorKind::Precondition unless: the cemetery has no outgoing edges, weights are in
  /// (0, 1] and sum to 1 at every other vertex, no self-loops, arcs between non-cemetery
  /// vertices come in both directions, and every vertex reaches the cemetery.
  void validate() const;
};

struct EnumerationLimits {
  std::uint64_t max_expansions = 4'000'000'000ULL;  // DFS edge traversals before a capability error
  double prune_below = 1e-280;                      // running products below this contribute nothing
};

/// Sum over simple paths from x to the border of the region, with the number of paths.
struct PathSum {
  double total = 0.0;
  std::uint64_t paths = 0;
  std::uint64_t pruned = 0;
  std::uint64_t expansions = 0;
  /// 1 / total; throws ErrorKind::Divergence when the sum is zero.
  double gamma() const;
};

/// Paths start at x, stay in `region` (vertex subset containing x) and stop at the first
/// vertex outside it.
PathSum path_sum_finite(const FiniteGraph& graph, std::size_t x, std::span<const std::size_t> region,
                        const EnumerationLimits& limits = {});
double gamma_finite(const FiniteGraph& graph, std::size_t x, std::span<const std::size_t> region,
                    const EnumerationLimits& limits = {});

constexpr int kDefaultMaxRadius = 2;

/// Path sum on the lattice around x. Throws ErrorKind::Capability when m > m_max or the
/// enumeration exceeds its budget, ErrorKind::Parameter when m < 1.
PathSum path_sum_lattice(const TransitionField& field, const Site& x, int m, RegionShape shape = RegionShape::SupBox,
                         int m_max = kDefaultMaxRadius, const EnumerationLimits& limits = {});
double gamma_lattice(const TransitionField& field, const Site& x, int m, RegionShape shape = RegionShape::SupBox,
                     int m_max = kDefaultMaxRadius, const EnumerationLimits& limits = {});

/// max over neighbours y of 1 / ((1 - omega(x,y)) + (1 - omega(y,x))).
double gamma_partial(const TransitionField& field, const Site& x);

/// The region around `center` with everything outside merged into the cemetery.
/// Interior edges are copied; mass towards outside sites is summed onto the cemetery arc.
struct ContractedGraph {
  FiniteGraph graph;
  std::vector<Site> sites;  // sites[v] for every non-cemetery vertex v
  std::size_t center = 0;
  std::vector<std::size_t> interior() const;  // all non-cemetery vertices
};
ContractedGraph contract_to_finite(const TransitionField& field, const Site& center, int m,
                                   RegionShape shape = RegionShape::L1Ball);

struct AcceleratedTrajectory {
  Trajectory jumps;                // embedded jump chain
  std::vector<double> jump_times;  // t_0 = 0 < t_1 < ..., one per position
  std::vector<double> rates;       // gamma at the position before each jump (one per jump)

  explicit AcceleratedTrajectory(int dim) : jumps(dim) {}
};

struct AcceleratedOptions {
  int m = 1;
  RegionShape shape = RegionShape::SupBox;
  int m_max = kDefaultMaxRadius;
  /// Total DFS expansions over all distinct visited sites.
  std::uint64_t budget = 2'000'000'000ULL;
};

/// Jump chain driven by Rng(walk_seed) exactly as simulate_walk; the holding time at Y_k is
/// E_k / gamma(Y_k) with E_k from an independent stream, so t_n = sum_{k<n} E_k / gamma(Y_k).
/// gamma is memoized per site. Throws ErrorKind::Capability when the budget runs out.
AcceleratedTrajectory simulate_accelerated(const TransitionField& field, std::uint64_t walk_seed, std::size_t jumps,
                                           const AcceleratedOptions& options = {});

}  // namespace rwde
