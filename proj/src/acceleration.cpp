#include "rwde/acceleration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "rwde/error.hpp"
#include "rwde/site_cache.hpp"
#include "rwde/traps.hpp"

namespace rwde {

const char* to_string(RegionShape s) { return s == RegionShape::SupBox ? "sup" : "l1"; }

void FiniteGraph::validate() const {
  RWDE_REQUIRE(cemetery < out.size(), ErrorKind::Precondition, "cemetery vertex out of range");
  RWDE_REQUIRE(out[cemetery].empty(), ErrorKind::Precondition, "the cemetery has outgoing edges");
  std::vector<std::map<std::size_t, double>> arcs(out.size());
  for (std::size_t v = 0; v < out.size(); ++v) {
    if (v == cemetery) continue;
    double total = 0.0;
    for (const auto& a : out[v]) {
      RWDE_REQUIRE(a.to < out.size(), ErrorKind::Precondition, "arc to an unknown vertex");
      RWDE_REQUIRE(a.to != v, ErrorKind::Precondition, "self-loop");
      RWDE_REQUIRE(a.weight > 0.0 && a.weight <= 1.0, ErrorKind::Precondition, "arc weight outside (0, 1]");
      RWDE_REQUIRE(arcs[v].emplace(a.to, a.weight).second, ErrorKind::Precondition, "parallel arcs");
      total += a.weight;
    }
    RWDE_REQUIRE(std::abs(total - 1.0) <= 1e-9, ErrorKind::Precondition, "outgoing weights do not sum to 1");
  }
  for (std::size_t v = 0; v < out.size(); ++v) {
    for (const auto& [to, w] : arcs[v]) {
      if (to == cemetery) continue;
      RWDE_REQUIRE(arcs[to].count(v) == 1, ErrorKind::Precondition, "arc without its reverse");
    }
  }
  // Backwards search from the cemetery.
  std::vector<std::vector<std::size_t>> into(out.size());
  for (std::size_t v = 0; v < out.size(); ++v) {
    for (const auto& a : out[v]) into[a.to].push_back(v);
  }
  std::vector<char> reach(out.size(), 0);
  std::vector<std::size_t> queue{cemetery};
  reach[cemetery] = 1;
  while (!queue.empty()) {
    const auto v = queue.back();
    queue.pop_back();
    for (auto u : into[v]) {
      if (!reach[u]) {
        reach[u] = 1;
        queue.push_back(u);
      }
    }
  }
  RWDE_REQUIRE(std::all_of(reach.begin(), reach.end(), [](char c) { return c != 0; }), ErrorKind::Precondition,
               "a vertex cannot reach the cemetery");
}

double PathSum::gamma() const {
  RWDE_REQUIRE(total > 0.0, ErrorKind::Divergence, "no path reaches the border; acceleration diverges");
  return 1.0 / total;
}

namespace {

struct Kahan {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

// Depth-first enumeration over a flat arc table: arcs of vertex v occupy
// [first[v], first[v + 1]) with target -1 for a border vertex.
struct ArcTable {
  std::vector<std::size_t> first;
  std::vector<std::int32_t> to;
  std::vector<double> weight;
};

PathSum enumerate(const ArcTable& g, std::size_t start, const EnumerationLimits& limits) {
  struct Frame {
    std::size_t v;
    std::size_t next;
    std::size_t end;
    double product;
  };
  const std::size_t vertices = g.first.size() - 1;
  PathSum result;
  Kahan acc;
  std::vector<char> on_path(vertices, 0);
  std::vector<Frame> stack;
  stack.reserve(vertices + 1);
  stack.push_back({start, g.first[start], g.first[start + 1], 1.0});
  on_path[start] = 1;
  std::uint64_t expansions = 0;
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next == f.end) {
      on_path[f.v] = 0;
      stack.pop_back();
      continue;
    }
    const std::size_t a = f.next++;
    ++expansions;
    const double p = f.product * g.weight[a];
    const std::int32_t to = g.to[a];
    if (to < 0) {
      if (p < limits.prune_below) {
        ++result.pruned;
      } else {
        acc.add(p);
        ++result.paths;
      }
      continue;
    }
    const auto t = static_cast<std::size_t>(to);
    if (on_path[t]) continue;
    if (p < limits.prune_below) {
      ++result.pruned;
      continue;
    }
    if (expansions > limits.max_expansions) throw Error(ErrorKind::Capability, "path enumeration exceeded its budget");
    on_path[t] = 1;
    stack.push_back({t, g.first[t], g.first[t + 1], p});
  }
  result.expansions = expansions;
  result.total = acc.sum;
  return result;
}

}  // namespace

PathSum path_sum_finite(const FiniteGraph& graph, std::size_t x, std::span<const std::size_t> region,
                        const EnumerationLimits& limits) {
  const std::size_t n = graph.size();
  std::vector<char> inside(n, 0);
  for (auto v : region) {
    RWDE_REQUIRE(v < n, ErrorKind::Precondition, "region vertex out of range");
    inside[v] = 1;
  }
  RWDE_REQUIRE(x < n && inside[x], ErrorKind::Precondition, "start vertex must lie in the region");
  ArcTable table;
  table.first.push_back(0);
  for (std::size_t v = 0; v < n; ++v) {
    if (inside[v]) {
      for (const auto& a : graph.out[v]) {
        table.to.push_back(inside[a.to] ? static_cast<std::int32_t>(a.to) : -1);
        table.weight.push_back(a.weight);
      }
    }
    table.first.push_back(table.to.size());
  }
  return enumerate(table, x, limits);
}

double gamma_finite(const FiniteGraph& graph, std::size_t x, std::span<const std::size_t> region,
                    const EnumerationLimits& limits) {
  return path_sum_finite(graph, x, region, limits).gamma();
}

namespace {

bool interior_offset(const Site& off, int dim, int m, RegionShape shape) {
  return shape == RegionShape::SupBox ? sup_norm(off, dim) < m : l1_norm(off, dim) < m;
}

}  // namespace

PathSum path_sum_lattice(const TransitionField& field, const Site& x, int m, RegionShape shape, int m_max,
                         const EnumerationLimits& limits) {
  RWDE_REQUIRE(m >= 1, ErrorKind::Parameter, "region radius must be at least 1");
  RWDE_REQUIRE(m <= m_max, ErrorKind::Capability, "region radius above the enumeration cap");
  const int dim = field.dim();
  const int width = 2 * m + 1;
  std::size_t cells = 1;
  for (int i = 0; i < dim; ++i) cells *= static_cast<std::size_t>(width);

  auto offset_of = [&](std::size_t cell) {
    Site off{};
    for (int i = 0; i < dim; ++i) {
      off[i] = static_cast<std::int32_t>(cell % static_cast<std::size_t>(width)) - m;
      cell /= static_cast<std::size_t>(width);
    }
    return off;
  };
  auto cell_of = [&](const Site& off) {
    std::size_t cell = 0;
    for (int i = dim - 1; i >= 0; --i) cell = cell * static_cast<std::size_t>(width) + static_cast<std::size_t>(off[i] + m);
    return cell;
  };

  ArcTable table;
  table.first.push_back(0);
  for (std::size_t c = 0; c < cells; ++c) {
    const Site off = offset_of(c);
    if (interior_offset(off, dim, m, shape)) {
      const SiteDistribution w = field.at(sum(x, off));
      for (int dir = 0; dir < 2 * dim; ++dir) {
        const Site next = neighbor(off, dir, dim);
        const bool in = interior_offset(next, dim, m, shape);
        table.to.push_back(in ? static_cast<std::int32_t>(cell_of(next)) : -1);
        table.weight.push_back(w[dir]);
      }
    }
    table.first.push_back(table.to.size());
  }
  return enumerate(table, cell_of(Site{}), limits);
}

double gamma_lattice(const TransitionField& field, const Site& x, int m, RegionShape shape, int m_max,
                     const EnumerationLimits& limits) {
  return path_sum_lattice(field, x, m, shape, m_max, limits).gamma();
}

double gamma_partial(const TransitionField& field, const Site& x) {
  const int dim = field.dim();
  const SiteDistribution here = field.at(x);
  double best = 0.0;
  for (int dir = 0; dir < 2 * dim; ++dir) {
    const double back = field.at(neighbor(x, dir, dim))[opposite(dir, dim)];
    best = std::max(best, trap_strength(here[dir], back));
  }
  return best;
}

std::vector<std::size_t> ContractedGraph::interior() const {
  std::vector<std::size_t> v(sites.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
  return v;
}

ContractedGraph contract_to_finite(const TransitionField& field, const Site& center, int m, RegionShape shape) {
  RWDE_REQUIRE(m >= 1, ErrorKind::Parameter, "region radius must be at least 1");
  const int dim = field.dim();
  ContractedGraph g;
  std::map<Site, std::size_t> index;
  // Breadth-first over the interior starting at the centre.
  g.sites.push_back(center);
  index[center] = 0;
  for (std::size_t i = 0; i < g.sites.size(); ++i) {
    for (int dir = 0; dir < 2 * dim; ++dir) {
      const Site y = neighbor(g.sites[i], dir, dim);
      if (!interior_offset(difference(y, center), dim, m, shape) || index.count(y)) continue;
      index[y] = g.sites.size();
      g.sites.push_back(y);
    }
  }
  g.center = 0;
  g.graph.cemetery = g.sites.size();
  g.graph.out.resize(g.sites.size() + 1);
  for (std::size_t i = 0; i < g.sites.size(); ++i) {
    const SiteDistribution w = field.at(g.sites[i]);
    double to_cemetery = 0.0;
    for (int dir = 0; dir < 2 * dim; ++dir) {
      const auto it = index.find(neighbor(g.sites[i], dir, dim));
      if (it == index.end()) {
        to_cemetery += w[dir];
      } else {
        g.graph.out[i].push_back({it->second, w[dir]});
      }
    }
    if (to_cemetery > 0.0) g.graph.out[i].push_back({g.graph.cemetery, to_cemetery});
  }
  return g;
}

AcceleratedTrajectory simulate_accelerated(const TransitionField& field, std::uint64_t walk_seed, std::size_t jumps,
                                           const AcceleratedOptions& options) {
  RWDE_REQUIRE(options.m >= 1, ErrorKind::Parameter, "region radius must be at least 1");
  RWDE_REQUIRE(options.m <= options.m_max, ErrorKind::Capability, "region radius above the enumeration cap");
  SiteCache cache(field);
  CachedWalk walk(cache, walk_seed);
  Rng clock(derive_seed(walk_seed, 0xC10C, 0));
  std::vector<double> memo;
  std::uint64_t spent = 0;
  auto gamma_at = [&](std::int32_t idx) {
    const auto i = static_cast<std::size_t>(idx);
    if (memo.size() <= i) memo.resize(i + 1, std::numeric_limits<double>::quiet_NaN());
    if (std::isnan(memo[i])) {
      EnumerationLimits limits;
      limits.max_expansions = options.budget - spent;
      const PathSum ps = path_sum_lattice(field, cache.site(idx), options.m, options.shape, options.m_max, limits);
      spent += ps.expansions;
      memo[i] = ps.gamma();
    }
    return memo[i];
  };

  AcceleratedTrajectory out(field.dim());
  out.jump_times.reserve(jumps + 1);
  out.rates.reserve(jumps);
  out.jump_times.push_back(0.0);
  double t = 0.0;
  std::int32_t here = walk.current();
  walk.advance(static_cast<std::int64_t>(jumps), [&](std::int64_t, std::int32_t next, int dir) {
    const double rate = gamma_at(here);
    t += clock.exponential() / rate;
    out.rates.push_back(rate);
    out.jump_times.push_back(t);
    out.jumps.push(dir);
    here = next;
  });
  return out;
}

}  // namespace rwde
