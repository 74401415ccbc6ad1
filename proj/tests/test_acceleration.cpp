#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>

#include "rwde/acceleration.hpp"
#include "rwde/dirichlet.hpp"
#include "rwde/stats.hpp"
#include "rwde/traps.hpp"
#include "rwde/walk.hpp"

using namespace rwde;

namespace {

using Arc = FiniteGraph::Arc;

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Internal;
}

// c1 - a - b - c2 with c1 the cemetery; c2 can step back to b or die.
FiniteGraph line_graph() {
  FiniteGraph g;
  g.out.resize(4);
  g.cemetery = 2;
  g.out[0] = {Arc{2, 0.4}, Arc{1, 0.6}};
  g.out[1] = {Arc{0, 0.5}, Arc{3, 0.5}};
  g.out[3] = {Arc{1, 0.3}, Arc{2, 0.7}};
  return g;
}

// Random symmetric graph on n vertices plus a cemetery, every vertex linked to the cemetery.
FiniteGraph random_graph(std::size_t n, Rng& rng) {
  FiniteGraph g;
  g.out.resize(n + 1);
  g.cemetery = n;
  std::vector<std::vector<std::size_t>> nb(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (rng.uniform() < 0.35) {
        nb[a].push_back(b);
        nb[b].push_back(a);
      }
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    std::vector<double> w(nb[a].size() + 1);
    double total = 0.0;
    for (auto& v : w) total += (v = 0.05 + rng.uniform());
    for (std::size_t k = 0; k < nb[a].size(); ++k) g.out[a].push_back({nb[a][k], w[k] / total});
    g.out[a].push_back({n, w.back() / total});
  }
  return g;
}

// Plain recursion with an explicit visited vector.
void count_paths(const FiniteGraph& g, std::size_t v, const std::vector<bool>& inside, std::vector<bool>& seen,
                 double weight, std::uint64_t& paths, double& total) {
  seen[v] = true;
  for (const auto& a : g.out[v]) {
    if (!inside[a.to]) {
      ++paths;
      total += weight * a.weight;
    } else if (!seen[a.to]) {
      count_paths(g, a.to, inside, seen, weight * a.weight, paths, total);
    }
  }
  seen[v] = false;
}

}  // namespace

TEST_CASE("hand-enumerated path sums") {
  const FiniteGraph g = line_graph();
  g.validate();
  const std::vector<std::size_t> ab{0, 1};
  const auto sum = path_sum_finite(g, 0, ab);
  CHECK(sum.paths == 2);
  CHECK(sum.total == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(gamma_finite(g, 0, ab) == doctest::Approx(10.0 / 7.0).epsilon(1e-15));
  const std::vector<std::size_t> only_a{0};
  CHECK(gamma_finite(g, 0, only_a) == doctest::Approx(1.0).epsilon(1e-15));

  FiniteGraph star;
  star.out.resize(5);
  star.cemetery = 4;
  star.out[0] = {Arc{1, 0.2}, Arc{2, 0.3}, Arc{3, 0.5}};
  for (std::size_t v = 1; v <= 3; ++v) star.out[v] = {Arc{0, 0.5}, Arc{4, 0.5}};
  star.validate();
  const std::vector<std::size_t> centre{0};
  CHECK(gamma_finite(star, 0, centre) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("graph validation and divergence") {
  FiniteGraph g = line_graph();
  g.out[0][0].weight = 0.5;
  CHECK(kind_of([&] { g.validate(); }) == ErrorKind::Precondition);
  g = line_graph();
  g.out[2] = {Arc{0, 1.0}};
  CHECK(kind_of([&] { g.validate(); }) == ErrorKind::Precondition);
  g = line_graph();
  g.out[3] = {Arc{2, 1.0}};  // b -> c2 without its reverse
  CHECK(kind_of([&] { g.validate(); }) == ErrorKind::Precondition);

  FiniteGraph closed;
  closed.out.resize(3);
  closed.cemetery = 2;
  closed.out[0] = {Arc{1, 1.0}};
  closed.out[1] = {Arc{0, 1.0}};
  CHECK(kind_of([&] { closed.validate(); }) == ErrorKind::Precondition);
  const std::vector<std::size_t> both{0, 1};
  CHECK(kind_of([&] { gamma_finite(closed, 0, both); }) == ErrorKind::Divergence);
}

TEST_CASE("enumeration agrees with a recursive counter on small graphs") {
  Rng rng(8);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 2 + rng.below(11);  // up to 12 vertices with the cemetery
    const FiniteGraph g = random_graph(n, rng);
    g.validate();
    std::vector<std::size_t> region{0};
    std::vector<bool> inside(n + 1, false);
    inside[0] = true;
    for (std::size_t v = 1; v < n; ++v) {
      if (rng.uniform() < 0.8) {
        region.push_back(v);
        inside[v] = true;
      }
    }
    std::vector<bool> seen(n + 1, false);
    std::uint64_t paths = 0;
    double total = 0.0;
    count_paths(g, 0, inside, seen, 1.0, paths, total);
    const auto sum = path_sum_finite(g, 0, region);
    REQUIRE(sum.paths == paths);
    REQUIRE(sum.total == doctest::Approx(total).epsilon(1e-12));
    // The largest single-path weight bounds the sum from below.
    double best = 0.0;
    for (const auto& a : g.out[0]) {
      if (!inside[a.to]) best = std::max(best, a.weight);
    }
    CHECK(sum.total >= best);
  }
}

TEST_CASE("lattice acceleration at radius one is one") {
  for (int d : {1, 2, 3}) {
    const Environment env(AlphaParams::symmetric(d, 0.2), 3);
    for (int i = 0; i < 20; ++i) {
      Site x{};
      x[0] = i;
      CHECK(gamma_lattice(env, x, 1) == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(gamma_lattice(env, x, 1, RegionShape::L1Ball) == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("lattice and contracted graph agree") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Environment e2(AlphaParams(2, {0.3, 0.2, 0.1, 0.2}), seed);
    for (RegionShape shape : {RegionShape::SupBox, RegionShape::L1Ball}) {
      for (int m : {1, 2}) {
        const auto c = contract_to_finite(e2, Site{}, m, shape);
        c.graph.validate();
        const auto interior = c.interior();
        const double lattice = gamma_lattice(e2, Site{}, m, shape);
        CHECK(std::abs(lattice - gamma_finite(c.graph, c.center, interior)) <= 1e-12 * lattice);
      }
    }
    const Environment e3(AlphaParams(3, {0.15, 0.05, 0.05, 0.05, 0.05, 0.05}), seed);
    const auto c = contract_to_finite(e3, Site{}, 2, RegionShape::L1Ball);
    const auto interior = c.interior();
    const double lattice = gamma_lattice(e3, Site{}, 2, RegionShape::L1Ball);
    CHECK(std::abs(lattice - gamma_finite(c.graph, c.center, interior)) <= 1e-12 * lattice);
  }
}

TEST_CASE("contraction keeps the interior and conserves mass") {
  const Environment env(AlphaParams::symmetric(3, 0.1), 4);
  const auto l1 = contract_to_finite(env, Site{{2, 0, -1}}, 2, RegionShape::L1Ball);
  CHECK(l1.graph.size() == 7 + 1);
  const auto box = contract_to_finite(env, Site{}, 2, RegionShape::SupBox);
  CHECK(box.graph.size() == 27 + 1);
  const auto l1_3 = contract_to_finite(env, Site{}, 3, RegionShape::L1Ball);
  CHECK(l1_3.graph.size() == 25 + 1);
  for (const auto* c : {&l1, &box, &l1_3}) {
    for (std::size_t v = 0; v < c->graph.size(); ++v) {
      if (v == c->graph.cemetery) continue;
      double total = 0.0;
      for (const auto& a : c->graph.out[v]) total += a.weight;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("radius guards") {
  const Environment env(AlphaParams::symmetric(3, 0.1), 4);
  CHECK(kind_of([&] { gamma_lattice(env, Site{}, 3); }) == ErrorKind::Capability);
  CHECK(kind_of([&] { gamma_lattice(env, Site{}, 0); }) == ErrorKind::Parameter);
}

TEST_CASE("partial acceleration") {
  PatchedField field(2);
  field.set_edge(Site{}, 0, 0.9, 0.8);
  CHECK(gamma_partial(field, Site{}) == doctest::Approx(10.0 / 3.0));
  CHECK(gamma_partial(field, Site{{1, 0}}) == doctest::Approx(10.0 / 3.0));

  const AlphaParams alpha(3, {0.15, 0.05, 0.05, 0.05, 0.05, 0.05});
  const Environment env(alpha, 9);
  const FieldTrapLookup lookup(env);
  const auto edges = box_edges(3, 5);
  std::size_t in_trap = 0;
  for (const auto& e : edges) {
    const Site& x = e.x;
    const int pd = lookup.partner_dir(x);
    const double g = gamma_partial(env, x);
    if (pd >= 0) {
      ++in_trap;
      const Site y = neighbor(x, pd, 3);
      CHECK(g == doctest::Approx(trap_strength(env.at(x)[pd], env.at(y)[opposite(pd, 3)])));
    } else {
      CHECK(g <= 2.0);
    }
  }
  CHECK(in_trap > 0);
}

TEST_CASE("accelerated walk") {
  const AlphaParams alpha(2, {0.5, 0.2, 0.3, 0.2});
  const Environment env(alpha, 21);

  SUBCASE("radius one holds for Exp(1)") {
    const auto acc = simulate_accelerated(env, 3, 100000);
    std::vector<double> hold;
    for (std::size_t k = 0; k + 1 < acc.jump_times.size(); ++k) hold.push_back(acc.jump_times[k + 1] - acc.jump_times[k]);
    CHECK(std::abs(stats::mean(hold) - 1.0) < 3 * stats::standard_error(hold));
    for (double r : acc.rates) CHECK(r == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(acc.jumps.moves() == simulate_walk(env, 3, 100000).moves());
  }

  SUBCASE("holding times at a site are exponential at rate gamma") {
    AcceleratedOptions opt;
    opt.m = 2;
    const auto acc = simulate_accelerated(env, 5, 50000, opt);
    CHECK(acc.jumps.moves() == simulate_walk(env, 5, 50000).moves());
    const auto pos = acc.jumps.positions();
    std::map<Site, std::vector<double>> by_site;
    for (std::size_t k = 0; k + 1 < acc.jump_times.size(); ++k) {
      by_site[pos[k]].push_back((acc.jump_times[k + 1] - acc.jump_times[k]) * acc.rates[k]);
    }
    const auto busiest = std::max_element(by_site.begin(), by_site.end(),
                                          [](const auto& a, const auto& b) { return a.second.size() < b.second.size(); });
    REQUIRE(busiest->second.size() > 200);
    const double rate = gamma_lattice(env, busiest->first, 2);
    for (std::size_t k = 0; k + 1 < acc.jump_times.size(); ++k) {
      if (pos[k] == busiest->first) CHECK(acc.rates[k] == rate);
    }
    const double ks = stats::ks_one_sample(busiest->second, [](double t) { return 1.0 - std::exp(-t); });
    const double n = static_cast<double>(busiest->second.size());
    CHECK(stats::kolmogorov_survival(ks * std::sqrt(n)) > 0.001);
  }
}

TEST_CASE("occupation time at the origin") {
  // Total time spent at the origin over many replicas against visits / gamma.
  const AlphaParams alpha(2, {0.5, 0.2, 0.3, 0.2});
  const Environment env(alpha, 22);
  AcceleratedOptions opt;
  opt.m = 2;
  const double rate = gamma_lattice(env, Site{}, 2);
  double time = 0.0;
  double visits = 0.0;
  for (std::uint64_t rep = 0; rep < 2000; ++rep) {
    const auto acc = simulate_accelerated(env, 1000 + rep, 200, opt);
    const auto pos = acc.jumps.positions();
    for (std::size_t k = 0; k + 1 < pos.size(); ++k) {
      if (pos[k] == Site{}) {
        visits += 1.0;
        time += acc.jump_times[k + 1] - acc.jump_times[k];
      }
    }
  }
  CHECK(std::abs(time - visits / rate) < 4.0 * std::sqrt(visits) / rate);
}
