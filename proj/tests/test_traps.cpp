#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "rwde/dirichlet.hpp"
#include "rwde/stats.hpp"
#include "rwde/trap_oracle.hpp"
#include "rwde/traps.hpp"
#include "rwde/walk.hpp"

#include "oracles.hpp"

using namespace rwde;
using oracle::FrozenTrapLine;

namespace {

// Independent forgetting: maximal runs inside one trap edge collapse to their entry
// vertex, plus the exit vertex when it differs. A run still open at the end is dropped.
ForgottenPath rescan_forget(const std::vector<Site>& p, int dim, const TrapLookup& traps) {
  ForgottenPath out;
  std::size_t i = 0;
  while (i < p.size()) {
    const int pd = traps.partner_dir(p[i]);
    if (pd < 0) {
      out.positions.push_back(p[i]);
      out.times.push_back(static_cast<std::int64_t>(i));
      ++i;
      continue;
    }
    const Site a = p[i];
    const Site b = neighbor(a, pd, dim);
    std::size_t j = i;
    while (j + 1 < p.size() && (p[j + 1] == a || p[j + 1] == b)) ++j;
    if (j + 1 == p.size()) {
      out.truncated = true;
      break;
    }
    out.positions.push_back(a);
    out.times.push_back(static_cast<std::int64_t>(i));
    if (p[j] != a) {
      out.positions.push_back(p[j]);
      out.times.push_back(static_cast<std::int64_t>(j));
    }
    i = j + 1;
  }
  return out;
}

struct RandomCase {
  std::vector<Site> path;
  std::vector<Edge> traps;
};

// A random nearest-neighbour path on a small 2-d box with a random disjoint trap set;
// trap edges are made sticky so that oscillations actually occur.
RandomCase random_case(Rng& rng) {
  RandomCase c;
  std::vector<Site> used;
  for (const auto& e : box_edges(2, 3)) {
    if (rng.uniform() > 0.25) continue;
    const Site y = neighbor(e.x, e.dir, 2);
    if (std::find(used.begin(), used.end(), e.x) != used.end() || std::find(used.begin(), used.end(), y) != used.end())
      continue;
    used.push_back(e.x);
    used.push_back(y);
    c.traps.push_back(e);
  }
  const EdgeTrapLookup lookup(2, c.traps);
  const std::size_t len = 1 + rng.below(200);
  Site s{};
  c.path.push_back(s);
  while (c.path.size() < len) {
    const int pd = lookup.partner_dir(s);
    const int dir = pd >= 0 && rng.uniform() < 0.7 ? pd : static_cast<int>(rng.below(4));
    s = neighbor(s, dir, 2);
    c.path.push_back(s);
  }
  return c;
}

}  // namespace

TEST_CASE("trap predicate examples") {
  CHECK(is_trap(0.9, 0.8));
  CHECK(trap_strength(0.9, 0.8) == doctest::Approx(10.0 / 3.0));
  CHECK_FALSE(is_trap(0.7, 0.7));

  PatchedField field(2);
  field.set_edge(Site{}, 0, 0.9, 0.8);
  field.set_edge(Site{{0, 3}}, 1, 0.7, 0.7);
  const auto edges = box_edges(2, 4);
  const auto traps = find_traps(field, edges);
  REQUIRE(traps.size() == 1);
  CHECK(traps[0].x == Site{});
  CHECK(traps[0].y == Site{{1, 0}});
  CHECK(traps[0].axis == 0);
  CHECK(traps[0].strength == doctest::Approx(10.0 / 3.0));
}

TEST_CASE("sampled traps match the formula and never share a vertex") {
  const AlphaParams alpha(3, {0.15, 0.05, 0.05, 0.05, 0.05, 0.05});
  const auto edges = box_edges(3, 6);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Environment env(alpha, seed);
    const auto traps = find_traps(env, edges);
    CHECK(!traps.empty());
    std::vector<Site> vertices;
    for (const auto& t : traps) {
      const int dir = direction_between(t.x, t.y, 3);
      const double f = env.at(t.x)[dir];
      const double b = env.at(t.y)[opposite(dir, 3)];
      CHECK(t.forward == f);
      CHECK(t.backward == b);
      CHECK(t.strength == 1.0 / ((1.0 - f) + (1.0 - b)));
      vertices.push_back(t.x);
      vertices.push_back(t.y);
    }
    std::sort(vertices.begin(), vertices.end());
    CHECK(std::adjacent_find(vertices.begin(), vertices.end()) == vertices.end());
    // The field lookup sees exactly these traps.
    const FieldTrapLookup lookup(env);
    for (const auto& t : traps) CHECK(neighbor(t.x, lookup.partner_dir(t.x), 3) == t.y);
  }
}

TEST_CASE("forgetting examples") {
  const Site a{{-1, 0}};
  const Site x{};
  const Site y{{1, 0}};
  const Site z{{1, 1}};
  const std::vector<Edge> trap{{x, 0}};
  const EdgeTrapLookup lookup(2, trap);

  const std::vector<Site> osc{a, x, y, x, y, z};
  const auto f = forget_path(osc, 2, lookup);
  CHECK(f.positions == std::vector<Site>{a, x, y, z});
  CHECK(f.times == std::vector<std::int64_t>{0, 1, 4, 5});
  CHECK_FALSE(f.truncated);

  const std::vector<Site> same{a, x, y, x, a};
  CHECK(forget_path(same, 2, lookup).positions == std::vector<Site>{a, x, a});

  const std::vector<Site> free{a, Site{{-1, 1}}, Site{{-2, 1}}, Site{{-2, 0}}};
  CHECK(forget_path(free, 2, lookup).positions == free);

  const std::vector<Site> open{a, x, y, x};
  const auto g = forget_path(open, 2, lookup);
  CHECK(g.truncated);
  CHECK(g.positions == std::vector<Site>{a});
}

TEST_CASE("forgetting matches an independent re-scan and is idempotent") {
  Rng rng(101);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto c = random_case(rng);
    const EdgeTrapLookup lookup(2, c.traps);
    const auto once = forget_path(c.path, 2, lookup);
    const auto oracle = rescan_forget(c.path, 2, lookup);
    REQUIRE(once.positions == oracle.positions);
    REQUIRE(once.times == oracle.times);
    REQUIRE(once.truncated == oracle.truncated);
    // Idempotence needs the precondition: every visited trap is left.
    if (!once.truncated) {
      const auto twice = forget_path(once.positions, 2, lookup);
      REQUIRE(twice.positions == once.positions);
    }
    // No three consecutive kept positions inside one trap edge.
    for (std::size_t i = 0; i + 2 < once.positions.size(); ++i) {
      const int pd = lookup.partner_dir(once.positions[i]);
      if (pd < 0) continue;
      const Site b = neighbor(once.positions[i], pd, 2);
      const auto in = [&](const Site& s) { return s == once.positions[i] || s == b; };
      CHECK_FALSE((in(once.positions[i + 1]) && in(once.positions[i + 2])));
    }
  }
}

TEST_CASE("configurations agree between the forgotten path and the raw visits") {
  Rng rng(202);
  const PatchedField uniform(2);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto c = random_case(rng);
    const EdgeTrapLookup lookup(2, c.traps);
    const auto traj = Trajectory::from_positions(2, c.path);
    const auto raw = trap_visit_stats(traj, uniform, lookup);
    const auto forgotten = configurations_from_forgotten(forget_path(c.path, 2, lookup), 2, lookup);
    REQUIRE(raw.stats.size() == forgotten.size());
    for (std::size_t i = 0; i < raw.stats.size(); ++i) {
      CHECK(raw.stats[i].trap.x == forgotten[i].first.x);
      CHECK(raw.stats[i].config == forgotten[i].second);
      CHECK(raw.stats[i].config.total() >= 1);
    }
  }
}

TEST_CASE("visit statistics examples") {
  const Site a{};
  const Site x{{1, 0}};
  const Site y{{2, 0}};
  const Site z{{3, 0}};
  PatchedField field(2);
  field.set_edge(x, 0, 0.9, 0.8);

  const std::vector<Site> bounce_free{a, x, a};
  auto r = trap_visit_stats(Trajectory::from_positions(2, bounce_free), field);
  REQUIRE(r.stats.size() == 1);
  CHECK(r.stats[0].config.n_xx == 1);
  CHECK(r.stats[0].occupation == 1);
  CHECK(r.stats[0].bounces == std::vector<std::int64_t>{0});
  CHECK(r.stats[0].delta_p == 1);

  const std::vector<Site> crossing{a, x, y, z};
  r = trap_visit_stats(Trajectory::from_positions(2, crossing), field);
  REQUIRE(r.stats.size() == 1);
  CHECK(r.stats[0].config.n_xy == 1);
  CHECK(r.stats[0].occupation == 2);
  CHECK(r.stats[0].bounces == std::vector<std::int64_t>{0});
  CHECK(r.stats[0].delta_p == 2);

  const std::vector<Site> mixed{a, x, y, x, y, x, a, x, y, z, y, x, y, x, y, z};
  r = trap_visit_stats(Trajectory::from_positions(2, mixed), field);
  REQUIRE(r.stats.size() == 1);
  CHECK(r.stats[0].config == TrapConfiguration{0, 1, 1, 0, 1});
  CHECK(r.stats[0].bounces == std::vector<std::int64_t>{2, 0, 2});
  CHECK(r.stats[0].occupation == 12);

  const std::vector<Site> cut{a, x, y, x};
  r = trap_visit_stats(Trajectory::from_positions(2, cut), field);
  CHECK(r.stats.empty());
  CHECK(r.truncated_visits == 1);
}

TEST_CASE("bounces in a frozen trap are geometric") {
  const FrozenTrapLine line(0.9, 0.8, 0.75);
  const auto traj = simulate_walk(line, 12, 400000);
  const auto report = trap_visit_stats(traj, line);
  REQUIRE(report.stats.size() == 1);
  const auto& s = report.stats[0];
  std::int64_t sum = 0;
  for (auto h : s.bounces) sum += h;
  CHECK(s.occupation == 2 * sum + s.delta_p);
  REQUIRE(s.bounces.size() > 20000);
  std::vector<double> ours(s.bounces.begin(), s.bounces.end());
  std::vector<double> oracle;
  Rng rng(13);
  for (std::size_t i = 0; i < ours.size(); ++i) oracle.push_back(static_cast<double>(rng.geometric(1.0 - 0.9 * 0.8)));
  CHECK(stats::ks_two_sample(ours, oracle) < stats::ks_critical_two_sample(ours.size(), oracle.size(), 0.001));
  CHECK(stats::mean(ours) == doctest::Approx(0.72 / 0.28).epsilon(0.03));
}

TEST_CASE("occupation identity on walks in random environments") {
  const AlphaParams alpha(3, {0.15, 0.05, 0.05, 0.05, 0.05, 0.05});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto rec = walk_trap_stats(alpha, seed, 20000);
    std::int64_t in_traps = 0;
    for (const auto& t : rec.traps) {
      std::int64_t sum = 0;
      for (auto h : t.bounces) sum += h;
      CHECK(t.occupation == 2 * sum + t.delta_p);
      CHECK(static_cast<std::int64_t>(t.bounces.size()) == t.entries);
      CHECK(t.delta_p >= t.entries);
      CHECK(t.delta_p <= 2 * t.entries);
      in_traps += t.occupation;
    }
    CHECK(in_traps == rec.steps_in_traps);
  }
}

TEST_CASE("the three oracle paths agree") {
  const AlphaParams alpha(2, {0.4, 0.3, 0.2, 0.3});
  const EdgeLaw law = edge_law(alpha, 0);
  CHECK(law.kappa_j() == doctest::Approx(2 * 1.2 - 0.6));
  const std::vector<double> grid{2.5, 4.0, 8.0};
  Rng rng(31);
  std::vector<EdgeDraw> naive;
  std::vector<EdgeDraw> exact;
  std::vector<EdgeDraw> weighted;
  const TrapConfiguration none{};
  for (int i = 0; i < 20000; ++i) naive.push_back(sample_trap_edge_naive(alpha, 0, rng));
  for (int i = 0; i < 100000; ++i) exact.push_back(sample_trap_edge(law, rng));
  for (int i = 0; i < 100000; ++i) weighted.push_back(sample_trap_edge_weighted(law, none, rng));
  const auto pn = weighted_survival(naive, grid);
  const auto pe = weighted_survival(exact, grid);
  const auto pw = weighted_survival(weighted, grid);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double se = std::sqrt(pn[g] * (1 - pn[g]) / 20000.0);
    CHECK(std::abs(pn[g] - pe[g]) < 4 * se);
    CHECK(std::abs(pw[g] - pe[g]) < 4 * se);
  }
  for (const auto& d : exact) CHECK(is_trap(1 - d.eps_x, 1 - d.eps_y));
}

TEST_CASE("radial coordinates round-trip") {
  const auto p = to_radial(0.1, 0.05);
  CHECK(p.r == doctest::Approx(0.075));
  double ex = 0;
  double ey = 0;
  from_radial(p, ex, ey);
  CHECK(ex == doctest::Approx(0.1));
  CHECK(ey == doctest::Approx(0.05));
  const auto e = exit_law(0.1, 0.2);
  CHECK(e.xx + e.xy == doctest::Approx(1.0));
  CHECK(e.yx + e.yy == doctest::Approx(1.0));
}

TEST_CASE("conditional tail slope for a single visit") {
  const AlphaParams alpha = AlphaParams::symmetric(3, 0.1);
  const EdgeLaw law = edge_law(alpha, 0);
  TrapConfiguration one;
  one.n_xx = 1;
  const auto strengths = oracle_strengths(law, 40000, 5, &one);
  std::vector<StrengthSample> samples;
  for (double s : strengths) samples.push_back({s, one});
  const auto report =
      conditional_tail_test([](const TrapConfiguration& c) { return c.total() == 1; }, samples, alpha);
  CHECK(report.expected_slope == doctest::Approx(-1.0));
  CHECK(std::abs(report.slope + 1.0) < 0.1);
  CHECK(report.violation_fraction <= 0.05);

  try {
    conditional_tail_test([](const TrapConfiguration& c) { return c.total() == 7; }, samples, alpha);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::StatisticalPower);
  }
}

TEST_CASE("strength against visit counts") {
  const AlphaParams alpha(3, {0.15, 0.05, 0.05, 0.05, 0.05, 0.05});
  const EdgeLaw law = edge_law(alpha, 0);
  const auto strengths = oracle_strengths(law, 60000, 9);
  Rng rng(4);
  std::vector<StrengthSample> samples;
  for (double s : strengths) {
    StrengthSample x{s, {}};
    x.config.n_xx = 1 + static_cast<std::int64_t>(rng.geometric(0.5));
    samples.push_back(x);
  }
  const auto report = strength_vs_visits_test(samples, law.kappa_j());
  CHECK(report.passed());
  CHECK(std::abs(report.marginal_slope + law.kappa_j()) < 0.1);
}
