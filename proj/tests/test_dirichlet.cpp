#include <doctest.h>

#include <cmath>
#include <random>

#include "rwde/dirichlet.hpp"
#include "rwde/stats.hpp"
#include "rwde/walk.hpp"

using namespace rwde;

TEST_CASE("exponents of the reference presets") {
  const ExponentSet sym = compute_exponents(AlphaParams::symmetric(3, 0.1));
  CHECK(sym.alpha_bar == doctest::Approx(0.6));
  CHECK(sym.kappa == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sym.drift_is_zero());

  const ExponentSet sub = compute_exponents(AlphaParams(3, {0.15, 0.05, 0.05, 0.05, 0.05, 0.05}));
  CHECK(sub.kappa == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(sub.kappa_j[0] == doctest::Approx(0.6));
  CHECK(sub.kappa_j[1] == doctest::Approx(0.7));
  CHECK(sub.kappa_j[2] == doctest::Approx(0.7));
  CHECK(sub.kappa_prime == doctest::Approx(2 * sub.kappa - sub.alpha_bar));
  CHECK(sub.drift[0] == doctest::Approx(0.1));
  CHECK(sub.minimal_axes() == std::vector<int>{0});
  CHECK_FALSE(sub.ballistic());
}

TEST_CASE("bad weights are parameter errors") {
  auto kind_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Internal;
  };
  CHECK(kind_of([] { AlphaParams(3, {0.1, 0.1}); }) == ErrorKind::Parameter);
  CHECK(kind_of([] { AlphaParams(2, {0.1, -0.1, 0.1, 0.1}); }) == ErrorKind::Parameter);
  CHECK(kind_of([] { AlphaParams(0, {}); }) == ErrorKind::Parameter);
}

TEST_CASE("canonical relabelling puts a positive drift on the first axis") {
  const AlphaParams a(2, {0.1, 0.1, 0.1, 0.4});  // drift -0.3 e_2
  const ExponentSet ex = compute_exponents(a.relabeled());
  CHECK(ex.drift[0] == doctest::Approx(0.3));
  CHECK(ex.drift[1] == doctest::Approx(0.0));
  CHECK(ex.kappa == doctest::Approx(compute_exponents(a).kappa));
}

TEST_CASE("Dirichlet sampler matches a plain normalized-gamma oracle") {
  // Oracle: std::gamma_distribution, normalized in linear space.
  const std::vector<double> alpha{0.15, 0.05, 0.3, 1.7};
  const std::size_t n = 40000;
  Rng rng(5);
  std::mt19937_64 oracle_rng(6);
  std::vector<std::vector<double>> ours(alpha.size());
  std::vector<std::vector<double>> theirs(alpha.size());
  std::vector<double> out(alpha.size());
  for (std::size_t i = 0; i < n; ++i) {
    sample_dirichlet(alpha, rng, out);
    double total = 0.0;
    std::vector<double> g(alpha.size());
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      g[k] = std::gamma_distribution<double>(alpha[k], 1.0)(oracle_rng);
      total += g[k];
    }
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      ours[k].push_back(out[k]);
      theirs[k].push_back(g[k] / total);
    }
  }
  const double crit = stats::ks_critical_two_sample(n, n, 0.001);
  const double a0 = 0.15 + 0.05 + 0.3 + 1.7;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    CHECK(stats::ks_two_sample(ours[k], theirs[k]) < crit);
    const double mean = alpha[k] / a0;
    CHECK(std::abs(stats::mean(ours[k]) - mean) < 4 * stats::standard_error(ours[k]));
  }
}

TEST_CASE("tiny weights never produce zero or non-normalized vectors") {
  const std::vector<double> alpha(6, 0.01);
  Rng rng(9);
  std::vector<double> out(6);
  for (int i = 0; i < 20000; ++i) {
    sample_dirichlet(alpha, rng, out);
    double total = 0.0;
    for (double v : out) {
      CHECK(v > 0.0);
      total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("environment is a pure function of seed and site") {
  const Environment env(AlphaParams(3, {0.15, 0.05, 0.05, 0.05, 0.05, 0.05}), 42);
  const Site s{{3, -1, 7}};
  const auto a = env.at(s);
  const auto b = env.at(s);
  CHECK(a.probs == b.probs);
  CHECK(a.valid());
  const Environment other(env.alpha(), 43);
  CHECK(other.at(s).probs != a.probs);
  CHECK(env.at(Site{{3, -1, 8}}).probs != a.probs);
}

TEST_CASE("step frequencies follow the site distribution") {
  PatchedField field(2);
  const std::vector<double> p{0.4, 0.3, 0.2, 0.1};
  field.set(Site{}, SiteDistribution::from(p));
  Rng rng(3);
  const int n = 100000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(direction_between(Site{}, step(field, Site{}, rng), 2))]++;
  for (std::size_t k = 0; k < 4; ++k) {
    const double sd = std::sqrt(n * p[k] * (1 - p[k]));
    CHECK(std::abs(counts[k] - n * p[k]) < 3.5 * sd);
  }

  // The uniform walk: each neighbour with probability 1/(2d).
  PatchedField uniform(3);
  std::vector<int> uc(6, 0);
  for (int i = 0; i < n; ++i) uc[static_cast<std::size_t>(direction_between(Site{}, step(uniform, Site{}, rng), 3))]++;
  for (int c : uc) CHECK(std::abs(c - n / 6.0) < 3.5 * std::sqrt(n * (1.0 / 6) * (5.0 / 6)));
}

TEST_CASE("replay with a fixed seed is identical") {
  const Environment env(AlphaParams::symmetric(2, 0.3), 1);
  CHECK(simulate_walk(env, 99, 5000).moves() == simulate_walk(env, 99, 5000).moves());
  Rng a(4);
  Rng b(4);
  CHECK(step(env, Site{{5, 5}}, a) == step(env, Site{{5, 5}}, b));
}

TEST_CASE("a corrupt site distribution is an internal error") {
  PatchedField field(2);
  SiteDistribution bad;
  bad.dim = 2;
  bad.probs = {0.3, 0.3, 0.3, 0.3};
  field.set(Site{}, bad);
  Rng rng(1);
  try {
    step(field, Site{}, rng);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Internal);
  }
}
