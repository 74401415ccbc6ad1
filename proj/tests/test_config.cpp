#include <doctest.h>

#include <charconv>
#include <cmath>

#include "rwde/config.hpp"
#include "rwde/error.hpp"
#include "rwde/experiments.hpp"

using namespace rwde;

namespace {

const char* kBase = R"(
d: 3
alpha: [0.15, 0.05, 0.05, 0.05, 0.05, 0.05]
seed: 5
replicas: 4
horizon: 20000
experiments: [kappa_scaling]
)";

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

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(kBase);
  CHECK(c.alpha.d == 3);
  CHECK(c.seed == 5);
  CHECK(c.replicas == 4);
  CHECK(c.experiments == std::vector<std::string>{"kappa_scaling"});
  CHECK(c.thresholds.stable_ks == 0.08);

  const auto tuned = parse_config(std::string(kBase) + "tuning:\n  block_size: 64\nthresholds:\n  hill_tolerance: 0.2\n");
  CHECK(tuned.tuning.block_size == 64);
  CHECK(tuned.thresholds.hill_tolerance == 0.2);
}

TEST_CASE("config errors") {
  CHECK(kind_of([] { parse_config(std::string(kBase) + "horizn: 5\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config(std::string(kBase) + "tuning:\n  blocksize: 5\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("d: 3\nhorizon: 5000\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("d: 2\nalpha: [0.1, 0.1, 0.1, 0.1]\nhorizon: 999\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("d: 2\nalpha: [0.1, 0.1, 0.1, 0.1]\nexperiments: [nope]\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("d: 2\nalpha: [0.1, 0.1, -0.1, 0.1]\n"); }) == ErrorKind::Parameter);
  CHECK(kind_of([] { parse_config("d: [\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("d: 2\nalpha: [0.1, 0.1, 0.1, 0.1]\nseed: abc\n"); }) == ErrorKind::Config);
}

TEST_CASE("digest ignores threads and output only") {
  auto a = parse_config(kBase);
  auto b = a;
  b.threads = 4;
  b.output = "elsewhere";
  CHECK(a.digest() == b.digest());
  b.seed = 6;
  CHECK(a.digest() != b.digest());
  b = a;
  b.tuning.block_size = 256;
  CHECK(a.digest() != b.digest());
}

TEST_CASE("reports are byte-identical across runs and thread counts") {
  auto c = parse_config(kBase);
  const auto first = exp_kappa_scaling(c).to_json().dump();
  CHECK(first == exp_kappa_scaling(c).to_json().dump());
  c.threads = 2;
  CHECK(first == exp_kappa_scaling(c).to_json().dump());
}

TEST_CASE("CSV tables match their headers and numbers round-trip") {
  auto c = parse_config(kBase);
  c.replicas = 20;
  c.horizon = 200000;
  c.tuning.min_gaps = 100;
  c.tuning.block_size = 16;
  c.tuning.stable_samples = 2000;
  c.tuning.surrogate_repeats = 2;
  c.tuning.bootstrap = 20;
  const auto r = exp_tau_tail(c);
  CHECK(r.diagnostics["requested"].get<std::size_t>() ==
        r.diagnostics["used"].get<std::size_t>() + r.diagnostics["dropped_few_renewals"].get<std::size_t>());
  REQUIRE(!r.tables.empty());
  for (const auto& t : r.tables) {
    const auto columns = std::count(t.header.begin(), t.header.end(), ',') + 1;
    for (const auto& row : t.rows) CHECK(std::count(row.begin(), row.end(), ',') + 1 == columns);
  }
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5e17}) {
    const std::string s = format_number(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == v);
  }
}

TEST_CASE("guards") {
  auto c = parse_config(kBase);
  c.alpha = AlphaParams::symmetric(3, 0.1);
  CHECK(kind_of([&] { exp_kappa_scaling(c); }) == ErrorKind::Precondition);
  CHECK(kind_of([&] { exp_tau_tail(c); }) == ErrorKind::Precondition);
  c.alpha = AlphaParams(3, {0.15, 0.05, 0.05, 0.05, 0.05, 0.05});
  CHECK(kind_of([&] { exp_tau_log(c); }) == ErrorKind::Precondition);
  c.horizon = 1000;
  const auto r = exp_kappa_scaling(c);
  REQUIRE(r.find("final_median_exponent") != nullptr);
  CHECK(r.find("final_median_exponent")->verdict == Verdict::Inconclusive);
}
