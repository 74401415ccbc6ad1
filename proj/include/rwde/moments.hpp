#pragma once

// Monte Carlo assertion suites for the moment and inverse-stability inequalities
// used by the stable limit argument. Each suite returns one row per grid cell with
// both sides of the inequality, a Monte Carlo band and a verdict.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rwde/majorant.hpp"

namespace rwde {

enum class Verdict { Pass, Fail, Inconclusive };
const char* to_string(Verdict v);

struct SuiteRow {
  std::string check;  // which inequality of the suite
  std::string cell;  // human-readable grid cell, e.g. "h=0.5 N=10 gamma=0.7"
  double lhs = 0.0;
  double rhs = 0.0;
  double band = 0.0;  // Monte Carlo allowance added to the checked side
  Verdict verdict = Verdict::Pass;
};

struct SuiteReport {
  std::string suite;
  std::vector<SuiteRow> rows;
  nlohmann::json extra = nlohmann::json::object();

  bool passed() const;  // no Fail rows (Inconclusive rows are listed but do not fail)
  std::size_t failures() const;
  nlohmann::json to_json() const;
};

struct MomentSuiteConfig {
  std::uint64_t seed = 2023;
  std::size_t replications = 100000;
  std::vector<double> h_grid{0.3, 0.5, 0.9};
  std::vector<int> n_grid{1, 10, 100};
  std::vector<double> gamma_grid{0.3, 0.7, 1.0};
  std::vector<double> p_grid{0.01, 0.05, 0.1, 0.3, 0.5, 0.9};
  double sigmas = 3.0;
  double c_phi = 16.0;  // upper constant established for geometric variables
  int threads = 1;
};

/// Var(Z^gamma) <= C N^{2 gamma - 1} for the compound geometric-exponential sum Z.
/// H counts failures before a success of probability 1 - h (mean h / (1 - h)), q = 1/(1-h),
/// eps_i alternates 1, 0, 1, ... C is fitted on a training half and validated on the other
/// half; the proven bounds (N/4)^gamma / 321 <= E(Z^gamma) <= (4N)^gamma are checked as well.
SuiteReport compound_variance_suite(const MomentSuiteConfig& config);

/// (1/2) Phi(1/p) <= (1/2)(1/p) phi(1/p) <= E Phi(1 + X) <= C (1/p) phi(1/p) <= 2 C Phi(1/p)
/// for geometric X (failures before success) and several concave weights.
SuiteReport geometric_phi_suite(const MomentSuiteConfig& config);

/// Var(X^gamma) <= 2 a^{2 gamma} Var(X) / a^2 when Var(X) <= a^2.
SuiteReport power_variance_suite(const MomentSuiteConfig& config);

struct IncrementSuiteConfig {
  std::uint64_t seed = 29;
  std::vector<double> kappa_grid{0.3, 0.6, 0.9};
  std::vector<double> eps_grid{0.1, 0.05};
  std::vector<double> b_grid{1.0, 10.0};
  std::size_t calibration_paths = 4000;
  std::size_t validation_paths = 4000;
  double sigmas = 3.0;
};

/// For each (kappa, eps, B): A with P(S_A >= B) >= 1 - eps and delta with
/// P(some eps-window increment on [0, A] < delta) <= eps, both calibrated on one
/// path set and validated on an independent one.
SuiteReport subordinator_increment_suite(const IncrementSuiteConfig& config);

struct InverseSuiteConfig {
  std::uint64_t seed = 28;
  std::size_t pairs = 1000;
  std::size_t grid_points = 2000;
};

/// Random (f, g) step-function pairs satisfying the inverse-stability hypotheses
/// (g grows by delta over every eps-window on [0, A + eps], sup |f - g| <= delta / 2 on
/// [0, A + 2 eps]); the inverses must agree within 2 eps on [0, min(f(A), g(A))].
/// Zero tolerance: a single violation fails the suite.
SuiteReport inverse_stability_suite(const InverseSuiteConfig& config);

struct MajorantSuiteConfig {
  std::uint64_t seed = 22;
  std::size_t pool_size = 200000;
  std::size_t fresh_samples = 200000;
  double sigmas = 3.0;
};

/// Majorant construction on Pareto(1.5) and Exp(1) pools: b_i > 0 and nonincreasing,
/// a_i <= i + 1, phi <= f on a grid, E[Phi(X)] <= 3 E[X] in-sample (exact) and on fresh
/// samples (with a Monte Carlo band).
SuiteReport majorant_suite(const MajorantSuiteConfig& config);

}  // namespace rwde
