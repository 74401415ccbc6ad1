#pragma once

// Experiment configuration: a YAML file with a fixed set of keys. Unknown keys are
// errors so that typos never silently fall back to defaults.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rwde/dirichlet.hpp"

namespace rwde {

struct Thresholds {
  double exponent_tolerance = 0.15;  // |median log(level)/log(n) - kappa|
  double hill_tolerance = 0.15;      // |Hill estimate - kappa|
  double stable_ks = 0.08;           // partial sums vs c S_1
  double position_ks = 0.10;         // projected position vs c times the inverse subordinator
  double plateau_ratio = 2.0;        // max / min of tau_n / (n log n)
  double slope_tolerance = 0.10;     // |tail slope + kappa_j|
  double envelope_violations = 0.05;
  double decorrelation = 0.10;       // |corr(1{s >= 10}, N)|
  double total_time_slope = 0.25;    // relative band around 1/kappa
};

struct Tuning {
  std::int64_t block_size = 512;        // renewals per normalized partial sum
  double hill_fraction = 0.02;          // k = fraction of the pooled gaps
  std::int64_t min_gaps = 10000;
  std::int64_t slab_budget = 0;         // per replica, 0 = run to the horizon
  int dyadic_min = 10;                  // tau_log dyadic range 2^min .. 2^max
  int dyadic_max = 16;
  std::int64_t oracle_samples = 1000000;
  int bootstrap = 200;
  double trap_grid_min = 5.0;
  double trap_grid_max = 100.0;
  std::int64_t stable_samples = 100000;
  int surrogate_repeats = 20;
};

struct ExperimentConfig {
  AlphaParams alpha;
  std::uint64_t seed = 1;
  std::int64_t replicas = 1;
  std::int64_t horizon = 1000;
  int m = 1;
  std::vector<std::string> experiments;
  std::string output = "out";
  int threads = 1;
  Thresholds thresholds;
  Tuning tuning;

  /// Throws ErrorKind::Config on an invariant violation (horizon < 1000, replicas < 1,
  /// unknown experiment name) and ErrorKind::Parameter on bad weights.
  void validate() const;
  /// Canonical JSON form; the report digest is computed from it.
  nlohmann::json to_json() const;
  std::string digest() const;
};

const std::vector<std::string>& experiment_names();

/// Throws ErrorKind::Config on syntax errors, unknown keys and wrongly typed values.
ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::string& path);

}  // namespace rwde
