#pragma once

// Desk-scale experiments on the walk. Each returns a report with point estimates,
// threshold checks and CSV tables; the report JSON is a pure function of the config.

#include <string>
#include <vector>

#include <json.hpp>

#include "rwde/config.hpp"
#include "rwde/moments.hpp"

namespace rwde {

struct Check {
  std::string name;
  double value = 0.0;
  double low = 0.0;   // accepted range [low, high]; infinities for one-sided checks
  double high = 0.0;
  Verdict verdict = Verdict::Pass;  // Inconclusive marks a flagged, non-failing check
  std::string note;
};

struct CsvTable {
  std::string name;  // file stem
  std::string header;
  std::vector<std::string> rows;
};

struct ExperimentReport {
  static constexpr int kSchemaVersion = 1;

  std::string experiment;
  std::string digest;
  nlohmann::json estimates = nlohmann::json::object();
  nlohmann::json diagnostics = nlohmann::json::object();
  std::vector<Check> checks;
  std::vector<std::string> notes;
  std::vector<CsvTable> tables;
  double wall_seconds = 0.0;  // not part of to_json()

  bool passed() const;
  const Check* find(const std::string& name) const;
  nlohmann::json to_json() const;
};

/// log(Y_n . e_1) / log(n) at dyadic n across replicas. Refuses zero-drift presets.
ExperimentReport exp_kappa_scaling(const ExperimentConfig& config);
/// Pooled renewal gaps: Hill index and normalized block sums against c S_1.
ExperimentReport exp_tau_tail(const ExperimentConfig& config);
/// tau_n / (n log n) at dyadic n for kappa = 1 presets.
ExperimentReport exp_tau_log(const ExperimentConfig& config);
/// Observed trap strengths against the conditioned-edge oracle, per direction.
ExperimentReport exp_trap_tails(const ExperimentConfig& config);
/// Time before tau_n split into outside traps, minimal-direction traps and other traps.
ExperimentReport exp_time_in_traps(const ExperimentConfig& config);
/// n^{-kappa} Y_{nt} along the drift against c times the inverse subordinator.
ExperimentReport exp_position_law(const ExperimentConfig& config);

ExperimentReport run_experiment(const std::string& name, const ExperimentConfig& config);

/// Shortest round-trip decimal form, used for every number written to CSV.
std::string format_number(double v);

}  // namespace rwde
