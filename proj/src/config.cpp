#include "rwde/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "rwde/error.hpp"
#include "rwde/rng.hpp"

namespace rwde {

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"kappa_scaling", "tau_tail",      "tau_log",
                                              "trap_tails",    "time_in_traps", "position_law"};
  return names;
}

void ExperimentConfig::validate() const {
  alpha.validate();
  RWDE_REQUIRE(horizon >= 1000, ErrorKind::Config, "horizon must be at least 1000 steps");
  RWDE_REQUIRE(replicas >= 1, ErrorKind::Config, "replicas must be at least 1");
  RWDE_REQUIRE(m >= 1, ErrorKind::Config, "m must be at least 1");
  RWDE_REQUIRE(threads >= 1, ErrorKind::Config, "threads must be at least 1");
  RWDE_REQUIRE(!experiments.empty(), ErrorKind::Config, "no experiments selected");
  for (const auto& e : experiments) {
    const auto& names = experiment_names();
    RWDE_REQUIRE(std::find(names.begin(), names.end(), e) != names.end(), ErrorKind::Config,
                 "unknown experiment '" + e + "'");
  }
  RWDE_REQUIRE(tuning.block_size >= 2 && tuning.hill_fraction > 0.0 && tuning.hill_fraction < 1.0, ErrorKind::Config,
               "bad tuning values");
  RWDE_REQUIRE(tuning.dyadic_min >= 1 && tuning.dyadic_max >= tuning.dyadic_min && tuning.dyadic_max < 40,
               ErrorKind::Config, "bad dyadic range");
  RWDE_REQUIRE(tuning.trap_grid_min > 2.0 && tuning.trap_grid_max > tuning.trap_grid_min, ErrorKind::Config,
               "bad trap grid");
}

nlohmann::json ExperimentConfig::to_json() const {
  // threads and output do not change results and stay out of the digest.
  return {{"d", alpha.d},
          {"alpha", alpha.weights},
          {"seed", seed},
          {"replicas", replicas},
          {"horizon", horizon},
          {"m", m},
          {"experiments", experiments},
          {"thresholds",
           {{"exponent_tolerance", thresholds.exponent_tolerance},
            {"hill_tolerance", thresholds.hill_tolerance},
            {"stable_ks", thresholds.stable_ks},
            {"position_ks", thresholds.position_ks},
            {"plateau_ratio", thresholds.plateau_ratio},
            {"slope_tolerance", thresholds.slope_tolerance},
            {"envelope_violations", thresholds.envelope_violations},
            {"decorrelation", thresholds.decorrelation},
            {"total_time_slope", thresholds.total_time_slope}}},
          {"tuning",
           {{"block_size", tuning.block_size},
            {"hill_fraction", tuning.hill_fraction},
            {"min_gaps", tuning.min_gaps},
            {"slab_budget", tuning.slab_budget},
            {"dyadic_min", tuning.dyadic_min},
            {"dyadic_max", tuning.dyadic_max},
            {"oracle_samples", tuning.oracle_samples},
            {"bootstrap", tuning.bootstrap},
            {"trap_grid_min", tuning.trap_grid_min},
            {"trap_grid_max", tuning.trap_grid_max},
            {"stable_samples", tuning.stable_samples},
            {"surrogate_repeats", tuning.surrogate_repeats}}}};
}

std::string ExperimentConfig::digest() const {
  const std::string text = to_json().dump();
  std::uint64_t h = 0x9E3779B97F4A7C15ULL;
  for (unsigned char c : text) h = mix64(h ^ c);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

void reject_unknown(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
  RWDE_REQUIRE(node.IsMap(), ErrorKind::Config, where + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    RWDE_REQUIRE(allowed.count(key) == 1, ErrorKind::Config, "unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const YAML::Node& node, const char* key, T& out) {
  if (!node[key]) return;
  try {
    out = node[key].as<T>();
  } catch (const YAML::Exception&) {
    throw Error(ErrorKind::Config, std::string("bad value for '") + key + "'");
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::Config, std::string("config syntax: ") + e.what());
  }
  reject_unknown(root,
                 {"d", "alpha", "seed", "replicas", "horizon", "m", "experiments", "output", "threads", "thresholds",
                  "tuning"},
                 "config");
  RWDE_REQUIRE(root["d"] && root["alpha"], ErrorKind::Config, "config needs 'd' and 'alpha'");
  ExperimentConfig c;
  int d = 0;
  std::vector<double> w;
  read(root, "d", d);
  read(root, "alpha", w);
  c.alpha = AlphaParams(d, w);
  read(root, "seed", c.seed);
  read(root, "replicas", c.replicas);
  read(root, "horizon", c.horizon);
  read(root, "m", c.m);
  read(root, "experiments", c.experiments);
  read(root, "output", c.output);
  read(root, "threads", c.threads);
  if (const auto t = root["thresholds"]) {
    reject_unknown(t,
                   {"exponent_tolerance", "hill_tolerance", "stable_ks", "position_ks", "plateau_ratio",
                    "slope_tolerance", "envelope_violations", "decorrelation", "total_time_slope"},
                   "thresholds");
    auto& th = c.thresholds;
    read(t, "exponent_tolerance", th.exponent_tolerance);
    read(t, "hill_tolerance", th.hill_tolerance);
    read(t, "stable_ks", th.stable_ks);
    read(t, "position_ks", th.position_ks);
    read(t, "plateau_ratio", th.plateau_ratio);
    read(t, "slope_tolerance", th.slope_tolerance);
    read(t, "envelope_violations", th.envelope_violations);
    read(t, "decorrelation", th.decorrelation);
    read(t, "total_time_slope", th.total_time_slope);
  }
  if (const auto t = root["tuning"]) {
    reject_unknown(t,
                   {"block_size", "hill_fraction", "min_gaps", "slab_budget", "dyadic_min", "dyadic_max",
                    "oracle_samples", "bootstrap", "trap_grid_min", "trap_grid_max", "stable_samples",
                    "surrogate_repeats"},
                   "tuning");
    auto& tu = c.tuning;
    read(t, "block_size", tu.block_size);
    read(t, "hill_fraction", tu.hill_fraction);
    read(t, "min_gaps", tu.min_gaps);
    read(t, "slab_budget", tu.slab_budget);
    read(t, "dyadic_min", tu.dyadic_min);
    read(t, "dyadic_max", tu.dyadic_max);
    read(t, "oracle_samples", tu.oracle_samples);
    read(t, "bootstrap", tu.bootstrap);
    read(t, "trap_grid_min", tu.trap_grid_min);
    read(t, "trap_grid_max", tu.trap_grid_max);
    read(t, "stable_samples", tu.stable_samples);
    read(t, "surrogate_repeats", tu.surrogate_repeats);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  RWDE_REQUIRE(in.good(), ErrorKind::Config, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace rwde
