// rwde: run experiment configs and the inequality suites from the command line.
//
//   rwde run <config> [--out DIR] [--threads N] [--seed S]
//   rwde verify <suite> [--out DIR] [--threads N]
//
// Exit status is 0 iff every selected verdict passes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rwde/config.hpp"
#include "rwde/error.hpp"
#include "rwde/experiments.hpp"
#include "rwde/moments.hpp"

namespace fs = std::filesystem;
using namespace rwde;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Config, "cannot write " + path.string());
  out << text;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

bool run_config(const std::string& path, const std::optional<std::string>& out_dir, std::optional<int> threads,
                std::optional<std::uint64_t> seed) {
  ExperimentConfig cfg = load_config(path);
  if (out_dir) cfg.output = *out_dir;
  if (threads) cfg.threads = *threads;
  if (seed) cfg.seed = *seed;
  cfg.validate();

  bool ok = true;
  nlohmann::json timing = nlohmann::json::object();
  for (const auto& name : cfg.experiments) {
    const fs::path dir = fs::path(cfg.output) / name;
    fs::create_directories(dir);
    try {
      const ExperimentReport report = run_experiment(name, cfg);
      write_file(dir / "report.json", dump(report.to_json()));
      for (const auto& t : report.tables) {
        std::string text = t.header + "\n";
        for (const auto& row : t.rows) text += row + "\n";
        write_file(dir / (t.name + ".csv"), text);
      }
      timing[name] = report.wall_seconds;
      std::printf("%-14s %s", name.c_str(), report.passed() ? "PASS" : "FAIL");
      for (const auto& c : report.checks) {
        std::printf("  %s=%s[%s]", c.name.c_str(), format_number(c.value).c_str(), to_string(c.verdict));
      }
      std::printf("\n");
      ok = ok && report.passed();
    } catch (const Error& e) {
      nlohmann::json err{{"schema", ExperimentReport::kSchemaVersion},
                         {"experiment", name},
                         {"digest", cfg.digest()},
                         {"passed", false},
                         {"error", {{"kind", to_string(e.kind())}, {"message", e.what()}}}};
      write_file(dir / "report.json", dump(err));
      std::printf("%-14s ERROR %s\n", name.c_str(), e.what());
      ok = false;
    }
  }
  // Wall-clock times live apart from the reports so that reports stay byte-identical.
  fs::create_directories(cfg.output);
  write_file(fs::path(cfg.output) / "timing.json", dump(timing));
  return ok;
}

const std::map<std::string, std::function<SuiteReport(int)>>& suites() {
  static const std::map<std::string, std::function<SuiteReport(int)>> table{
      {"compound-variance",
       [](int threads) {
         MomentSuiteConfig c;
         c.threads = threads;
         return compound_variance_suite(c);
       }},
      {"geometric-phi",
       [](int threads) {
         MomentSuiteConfig c;
         c.threads = threads;
         return geometric_phi_suite(c);
       }},
      {"power-variance",
       [](int threads) {
         MomentSuiteConfig c;
         c.threads = threads;
         return power_variance_suite(c);
       }},
      {"subordinator-increments", [](int) { return subordinator_increment_suite({}); }},
      {"inverse-stability", [](int) { return inverse_stability_suite({}); }},
      {"concave-majorant", [](int) { return majorant_suite({}); }},
  };
  return table;
}

bool run_verify(const std::string& suite, const std::optional<std::string>& out_dir, int threads) {
  std::vector<std::string> names;
  if (suite == "all") {
    for (const auto& [name, fn] : suites()) names.push_back(name);
  } else if (suites().count(suite)) {
    names.push_back(suite);
  } else {
    std::string known = "all";
    for (const auto& [name, fn] : suites()) known += ", " + name;
    throw Error(ErrorKind::Config, "unknown suite '" + suite + "' (known: " + known + ")");
  }
  bool ok = true;
  for (const auto& name : names) {
    const SuiteReport report = suites().at(name)(threads);
    std::printf("%-24s %s  rows=%zu failures=%zu\n", name.c_str(), report.passed() ? "PASS" : "FAIL",
                report.rows.size(), report.failures());
    if (out_dir) {
      fs::create_directories(*out_dir);
      write_file(fs::path(*out_dir) / (name + ".json"), dump(report.to_json()));
    }
    ok = ok && report.passed();
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random walks in Dirichlet environments: experiments and inequality suites"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the experiments selected in a config file");
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  run->add_option("config", config_path, "YAML experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Master seed (overrides the config)");

  auto* verify = app.add_subcommand("verify", "Run an inequality suite ('all' runs every suite)");
  std::string suite;
  std::optional<std::string> verify_out;
  int verify_threads = 1;
  verify->add_option("suite", suite, "Suite name")->required();
  verify->add_option("--out", verify_out, "Directory for the JSON reports");
  verify->add_option("--threads", verify_threads, "Worker threads")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    const bool ok = run->parsed() ? run_config(config_path, out_dir, threads, seed)
                                  : run_verify(suite, verify_out, verify_threads);
    return ok ? 0 : 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "rwde: %s\n", e.what());
    return 2;
  }
}
