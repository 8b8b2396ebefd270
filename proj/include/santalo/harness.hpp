#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "santalo/instances.hpp"
#include "santalo/verifiers.hpp"

namespace santalo {

const std::vector<std::string>& known_experiments();

struct ExperimentConfig {
  std::string experiment;
  FamilySpec family;
  std::uint64_t seed = 0;
  std::size_t count = 1;
  std::map<std::string, Tolerance> tolerances;  // by inequality id
  double margin_tol = 1e-9;
  std::string output = "santalo";
  // knobs
  int threads = 0;  // 0: hardware concurrency
  int steps = 10;
  double C = 0.0;  // mm-step; 0 picks k / (k - 1)
  double asa_lambda = 0.25;
  double asa_p = 1.0;
  bool scale_to_hypothesis = true;
  bool symmetrize = true;
  bool diagnostics = false;
  int angle_samples = 33;
};

// Errors are Errc::Config with the offending field path in front ("instance_family.k: ...").
ExperimentConfig parse_config(const nlohmann::json& j);
// key is a dotted path; value is parsed as JSON, else taken as a string.
void apply_override(nlohmann::json& j, const std::string& key_value);
nlohmann::json config_to_json(const ExperimentConfig& c);

// SANTALO_MAX_CELLS, default 4e6.
std::size_t max_cells();

// Inequality id the experiment reports under.
std::string experiment_inequality(const std::string& experiment);

struct RunResult {
  int exit_code = 0;  // 0 pass, 1 errors or theorem-backed failures, 2 conjecture findings
  std::vector<nlohmann::json> records;  // by instance index
  std::size_t passed = 0;
  std::size_t theorem_failures = 0;
  std::size_t conjecture_findings = 0;
  std::size_t hypothesis_skips = 0;
  std::size_t errors = 0;
  std::string trace_csv;  // iteration experiments only
};

// One instance; never throws for instance-level errors (they land in the record).
nlohmann::json run_instance(const ExperimentConfig& c, std::size_t index, bool parallel_inside, std::string* trace = nullptr);

// Counts the records and sets exit_code.
void tally(RunResult& r);

RunResult run_experiment(const ExperimentConfig& c);

std::string summary_csv(const RunResult& r);
// Writes <prefix>.reports.jsonl, <prefix>.summary.csv and, when present, <prefix>.trace.csv.
void write_artifacts(const RunResult& r, const std::string& prefix);

}  // namespace santalo
