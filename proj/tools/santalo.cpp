#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "santalo/error.hpp"
#include "santalo/harness.hpp"

using namespace santalo;

int main(int argc, char** argv) {
  CLI::App app{"santalo: numerical checks of Blaschke-Santalo type inequalities"};
  std::string experiment, config_path, out;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::vector<std::string> overrides;
  bool print_config = false;

  app.add_option("experiment", experiment, "Experiment name")
      ->required()
      ->check(CLI::IsMember(known_experiments()));
  app.add_option("--config", config_path, "JSON config file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "Corpus seed (overrides the config)");
  auto* count_opt = app.add_option("--count", count, "Number of instances (overrides the config)");
  app.add_option("--out", out, "Output path prefix (overrides the config)");
  app.add_option("--override", overrides, "key=value on a dotted config path; repeatable");
  app.add_flag("--print-config", print_config, "Print the resolved config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    std::ifstream f(config_path);
    if (!f) throw Error(Errc::Config, "--config: cannot read " + config_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::Config, config_path + ": " + e.what());
    }
    if (!j.is_object()) throw Error(Errc::Config, "<root>: must be an object");
    if (j.contains("experiment") && j["experiment"] != experiment)
      throw Error(Errc::Config, "experiment: config says " + j["experiment"].dump() + ", command line says " + experiment);
    j["experiment"] = experiment;
    for (const auto& kv : overrides) apply_override(j, kv);
    if (*seed_opt) j["seed"] = seed;
    if (*count_opt) j["count"] = count;
    if (!out.empty()) j["output"] = out;

    const ExperimentConfig cfg = parse_config(j);
    if (print_config) {
      std::cout << config_to_json(cfg).dump(2) << "\n";
      return 0;
    }
    const RunResult r = run_experiment(cfg);
    write_artifacts(r, cfg.output);
    for (const auto& rec : r.records)
      if (rec.contains("error"))
        std::cerr << "instance " << rec.at("index") << ": " << rec.at("error").get<std::string>() << "\n";
    std::cout << cfg.experiment << ": " << r.records.size() << " instances, " << r.passed << " pass, "
              << r.hypothesis_skips << " hypothesis not met, " << r.theorem_failures << " theorem-backed failures, "
              << r.conjecture_findings << " conjecture findings, " << r.errors << " errors\n";
    std::cout << "wrote " << cfg.output << ".reports.jsonl, " << cfg.output << ".summary.csv"
              << (r.trace_csv.empty() ? "" : ", " + cfg.output + ".trace.csv") << "\n";
    if (r.conjecture_findings) std::cout << "CONJECTURE FINDING: see reports with conjecture=true and pass=false\n";
    return r.exit_code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
