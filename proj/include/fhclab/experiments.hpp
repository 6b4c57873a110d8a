#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fhclab/scalar.hpp"

namespace fhclab {

inline constexpr const char* kVersion = "0.1.0";

/// Names accepted by run(), in the order they are listed to users.
const std::vector<std::string>& experiment_names();

struct ExperimentConfig {
  std::string experiment;
  nlohmann::json params = nlohmann::json::object();
  std::string output_dir;
  Arithmetic arithmetic = Arithmetic::exact;
  bool arithmetic_given = false;  // otherwise each pipeline picks its natural mode
  std::uint64_t seed = 0;
  int threads = 0;                // 0: auto

  nlohmann::json to_json() const;
};

struct ConfigValidation {
  std::optional<ExperimentConfig> config;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// Parses and schema-checks a JSON config, collecting every violation.
ConfigValidation validate_config(const std::string& raw);

/// Schema check for an already-built config (used after command-line overrides).
std::vector<std::string> check_config(const ExperimentConfig& config);

/// Short description of the parameters an experiment accepts.
std::string schema_hint(const std::string& experiment);

struct Assertion {
  std::string name;
  std::string operation;
  std::string anchor;  // the property being tested
  bool passed = false;
  std::string detail;
};

struct Report {
  nlohmann::json manifest;   // deterministic for fixed (config, seed)
  nlohmann::json timings;    // wall-clock seconds per stage
  std::vector<Assertion> assertions;
  std::vector<std::string> artifacts;
  int exit_code = 0;         // 0 pass, 1 assertion failed, 2 usage error, 3 runtime error
};

/// Runs the named pipeline, writes manifest.json, timings.json and artifacts into output_dir.
Report run(const ExperimentConfig& config);

/// Threads used when the config says auto: FHCLAB_THREADS, else hardware concurrency.
int default_thread_count();

}  // namespace fhclab
