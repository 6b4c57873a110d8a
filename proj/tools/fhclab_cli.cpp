#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fhclab/experiments.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// "--key value" pairs; values that parse as JSON keep their type, others become strings.
nlohmann::json parse_overrides(const std::vector<std::string>& extras) {
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& tok = extras[i];
    if (tok.rfind("--", 0) != 0 || tok.size() < 3)
      throw CLI::ValidationError("unexpected argument " + tok);
    std::string key = tok.substr(2), value;
    if (auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw CLI::ValidationError("--" + key + " needs a value");
      value = extras[++i];
    }
    try {
      out[key] = nlohmann::json::parse(value);
    } catch (const nlohmann::json::exception&) {
      out[key] = value;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiments on hypercyclic operator constructions"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a named experiment");
  std::string experiment, config_path, out_dir;
  std::uint64_t seed = 0;
  std::string threads;
  bool exact = false, floating = false;
  run->add_option("experiment", experiment, "experiment name")->required();
  run->add_option("--config", config_path, "JSON config file");
  run->add_option("--out", out_dir, "output directory");
  auto* seed_opt = run->add_option("--seed", seed, "random seed");
  run->add_option("--threads", threads, "worker threads or 'auto'");
  auto* ex = run->add_flag("--exact", exact, "exact rational arithmetic");
  auto* fl = run->add_flag("--float", floating, "extended-precision float arithmetic");
  ex->excludes(fl);
  run->allow_extras();

  auto* validate = app.add_subcommand("validate", "check a config file");
  std::string validate_path;
  validate->add_option("file", validate_path, "JSON config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (*validate) {
    std::string raw;
    try {
      raw = slurp(validate_path);
    } catch (const std::exception& e) {
      std::cerr << e.what() << "\n";
      return 2;
    }
    auto v = fhclab::validate_config(raw);
    if (v.ok()) {
      std::cout << "valid: " << v.config->experiment << "\n";
      return 0;
    }
    for (const auto& msg : v.violations) std::cerr << msg << "\n";
    return 2;
  }

  fhclab::ExperimentConfig config;
  try {
    if (!config_path.empty()) {
      auto v = fhclab::validate_config(slurp(config_path));
      if (!v.ok()) {
        for (const auto& msg : v.violations) std::cerr << msg << "\n";
        return 2;
      }
      config = *v.config;
      if (config.experiment != experiment) {
        std::cerr << "config is for " << config.experiment << ", not " << experiment << "\n";
        return 2;
      }
    }
    config.experiment = experiment;
    const auto overrides = parse_overrides(run->remaining());
    for (const auto& [k, v] : overrides.items()) config.params[k] = v;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  if (!out_dir.empty()) config.output_dir = out_dir;
  if (*seed_opt) config.seed = seed;
  if (exact || floating) {
    config.arithmetic = exact ? fhclab::Arithmetic::exact : fhclab::Arithmetic::floating;
    config.arithmetic_given = true;
  }
  if (!threads.empty()) {
    if (threads == "auto") {
      config.threads = 0;
    } else {
      try {
        config.threads = std::stoi(threads);
        if (config.threads < 1) throw std::invalid_argument("threads");
      } catch (const std::exception&) {
        std::cerr << "--threads expects a positive integer or 'auto'\n";
        return 2;
      }
    }
  }

  auto report = fhclab::run(config);
  for (const auto& a : report.assertions)
    std::cout << (a.passed ? "PASS " : "FAIL ") << a.name
              << (a.detail.empty() ? "" : "  [" + a.detail + "]") << "\n";
  if (report.manifest.contains("error"))
    std::cerr << report.manifest["error"].get<std::string>() << "\n";
  std::cout << "status: " << report.manifest["status"].get<std::string>() << "  ("
            << report.manifest["config"]["output_dir"].get<std::string>() << "/manifest.json)\n";
  return report.exit_code;
}
