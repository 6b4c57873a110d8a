#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "fhclab/experiments.hpp"

using namespace fhclab;
namespace fs = std::filesystem;

namespace {

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("fhclab_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("minimal config validates") {
  auto v = validate_config(R"({"experiment": "densities"})");
  CHECK(v.ok());
  REQUIRE(v.config.has_value());
  CHECK(v.config->experiment == "densities");
  CHECK_FALSE(v.config->arithmetic_given);
  auto w = validate_config(R"({"experiment": "bad-set", "params": {"J1": 2}, "seed": 5,
                              "threads": "auto", "arithmetic": "exact"})");
  CHECK(w.ok());
  CHECK(w.config->seed == 5);
}

TEST_CASE("misspelled experiment lists the valid names") {
  auto v = validate_config(R"({"experiment": "densites"})");
  CHECK_FALSE(v.ok());
  CHECK(mentions(v.violations, "densites"));
  for (const auto& n : experiment_names()) CHECK(mentions(v.violations, n));
}

TEST_CASE("every violation is collected") {
  auto v = validate_config(R"({"experiment": "densities",
      "params": {"horizon": -5, "burn_in": "x", "colour": 1},
      "seed": -1, "threads": 0, "bogus": true})");
  CHECK_FALSE(v.ok());
  CHECK_FALSE(v.config.has_value());
  CHECK(mentions(v.violations, "params.horizon"));
  CHECK(mentions(v.violations, "params.burn_in"));
  CHECK(mentions(v.violations, "params.colour"));
  CHECK(mentions(v.violations, "seed"));
  CHECK(mentions(v.violations, "threads"));
  CHECK(mentions(v.violations, "bogus"));
  CHECK(v.violations.size() >= 6);
}

TEST_CASE("parameter kinds") {
  CHECK(validate_config(R"({"experiment": "fhcc-orbit", "params": {"alpha": "1/8", "targets": [[1], ["1/2", 1]]}})").ok());
  CHECK_FALSE(validate_config(R"({"experiment": "fhcc-orbit", "params": {"alpha": "one"}})").ok());
  CHECK_FALSE(validate_config(R"({"experiment": "fhcc-orbit", "params": {"targets": [[]]}})").ok());
  CHECK_FALSE(validate_config(R"({"experiment": "bad-set", "params": {"mode": "all"}})").ok());
  CHECK_FALSE(validate_config(R"({"experiment": "bad-set", "params": {"J": [2, 0]}})").ok());
  CHECK_FALSE(validate_config(R"({"experiment": "densities", "arithmetic": "fast"})").ok());
}

TEST_CASE("malformed JSON reports a position") {
  auto v = validate_config("{\n  \"experiment\": \"densities\",\n  \"seed\": \n}");
  REQUIRE(v.violations.size() == 1);
  CHECK(v.violations[0].find("line 4") != std::string::npos);
  CHECK_FALSE(validate_config("[1, 2]").ok());
}

TEST_CASE("schema hints") {
  CHECK(schema_hint("bad-set").find("J1") != std::string::npos);
  CHECK(schema_hint("nothing").find("densities") != std::string::npos);
  for (const auto& n : experiment_names()) CHECK(schema_hint(n).rfind(n, 0) == 0);
}

TEST_CASE("runs are deterministic for a fixed seed") {
  ExperimentConfig c;
  c.experiment = "dsum-check";
  c.params = {{"L", 3}, {"K", 10}, {"samples", 5}, {"pairs", 3}};
  c.seed = 17;
  c.threads = 1;
  c.output_dir = scratch("det_a").string();
  auto a = run(c);
  c.output_dir = scratch("det_b").string();
  auto b = run(c);
  CHECK(a.exit_code == 0);
  CHECK(b.exit_code == 0);
  auto ma = a.manifest, mb = b.manifest;
  ma["config"].erase("output_dir");
  mb["config"].erase("output_dir");
  CHECK(ma == mb);
  CHECK(fs::exists(fs::path(c.output_dir) / "manifest.json"));
  CHECK(fs::exists(fs::path(c.output_dir) / "timings.json"));
  CHECK(slurp(fs::path(c.output_dir) / "manifest.json").find("\"status\": \"pass\"") != std::string::npos);
}

TEST_CASE("exit codes") {
  ExperimentConfig c;
  c.threads = 1;
  SUBCASE("pass") {
    c.experiment = "densities";
    c.params = {{"set", "evens"}, {"horizon", 2000}, {"expect_tail_min", 0.5}, {"tolerance", 0.01}};
    c.output_dir = scratch("pass").string();
    CHECK(run(c).exit_code == 0);
  }
  SUBCASE("failed assertion") {
    c.experiment = "densities";
    c.params = {{"set", "evens"}, {"horizon", 2000}, {"expect_tail_min", 0.9}, {"tolerance", 0.01}};
    c.output_dir = scratch("fail").string();
    auto r = run(c);
    CHECK(r.exit_code == 1);
    CHECK(r.manifest.contains("first_failure"));
  }
  SUBCASE("usage error") {
    c.experiment = "densities";
    c.params = {{"horizon", 0}};
    c.output_dir = scratch("usage").string();
    auto r = run(c);
    CHECK(r.exit_code == 2);
    CHECK(r.manifest["status"] == "usage-error");
  }
  SUBCASE("runtime error") {
    c.experiment = "bad-set";
    c.params = {{"J", {2, 64}}, {"mode", "full"}, {"full_cap", 1}};
    c.output_dir = scratch("runtime").string();
    auto r = run(c);
    CHECK(r.exit_code == 3);
    CHECK(r.manifest["status"] == "runtime-error");
  }
}
