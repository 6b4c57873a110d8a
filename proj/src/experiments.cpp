#include "fhclab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <gmp.h>

#include "fhclab/ctype_lab.hpp"
#include "fhclab/dsum_lab.hpp"
#include "fhclab/fhc_builder.hpp"
#include "fhclab/set_constructions.hpp"
#include "fhclab/shift_lab.hpp"

namespace fhclab {

namespace fs = std::filesystem;
using json = nlohmann::json;

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "densities", "counterexample-shifts", "bad-set", "ctype-check",
      "fhcc-orbit", "dsum-check", "interpolate"};
  return names;
}

int default_thread_count() {
  if (const char* env = std::getenv("FHCLAB_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

json ExperimentConfig::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["params"] = params;
  j["output_dir"] = output_dir;
  j["arithmetic"] = arithmetic == Arithmetic::exact ? "exact" : "float";
  j["seed"] = seed;
  j["threads"] = threads == 0 ? json("auto") : json(threads);
  return j;
}

// ---------------------------------------------------------------------------
// Schema

namespace {

enum class Kind { integer, number, rational, string, boolean, int_array, rational_lists, any };

struct ParamSpec {
  std::string key;
  Kind kind;
  double min = -1e300;                 // numeric lower bound
  std::vector<std::string> choices;    // for strings; empty means free text
  std::string help;
};

const std::map<std::string, std::vector<ParamSpec>>& schemas() {
  static const std::map<std::string, std::vector<ParamSpec>> s = {
      {"densities",
       {{"set", Kind::string, 0, {}, "evens|odds|all|squares|multiples:k|residue:r:m|layers:k|file:path"},
        {"horizon", Kind::integer, 1, {}, "largest N considered"},
        {"burn_in", Kind::integer, 0, {}, "first N in the tail (default horizon/10)"},
        {"expect_tail_min", Kind::number, 0, {}, "expected lower density"},
        {"expect_tail_max", Kind::number, 0, {}, "expected upper density"},
        {"tolerance", Kind::number, 0, {}, "allowed deviation from the expectations"}}},
      {"counterexample-shifts",
       {{"a", Kind::rational, 0, {}, "interval base"},
        {"eps", Kind::rational, 0, {}, "interval half-width"},
        {"b_rule", Kind::any, 0, {}, "\"default\" or integer array b_1..b_pmax"},
        {"p_max", Kind::integer, 1, {}, "number of levels"},
        {"H", Kind::integer, 1, {}, "weight horizon"},
        {"burn_in", Kind::integer, 0, {}, "density burn-in"},
        {"gp_p", Kind::integer, 1, {}, "level whose G_p density is bounded"},
        {"gp_tail_max", Kind::number, 0, {}, "bound on tail_max(G_gp)"},
        {"defect_p", Kind::integer, 0, {}, "C_{2^p} level"},
        {"defect_margin", Kind::number, 0, {}, "tail_max(C) must stay below 1 - margin"},
        {"write_weights", Kind::boolean, 0, {}, "also write the weight CSVs"}}},
      {"bad-set",
       {{"J1", Kind::integer, 1, {}, "J_1 (shorthand for J = [J1])"},
        {"J", Kind::int_array, 1, {}, "J_1..J_kmax"},
        {"mode", Kind::string, 0, {"full", "sampled"}, "family enumeration"},
        {"sample_count", Kind::integer, 1, {}, "families per level in sampled mode"},
        {"k_max", Kind::integer, 1, {}, "levels"},
        {"horizon", Kind::integer, 0, {}, "largest N (default M_1 - 1)"},
        {"full_cap", Kind::integer, 1, {}, "largest family count in full mode"},
        {"density_floor", Kind::rational, 0, {}, "r(N) lower bound (default 1/4)"}}},
      {"ctype-check",
       {{"preset", Kind::string, 0, {"delta-8-32"}, "parameter preset"},
        {"Delta", Kind::int_array, 1, {}, "block sizes per level (overrides preset)"},
        {"Delta0", Kind::integer, 1, {}, "size of block 0"},
        {"k_max", Kind::integer, 1, {}, "levels"},
        {"j_max", Kind::integer, 0, {}, "largest power tested in condition (b)"},
        {"p", Kind::integer, 1, {}, "l_p exponent for condition (b)"},
        {"samples", Kind::integer, 1, {}, "sampled vectors when p > 1"},
        {"schedule_p", Kind::integer, 1, {}, "exponent for the schedule report"}}},
      {"fhcc-orbit",
       {{"weight", Kind::rational, 0, {}, "constant weight (> 1)"},
        {"targets", Kind::rational_lists, 0, {}, "list of coordinate lists"},
        {"alpha", Kind::rational, 0, {}, "radius alpha_p for every target"},
        {"modulus", Kind::integer, 1, {}, "A_p = {n : n = p mod modulus}"},
        {"K", Kind::integer, 1, {}, "coordinate truncation"},
        {"orbit_horizon", Kind::integer, 0, {}, "last orbit step"},
        {"disjointify_burn_in", Kind::integer, 0, {}, "burn-in for the thinning densities"},
        {"density_burn_in", Kind::integer, 0, {}, "burn-in for visit densities"}}},
      {"dsum-check",
       {{"L", Kind::integer, 1, {}, "blocks"},
        {"K", Kind::integer, 2, {}, "coordinates per block"},
        {"eps_rule", Kind::string, 0, {"dyadic"}, "eps_l = 2^-l"},
        {"samples", Kind::integer, 1, {}, "random vectors for the decay estimate"},
        {"pairs", Kind::integer, 1, {}, "random admissible (u, v)"},
        {"c", Kind::any, 0, {}, "shift for cI + R: rational or \"auto\" (||R|| + 1)"}}},
      {"interpolate",
       {{"dim", Kind::integer, 1, {}, "dimension"},
        {"L", Kind::integer, 1, {}, "number of pairs"},
        {"S", Kind::string, 0, {"identity", "random"}, "base operator"},
        {"eps", Kind::rational, 0, {}, "perturbation target"},
        {"noise", Kind::rational, 0, {}, "size of x_l - S z_l"}}},
  };
  return s;
}

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::integer: return "integer";
    case Kind::number: return "number";
    case Kind::rational: return "rational (number or \"p/q\")";
    case Kind::string: return "string";
    case Kind::boolean: return "boolean";
    case Kind::int_array: return "integer array";
    case Kind::rational_lists: return "array of arrays of rationals";
    case Kind::any: return "value";
  }
  return "value";
}

std::optional<Rational> as_rational(const json& v) {
  try {
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<long long>());
    if (v.is_number()) return parse_rational(v.dump());
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

void check_param(const ParamSpec& spec, const json& v, std::vector<std::string>& out) {
  const std::string where = "params." + spec.key + ": ";
  auto below = [&](double x) {
    if (x < spec.min)
      out.push_back(where + "must be >= " + json(spec.min).dump() + ", got " + v.dump());
  };
  switch (spec.kind) {
    case Kind::integer:
      if (!v.is_number_integer()) out.push_back(where + "expected " + kind_name(spec.kind));
      else below(static_cast<double>(v.get<long long>()));
      break;
    case Kind::number:
      if (!v.is_number()) out.push_back(where + "expected " + kind_name(spec.kind));
      else below(v.get<double>());
      break;
    case Kind::rational: {
      auto q = as_rational(v);
      if (!q) out.push_back(where + "expected " + kind_name(spec.kind));
      else if (*q < 0 || (*q == 0 && spec.min >= 0 && spec.key != "noise"))
        out.push_back(where + "must be positive, got " + v.dump());
      break;
    }
    case Kind::string:
      if (!v.is_string()) {
        out.push_back(where + "expected " + kind_name(spec.kind));
      } else if (!spec.choices.empty() &&
                 std::find(spec.choices.begin(), spec.choices.end(), v.get<std::string>()) ==
                     spec.choices.end()) {
        std::string opts;
        for (const auto& c : spec.choices) opts += (opts.empty() ? "" : ", ") + c;
        out.push_back(where + "unknown value " + v.dump() + " (valid: " + opts + ")");
      }
      break;
    case Kind::boolean:
      if (!v.is_boolean()) out.push_back(where + "expected boolean");
      break;
    case Kind::int_array:
      if (!v.is_array() || v.empty()) {
        out.push_back(where + "expected non-empty " + kind_name(spec.kind));
      } else {
        for (const auto& e : v)
          if (!e.is_number_integer() || e.get<long long>() < spec.min) {
            out.push_back(where + "entries must be integers >= " + json(spec.min).dump());
            break;
          }
      }
      break;
    case Kind::rational_lists:
      if (!v.is_array() || v.empty()) {
        out.push_back(where + "expected non-empty " + kind_name(spec.kind));
      } else {
        for (const auto& row : v) {
          bool bad = !row.is_array() || row.empty();
          if (!bad)
            for (const auto& e : row) bad = bad || !as_rational(e);
          if (bad) {
            out.push_back(where + "expected " + kind_name(spec.kind));
            break;
          }
        }
      }
      break;
    case Kind::any:
      break;
  }
}

std::string line_column(const std::string& raw, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, raw.size()); ++i) {
    if (raw[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::string experiment_list() {
  std::string s;
  for (const auto& n : experiment_names()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

}  // namespace

std::string schema_hint(const std::string& experiment) {
  auto it = schemas().find(experiment);
  if (it == schemas().end()) return "experiments: " + experiment_list();
  std::string s = experiment + " parameters:";
  for (const auto& p : it->second) s += "\n  " + p.key + " (" + kind_name(p.kind) + "): " + p.help;
  return s;
}

std::vector<std::string> check_config(const ExperimentConfig& config) {
  std::vector<std::string> v;
  auto it = schemas().find(config.experiment);
  if (it == schemas().end()) {
    v.push_back("experiment: unknown name \"" + config.experiment + "\" (valid: " +
                experiment_list() + ")");
    return v;
  }
  if (!config.params.is_object()) {
    v.push_back("params: expected an object");
    return v;
  }
  for (const auto& [key, value] : config.params.items()) {
    auto spec = std::find_if(it->second.begin(), it->second.end(),
                             [&](const ParamSpec& p) { return p.key == key; });
    if (spec == it->second.end()) {
      std::string known;
      for (const auto& p : it->second) known += (known.empty() ? "" : ", ") + p.key;
      v.push_back("params." + key + ": unknown parameter for " + config.experiment +
                  " (known: " + known + ")");
      continue;
    }
    check_param(*spec, value, v);
  }
  if (config.threads < 0) v.push_back("threads: must be positive or \"auto\"");
  return v;
}

ConfigValidation validate_config(const std::string& raw) {
  ConfigValidation result;
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::parse_error& e) {
    result.violations.push_back("malformed JSON at " + line_column(raw, e.byte > 0 ? e.byte - 1 : 0) +
                                ": " + e.what());
    return result;
  }
  if (!j.is_object()) {
    result.violations.push_back("top level: expected an object");
    return result;
  }
  ExperimentConfig c;
  static const std::vector<std::string> top = {"experiment", "params",  "output_dir",
                                               "arithmetic", "seed", "threads"};
  for (const auto& [key, value] : j.items())
    if (std::find(top.begin(), top.end(), key) == top.end())
      result.violations.push_back(key + ": unknown top-level key");
  if (!j.contains("experiment") || !j["experiment"].is_string())
    result.violations.push_back("experiment: required string (valid: " + experiment_list() + ")");
  else
    c.experiment = j["experiment"].get<std::string>();
  if (j.contains("params")) c.params = j["params"];
  if (j.contains("output_dir")) {
    if (j["output_dir"].is_string()) c.output_dir = j["output_dir"].get<std::string>();
    else result.violations.push_back("output_dir: expected string");
  }
  if (j.contains("arithmetic")) {
    const auto& a = j["arithmetic"];
    if (a == "exact") c.arithmetic = Arithmetic::exact;
    else if (a == "float") c.arithmetic = Arithmetic::floating;
    else result.violations.push_back("arithmetic: expected \"exact\" or \"float\"");
    c.arithmetic_given = true;
  }
  if (j.contains("seed")) {
    if (j["seed"].is_number_unsigned()) c.seed = j["seed"].get<std::uint64_t>();
    else result.violations.push_back("seed: expected a non-negative integer");
  }
  if (j.contains("threads")) {
    const auto& t = j["threads"];
    if (t == "auto") c.threads = 0;
    else if (t.is_number_integer() && t.get<long long>() > 0) c.threads = t.get<int>();
    else result.violations.push_back("threads: expected a positive integer or \"auto\"");
  }
  if (!c.experiment.empty()) {
    auto more = check_config(c);
    result.violations.insert(result.violations.end(), more.begin(), more.end());
  }
  if (result.violations.empty()) result.config = c;
  return result;
}

// ---------------------------------------------------------------------------
// Pipelines

namespace {

class Pipeline {
 public:
  explicit Pipeline(const ExperimentConfig& c) : config(c), params(c.params) {
    threads = c.threads > 0 ? c.threads : default_thread_count();
  }

  template <class T>
  T get(const std::string& key, T fallback) const {
    return params.contains(key) ? params[key].get<T>() : fallback;
  }
  Rational get_rational(const std::string& key, const std::string& fallback) const {
    if (!params.contains(key)) return parse_rational(fallback);
    auto q = as_rational(params[key]);
    if (!q) throw ParameterError("params." + key + ": not a rational");
    return *q;
  }
  Arithmetic mode(Arithmetic natural) const {
    return config.arithmetic_given ? config.arithmetic : natural;
  }

  void check(const std::string& name, const std::string& operation, const std::string& anchor,
             bool passed, const std::string& detail = "") {
    assertions.push_back({name, operation, anchor, passed, detail});
  }

  template <class F>
  auto timed(const std::string& stage, F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      timings[stage] = seconds_since(t0);
    } else {
      auto r = f();
      timings[stage] = seconds_since(t0);
      return r;
    }
  }

  std::ofstream artifact(const std::string& name) {
    fs::create_directories(config.output_dir);
    artifacts.push_back(name);
    std::ofstream out(fs::path(config.output_dir) / name);
    if (!out) throw ParameterError("cannot write " + (fs::path(config.output_dir) / name).string());
    return out;
  }
  void write_set(const std::string& name, const IndexSet& s) {
    auto out = artifact(name);
    write_index_set(out, s);
  }

  const ExperimentConfig& config;
  const json& params;
  int threads = 1;
  json results = json::object();
  json timings = json::object();
  std::vector<Assertion> assertions;
  std::vector<std::string> artifacts;

 private:
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

// Runs f(i) for i in [0, n) on up to `threads` workers; results land by index.
void parallel_for(int threads, std::size_t n, const std::function<void(std::size_t)>& f) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

std::string fmt(const Rational& q) { return to_string(q); }

// ---- densities

IndexSet named_set(const std::string& spec, Index horizon) {
  auto parts = [&] {
    std::vector<std::string> p;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) p.push_back(item);
    return p;
  }();
  auto num = [&](std::size_t i) -> Index {
    if (i >= parts.size()) throw ParameterError("set \"" + spec + "\" is missing a number");
    try {
      return std::stoll(parts[i]);
    } catch (const std::exception&) {
      throw ParameterError("set \"" + spec + "\": \"" + parts[i] + "\" is not an integer");
    }
  };
  const std::string& kind = parts.empty() ? spec : parts[0];
  if (kind == "evens") return IndexSet::progression(horizon, 0, 2);
  if (kind == "odds") return IndexSet::progression(horizon, 1, 2);
  if (kind == "all") return IndexSet::interval(horizon, 0, horizon);
  if (kind == "squares")
    return IndexSet::from_predicate(horizon, [](Index n) {
      auto r = static_cast<Index>(std::sqrt(static_cast<long double>(n)));
      while (r * r > n) --r;
      while ((r + 1) * (r + 1) <= n) ++r;
      return r * r == n;
    });
  if (kind == "multiples") {
    Index k = num(1);
    if (k < 1) throw ParameterError("multiples:k needs k >= 1");
    return IndexSet::progression(horizon, 0, k);
  }
  if (kind == "residue") {
    Index r = num(1), m = num(2);
    if (m < 1 || r < 0 || r >= m) throw ParameterError("residue:r:m needs 0 <= r < m");
    return IndexSet::progression(horizon, r, m);
  }
  if (kind == "layers") return dyadic_layers(static_cast<int>(num(1)), horizon);
  if (kind == "file") {
    std::ifstream in(spec.substr(5));
    if (!in) throw ParameterError("cannot read " + spec.substr(5));
    return read_index_set(in).clipped(horizon);
  }
  throw ParameterError("unknown set \"" + spec + "\"; " + schema_hint("densities"));
}

void run_densities(Pipeline& P) {
  const Index horizon = P.get<Index>("horizon", 10000);
  const Index burn_in = P.get<Index>("burn_in", horizon / 10);
  if (burn_in > horizon) throw ParameterError("burn_in exceeds horizon");
  const std::string spec = P.get<std::string>("set", "evens");
  IndexSet set = P.timed("build", [&] { return named_set(spec, horizon); });
  DensityProfile prof = P.timed("profile", [&] { return density_profile(set, burn_in); });
  P.results["set"] = spec;
  P.results["horizon"] = horizon;
  P.results["burn_in"] = burn_in;
  P.results["size"] = set.size();
  P.results["tail_min"] = prof.tail_min;
  P.results["tail_max"] = prof.tail_max;
  const auto syn = syndetic_gap(set);
  P.results["max_gap"] = syn.max_gap;
  P.check("profile ordering", "density_profile", "tail_min <= tail_max",
          prof.tail_min <= prof.tail_max);
  P.check("fast tails agree", "tail_min/tail_max", "single-pass tails match the full profile",
          tail_min(set, burn_in) == prof.tail_min && tail_max(set, burn_in) == prof.tail_max);
  const double tol = P.get<double>("tolerance", 0.01);
  if (P.params.contains("expect_tail_min")) {
    double e = P.params["expect_tail_min"].get<double>();
    P.check("expected lower density", "density_profile", "|tail_min - expected| <= tolerance",
            std::abs(prof.tail_min - e) <= tol, fmt(prof.tail_min) + " vs " + fmt(e));
  }
  if (P.params.contains("expect_tail_max")) {
    double e = P.params["expect_tail_max"].get<double>();
    P.check("expected upper density", "density_profile", "|tail_max - expected| <= tolerance",
            std::abs(prof.tail_max - e) <= tol, fmt(prof.tail_max) + " vs " + fmt(e));
  }
  P.write_set("set.txt", set);
  auto out = P.artifact("density.csv");
  write_density_csv(out, prof);
}

// ---- counterexample shifts

void run_counterexample(Pipeline& P) {
  if (P.mode(Arithmetic::exact) != Arithmetic::exact)
    throw ArithmeticModeError("counterexample-shifts is exact only (weights are dyadic)");
  json cp = json::object();
  for (const char* k : {"a", "eps", "b_rule", "p_max", "H"})
    if (P.params.contains(k)) cp[k] = P.params[k];
  const CounterexampleParams params = CounterexampleParams::from_json(cp);
  const Index H = params.horizon;
  const Index burn_in = P.get<Index>("burn_in", std::min<Index>(1000, H));
  const int gp_p = P.get<int>("gp_p", 2);
  const double gp_bound = P.get<double>("gp_tail_max", 0.02);
  const int defect_p = P.get<int>("defect_p", 3);
  const double margin = P.get<double>("defect_margin", 0.05);
  if (gp_p > params.p_max) throw ParameterError("gp_p exceeds p_max");

  CounterexamplePair pair = P.timed("weights", [&] { return counterexample_pair(params); });
  P.results["params"] = params.to_json();
  P.results["tents"] = {pair.tent_count_w, pair.tent_count_w_prime};

  auto weights_ok = [](const WeightSystem& w) {
    return w.is_dyadic() && !w.tent_invariant_violation().has_value();
  };
  P.check("w weights in {1/2, 1, 2}", "counterexample_pair", "tent weights take values 1/2, 1, 2",
          weights_ok(pair.w));
  P.check("w' weights in {1/2, 1, 2}", "counterexample_pair", "tent weights take values 1/2, 1, 2",
          weights_ok(pair.w_prime));

  FhcShiftReport shift = P.timed("separation", [&] {
    return check_fhc_shift(pair.w, pair.sets.E, {}, H);
  });
  json windows = json::array();
  for (std::size_t p = 0; p < shift.windows.size(); ++p) {
    json wp = json::array();
    for (const auto& m : shift.windows[p])
      wp.push_back({{"j", m.j}, {"log2_min", static_cast<double>(m.log2_min)}, {"argmin", m.argmin}});
    windows.push_back({{"p", p + 1}, {"E_size", pair.sets.E[p].size()}, {"windows", wp}});
  }
  P.results["E"] = windows;
  P.results["pairs_checked"] = shift.pairs_checked;
  P.check("E_p disjoint", "check_fhc_shift", "the sets E_p are pairwise disjoint", shift.disjoint);
  P.check("separation", "check_fhc_shift", "W(m - n) >= max(2^p, 2^q) for m in E_p, n in E_q, m > n",
          shift.separation, shift.first_failure);
  P.check("windowed minima non-decreasing", "check_fhc_shift",
          "min of W over E_p in dyadic windows does not decrease", shift.all_non_decreasing());

  std::vector<GpReport> gp(static_cast<std::size_t>(params.p_max));
  P.timed("gp", [&] {
    parallel_for(P.threads, gp.size(), [&](std::size_t i) {
      gp[i] = gp_inclusion_check(pair, static_cast<int>(i + 1), H, burn_in);
    });
  });
  json gpj = json::array();
  for (const auto& g : gp) {
    gpj.push_back({{"p", g.p}, {"size", g.G.size()}, {"tail_max", g.tail_max},
                   {"inclusion", g.inclusion}});
    P.check("G_" + std::to_string(g.p) + " inclusion", "gp_inclusion_check",
            "G_p is covered by b_q N + [-q, q], p <= q <= p_max", g.inclusion,
            g.first_violation ? "first violation " + std::to_string(*g.first_violation) : "");
    P.write_set("G_" + std::to_string(g.p) + ".txt", g.G);
  }
  P.results["G"] = gpj;
  const double gtail = gp[static_cast<std::size_t>(gp_p - 1)].tail_max;
  P.check("G_" + std::to_string(gp_p) + " upper density", "gp_inclusion_check",
          "tail_max(G_p) <= " + fmt(gp_bound), gtail <= gp_bound, fmt(gtail));

  DefectReport defect = P.timed("defect", [&] {
    return transitivity_defect(pair.w, pow2(defect_p), H, burn_in, margin);
  });
  P.results["defect"] = {{"p", defect_p},
                         {"tail_max", defect.profile.tail_max},
                         {"closed_form_bound", defect_closed_form_bound(params, defect_p)}};
  P.check("transitivity defect", "transitivity_defect",
          "tail_max of {W > 2^p} stays below 1 - margin", defect.bounded_away,
          fmt(defect.profile.tail_max));

  for (std::size_t p = 0; p < pair.sets.E.size(); ++p) {
    P.write_set("E_" + std::to_string(p + 1) + ".txt", pair.sets.E[p]);
    P.write_set("F_" + std::to_string(p + 1) + ".txt", pair.sets.F[p]);
  }
  if (P.get<bool>("write_weights", false)) {
    auto a = P.artifact("w.csv");
    write_weights_csv(a, pair.w);
    auto b = P.artifact("w_prime.csv");
    write_weights_csv(b, pair.w_prime);
  }
}

// ---- bad set

void run_bad_set(Pipeline& P) {
  if (P.mode(Arithmetic::exact) != Arithmetic::exact)
    throw ArithmeticModeError("bad-set counts exactly; float mode is not offered");
  json bp = json::object();
  if (P.params.contains("J")) bp["J"] = P.params["J"];
  else bp["J"] = json::array({P.get<Index>("J1", 4)});
  const int k_max = P.get<int>("k_max", 1);
  bp["k_max"] = k_max;
  const std::string mode = P.get<std::string>("mode", "full");
  if (mode == "sampled")
    bp["mode"] = {{"sampled", {{"count", P.get<Index>("sample_count", 64)}, {"seed", P.config.seed}}}};
  else
    bp["mode"] = "full";
  if (P.params.contains("full_cap")) bp["full_cap"] = P.params["full_cap"];
  Index horizon = P.get<Index>("horizon", -1);
  if (horizon < 0) {
    // first level only: M_1 - 1 = 2^{C_1} J_1 - 1, capped
    const Index J1 = bp["J"][0].get<Index>();
    const Integer C = large_subset_count(J1);
    horizon = C < 40 ? static_cast<Index>((Integer(1) << static_cast<unsigned>(C)) * J1) - 1
                     : Index{1000000};
    horizon = std::min<Index>(horizon, 1000000);
  }
  bp["horizon"] = horizon;
  const BadSetParams params = BadSetParams::from_json(bp);
  const Rational floor = P.get_rational("density_floor", "1/4");

  BadSet bad = P.timed("build", [&] { return build_bad_set(params); });
  P.results["params"] = params.to_json();
  json M = json::array();
  for (const auto& m : bad.M) M.push_back(m.str());
  P.results["M"] = M;
  P.results["size"] = bad.set.size();

  // r(N) >= floor  <=>  count * den >= num * (N + 1), integers only
  const Integer num = numerator(floor), den = denominator(floor);
  std::optional<Index> first_bad;
  Index count = 0;
  Rational worst = 1;
  Index worst_at = 0;
  auto members = bad.set.members();
  std::size_t pos = 0;
  for (Index N = 0; N <= horizon; ++N) {
    while (pos < members.size() && members[pos] <= N) ++pos, ++count;
    if (Integer(count) * den < num * Integer(N + 1) && !first_bad) first_bad = N;
    Rational r(Integer(count), Integer(N + 1));
    if (r < worst) {
      worst = r;
      worst_at = N;
    }
  }
  P.results["min_ratio"] = fmt(worst);
  P.results["min_ratio_at"] = worst_at;
  P.check("density floor", "build_bad_set",
          "r(N) >= " + fmt(floor) + " for every N <= " + std::to_string(horizon), !first_bad,
          first_bad ? "fails at N = " + std::to_string(*first_bad) : "min " + fmt(worst));
  P.write_set("bad_set.txt", bad.set);
  auto out = P.artifact("density.csv");
  write_density_csv(out, density_profile(bad.set, 0));
}

// ---- C-type

void run_ctype(Pipeline& P) {
  if (P.mode(Arithmetic::exact) != Arithmetic::exact)
    throw ArithmeticModeError("ctype-check relies on exact periodicity; run in exact mode");
  CPlusOneParams cp = P.params.contains("Delta")
                          ? CPlusOneParams::from_schedule(P.params["Delta"].get<std::vector<Index>>(),
                                                          P.get<Index>("Delta0", 1))
                          : CPlusOneParams::preset(P.get<std::string>("preset", "delta-8-32"));
  if (P.params.contains("k_max")) cp.k_max = P.params["k_max"].get<int>();
  const CTypeParams params = cplus1_params(cp);
  const auto T = P.timed("build", [&] { return build_ctype(params); });
  P.results["params"] = cp.to_json();
  P.results["dim"] = params.dim();
  P.results["b"] = params.b;

  P.check("truncation invariance", "build_ctype", "span(e_0..e_{b_N-1}) is invariant",
          truncation_invariant(T, params));

  std::vector<PeriodicityReport> per(static_cast<std::size_t>(params.n_max));
  P.timed("periodicity", [&] {
    parallel_for(P.threads, per.size(), [&](std::size_t n) {
      per[n] = check_periodicity(T, params, static_cast<Index>(n));
    });
  });
  bool all_periodic = true;
  std::string first;
  for (const auto& r : per)
    if (!r.ok && all_periodic) {
      all_periodic = false;
      first = "block " + std::to_string(r.block) + ", k = " + std::to_string(*r.failing_k);
    }
  P.check("periodicity", "check_periodicity",
          "T^{2(b_{n+1}-b_n)} e_k = e_k for every k in every block", all_periodic, first);

  NotHfhcOptions opt;
  opt.j_max = P.get<Index>("j_max", 200);
  opt.p = P.get<int>("p", 1);
  opt.samples = P.get<Index>("samples", 64);
  opt.seed = P.config.seed;
  json levels = json::array();
  for (int n = 1; (Index{1} << n) < params.n_max; ++n) {
    NotHfhcReport r = P.timed("conditions_n" + std::to_string(n),
                              [&] { return check_nothfhc(T, params, n, opt); });
    json norms = json::array();
    for (const auto& x : r.norms) norms.push_back(fmt(x));
    levels.push_back({{"n", n}, {"K", r.K}, {"J", r.J}, {"a", r.a_ok}, {"b", r.b_ok},
                      {"max_norm", fmt(r.max_norm)}, {"norms", norms},
                      {"worst_ratio", r.worst_ratio}, {"substitution", r.substitution}});
    const std::string sfx = " (n = " + std::to_string(n) + ")";
    P.check("condition (a)" + sfx, "check_nothfhc", "T^{J_n} pi_{K_n} = pi_{K_n}", r.a_ok,
            r.a_failing_k ? "fails at k = " + std::to_string(*r.a_failing_k) : "");
    P.check("condition (b)" + sfx, "check_nothfhc",
            "||pi_{K_n} T^j (I - pi_{K_n})|| <= 1 for j <= " + std::to_string(opt.j_max), r.b_ok,
            r.b_first_failing_j
                ? "first failure at j = " + std::to_string(*r.b_first_failing_j) +
                      (r.b_failing_column ? ", column " + std::to_string(*r.b_failing_column) : "") +
                      ", max norm " + fmt(r.max_norm)
                : r.substitution);
  }
  P.results["conditions"] = levels;

  const int sp = P.get<int>("schedule_p", 1);
  ScheduleReport s = P.timed("schedule", [&] {
    return ctypeex_schedule(cp.Delta, sp, cp.k_max, 32, P.config.seed + 7);
  });
  json gam = json::array(), summ = json::array(), ratio = json::array();
  for (auto g : s.gamma) gam.push_back(static_cast<double>(g));
  for (auto x : s.summability) summ.push_back(static_cast<double>(x));
  for (const auto& x : s.fhc_ratio) ratio.push_back(fmt(x));
  json sj = {{"p", sp}, {"gamma", gam}, {"summability", summ}, {"ratio", ratio},
             {"block_cases", s.block_cases}};
  if (s.gamma_exact) {
    json ge = json::array();
    for (const auto& g : *s.gamma_exact) ge.push_back(fmt(g));
    sj["gamma_exact"] = ge;
  }
  P.results["schedule"] = sj;
  P.check("schedule ratio", "ctypeex_schedule", "(delta - tau) / Delta = 1/8 for every level",
          s.fhc_ratio_ok);
  P.check("gamma decreasing", "ctypeex_schedule", "gamma_k decreases in k", s.gamma_decreasing);
  P.check("summability", "ctypeex_schedule",
          "2^n sum_{k>n} 2^{k-1} gamma_k <= 1 (truncated at k_max)",
          std::all_of(s.summability_ok.begin(), s.summability_ok.end(), [](bool b) { return b; }));
  P.check("block estimate", "ctypeex_schedule",
          "||P_m T^j P_l|| <= beta_l / 4 for m < l, j <= Delta - delta", s.block_estimate_ok,
          s.block_estimate_failure);

  auto out = P.artifact("operator.csv");
  write_operator_csv(out, T);
}

// ---- FHCC orbit

template <class Scalar>
void fhcc_pipeline(Pipeline& P) {
  const Rational weight = P.get_rational("weight", "2");
  const Rational alpha = P.get_rational("alpha", "1/8");
  const Index K = P.get<Index>("K", 20000);
  const Index H = P.get<Index>("orbit_horizon", 10000);
  const Index modulus = P.get<Index>("modulus", 4);
  const Index vburn = P.get<Index>("density_burn_in", 3 * H / 4);
  const Index dburn = P.get<Index>("disjointify_burn_in", vburn);
  if (vburn > H) throw ParameterError("density_burn_in exceeds orbit_horizon");

  std::vector<BlockVector<Rational>> targets;
  json tj = P.params.contains("targets") ? P.params["targets"] : json::array({{"1"}, {"1", "1"}});
  Index width = 0;
  for (const auto& row : tj) width = std::max<Index>(width, static_cast<Index>(row.size()));
  for (const auto& row : tj) {
    Vector<Rational> c = Vector<Rational>::Zero(width);
    for (std::size_t k = 0; k < row.size(); ++k) c(static_cast<Index>(k)) = *as_rational(row[k]);
    targets.emplace_back(std::move(c), NormTag::ell(1));
  }
  const std::size_t np = targets.size();
  std::vector<IndexSet> A;
  for (std::size_t p = 1; p <= np; ++p)
    A.push_back(IndexSet::progression(K - 1, static_cast<Index>(p) % modulus, modulus));
  const WeightSystem w = WeightSystem::constant(weight, K);
  std::vector<Rational> alphas(np, alpha);

  FHCCPlan<Scalar> plan = P.timed("plan", [&] {
    return fhcc_vector<Scalar>(w, targets, A, alphas, K, H, dburn);
  });
  const auto T = backward_shift_operator<Scalar>(w, K);
  FhccOrbitCheck orbit = P.timed("orbit", [&] { return check_fhcc_orbit(plan, T); });

  std::vector<BlockVector<Scalar>> centers;
  std::vector<Scalar> radii;
  for (std::size_t p = 0; p < np; ++p) {
    Vector<Scalar> c = Vector<Scalar>::Zero(K);
    c.head(targets[p].dim()) = cast_vector<Scalar>(targets[p].coords);
    centers.emplace_back(std::move(c), NormTag::ell(1));
    radii.push_back(scalar_cast<Scalar>(3 * alpha));
  }
  std::vector<IndexSet> A_orbit;
  for (const auto& a : A) A_orbit.push_back(a.clipped(H));
  auto dens = P.timed("visits", [&] {
    return orbit_density_report(T, plan.x, centers, radii, A_orbit, H, vburn);
  });

  P.check("plan invariant", "fhcc_vector", "p eps_p + sum_{q>p+1} eps_q < alpha_p",
          plan.invariant_ok);
  json per = json::array();
  for (std::size_t p = 0; p < np; ++p) {
    const auto& s = plan.split[p];
    const std::string tag = " (p = " + std::to_string(p + 1) + ")";
    per.push_back({{"p", p + 1},
                   {"eps", fmt(plan.eps[p])},
                   {"N", plan.N[p]},
                   {"thinning", plan.sets.s[p]},
                   {"B_size", plan.B(p + 1).size()},
                   {"B_first", plan.B(p + 1).empty() ? -1 : plan.B(p + 1).min()},
                   {"terms_used", plan.terms_used[p]},
                   {"s_side_low", fmt(s.s_side_low)},
                   {"s_side_high", fmt(s.s_side_high)},
                   {"t_side", fmt(s.t_side)},
                   {"budget", fmt(s.budget)},
                   {"orbit_points", orbit.checked[p]},
                   {"max_error", static_cast<double>(orbit.max_error[p])},
                   {"max_error_at", orbit.max_error_at[p]},
                   {"visit_tail_min", dens[p].profile.tail_min},
                   {"visit_tail_max", dens[p].profile.tail_max}});
    P.check("error split" + tag, "fhcc_vector",
            "S-side and T-side pieces stay within p eps_p + sum_{q>p} eps_q < alpha_p", s.holds());
    P.check("B_p non-empty in the orbit window" + tag, "fhcc_vector", "B_p meets [0, H]",
            orbit.checked[p] > 0);
    P.check("orbit within 3 alpha_p" + tag, "check_fhcc_orbit",
            "||T^n x - x_p|| < 3 alpha_p + slack for n in B_p", orbit.max_error[p] < orbit.bound[p],
            "max " + fmt(static_cast<double>(orbit.max_error[p])) + " vs bound " +
                fmt(static_cast<double>(orbit.bound[p])));
    P.check("visit density" + tag, "orbit_density_report",
            "tail_min of visits to B(x_p, 3 alpha_p) within A_p is positive",
            dens[p].profile.tail_min > 0, fmt(dens[p].profile.tail_min));
    P.write_set("B_" + std::to_string(p + 1) + ".txt", plan.B(p + 1));
    P.write_set("visits_" + std::to_string(p + 1) + ".txt", dens[p].visits_in_A);
  }
  P.results["levels"] = per;
  // far below the double range; keep the extended-precision value as text
  char slack[64];
  std::snprintf(slack, sizeof slack, "%.6Le", plan.truncation_slack);
  P.results["truncation_slack"] = slack;
  P.results["K"] = K;
  P.results["orbit_horizon"] = H;
  P.results["density_burn_in"] = vburn;
}

void run_fhcc(Pipeline& P) {
  if (P.mode(Arithmetic::floating) == Arithmetic::exact) fhcc_pipeline<Rational>(P);
  else fhcc_pipeline<Real>(P);
}

// ---- direct sum

Rational random_dyadic(std::mt19937_64& g, int max_num = 8, int max_shift = 3) {
  auto bits = g();
  Index num = static_cast<Index>(bits % (2 * max_num + 1)) - max_num;
  int shift = static_cast<int>((bits >> 16) % static_cast<std::uint64_t>(max_shift + 1));
  return Rational(num) * pow2(-shift);
}

Rational random_nonzero(std::mt19937_64& g) {
  Rational r = 0;
  while (r == 0) r = random_dyadic(g);
  return r;
}

void run_dsum(Pipeline& P) {
  if (P.mode(Arithmetic::exact) != Arithmetic::exact)
    throw ArithmeticModeError("dsum-check verifies exact identities; float mode is refused");
  json sj = {{"L", P.get<Index>("L", 8)}, {"K", P.get<Index>("K", 64)},
             {"eps_rule", P.get<std::string>("eps_rule", "dyadic")}};
  const DSumSpace space = DSumSpace::from_json(sj);
  const Index samples = P.get<Index>("samples", 100);
  const Index pairs = P.get<Index>("pairs", 10);
  // c = "auto": just above ||R|| for each pair, the regime the construction needs
  const bool auto_c = !P.params.contains("c") || P.params["c"] == "auto";
  const Rational c_fixed = auto_c ? Rational(0) : P.get_rational("c", "2");
  std::mt19937_64 gen(P.config.seed);
  const DSumOps ops = P.timed("build", [&] { return build_dsum_ops(space); });
  P.results["space"] = space.to_json();

  P.check("T never raises index", "build_dsum_ops", "block-triangular sparsity",
          never_raises_index(ops.T, space));
  P.check("T1 never raises index", "build_dsum_ops", "block-triangular sparsity",
          never_raises_index(ops.T1, space));
  P.check("D never raises index", "build_dsum_ops", "block-triangular sparsity",
          never_raises_index(ops.D, space));

  std::vector<char> inter(static_cast<std::size_t>(space.L));
  P.timed("intertwining", [&] {
    parallel_for(P.threads, inter.size(), [&](std::size_t i) {
      inter[i] = check_intertwining(space, static_cast<Index>(i + 1));
    });
  });
  for (std::size_t i = 0; i < inter.size(); ++i)
    P.check("intertwining l = " + std::to_string(i + 1), "check_intertwining",
            "(I + B) D(l) = D(l) (I + 2^-l B)", inter[i] != 0);
  P.check("intertwining on the sum", "check_intertwining", "T1 D = D T",
          P.timed("intertwining_full", [&] { return check_intertwining_full(space, ops); }));

  const Rational normV = ops.V.column_sum_norm();
  const Rational normR0 = dsum_operator_norm(ops.R0, space);
  P.results["norm_V"] = fmt(normV);
  P.results["norm_R0"] = fmt(normR0);
  P.check("R0 norm bound", "build_dsum_ops", "||R0|| <= max_l eps_l ||V||",
          normR0 <= space.eps_of(1) * normV);
  {
    Vector<Rational> x = Vector<Rational>::Zero(space.dim());
    for (Index k = space.K; k < space.dim(); ++k) x(k) = random_dyadic(gen);
    P.check("R0 reads block 1 only", "build_dsum_ops", "R0 x = 0 when x(1) = 0",
            ops.R0.apply(x).isZero());
  }

  Rational worst = 0;
  bool crucial_ok = true;
  P.timed("crucial", [&] {
    for (Index s = 0; s < samples; ++s) {
      const Index m = 1 + s % 3;
      Vector<Rational> x = Vector<Rational>::Zero(space.dim());
      for (Index k = 0; k < space.dim(); ++k) x(k) = random_dyadic(gen);
      for (Index j = 1; j < m; ++j) x(j) = 0;
      x(m) = random_nonzero(gen);
      const Index l = 1 + static_cast<Index>(gen() % static_cast<std::uint64_t>(space.L));
      auto r = crucial_estimate_check(space, ops, x, m, l, 1, std::min<Index>(space.K - 1, 32));
      crucial_ok = crucial_ok && r.ok;
      worst = std::max(worst, r.max_ratio);
    }
  });
  P.results["crucial_max_ratio"] = fmt(worst);
  P.check("decay estimate", "crucial_estimate_check",
          "|delta(k)| <= 2^-k ||x(1)||_1 / |x_m(1)| on " + std::to_string(samples) + " vectors",
          crucial_ok, "max ratio " + fmt(worst));

  bool maps = true, rank_one = true, envelope = true, invertible = true;
  json inv = json::array();
  P.timed("R", [&] {
    for (Index s = 0; s < pairs; ++s) {
      Vector<Rational> u = Vector<Rational>::Zero(space.dim());
      for (Index k = 0; k < space.dim(); ++k) u(k) = random_dyadic(gen);
      u(0) = random_nonzero(gen);
      Vector<Rational> y = Vector<Rational>::Zero(space.dim());
      for (Index l = 1; l <= space.L; ++l) {
        Rational mass = 0;
        for (Index k = 0; k < space.K; ++k) {
          y(space.index(l, k)) = random_dyadic(gen);
          mass += abs_value(y(space.index(l, k)));
        }
        if (mass > 1)
          for (Index k = 0; k < space.K; ++k) y(space.index(l, k)) /= mass;
      }
      const Vector<Rational> v = ops.D.apply(y);
      envelope = envelope && within_envelope(space, v);
      RBuild b = build_R(space, ops, u, v);
      maps = maps && b.maps_u_to_v;
      rank_one = rank_one && b.correction_rank == 1;
      const Rational c = auto_c ? dsum_operator_norm(b.R, space) + 1 : c_fixed;
      auto ir = check_invertible_shift(b.R, space, c);
      invertible = invertible && ir.invertible;
      inv.push_back({{"c", fmt(c)},
                     {"norm_R", fmt(ir.norm_R.convert_to<double>())},
                     {"method", ir.method},
                     {"invertible", ir.invertible}});
    }
  });
  P.results["cI_plus_R"] = inv;
  P.check("envelope", "build_R", "|v_k(l)| <= 2^-lk for v = D y, ||y|| <= 1", envelope);
  P.check("R u = v", "build_R", "R(u) = v exactly", maps);
  P.check("rank-one correction", "build_R", "rank(R - R0) = 1", rank_one);
  P.check("cI + R invertible", "check_invertible_shift", "det(cI + R) != 0 on the truncation",
          invertible);
}

// ---- interpolation

void run_interpolate(Pipeline& P) {
  if (P.mode(Arithmetic::exact) != Arithmetic::exact)
    throw ArithmeticModeError("interpolate is exact only");
  const Index dim = P.get<Index>("dim", 16);
  const Index L = P.get<Index>("L", 4);
  const Rational eps = P.get_rational("eps", "1/10");
  const Rational noise = P.get_rational("noise", "1/1024");
  if (L > dim) throw ParameterError("L exceeds dim");
  std::mt19937_64 gen(P.config.seed);

  LinearOperator<Rational> S = LinearOperator<Rational>::identity(dim);
  if (P.get<std::string>("S", "random") == "random") {
    // unit upper triangular: always invertible
    std::vector<Triplet<Rational>> t;
    for (Index r = 0; r < dim; ++r) {
      t.emplace_back(int(r), int(r), Rational(1));
      for (Index c = r + 1; c < dim; ++c)
        if (gen() % 4 == 0) t.emplace_back(int(r), int(c), random_dyadic(gen));
    }
    S = LinearOperator<Rational>::from_triplets(dim, dim, t);
  }
  std::vector<Vector<Rational>> z, x, sz;
  while (static_cast<Index>(z.size()) < L) {
    Vector<Rational> c(dim);
    for (Index k = 0; k < dim; ++k) c(k) = random_dyadic(gen);
    DenseMatrix<Rational> Z(dim, static_cast<Index>(z.size()) + 1);
    for (std::size_t i = 0; i < z.size(); ++i) Z.col(static_cast<Index>(i)) = z[i];
    Z.col(static_cast<Index>(z.size())) = c;
    if (matrix_rank<Rational>(Z) == Z.cols()) z.push_back(c);
  }
  for (const auto& zl : z) {
    Vector<Rational> target = S.apply(zl);
    sz.push_back(target);
    for (Index k = 0; k < dim; ++k) target(k) += noise * random_dyadic(gen);
    x.push_back(target);
  }
  InterpolationResult r = P.timed("interpolate", [&] { return similarity_interpolation(S, z, x, eps); });
  bool exact = true;
  for (Index l = 0; l < L; ++l) exact = exact && r.op.apply(z[l]) == x[l];
  const Index corr = rank(r.op - S);
  P.results["dim"] = dim;
  P.results["L"] = L;
  P.results["perturbation"] = fmt(r.perturbation);
  P.results["within_eps"] = r.within_eps;
  P.results["correction_rank"] = corr;
  P.check("interpolation", "similarity_interpolation", "L z_l = x_l for every l", exact);
  P.check("low-rank correction", "similarity_interpolation", "rank(L - S) <= L", corr <= L,
          std::to_string(corr));
  const auto same = similarity_interpolation(S, z, sz, eps);
  P.check("identity case", "similarity_interpolation", "x_l = S z_l returns S unchanged",
          same.op == S && same.perturbation == 0);
  bool rejected = false;
  try {
    std::vector<Vector<Rational>> dup = {z[0], z[0]};
    similarity_interpolation(S, dup, {x[0], x[0]}, eps);
  } catch (const RankError&) {
    rejected = true;
  }
  P.check("dependent inputs rejected", "similarity_interpolation", "repeated z raises a rank error",
          rejected);
  // entries of the interpolant are general rationals
  auto out = P.artifact("operator.csv");
  out << "row,col,value\n";
  const auto& m = r.op.matrix();
  for (int c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix<Rational>::InnerIterator it(m, c); it; ++it)
      out << it.row() << ',' << c << ',' << to_string(it.value()) << '\n';
}

json versions() {
  return {{"fhclab", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"gmp", gmp_version}};
}

}  // namespace

Report run(const ExperimentConfig& input) {
  ExperimentConfig config = input;
  if (config.output_dir.empty()) config.output_dir = "out/" + config.experiment;
  Report report;
  json manifest;
  manifest["config"] = config.to_json();
  manifest["versions"] = versions();

  auto finish = [&](Pipeline* P, const std::string& status, const std::string& error) {
    json list = json::array();
    std::optional<std::string> first;
    if (P) {
      for (const auto& a : P->assertions) {
        list.push_back({{"name", a.name}, {"operation", a.operation}, {"anchor", a.anchor},
                        {"passed", a.passed}, {"detail", a.detail}});
        if (!a.passed && !first) first = a.name;
      }
      manifest["results"] = P->results;
      manifest["artifacts"] = P->artifacts;
      report.assertions = P->assertions;
      report.artifacts = P->artifacts;
      report.timings = P->timings;
    }
    manifest["assertions"] = list;
    manifest["status"] = status;
    if (first) manifest["first_failure"] = *first;
    if (!error.empty()) manifest["error"] = error;
    report.manifest = manifest;
    try {
      fs::create_directories(config.output_dir);
      std::ofstream(fs::path(config.output_dir) / "manifest.json") << manifest.dump(2) << "\n";
      std::ofstream(fs::path(config.output_dir) / "timings.json") << report.timings.dump(2) << "\n";
    } catch (const std::exception&) {
      // the report is still returned to the caller
    }
  };

  auto violations = check_config(config);
  if (!violations.empty()) {
    std::string msg;
    for (const auto& v : violations) msg += v + "\n";
    msg += schema_hint(config.experiment);
    report.exit_code = 2;
    finish(nullptr, "usage-error", msg);
    return report;
  }

  static const std::map<std::string, std::function<void(Pipeline&)>> pipelines = {
      {"densities", run_densities},   {"counterexample-shifts", run_counterexample},
      {"bad-set", run_bad_set},       {"ctype-check", run_ctype},
      {"fhcc-orbit", run_fhcc},       {"dsum-check", run_dsum},
      {"interpolate", run_interpolate}};
  Pipeline P(config);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    pipelines.at(config.experiment)(P);
  } catch (const ParameterError& e) {
    report.exit_code = 2;
    finish(&P, "usage-error", std::string(e.what()) + "\n" + schema_hint(config.experiment));
    return report;
  } catch (const std::exception& e) {
    report.exit_code = 3;
    finish(&P, "runtime-error", e.what());
    return report;
  }
  P.timings["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = std::all_of(P.assertions.begin(), P.assertions.end(),
                              [](const Assertion& a) { return a.passed; });
  report.exit_code = ok ? 0 : 1;
  finish(&P, ok ? "pass" : "fail", "");
  return report;
}

}  // namespace fhclab
