#include "fhclab/set_constructions.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <utility>

namespace fhclab {

IndexSet dyadic_layers(int k, Index horizon) {
  if (k < 1) throw ParameterError("dyadic layer index must be >= 1");
  if (k > 62) return IndexSet(horizon);
  const Index base = Index{1} << (k - 1);
  return IndexSet::progression(horizon, base, 2 * base);
}

namespace {

void check_interval_params(const Rational& a, const Rational& eps, int mult) {
  if (a <= 1) throw ParameterError("interval base a must be > 1, got " + a.str());
  if (eps <= 0 || eps >= Rational(1, 4))
    throw ParameterError("eps must lie in (0, 1/4), got " + eps.str());
  if (mult != 1 && mult != 2 && mult != 4)
    throw ParameterError("interval multiplier must be 1, 2 or 4");
}

const Rational kIndexMax{Integer(std::numeric_limits<Index>::max())};

// Lower and upper real endpoints of I_u at the given multiplier.
std::pair<Rational, Rational> real_endpoints(const Rational& a, const Rational& eps, int mult,
                                             int u) {
  Rational au = rational_pow(a, u);
  return {(1 - mult * eps) * au, (1 + mult * eps) * au};
}

// Integer interval clipped to [0, horizon]; nullopt once the interval starts above it.
std::optional<IntegerInterval> clipped_interval(const Rational& a, const Rational& eps, int mult,
                                                int u, Index horizon) {
  auto [lo, hi] = real_endpoints(a, eps, mult, u);
  if (lo > Rational(horizon)) return std::nullopt;
  IntegerInterval iv;
  iv.lo = ceil_int(lo);
  iv.hi = hi > Rational(horizon) ? horizon : floor_int(hi);
  return iv;
}

}  // namespace

IntegerInterval geometric_interval(const Rational& a, const Rational& eps, int mult, int u) {
  check_interval_params(a, eps, mult);
  auto [lo, hi] = real_endpoints(a, eps, mult, u);
  if (hi > kIndexMax) throw ParameterError("interval I_" + std::to_string(u) + " overflows");
  return {ceil_int(lo), floor_int(hi)};
}

bool IntervalFamily::pairwise_disjoint() const {
  const IntegerInterval* prev = nullptr;
  for (const auto& [u, iv] : intervals) {
    if (iv.empty()) continue;
    if (prev && prev->hi >= iv.lo) return false;
    prev = &iv;
  }
  return true;
}

int IntervalFamily::find(Index n) const {
  for (const auto& [u, iv] : intervals)
    if (iv.contains(n)) return u;
  return 0;
}

IntervalFamily geometric_intervals(const Rational& a, const Rational& eps, int mult, int u_max,
                                   Index horizon) {
  check_interval_params(a, eps, mult);
  IntervalFamily f;
  f.a = a;
  f.eps = eps;
  f.mult = mult;
  f.horizon = horizon;
  for (int u = 1; u <= u_max; ++u) {
    auto iv = clipped_interval(a, eps, mult, u, horizon);
    if (!iv) break;  // endpoints grow with u
    f.intervals[u] = *iv;
  }
  return f;
}

IntervalConditionReport verify_interval_conditions(const Rational& a, const Rational& eps,
                                                   int u_max) {
  check_interval_params(a, eps, 1);
  IntervalConditionReport r;
  r.a = a;
  r.eps = eps;
  r.u_max = u_max;
  auto note = [&r](const std::string& what) {
    if (r.first_failure.empty()) r.first_failure = what;
  };
  std::vector<Rational> pw(static_cast<std::size_t>(u_max) + 1);
  for (int u = 0; u <= u_max; ++u) pw[u] = rational_pow(a, u);

  for (int u = 2; u <= u_max; ++u) {
    for (int v = 1; v < u; ++v) {
      if (!((1 + 4 * eps) * pw[v] < (1 - 4 * eps) * pw[u])) {
        r.disjoint = false;
        note("disjointness fails at u=" + std::to_string(u) + ", v=" + std::to_string(v));
      }
      bool lower_ok = (1 - 2 * eps) * pw[u] - (1 + 2 * eps) * pw[v] >= (1 - 4 * eps) * pw[u];
      bool upper_ok = (1 + 2 * eps) * pw[u] - (1 - 2 * eps) * pw[v] <= (1 + 4 * eps) * pw[u];
      if (!(lower_ok && upper_ok)) {
        r.difference = false;
        note("difference inclusion fails at u=" + std::to_string(u) + ", v=" + std::to_string(v));
      }
    }
  }
  for (int v = 1; v <= u_max; ++v) {
    if (!(eps * pw[v] >= v)) {
      r.shift = false;
      note("shift inclusion fails at v=" + std::to_string(v));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// disjointify

namespace {

using Runs = std::vector<std::pair<Index, Index>>;

// Runs of (members at positions s-1, 2s-1, ... ) + [-r, r], clipped to [0, horizon].
Runs dilated_runs(std::span<const Index> ms, Index s, Index r, Index horizon) {
  Runs runs;
  for (std::size_t pos = static_cast<std::size_t>(s) - 1; pos < ms.size();
       pos += static_cast<std::size_t>(s)) {
    Index lo = std::max<Index>(ms[pos] - r, 0);
    Index hi = std::min(ms[pos] + r, horizon);
    if (!runs.empty() && lo <= runs.back().second + 1)
      runs.back().second = std::max(runs.back().second, hi);
    else
      runs.emplace_back(lo, hi);
  }
  return runs;
}

// Within a run the ratio climbs, between runs it falls: the max sits at burn_in or a run end.
double runs_tail_max(const Runs& runs, Index horizon, Index burn_in) {
  Index count = 0;
  std::size_t i = 0;
  for (; i < runs.size() && runs[i].first <= burn_in; ++i) {
    if (runs[i].second <= burn_in) {
      count += runs[i].second - runs[i].first + 1;
    } else {
      count += burn_in - runs[i].first + 1;
      break;
    }
  }
  double best = static_cast<double>(count) / static_cast<double>(burn_in + 1);
  if (i < runs.size() && runs[i].first <= burn_in) {
    count += runs[i].second - burn_in;
    best = std::max(best, static_cast<double>(count) / static_cast<double>(runs[i].second + 1));
    ++i;
  }
  for (; i < runs.size(); ++i) {
    count += runs[i].second - runs[i].first + 1;
    best = std::max(best, static_cast<double>(count) / static_cast<double>(runs[i].second + 1));
  }
  (void)horizon;
  return best;
}

bool in_runs(const Runs& runs, Index n) {
  auto it = std::upper_bound(runs.begin(), runs.end(), n,
                             [](Index v, const std::pair<Index, Index>& r) { return v < r.first; });
  if (it == runs.begin()) return false;
  --it;
  return n <= it->second;
}

}  // namespace

IndexSet thin(const IndexSet& a, Index s) {
  if (s < 1) throw ParameterError("thinning step must be >= 1");
  std::vector<Index> out;
  auto ms = a.members();
  for (std::size_t pos = static_cast<std::size_t>(s) - 1; pos < ms.size();
       pos += static_cast<std::size_t>(s))
    out.push_back(ms[pos]);
  return IndexSet(a.horizon(), std::move(out));
}

DisjointifyPlan disjointify(const std::vector<IndexSet>& A, const std::vector<Index>& N,
                            Index burn_in) {
  if (A.empty()) throw ParameterError("disjointify needs at least one set");
  if (A.size() != N.size()) throw ParameterError("disjointify: need one N_i per set");
  const Index horizon = A.front().horizon();
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (A[i].horizon() != horizon) throw ParameterError("disjointify: sets must share a horizon");
    if (N[i] < 1) throw ParameterError("disjointify: N_i must be positive");
  }
  if (burn_in < 0 || burn_in > horizon) throw ParameterError("disjointify: burn_in outside horizon");

  DisjointifyPlan plan;
  plan.inputs = A;
  plan.N = N;
  plan.burn_in = burn_in;
  const std::size_t count = A.size();
  std::vector<Runs> dilated(count);
  Index max_n = 0;

  for (std::size_t i = 0; i < count; ++i) {
    const std::string tag = "set " + std::to_string(i + 1);
    if (A[i].empty() || tail_min(A[i], burn_in) <= 0.0)
      throw ConstructionError("disjointify: " + tag + " has zero tail density at burn_in " +
                              std::to_string(burn_in));
    max_n = std::max(max_n, N[i]);
    const Index m = 2 * max_n;
    plan.M.push_back(m);

    double bound = std::numeric_limits<double>::infinity();
    std::size_t binding = count;
    for (std::size_t j = 0; j < i; ++j) {
      double v = std::ldexp(plan.thinned_tail_min[j], -2 * static_cast<int>(i - j));
      if (v < bound) {
        bound = v;
        binding = j;
      }
    }

    auto ms = A[i].members();
    Index s = m;
    Runs runs = dilated_runs(ms, s, m, horizon);
    while (runs_tail_max(runs, horizon, burn_in) > bound) {
      ++s;
      runs = dilated_runs(ms, s, m, horizon);
    }
    IndexSet thinned = thin(A[i], s);
    double tm = thinned.empty() ? 0.0 : tail_min(thinned, burn_in);
    if (tm <= 0.0) {
      std::string why = "disjointify: " + tag + " needs step s=" + std::to_string(s) +
                        " to keep its dilation below ";
      if (binding < count)
        why += "4^-" + std::to_string(i - binding) + " x tail_min of thinned set " +
               std::to_string(binding + 1) + " (" + std::to_string(bound) + ")";
      else
        why += "the density bound";
      why += ", and the thinned set then has no member up to burn_in " + std::to_string(burn_in);
      throw ConstructionError(why);
    }
    plan.s.push_back(s);
    plan.thinned.push_back(std::move(thinned));
    plan.thinned_tail_min.push_back(tm);
    dilated[i] = std::move(runs);
  }

  for (std::size_t i = 0; i < count; ++i) {
    std::vector<Index> kept;
    for (Index n : plan.thinned[i].members()) {
      bool hit = false;
      for (std::size_t j = i + 1; j < count && !hit; ++j) hit = in_runs(dilated[j], n);
      if (!hit) kept.push_back(n);
    }
    IndexSet b(horizon, std::move(kept));
    plan.output_tail_min.push_back(b.empty() ? 0.0 : tail_min(b, burn_in));
    plan.outputs.push_back(std::move(b));
  }
  return plan;
}

DisjointifyCheck check_disjointify(const DisjointifyPlan& plan) {
  DisjointifyCheck c;
  auto note = [&c](const std::string& what) {
    if (c.first_failure.empty()) c.first_failure = what;
  };
  const std::size_t count = plan.outputs.size();
  Index max_n = 0;
  std::vector<std::pair<Index, std::size_t>> all;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& b = plan.outputs[i];
    const auto& a = plan.inputs[i];
    if (!std::includes(a.members().begin(), a.members().end(), b.members().begin(),
                       b.members().end())) {
      c.subset = false;
      note("B_" + std::to_string(i + 1) + " is not contained in A_" + std::to_string(i + 1));
    }
    if (!b.empty() && b.min() < plan.N[i]) {
      c.min_bound = false;
      note("min B_" + std::to_string(i + 1) + " = " + std::to_string(b.min()) + " < N = " +
           std::to_string(plan.N[i]));
    }
    max_n = std::max(max_n, plan.N[i]);
    for (Index n : b.members()) all.emplace_back(n, i);
  }
  std::sort(all.begin(), all.end());
  for (std::size_t x = 0; x < all.size(); ++x) {
    for (std::size_t y = x + 1; y < all.size() && all[y].first - all[x].first < 2 * max_n; ++y) {
      auto [n, i] = all[x];
      auto [m, j] = all[y];
      if (n == m) {
        c.disjoint = false;
        note(std::to_string(n) + " lies in B_" + std::to_string(i + 1) + " and B_" +
             std::to_string(j + 1));
      } else if (m - n < plan.N[i] + plan.N[j]) {
        c.separation = false;
        note("|" + std::to_string(m) + " - " + std::to_string(n) + "| < N_" +
             std::to_string(i + 1) + " + N_" + std::to_string(j + 1));
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// E_p / F_p

std::vector<Index> default_b_sequence(int count) {
  std::vector<Index> b;
  for (int q = 1; q <= count; ++q) {
    if (2 * q > 60) throw ParameterError("default b_q overflows for q > 30");
    b.push_back((Index{1} << (2 * q)) * (2 * q + 1));
  }
  return b;
}

namespace {

IndexSet layer_union(const Rational& a, const Rational& eps, int layer, Index step, Index horizon) {
  std::vector<Index> out;
  // u runs over A_layer = 2^{layer-1} * odd
  const Index base = Index{1} << (layer - 1);
  for (Index u = base;; u += 2 * base) {
    if (u > 4096) break;
    auto iv = clipped_interval(a, eps, 1, static_cast<int>(u), horizon);
    if (!iv) break;
    Index first = ((iv->lo + step - 1) / step) * step;
    for (Index n = first; n <= iv->hi; n += step) out.push_back(n);
  }
  return IndexSet(horizon, std::move(out));
}

}  // namespace

EFSets build_EF_sets(const Rational& a, const Rational& eps, const std::vector<Index>& b,
                     int p_max, Index horizon, Index burn_in) {
  check_interval_params(a, eps, 1);
  if (static_cast<int>(b.size()) < p_max)
    throw ParameterError("b sequence shorter than p_max");
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i] < 1) throw ParameterError("b entries must be positive");
    if (i > 0 && b[i] <= b[i - 1]) throw ParameterError("b must be strictly increasing");
  }
  if (2 * p_max + 1 > 62) throw ParameterError("p_max too large");
  EFSets out;
  for (int p = 1; p <= p_max; ++p) {
    const Index bp = b[static_cast<std::size_t>(p - 1)];
    out.E.push_back(layer_union(a, eps, 2 * p, bp, horizon));
    out.F.push_back(layer_union(a, eps, 2 * p + 1, bp, horizon));
    for (auto [name, set] : {std::pair{"E_", &out.E.back()}, std::pair{"F_", &out.F.back()}}) {
      if (set->empty())
        out.warnings.push_back(std::string(name) + std::to_string(p) + " is empty at horizon " +
                               std::to_string(horizon));
    }
    out.E_tail_min.push_back(out.E.back().empty() ? 0.0 : tail_min(out.E.back(), burn_in));
    out.F_tail_min.push_back(out.F.back().empty() ? 0.0 : tail_min(out.F.back(), burn_in));
  }
  return out;
}

// ---------------------------------------------------------------------------
// bad set

Integer large_subset_count(Index J) {
  if (J < 1) throw ParameterError("block length J must be >= 1");
  Integer total = 0;
  Integer binom = 1;  // C(J, i)
  for (Index i = 0; i <= J; ++i) {
    if (2 * i >= J) total += binom;
    binom = binom * (J - i) / (i + 1);
  }
  return total;
}

std::vector<std::vector<Index>> first_large_subsets(Index J, Index count) {
  if (J < 1 || J > 62) throw ParameterError("full enumeration needs 1 <= J <= 62");
  std::vector<std::vector<Index>> out;
  const std::uint64_t end = std::uint64_t{1} << J;
  for (std::uint64_t mask = 0; mask < end && static_cast<Index>(out.size()) < count; ++mask) {
    if (2 * std::popcount(mask) < J) continue;
    std::vector<Index> f;
    for (Index b = 0; b < J; ++b)
      if (mask >> b & 1) f.push_back(b);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<std::vector<Index>> sampled_large_subsets(Index J, Index count, std::uint64_t seed) {
  if (J < 1) throw ParameterError("block length J must be >= 1");
  std::mt19937_64 gen(seed);
  std::vector<std::vector<Index>> out;
  std::vector<bool> bits(static_cast<std::size_t>(J));
  for (Index c = 0; c < count; ++c) {
    Index ones = 0;
    for (Index b = 0; b < J; b += 64) {
      std::uint64_t word = gen();
      for (Index t = 0; t < 64 && b + t < J; ++t) {
        bits[b + t] = word >> t & 1;
        ones += bits[b + t];
      }
    }
    const bool flip = 2 * ones < J;
    std::vector<Index> f;
    for (Index b = 0; b < J; ++b)
      if (bits[b] != flip) f.push_back(b);
    out.push_back(std::move(f));
  }
  return out;
}

BadSetParams BadSetParams::from_json(const nlohmann::json& j) {
  std::vector<std::string> problems;
  BadSetParams p;
  try {
    if (!j.contains("J") || !j["J"].is_array() || j["J"].empty())
      problems.push_back("J: non-empty integer array required");
    else
      for (const auto& v : j["J"]) p.J.push_back(v.get<Index>());
    if (j.contains("mode")) {
      const auto& m = j["mode"];
      if (m.is_string()) {
        if (m.get<std::string>() != "full") problems.push_back("mode: expected \"full\" or {sampled}");
      } else if (m.is_object() && m.contains("sampled")) {
        p.sampled = true;
        p.sample_count = m["sampled"].value("count", Index{0});
        p.seed = m["sampled"].value("seed", std::uint64_t{0});
        if (p.sample_count < 1) problems.push_back("mode.sampled.count must be >= 1");
      } else {
        problems.push_back("mode: expected \"full\" or {\"sampled\":{count,seed}}");
      }
    }
    p.k_max = j.value("k_max", 1);
    p.horizon = j.value("horizon", Index{-1});
    p.full_cap = j.value("full_cap", p.full_cap);
  } catch (const nlohmann::json::exception& e) {
    problems.push_back(e.what());
  }
  if (p.k_max < 1) problems.push_back("k_max must be >= 1");
  if (p.horizon < 0) problems.push_back("horizon: non-negative integer required");
  if (static_cast<int>(p.J.size()) < p.k_max) problems.push_back("J needs at least k_max entries");
  if (!problems.empty()) {
    std::string msg = "bad-set parameters:";
    for (const auto& s : problems) msg += "\n  " + s;
    throw ParameterError(msg);
  }
  return p;
}

nlohmann::json BadSetParams::to_json() const {
  nlohmann::json j;
  j["J"] = J;
  if (sampled)
    j["mode"] = {{"sampled", {{"count", sample_count}, {"seed", seed}}}};
  else
    j["mode"] = "full";
  j["k_max"] = k_max;
  j["horizon"] = horizon;
  j["full_cap"] = full_cap;
  return j;
}

BadSet build_bad_set(const BadSetParams& params) {
  const auto& J = params.J;
  if (params.k_max < 1 || static_cast<int>(J.size()) < params.k_max)
    throw ParameterError("bad set: need k_max >= 1 and k_max block lengths");
  if (params.horizon < 0) throw ParameterError("bad set: horizon must be non-negative");
  for (int k = 0; k < params.k_max; ++k) {
    if (J[k] < 1) throw ParameterError("bad set: block lengths must be positive");
    if (k > 0 && J[k] <= J[k - 1]) throw ParameterError("bad set: J must be increasing");
  }
  const Index horizon = params.horizon;
  BadSet out;
  std::vector<Index> all;
  Integer prev_m = 0;

  for (int k = 1; k <= params.k_max; ++k) {
    const Index jk = J[k - 1];
    Integer c;
    if (params.sampled) {
      c = params.sample_count;
    } else {
      c = large_subset_count(jk);
      if (c > params.full_cap)
        throw BudgetError("bad set: full family for J_" + std::to_string(k) + " = " +
                          std::to_string(jk) + " has " + c.str() +
                          " members, above the cap of " + std::to_string(params.full_cap) +
                          "; use sampled mode");
    }
    if (k >= 2 && Integer(jk) < 2 * prev_m)
      throw ParameterError("bad set: J_" + std::to_string(k) + " = " + std::to_string(jk) +
                           " is below 2 M_" + std::to_string(k - 1) + " = " +
                           Integer(2 * prev_m).str());
    const Index ck = c.convert_to<Index>();
    Integer mk = boost::multiprecision::pow(Integer(k + 1), static_cast<unsigned>(ck)) * jk;
    out.family_count.push_back(c);
    out.M.push_back(mk);

    // Blocks s J_k + F_{k,j} for (k+1)^j <= s < (k+1)^{j+1}, inside the horizon.
    std::vector<Index> layer;
    const bool reachable = k == 1 || prev_m <= Integer(horizon);
    const Index start = k == 1 ? 0 : (reachable ? prev_m.convert_to<Index>() : horizon + 1);
    for (Index n = start; n < jk && n <= horizon; ++n) layer.push_back(n);
    Index needed = 0;  // families whose blocks start inside the horizon
    for (Integer pw = 1; reachable && needed < ck && pw * jk <= horizon; pw *= (k + 1)) ++needed;
    auto families = params.sampled
                        ? sampled_large_subsets(jk, needed, params.seed + 0x9E3779B97F4A7C15ULL * k)
                        : first_large_subsets(jk, needed);
    Index lo = 1;
    for (Index j = 0; j < static_cast<Index>(families.size()); ++j) {
      Index hi = lo * (k + 1);  // s in [lo, hi)
      for (Index s = lo; s < hi && s <= horizon / jk; ++s)
        for (Index f : families[j]) {
          Index n = s * jk + f;
          if (n <= horizon) layer.push_back(n);
        }
      lo = hi;
    }
    std::sort(layer.begin(), layer.end());
    all.insert(all.end(), layer.begin(), layer.end());
    out.layers.emplace_back(horizon, std::move(layer));
    out.families.push_back(std::move(families));
    prev_m = mk;
  }
  out.set = IndexSet::from_unsorted(horizon, std::move(all));
  return out;
}

}  // namespace fhclab
