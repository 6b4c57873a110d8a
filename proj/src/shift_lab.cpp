#include "fhclab/shift_lab.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace fhclab {

namespace {

// e with q = 2^e, if q is a (possibly negative) power of two.
std::optional<Index> exact_log2(const Rational& q) {
  if (q <= 0) return std::nullopt;
  Integer num = boost::multiprecision::numerator(q);
  Integer den = boost::multiprecision::denominator(q);
  auto pow_of_two = [](const Integer& v) { return (v & (v - 1)) == 0; };
  if (den == 1 && pow_of_two(num)) return static_cast<Index>(boost::multiprecision::msb(num));
  if (num == 1 && pow_of_two(den)) return -static_cast<Index>(boost::multiprecision::msb(den));
  return std::nullopt;
}

// Least k with 2^k >= t (t > 0).
Index ceil_log2(const Rational& t) {
  if (t <= 0) return std::numeric_limits<Index>::min();
  Integer num = boost::multiprecision::numerator(t);
  Integer den = boost::multiprecision::denominator(t);
  Index k = static_cast<Index>(boost::multiprecision::msb(num)) -
            static_cast<Index>(boost::multiprecision::msb(den));
  // 2^{k-1} < t < 2^{k+1}; settle by exact comparison
  while (pow2(static_cast<int>(k - 1)) >= t) --k;
  while (pow2(static_cast<int>(k)) < t) ++k;
  return k;
}

}  // namespace

WeightSystem WeightSystem::from_log2_cumulative(std::vector<Index> log2_w) {
  if (log2_w.empty()) throw ParameterError("weight system needs W(0)");
  if (log2_w.front() != 0) throw ParameterError("W(0) must be 1");
  WeightSystem w;
  w.horizon_ = static_cast<Index>(log2_w.size()) - 1;
  w.dyadic_ = true;
  w.log2_ = std::move(log2_w);
  return w;
}

WeightSystem WeightSystem::from_weights(const std::vector<Rational>& weights) {
  std::vector<Index> logs{0};
  bool dyadic = true;
  for (const auto& x : weights) {
    if (x <= 0) throw ParameterError("weights must be positive");
    if (dyadic) {
      if (auto e = exact_log2(x))
        logs.push_back(logs.back() + *e);
      else
        dyadic = false;
    }
  }
  if (dyadic) return from_log2_cumulative(std::move(logs));
  WeightSystem w;
  w.horizon_ = static_cast<Index>(weights.size());
  w.dyadic_ = false;
  w.cum_.reserve(weights.size() + 1);
  w.cum_.push_back(Rational(1));
  for (const auto& x : weights) w.cum_.push_back(w.cum_.back() * x);
  return w;
}

WeightSystem WeightSystem::constant(const Rational& c, Index horizon) {
  if (horizon < 0) throw ParameterError("negative weight horizon");
  return from_weights(std::vector<Rational>(static_cast<std::size_t>(horizon), c));
}

void WeightSystem::check_index(Index n, Index lo) const {
  if (n < lo || n > horizon_)
    throw ParameterError("weight index " + std::to_string(n) + " outside [" + std::to_string(lo) +
                         ", " + std::to_string(horizon_) + "]");
}

Rational WeightSystem::weight(Index n) const {
  check_index(n, 1);
  if (dyadic_) return pow2(static_cast<int>(log2_[n] - log2_[n - 1]));
  return cum_[n] / cum_[n - 1];
}

Rational WeightSystem::cumulative(Index n) const {
  check_index(n, 0);
  if (dyadic_) return pow2(static_cast<int>(log2_[n]));
  return cum_[n];
}

Index WeightSystem::log2_cumulative(Index n) const {
  check_index(n, 0);
  if (!dyadic_) throw DomainError("log2 W requested for a non-dyadic weight system");
  return log2_[n];
}

long double WeightSystem::cumulative_real(Index n) const {
  check_index(n, 0);
  if (dyadic_) return std::ldexp(1.0L, static_cast<int>(log2_[n]));
  return cum_[n].convert_to<long double>();
}

bool WeightSystem::cumulative_at_least(Index n, const Rational& threshold) const {
  check_index(n, 0);
  if (dyadic_) return log2_[n] >= ceil_log2(threshold);
  return cum_[n] >= threshold;
}

bool WeightSystem::cumulative_above(Index n, const Rational& threshold) const {
  check_index(n, 0);
  if (dyadic_) return pow2(static_cast<int>(log2_[n])) > threshold;
  return cum_[n] > threshold;
}

WeightSystem WeightSystem::with_weight(Index n, const Rational& value) const {
  check_index(n, 1);
  std::vector<Rational> ws;
  ws.reserve(static_cast<std::size_t>(horizon_));
  for (Index k = 1; k <= horizon_; ++k) ws.push_back(k == n ? value : weight(k));
  return from_weights(ws);
}

std::optional<Index> WeightSystem::tent_invariant_violation() const {
  if (!dyadic_) return Index{1};
  for (Index n = 1; n <= horizon_; ++n) {
    Index step = log2_[n] - log2_[n - 1];
    if (log2_[n] < 0 || step > 1 || step < -1) return n;
  }
  return std::nullopt;
}

void WeightSystem::require_tent_invariants(const std::string& name) const {
  if (auto bad = tent_invariant_violation())
    throw ConstructionError("weight system " + name + " breaks the tent invariants at n = " +
                            std::to_string(*bad) + " (w_n = " + weight(*bad).str() + ")");
}

WeightSystem plateau_weights(const std::vector<TentSpec>& tents, Index horizon) {
  if (horizon < 0) throw ParameterError("negative weight horizon");
  std::vector<Index> lw(static_cast<std::size_t>(horizon) + 1, 0);
  for (const auto& t : tents) {
    if (t.height < 0) throw ParameterError("tent heights must be non-negative");
    if (t.height == 0) continue;
    const Index h = t.height;
    auto ms = t.plateau.members();
    std::size_t i = 0;
    while (i < ms.size()) {
      std::size_t j = i;
      while (j + 1 < ms.size() && ms[j + 1] == ms[j] + 1) ++j;
      const Index lo = ms[i], hi = ms[j];
      const Index from = std::max<Index>(lo - h + 1, 0);
      const Index to = std::min(hi + h - 1, horizon);
      for (Index n = from; n <= to; ++n) {
        Index d = n < lo ? lo - n : (n > hi ? n - hi : 0);
        Index v = h - d;
        if (n == 0 || !t.window.contains(n))
          throw ConstructionError("tent '" + t.label + "' (height " + std::to_string(h) +
                                  ") paints n = " + std::to_string(n) + " outside its window");
        lw[n] = std::max(lw[n], v);
      }
      i = j + 1;
    }
  }
  return WeightSystem::from_log2_cumulative(std::move(lw));
}

std::vector<Index> CounterexampleParams::b_or_default() const {
  if (b.empty()) return default_b_sequence(p_max);
  if (static_cast<int>(b.size()) < p_max) throw ParameterError("b has fewer than p_max entries");
  return b;
}

CounterexampleParams CounterexampleParams::from_json(const nlohmann::json& j) {
  CounterexampleParams p;
  std::vector<std::string> problems;
  auto rational_field = [&](const char* key, Rational& out) {
    if (!j.contains(key)) return;
    try {
      const auto& v = j[key];
      out = v.is_string() ? parse_rational(v.get<std::string>())
                          : parse_rational(v.dump());
    } catch (const std::exception& e) {
      problems.push_back(std::string(key) + ": " + e.what());
    }
  };
  rational_field("a", p.a);
  rational_field("eps", p.eps);
  try {
    p.p_max = j.value("p_max", p.p_max);
    p.horizon = j.value("H", j.value("horizon", p.horizon));
    if (j.contains("b_rule")) {
      const auto& r = j["b_rule"];
      if (r.is_array())
        p.b = r.get<std::vector<Index>>();
      else if (!(r.is_string() && r.get<std::string>() == "default"))
        problems.push_back("b_rule: expected \"default\" or an integer array");
    }
  } catch (const nlohmann::json::exception& e) {
    problems.push_back(e.what());
  }
  if (p.p_max < 0) problems.push_back("p_max must be >= 0");
  if (p.horizon < 0) problems.push_back("H must be non-negative");
  if (!problems.empty()) {
    std::string msg = "counterexample parameters:";
    for (const auto& s : problems) msg += "\n  " + s;
    throw ParameterError(msg);
  }
  return p;
}

nlohmann::json CounterexampleParams::to_json() const {
  nlohmann::json j;
  j["a"] = a.str();
  j["eps"] = eps.str();
  if (b.empty())
    j["b_rule"] = "default";
  else
    j["b_rule"] = b;
  j["p_max"] = p_max;
  j["H"] = horizon;
  return j;
}

namespace {

// Unclipped integer interval of I_u at the multiplier, or nullopt when its real lower
// endpoint is above `limit` (bounds would then be useless and may overflow).
std::optional<IntegerInterval> interval_below(const CounterexampleParams& c, int mult, Index u,
                                              Index limit) {
  Rational au = rational_pow(c.a, static_cast<int>(u));
  Rational lo = (1 - mult * c.eps) * au;
  if (lo > Rational(limit)) return std::nullopt;
  Rational hi = (1 + mult * c.eps) * au;
  return IntegerInterval{ceil_int(lo), floor_int(hi)};
}

// Members u of the layer A_k whose mult-4 window starts at or below the horizon.
std::vector<Index> reachable_layer(const CounterexampleParams& c, int k) {
  std::vector<Index> us;
  if (k > 40) return us;
  const Index base = Index{1} << (k - 1);
  for (Index u = base; u < 4096; u += 2 * base) {
    if (!interval_below(c, 4, u, c.horizon)) break;
    us.push_back(u);
  }
  return us;
}

}  // namespace

std::vector<TentSpec> counterexample_tents(const CounterexampleParams& params, int parity) {
  if (parity != 0 && parity != 1) throw ParameterError("parity must be 0 or 1");
  auto check = verify_interval_conditions(params.a, params.eps, 1);
  if (!check.all()) throw ParameterError("interval conditions fail: " + check.first_failure);
  const Index H = params.horizon;
  const auto b = params.b_or_default();
  std::vector<TentSpec> tents;

  // (u, p) for u in the layers used by this parity
  std::vector<std::pair<Index, int>> us;
  for (int p = 1; p <= params.p_max; ++p)
    for (Index u : reachable_layer(params, 2 * p + parity)) us.emplace_back(u, p);
  std::sort(us.begin(), us.end());

  for (auto [u, p] : us) {
    auto plateau = interval_below(params, 1, u, H + u);
    auto window = interval_below(params, 2, u, H);
    if (!plateau || !window) continue;
    TentSpec t;
    t.height = u;
    t.plateau = IndexSet::interval(H + u, plateau->lo, plateau->hi);
    t.window = IndexSet::interval(H, window->lo, window->hi);
    t.label = "layer u=" + std::to_string(u);
    tents.push_back(std::move(t));
  }
  for (int p = 1; p <= params.p_max; ++p) {
    const Index bp = b[static_cast<std::size_t>(p - 1)];
    TentSpec t;
    t.height = p;
    t.plateau = IndexSet::progression(H + p, bp, bp);
    t.window = dilate(IndexSet::progression(H + p, bp, bp), p).clipped(H);
    t.label = "multiples of b_" + std::to_string(p);
    tents.push_back(std::move(t));
  }
  for (auto [u, p] : us) {
    auto iu = interval_below(params, 1, u, H + params.p_max);
    auto window = interval_below(params, 4, u, H);
    if (!iu || !window) continue;
    for (auto [v, q] : us) {
      if (v >= u) break;
      auto iv = interval_below(params, 1, v, std::numeric_limits<Index>::max() / 4);
      const Index h = std::max(p, q);
      TentSpec t;
      t.height = h;
      t.plateau = IndexSet::interval(H + h, iu->lo - iv->hi, iu->hi - iv->lo);
      t.window = IndexSet::interval(H, window->lo, window->hi);
      t.label = "difference u=" + std::to_string(u) + ", v=" + std::to_string(v);
      tents.push_back(std::move(t));
    }
  }
  return tents;
}

CounterexamplePair counterexample_pair(const CounterexampleParams& params) {
  CounterexamplePair pair;
  pair.params = params;
  auto even = counterexample_tents(params, 0);
  auto odd = counterexample_tents(params, 1);
  pair.tent_count_w = even.size();
  pair.tent_count_w_prime = odd.size();
  pair.w = plateau_weights(even, params.horizon);
  pair.w_prime = plateau_weights(odd, params.horizon);
  pair.w.require_tent_invariants("w");
  pair.w_prime.require_tent_invariants("w'");
  pair.sets = build_EF_sets(params.a, params.eps, params.b_or_default(), params.p_max,
                            params.horizon, std::min<Index>(1000, params.horizon));
  return pair;
}

bool FhcShiftReport::growth_ok() const {
  return std::all_of(non_decreasing.begin(), non_decreasing.end(), [](bool b) { return b; }) &&
         std::all_of(grows.begin(), grows.end(), [](bool b) { return b; });
}

bool FhcShiftReport::all_non_decreasing() const {
  return std::all_of(non_decreasing.begin(), non_decreasing.end(), [](bool b) { return b; });
}

namespace {

long double log2_of(const WeightSystem& w, Index n) {
  if (w.is_dyadic()) return static_cast<long double>(w.log2_cumulative(n));
  return std::log2(w.cumulative_real(n));
}

}  // namespace

FhcShiftReport check_fhc_shift(const WeightSystem& w, const std::vector<IndexSet>& E,
                               std::vector<Rational> M, Index horizon) {
  if (horizon > w.horizon()) throw ParameterError("check horizon exceeds weight horizon");
  if (M.empty())
    for (std::size_t p = 1; p <= E.size(); ++p) M.push_back(pow2(static_cast<int>(p)));
  if (M.size() != E.size()) throw ParameterError("need one M(p) per set");

  FhcShiftReport r;
  std::vector<std::pair<Index, std::size_t>> all;
  for (std::size_t p = 0; p < E.size(); ++p)
    for (Index n : E[p].members())
      if (n <= horizon) all.emplace_back(n, p);
  std::sort(all.begin(), all.end());
  for (std::size_t i = 1; i < all.size(); ++i)
    if (all[i].first == all[i - 1].first) {
      // separation is meaningless for shared members; report and stop
      r.disjoint = false;
      r.first_failure = std::to_string(all[i].first) + " lies in E_" +
                        std::to_string(all[i - 1].second + 1) + " and E_" +
                        std::to_string(all[i].second + 1);
      return r;
    }

  for (std::size_t p = 0; p < E.size(); ++p) {
    std::vector<WindowMinimum> win;
    for (Index n : E[p].members()) {
      if (n > horizon) break;
      int j = n == 0 ? -1 : static_cast<int>(std::bit_width(static_cast<std::uint64_t>(n))) - 1;
      long double v = log2_of(w, n);
      if (win.empty() || win.back().j != j)
        win.push_back({j, v, n});
      else if (v < win.back().log2_min)
        win.back() = {j, v, n};
    }
    bool nd = true;
    for (std::size_t i = 1; i < win.size(); ++i)
      if (win[i].log2_min < win[i - 1].log2_min) nd = false;
    bool grows = win.size() < 2 || win.back().log2_min > win.front().log2_min;
    if ((!nd || !grows) && r.first_failure.empty())
      r.first_failure = "windowed minima of W along E_" + std::to_string(p + 1) +
                        (nd ? " do not grow" : " decrease");
    r.windows.push_back(std::move(win));
    r.non_decreasing.push_back(nd);
    r.grows.push_back(grows);
  }

  std::vector<Index> need_log2;
  if (w.is_dyadic())
    for (const auto& m : M) need_log2.push_back(ceil_log2(m));
  for (std::size_t a = 1; a < all.size() && r.separation; ++a) {
    auto [m, p] = all[a];
    for (std::size_t b = 0; b < a; ++b) {
      auto [n, q] = all[b];
      ++r.pairs_checked;
      bool ok = w.is_dyadic()
                    ? w.log2_cumulative(m - n) >= std::max(need_log2[p], need_log2[q])
                    : w.cumulative_at_least(m - n, std::max(M[p], M[q]));
      if (!ok) {
        r.separation = false;
        if (r.first_failure.empty())
          r.first_failure = "W(" + std::to_string(m) + " - " + std::to_string(n) +
                            ") below max(M(" + std::to_string(p + 1) + "), M(" +
                            std::to_string(q + 1) + "))";
        break;
      }
    }
  }
  return r;
}

GpReport gp_inclusion_check(const CounterexamplePair& pair, int p, Index horizon, Index burn_in) {
  pair.w.require_tent_invariants("w");
  pair.w_prime.require_tent_invariants("w'");
  if (p < 1) throw ParameterError("p must be >= 1");
  horizon = std::min({horizon, pair.w.horizon(), pair.w_prime.horizon()});
  const auto b = pair.params.b_or_default();
  GpReport r;
  r.p = p;
  r.burn_in = burn_in;
  std::vector<Index> g;
  for (Index n = 0; n <= horizon; ++n)
    if (pair.w.log2_cumulative(n) >= p && pair.w_prime.log2_cumulative(n) >= p) g.push_back(n);
  for (Index n : g) {
    bool covered = false;
    for (int q = p; q <= pair.params.p_max && !covered; ++q) {
      const Index bq = b[static_cast<std::size_t>(q - 1)];
      Index below = (n / bq) * bq;
      Index d = std::min(below >= bq ? n - below : std::numeric_limits<Index>::max(),
                         below + bq - n);
      covered = d <= q;
    }
    if (!covered) {
      r.inclusion = false;
      r.first_violation = n;
      break;
    }
  }
  r.G = IndexSet(horizon, std::move(g));
  r.tail_max = r.G.empty() ? 0.0 : tail_max(r.G, std::min(burn_in, horizon));
  return r;
}

DefectReport transitivity_defect(const WeightSystem& w, const Rational& M, Index horizon,
                                 Index burn_in, double margin) {
  if (M <= 0) throw ParameterError("threshold M must be positive");
  horizon = std::min(horizon, w.horizon());
  std::vector<Index> c;
  if (w.is_dyadic()) {
    // W(n) = 2^k > M  iff  k > floor(log2 M), i.e. k >= ceil_log2(M) unless M is a power of two
    Index need = ceil_log2(M);
    if (pow2(static_cast<int>(need)) == M) ++need;
    for (Index n = 0; n <= horizon; ++n)
      if (w.log2_cumulative(n) >= need) c.push_back(n);
  } else {
    for (Index n = 0; n <= horizon; ++n)
      if (w.cumulative_above(n, M)) c.push_back(n);
  }
  DefectReport r;
  r.C = IndexSet(horizon, std::move(c));
  r.profile = density_profile(r.C, burn_in);
  r.margin = margin;
  r.bounded_away = r.profile.tail_max < 1.0 - margin;
  return r;
}

double defect_closed_form_bound(const CounterexampleParams& params, int p) {
  const double a = params.a.convert_to<double>();
  const double e = params.eps.convert_to<double>();
  double bound = 8 * e / (1 + 4 * e) * a / (a - 1);
  const auto b = params.b_or_default();
  for (int q = p + 1; q <= params.p_max; ++q)
    bound += static_cast<double>(2 * q + 1) / static_cast<double>(b[static_cast<std::size_t>(q - 1)]);
  return bound;
}

void write_weights_csv(std::ostream& out, const WeightSystem& w) {
  out << "n,w_n,log2W_n\n";
  std::ostringstream row;
  row.precision(17);
  for (Index n = 0; n <= w.horizon(); ++n) {
    row.str({});
    row << n << ',';
    if (n > 0) row << w.weight(n).str();
    row << ',';
    if (w.is_dyadic())
      row << w.log2_cumulative(n);
    else
      row << static_cast<double>(std::log2(w.cumulative_real(n)));
    row << '\n';
    out << row.str();
  }
}

}  // namespace fhclab
