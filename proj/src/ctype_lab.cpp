#include "fhclab/ctype_lab.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fhclab {

Index CTypeParams::block_of(Index k) const {
  auto it = std::upper_bound(b.begin(), b.end(), k);
  if (k < 0 || it == b.end()) throw ParameterError("coordinate outside the materialized blocks");
  return static_cast<Index>(it - b.begin()) - 1;
}

void CTypeParams::validate() const {
  auto fail = [](const std::string& what) { throw ConstructionError("C-type parameters: " + what); };
  if (n_max < 1) fail("need at least one block");
  if (static_cast<Index>(b.size()) != n_max + 1) fail("b must have n_max + 1 entries");
  if (b[0] != 0) fail("b_0 must be 0");
  for (Index n = 0; n < n_max; ++n)
    if (b[n + 1] <= b[n]) fail("b must be strictly increasing (at n = " + std::to_string(n) + ")");
  if (static_cast<Index>(phi.size()) < n_max) fail("phi must be given for every block");
  if (phi[0] != 0) fail("phi(0) must be 0");
  for (Index n = 1; n < n_max; ++n)
    if (phi[n] < 0 || phi[n] >= n) fail("phi(" + std::to_string(n) + ") must lie in [0, n)");
  for (Index n = 1; n < n_max; ++n) {
    Index size = b[n + 1] - b[n];
    Index base = 2 * (b[phi[n] + 1] - b[phi[n]]);
    if (size % base != 0)
      fail("b_" + std::to_string(n + 1) + " - b_" + std::to_string(n) + " = " +
           std::to_string(size) + " is not a multiple of " + std::to_string(base));
  }
  if (static_cast<Index>(v.size()) < n_max) fail("v must be given for blocks 1..n_max-1");
  for (Index n = 1; n < n_max; ++n)
    if (v[n] == 0) fail("v_" + std::to_string(n) + " is zero");
  if (static_cast<Index>(weights.size()) < dim()) fail("weights must cover 1..b_{n_max}-1");
  for (Index j = 1; j < dim(); ++j)
    if (weights[j] == 0) fail("weight w_" + std::to_string(j) + " is zero");
}

CPlusOneParams CPlusOneParams::from_schedule(const std::vector<Index>& Delta, Index Delta0) {
  CPlusOneParams p;
  p.Delta0 = Delta0;
  p.Delta = Delta;
  p.k_max = static_cast<int>(Delta.size());
  for (Index d : Delta) {
    if (d % 8 != 0) throw ParameterError("schedule needs every Delta in 8N, got " + std::to_string(d));
    p.delta.push_back(d / 4);
    p.tau.push_back(d / 8);
  }
  return p;
}

CPlusOneParams CPlusOneParams::preset(const std::string& name) {
  if (name == "delta-8-32") {
    CPlusOneParams p;
    p.Delta0 = 1;
    p.Delta = {8, 32};
    p.delta = {2, 8};
    p.tau = {1, 4};
    p.k_max = 2;
    return p;
  }
  throw ParameterError("unknown preset '" + name + "' (known: delta-8-32)");
}

CPlusOneParams CPlusOneParams::from_json(const nlohmann::json& j) {
  CPlusOneParams p;
  std::vector<std::string> problems;
  try {
    p.Delta0 = j.value("Delta0", Index{1});
    if (j.contains("Delta")) p.Delta = j["Delta"].get<std::vector<Index>>();
    else problems.push_back("Delta: integer array required");
    if (j.contains("delta")) p.delta = j["delta"].get<std::vector<Index>>();
    if (j.contains("tau")) p.tau = j["tau"].get<std::vector<Index>>();
    p.k_max = j.value("k_max", static_cast<int>(p.Delta.size()));
  } catch (const nlohmann::json::exception& e) {
    problems.push_back(e.what());
  }
  if (problems.empty() && p.delta.empty() && p.tau.empty()) {
    try {
      auto s = from_schedule(p.Delta, p.Delta0);
      p.delta = s.delta;
      p.tau = s.tau;
    } catch (const std::exception& e) {
      problems.push_back(e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "C-type parameters:";
    for (const auto& s : problems) msg += "\n  " + s;
    throw ParameterError(msg);
  }
  return p;
}

nlohmann::json CPlusOneParams::to_json() const {
  return {{"Delta0", Delta0}, {"Delta", Delta}, {"delta", delta}, {"tau", tau}, {"k_max", k_max}};
}

void CPlusOneParams::validate() const {
  auto fail = [](const std::string& what) { throw ParameterError("C+,1 parameters: " + what); };
  if (k_max < 1) fail("k_max must be >= 1");
  if (k_max > 20) fail("k_max above 20 would materialize more than 2^20 blocks");
  auto sz = static_cast<std::size_t>(k_max);
  if (Delta.size() < sz || delta.size() < sz || tau.size() < sz)
    fail("Delta, delta and tau need k_max entries");
  if (Delta0 < 1) fail("Delta0 must be >= 1");
  for (std::size_t k = 0; k < sz; ++k) {
    const std::string at = " at k = " + std::to_string(k + 1);
    if (delta[k] < 0 || delta[k] >= Delta[k]) fail("need 0 <= delta < Delta" + at);
    if (tau[k] < 0) fail("tau must be non-negative" + at);
    if (k > 0 && (delta[k] < delta[k - 1] || tau[k] < tau[k - 1]))
      fail("delta and tau must be increasing" + at);
    Index prev = k == 0 ? Delta0 : Delta[k - 1];
    if (Delta[k] % (2 * prev) != 0)
      fail("Delta" + at + " = " + std::to_string(Delta[k]) + " is not a multiple of 2 x " +
           std::to_string(prev));
  }
}

CTypeParams cplus1_params(const CPlusOneParams& p) {
  p.validate();
  CTypeParams c;
  c.n_max = Index{1} << p.k_max;
  c.b = {0, p.Delta0};
  c.phi = {0};
  c.v = {Rational(0)};
  for (int k = 1; k <= p.k_max; ++k)
    for (Index n = Index{1} << (k - 1); n < (Index{1} << k); ++n) {
      c.b.push_back(c.b.back() + p.Delta[k - 1]);
      c.phi.push_back(n - (Index{1} << (k - 1)));
      c.v.push_back(pow2(-static_cast<int>(p.tau[k - 1])));
    }
  c.weights.assign(static_cast<std::size_t>(c.dim()), Rational(1));
  for (int k = 1; k <= p.k_max; ++k)
    for (Index n = Index{1} << (k - 1); n < (Index{1} << k); ++n)
      for (Index i = 1; i < p.Delta[k - 1]; ++i)
        c.weights[c.b[n] + i] = i <= p.delta[k - 1] ? Rational(2) : Rational(1);
  c.validate();
  return c;
}

LinearOperator<Rational> build_ctype(const CTypeParams& params) {
  params.validate();
  std::vector<Triplet<Rational>> t;
  for (Index n = 0; n < params.n_max; ++n) {
    const Index lo = params.b[n], hi = params.b[n + 1];
    Rational prod = 1;
    for (Index k = lo; k + 1 < hi; ++k) {
      t.emplace_back(int(k + 1), int(k), params.weights[k + 1]);
      prod *= params.weights[k + 1];
    }
    const int last = static_cast<int>(hi - 1);
    if (n >= 1) t.emplace_back(int(params.b[params.phi[n]]), last, params.v[n]);
    t.emplace_back(int(lo), last, -Rational(1) / prod);
  }
  return LinearOperator<Rational>::from_triplets(params.dim(), params.dim(), t);
}

bool truncation_invariant(const LinearOperator<Rational>& T, const CTypeParams& params) {
  const auto& m = T.matrix();
  for (int c = 0; c < m.outerSize(); ++c) {
    // the smallest b_N above c bounds every row the column may touch
    Index bound = params.b[params.block_of(c) + 1];
    for (SparseMatrix<Rational>::InnerIterator it(m, c); it; ++it)
      if (it.row() >= bound) return false;
  }
  return true;
}

PeriodicityReport check_periodicity(const LinearOperator<Rational>& T, const CTypeParams& params,
                                    Index n) {
  if (n < 0 || n >= params.n_max) throw ParameterError("block index outside [0, n_max)");
  if (T.rows() != params.dim()) throw ParameterError("operator does not match the parameters");
  PeriodicityReport r;
  r.block = n;
  r.period = 2 * params.block_size(n);
  for (Index k = params.b[n]; k < params.b[n + 1]; ++k) {
    Vector<Rational> e = Vector<Rational>::Zero(T.cols());
    e(k) = 1;
    if (T.power_apply(e, r.period) != e) {
      r.ok = false;
      r.failing_k = k;
      break;
    }
  }
  return r;
}

PeriodicityReport check_periodicity(const LinearOperator<Real>&, const CTypeParams&, Index) {
  throw ArithmeticModeError("periodicity is an exact identity; build the operator in exact mode");
}

namespace {

Rational head_l1(const Vector<Rational>& y, Index K) {
  Rational s = 0;
  for (Index r = 0; r < K; ++r) s += abs_value(y(r));
  return s;
}

Rational lp_power(const Vector<Rational>& y, Index from, Index to, int p) {
  Rational s = 0;
  for (Index r = from; r < to; ++r) {
    Rational a = abs_value(y(r)), t = 1;
    for (int i = 0; i < p; ++i) t *= a;
    s += t;
  }
  return s;
}

// Dyadic entries with small numerators, so exact arithmetic stays cheap.
Vector<Rational> random_dyadic(std::mt19937_64& gen, Index dim, Index from, Index to) {
  Vector<Rational> x = Vector<Rational>::Zero(dim);
  for (Index k = from; k < to; ++k) {
    auto bits = gen();
    Index num = static_cast<Index>(bits % 17) - 8;
    int den = static_cast<int>((bits >> 8) % 4);
    x(k) = Rational(num) * pow2(-den);
  }
  if (to > from && x.segment(from, to - from).isZero()) x(from) = 1;
  return x;
}

}  // namespace

NotHfhcReport check_nothfhc(const LinearOperator<Rational>& T, const CTypeParams& params, int n,
                            const NotHfhcOptions& options) {
  if (n < 1) throw ParameterError("level n must be >= 1");
  if (n >= 62 || (Index{1} << n) >= params.n_max)
    throw ParameterError("need 2^n < n_max (n = " + std::to_string(n) + ", n_max = " +
                         std::to_string(params.n_max) + ")");
  if (options.j_max < 0) throw ParameterError("j_max must be non-negative");
  if (options.p < 1) throw ParameterError("p must be >= 1");
  NotHfhcReport r;
  r.n = n;
  r.K = params.b[Index{1} << n];
  const Index first = Index{1} << (n - 1);
  r.J = 2 * params.block_size(first);
  r.p = options.p;
  r.j_max = options.j_max;
  r.substitution = "j in [0, " + std::to_string(options.j_max) +
                   "] tested in place of the full range up to (n+1)^(2^J) J";
  const Index dim = T.cols();

  for (Index k = 0; k < r.K; ++k) {
    Vector<Rational> e = Vector<Rational>::Zero(dim);
    e(k) = 1;
    if (T.power_apply(e, r.J) != e) {
      r.a_ok = false;
      r.a_failing_k = k;
      break;
    }
  }

  const double cost = static_cast<double>(dim - r.K) * static_cast<double>(options.j_max) *
                      static_cast<double>(std::max<Index>(T.nonzeros(), 1));
  if (cost > options.budget)
    throw BudgetError("condition (b) needs about " + std::to_string(cost) +
                      " exact multiply-adds, above the budget of " +
                      std::to_string(options.budget));

  if (options.p == 1) {
    r.norms.assign(static_cast<std::size_t>(options.j_max) + 1, Rational(0));
    std::vector<Index> argmax(r.norms.size(), -1);
    for (Index c = r.K; c < dim; ++c) {
      Vector<Rational> y = Vector<Rational>::Zero(dim);
      y(c) = 1;
      for (Index j = 0; j <= options.j_max; ++j) {
        Rational s = head_l1(y, r.K);
        if (s > r.norms[j]) {
          r.norms[j] = s;
          argmax[j] = c;
        }
        if (j < options.j_max) y = T.apply(y);
      }
    }
    for (Index j = 0; j <= options.j_max; ++j) {
      r.max_norm = std::max(r.max_norm, r.norms[j]);
      if (r.norms[j] > 1 && !r.b_first_failing_j) {
        r.b_ok = false;
        r.b_first_failing_j = j;
        r.b_failing_column = argmax[j];
      }
    }
  } else {
    std::mt19937_64 gen(options.seed);
    for (Index s = 0; s < options.samples && r.b_ok; ++s) {
      Vector<Rational> x = random_dyadic(gen, dim, r.K, dim);
      const Rational rhs = lp_power(x, r.K, dim, options.p);
      Vector<Rational> y = x;
      for (Index j = 0; j <= options.j_max; ++j) {
        Rational lhs = lp_power(y, 0, r.K, options.p);
        double ratio = std::pow((lhs / rhs).convert_to<double>(), 1.0 / options.p);
        r.worst_ratio = std::max(r.worst_ratio, ratio);
        if (lhs > rhs) {
          r.b_ok = false;
          r.b_first_failing_j = j;
          break;
        }
        if (j < options.j_max) y = T.apply(y);
      }
    }
  }
  return r;
}

bool ScheduleReport::pass() const {
  return gamma_decreasing && fhc_ratio_ok && block_estimate_ok &&
         std::all_of(summability_ok.begin(), summability_ok.end(), [](bool b) { return b; });
}

ScheduleReport ctypeex_schedule(const std::vector<Index>& Delta, int p, int k_max, Index samples,
                                std::uint64_t seed) {
  if (p < 1) throw ParameterError("p must be >= 1");
  if (k_max < 1 || static_cast<int>(Delta.size()) < k_max)
    throw ParameterError("need k_max >= 1 and k_max block sizes");
  std::vector<Index> D(Delta.begin(), Delta.begin() + k_max);
  CPlusOneParams cp = CPlusOneParams::from_schedule(D);
  cp.validate();

  ScheduleReport r;
  r.Delta = cp.Delta;
  r.delta = cp.delta;
  r.tau = cp.tau;
  r.p = p;
  std::vector<Rational> exact;
  for (int k = 1; k <= k_max; ++k) {
    const Index prev_delta = k == 1 ? 0 : cp.delta[k - 2];
    const int e = static_cast<int>(prev_delta - cp.tau[k - 1]);
    const long double g = std::ldexp(1.0L, e) *
                          std::pow(static_cast<long double>(cp.Delta[k - 1]), 1.0L - 1.0L / p);
    r.gamma.push_back(g);
    if (p == 1) exact.push_back(pow2(e));
    if (k > 1 && !(p == 1 ? exact[k - 1] < exact[k - 2] : g < r.gamma[k - 2])) {
      r.gamma_decreasing = false;
      r.gamma_increase_at.push_back(k);
    }
    r.fhc_ratio.push_back(Rational(cp.delta[k - 1] - cp.tau[k - 1]) / cp.Delta[k - 1]);
    if (r.fhc_ratio.back() != Rational(1, 8)) r.fhc_ratio_ok = false;
    for (Index l = Index{1} << (k - 1); l < (Index{1} << k); ++l) r.beta.push_back(4 * g);
  }
  if (p == 1) r.gamma_exact = exact;
  for (int n = 0; n < k_max; ++n) {
    long double s = 0;
    Rational se = 0;
    for (int k = n + 1; k <= k_max; ++k) {
      s += std::ldexp(r.gamma[k - 1], k - 1);
      if (p == 1) se += exact[k - 1] * pow2(k - 1);
    }
    s = std::ldexp(s, n);
    r.summability.push_back(s);
    r.summability_ok.push_back(p == 1 ? se * pow2(n) <= 1 : s <= 1.0L);
  }

  // Block estimate on the operator built from this schedule.
  CTypeParams params = cplus1_params(cp);
  LinearOperator<Rational> T = build_ctype(params);
  std::mt19937_64 gen(seed);
  const Index dim = params.dim();
  for (int k = 1; k <= k_max && r.block_estimate_ok; ++k) {
    const Index j_top = cp.Delta[k - 1] - cp.delta[k - 1];
    const Rational bound = p == 1 ? exact[k - 1] : Rational(0);
    const long double bound_real = r.gamma[k - 1];
    for (Index l = Index{1} << (k - 1); l < (Index{1} << k) && r.block_estimate_ok; ++l) {
      const Index lo = params.b[l], hi = params.b[l + 1];
      auto fail = [&](Index m, Index j) {
        r.block_estimate_ok = false;
        r.block_estimate_failure = "||P_" + std::to_string(m) + " T^" + std::to_string(j) +
                                   " P_" + std::to_string(l) + "|| exceeds beta_l / 4";
      };
      if (p == 1) {
        // exact l1 operator norm: max over columns of block l
        std::vector<std::vector<Rational>> worst(
            static_cast<std::size_t>(j_top) + 1, std::vector<Rational>(static_cast<std::size_t>(l)));
        for (Index c = lo; c < hi; ++c) {
          Vector<Rational> y = Vector<Rational>::Zero(dim);
          y(c) = 1;
          for (Index j = 0; j <= j_top; ++j) {
            for (Index m = 0; m < l; ++m) {
              Rational s = 0;
              for (Index q = params.b[m]; q < params.b[m + 1]; ++q) s += abs_value(y(q));
              worst[j][m] = std::max(worst[j][m], s);
            }
            if (j < j_top) y = T.apply(y);
          }
        }
        for (Index j = 0; j <= j_top && r.block_estimate_ok; ++j)
          for (Index m = 0; m < l && r.block_estimate_ok; ++m) {
            ++r.block_cases;
            if (worst[j][m] > bound) fail(m, j);
          }
      } else {
        for (Index s = 0; s < samples && r.block_estimate_ok; ++s) {
          Vector<Rational> x = random_dyadic(gen, dim, lo, hi);
          const long double xn =
              std::pow(lp_power(x, lo, hi, p).convert_to<long double>(), 1.0L / p);
          Vector<Rational> y = x;
          for (Index j = 0; j <= j_top && r.block_estimate_ok; ++j) {
            for (Index m = 0; m < l; ++m) {
              ++r.block_cases;
              long double ym = std::pow(
                  lp_power(y, params.b[m], params.b[m + 1], p).convert_to<long double>(), 1.0L / p);
              if (ym > bound_real * xn * (1 + 1e-15L)) {
                fail(m, j);
                break;
              }
            }
            if (j < j_top) y = T.apply(y);
          }
        }
      }
    }
  }
  return r;
}

}  // namespace fhclab
