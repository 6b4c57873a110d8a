#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fhclab/linear_operator.hpp"

namespace fhclab {

/// Parameters (v, w, phi, b) of a block operator on span(e_0 .. e_{b[n_max]-1}).
struct CTypeParams {
  std::vector<Rational> v;        // v[n] for 1 <= n < n_max; v[0] unused
  std::vector<Rational> weights;  // w_j for 1 <= j < b[n_max]; weights[0] unused
  std::vector<Index> phi;         // phi[n] for 0 <= n < n_max
  std::vector<Index> b;           // b[0..n_max], b[0] = 0
  Index n_max = 0;

  Index dim() const { return b.empty() ? 0 : b.back(); }
  Index block_size(Index n) const { return b[n + 1] - b[n]; }
  /// Block n containing coordinate k.
  Index block_of(Index k) const;
  /// Throws ConstructionError naming the first broken invariant.
  void validate() const;
};

/// Block sizes Delta^{(k)}, slot counts delta^{(k)} with weight 2, and exponents tau^{(k)}
/// with v^{(k)} = 2^{-tau^{(k)}}; the k-th level has 2^{k-1} blocks.
struct CPlusOneParams {
  Index Delta0 = 1;
  std::vector<Index> Delta;
  std::vector<Index> delta;
  std::vector<Index> tau;
  int k_max = 0;

  /// delta = Delta / 4, tau = Delta / 8.
  static CPlusOneParams from_schedule(const std::vector<Index>& Delta, Index Delta0 = 1);
  /// Delta = (8, 32), delta = (2, 8), tau = (1, 4), Delta0 = 1.
  static CPlusOneParams preset(const std::string& name);
  static CPlusOneParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

CTypeParams cplus1_params(const CPlusOneParams& p);

/// The operator, exact: interior slots shift forward with weight w_{k+1}; the last slot of
/// block n >= 1 maps to v_n e_{b_phi(n)} - (prod of the block's interior weights)^{-1} e_{b_n};
/// the last slot of block 0 maps to -(prod)^{-1} e_0.
LinearOperator<Rational> build_ctype(const CTypeParams& params);

/// Every span(e_0 .. e_{b_N - 1}) is mapped into itself.
bool truncation_invariant(const LinearOperator<Rational>& T, const CTypeParams& params);

struct PeriodicityReport {
  Index block = 0;
  Index period = 0;
  bool ok = true;
  std::optional<Index> failing_k;
};

/// T^{2(b_{n+1} - b_n)} e_k = e_k for every k in block n. Exact arithmetic only.
PeriodicityReport check_periodicity(const LinearOperator<Rational>& T, const CTypeParams& params,
                                    Index n);
PeriodicityReport check_periodicity(const LinearOperator<Real>& T, const CTypeParams& params,
                                    Index n);

struct NotHfhcOptions {
  Index j_max = 200;
  int p = 1;
  Index samples = 64;          // p > 1: sampled vectors
  std::uint64_t seed = 1;
  double budget = 2e9;         // rational multiply-adds allowed for condition (b)
};

struct NotHfhcReport {
  Index n = 0;
  Index K = 0;
  Index J = 0;
  bool a_ok = true;
  std::optional<Index> a_failing_k;
  int p = 1;
  Index j_max = 0;
  std::vector<Rational> norms;          // p = 1: ||pi_K T^j (I - pi_K)||, j = 0..j_max
  Rational max_norm = 0;
  bool b_ok = true;
  std::optional<Index> b_first_failing_j;
  std::optional<Index> b_failing_column;
  double worst_ratio = 0.0;             // p > 1: max sampled ||pi T^j x|| / ||x||
  std::string substitution;             // the j-range actually tested

  bool pass() const { return a_ok && b_ok; }
};

/// Checks T^{J_n} pi_{K_n} = pi_{K_n} and ||pi_{K_n} T^j (I - pi_{K_n})|| <= 1 for j <= j_max,
/// with K_n = b_{2^n} and J_n twice the size of the blocks of level n.
NotHfhcReport check_nothfhc(const LinearOperator<Rational>& T, const CTypeParams& params, int n,
                            const NotHfhcOptions& options = {});

struct ScheduleReport {
  std::vector<Index> Delta;
  std::vector<Index> delta;
  std::vector<Index> tau;
  int p = 1;
  std::vector<long double> gamma;                 // gamma_k, k = 1..k_max
  std::optional<std::vector<Rational>> gamma_exact;  // p = 1
  std::vector<long double> beta;                  // beta_l = 4 gamma_k, l = 1 .. 2^{k_max} - 1
  bool gamma_decreasing = true;
  std::vector<int> gamma_increase_at;             // k with gamma_k >= gamma_{k-1}
  std::vector<long double> summability;           // 2^n sum_{k=n+1}^{k_max} 2^{k-1} gamma_k
  std::vector<bool> summability_ok;
  bool summability_truncated = true;
  std::vector<Rational> fhc_ratio;                // (delta - tau) / Delta
  bool fhc_ratio_ok = true;
  // block estimate ||P_m T^j P_l|| <= beta_l / 4 over l < 2^{k_max}, m < l, j <= Delta - delta
  Index block_cases = 0;
  bool block_estimate_ok = true;
  std::string block_estimate_failure;

  bool pass() const;
};

/// The schedule delta = Delta/4, tau = Delta/8, its gammas and betas, the summability and
/// ratio checks, and the block estimate on the built operator.
ScheduleReport ctypeex_schedule(const std::vector<Index>& Delta, int p, int k_max,
                                Index samples = 32, std::uint64_t seed = 7);

}  // namespace fhclab
