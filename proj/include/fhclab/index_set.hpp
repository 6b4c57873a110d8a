#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "fhclab/scalar.hpp"

namespace fhclab {

/// A subset of {0, 1, ..., horizon}, stored as strictly increasing members.
class IndexSet {
 public:
  IndexSet() = default;
  explicit IndexSet(Index horizon);
  /// Members must be strictly increasing and lie in [0, horizon].
  IndexSet(Index horizon, std::vector<Index> members);

  /// Sorts, dedups, and drops anything outside [0, horizon].
  static IndexSet from_unsorted(Index horizon, std::vector<Index> values);
  static IndexSet from_predicate(Index horizon, const std::function<bool(Index)>& pred);
  static IndexSet interval(Index horizon, Index lo, Index hi);
  /// {start, start + step, ...} within the horizon.
  static IndexSet progression(Index horizon, Index start, Index step);

  Index horizon() const { return horizon_; }
  std::span<const Index> members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  Index min() const;
  Index max() const;
  bool contains(Index n) const;
  /// #(A ∩ [0, n]).
  Index count_upto(Index n) const;

  /// Same members, smaller horizon.
  IndexSet clipped(Index horizon) const;

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  Index horizon_ = 0;
  std::vector<Index> members_;
};

IndexSet set_union(const IndexSet& a, const IndexSet& b);
IndexSet set_intersection(const IndexSet& a, const IndexSet& b);
IndexSet set_difference(const IndexSet& a, const IndexSet& b);
/// A + t clipped to [0, horizon]; negative shifts drop members that fall below 0.
IndexSet translate(const IndexSet& a, Index t);
/// (A + [-r, r]) ∩ [0, horizon].
IndexSet dilate(const IndexSet& a, Index r);

enum class SetOp { unite, intersect, difference };
IndexSet set_algebra(SetOp op, const IndexSet& a, const IndexSet& b);

/// Finite-horizon density profile: r(N) = #(A ∩ [0,N]) / (N+1).
struct DensityProfile {
  Index burn_in = 0;
  std::vector<Index> counts;  // counts[N] = #(A ∩ [0,N])
  double tail_min = 0.0;
  double tail_max = 0.0;

  Index horizon() const { return static_cast<Index>(counts.size()) - 1; }
  double ratio(Index n) const {
    return static_cast<double>(counts[static_cast<std::size_t>(n)]) / static_cast<double>(n + 1);
  }
};

DensityProfile density_profile(const IndexSet& set, Index burn_in);

/// min / max of r(N) over N in [burn_in, horizon], without materializing the profile.
double tail_min(const IndexSet& set, Index burn_in);
double tail_max(const IndexSet& set, Index burn_in);

struct SyndeticReport {
  Index max_gap = 0;       // over consecutive members, and from 0 to min
  Index trailing_gap = 0;  // horizon - max
};

SyndeticReport syndetic_gap(const IndexSet& set);

// Text format: "horizon=<N>" then one member per line.
void write_index_set(std::ostream& out, const IndexSet& set);
IndexSet read_index_set(std::istream& in);

// CSV "N,count,ratio".
void write_density_csv(std::ostream& out, const DensityProfile& profile);

}  // namespace fhclab
