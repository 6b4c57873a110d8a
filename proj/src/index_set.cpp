#include "fhclab/index_set.hpp"

#include <algorithm>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>

namespace fhclab {

IndexSet::IndexSet(Index horizon) : horizon_(horizon) {
  if (horizon < 0) throw ParameterError("IndexSet horizon must be non-negative");
}

IndexSet::IndexSet(Index horizon, std::vector<Index> members)
    : horizon_(horizon), members_(std::move(members)) {
  if (horizon < 0) throw ParameterError("IndexSet horizon must be non-negative");
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (members_[i] < 0 || members_[i] > horizon_)
      throw ParameterError("IndexSet member " + std::to_string(members_[i]) +
                           " outside [0, " + std::to_string(horizon_) + "]");
    if (i > 0 && members_[i] <= members_[i - 1])
      throw ParameterError("IndexSet members must be strictly increasing");
  }
}

IndexSet IndexSet::from_unsorted(Index horizon, std::vector<Index> values) {
  std::erase_if(values, [horizon](Index v) { return v < 0 || v > horizon; });
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return IndexSet(horizon, std::move(values));
}

IndexSet IndexSet::from_predicate(Index horizon, const std::function<bool(Index)>& pred) {
  std::vector<Index> m;
  for (Index n = 0; n <= horizon; ++n)
    if (pred(n)) m.push_back(n);
  return IndexSet(horizon, std::move(m));
}

IndexSet IndexSet::interval(Index horizon, Index lo, Index hi) {
  lo = std::max<Index>(lo, 0);
  hi = std::min(hi, horizon);
  std::vector<Index> m;
  if (lo <= hi) {
    m.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (Index n = lo; n <= hi; ++n) m.push_back(n);
  }
  return IndexSet(horizon, std::move(m));
}

IndexSet IndexSet::progression(Index horizon, Index start, Index step) {
  if (step <= 0) throw ParameterError("progression step must be positive");
  std::vector<Index> m;
  Index first = start;
  if (first < 0) first += ((-first + step - 1) / step) * step;
  for (Index n = first; n <= horizon; n += step) m.push_back(n);
  return IndexSet(horizon, std::move(m));
}

Index IndexSet::min() const {
  if (members_.empty()) throw DomainError("min of empty IndexSet");
  return members_.front();
}

Index IndexSet::max() const {
  if (members_.empty()) throw DomainError("max of empty IndexSet");
  return members_.back();
}

bool IndexSet::contains(Index n) const {
  return std::binary_search(members_.begin(), members_.end(), n);
}

Index IndexSet::count_upto(Index n) const {
  return static_cast<Index>(std::upper_bound(members_.begin(), members_.end(), n) -
                            members_.begin());
}

IndexSet IndexSet::clipped(Index horizon) const {
  std::vector<Index> m(members_.begin(),
                       std::upper_bound(members_.begin(), members_.end(), horizon));
  return IndexSet(horizon, std::move(m));
}

IndexSet set_union(const IndexSet& a, const IndexSet& b) {
  Index h = std::min(a.horizon(), b.horizon());
  IndexSet ca = a.clipped(h), cb = b.clipped(h);
  std::vector<Index> out;
  std::set_union(ca.members().begin(), ca.members().end(), cb.members().begin(),
                 cb.members().end(), std::back_inserter(out));
  return IndexSet(h, std::move(out));
}

IndexSet set_intersection(const IndexSet& a, const IndexSet& b) {
  Index h = std::min(a.horizon(), b.horizon());
  std::vector<Index> out;
  std::set_intersection(a.members().begin(), a.members().end(), b.members().begin(),
                        b.members().end(), std::back_inserter(out));
  return IndexSet(h, std::move(out)).clipped(h);
}

IndexSet set_difference(const IndexSet& a, const IndexSet& b) {
  Index h = std::min(a.horizon(), b.horizon());
  IndexSet ca = a.clipped(h);
  std::vector<Index> out;
  std::set_difference(ca.members().begin(), ca.members().end(), b.members().begin(),
                      b.members().end(), std::back_inserter(out));
  return IndexSet(h, std::move(out));
}

IndexSet translate(const IndexSet& a, Index t) {
  std::vector<Index> out;
  out.reserve(a.size());
  for (Index m : a.members()) {
    Index v = m + t;
    if (v >= 0 && v <= a.horizon()) out.push_back(v);
  }
  return IndexSet(a.horizon(), std::move(out));
}

IndexSet dilate(const IndexSet& a, Index r) {
  if (r < 0) throw ParameterError("dilation radius must be non-negative");
  std::vector<Index> out;
  Index next = 0;  // first value not yet emitted
  for (Index m : a.members()) {
    Index lo = std::max({m - r, Index{0}, next});
    Index hi = std::min(m + r, a.horizon());
    for (Index n = lo; n <= hi; ++n) out.push_back(n);
    next = std::max(next, hi + 1);
  }
  return IndexSet(a.horizon(), std::move(out));
}

IndexSet set_algebra(SetOp op, const IndexSet& a, const IndexSet& b) {
  switch (op) {
    case SetOp::unite:
      return set_union(a, b);
    case SetOp::intersect:
      return set_intersection(a, b);
    case SetOp::difference:
      return set_difference(a, b);
  }
  throw ParameterError("unknown set operation");
}

DensityProfile density_profile(const IndexSet& set, Index burn_in) {
  if (burn_in < 0 || burn_in > set.horizon())
    throw ParameterError("burn_in " + std::to_string(burn_in) + " outside [0, horizon=" +
                         std::to_string(set.horizon()) + "]");
  DensityProfile p;
  p.burn_in = burn_in;
  p.counts.resize(static_cast<std::size_t>(set.horizon()) + 1);
  auto it = set.members().begin();
  Index c = 0;
  for (Index n = 0; n <= set.horizon(); ++n) {
    if (it != set.members().end() && *it == n) {
      ++c;
      ++it;
    }
    p.counts[static_cast<std::size_t>(n)] = c;
  }
  p.tail_min = p.ratio(burn_in);
  p.tail_max = p.tail_min;
  for (Index n = burn_in; n <= set.horizon(); ++n) {
    double r = p.ratio(n);
    p.tail_min = std::min(p.tail_min, r);
    p.tail_max = std::max(p.tail_max, r);
  }
  return p;
}

namespace {

void check_burn_in(const IndexSet& set, Index burn_in) {
  if (burn_in < 0 || burn_in > set.horizon())
    throw ParameterError("burn_in " + std::to_string(burn_in) + " outside [0, horizon=" +
                         std::to_string(set.horizon()) + "]");
}

double ratio(Index count, Index n) {
  return static_cast<double>(count) / static_cast<double>(n + 1);
}

}  // namespace

// Between members the count is constant and r(N) decreases, so the minimum sits at
// N = burn_in, just before a member, or at the horizon.
double tail_min(const IndexSet& set, Index burn_in) {
  check_burn_in(set, burn_in);
  auto ms = set.members();
  auto it = std::upper_bound(ms.begin(), ms.end(), burn_in);
  Index c = static_cast<Index>(it - ms.begin());
  double best = ratio(c, burn_in);
  for (; it != ms.end(); ++it) {
    if (*it - 1 >= burn_in) best = std::min(best, ratio(c, *it - 1));
    ++c;
  }
  return std::min(best, ratio(c, set.horizon()));
}

// r(N) only increases at members.
double tail_max(const IndexSet& set, Index burn_in) {
  check_burn_in(set, burn_in);
  auto ms = set.members();
  auto it = std::upper_bound(ms.begin(), ms.end(), burn_in);
  Index c = static_cast<Index>(it - ms.begin());
  double best = ratio(c, burn_in);
  for (; it != ms.end(); ++it) {
    ++c;
    best = std::max(best, ratio(c, *it));
  }
  return best;
}

SyndeticReport syndetic_gap(const IndexSet& set) {
  if (set.empty()) throw DomainError("syndetic_gap of an empty set");
  SyndeticReport r;
  auto ms = set.members();
  r.max_gap = ms.front();
  for (std::size_t i = 1; i < ms.size(); ++i) r.max_gap = std::max(r.max_gap, ms[i] - ms[i - 1]);
  r.trailing_gap = set.horizon() - ms.back();
  return r;
}

void write_index_set(std::ostream& out, const IndexSet& set) {
  out << "horizon=" << set.horizon() << '\n';
  for (Index m : set.members()) out << m << '\n';
}

IndexSet read_index_set(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("horizon=", 0) != 0)
    throw ParameterError("IndexSet file must start with 'horizon=<N>'");
  Index horizon = 0;
  try {
    horizon = std::stoll(line.substr(8));
  } catch (const std::exception&) {
    throw ParameterError("malformed horizon line '" + line + "'");
  }
  std::vector<Index> members;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t pos = 0;
    Index v = 0;
    try {
      v = std::stoll(line, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != line.size())
      throw ParameterError("line " + std::to_string(lineno) + ": not an integer: '" + line + "'");
    members.push_back(v);
  }
  return IndexSet(horizon, std::move(members));
}

void write_density_csv(std::ostream& out, const DensityProfile& profile) {
  out << "N,count,ratio\n";
  std::ostringstream row;
  row.precision(17);
  for (Index n = 0; n <= profile.horizon(); ++n) {
    row.str({});
    row << n << ',' << profile.counts[static_cast<std::size_t>(n)] << ',' << profile.ratio(n)
        << '\n';
    out << row.str();
  }
}

}  // namespace fhclab
