#include "fhclab/linear_operator.hpp"

#include "fhclab/visit.hpp"

namespace fhclab {

std::pair<Integer, int> dyadic_parts(const Rational& q) {
  int k = dyadic_exponent(q);
  if (k < 0) throw ParameterError("value " + q.str() + " is not a dyadic rational");
  return {boost::multiprecision::numerator(q), k};
}

void write_operator_csv(std::ostream& out, const LinearOperator<Rational>& op) {
  out << "row,col,numerator,log2denominator\n";
  // Row-major order reads more naturally in a coordinate list.
  std::vector<Triplet<Rational>> entries;
  const auto& m = op.matrix();
  for (int c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix<Rational>::InnerIterator it(m, c); it; ++it)
      entries.emplace_back(it.row(), it.col(), it.value());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::pair(a.row(), a.col()) < std::pair(b.row(), b.col());
  });
  for (const auto& e : entries) {
    auto [num, k] = dyadic_parts(e.value());
    out << e.row() << ',' << e.col() << ',' << num << ',' << k << '\n';
  }
}

void write_block_vector_csv(std::ostream& out, const BlockVector<Rational>& x) {
  Index block = x.norm_tag.kind == NormTag::Kind::c0_sum_of_ell1 ? x.norm_tag.block : x.dim();
  out << "l,k,numerator,log2denominator\n";
  for (Index i = 0; i < x.dim(); ++i) {
    if (x.coords(i) == 0) continue;
    auto [num, k] = dyadic_parts(x.coords(i));
    out << (block > 0 ? i / block + 1 : 1) << ',' << (block > 0 ? i % block : i) << ',' << num
        << ',' << k << '\n';
  }
}

}  // namespace fhclab
