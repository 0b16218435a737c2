#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "efcyc/chain.hpp"
#include "efcyc/simplex.hpp"

namespace efcyc {

/// Finite search space for fillings: canonical tuples all of whose entries
/// lie in the ball of the given radius. An empty generating set means the
/// standard generators of the group.
struct Truncation {
  std::vector<GroupElement> generators;
  std::int64_t radius = 1;
};

struct SeminormBound {
  Rational value;
  Chain witness;  // b with |c + boundary(b)|_1 == value
};

/// Canonical (degree+1)-tuples (e, b_1, ..., b_degree) with b_i in the ball.
inline std::vector<Tuple> truncation_basis(const GroupDescriptor& group, const Truncation& t, int degree) {
  const std::vector<GroupElement> gens = t.generators.empty() ? group.generators() : t.generators;
  const std::vector<GroupElement> ball = enumerate_ball(group, gens, t.radius);
  std::vector<Tuple> out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(degree), 0);
  std::vector<GroupElement> entries(static_cast<std::size_t>(degree) + 1, group.identity());
  while (true) {
    for (std::size_t j = 0; j < idx.size(); ++j) entries[j + 1] = ball[idx[j]];
    out.push_back(Tuple::from_entries(group.dimension(), entries));
    std::size_t j = idx.size();
    while (j-- > 0) {
      if (++idx[j] < ball.size()) break;
      idx[j] = 0;
    }
    if (j == static_cast<std::size_t>(-1)) break;
  }
  return out;
}

namespace detail {

/// The linear system "boundary restricted to the truncated basis", with
/// zero and duplicate columns removed and rows indexed by the degree-n
/// tuples that occur in the boundaries or in `target`.
struct BoundarySystem {
  std::vector<Tuple> columns;  // basis tuples in degree n+1
  std::vector<Tuple> rows;     // degree-n tuples
  lp::SparseMatrix matrix;
  std::vector<Rational> target;  // coefficients of the given chain per row
};

inline BoundarySystem boundary_system(const Chain& target, const Truncation& t) {
  const GroupDescriptor& group = target.group();
  const int degree = target.degree() + 1;
  BoundarySystem sys;
  std::map<Tuple, std::size_t> row_index;
  for (const auto& [tuple, a] : target.terms()) row_index.emplace(tuple, 0);
  std::set<std::vector<std::pair<Tuple, Rational>>> seen;
  std::vector<std::vector<std::pair<Tuple, Rational>>> images;
  for (const Tuple& basis : truncation_basis(group, t, degree)) {
    Chain single(group, degree);
    single.add_canonical(basis, 1);
    const Chain d = boundary(single);
    if (d.is_zero()) continue;
    std::vector<std::pair<Tuple, Rational>> image(d.terms().begin(), d.terms().end());
    if (!seen.insert(image).second) continue;
    for (const auto& [tuple, a] : image) row_index.emplace(tuple, 0);
    sys.columns.push_back(basis);
    images.push_back(std::move(image));
  }
  std::size_t r = 0;
  for (auto& [tuple, i] : row_index) {
    i = r++;
    sys.rows.push_back(tuple);
  }
  sys.matrix.rows = sys.rows.size();
  for (const auto& image : images) {
    std::vector<std::pair<std::size_t, Rational>> col;
    for (const auto& [tuple, a] : image) col.emplace_back(row_index.at(tuple), a);
    sys.matrix.columns.push_back(std::move(col));
  }
  sys.target.assign(sys.rows.size(), Rational(0));
  for (const auto& [tuple, a] : target.terms()) sys.target[row_index.at(tuple)] = a;
  return sys;
}

inline Chain assemble(const GroupDescriptor& group, int degree, const std::vector<Tuple>& basis,
                      const std::vector<Rational>& coeffs) {
  Chain out(group, degree);
  for (std::size_t j = 0; j < basis.size(); ++j) out.add_canonical(basis[j], coeffs[j]);
  return out;
}

inline void require_cycle(const Chain& z) {
  if (z.degree() == 0) return;
  const Chain d = boundary(z);
  if (!d.is_zero()) fail(ErrorCode::non_cycle, "input is not a cycle: boundary = " + to_string(d));
}

}  // namespace detail

/// A chain b in the truncation with boundary(b) == z and minimal l1-norm
/// among such, or nullopt if none exists within the truncation.
inline std::optional<Chain> fill_boundary(const Chain& z, const Truncation& t) {
  detail::require_cycle(z);
  if (z.is_zero()) return Chain(z.group(), z.degree() + 1);
  const detail::BoundarySystem sys = detail::boundary_system(z, t);
  auto solution = lp::minimize_l1_solution(sys.matrix, sys.target);
  if (!solution) return std::nullopt;
  return detail::assemble(z.group(), z.degree() + 1, sys.columns, solution->x);
}

/// min |c + boundary(b)|_1 over b in the truncation; an upper bound for the
/// l1-seminorm of the class of c.
inline SeminormBound seminorm_upper_bound(const Chain& c, const Truncation& t) {
  detail::require_cycle(c);
  const detail::BoundarySystem sys = detail::boundary_system(c, t);
  const lp::L1Result r = lp::minimize_l1_residual(sys.matrix, sys.target);
  SeminormBound out{r.value, detail::assemble(c.group(), c.degree() + 1, sys.columns, r.x)};
  return out;
}

}  // namespace efcyc
