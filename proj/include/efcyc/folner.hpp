#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <map>
#include <functional>
#include <optional>
#include <type_traits>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include <absl/container/flat_hash_map.h>
#include <vector>

#include "efcyc/chain.hpp"
#include "efcyc/errors.hpp"
#include "efcyc/extension.hpp"

namespace efcyc {

/// F = { v_1^{t_1} ... v_r^{t_r} : 0 <= t_i < extents[i] } for pairwise
/// commuting, independent v_i.
struct LatticeBox {
  std::vector<GroupElement> basis;
  std::vector<std::int64_t> extents;
};

/// A finite subset of Gamma, optionally remembering that it is a lattice box
/// (which enables the difference-coordinate averaging path).
class FolnerSet {
 public:
  FolnerSet() = default;
  explicit FolnerSet(std::vector<GroupElement> elements) : elements_(std::move(elements)) {
    std::sort(elements_.begin(), elements_.end());
    elements_.erase(std::unique(elements_.begin(), elements_.end()), elements_.end());
  }

  static FolnerSet lattice_box(const GroupDescriptor& group, LatticeBox box) {
    if (box.basis.size() != box.extents.size()) fail(ErrorCode::malformed_input, "box basis/extent mismatch");
    std::vector<GroupElement> elements{group.identity()};
    for (std::size_t i = 0; i < box.basis.size(); ++i) {
      if (box.extents[i] < 1) fail(ErrorCode::empty_set, "box extents must be positive");
      std::vector<GroupElement> next;
      next.reserve(elements.size() * static_cast<std::size_t>(box.extents[i]));
      for (const GroupElement& x : elements) {
        GroupElement cur = x;
        for (std::int64_t t = 0; t < box.extents[i]; ++t) {
          next.push_back(cur);
          cur = group.compose_unchecked(cur, box.basis[i]);
        }
      }
      elements = std::move(next);
    }
    FolnerSet out(std::move(elements));
    out.box_ = std::move(box);
    return out;
  }

  const std::vector<GroupElement>& elements() const { return elements_; }
  const std::optional<LatticeBox>& box() const { return box_; }
  std::size_t size() const { return elements_.size(); }
  bool empty() const { return elements_.empty(); }

 private:
  std::vector<GroupElement> elements_;
  std::optional<LatticeBox> box_;
};

/// S-boundary: elements of F moved out of F by some sigma in S or S^-1.
inline std::vector<GroupElement> s_boundary(const GroupDescriptor& ambient, std::span<const GroupElement> F,
                                            std::span<const GroupElement> S) {
  std::unordered_set<GroupElement, GroupElementHash> members(F.begin(), F.end());
  std::vector<GroupElement> moves;
  for (const GroupElement& s : S) {
    ambient.require(s);
    moves.push_back(s);
    moves.push_back(ambient.inverse_unchecked(s));
  }
  std::vector<GroupElement> out;
  GroupElement tmp;
  for (const GroupElement& eta : F) {
    ambient.require(eta);
    for (const GroupElement& s : moves) {
      ambient.compose_into(s, eta, tmp);
      if (!members.count(tmp)) {
        out.push_back(eta);
        break;
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// |boundary_S F| / |F|.
inline Rational boundary_ratio(const GroupDescriptor& ambient, std::span<const GroupElement> F,
                               std::span<const GroupElement> S) {
  if (F.empty()) fail(ErrorCode::empty_set, "boundary ratio of an empty set");
  std::vector<GroupElement> uniq(F.begin(), F.end());
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  Rational r(static_cast<long>(s_boundary(ambient, uniq, S).size()), static_cast<long>(uniq.size()));
  r.canonicalize();
  return r;
}

enum class FolnerKind { Interval, Box, HeisenbergBox, WholeFiniteGroup, Lattice };

inline const char* to_string(FolnerKind kind) {
  switch (kind) {
    case FolnerKind::Interval: return "interval";
    case FolnerKind::Box: return "box";
    case FolnerKind::HeisenbergBox: return "heisenberg_box";
    case FolnerKind::WholeFiniteGroup: return "whole";
    case FolnerKind::Lattice: return "lattice";
  }
  return "?";
}

inline FolnerKind parse_folner_kind(std::string_view name) {
  if (name == "interval") return FolnerKind::Interval;
  if (name == "box") return FolnerKind::Box;
  if (name == "heisenberg_box" || name == "heisenberg") return FolnerKind::HeisenbergBox;
  if (name == "whole" || name == "whole_finite_group") return FolnerKind::WholeFiniteGroup;
  fail(ErrorCode::malformed_input, "unknown Folner kind '" + std::string(name) + "'");
}

namespace detail {

/// Row-style integer echelon basis of the lattice spanned by `vectors`.
inline std::vector<std::vector<std::int64_t>> lattice_basis(std::vector<std::vector<std::int64_t>> rows,
                                                            std::size_t width) {
  std::vector<std::vector<std::int64_t>> basis;
  for (std::size_t col = 0; col < width; ++col) {
    while (true) {
      std::size_t best = rows.size();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i][col] != 0 && (best == rows.size() || std::llabs(rows[i][col]) < std::llabs(rows[best][col]))) {
          best = i;
        }
      }
      if (best == rows.size()) break;
      bool reduced = false;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i == best || rows[i][col] == 0) continue;
        const std::int64_t q = rows[i][col] / rows[best][col];
        for (std::size_t c = 0; c < width; ++c) rows[i][c] -= q * rows[best][c];
        reduced = true;
      }
      bool others = false;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i != best && rows[i][col] != 0) others = true;
      }
      if (!others) {
        std::vector<std::int64_t> pivot = rows[best];
        if (pivot[col] < 0) {
          for (auto& x : pivot) x = -x;
        }
        basis.push_back(std::move(pivot));
        rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(best));
        break;
      }
      if (!reduced) break;
    }
  }
  return basis;
}

}  // namespace detail

/// The catalogued Folner sequences of N, realized inside Gamma.
class FolnerSequence {
 public:
  FolnerSequence(AmenableExtension ext, FolnerKind kind) : ext_(std::move(ext)), kind_(kind) {
    const GroupDescriptor& n = ext_.normal();
    using K = GroupDescriptor::Kind;
    switch (kind_) {
      case FolnerKind::Interval:
        if (!(n.kind() == K::FreeAbelian && n.parameter() == 1)) {
          fail(ErrorCode::inconsistent_groups, "interval Folner sets need N = Z, got " + n.to_string());
        }
        break;
      case FolnerKind::Box:
        if (n.kind() != K::FreeAbelian) {
          fail(ErrorCode::inconsistent_groups, "box Folner sets need N = Z^d, got " + n.to_string());
        }
        break;
      case FolnerKind::HeisenbergBox:
        if (n.kind() != K::Heisenberg3) {
          fail(ErrorCode::inconsistent_groups, "Heisenberg boxes need N = Heis3, got " + n.to_string());
        }
        break;
      case FolnerKind::WholeFiniteGroup:
        if (!n.is_finite()) fail(ErrorCode::infinite_subgroup, "N = " + n.to_string() + " is infinite");
        break;
      case FolnerKind::Lattice:
        fail(ErrorCode::malformed_input, "lattice Folner sequences are built with FolnerSequence::adaptive");
    }
  }

  /// Folner sequence of the subgroup of N generated by S (elements of Gamma
  /// lying in N). Supported for free abelian and finite N.
  static FolnerSequence adaptive(AmenableExtension ext, std::span<const GroupElement> S) {
    FolnerSequence seq(std::move(ext));
    const GroupDescriptor& n = seq.ext_.normal();
    std::vector<GroupElement> gens;
    for (const GroupElement& s : S) gens.push_back(seq.ext_.restrict_to_normal(s));
    if (n.is_finite()) {
      std::vector<GroupElement> closure = enumerate_ball(n, gens, static_cast<std::int64_t>(n.order()));
      for (auto& x : closure) x = seq.ext_.embed(x);
      seq.fixed_ = FolnerSet(std::move(closure));
    } else if (n.kind() == GroupDescriptor::Kind::FreeAbelian) {
      std::vector<std::vector<std::int64_t>> rows;
      for (const auto& g : gens) rows.emplace_back(g.coords().begin(), g.coords().end());
      for (const auto& row : detail::lattice_basis(std::move(rows), n.dimension())) {
        seq.lattice_.push_back(seq.ext_.embed(GroupElement(std::span<const std::int64_t>(row))));
      }
    } else {
      fail(ErrorCode::unsupported, "adaptive Folner sets need free abelian or finite N, got " + n.to_string());
    }
    return seq;
  }

  FolnerKind kind() const { return kind_; }
  const AmenableExtension& extension() const { return ext_; }

  FolnerSet at(std::int64_t k) const {
    if (k < 1) fail(ErrorCode::malformed_input, "Folner index must be at least 1");
    const GroupDescriptor& n = ext_.normal();
    switch (kind_) {
      case FolnerKind::Interval:
      case FolnerKind::Box: {
        LatticeBox box;
        box.basis = ext_.normal_generators();
        box.extents.assign(box.basis.size(), k);
        return FolnerSet::lattice_box(ext_.group(), std::move(box));
      }
      case FolnerKind::HeisenbergBox: {
        std::vector<GroupElement> out;
        for (std::int64_t a = 0; a < k; ++a) {
          for (std::int64_t b = 0; b < k; ++b) {
            for (std::int64_t c = 0; c < k * k; ++c) out.push_back(ext_.embed(GroupElement{a, b, c}));
          }
        }
        return FolnerSet(std::move(out));
      }
      case FolnerKind::WholeFiniteGroup: {
        std::vector<GroupElement> out;
        for (const GroupElement& x : n.elements()) out.push_back(ext_.embed(x));
        return FolnerSet(std::move(out));
      }
      case FolnerKind::Lattice: {
        if (fixed_) return *fixed_;
        LatticeBox box;
        box.basis = lattice_;
        box.extents.assign(lattice_.size(), k);
        return FolnerSet::lattice_box(ext_.group(), std::move(box));
      }
    }
    return {};
  }

 private:
  explicit FolnerSequence(AmenableExtension ext) : ext_(std::move(ext)), kind_(FolnerKind::Lattice) {}

  AmenableExtension ext_;
  FolnerKind kind_;
  std::vector<GroupElement> lattice_;
  std::optional<FolnerSet> fixed_;
};

namespace detail {

inline void validate_averaging_set(const AmenableExtension& ext, const FolnerSet& F) {
  if (F.empty()) fail(ErrorCode::empty_set, "averaging over an empty set");
  for (const GroupElement& eta : F.elements()) {
    ext.group().require(eta);
    if (!ext.in_normal(eta)) {
      fail(ErrorCode::not_in_subgroup, "averaging set element " + to_string(eta) + " is not in N");
    }
  }
}

/// Visits every tuple (g_0 eta_0, ..., g_n eta_n), canonicalized, for
/// eta in F^{n+1}. The visitor receives the canonical tuple and the element
/// (g_0 eta_0)^{-1} used to canonicalize it.
template <class Visitor>
void visit_translates(const GroupDescriptor& group, const std::vector<GroupElement>& entries,
                      const std::vector<GroupElement>& F, Visitor&& visit) {
  const std::size_t arity = entries.size();
  const std::size_t dim = group.dimension();
  std::vector<std::size_t> idx(arity, 0);
  std::vector<GroupElement> moved(arity);
  GroupElement shift, tmp;
  Tuple::Coords coords;
  while (true) {
    for (std::size_t j = 0; j < arity; ++j) group.compose_into(entries[j], F[idx[j]], moved[j]);
    shift = group.inverse_unchecked(moved[0]);
    coords.clear();
    for (std::size_t j = 0; j < arity; ++j) {
      group.compose_into(shift, moved[j], tmp);
      coords.insert(coords.end(), tmp.coords().begin(), tmp.coords().end());
    }
    if (dim == 0) {
      visit(Tuple::from_entries(0, moved), shift);
    } else {
      visit(Tuple(dim, coords), shift);
    }
    std::size_t j = arity;
    while (j-- > 0) {
      if (++idx[j] < F.size()) break;
      idx[j] = 0;
    }
    if (j == static_cast<std::size_t>(-1)) break;
  }
}

/// Precomputed difference elements prod_i v_i^{d_i} for d in prod_i (-k_i, k_i).
struct BoxDifferences {
  std::vector<std::int64_t> extents;
  std::vector<std::int64_t> widths;  // 2k_i - 1
  std::vector<GroupElement> elements;
  std::vector<std::vector<std::int64_t>> offsets;  // d vector per flat index
};

inline BoxDifferences box_differences(const GroupDescriptor& group, const LatticeBox& box) {
  BoxDifferences out;
  out.extents = box.extents;
  std::size_t total = 1;
  for (std::int64_t k : box.extents) {
    out.widths.push_back(2 * k - 1);
    total *= static_cast<std::size_t>(2 * k - 1);
  }
  out.elements.reserve(total);
  out.offsets.reserve(total);
  std::vector<std::int64_t> d(box.extents.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = -(box.extents[i] - 1);
  for (std::size_t flat = 0; flat < total; ++flat) {
    GroupElement g = group.identity();
    for (std::size_t i = 0; i < d.size(); ++i) g = group.compose_unchecked(g, group.power(box.basis[i], d[i]));
    out.elements.push_back(std::move(g));
    out.offsets.push_back(d);
    for (std::size_t i = d.size(); i-- > 0;) {
      if (++d[i] <= box.extents[i] - 1) break;
      d[i] = -(box.extents[i] - 1);
    }
  }
  return out;
}

/// True when the box elements commute with each other and with every
/// entry of every tuple of c. Then eta_0^{-1} g eta_j = g eta_0^{-1} eta_j and
/// the average depends only on the differences eta_0^{-1} eta_j.
inline bool difference_path_applies(const GroupDescriptor& group, const Chain& c, const FolnerSet& F) {
  if (!F.box() || group.dimension() == 0) return false;
  const auto& basis = F.box()->basis;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = i + 1; j < basis.size(); ++j) {
      if (!group.commute(basis[i], basis[j])) return false;
    }
  }
  for (const auto& [t, a] : c.terms()) {
    for (std::size_t j = 0; j < t.arity(); ++j) {
      const GroupElement g = t.entry(j);
      for (const GroupElement& v : basis) {
        if (!group.commute(g, v)) return false;
      }
    }
  }
  return true;
}

/// Visits the averaged tuples of a canonical tuple t = (e, g_1, ..., g_n) in
/// difference coordinates: (e, g_1 d_1, ..., g_n d_n) with multiplicity
/// #{eta_0 in F : eta_0 d_j in F for all j}.
template <class Visitor>
void visit_differences(const GroupDescriptor& group, const Tuple& t, const BoxDifferences& diffs,
                       Visitor&& visit) {
  const std::size_t n = t.arity() - 1;
  const std::size_t dim = group.dimension();
  const std::size_t r = diffs.extents.size();
  if (n == 0) {
    std::int64_t size = 1;
    for (std::int64_t k : diffs.extents) size *= k;
    visit(t, size);
    return;
  }
  const std::size_t total = diffs.elements.size();
  std::vector<std::vector<GroupElement>> table(n, std::vector<GroupElement>(total));
  for (std::size_t j = 0; j < n; ++j) {
    const GroupElement g = t.entry(j + 1);
    for (std::size_t f = 0; f < total; ++f) group.compose_into(g, diffs.elements[f], table[j][f]);
  }
  std::vector<std::size_t> idx(n, 0);
  Tuple key(dim, Tuple::Coords((n + 1) * dim, 0));
  auto& coords = key.mutable_coords();
  // entries from position `from` on are stale after an odometer step
  auto refresh = [&](std::size_t from) {
    for (std::size_t j = from; j < n; ++j) {
      const auto& c = table[j][idx[j]].coords();
      std::copy(c.begin(), c.end(), coords.begin() + static_cast<std::ptrdiff_t>((j + 1) * dim));
    }
  };
  refresh(0);
  while (true) {
    std::int64_t count = 1;
    for (std::size_t i = 0; i < r && count; ++i) {
      std::int64_t mn = 0, mx = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const std::int64_t d = diffs.offsets[idx[j]][i];
        mn = std::min(mn, d);
        mx = std::max(mx, d);
      }
      count *= std::max<std::int64_t>(0, diffs.extents[i] - (mx - mn));
    }
    if (count) visit(static_cast<const Tuple&>(key), count);
    std::size_t j = n;
    while (j-- > 0) {
      if (++idx[j] < total) break;
      idx[j] = 0;
    }
    if (j == static_cast<std::size_t>(-1)) break;
    refresh(j);
  }
}

/// Dense weights for all averaged tuples (e, r_1 v^{o_1}, ..., r_n v^{o_n})
/// sharing the roots r_j, indexed by the offset vectors o_j.
template <class Weight>
struct OffsetGrid {
  std::vector<GroupElement> roots;
  std::vector<std::int64_t> lo;      // per (entry, basis direction)
  std::vector<std::int64_t> stride;  // same layout
  std::vector<Weight> cells;
};

/// Integer weights per output tuple; the averaged chain is weight / scale.
template <class Weight>
struct AverageAccumulator {
  absl::flat_hash_map<Tuple, Weight, TupleHash> weights;
  std::vector<OffsetGrid<Weight>> grids;
  const LatticeBox* box = nullptr;
  Integer scale;  // lcm of input denominators times |F|^{n+1}
};

/// Lattice coordinates of the entries of c relative to a few roots: every
/// entry g becomes root * prod v_i^{o_i}, where two entries share a root
/// whenever their quotient is a lattice element small enough for their
/// averaged tuples to meet. Offsets are unique because a box basis of a
/// free abelian N is independent.
struct EntryCosets {
  std::vector<GroupElement> values;
  std::vector<std::size_t> root;
  std::vector<std::vector<std::int64_t>> offset;
  std::size_t index(const GroupElement& g) const {
    return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), g) - values.begin());
  }
};

inline constexpr std::size_t grid_cell_limit = std::size_t{1} << 22;

inline std::optional<EntryCosets> entry_cosets(const GroupDescriptor& group, const Chain& c, const LatticeBox& box) {
  const std::size_t r = box.basis.size();
  std::size_t table_size = 1;
  for (std::int64_t k : box.extents) {
    table_size *= static_cast<std::size_t>(4 * k - 3);
    if (table_size > grid_cell_limit) return std::nullopt;
  }
  for (const GroupElement& v : box.basis) {
    if (group.is_finite() || group.power(v, 2) == group.identity() || v == group.identity()) return std::nullopt;
  }
  EntryCosets out;
  std::set<GroupElement> vals;
  for (const auto& [t, a] : c.terms()) {
    for (std::size_t j = 1; j < t.arity(); ++j) vals.insert(t.entry(j));
  }
  out.values.assign(vals.begin(), vals.end());
  const std::size_t m = out.values.size();
  if (m > 4096) return std::nullopt;
  // lattice elements prod v_i^{e_i} with |e_i| <= 2k_i - 2
  absl::flat_hash_map<GroupElement, std::vector<std::int64_t>, GroupElementHash> table;
  table.reserve(table_size);
  std::vector<std::int64_t> e(r);
  for (std::size_t i = 0; i < r; ++i) e[i] = -(2 * box.extents[i] - 2);
  for (std::size_t flat = 0; flat < table_size; ++flat) {
    GroupElement g = group.identity();
    for (std::size_t i = 0; i < r; ++i) g = group.compose_unchecked(g, group.power(box.basis[i], e[i]));
    if (!table.try_emplace(std::move(g), e).second) return std::nullopt;  // dependent basis
    for (std::size_t i = r; i-- > 0;) {
      if (++e[i] <= 2 * box.extents[i] - 2) break;
      e[i] = -(2 * box.extents[i] - 2);
    }
  }
  // union-find with offsets: g_x = g_parent prod v^{off_x}
  std::vector<std::size_t> parent(m);
  std::vector<std::vector<std::int64_t>> off(m, std::vector<std::int64_t>(r, 0));
  for (std::size_t x = 0; x < m; ++x) parent[x] = x;
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    if (parent[x] == x) return x;
    const std::size_t p = parent[x];
    const std::size_t root = find(p);
    for (std::size_t i = 0; i < r; ++i) off[x][i] += off[p][i];
    parent[x] = root;
    return root;
  };
  for (std::size_t a = 0; a < m; ++a) {
    const GroupElement inv = group.inverse_unchecked(out.values[a]);
    for (std::size_t b = a + 1; b < m; ++b) {
      auto it = table.find(group.compose_unchecked(inv, out.values[b]));
      if (it == table.end()) continue;
      const std::size_t ra = find(a), rb = find(b);
      if (ra == rb) continue;
      // g_b = g_a v^e, g_a = g_ra v^{off_a}, g_b = g_rb v^{off_b}
      parent[rb] = ra;
      for (std::size_t i = 0; i < r; ++i) off[rb][i] = off[a][i] + it->second[i] - off[b][i];
    }
  }
  out.root.resize(m);
  out.offset.resize(m);
  for (std::size_t x = 0; x < m; ++x) {
    out.root[x] = find(x);
    out.offset[x] = off[x];
  }
  return out;
}

/// Difference-coordinate averaging into dense offset grids, one grid per
/// tuple of roots. Returns false (leaving acc untouched) when the grids
/// would be too large.
template <class Weight, class Scaled>
bool accumulate_grids(const GroupDescriptor& group, const Chain& c, const LatticeBox& box, const BoxDifferences& diffs,
                      Scaled&& scaled, AverageAccumulator<Weight>& acc) {
  const std::size_t n = static_cast<std::size_t>(c.degree());
  if (n == 0) return false;
  const auto cosets = entry_cosets(group, c, box);
  if (!cosets) return false;
  const std::size_t r = box.basis.size();
  struct Member {
    const Rational* coeff;
    std::vector<std::int64_t> offsets;  // n * r
  };
  std::map<std::vector<std::size_t>, std::vector<Member>> classes;
  for (const auto& [t, a] : c.terms()) {
    std::vector<std::size_t> roots(n);
    Member mem{&a, std::vector<std::int64_t>(n * r)};
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t x = cosets->index(t.entry(j + 1));
      roots[j] = cosets->root[x];
      for (std::size_t i = 0; i < r; ++i) mem.offsets[j * r + i] = cosets->offset[x][i];
    }
    classes[roots].push_back(std::move(mem));
  }
  std::vector<OffsetGrid<Weight>> grids;
  std::size_t cells = 0;
  for (const auto& [roots, members] : classes) {
    OffsetGrid<Weight> g;
    for (std::size_t x : roots) g.roots.push_back(cosets->values[x]);
    g.lo.assign(n * r, 0);
    g.stride.assign(n * r, 0);
    std::vector<std::int64_t> hi(n * r);
    for (std::size_t q = 0; q < n * r; ++q) {
      std::int64_t mn = members.front().offsets[q], mx = mn;
      for (const Member& mem : members) {
        mn = std::min(mn, mem.offsets[q]);
        mx = std::max(mx, mem.offsets[q]);
      }
      const std::int64_t k = box.extents[q % r];
      g.lo[q] = mn - (k - 1);
      hi[q] = mx + (k - 1);
    }
    std::size_t size = 1;
    for (std::size_t q = n * r; q-- > 0;) {
      g.stride[q] = static_cast<std::int64_t>(size);
      size *= static_cast<std::size_t>(hi[q] - g.lo[q] + 1);
      if (size > grid_cell_limit) return false;
    }
    cells += size;
    if (cells > grid_cell_limit) return false;
    g.cells.assign(size, Weight(0));
    grids.push_back(std::move(g));
  }
  const std::size_t total = diffs.elements.size();
  std::size_t gi = 0;
  for (const auto& [roots, members] : classes) {
    OffsetGrid<Weight>& g = grids[gi++];
    for (const Member& mem : members) {
      const Weight p = scaled(*mem.coeff);
      std::int64_t base = 0;
      for (std::size_t q = 0; q < n * r; ++q) base += (mem.offsets[q] - g.lo[q]) * g.stride[q];
      // per difference index: its contribution to the cell index of entry j
      std::vector<std::vector<std::int64_t>> step(n, std::vector<std::int64_t>(total));
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t f = 0; f < total; ++f) {
          std::int64_t s = 0;
          for (std::size_t i = 0; i < r; ++i) s += diffs.offsets[f][i] * g.stride[j * r + i];
          step[j][f] = s;
        }
      }
      std::vector<std::size_t> idx(n, 0);
      while (true) {
        std::int64_t count = 1;
        for (std::size_t i = 0; i < r && count; ++i) {
          std::int64_t mn = 0, mx = 0;
          for (std::size_t j = 0; j < n; ++j) {
            const std::int64_t d = diffs.offsets[idx[j]][i];
            mn = std::min(mn, d);
            mx = std::max(mx, d);
          }
          count *= std::max<std::int64_t>(0, diffs.extents[i] - (mx - mn));
        }
        if (count) {
          std::int64_t cell = base;
          for (std::size_t j = 0; j < n; ++j) cell += step[j][idx[j]];
          g.cells[static_cast<std::size_t>(cell)] += p * Weight(count);
        }
        std::size_t j = n;
        while (j-- > 0) {
          if (++idx[j] < total) break;
          idx[j] = 0;
        }
        if (j == static_cast<std::size_t>(-1)) break;
      }
    }
  }
  acc.grids = std::move(grids);
  acc.box = &box;
  return true;
}

inline bool fits_int128(const Chain& c, const Integer& lcm, const FolnerSet& F) {
  Integer mass = 0;
  for (const auto& [t, a] : c.terms()) {
    const Integer p = abs(a.get_num()) * (lcm / a.get_den());
    if (mpz_sizeinbase(p.get_mpz_t(), 2) > 62) return false;
    mass += p;
  }
  Integer bound = mass;
  for (int i = 0; i <= c.degree(); ++i) bound *= static_cast<unsigned long>(F.size());
  return mpz_sizeinbase(bound.get_mpz_t(), 2) < 120;
}

template <class Weight, class Finish>
auto accumulate_average(const AmenableExtension& ext, const Chain& c, const FolnerSet& F, bool allow_fast,
                        Finish&& finish) {
  const GroupDescriptor& group = c.group();
  Integer lcm = 1;
  for (const auto& [t, a] : c.terms()) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), a.get_den().get_mpz_t());
  AverageAccumulator<Weight> acc;
  acc.scale = lcm;
  for (int i = 0; i <= c.degree(); ++i) acc.scale *= static_cast<unsigned long>(F.size());

  auto scaled = [&](const Rational& a) {
    const Integer p = a.get_num() * (lcm / a.get_den());
    if constexpr (std::is_same_v<Weight, __int128>) {
      return static_cast<__int128>(p.get_si());
    } else {
      return Integer(p);
    }
  };

  if (allow_fast && difference_path_applies(group, c, F)) {
    const BoxDifferences diffs = box_differences(group, *F.box());
    if (!accumulate_grids<Weight>(group, c, *F.box(), diffs, scaled, acc)) {
      for (const auto& [t, a] : c.terms()) {
        const Weight p = scaled(a);
        visit_differences(group, t, diffs, [&](const Tuple& out, std::int64_t count) {
          acc.weights[out] += p * Weight(count);
        });
      }
    }
  } else {
    for (const auto& [t, a] : c.terms()) {
      const Weight p = scaled(a);
      visit_translates(group, t.entries(), F.elements(),
                       [&](const Tuple& out, const GroupElement&) { acc.weights[out] += p; });
    }
  }
  return finish(acc);
}

template <class Weight>
Rational to_rational(const Weight& w) {
  if constexpr (std::is_same_v<Weight, __int128>) {
    const bool neg = w < 0;
    unsigned __int128 u = neg ? static_cast<unsigned __int128>(-w) : static_cast<unsigned __int128>(w);
    Integer hi(static_cast<unsigned long>(u >> 64));
    Integer lo(static_cast<unsigned long>(u & ~std::uint64_t{0}));
    Integer v = (hi << 64) + lo;
    return Rational(neg ? Integer(-v) : v);
  } else {
    return Rational(w);
  }
}

template <class Weight>
Chain chain_from(const GroupDescriptor& group, int degree, AverageAccumulator<Weight>& acc) {
  std::vector<std::pair<Tuple, Weight>> sorted;
  sorted.reserve(acc.weights.size());
  for (auto& [t, w] : acc.weights) {
    if (w != 0) sorted.emplace_back(t, w);
  }
  const std::size_t n = static_cast<std::size_t>(degree);
  for (const OffsetGrid<Weight>& g : acc.grids) {
    const std::size_t r = acc.box->basis.size();
    std::vector<GroupElement> entries(n + 1, group.identity());
    for (std::size_t cell = 0; cell < g.cells.size(); ++cell) {
      if (g.cells[cell] == 0) continue;
      std::int64_t rest = static_cast<std::int64_t>(cell);
      for (std::size_t j = 0; j < n; ++j) {
        GroupElement x = g.roots[j];
        for (std::size_t i = 0; i < r; ++i) {
          const std::size_t q = j * r + i;
          const std::int64_t o = rest / g.stride[q] + g.lo[q];
          rest %= g.stride[q];
          x = group.compose_unchecked(x, group.power(acc.box->basis[i], o));
        }
        entries[j + 1] = std::move(x);
      }
      sorted.emplace_back(Tuple::from_entries(group.dimension(), entries), g.cells[cell]);
    }
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Chain out(group, degree);
  const Rational inv_scale = Rational(1) / Rational(acc.scale);
  for (const auto& [t, w] : sorted) out.add_canonical(t, to_rational(w) * inv_scale);
  return out;
}

template <class Weight>
Rational norm_from(AverageAccumulator<Weight>& acc) {
  Weight sum = 0;
  for (const auto& [t, w] : acc.weights) sum += w < 0 ? Weight(-w) : w;
  for (const OffsetGrid<Weight>& g : acc.grids) {
    for (const Weight& w : g.cells) sum += w < 0 ? Weight(-w) : w;
  }
  Rational out = to_rational(sum) / Rational(acc.scale);
  out.canonicalize();
  return out;
}

inline void validate_average_input(const AmenableExtension& ext, const Chain& c, const FolnerSet& F) {
  if (!(c.group() == ext.group())) {
    fail(ErrorCode::descriptor_mismatch, "chain over " + c.group().to_string() + " averaged in " + ext.to_string());
  }
  validate_averaging_set(ext, F);
}

template <class Finish>
auto dispatch_average(const AmenableExtension& ext, const Chain& c, const FolnerSet& F, bool allow_fast,
                      Finish&& finish) {
  validate_average_input(ext, c, F);
  Integer lcm = 1;
  for (const auto& [t, a] : c.terms()) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), a.get_den().get_mpz_t());
  if (fits_int128(c, lcm, F)) return accumulate_average<__int128>(ext, c, F, allow_fast, finish);
  return accumulate_average<Integer>(ext, c, F, allow_fast, finish);
}

}  // namespace detail

/// psi^F(c) = |F|^{-(n+1)} sum_{eta in F^{n+1}} (g_0 eta_0, ..., g_n eta_n).
/// Lattice-box sets commuting with the chain use difference coordinates;
/// everything else enumerates F^{n+1}.
inline Chain average(const AmenableExtension& ext, const Chain& c, const FolnerSet& F) {
  return detail::dispatch_average(ext, c, F, true, [&](auto& acc) {
    return detail::chain_from(c.group(), c.degree(), acc);
  });
}

inline Chain average(const AmenableExtension& ext, const Chain& c, std::span<const GroupElement> F) {
  return average(ext, c, FolnerSet(std::vector<GroupElement>(F.begin(), F.end())));
}

/// Enumerates F^{n+1} directly regardless of structure.
inline Chain average_brute_force(const AmenableExtension& ext, const Chain& c, const FolnerSet& F) {
  return detail::dispatch_average(ext, c, F, false, [&](auto& acc) {
    return detail::chain_from(c.group(), c.degree(), acc);
  });
}

/// |psi^F(c)|_1 without materializing the averaged chain.
inline Rational averaged_norm(const AmenableExtension& ext, const Chain& c, const FolnerSet& F) {
  return detail::dispatch_average(ext, c, F, true, [](auto& acc) { return detail::norm_from(acc); });
}

struct AveragingReport {
  Chain input;
  FolnerSet F;
  Chain output;
  Rational input_norm;
  Rational output_norm;
};

inline AveragingReport average_report(const AmenableExtension& ext, const Chain& c, const FolnerSet& F) {
  AveragingReport r{c, F, average(ext, c, F), l1_norm(c), 0};
  r.output_norm = l1_norm(r.output);
  return r;
}

/// Transfer C_n(Q) -> C_n(Gamma) for finite N:
/// [q_0..q_n] -> |N|^{-(n+1)} sum_{eta in N^{n+1}} [s(q_0) eta_0, ..., s(q_n) eta_n].
inline Chain transfer_finite(const AmenableExtension& ext, const Chain& z) {
  if (!ext.normal().is_finite()) {
    fail(ErrorCode::infinite_subgroup, "transfer needs finite N, got " + ext.normal().to_string());
  }
  if (!(z.group() == ext.quotient())) {
    fail(ErrorCode::descriptor_mismatch, "chain over " + z.group().to_string() + " is not over " +
                                             ext.quotient().to_string());
  }
  std::vector<GroupElement> N;
  for (const GroupElement& x : ext.normal().elements()) N.push_back(ext.embed(x));
  Rational weight(1);
  for (int i = 0; i <= z.degree(); ++i) weight /= static_cast<long>(N.size());
  Chain out(ext.group(), z.degree());
  for (const auto& [t, a] : z.terms()) {
    std::vector<GroupElement> lifted;
    for (std::size_t j = 0; j < t.arity(); ++j) lifted.push_back(ext.section(t.entry(j)));
    const Rational coeff = a * weight;
    detail::visit_translates(ext.group(), lifted, N,
                             [&](const Tuple& out_t, const GroupElement&) { out.add_canonical(out_t, coeff); });
  }
  return out;
}

}  // namespace efcyc
