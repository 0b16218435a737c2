#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/container/small_vector.hpp>
#include <boost/container_hash/hash.hpp>

#include "efcyc/errors.hpp"

namespace efcyc {

/// Canonical coordinates of an element of a catalogued group.
///
/// Coordinates alone do not identify the group; every operation takes the
/// GroupDescriptor explicitly and rejects coordinate vectors that are not a
/// canonical encoding for it.
class GroupElement {
 public:
  using Coords = boost::container::small_vector<std::int64_t, 6>;

  GroupElement() = default;
  GroupElement(std::initializer_list<std::int64_t> coords) : coords_(coords) {}
  explicit GroupElement(Coords coords) : coords_(std::move(coords)) {}
  explicit GroupElement(std::span<const std::int64_t> coords)
      : coords_(coords.begin(), coords.end()) {}

  std::size_t size() const { return coords_.size(); }
  std::int64_t operator[](std::size_t i) const { return coords_[i]; }
  std::int64_t& operator[](std::size_t i) { return coords_[i]; }
  const Coords& coords() const { return coords_; }
  Coords& coords() { return coords_; }

  friend bool operator==(const GroupElement&, const GroupElement&) = default;
  friend auto operator<=>(const GroupElement& a, const GroupElement& b) {
    return std::lexicographical_compare_three_way(a.coords_.begin(), a.coords_.end(),
                                                  b.coords_.begin(), b.coords_.end());
  }

 private:
  Coords coords_;
};

struct GroupElementHash {
  std::size_t operator()(const GroupElement& g) const {
    return boost::hash_range(g.coords().begin(), g.coords().end());
  }
};

inline std::string to_string(const GroupElement& g) {
  std::string out = "(";
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(g[i]);
  }
  return out + ")";
}

/// One of FreeAbelian(rank), FiniteCyclic(modulus), Heisenberg3 or a
/// DirectProduct of descriptors. The empty product is the trivial group.
class GroupDescriptor {
 public:
  enum class Kind { FreeAbelian, FiniteCyclic, Heisenberg3, DirectProduct };

  GroupDescriptor() : GroupDescriptor(Kind::DirectProduct, 0, {}) {}

  static GroupDescriptor free_abelian(std::int64_t rank) {
    if (rank < 1) fail(ErrorCode::malformed_input, "free abelian rank must be positive");
    return GroupDescriptor(Kind::FreeAbelian, rank, {});
  }
  static GroupDescriptor cyclic(std::int64_t modulus) {
    if (modulus < 1) fail(ErrorCode::malformed_input, "cyclic modulus must be at least 1");
    return GroupDescriptor(Kind::FiniteCyclic, modulus, {});
  }
  static GroupDescriptor heisenberg() { return GroupDescriptor(Kind::Heisenberg3, 0, {}); }
  static GroupDescriptor product(std::vector<GroupDescriptor> factors) {
    return GroupDescriptor(Kind::DirectProduct, 0, std::move(factors));
  }
  static GroupDescriptor trivial() { return product({}); }

  Kind kind() const { return kind_; }
  /// Rank for FreeAbelian, modulus for FiniteCyclic, 0 otherwise.
  std::int64_t parameter() const { return parameter_; }
  const std::vector<GroupDescriptor>& factors() const { return factors_; }
  std::size_t dimension() const { return dimension_; }

  bool is_finite() const {
    return std::all_of(atoms_.begin(), atoms_.end(),
                       [](const Atom& a) { return a.kind == Kind::FiniteCyclic; });
  }
  bool is_abelian() const {
    return std::none_of(atoms_.begin(), atoms_.end(),
                        [](const Atom& a) { return a.kind == Kind::Heisenberg3; });
  }
  /// Order of a finite group.
  std::uint64_t order() const {
    if (!is_finite()) fail(ErrorCode::infinite_subgroup, to_string() + " is infinite");
    std::uint64_t n = 1;
    for (const Atom& a : atoms_) n *= static_cast<std::uint64_t>(a.parameter);
    return n;
  }

  GroupElement identity() const {
    GroupElement e;
    e.coords().assign(dimension_, 0);
    return e;
  }

  bool contains(const GroupElement& x) const {
    if (x.size() != dimension_) return false;
    for (const Atom& a : atoms_) {
      if (a.kind == Kind::FiniteCyclic) {
        const std::int64_t r = x[a.offset];
        if (r < 0 || r >= a.parameter) return false;
      }
    }
    return true;
  }

  void require(const GroupElement& x) const {
    if (!contains(x)) {
      fail(ErrorCode::descriptor_mismatch,
           "element " + efcyc::to_string(x) + " is not a canonical element of " + to_string());
    }
  }

  /// Product without validation; both operands must be canonical.
  void compose_into(const GroupElement& x, const GroupElement& y, GroupElement& out) const {
    out.coords().resize(dimension_);
    for (const Atom& a : atoms_) {
      const std::size_t o = a.offset;
      switch (a.kind) {
        case Kind::FreeAbelian:
          for (std::int64_t i = 0; i < a.parameter; ++i) out[o + i] = x[o + i] + y[o + i];
          break;
        case Kind::FiniteCyclic: {
          std::int64_t s = x[o] + y[o];
          if (s >= a.parameter) s -= a.parameter;
          out[o] = s;
          break;
        }
        case Kind::Heisenberg3: {
          const std::int64_t c = x[o + 2] + y[o + 2] + x[o] * y[o + 1];
          out[o] = x[o] + y[o];
          out[o + 1] = x[o + 1] + y[o + 1];
          out[o + 2] = c;
          break;
        }
        case Kind::DirectProduct: break;
      }
    }
  }

  GroupElement compose_unchecked(const GroupElement& x, const GroupElement& y) const {
    GroupElement out;
    compose_into(x, y, out);
    return out;
  }

  GroupElement compose(const GroupElement& x, const GroupElement& y) const {
    require(x);
    require(y);
    return compose_unchecked(x, y);
  }

  GroupElement inverse_unchecked(const GroupElement& x) const {
    GroupElement out;
    out.coords().resize(dimension_);
    for (const Atom& a : atoms_) {
      const std::size_t o = a.offset;
      switch (a.kind) {
        case Kind::FreeAbelian:
          for (std::int64_t i = 0; i < a.parameter; ++i) out[o + i] = -x[o + i];
          break;
        case Kind::FiniteCyclic: out[o] = x[o] == 0 ? 0 : a.parameter - x[o]; break;
        case Kind::Heisenberg3:
          // (a,b,c)^-1 = (-a,-b,ab-c)
          out[o] = -x[o];
          out[o + 1] = -x[o + 1];
          out[o + 2] = x[o] * x[o + 1] - x[o + 2];
          break;
        case Kind::DirectProduct: break;
      }
    }
    return out;
  }

  GroupElement inverse(const GroupElement& x) const {
    require(x);
    return inverse_unchecked(x);
  }

  /// x^exponent for any integer exponent.
  GroupElement power(const GroupElement& x, std::int64_t exponent) const {
    require(x);
    GroupElement base = exponent < 0 ? inverse_unchecked(x) : x;
    std::uint64_t e = exponent < 0 ? static_cast<std::uint64_t>(-exponent)
                                   : static_cast<std::uint64_t>(exponent);
    GroupElement result = identity();
    while (e) {
      if (e & 1U) result = compose_unchecked(result, base);
      base = compose_unchecked(base, base);
      e >>= 1U;
    }
    return result;
  }

  bool commute(const GroupElement& x, const GroupElement& y) const {
    return compose_unchecked(x, y) == compose_unchecked(y, x);
  }

  /// Reduces arbitrary integer coordinates to the canonical encoding
  /// (residues for cyclic coordinates).
  GroupElement reduce(GroupElement x) const {
    if (x.size() != dimension_) {
      fail(ErrorCode::descriptor_mismatch, "element " + efcyc::to_string(x) + " has wrong arity for " +
                                               to_string());
    }
    for (const Atom& a : atoms_) {
      if (a.kind == Kind::FiniteCyclic) {
        std::int64_t r = x[a.offset] % a.parameter;
        if (r < 0) r += a.parameter;
        x[a.offset] = r;
      }
    }
    return x;
  }

  /// Standard generators: unit vectors, the cyclic generator, and the two
  /// non-central Heisenberg generators. Trivial cyclic factors contribute none.
  std::vector<GroupElement> generators() const {
    std::vector<GroupElement> gens;
    for (const Atom& a : atoms_) {
      auto unit = [&](std::size_t idx) {
        GroupElement g = identity();
        g[idx] = 1;
        gens.push_back(g);
      };
      switch (a.kind) {
        case Kind::FreeAbelian:
          for (std::int64_t i = 0; i < a.parameter; ++i) unit(a.offset + i);
          break;
        case Kind::FiniteCyclic:
          if (a.parameter > 1) unit(a.offset);
          break;
        case Kind::Heisenberg3:
          unit(a.offset);
          unit(a.offset + 1);
          break;
        case Kind::DirectProduct: break;
      }
    }
    return gens;
  }

  /// All elements of a finite group, in lexicographic order.
  std::vector<GroupElement> elements() const {
    const std::uint64_t n = order();
    std::vector<GroupElement> out;
    out.reserve(n);
    GroupElement cur = identity();
    for (std::uint64_t i = 0; i < n; ++i) {
      out.push_back(cur);
      for (std::size_t idx = dimension_; idx-- > 0;) {
        if (++cur[idx] < modulus_at(idx)) break;
        cur[idx] = 0;
      }
    }
    return out;
  }

  /// Coordinates that define homomorphisms to Z: free abelian coordinates and
  /// the (a, b) coordinates of Heisenberg factors, in order.
  std::vector<std::int64_t> linear_coordinates(const GroupElement& x) const {
    std::vector<std::int64_t> out;
    for (const Atom& a : atoms_) {
      if (a.kind == Kind::FreeAbelian) {
        for (std::int64_t i = 0; i < a.parameter; ++i) out.push_back(x[a.offset + i]);
      } else if (a.kind == Kind::Heisenberg3) {
        out.push_back(x[a.offset]);
        out.push_back(x[a.offset + 1]);
      }
    }
    return out;
  }
  std::size_t linear_rank() const {
    std::size_t r = 0;
    for (const Atom& a : atoms_) {
      if (a.kind == Kind::FreeAbelian) r += static_cast<std::size_t>(a.parameter);
      if (a.kind == Kind::Heisenberg3) r += 2;
    }
    return r;
  }

  std::string to_string() const {
    switch (kind_) {
      case Kind::FreeAbelian: return parameter_ == 1 ? "Z" : "Z^" + std::to_string(parameter_);
      case Kind::FiniteCyclic: return "Z/" + std::to_string(parameter_);
      case Kind::Heisenberg3: return "Heis3";
      case Kind::DirectProduct: {
        if (factors_.empty()) return "1";
        std::string out;
        for (std::size_t i = 0; i < factors_.size(); ++i) {
          if (i) out += "x";
          out += factors_[i].to_string();
        }
        return out;
      }
    }
    return "?";
  }

  friend bool operator==(const GroupDescriptor& a, const GroupDescriptor& b) {
    return a.kind_ == b.kind_ && a.parameter_ == b.parameter_ && a.factors_ == b.factors_;
  }

  /// Flattened atomic factor; exposed for the extension and module layers.
  struct Atom {
    Kind kind;
    std::int64_t parameter;
    std::size_t offset;
  };
  const std::vector<Atom>& atoms() const { return atoms_; }

 private:
  GroupDescriptor(Kind kind, std::int64_t parameter, std::vector<GroupDescriptor> factors)
      : kind_(kind), parameter_(parameter), factors_(std::move(factors)) {
    flatten(*this, atoms_, dimension_);
  }

  static void flatten(const GroupDescriptor& d, std::vector<Atom>& atoms, std::size_t& offset) {
    switch (d.kind_) {
      case Kind::FreeAbelian:
        atoms.push_back({d.kind_, d.parameter_, offset});
        offset += static_cast<std::size_t>(d.parameter_);
        break;
      case Kind::FiniteCyclic:
        atoms.push_back({d.kind_, d.parameter_, offset});
        offset += 1;
        break;
      case Kind::Heisenberg3:
        atoms.push_back({d.kind_, 0, offset});
        offset += 3;
        break;
      case Kind::DirectProduct:
        for (const auto& f : d.factors_) flatten(f, atoms, offset);
        break;
    }
  }

  std::int64_t modulus_at(std::size_t idx) const {
    for (const Atom& a : atoms_) {
      if (a.offset == idx) return a.parameter;
    }
    return 1;
  }

  Kind kind_;
  std::int64_t parameter_;
  std::vector<GroupDescriptor> factors_;
  std::vector<Atom> atoms_;
  std::size_t dimension_ = 0;
};

namespace detail {

inline std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::int64_t parse_positive(std::string_view digits, std::string_view context) {
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    fail(ErrorCode::malformed_input, "malformed number in '" + std::string(context) + "'");
  }
  if (digits.size() > 15) fail(ErrorCode::malformed_input, "number too large in '" + std::string(context) + "'");
  return std::stoll(std::string(digits));
}

inline std::string strip(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

/// Parses "Z", "Z^d", "Z/m", "Heis3", "1" and products joined with "x".
inline GroupDescriptor parse_group(std::string_view spec) {
  std::vector<GroupDescriptor> factors;
  for (const std::string& raw : detail::split(spec, 'x')) {
    const std::string tok = detail::strip(raw);
    if (tok == "Z") {
      factors.push_back(GroupDescriptor::free_abelian(1));
    } else if (tok.rfind("Z^", 0) == 0) {
      factors.push_back(GroupDescriptor::free_abelian(detail::parse_positive(tok.substr(2), spec)));
    } else if (tok.rfind("Z/", 0) == 0) {
      factors.push_back(GroupDescriptor::cyclic(detail::parse_positive(tok.substr(2), spec)));
    } else if (tok == "Heis3") {
      factors.push_back(GroupDescriptor::heisenberg());
    } else if (tok == "1") {
      continue;
    } else {
      fail(ErrorCode::malformed_input, "unknown group factor '" + tok + "' in '" + std::string(spec) + "'");
    }
  }
  if (factors.size() == 1) return factors.front();
  return GroupDescriptor::product(std::move(factors));
}

/// All products of at most `radius` generators or their inverses, sorted.
inline std::vector<GroupElement> enumerate_ball(const GroupDescriptor& group,
                                                std::span<const GroupElement> generators,
                                                std::int64_t radius) {
  if (radius < 0) fail(ErrorCode::malformed_input, "ball radius must be non-negative");
  std::vector<GroupElement> steps;
  for (const GroupElement& g : generators) {
    group.require(g);
    steps.push_back(g);
    steps.push_back(group.inverse_unchecked(g));
  }
  std::set<GroupElement> ball{group.identity()};
  std::vector<GroupElement> frontier{group.identity()};
  for (std::int64_t r = 0; r < radius && !frontier.empty(); ++r) {
    std::vector<GroupElement> next;
    for (const GroupElement& x : frontier) {
      for (const GroupElement& s : steps) {
        GroupElement y = group.compose_unchecked(x, s);
        if (ball.insert(y).second) next.push_back(std::move(y));
      }
    }
    frontier = std::move(next);
  }
  return {ball.begin(), ball.end()};
}

}  // namespace efcyc
