#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <boost/container/small_vector.hpp>
#include <boost/container_hash/hash.hpp>

#include "efcyc/errors.hpp"
#include "efcyc/extension.hpp"
#include "efcyc/group.hpp"
#include "efcyc/rational.hpp"

namespace efcyc {

/// An (n+1)-tuple of group elements stored as flat coordinates. Chains only
/// hold canonical tuples, i.e. tuples whose first entry is the identity.
class Tuple {
 public:
  using Coords = boost::container::small_vector<std::int64_t, 16>;

  Tuple() = default;
  Tuple(std::size_t element_dimension, Coords coords)
      : coords_(std::move(coords)), dim_(static_cast<std::uint32_t>(element_dimension)) {}

  std::size_t arity() const { return dim_ == 0 ? arity_when_trivial_ : coords_.size() / dim_; }
  std::size_t element_dimension() const { return dim_; }
  const Coords& coords() const { return coords_; }
  // For builders that rewrite a scratch tuple in place; keep it canonical.
  Coords& mutable_coords() { return coords_; }

  GroupElement entry(std::size_t j) const {
    return GroupElement(std::span<const std::int64_t>(coords_.data() + j * dim_, dim_));
  }
  std::vector<GroupElement> entries() const {
    std::vector<GroupElement> out;
    out.reserve(arity());
    for (std::size_t j = 0; j < arity(); ++j) out.push_back(entry(j));
    return out;
  }

  static Tuple from_entries(std::size_t element_dimension, std::span<const GroupElement> entries) {
    Coords c;
    c.reserve(element_dimension * entries.size());
    for (const GroupElement& g : entries) c.insert(c.end(), g.coords().begin(), g.coords().end());
    Tuple t(element_dimension, std::move(c));
    t.arity_when_trivial_ = static_cast<std::uint32_t>(entries.size());
    return t;
  }

  friend bool operator==(const Tuple& a, const Tuple& b) {
    return a.arity() == b.arity() && a.coords_ == b.coords_;
  }
  friend std::strong_ordering operator<=>(const Tuple& a, const Tuple& b) {
    if (auto c = a.arity() <=> b.arity(); c != 0) return c;
    return std::lexicographical_compare_three_way(a.coords_.begin(), a.coords_.end(),
                                                  b.coords_.begin(), b.coords_.end());
  }

 private:
  Coords coords_;
  std::uint32_t dim_ = 0;
  // Trivial-group tuples have no coordinates; their arity is stored directly.
  std::uint32_t arity_when_trivial_ = 0;
};

struct TupleHash {
  std::size_t operator()(const Tuple& t) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ t.arity();
    for (std::int64_t x : t.coords()) {
      h ^= static_cast<std::uint64_t>(x);
      h *= 0xff51afd7ed558ccdULL;
      h ^= h >> 32;
    }
    h *= 0xc4ceb9fe1a85ec53ULL;
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

inline std::string to_string(const Tuple& t) {
  std::string out = "[";
  for (std::size_t j = 0; j < t.arity(); ++j) {
    if (j) out += ",";
    out += to_string(t.entry(j));
  }
  return out + "]";
}

/// Canonical representative of the diagonal left orbit: translates every
/// entry by the inverse of the first one.
inline Tuple canonicalize(const GroupDescriptor& group, std::span<const GroupElement> entries) {
  if (entries.empty()) fail(ErrorCode::malformed_input, "cannot canonicalize an empty tuple");
  for (const GroupElement& g : entries) group.require(g);
  const GroupElement shift = group.inverse_unchecked(entries.front());
  std::vector<GroupElement> moved;
  moved.reserve(entries.size());
  GroupElement tmp;
  for (const GroupElement& g : entries) {
    group.compose_into(shift, g, tmp);
    moved.push_back(tmp);
  }
  return Tuple::from_entries(group.dimension(), moved);
}

/// A finite rational combination of canonical tuples: an element of the
/// coinvariants of the simplicial resolution in degree n.
class Chain {
 public:
  using Terms = std::map<Tuple, Rational>;

  Chain() = default;
  Chain(GroupDescriptor group, int degree) : group_(std::move(group)), degree_(degree) {
    if (degree < 0) fail(ErrorCode::degree_mismatch, "chain degree must be non-negative");
  }

  const GroupDescriptor& group() const { return group_; }
  int degree() const { return degree_; }
  const Terms& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  /// Adds coeff times an already canonical tuple.
  void add_canonical(const Tuple& t, const Rational& coeff) {
    if (coeff == 0) return;
    auto [it, inserted] = terms_.try_emplace(t, coeff);
    if (!inserted) {
      it->second += coeff;
      if (it->second == 0) terms_.erase(it);
    }
  }

  /// Adds coeff times the orbit of an arbitrary tuple.
  void add(std::span<const GroupElement> entries, const Rational& coeff) {
    if (entries.size() != static_cast<std::size_t>(degree_) + 1) {
      fail(ErrorCode::degree_mismatch, "tuple of length " + std::to_string(entries.size()) +
                                           " in a degree-" + std::to_string(degree_) + " chain");
    }
    add_canonical(canonicalize(group_, entries), coeff);
  }
  void add(std::initializer_list<GroupElement> entries, const Rational& coeff) {
    std::vector<GroupElement> v(entries);
    add(std::span<const GroupElement>(v), coeff);
  }

  Rational coefficient(const Tuple& t) const {
    auto it = terms_.find(t);
    return it == terms_.end() ? Rational(0) : it->second;
  }

  Chain& operator+=(const Chain& other) {
    require_compatible(other);
    for (const auto& [t, a] : other.terms_) add_canonical(t, a);
    return *this;
  }
  Chain& operator-=(const Chain& other) {
    require_compatible(other);
    for (const auto& [t, a] : other.terms_) add_canonical(t, -a);
    return *this;
  }
  Chain& operator*=(const Rational& s) {
    if (s == 0) {
      terms_.clear();
    } else {
      for (auto& [t, a] : terms_) a *= s;
    }
    return *this;
  }
  friend Chain operator+(Chain a, const Chain& b) { return a += b; }
  friend Chain operator-(Chain a, const Chain& b) { return a -= b; }
  friend Chain operator*(const Rational& s, Chain a) { return a *= s; }
  friend Chain operator-(Chain a) { return a *= Rational(-1); }

  friend bool operator==(const Chain& a, const Chain& b) {
    return a.degree_ == b.degree_ && a.group_ == b.group_ && a.terms_ == b.terms_;
  }

  void require_compatible(const Chain& other) const {
    if (!(group_ == other.group_)) {
      fail(ErrorCode::descriptor_mismatch,
           "chains over " + group_.to_string() + " and " + other.group_.to_string());
    }
    if (degree_ != other.degree_) {
      fail(ErrorCode::degree_mismatch, "chains of degree " + std::to_string(degree_) + " and " +
                                           std::to_string(other.degree_));
    }
  }

 private:
  GroupDescriptor group_;
  int degree_ = 0;
  Terms terms_;
};

inline std::string to_string(const Chain& c) {
  if (c.is_zero()) return "0";
  std::string out;
  for (const auto& [t, a] : c.terms()) {
    if (!out.empty()) out += " + ";
    out += format_rational(a) + "*" + to_string(t);
  }
  return out;
}

/// Alternating sum of face deletions.
inline Chain boundary(const Chain& c) {
  if (c.degree() < 1) fail(ErrorCode::degree_mismatch, "boundary of a degree-0 chain");
  Chain out(c.group(), c.degree() - 1);
  std::vector<GroupElement> face;
  for (const auto& [t, a] : c.terms()) {
    const std::vector<GroupElement> entries = t.entries();
    for (std::size_t j = 0; j < entries.size(); ++j) {
      face.clear();
      for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i != j) face.push_back(entries[i]);
      }
      out.add(face, j % 2 == 0 ? a : Rational(-a));
    }
  }
  return out;
}

inline bool is_cycle(const Chain& c) { return c.degree() == 0 || boundary(c).is_zero(); }

/// Sum of absolute coefficients, one per orbit.
inline Rational l1_norm(const Chain& c) {
  Rational sum = 0;
  for (const auto& [t, a] : c.terms()) sum += abs_value(a);
  return sum;
}

/// Entrywise image under the projection Gamma -> Q.
inline Chain pushforward(const AmenableExtension& ext, const Chain& c) {
  if (!(c.group() == ext.group())) {
    fail(ErrorCode::descriptor_mismatch,
         "chain over " + c.group().to_string() + " pushed along " + ext.to_string());
  }
  Chain out(ext.quotient(), c.degree());
  std::vector<GroupElement> image;
  for (const auto& [t, a] : c.terms()) {
    image.clear();
    for (std::size_t j = 0; j < t.arity(); ++j) image.push_back(ext.project(t.entry(j)));
    out.add(image, a);
  }
  return out;
}

/// Entrywise section lift of a chain over Q.
inline Chain lift(const AmenableExtension& ext, const Chain& z) {
  if (!(z.group() == ext.quotient())) {
    fail(ErrorCode::descriptor_mismatch,
         "chain over " + z.group().to_string() + " lifted along " + ext.to_string());
  }
  Chain out(ext.group(), z.degree());
  std::vector<GroupElement> image;
  for (const auto& [t, a] : z.terms()) {
    image.clear();
    for (std::size_t j = 0; j < t.arity(); ++j) image.push_back(ext.section(t.entry(j)));
    out.add(image, a);
  }
  return out;
}

/// Right action of sigma in Gamma^{n+1}, entrywise, re-canonicalized.
inline Chain right_translate(const Chain& c, std::span<const GroupElement> sigma) {
  if (sigma.size() != static_cast<std::size_t>(c.degree()) + 1) {
    fail(ErrorCode::degree_mismatch, "translation tuple has the wrong length");
  }
  Chain out(c.group(), c.degree());
  std::vector<GroupElement> moved;
  for (const auto& [t, a] : c.terms()) {
    moved.clear();
    for (std::size_t j = 0; j < t.arity(); ++j) moved.push_back(c.group().compose(t.entry(j), sigma[j]));
    out.add(moved, a);
  }
  return out;
}

}  // namespace efcyc
