#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "efcyc/chain.hpp"
#include "efcyc/estimate.hpp"
#include "efcyc/folner.hpp"
#include "efcyc/simplex.hpp"

namespace efcyc {

using ModuleVector = std::vector<Rational>;

inline bool is_zero(const ModuleVector& v) {
  return std::all_of(v.begin(), v.end(), [](const Rational& x) { return x == 0; });
}

inline Rational l1_norm(const ModuleVector& v) {
  Rational s = 0;
  for (const Rational& x : v) s += abs_value(x);
  return s;
}

/// e_i -> sign * e_j, stored as image[i] = +-(j+1).
class SignedPermutation {
 public:
  SignedPermutation() = default;
  explicit SignedPermutation(std::vector<std::int64_t> image) : image_(std::move(image)) {
    std::vector<bool> hit(image_.size(), false);
    for (std::int64_t x : image_) {
      const std::int64_t j = std::llabs(x) - 1;
      if (x == 0 || j >= static_cast<std::int64_t>(image_.size()) || hit[static_cast<std::size_t>(j)]) {
        fail(ErrorCode::invalid_module, "not a signed permutation");
      }
      hit[static_cast<std::size_t>(j)] = true;
    }
  }
  static SignedPermutation identity(std::size_t d) {
    std::vector<std::int64_t> im(d);
    for (std::size_t i = 0; i < d; ++i) im[i] = static_cast<std::int64_t>(i) + 1;
    return SignedPermutation(std::move(im));
  }

  std::size_t size() const { return image_.size(); }
  std::size_t target(std::size_t i) const { return static_cast<std::size_t>(std::llabs(image_[i]) - 1); }
  int sign(std::size_t i) const { return image_[i] < 0 ? -1 : 1; }
  const std::vector<std::int64_t>& image() const { return image_; }

  /// (this o other)(e_i) = this(other(e_i)).
  SignedPermutation after(const SignedPermutation& other) const {
    std::vector<std::int64_t> im(size());
    for (std::size_t i = 0; i < size(); ++i) {
      const std::size_t j = other.target(i);
      im[i] = static_cast<std::int64_t>(target(j) + 1) * sign(j) * other.sign(i);
    }
    return SignedPermutation(std::move(im));
  }

  SignedPermutation power(std::uint64_t e) const {
    SignedPermutation result = identity(size()), base = *this;
    while (e) {
      if (e & 1U) result = base.after(result);
      base = base.after(base);
      e >>= 1U;
    }
    return result;
  }

  ModuleVector apply(const ModuleVector& v) const {
    ModuleVector out(v.size(), Rational(0));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == 0) continue;
      if (sign(i) > 0) {
        out[target(i)] += v[i];
      } else {
        out[target(i)] -= v[i];
      }
    }
    return out;
  }

  friend bool operator==(const SignedPermutation&, const SignedPermutation&) = default;

 private:
  std::vector<std::int64_t> image_;
};

/// Finite-dimensional module R^d with the l1-norm, on which g acts by
/// P^{phi(g)}, where P is a signed permutation with P^modulus = 1 and phi is
/// a homomorphism to Z/modulus given by integer weights on the coordinates
/// of the group.
///
/// A module may additionally be the coinvariant quotient by the subgroup
/// generated by P^killed; vectors are then kept in a canonical form supported
/// on one basis vector per surviving orbit, and the norm is the quotient
/// seminorm.
class NormedModule {
 public:
  NormedModule(GroupDescriptor group, std::int64_t modulus, SignedPermutation generator,
               std::vector<std::int64_t> character, std::int64_t killed = 0)
      : group_(std::move(group)),
        modulus_(modulus),
        generator_(std::move(generator)),
        character_(std::move(character)),
        killed_(killed) {
    validate();
    build_orbits();
  }

  static NormedModule trivial(const GroupDescriptor& group) {
    return NormedModule(group, 1, SignedPermutation::identity(1), std::vector<std::int64_t>(group.dimension(), 0));
  }

  const GroupDescriptor& group() const { return group_; }
  std::size_t dimension() const { return generator_.size(); }
  std::int64_t modulus() const { return modulus_; }
  const SignedPermutation& generator() const { return generator_; }
  const std::vector<std::int64_t>& character() const { return character_; }
  std::int64_t killed() const { return killed_; }
  bool is_quotient() const { return effective_modulus() != modulus_; }

  /// phi(g) in [0, modulus).
  std::int64_t phase(const GroupElement& g) const {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < character_.size(); ++i) s = (s + (character_[i] % modulus_) * (g[i] % modulus_)) % modulus_;
    return s < 0 ? s + modulus_ : s;
  }

  ModuleVector act(const GroupElement& g, const ModuleVector& v) const {
    const std::int64_t p = phase(g);
    if (p == 0) return v;
    return generator_.power(static_cast<std::uint64_t>(p)).apply(v);
  }

  /// Canonical representative of the class of v.
  ModuleVector canonical(const ModuleVector& v) const {
    require(v);
    if (!is_quotient()) return v;
    ModuleVector out(v.size(), Rational(0));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == 0 || killed_orbit_[i]) continue;
      if (orbit_sign_[i] > 0) {
        out[leader_[i]] += v[i];
      } else {
        out[leader_[i]] -= v[i];
      }
    }
    return out;
  }

  /// l1-norm, or the quotient seminorm for coinvariant modules.
  Rational norm(const ModuleVector& v) const { return l1_norm(canonical(v)); }

  void require(const ModuleVector& v) const {
    if (v.size() != dimension()) {
      fail(ErrorCode::invalid_module, "module vector of length " + std::to_string(v.size()) + " in a " +
                                          std::to_string(dimension()) + "-dimensional module");
    }
  }

  /// gcd(images of the generators of N, modulus): P^g generates the image of N.
  std::int64_t normal_image_generator(const AmenableExtension& ext) const {
    std::int64_t g = killed_ % modulus_;
    for (const GroupElement& n : ext.normal_generators()) g = std::gcd(g, phase(n));
    return std::gcd(g, modulus_);
  }

  /// An element of N acting by P^{normal_image_generator(ext)}.
  GroupElement normal_element_with_phase(const AmenableExtension& ext) const {
    const std::int64_t target = normal_image_generator(ext) % modulus_;
    const auto gens = ext.normal().generators();
    const auto ball = enumerate_ball(ext.normal(), gens, modulus_ * static_cast<std::int64_t>(gens.size() + 1));
    for (const GroupElement& n : ball) {
      const GroupElement g = ext.embed(n);
      if (phase(g) == target) return g;
    }
    fail(ErrorCode::invalid_module, "no element of N realizes the image generator");
  }

  /// A_N as a module over Q = Gamma/N.
  NormedModule coinvariants(const AmenableExtension& ext) const {
    if (!(ext.group() == group_)) {
      fail(ErrorCode::descriptor_mismatch, "module over " + group_.to_string() + " used with " + ext.to_string());
    }
    const GroupDescriptor& q = ext.quotient();
    std::vector<std::int64_t> weights(q.dimension(), 0);
    for (std::size_t i = 0; i < q.dimension(); ++i) {
      GroupElement unit = q.identity();
      unit[i] = 1;
      if (!q.contains(unit)) continue;  // Z/1 coordinate
      weights[i] = phase(ext.section(unit));
    }
    return NormedModule(q, modulus_, generator_, std::move(weights), normal_image_generator(ext));
  }

  friend bool operator==(const NormedModule& a, const NormedModule& b) {
    return a.group_ == b.group_ && a.modulus_ == b.modulus_ && a.generator_ == b.generator_ &&
           a.character_ == b.character_ && a.effective_modulus() == b.effective_modulus();
  }

 private:
  std::int64_t effective_modulus() const { return std::gcd(killed_ % modulus_, modulus_); }

  void validate() {
    if (modulus_ < 1) fail(ErrorCode::invalid_module, "module quotient order must be positive");
    if (generator_.size() == 0) fail(ErrorCode::invalid_module, "module dimension must be positive");
    if (!(generator_.power(static_cast<std::uint64_t>(modulus_)) == SignedPermutation::identity(dimension()))) {
      fail(ErrorCode::invalid_module, "action does not factor through Z/" + std::to_string(modulus_));
    }
    if (character_.size() != group_.dimension()) {
      fail(ErrorCode::invalid_module, "character needs one weight per coordinate of " + group_.to_string());
    }
    const std::int64_t m = effective_modulus();
    for (const auto& a : group_.atoms()) {
      if (a.kind == GroupDescriptor::Kind::FiniteCyclic) {
        if ((character_[a.offset] % m) * (a.parameter % m) % m != 0) {
          fail(ErrorCode::invalid_module, "character is not a homomorphism on Z/" + std::to_string(a.parameter));
        }
      } else if (a.kind == GroupDescriptor::Kind::Heisenberg3) {
        if (character_[a.offset + 2] % m != 0) {
          fail(ErrorCode::invalid_module, "character must vanish on the Heisenberg center");
        }
      }
    }
  }

  void build_orbits() {
    const std::size_t d = dimension();
    leader_.assign(d, 0);
    orbit_sign_.assign(d, 1);
    killed_orbit_.assign(d, false);
    const SignedPermutation step = generator_.power(static_cast<std::uint64_t>(effective_modulus()));
    std::vector<bool> seen(d, false);
    for (std::size_t i0 = 0; i0 < d; ++i0) {
      if (seen[i0]) continue;
      // walk e_i0 -> s e_j; then e_j is identified with s e_i0
      std::vector<std::size_t> orbit;
      std::size_t j = i0;
      int s = 1;
      bool killed = false;
      while (true) {
        seen[j] = true;
        orbit.push_back(j);
        leader_[j] = i0;
        orbit_sign_[j] = s;
        s *= step.sign(j);
        j = step.target(j);
        if (j == i0) {
          killed = s < 0;
          break;
        }
      }
      for (std::size_t k : orbit) killed_orbit_[k] = killed;
    }
  }

  GroupDescriptor group_;
  std::int64_t modulus_;
  SignedPermutation generator_;
  std::vector<std::int64_t> character_;
  std::int64_t killed_;
  std::vector<std::size_t> leader_;
  std::vector<int> orbit_sign_;
  std::vector<bool> killed_orbit_;
};

/// Quotient seminorm of the class of m in A_N, computed as the exact LP
/// min |m + w|_1 over w in span{a - nu.a}.
inline Rational coinvariant_seminorm(const ModuleVector& m, const AmenableExtension& ext, const NormedModule& A) {
  A.require(m);
  const std::int64_t g = A.normal_image_generator(ext);
  const SignedPermutation step = A.generator().power(static_cast<std::uint64_t>(g));
  lp::SparseMatrix W;
  W.rows = A.dimension();
  for (std::size_t l = 0; l < A.dimension(); ++l) {
    std::map<std::size_t, Rational> col;
    col[l] += 1;
    col[step.target(l)] -= step.sign(l);
    std::vector<std::pair<std::size_t, Rational>> entries;
    for (auto& [i, v] : col) {
      if (v != 0) entries.emplace_back(i, v);
    }
    if (!entries.empty()) W.columns.push_back(std::move(entries));
  }
  if (W.columns.empty()) return l1_norm(m);
  return lp::minimize_l1_residual(W, m).value;
}

/// Chains in C_n(Gamma; A) = A (x)_Gamma C_n(Gamma). Canonicalization moves
/// the tuple to start at the identity and applies the inverse of the old
/// first entry to the coefficient.
class TwistedChain {
 public:
  using Terms = std::map<Tuple, ModuleVector>;

  TwistedChain(std::shared_ptr<const NormedModule> module, int degree)
      : module_(std::move(module)), degree_(degree) {
    if (!module_) fail(ErrorCode::invalid_module, "twisted chain without a module");
    if (degree < 0) fail(ErrorCode::degree_mismatch, "chain degree must be non-negative");
  }

  const GroupDescriptor& group() const { return module_->group(); }
  const NormedModule& module() const { return *module_; }
  const std::shared_ptr<const NormedModule>& module_ptr() const { return module_; }
  int degree() const { return degree_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  void add_canonical(const Tuple& t, const ModuleVector& v) {
    ModuleVector c = module_->canonical(v);
    if (efcyc::is_zero(c)) return;
    auto [it, inserted] = terms_.try_emplace(t, c);
    if (!inserted) {
      for (std::size_t i = 0; i < c.size(); ++i) it->second[i] += c[i];
      if (efcyc::is_zero(it->second)) terms_.erase(it);
    }
  }

  void add(std::span<const GroupElement> entries, const ModuleVector& v) {
    if (entries.size() != static_cast<std::size_t>(degree_) + 1) {
      fail(ErrorCode::degree_mismatch, "tuple length does not match the chain degree");
    }
    const GroupElement shift = group().inverse(entries.front());
    add_canonical(canonicalize(group(), entries), module_->act(shift, v));
  }
  void add(std::initializer_list<GroupElement> entries, const ModuleVector& v) {
    std::vector<GroupElement> e(entries);
    add(std::span<const GroupElement>(e), v);
  }

  TwistedChain& operator+=(const TwistedChain& o) {
    require_compatible(o);
    for (const auto& [t, v] : o.terms_) add_canonical(t, v);
    return *this;
  }
  TwistedChain& operator-=(const TwistedChain& o) {
    require_compatible(o);
    for (const auto& [t, v] : o.terms_) {
      ModuleVector neg = v;
      for (auto& x : neg) x = -x;
      add_canonical(t, neg);
    }
    return *this;
  }
  TwistedChain& operator*=(const Rational& s) {
    if (s == 0) {
      terms_.clear();
    } else {
      for (auto& [t, v] : terms_) {
        for (auto& x : v) x *= s;
      }
    }
    return *this;
  }
  friend TwistedChain operator+(TwistedChain a, const TwistedChain& b) { return a += b; }
  friend TwistedChain operator-(TwistedChain a, const TwistedChain& b) { return a -= b; }
  friend TwistedChain operator*(const Rational& s, TwistedChain a) { return a *= s; }
  friend TwistedChain operator-(TwistedChain a) { return a *= Rational(-1); }
  friend bool operator==(const TwistedChain& a, const TwistedChain& b) {
    return a.degree_ == b.degree_ && *a.module_ == *b.module_ && a.terms_ == b.terms_;
  }

  void require_compatible(const TwistedChain& o) const {
    if (!(*module_ == *o.module_)) fail(ErrorCode::descriptor_mismatch, "twisted chains over different modules");
    if (degree_ != o.degree_) fail(ErrorCode::degree_mismatch, "twisted chains of different degree");
  }

 private:
  std::shared_ptr<const NormedModule> module_;
  int degree_;
  Terms terms_;
};

inline std::string to_string(const TwistedChain& c) {
  if (c.is_zero()) return "0";
  std::string out;
  for (const auto& [t, v] : c.terms()) {
    if (!out.empty()) out += " + ";
    out += "(";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_rational(v[i]);
    out += ")*" + to_string(t);
  }
  return out;
}

/// Embeds a trivial-coefficient chain with coefficients in a module of
/// dimension 1 and trivial action.
inline TwistedChain to_twisted(const Chain& c, std::shared_ptr<const NormedModule> module) {
  if (module->dimension() != 1) fail(ErrorCode::invalid_module, "scalar chains need a 1-dimensional module");
  TwistedChain out(std::move(module), c.degree());
  for (const auto& [t, a] : c.terms()) out.add_canonical(t, ModuleVector{a});
  return out;
}

/// Inverse of to_twisted for a 1-dimensional module.
inline Chain to_scalar(const TwistedChain& c) {
  if (c.module().dimension() != 1) fail(ErrorCode::invalid_module, "not a 1-dimensional module");
  Chain out(c.group(), c.degree());
  for (const auto& [t, v] : c.terms()) out.add_canonical(t, v[0]);
  return out;
}

inline TwistedChain boundary(const TwistedChain& c) {
  if (c.degree() < 1) fail(ErrorCode::degree_mismatch, "boundary of a degree-0 chain");
  TwistedChain out(c.module_ptr(), c.degree() - 1);
  std::vector<GroupElement> face;
  for (const auto& [t, v] : c.terms()) {
    const std::vector<GroupElement> entries = t.entries();
    ModuleVector neg = v;
    for (auto& x : neg) x = -x;
    for (std::size_t j = 0; j < entries.size(); ++j) {
      face.clear();
      for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i != j) face.push_back(entries[i]);
      }
      out.add(face, j % 2 == 0 ? v : neg);
    }
  }
  return out;
}

inline bool is_cycle(const TwistedChain& c) { return c.degree() == 0 || boundary(c).is_zero(); }

/// sum over tuples of the module norm of the coefficient.
inline Rational l1_norm(const TwistedChain& c) {
  Rational s = 0;
  for (const auto& [t, v] : c.terms()) s += c.module().norm(v);
  return s;
}

/// Averaging with coefficients: a (x) (g_0 eta_0, ..., g_n eta_n), the
/// coefficient transformed only by canonicalization.
inline TwistedChain twisted_average(const AmenableExtension& ext, const TwistedChain& c, const FolnerSet& F) {
  if (!(c.group() == ext.group())) fail(ErrorCode::descriptor_mismatch, "twisted chain averaged in a different group");
  detail::validate_averaging_set(ext, F);
  Rational weight(1);
  for (int i = 0; i <= c.degree(); ++i) weight /= static_cast<long>(F.size());
  const NormedModule& A = c.module();
  std::unordered_map<Tuple, ModuleVector, TupleHash> acc;
  std::map<std::int64_t, SignedPermutation> powers;
  for (const auto& [t, v] : c.terms()) {
    ModuleVector scaled = v;
    for (auto& x : scaled) x *= weight;
    detail::visit_translates(c.group(), t.entries(), F.elements(), [&](const Tuple& out, const GroupElement& shift) {
      const std::int64_t p = A.phase(shift);
      auto it = powers.find(p);
      if (it == powers.end()) it = powers.emplace(p, A.generator().power(static_cast<std::uint64_t>(p))).first;
      const ModuleVector moved = it->second.apply(scaled);
      auto& slot = acc[out];
      if (slot.empty()) slot.assign(moved.size(), Rational(0));
      for (std::size_t i = 0; i < moved.size(); ++i) slot[i] += moved[i];
    });
  }
  std::vector<std::pair<Tuple, ModuleVector>> sorted(acc.begin(), acc.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  TwistedChain out(c.module_ptr(), c.degree());
  for (const auto& [t, v] : sorted) out.add_canonical(t, v);
  return out;
}

inline TwistedChain average(const AmenableExtension& ext, const TwistedChain& c, const FolnerSet& F) {
  return twisted_average(ext, c, F);
}

inline Rational averaged_norm(const AmenableExtension& ext, const TwistedChain& c, const FolnerSet& F) {
  return l1_norm(twisted_average(ext, c, F));
}

/// Entrywise projection with coefficients passed to A_N.
inline TwistedChain twisted_pushforward(const AmenableExtension& ext, const TwistedChain& c) {
  if (!(c.group() == ext.group())) fail(ErrorCode::descriptor_mismatch, "twisted chain pushed along another extension");
  auto target = std::make_shared<const NormedModule>(c.module().coinvariants(ext));
  TwistedChain out(target, c.degree());
  std::vector<GroupElement> image;
  for (const auto& [t, v] : c.terms()) {
    image.clear();
    for (std::size_t j = 0; j < t.arity(); ++j) image.push_back(ext.project(t.entry(j)));
    out.add(image, v);
  }
  return out;
}

inline TwistedChain pushforward(const AmenableExtension& ext, const TwistedChain& c) {
  return twisted_pushforward(ext, c);
}

/// Section lift of a chain over Q with coefficients in A_N; coefficients are
/// lifted as their canonical representatives.
inline TwistedChain lift(const AmenableExtension& ext, const TwistedChain& z,
                         std::shared_ptr<const NormedModule> module) {
  if (!(z.group() == ext.quotient())) fail(ErrorCode::descriptor_mismatch, "lifting a chain not over Q");
  TwistedChain out(std::move(module), z.degree());
  std::vector<GroupElement> image;
  for (const auto& [t, v] : z.terms()) {
    image.clear();
    for (std::size_t j = 0; j < t.arity(); ++j) image.push_back(ext.section(t.entry(j)));
    out.add(image, v);
  }
  return out;
}

inline TwistedChain right_translate(const TwistedChain& c, std::span<const GroupElement> sigma) {
  TwistedChain out(c.module_ptr(), c.degree());
  std::vector<GroupElement> moved;
  for (const auto& [t, v] : c.terms()) {
    moved.clear();
    for (std::size_t j = 0; j < t.arity(); ++j) moved.push_back(c.group().compose(t.entry(j), sigma[j]));
    out.add(moved, v);
  }
  return out;
}

struct TwistedSplit {
  TwistedChain head;  // c0: section lift of minimal representatives
  TwistedChain tail;  // c1 = c - c0, null push-forward
  Rational epsilon_requested;
  Rational epsilon_achieved;  // |c0|_1 - |c-bar|_1
};

/// c = c0 + c1 with |c0|_1 <= |c-bar|_1 + epsilon. The quotient seminorm is
/// attained by canonical representatives, so the achieved epsilon is 0.
inline TwistedSplit twisted_epsilon_split(const AmenableExtension& ext, const TwistedChain& c,
                                          const Rational& epsilon = Rational(1, 1000)) {
  const TwistedChain bar = twisted_pushforward(ext, c);
  TwistedChain c0 = lift(ext, bar, c.module_ptr());
  TwistedChain c1 = c - c0;
  TwistedSplit out{std::move(c0), std::move(c1), epsilon, 0};
  out.epsilon_achieved = l1_norm(out.head) - l1_norm(bar);
  return out;
}

struct TwistedSigmaTerm {
  TwistedChain chain;
  std::vector<GroupElement> sigma;
};

struct TwistedSigmaDecomposition {
  int degree = 0;
  std::vector<TwistedSigmaTerm> terms;
  std::vector<GroupElement> S;
  Rational K;
  Rational max_term_norm;
  Rational K_sum;
  Rational total_term_norm;
};

/// sigma-decomposition with coefficients. Per push-forward orbit with base
/// t1, every other tuple is t1 . sigma as in the scalar case; the leftover
/// coefficient w on t1 lies in span{e_l - P^g e_l} and each such relation is
/// e_l (x) t1 - e_l (x) t1 . sigma with sigma_j = t1_j^{-1} nu^{-1} t1_j.
inline TwistedSigmaDecomposition twisted_sigma_decompose(const AmenableExtension& ext, const TwistedChain& c) {
  if (!twisted_pushforward(ext, c).is_zero()) {
    fail(ErrorCode::nonzero_pushforward, "twisted chain has non-zero push-forward");
  }
  const GroupDescriptor& g = ext.group();
  const NormedModule& A = c.module();
  std::map<Tuple, std::vector<std::pair<Tuple, ModuleVector>>> orbits;
  std::vector<GroupElement> image;
  for (const auto& [t, v] : c.terms()) {
    image.clear();
    for (std::size_t j = 0; j < t.arity(); ++j) image.push_back(ext.project(t.entry(j)));
    orbits[canonicalize(ext.quotient(), image)].emplace_back(t, v);
  }
  TwistedSigmaDecomposition out;
  out.degree = c.degree();
  std::set<GroupElement> S;
  const std::int64_t gen = A.normal_image_generator(ext);
  const SignedPermutation step = A.generator().power(static_cast<std::uint64_t>(gen));
  std::optional<GroupElement> nu;
  auto single = [&](const Tuple& t, const ModuleVector& v) {
    TwistedChain ch(c.module_ptr(), c.degree());
    ch.add_canonical(t, v);
    return ch;
  };
  for (const auto& [qt, members] : orbits) {
    const Tuple& base = members.front().first;
    const std::vector<GroupElement> base_entries = base.entries();
    ModuleVector w = members.front().second;
    for (std::size_t i = 1; i < members.size(); ++i) {
      const auto& [t, v] = members[i];
      ModuleVector neg = v;
      for (auto& x : neg) x = -x;
      TwistedSigmaTerm term{single(base, neg), {}};
      for (std::size_t j = 0; j < t.arity(); ++j) {
        GroupElement s = g.compose_unchecked(g.inverse_unchecked(base_entries[j]), t.entry(j));
        S.insert(s);
        term.sigma.push_back(std::move(s));
      }
      out.max_term_norm = std::max(out.max_term_norm, l1_norm(v));
      out.total_term_norm += l1_norm(v);
      out.terms.push_back(std::move(term));
      for (std::size_t k = 0; k < w.size(); ++k) w[k] += v[k];
    }
    if (efcyc::is_zero(w)) continue;
    // w = sum_l lambda_l (e_l - P^g e_l)
    lp::SparseMatrix W;
    W.rows = A.dimension();
    for (std::size_t l = 0; l < A.dimension(); ++l) {
      std::map<std::size_t, Rational> col;
      col[l] += 1;
      col[step.target(l)] -= step.sign(l);
      std::vector<std::pair<std::size_t, Rational>> entries;
      for (auto& [i, x] : col) {
        if (x != 0) entries.emplace_back(i, x);
      }
      W.columns.push_back(std::move(entries));
    }
    const auto lambda = lp::minimize_l1_solution(W, w);
    if (!lambda) fail(ErrorCode::nonzero_pushforward, "orbit " + to_string(qt) + " has a non-trivial coinvariant class");
    if (!nu) nu = A.normal_element_with_phase(ext);
    const GroupElement nu_inv = g.inverse_unchecked(*nu);
    std::vector<GroupElement> sigma;
    for (const GroupElement& b : base_entries) {
      GroupElement s = g.compose_unchecked(g.compose_unchecked(g.inverse_unchecked(b), nu_inv), b);
      S.insert(s);
      sigma.push_back(std::move(s));
    }
    for (std::size_t l = 0; l < A.dimension(); ++l) {
      if (lambda->x[l] == 0) continue;
      ModuleVector e(A.dimension(), Rational(0));
      e[l] = lambda->x[l];
      out.max_term_norm = std::max(out.max_term_norm, abs_value(lambda->x[l]));
      out.total_term_norm += abs_value(lambda->x[l]);
      out.terms.push_back({single(base, e), sigma});
    }
  }
  out.S.assign(S.begin(), S.end());
  out.K = 2 * (c.degree() + 1) * out.max_term_norm;
  out.K_sum = 2 * (c.degree() + 1) * out.total_term_norm;
  return out;
}

inline TwistedChain reconstruct(const TwistedSigmaDecomposition& d, std::shared_ptr<const NormedModule> module) {
  TwistedChain out(std::move(module), d.degree);
  for (const auto& t : d.terms) {
    out += t.chain;
    out -= right_translate(t.chain, t.sigma);
  }
  return out;
}

/// Twisted push-forward estimate: |psi^F(c)|_1 <= |c-bar|_1 + epsilon + K ratio.
inline EstimateCertificate twisted_estimate(const AmenableExtension& ext, const TwistedChain& c, const FolnerSet& F,
                                            const Rational& epsilon = Rational(1, 1000)) {
  const TwistedSplit split = twisted_epsilon_split(ext, c, epsilon);
  const TwistedSigmaDecomposition d = twisted_sigma_decompose(ext, split.tail);
  EstimateCertificate cert;
  cert.epsilon = epsilon;
  cert.S = d.S;
  cert.K = d.K;
  cert.F_size = F.size();
  cert.boundary_size = s_boundary(ext.group(), F.elements(), d.S).size();
  cert.ratio = Rational(static_cast<long>(cert.boundary_size), static_cast<long>(cert.F_size));
  cert.ratio.canonicalize();
  cert.pushforward_norm = l1_norm(twisted_pushforward(ext, c));
  cert.lhs = averaged_norm(ext, c, F);
  cert.rhs = cert.pushforward_norm + epsilon + d.K * cert.ratio;
  cert.holds = cert.lhs <= cert.rhs;
  cert.K_sum = d.K_sum;
  cert.rhs_sum = cert.pushforward_norm + epsilon + d.K_sum * cert.ratio;
  cert.holds_sum = cert.lhs <= cert.rhs_sum;
  cert.coarse_rhs = cert.rhs;
  cert.coarse_holds = cert.holds;
  return cert;
}

}  // namespace efcyc
