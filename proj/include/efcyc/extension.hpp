#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "efcyc/errors.hpp"
#include "efcyc/group.hpp"

namespace efcyc {

/// A group Gamma with a normal subgroup N and quotient Q = Gamma/N.
///
/// N is a product of per-factor normal subgroups: for each coordinate of a
/// free abelian factor it is all of Z, trivial, or mZ; a cyclic factor is
/// either contained in N or not; a Heisenberg factor contributes all of it,
/// its center, or nothing. The section inserts zeros into the coordinates
/// that N occupies (residues in [0, m) for mZ), so section(identity) is the
/// identity and section lifts are idempotent.
class AmenableExtension {
 public:
  enum class Mode { Full, Trivial, Multiple, Center };

  struct Slot {
    GroupDescriptor::Kind kind;  // FreeAbelian (one coordinate), FiniteCyclic or Heisenberg3
    Mode mode;
    std::int64_t parameter;      // modulus of a cyclic factor, or m for mZ
    std::size_t gamma_offset = 0;
    std::size_t normal_offset = 0;
    std::size_t quotient_offset = 0;
  };

  AmenableExtension() : AmenableExtension(GroupDescriptor::trivial(), {}) {}

  AmenableExtension(GroupDescriptor gamma, std::vector<Slot> slots)
      : gamma_(std::move(gamma)), slots_(std::move(slots)) {
    build();
  }

  /// Normal-subgroup syntax mirrors the group syntax, one token per
  /// coordinate of a free abelian factor: "Z" (in N), "1" (not in N), "mZ",
  /// "Z^j"/"1^j" for runs; "Z/m" or "1" for a cyclic factor; "Heis3",
  /// "center" or "1" for a Heisenberg factor. A bare "1" means N trivial.
  static AmenableExtension parse(std::string_view group_spec, std::string_view normal_spec) {
    GroupDescriptor gamma = parse_group(group_spec);
    std::vector<std::string> tokens;
    for (const std::string& raw : detail::split(normal_spec, 'x')) {
      const std::string tok = detail::strip(raw);
      if ((tok.rfind("Z^", 0) == 0 || tok.rfind("1^", 0) == 0) && tok.size() > 2) {
        const std::int64_t reps = detail::parse_positive(tok.substr(2), normal_spec);
        for (std::int64_t i = 0; i < reps; ++i) tokens.push_back(tok.substr(0, 1));
      } else {
        tokens.push_back(tok);
      }
    }
    std::size_t expected = 0;
    for (const auto& a : gamma.atoms()) {
      expected += a.kind == GroupDescriptor::Kind::FreeAbelian ? static_cast<std::size_t>(a.parameter) : 1;
    }
    if (tokens.size() == 1 && tokens[0] == "1") tokens.assign(expected, "1");
    if (tokens.size() != expected) {
      fail(ErrorCode::inconsistent_groups, "normal subgroup '" + std::string(normal_spec) + "' has " +
                                               std::to_string(tokens.size()) + " factors but " +
                                               std::string(group_spec) + " needs " +
                                               std::to_string(expected));
    }
    std::vector<Slot> slots;
    std::size_t t = 0;
    for (const auto& a : gamma.atoms()) {
      switch (a.kind) {
        case GroupDescriptor::Kind::FreeAbelian:
          for (std::int64_t i = 0; i < a.parameter; ++i) {
            const std::string& tok = tokens[t++];
            if (tok == "Z") {
              slots.push_back({a.kind, Mode::Full, 0});
            } else if (tok == "1") {
              slots.push_back({a.kind, Mode::Trivial, 0});
            } else if (tok.size() > 1 && tok.back() == 'Z') {
              const std::int64_t m = detail::parse_positive(tok.substr(0, tok.size() - 1), normal_spec);
              if (m < 1) fail(ErrorCode::malformed_input, "mZ needs m >= 1");
              slots.push_back({a.kind, m == 1 ? Mode::Full : Mode::Multiple, m});
            } else {
              fail(ErrorCode::inconsistent_groups, "'" + tok + "' is not a subgroup of Z");
            }
          }
          break;
        case GroupDescriptor::Kind::FiniteCyclic: {
          const std::string& tok = tokens[t++];
          if (tok == "1") {
            slots.push_back({a.kind, Mode::Trivial, a.parameter});
          } else if (tok == "Z/" + std::to_string(a.parameter)) {
            slots.push_back({a.kind, Mode::Full, a.parameter});
          } else {
            fail(ErrorCode::inconsistent_groups,
                 "'" + tok + "' is not a supported subgroup of Z/" + std::to_string(a.parameter));
          }
          break;
        }
        case GroupDescriptor::Kind::Heisenberg3: {
          const std::string& tok = tokens[t++];
          if (tok == "1") {
            slots.push_back({a.kind, Mode::Trivial, 0});
          } else if (tok == "Heis3") {
            slots.push_back({a.kind, Mode::Full, 0});
          } else if (tok == "center") {
            slots.push_back({a.kind, Mode::Center, 0});
          } else {
            fail(ErrorCode::inconsistent_groups, "'" + tok + "' is not a supported subgroup of Heis3");
          }
          break;
        }
        case GroupDescriptor::Kind::DirectProduct: break;
      }
    }
    return AmenableExtension(std::move(gamma), std::move(slots));
  }

  const GroupDescriptor& group() const { return gamma_; }
  const GroupDescriptor& normal() const { return normal_; }
  const GroupDescriptor& quotient() const { return quotient_; }
  const std::vector<Slot>& slots() const { return slots_; }

  bool normal_is_trivial() const { return normal_.dimension() == 0 || (normal_.is_finite() && normal_.order() == 1); }

  GroupElement project(const GroupElement& g) const {
    gamma_.require(g);
    GroupElement q = quotient_.identity();
    for (const Slot& s : slots_) {
      const std::size_t go = s.gamma_offset, qo = s.quotient_offset;
      switch (s.mode) {
        case Mode::Full: break;
        case Mode::Trivial: {
          const std::size_t width = s.kind == GroupDescriptor::Kind::Heisenberg3 ? 3 : 1;
          for (std::size_t i = 0; i < width; ++i) q[qo + i] = g[go + i];
          break;
        }
        case Mode::Multiple: {
          std::int64_t r = g[go] % s.parameter;
          q[qo] = r < 0 ? r + s.parameter : r;
          break;
        }
        case Mode::Center:
          q[qo] = g[go];
          q[qo + 1] = g[go + 1];
          break;
      }
    }
    return q;
  }

  GroupElement section(const GroupElement& q) const {
    quotient_.require(q);
    GroupElement g = gamma_.identity();
    for (const Slot& s : slots_) {
      const std::size_t go = s.gamma_offset, qo = s.quotient_offset;
      switch (s.mode) {
        case Mode::Full: break;
        case Mode::Trivial: {
          const std::size_t width = s.kind == GroupDescriptor::Kind::Heisenberg3 ? 3 : 1;
          for (std::size_t i = 0; i < width; ++i) g[go + i] = q[qo + i];
          break;
        }
        case Mode::Multiple: g[go] = q[qo]; break;
        case Mode::Center:
          g[go] = q[qo];
          g[go + 1] = q[qo + 1];
          break;
      }
    }
    return g;
  }

  GroupElement embed(const GroupElement& n) const {
    normal_.require(n);
    GroupElement g = gamma_.identity();
    for (const Slot& s : slots_) {
      const std::size_t go = s.gamma_offset, no = s.normal_offset;
      switch (s.mode) {
        case Mode::Full: {
          const std::size_t width = s.kind == GroupDescriptor::Kind::Heisenberg3 ? 3 : 1;
          for (std::size_t i = 0; i < width; ++i) g[go + i] = n[no + i];
          break;
        }
        case Mode::Trivial: break;
        case Mode::Multiple: g[go] = n[no] * s.parameter; break;
        case Mode::Center: g[go + 2] = n[no]; break;
      }
    }
    return g;
  }

  /// N is the kernel of the projection.
  bool in_normal(const GroupElement& g) const { return project(g) == quotient_.identity(); }

  /// Inverse of embed on its image.
  GroupElement restrict_to_normal(const GroupElement& g) const {
    if (!in_normal(g)) fail(ErrorCode::not_in_subgroup, efcyc::to_string(g) + " is not in N");
    GroupElement n = normal_.identity();
    for (const Slot& s : slots_) {
      const std::size_t go = s.gamma_offset, no = s.normal_offset;
      switch (s.mode) {
        case Mode::Full: {
          const std::size_t width = s.kind == GroupDescriptor::Kind::Heisenberg3 ? 3 : 1;
          for (std::size_t i = 0; i < width; ++i) n[no + i] = g[go + i];
          break;
        }
        case Mode::Trivial: break;
        case Mode::Multiple: n[no] = g[go] / s.parameter; break;
        case Mode::Center: n[no] = g[go + 2]; break;
      }
    }
    return n;
  }

  /// Images in Gamma of the standard generators of N.
  std::vector<GroupElement> normal_generators() const {
    std::vector<GroupElement> out;
    for (const GroupElement& n : normal_.generators()) out.push_back(embed(n));
    return out;
  }

  std::string to_string() const {
    return gamma_.to_string() + " > " + normal_.to_string() + " -> " + quotient_.to_string();
  }

 private:
  void build() {
    std::vector<GroupDescriptor> normal_pieces, quotient_pieces;
    std::size_t go = 0, no = 0, qo = 0;
    auto push = [](std::vector<GroupDescriptor>& pieces, GroupDescriptor d) {
      // adjacent free abelian pieces merge into Z^d so coordinates stay in order
      if (d.kind() == GroupDescriptor::Kind::FreeAbelian && !pieces.empty() &&
          pieces.back().kind() == GroupDescriptor::Kind::FreeAbelian) {
        pieces.back() = GroupDescriptor::free_abelian(pieces.back().parameter() + d.parameter());
      } else {
        pieces.push_back(std::move(d));
      }
    };
    for (Slot& s : slots_) {
      s.gamma_offset = go;
      s.normal_offset = no;
      s.quotient_offset = qo;
      switch (s.kind) {
        case GroupDescriptor::Kind::FreeAbelian:
          go += 1;
          if (s.mode == Mode::Full || s.mode == Mode::Multiple) {
            push(normal_pieces, GroupDescriptor::free_abelian(1));
            no += 1;
          }
          if (s.mode == Mode::Trivial) {
            push(quotient_pieces, GroupDescriptor::free_abelian(1));
            qo += 1;
          } else if (s.mode == Mode::Multiple) {
            push(quotient_pieces, GroupDescriptor::cyclic(s.parameter));
            qo += 1;
          } else if (s.mode == Mode::Center) {
            fail(ErrorCode::inconsistent_groups, "Z has no center mode");
          }
          break;
        case GroupDescriptor::Kind::FiniteCyclic:
          go += 1;
          if (s.mode == Mode::Full) {
            push(normal_pieces, GroupDescriptor::cyclic(s.parameter));
            no += 1;
          } else if (s.mode == Mode::Trivial) {
            push(quotient_pieces, GroupDescriptor::cyclic(s.parameter));
            qo += 1;
          } else {
            fail(ErrorCode::inconsistent_groups, "unsupported subgroup of a cyclic factor");
          }
          break;
        case GroupDescriptor::Kind::Heisenberg3:
          go += 3;
          if (s.mode == Mode::Full) {
            push(normal_pieces, GroupDescriptor::heisenberg());
            no += 3;
          } else if (s.mode == Mode::Center) {
            push(normal_pieces, GroupDescriptor::free_abelian(1));
            push(quotient_pieces, GroupDescriptor::free_abelian(2));
            no += 1;
            qo += 2;
          } else if (s.mode == Mode::Trivial) {
            push(quotient_pieces, GroupDescriptor::heisenberg());
            qo += 3;
          } else {
            fail(ErrorCode::inconsistent_groups, "unsupported subgroup of Heis3");
          }
          break;
        case GroupDescriptor::Kind::DirectProduct:
          fail(ErrorCode::inconsistent_groups, "slots must be atomic");
      }
    }
    if (go != gamma_.dimension()) {
      fail(ErrorCode::inconsistent_groups, "normal subgroup slots do not cover " + gamma_.to_string());
    }
    auto finish = [](std::vector<GroupDescriptor> pieces) {
      if (pieces.size() == 1) return pieces.front();
      return GroupDescriptor::product(std::move(pieces));
    };
    normal_ = finish(std::move(normal_pieces));
    quotient_ = finish(std::move(quotient_pieces));
  }

  GroupDescriptor gamma_;
  std::vector<Slot> slots_;
  GroupDescriptor normal_;
  GroupDescriptor quotient_;
};

}  // namespace efcyc
