#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "efcyc/chain.hpp"
#include "efcyc/folner.hpp"

namespace efcyc {

struct SigmaTerm {
  Chain chain;                       // c(j)
  std::vector<GroupElement> sigma;   // sigma(j) in N^{n+1}
};

/// c = sum_j (c(j) - c(j) . sigma(j)), with S the entries of all sigma(j) and
/// K = 2 (n+1) max_j |c(j)|_1 (zero when there are no terms). The term-wise
/// argument only bounds sums, so K_sum = 2 (n+1) sum_j |c(j)|_1 is kept too.
struct SigmaDecomposition {
  int degree = 0;
  std::vector<SigmaTerm> terms;
  std::vector<GroupElement> S;
  Rational K;
  Rational max_term_norm;
  Rational K_sum;
  Rational total_term_norm;
};

/// c = c0 + c1 with c0 the section lift of the push-forward (so
/// |c0|_1 == |pushforward(c)|_1) and pushforward(c1) == 0.
inline std::pair<Chain, Chain> epsilon_split(const AmenableExtension& ext, const Chain& c) {
  Chain c0 = lift(ext, pushforward(ext, c));
  Chain c1 = c - c0;
  return {std::move(c0), std::move(c1)};
}

/// Groups the tuples of a null-pushforward chain by push-forward image, uses
/// the lexicographically least tuple t1 of each group as base and writes
/// every other tuple as t1 . sigma with sigma_j = t1_j^{-1} t_j.
inline SigmaDecomposition sigma_decompose(const AmenableExtension& ext, const Chain& c) {
  if (!(c.group() == ext.group())) {
    fail(ErrorCode::descriptor_mismatch, "chain over " + c.group().to_string() + " decomposed in " + ext.to_string());
  }
  const GroupDescriptor& g = ext.group();
  std::map<Tuple, std::vector<std::pair<Tuple, Rational>>> orbits;
  std::vector<GroupElement> image;
  for (const auto& [t, a] : c.terms()) {
    image.clear();
    for (std::size_t j = 0; j < t.arity(); ++j) image.push_back(ext.project(t.entry(j)));
    orbits[canonicalize(ext.quotient(), image)].emplace_back(t, a);
  }
  SigmaDecomposition out;
  out.degree = c.degree();
  std::set<GroupElement> S;
  for (const auto& [qt, members] : orbits) {
    Rational total = 0;
    for (const auto& m : members) total += m.second;
    if (total != 0) {
      fail(ErrorCode::nonzero_pushforward, "push-forward coefficient " + format_rational(total) + " on orbit " +
                                               to_string(qt));
    }
    // members are sorted, so the first one is the lexicographic base
    const Tuple& base = members.front().first;
    const std::vector<GroupElement> base_entries = base.entries();
    for (std::size_t i = 1; i < members.size(); ++i) {
      const auto& [t, a] = members[i];
      SigmaTerm term{Chain(g, c.degree()), {}};
      term.chain.add_canonical(base, -a);
      for (std::size_t j = 0; j < t.arity(); ++j) {
        GroupElement s = g.compose_unchecked(g.inverse_unchecked(base_entries[j]), t.entry(j));
        S.insert(s);
        term.sigma.push_back(std::move(s));
      }
      out.max_term_norm = std::max(out.max_term_norm, abs_value(a));
      out.total_term_norm += abs_value(a);
      out.terms.push_back(std::move(term));
    }
  }
  out.S.assign(S.begin(), S.end());
  out.K = 2 * (c.degree() + 1) * out.max_term_norm;
  out.K_sum = 2 * (c.degree() + 1) * out.total_term_norm;
  return out;
}

/// sum_j (c(j) - c(j) . sigma(j)).
inline Chain reconstruct(const GroupDescriptor& group, const SigmaDecomposition& d) {
  Chain out(group, d.degree);
  for (const SigmaTerm& t : d.terms) {
    out += t.chain;
    out -= right_translate(t.chain, t.sigma);
  }
  return out;
}

struct EstimateCertificate {
  Rational epsilon;
  std::vector<GroupElement> S;
  Rational K;
  std::size_t F_size = 0;
  std::size_t boundary_size = 0;
  Rational ratio;             // |boundary_S F| / |F|
  Rational pushforward_norm;  // |c-bar|_1
  Rational lhs;               // |psi^F(c)|_1
  Rational rhs;               // |c-bar|_1 + epsilon + K * ratio
  bool holds = false;
  Rational K_sum;    // 2(n+1) sum_j |c(j)|_1
  Rational rhs_sum;  // |c-bar|_1 + epsilon + K_sum * ratio
  bool holds_sum = false;
  // rhs without epsilon, for exactly null-homologous c1
  Rational coarse_rhs;
  bool coarse_holds = false;
};

/// Certifies |psi^F(c)|_1 <= |c-bar|_1 + epsilon + K |boundary_S F| / |F|,
/// where S and K come from the decomposition of the null-pushforward part of c.
inline EstimateCertificate estimate_bound(const AmenableExtension& ext, const Chain& c, const SigmaDecomposition& d,
                                          const FolnerSet& F, const Rational& epsilon = 0) {
  detail::validate_average_input(ext, c, F);
  EstimateCertificate cert;
  cert.epsilon = epsilon;
  cert.S = d.S;
  cert.K = d.K;
  cert.F_size = F.size();
  cert.boundary_size = s_boundary(ext.group(), F.elements(), d.S).size();
  cert.ratio = Rational(static_cast<long>(cert.boundary_size), static_cast<long>(cert.F_size));
  cert.ratio.canonicalize();
  cert.pushforward_norm = l1_norm(pushforward(ext, c));
  cert.lhs = averaged_norm(ext, c, F);
  cert.rhs = cert.pushforward_norm + epsilon + d.K * cert.ratio;
  cert.holds = cert.lhs <= cert.rhs;
  cert.K_sum = d.K_sum;
  cert.rhs_sum = cert.pushforward_norm + epsilon + d.K_sum * cert.ratio;
  cert.holds_sum = cert.lhs <= cert.rhs_sum;
  cert.coarse_rhs = cert.pushforward_norm + 2 * (d.degree + 1) * d.max_term_norm * cert.ratio;
  cert.coarse_holds = cert.lhs <= cert.coarse_rhs;
  return cert;
}

/// Split, decompose and certify in one step (epsilon = 0 for trivial
/// coefficients: the section lift attains the quotient norm).
inline EstimateCertificate estimate(const AmenableExtension& ext, const Chain& c, const FolnerSet& F) {
  auto [c0, c1] = epsilon_split(ext, c);
  const SigmaDecomposition d = sigma_decompose(ext, c1);
  return estimate_bound(ext, c, d, F, 0);
}

}  // namespace efcyc
