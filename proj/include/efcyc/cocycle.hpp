#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "efcyc/chain.hpp"

namespace efcyc {

/// A real-valued group cocycle in inhomogeneous form, f(g_1, ..., g_n).
struct Cocycle {
  int degree = 0;
  std::string name;
  std::function<Rational(std::span<const GroupElement>)> evaluate;
};

/// The homomorphism g -> sum_i weights[i] * l_i(g), where l_i runs over the
/// linear coordinates of the group (free abelian coordinates and the (a, b)
/// coordinates of Heisenberg factors).
inline Cocycle homomorphism_cocycle(const GroupDescriptor& group, std::vector<Rational> weights) {
  if (weights.size() != group.linear_rank()) {
    fail(ErrorCode::malformed_input, "homomorphism needs " + std::to_string(group.linear_rank()) + " weights");
  }
  return Cocycle{1, "hom", [group, weights = std::move(weights)](std::span<const GroupElement> args) {
                   const auto l = group.linear_coordinates(args[0]);
                   Rational v = 0;
                   for (std::size_t i = 0; i < l.size(); ++i) v += weights[i] * l[i];
                   return v;
                 }};
}

/// Bilinear 2-cocycle (g, h) -> l(g)^T M l(h) on the linear coordinates.
/// On Z^2 with M = [[0,1],[0,0]] this is ((a,b),(c,d)) -> a*d.
inline Cocycle bilinear_cocycle(const GroupDescriptor& group, std::vector<std::vector<Rational>> matrix) {
  const std::size_t r = group.linear_rank();
  if (matrix.size() != r) fail(ErrorCode::malformed_input, "bilinear form has the wrong size");
  for (const auto& row : matrix) {
    if (row.size() != r) fail(ErrorCode::malformed_input, "bilinear form has the wrong size");
  }
  return Cocycle{2, "bilinear", [group, matrix = std::move(matrix)](std::span<const GroupElement> args) {
                   const auto x = group.linear_coordinates(args[0]);
                   const auto y = group.linear_coordinates(args[1]);
                   Rational v = 0;
                   for (std::size_t i = 0; i < x.size(); ++i) {
                     if (x[i] == 0) continue;
                     for (std::size_t j = 0; j < y.size(); ++j) v += matrix[i][j] * x[i] * y[j];
                   }
                   return v;
                 }};
}

/// omega((a,b),(c,d)) = a*d on Z^2.
inline Cocycle torus_cocycle() {
  const GroupDescriptor z2 = GroupDescriptor::free_abelian(2);
  return bilinear_cocycle(z2, {{0, 1}, {0, 0}});
}

/// Catalogued cocycles of a group in a given degree: the coordinate
/// homomorphisms in degree 1 and the elementary bilinear forms e_i^T e_j in
/// degree 2.
inline std::vector<Cocycle> catalogue_cocycles(const GroupDescriptor& group, int degree) {
  std::vector<Cocycle> out;
  const std::size_t r = group.linear_rank();
  if (degree == 1) {
    for (std::size_t i = 0; i < r; ++i) {
      std::vector<Rational> w(r, Rational(0));
      w[i] = 1;
      out.push_back(homomorphism_cocycle(group, w));
    }
  } else if (degree == 2) {
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        std::vector<std::vector<Rational>> m(r, std::vector<Rational>(r, Rational(0)));
        m[i][j] = 1;
        out.push_back(bilinear_cocycle(group, m));
      }
    }
  }
  return out;
}

/// Kronecker pairing; the inhomogeneous coordinates of (e, g1, g2, ...) are
/// (g1, g1^-1 g2, ...).
inline Rational pair(const Cocycle& f, const Chain& c) {
  if (f.degree != c.degree()) {
    fail(ErrorCode::degree_mismatch, "pairing a degree-" + std::to_string(f.degree) + " cocycle with a degree-" +
                                         std::to_string(c.degree()) + " chain");
  }
  const GroupDescriptor& g = c.group();
  Rational total = 0;
  std::vector<GroupElement> args;
  for (const auto& [t, a] : c.terms()) {
    args.clear();
    for (std::size_t j = 1; j < t.arity(); ++j) {
      args.push_back(g.compose_unchecked(g.inverse_unchecked(t.entry(j - 1)), t.entry(j)));
    }
    total += a * f.evaluate(args);
  }
  return total;
}

}  // namespace efcyc
