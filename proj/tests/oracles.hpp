#pragma once

// Reference implementations kept independent of the library: group laws on
// plain vectors, chains as plain maps, direct enumeration of averages, word
// enumeration for balls, and vertex enumeration for small l1 problems.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "efcyc/efcyc.hpp"

namespace oracle {

using efcyc::Rational;
using Vec = std::vector<std::int64_t>;
using PlainTuple = std::vector<Vec>;
using PlainChain = std::map<PlainTuple, Rational>;

/// A group law on plain coordinate vectors.
struct Law {
  std::function<Vec(const Vec&, const Vec&)> mul;
  std::function<Vec(const Vec&)> inv;
  Vec id;
};

inline Law free_abelian_law(std::size_t d) {
  return {[](const Vec& a, const Vec& b) {
            Vec c(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
            return c;
          },
          [](const Vec& a) {
            Vec c(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) c[i] = -a[i];
            return c;
          },
          Vec(d, 0)};
}

// (a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')
inline Law heisenberg_law() {
  return {[](const Vec& x, const Vec& y) { return Vec{x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1]}; },
          [](const Vec& x) { return Vec{-x[0], -x[1], x[0] * x[1] - x[2]}; },
          Vec{0, 0, 0}};
}

// Z/2 x Z
inline Law z2_times_z_law() {
  return {[](const Vec& x, const Vec& y) { return Vec{(x[0] + y[0]) % 2, x[1] + y[1]}; },
          [](const Vec& x) { return Vec{x[0], -x[1]}; },
          Vec{0, 0}};
}

inline Vec to_vec(const efcyc::GroupElement& g) { return Vec(g.coords().begin(), g.coords().end()); }
inline efcyc::GroupElement to_element(const Vec& v) { return efcyc::GroupElement(std::span<const std::int64_t>(v)); }

inline PlainTuple canon(const Law& law, const PlainTuple& t) {
  const Vec shift = law.inv(t.front());
  PlainTuple out;
  for (const Vec& x : t) out.push_back(law.mul(shift, x));
  return out;
}

inline void add(PlainChain& c, const PlainTuple& t, const Rational& a) {
  if (a == 0) return;
  Rational& slot = c[t];
  slot += a;
  if (slot == 0) c.erase(t);
}

inline PlainChain to_plain(const efcyc::Chain& c) {
  PlainChain out;
  for (const auto& [t, a] : c.terms()) {
    PlainTuple pt;
    for (std::size_t j = 0; j < t.arity(); ++j) pt.push_back(to_vec(t.entry(j)));
    out[pt] = a;
  }
  return out;
}

/// |F|^{-(n+1)} sum over eta in F^{n+1} of the right translates, by
/// nested enumeration.
inline PlainChain average(const Law& law, const PlainChain& c, const std::vector<Vec>& F) {
  PlainChain out;
  for (const auto& [t, a] : c) {
    const std::size_t arity = t.size();
    Rational w = a;
    for (std::size_t i = 0; i < arity; ++i) w /= static_cast<long>(F.size());
    std::vector<std::size_t> idx(arity, 0);
    while (true) {
      PlainTuple moved;
      for (std::size_t j = 0; j < arity; ++j) moved.push_back(law.mul(t[j], F[idx[j]]));
      add(out, canon(law, moved), w);
      std::size_t j = 0;
      while (j < arity && ++idx[j] == F.size()) idx[j++] = 0;
      if (j == arity) break;
    }
  }
  return out;
}

inline PlainChain boundary(const Law& law, const PlainChain& c) {
  PlainChain out;
  for (const auto& [t, a] : c) {
    for (std::size_t j = 0; j < t.size(); ++j) {
      PlainTuple face;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i != j) face.push_back(t[i]);
      }
      add(out, canon(law, face), j % 2 == 0 ? a : -a);
    }
  }
  return out;
}

inline Rational l1(const PlainChain& c) {
  Rational s = 0;
  for (const auto& [t, a] : c) s += abs(a);
  return s;
}

/// Every word of length <= radius over the generators and their inverses.
inline std::set<Vec> ball_by_words(const Law& law, const std::vector<Vec>& gens, int radius) {
  std::vector<Vec> letters;
  for (const Vec& g : gens) {
    letters.push_back(g);
    letters.push_back(law.inv(g));
  }
  std::set<Vec> out;
  std::function<void(const Vec&, int)> walk = [&](const Vec& x, int left) {
    out.insert(x);
    if (left == 0) return;
    for (const Vec& l : letters) walk(law.mul(x, l), left - 1);
  };
  walk(law.id, radius);
  return out;
}

using Matrix = std::vector<std::vector<Rational>>;  // row-major

/// Solution of the square system M x = b, or nullopt if M is singular.
inline std::optional<std::vector<Rational>> solve_square(Matrix M, std::vector<Rational> b) {
  const std::size_t n = M.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && M[piv][col] == 0) ++piv;
    if (piv == n) return std::nullopt;
    std::swap(M[piv], M[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || M[r][col] == 0) continue;
      const Rational f = M[r][col] / M[col][col];
      for (std::size_t k = col; k < n; ++k) M[r][k] -= f * M[col][k];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= M[i][i];
  return b;
}

inline std::size_t rank(Matrix M) {
  std::size_t r = 0;
  const std::size_t cols = M.empty() ? 0 : M[0].size();
  for (std::size_t col = 0; col < cols && r < M.size(); ++col) {
    std::size_t piv = r;
    while (piv < M.size() && M[piv][col] == 0) ++piv;
    if (piv == M.size()) continue;
    std::swap(M[piv], M[r]);
    for (std::size_t i = r + 1; i < M.size(); ++i) {
      const Rational f = M[i][col] / M[r][col];
      for (std::size_t k = col; k < cols; ++k) M[i][k] -= f * M[r][k];
    }
    ++r;
  }
  return r;
}

inline Matrix dense(const efcyc::lp::SparseMatrix& B) {
  Matrix M(B.rows, std::vector<Rational>(B.cols(), Rational(0)));
  for (std::size_t j = 0; j < B.cols(); ++j) {
    for (const auto& [i, v] : B.columns[j]) M[i][j] += v;
  }
  return M;
}

/// Columns forming a basis of the column space (greedy, left to right).
inline std::vector<std::size_t> independent_columns(const Matrix& M) {
  std::vector<std::size_t> keep;
  const std::size_t cols = M.empty() ? 0 : M[0].size();
  for (std::size_t j = 0; j < cols; ++j) {
    Matrix sub(M.size());
    for (std::size_t i = 0; i < M.size(); ++i) {
      for (std::size_t k : keep) sub[i].push_back(M[i][k]);
      sub[i].push_back(M[i][j]);
    }
    if (rank(sub) == keep.size() + 1) keep.push_back(j);
  }
  return keep;
}

template <class Visit>
void for_each_subset(std::size_t n, std::size_t k, Visit visit) {
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  if (k > n) return;
  while (true) {
    visit(idx);
    std::size_t i = k;
    while (i-- > 0) {
      if (idx[i] != i + n - k) break;
    }
    if (i == static_cast<std::size_t>(-1)) return;
    ++idx[i];
    for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

/// min_x |c + B x|_1 by enumerating vertices: after restricting to a basis
/// of the column space, an optimum makes at least rank-many residuals zero.
inline Rational l1_residual_by_vertices(const efcyc::lp::SparseMatrix& B, const std::vector<Rational>& c) {
  const Matrix M = dense(B);
  const std::vector<std::size_t> cols = independent_columns(M);
  const std::size_t k = cols.size();
  Rational best = 0;
  for (const Rational& x : c) best += abs(x);
  for_each_subset(M.size(), k, [&](const std::vector<std::size_t>& rows) {
    Matrix sq(k, std::vector<Rational>(k));
    std::vector<Rational> rhs(k);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) sq[a][b] = M[rows[a]][cols[b]];
      rhs[a] = -c[rows[a]];
    }
    const auto x = solve_square(sq, rhs);
    if (!x) return;
    Rational value = 0;
    for (std::size_t i = 0; i < M.size(); ++i) {
      Rational r = c[i];
      for (std::size_t b = 0; b < k; ++b) r += M[i][cols[b]] * (*x)[b];
      value += abs(r);
    }
    best = std::min(best, value);
  });
  return best;
}

/// min |x|_1 subject to B x = z over basic solutions (independent column
/// subsets), or nullopt when infeasible. At most ~12 columns.
inline std::optional<Rational> l1_solution_by_vertices(const efcyc::lp::SparseMatrix& B, const std::vector<Rational>& z) {
  const Matrix M = dense(B);
  const std::size_t n = B.cols();
  std::optional<Rational> best;
  for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask & (1U << j)) cols.push_back(j);
    }
    Matrix sub(M.size());
    for (std::size_t i = 0; i < M.size(); ++i) {
      for (std::size_t j : cols) sub[i].push_back(M[i][j]);
    }
    if (rank(sub) != cols.size()) continue;
    // pick cols.size() independent rows, solve, then verify all rows
    Matrix t(cols.size(), std::vector<Rational>(M.size()));
    for (std::size_t a = 0; a < cols.size(); ++a) {
      for (std::size_t i = 0; i < M.size(); ++i) t[a][i] = sub[i][a];
    }
    const std::vector<std::size_t> rows = independent_columns(t);
    Matrix sq(cols.size(), std::vector<Rational>(cols.size()));
    std::vector<Rational> rhs(cols.size());
    for (std::size_t a = 0; a < rows.size(); ++a) {
      for (std::size_t b = 0; b < cols.size(); ++b) sq[a][b] = sub[rows[a]][b];
      rhs[a] = z[rows[a]];
    }
    std::vector<Rational> x;
    if (!cols.empty()) {
      auto s = solve_square(sq, rhs);
      if (!s) continue;
      x = *s;
    }
    bool ok = true;
    for (std::size_t i = 0; i < M.size() && ok; ++i) {
      Rational r = 0;
      for (std::size_t b = 0; b < cols.size(); ++b) r += sub[i][b] * x[b];
      ok = r == z[i];
    }
    if (!ok) continue;
    Rational value = 0;
    for (const Rational& v : x) value += abs(v);
    if (!best || value < *best) best = value;
  }
  return best;
}

/// Random canonical element of `group` with free coordinates in [-r, r].
inline efcyc::GroupElement random_element(const efcyc::GroupDescriptor& group, std::mt19937_64& rng, int r = 2) {
  std::uniform_int_distribution<std::int64_t> d(-r, r);
  efcyc::GroupElement g = group.identity();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = d(rng);
  return group.reduce(g);
}

inline Rational random_rational(std::mt19937_64& rng, int span = 5) {
  std::uniform_int_distribution<long> num(-span, span), den(1, 4);
  Rational q(num(rng), den(rng));
  q.canonicalize();
  return q;
}

inline efcyc::Chain random_chain(const efcyc::GroupDescriptor& group, int degree, std::mt19937_64& rng,
                                 int terms = 3, int r = 2) {
  efcyc::Chain c(group, degree);
  std::vector<efcyc::GroupElement> entries(static_cast<std::size_t>(degree) + 1);
  for (int i = 0; i < terms; ++i) {
    for (auto& e : entries) e = random_element(group, rng, r);
    c.add(entries, random_rational(rng));
  }
  return c;
}

/// Random non-empty subset of N of size <= max_size, as elements of Gamma.
inline std::vector<efcyc::GroupElement> random_subset_of_normal(const efcyc::AmenableExtension& ext,
                                                                std::mt19937_64& rng, std::size_t max_size = 3) {
  std::uniform_int_distribution<std::size_t> size(1, max_size);
  std::set<efcyc::GroupElement> out;
  const std::size_t target = size(rng);
  for (int tries = 0; out.size() < target && tries < 50; ++tries) {
    out.insert(ext.embed(random_element(ext.normal(), rng)));
  }
  return {out.begin(), out.end()};
}

}  // namespace oracle
