#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "efcyc/rational.hpp"

namespace efcyc::lp {

/// Column-major sparse matrix with exact entries.
struct SparseMatrix {
  std::size_t rows = 0;
  std::vector<std::vector<std::pair<std::size_t, Rational>>> columns;

  std::size_t cols() const { return columns.size(); }
};

enum class Status { optimal, infeasible, unbounded };

struct Result {
  Status status = Status::infeasible;
  Rational value;
  std::vector<Rational> x;
  std::size_t pivots = 0;
};

/// Exact dense-tableau simplex for  min c^T x  s.t.  A x = b, x >= 0.
///
/// Two phases with artificial variables; Bland's rule (least index entering,
/// least basic index among tied ratios) rules out cycling.
class Simplex {
 public:
  Simplex(const SparseMatrix& A, std::vector<Rational> b, std::vector<Rational> c)
      : m_(A.rows), n_(A.cols()), cost_(std::move(c)) {
    tableau_.assign(m_ + 1, std::vector<Rational>(n_ + m_ + 1, Rational(0)));
    for (std::size_t j = 0; j < n_; ++j) {
      for (const auto& [i, v] : A.columns[j]) tableau_[i][j] += v;
    }
    for (std::size_t i = 0; i < m_; ++i) {
      if (b[i] < 0) {
        for (std::size_t j = 0; j < n_; ++j) tableau_[i][j] = -tableau_[i][j];
        b[i] = -b[i];
      }
      tableau_[i][n_ + i] = 1;
      tableau_[i][rhs()] = b[i];
    }
    basis_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) basis_[i] = n_ + i;
  }

  Result solve() {
    Result out;
    // phase I: minimize the sum of artificials
    auto& obj = tableau_[m_];
    for (std::size_t j = 0; j < n_; ++j) {
      Rational s = 0;
      for (std::size_t i = 0; i < m_; ++i) s -= tableau_[i][j];
      obj[j] = s;
    }
    Rational total = 0;
    for (std::size_t i = 0; i < m_; ++i) total -= tableau_[i][rhs()];
    obj[rhs()] = total;
    if (!run(n_ + m_, out.pivots)) {
      out.status = Status::unbounded;  // unreachable: phase I is bounded below by 0
      return out;
    }
    if (obj[rhs()] != 0) {
      out.status = Status::infeasible;
      return out;
    }
    // drive remaining artificials out of the basis; rows that cannot pivot are redundant
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      for (std::size_t j = 0; j < n_; ++j) {
        if (tableau_[i][j] != 0) {
          pivot(i, j);
          ++out.pivots;
          break;
        }
      }
    }
    // phase II
    for (std::size_t j = 0; j < rhs(); ++j) {
      Rational r = j < n_ ? cost_[j] : Rational(0);
      for (std::size_t i = 0; i < m_; ++i) {
        if (basis_[i] < n_ && cost_[basis_[i]] != 0 && tableau_[i][j] != 0) r -= cost_[basis_[i]] * tableau_[i][j];
      }
      obj[j] = r;
    }
    Rational z = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) z -= cost_[basis_[i]] * tableau_[i][rhs()];
    }
    obj[rhs()] = z;
    if (!run(n_, out.pivots)) {
      out.status = Status::unbounded;
      return out;
    }
    out.status = Status::optimal;
    out.value = -obj[rhs()];
    out.x.assign(n_, Rational(0));
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) out.x[basis_[i]] = tableau_[i][rhs()];
    }
    return out;
  }

 private:
  std::size_t rhs() const { return n_ + m_; }

  // Pivots until optimal over columns [0, allowed). False if unbounded.
  bool run(std::size_t allowed, std::size_t& pivots) {
    auto& obj = tableau_[m_];
    while (true) {
      std::size_t enter = allowed;
      for (std::size_t j = 0; j < allowed; ++j) {
        if (obj[j] < 0) {
          enter = j;
          break;
        }
      }
      if (enter == allowed) return true;
      std::size_t leave = m_;
      Rational best;
      for (std::size_t i = 0; i < m_; ++i) {
        if (tableau_[i][enter] <= 0) continue;
        Rational ratio = tableau_[i][rhs()] / tableau_[i][enter];
        if (leave == m_ || ratio < best || (ratio == best && basis_[i] < basis_[leave])) {
          leave = i;
          best = std::move(ratio);
        }
      }
      if (leave == m_) return false;
      pivot(leave, enter);
      ++pivots;
    }
  }

  void pivot(std::size_t row, std::size_t col) {
    auto& pr = tableau_[row];
    const Rational inv = Rational(1) / pr[col];
    std::vector<std::size_t> nz;
    for (std::size_t j = 0; j <= rhs(); ++j) {
      if (pr[j] != 0) {
        pr[j] *= inv;
        nz.push_back(j);
      }
    }
    Rational f;
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == row) continue;
      auto& ri = tableau_[i];
      if (ri[col] == 0) continue;
      f = ri[col];
      for (std::size_t j : nz) ri[j] -= f * pr[j];
    }
    basis_[row] = col;
  }

  std::size_t m_, n_;
  std::vector<Rational> cost_;
  std::vector<std::vector<Rational>> tableau_;
  std::vector<std::size_t> basis_;
};

inline Result solve(const SparseMatrix& A, std::vector<Rational> b, std::vector<Rational> c) {
  return Simplex(A, std::move(b), std::move(c)).solve();
}

struct L1Result {
  Rational value;
  std::vector<Rational> x;
};

/// min_x |c + B x|_1 over unconstrained x. Always feasible (x = 0).
inline L1Result minimize_l1_residual(const SparseMatrix& B, const std::vector<Rational>& c) {
  const std::size_t m = B.rows, k = B.cols();
  SparseMatrix A;
  A.rows = m;
  A.columns.reserve(2 * k + 2 * m);
  for (std::size_t j = 0; j < k; ++j) A.columns.push_back(B.columns[j]);
  for (std::size_t j = 0; j < k; ++j) {
    auto col = B.columns[j];
    for (auto& e : col) e.second = -e.second;
    A.columns.push_back(std::move(col));
  }
  for (std::size_t i = 0; i < m; ++i) A.columns.push_back({{i, Rational(-1)}});
  for (std::size_t i = 0; i < m; ++i) A.columns.push_back({{i, Rational(1)}});
  std::vector<Rational> b(m), cost(2 * k + 2 * m, Rational(0));
  for (std::size_t i = 0; i < m; ++i) b[i] = -c[i];
  for (std::size_t j = 2 * k; j < cost.size(); ++j) cost[j] = 1;
  Result r = solve(A, std::move(b), std::move(cost));
  L1Result out{r.value, std::vector<Rational>(k, Rational(0))};
  for (std::size_t j = 0; j < k; ++j) out.x[j] = r.x[j] - r.x[k + j];
  return out;
}

/// min |x|_1 subject to B x = z, or nullopt if B x = z has no solution.
inline std::optional<L1Result> minimize_l1_solution(const SparseMatrix& B, const std::vector<Rational>& z) {
  const std::size_t k = B.cols();
  SparseMatrix A;
  A.rows = B.rows;
  for (std::size_t j = 0; j < k; ++j) A.columns.push_back(B.columns[j]);
  for (std::size_t j = 0; j < k; ++j) {
    auto col = B.columns[j];
    for (auto& e : col) e.second = -e.second;
    A.columns.push_back(std::move(col));
  }
  std::vector<Rational> cost(2 * k, Rational(1));
  Result r = solve(A, z, std::move(cost));
  if (r.status != Status::optimal) return std::nullopt;
  L1Result out{r.value, std::vector<Rational>(k, Rational(0))};
  for (std::size_t j = 0; j < k; ++j) out.x[j] = r.x[j] - r.x[k + j];
  return out;
}

}  // namespace efcyc::lp
