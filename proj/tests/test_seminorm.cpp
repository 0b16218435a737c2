#include <random>

#include "catch_amalgamated.hpp"
#include "efcyc/efcyc.hpp"
#include "oracles.hpp"

using namespace efcyc;

namespace {

const GroupDescriptor Z = parse_group("Z");
const GroupDescriptor Z2 = parse_group("Z^2");

Chain pushed_torus() {
  Chain c(Z, 2);
  c.add({{0}, {0}, {1}}, 1);
  c.add({{0}, {1}, {1}}, -1);
  return c;
}

Chain torus_cycle() {
  Chain c(Z2, 2);
  c.add({{0, 0}, {1, 0}, {1, 1}}, 1);
  c.add({{0, 0}, {0, 1}, {1, 1}}, -1);
  return c;
}

lp::SparseMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::uniform_int_distribution<int> entry(-2, 2);
  lp::SparseMatrix B;
  B.rows = rows;
  for (std::size_t j = 0; j < cols; ++j) {
    std::vector<std::pair<std::size_t, Rational>> col;
    for (std::size_t i = 0; i < rows; ++i) {
      const int v = entry(rng);
      if (v != 0 && v != 2) col.emplace_back(i, Rational(v));
    }
    B.columns.push_back(std::move(col));
  }
  return B;
}

}  // namespace

TEST_CASE("simplex on small programs", "[seminorm][simplex]") {
  // min x + 2y  s.t.  x + y = 3
  lp::SparseMatrix A;
  A.rows = 1;
  A.columns = {{{0, Rational(1)}}, {{0, Rational(1)}}};
  const lp::Result r = lp::solve(A, {Rational(3)}, {Rational(1), Rational(2)});
  CHECK(r.status == lp::Status::optimal);
  CHECK(r.value == 3);
  CHECK(r.x == std::vector<Rational>{Rational(3), Rational(0)});

  // x - y = 1 with cost -x: unbounded
  lp::SparseMatrix U;
  U.rows = 1;
  U.columns = {{{0, Rational(1)}}, {{0, Rational(-1)}}};
  CHECK(lp::solve(U, {Rational(1)}, {Rational(-1), Rational(0)}).status == lp::Status::unbounded);

  // x = -1 with x >= 0: infeasible
  lp::SparseMatrix I;
  I.rows = 1;
  I.columns = {{{0, Rational(1)}}};
  CHECK(lp::solve(I, {Rational(-1)}, {Rational(1)}).status == lp::Status::infeasible);
}

TEST_CASE("l1 regression agrees with vertex enumeration", "[seminorm][simplex][property]") {
  std::mt19937_64 rng(51);
  for (int i = 0; i < 60; ++i) {
    const std::size_t rows = 2 + i % 5, cols = 1 + i % 4;
    const lp::SparseMatrix B = random_matrix(rng, rows, cols);
    std::vector<Rational> c(rows);
    for (auto& x : c) x = oracle::random_rational(rng);
    const lp::L1Result r = lp::minimize_l1_residual(B, c);
    REQUIRE(r.value == oracle::l1_residual_by_vertices(B, c));
    Rational check = 0;
    const oracle::Matrix M = oracle::dense(B);
    for (std::size_t a = 0; a < rows; ++a) {
      Rational v = c[a];
      for (std::size_t b = 0; b < cols; ++b) v += M[a][b] * r.x[b];
      check += abs(v);
    }
    REQUIRE(check == r.value);
  }
}

TEST_CASE("minimal l1 solutions agree with vertex enumeration", "[seminorm][simplex][property]") {
  std::mt19937_64 rng(52);
  for (int i = 0; i < 60; ++i) {
    const std::size_t rows = 1 + i % 4, cols = 1 + i % 7;
    const lp::SparseMatrix B = random_matrix(rng, rows, cols);
    std::vector<Rational> z(rows);
    for (auto& x : z) x = oracle::random_rational(rng, 3);
    const auto r = lp::minimize_l1_solution(B, z);
    const auto expected = oracle::l1_solution_by_vertices(B, z);
    REQUIRE(r.has_value() == expected.has_value());
    if (r) REQUIRE(r->value == *expected);
  }
}

TEST_CASE("fill_boundary round-trips random boundaries", "[seminorm][property]") {
  std::mt19937_64 rng(53);
  for (const char* spec : {"Z", "Z^2", "Z/3"}) {
    const GroupDescriptor g = parse_group(spec);
    const Truncation t{{}, 1};
    const std::vector<Tuple> basis = truncation_basis(g, t, 2);
    std::uniform_int_distribution<std::size_t> pick(0, basis.size() - 1);
    for (int i = 0; i < 15; ++i) {
      Chain b0(g, 2);
      for (int j = 0; j < 3; ++j) b0.add_canonical(basis[pick(rng)], oracle::random_rational(rng));
      const Chain z = boundary(b0);
      const auto b = fill_boundary(z, t);
      REQUIRE(b.has_value());
      REQUIRE(boundary(*b) == z);
      REQUIRE(l1_norm(*b) <= l1_norm(b0));
      REQUIRE(seminorm_upper_bound(z, t).value == 0);
    }
  }
}

TEST_CASE("pushed torus cycle is filled at radius 1", "[seminorm]") {
  Chain b(Z, 3);
  b.add({{0}, {0}, {0}, {1}}, 1);
  b.add({{0}, {1}, {1}, {1}}, 1);
  CHECK(boundary(b) == pushed_torus());

  const auto filling = fill_boundary(pushed_torus(), Truncation{{}, 1});
  REQUIRE(filling.has_value());
  CHECK(boundary(*filling) == pushed_torus());
  CHECK(l1_norm(*filling) <= 2);

  const SeminormBound s = seminorm_upper_bound(pushed_torus(), Truncation{{}, 1});
  CHECK(s.value == 0);
  CHECK((pushed_torus() + boundary(s.witness)).is_zero());
}

TEST_CASE("torus cycle has no filling", "[seminorm]") {
  for (std::int64_t r : {0, 1}) CHECK_FALSE(fill_boundary(torus_cycle(), Truncation{{}, r}).has_value());
}

TEST_CASE("torus seminorm bounds are non-increasing and at most 2", "[seminorm]") {
  Rational previous = 2;
  for (std::int64_t r : {0, 1}) {
    const SeminormBound s = seminorm_upper_bound(torus_cycle(), Truncation{{}, r});
    CHECK(s.value <= previous);
    CHECK(l1_norm(torus_cycle() + boundary(s.witness)) == s.value);
    CHECK(pair(torus_cocycle(), torus_cycle() + boundary(s.witness)) == 1);
    previous = s.value;
  }
}

TEST_CASE("seminorm input errors", "[seminorm]") {
  Chain open(Z2, 2);
  open.add({{0, 0}, {1, 0}, {1, 1}}, 1);
  try {
    seminorm_upper_bound(open, Truncation{{}, 1});
    FAIL("non-cycle accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::non_cycle);
  }
  CHECK_THROWS_AS(fill_boundary(open, Truncation{{}, 1}), Error);
}
