#include <random>

#include "catch_amalgamated.hpp"
#include "efcyc/efcyc.hpp"
#include "oracles.hpp"

using namespace efcyc;

namespace {

using ModulePtr = std::shared_ptr<const NormedModule>;

Rational frac(long p, long q) {
  Rational r(p, q);
  r.canonicalize();
  return r;
}

ModulePtr swap_module(const GroupDescriptor& g, std::vector<std::int64_t> character) {
  return std::make_shared<const NormedModule>(g, 2, SignedPermutation({2, 1}), std::move(character));
}

ModuleVector vec(std::initializer_list<long> xs) {
  ModuleVector v;
  for (long x : xs) v.emplace_back(x);
  return v;
}

// Dense matrix of a signed permutation given as image[i] = +-(j+1).
oracle::Matrix matrix_of(const std::vector<std::int64_t>& image) {
  const std::size_t d = image.size();
  oracle::Matrix M(d, std::vector<Rational>(d, Rational(0)));
  for (std::size_t i = 0; i < d; ++i) {
    const std::int64_t j = (image[i] < 0 ? -image[i] : image[i]) - 1;
    M[static_cast<std::size_t>(j)][i] = image[i] < 0 ? -1 : 1;
  }
  return M;
}

ModuleVector mul(const oracle::Matrix& M, const ModuleVector& v) {
  ModuleVector out(v.size(), Rational(0));
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += M[i][j] * v[j];
  }
  return out;
}

// Reference averaging: enumerate F^{n+1}, move each tuple to start at e and
// act on the coefficient by the matrix power of the shift.
std::map<oracle::PlainTuple, ModuleVector> reference_average(const oracle::Law& law, const TwistedChain& c,
                                                             const std::vector<GroupElement>& F,
                                                             const std::vector<std::int64_t>& image,
                                                             const std::vector<std::int64_t>& character,
                                                             std::int64_t modulus) {
  const oracle::Matrix P = matrix_of(image);
  std::map<oracle::PlainTuple, ModuleVector> out;
  const std::size_t n = static_cast<std::size_t>(c.degree()) + 1;
  Rational w = 1;
  for (std::size_t i = 0; i < n; ++i) w /= static_cast<long>(F.size());
  for (const auto& [t, v] : c.terms()) {
    std::vector<std::size_t> idx(n, 0);
    while (true) {
      oracle::PlainTuple moved;
      for (std::size_t j = 0; j < n; ++j) moved.push_back(law.mul(oracle::to_vec(t.entry(j)), oracle::to_vec(F[idx[j]])));
      const oracle::Vec shift = law.inv(moved[0]);
      std::int64_t phase = 0;
      for (std::size_t i = 0; i < shift.size(); ++i) phase += character[i] * shift[i];
      phase = ((phase % modulus) + modulus) % modulus;
      ModuleVector coeff = v;
      for (auto& x : coeff) x *= w;
      for (std::int64_t p = 0; p < phase; ++p) coeff = mul(P, coeff);
      oracle::PlainTuple key;
      for (const auto& e : moved) key.push_back(law.mul(shift, e));
      auto& slot = out[key];
      if (slot.empty()) slot.assign(v.size(), Rational(0));
      for (std::size_t i = 0; i < v.size(); ++i) slot[i] += coeff[i];
      std::size_t j = n;
      while (j-- > 0) {
        if (++idx[j] < F.size()) break;
        idx[j] = 0;
      }
      if (j == static_cast<std::size_t>(-1)) break;
    }
  }
  for (auto it = out.begin(); it != out.end();) {
    it = is_zero(it->second) ? out.erase(it) : std::next(it);
  }
  return out;
}

TwistedChain random_twisted(const ModulePtr& A, int degree, std::mt19937_64& rng, int terms = 3) {
  TwistedChain c(A, degree);
  std::vector<GroupElement> entries(static_cast<std::size_t>(degree) + 1);
  for (int i = 0; i < terms; ++i) {
    for (auto& e : entries) e = oracle::random_element(A->group(), rng);
    ModuleVector v(A->dimension());
    for (auto& x : v) x = oracle::random_rational(rng, 3);
    c.add(entries, v);
  }
  return c;
}

}  // namespace

TEST_CASE("signed permutations", "[twisted]") {
  const SignedPermutation p({2, -1});
  CHECK(p.apply(vec({1, 0})) == vec({0, 1}));
  CHECK(p.apply(vec({0, 1})) == vec({-1, 0}));
  CHECK(p.power(4) == SignedPermutation::identity(2));
  CHECK_FALSE(p.power(2) == SignedPermutation::identity(2));
  CHECK_THROWS_AS(SignedPermutation({1, 1}), Error);
  CHECK_THROWS_AS(SignedPermutation({0}), Error);
}

TEST_CASE("invalid modules are rejected", "[twisted]") {
  auto code_of = [](auto make) {
    try {
      make();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::malformed_input;
  };
  const GroupDescriptor Z = parse_group("Z");
  CHECK(code_of([&] { NormedModule(Z, 3, SignedPermutation({2, 1}), {1}); }) == ErrorCode::invalid_module);
  CHECK(code_of([&] { NormedModule(parse_group("Z/3"), 2, SignedPermutation({2, 1}), {1}); }) ==
        ErrorCode::invalid_module);
  CHECK(code_of([&] { NormedModule(parse_group("Heis3"), 2, SignedPermutation({2, 1}), {0, 0, 1}); }) ==
        ErrorCode::invalid_module);
  CHECK(code_of([&] { NormedModule(Z, 2, SignedPermutation({2, 1}), {1, 1}); }) == ErrorCode::invalid_module);
  CHECK_NOTHROW(NormedModule(parse_group("Z/4"), 2, SignedPermutation({2, 1}), {1}));
}

TEST_CASE("twisted averaging example", "[twisted]") {
  const AmenableExtension ext = AmenableExtension::parse("Z", "2Z");
  const ModulePtr A = swap_module(ext.group(), {1});
  TwistedChain c(A, 1);
  c.add({{0}, {1}}, vec({1, 0}));
  const FolnerSet F(std::vector<GroupElement>{{0}, {2}});
  TwistedChain expected(A, 1);
  expected.add({{0}, {1}}, {frac(1, 2), Rational(0)});
  expected.add({{0}, {3}}, {frac(1, 4), Rational(0)});
  expected.add({{0}, {-1}}, {frac(1, 4), Rational(0)});
  CHECK(twisted_average(ext, c, F) == expected);
  CHECK(twisted_average(ext, c, FolnerSet(std::vector<GroupElement>{{0}})) == c);
}

TEST_CASE("canonicalization acts on the coefficient", "[twisted]") {
  const ModulePtr A = swap_module(parse_group("Z"), {1});
  TwistedChain a(A, 1), b(A, 1);
  a.add({{1}, {2}}, vec({1, 0}));
  b.add({{0}, {1}}, vec({0, 1}));
  CHECK(a == b);
}

TEST_CASE("trivial module agrees with scalar averaging", "[twisted][property]") {
  std::mt19937_64 rng(61);
  for (auto [g, n] : std::vector<std::pair<const char*, const char*>>{
           {"Z^2", "Zx1"}, {"Heis3", "center"}, {"Z/2xZ", "Z/2x1"}}) {
    const AmenableExtension ext = AmenableExtension::parse(g, n);
    const ModulePtr R = std::make_shared<const NormedModule>(NormedModule::trivial(ext.group()));
    for (int i = 0; i < 30; ++i) {
      const Chain c = oracle::random_chain(ext.group(), 1 + i % 2, rng);
      const FolnerSet F(oracle::random_subset_of_normal(ext, rng));
      const TwistedChain t = to_twisted(c, R);
      REQUIRE(to_scalar(twisted_average(ext, t, F)) == average(ext, c, F));
      REQUIRE(l1_norm(t) == l1_norm(c));
      REQUIRE(to_scalar(boundary(t)) == boundary(c));
    }
  }
}

TEST_CASE("twisted averaging matches the reference", "[twisted][property]") {
  std::mt19937_64 rng(62);
  const AmenableExtension ext = AmenableExtension::parse("Z^2", "Zx1");
  const std::vector<std::int64_t> image{2, 3, -1};
  const std::vector<std::int64_t> character{1, 2};
  const ModulePtr A = std::make_shared<const NormedModule>(ext.group(), 6, SignedPermutation(image), character);
  const oracle::Law law = oracle::free_abelian_law(2);
  for (int i = 0; i < 30; ++i) {
    const TwistedChain c = random_twisted(A, 1 + i % 2, rng);
    const FolnerSet F(oracle::random_subset_of_normal(ext, rng));
    const TwistedChain avg = twisted_average(ext, c, F);
    std::map<oracle::PlainTuple, ModuleVector> got;
    for (const auto& [t, v] : avg.terms()) {
      oracle::PlainTuple key;
      for (const GroupElement& e : t.entries()) key.push_back(oracle::to_vec(e));
      got[key] = v;
    }
    REQUIRE(got == reference_average(law, c, F.elements(), image, character, 6));
  }
}

TEST_CASE("twisted averaging is a contracting chain map", "[twisted][property]") {
  std::mt19937_64 rng(63);
  const AmenableExtension ext = AmenableExtension::parse("Heis3", "center");
  const ModulePtr A =
      std::make_shared<const NormedModule>(ext.group(), 4, SignedPermutation({2, -1}), std::vector<std::int64_t>{1, 3, 0});
  for (int i = 0; i < 40; ++i) {
    const TwistedChain c = random_twisted(A, 1 + i % 3, rng);
    const FolnerSet F(oracle::random_subset_of_normal(ext, rng));
    const TwistedChain avg = twisted_average(ext, c, F);
    REQUIRE(boundary(avg) == twisted_average(ext, boundary(c), F));
    REQUIRE(l1_norm(avg) <= l1_norm(c));
    REQUIRE(twisted_pushforward(ext, avg) == twisted_pushforward(ext, c));
  }
}

TEST_CASE("coinvariant seminorm examples", "[twisted]") {
  const AmenableExtension full = AmenableExtension::parse("Z", "Z");
  const AmenableExtension even = AmenableExtension::parse("Z", "2Z");
  const ModulePtr A = swap_module(full.group(), {1});
  const ModuleVector m = vec({3, -5});
  CHECK(coinvariant_seminorm(m, even, *A) == 8);
  CHECK(coinvariant_seminorm(m, full, *A) == 2);
  CHECK(coinvariant_seminorm(vec({1, -1}), full, *A) == 0);
  const NormedModule AN = A->coinvariants(full);
  CHECK(AN.norm(m) == 2);
  CHECK(AN.norm(vec({1, -1})) == 0);
  CHECK(A->coinvariants(even).norm(m) == 8);
}

TEST_CASE("coinvariant seminorm matches the LP on random vectors", "[twisted][property]") {
  std::mt19937_64 rng(64);
  const AmenableExtension ext = AmenableExtension::parse("Z^2", "1xZ");
  const NormedModule A(ext.group(), 6, SignedPermutation({2, 3, -1}), {1, 2});
  const NormedModule AN = A.coinvariants(ext);
  for (int i = 0; i < 50; ++i) {
    ModuleVector v(3);
    for (auto& x : v) x = oracle::random_rational(rng);
    REQUIRE(AN.norm(v) == coinvariant_seminorm(v, ext, A));
    REQUIRE(AN.norm(v) <= A.norm(v));
  }
}

TEST_CASE("twisted push-forward", "[twisted]") {
  const AmenableExtension full = AmenableExtension::parse("Z", "Z");
  const ModulePtr A = swap_module(full.group(), {1});
  TwistedChain c(A, 1);
  c.add({{0}, {1}}, vec({1, 0}));
  const TwistedChain bar = twisted_pushforward(full, c);
  CHECK(bar.group() == full.quotient());
  CHECK(l1_norm(bar) == 1);

  const AmenableExtension even = AmenableExtension::parse("Z", "2Z");
  const TwistedChain same = twisted_pushforward(even, c);
  REQUIRE(same.size() == 1);
  CHECK(same.terms().begin()->second == vec({1, 0}));

  std::mt19937_64 rng(65);
  const AmenableExtension ext = AmenableExtension::parse("Z^2", "Zx1");
  const ModulePtr R = std::make_shared<const NormedModule>(NormedModule::trivial(ext.group()));
  for (int i = 0; i < 20; ++i) {
    const Chain s = oracle::random_chain(ext.group(), 2, rng);
    REQUIRE(to_scalar(twisted_pushforward(ext, to_twisted(s, R))) == pushforward(ext, s));
  }
}

TEST_CASE("twisted sigma decomposition and estimate", "[twisted][property]") {
  std::mt19937_64 rng(66);
  const AmenableExtension ext = AmenableExtension::parse("Z^2", "Zx1");
  const ModulePtr A =
      std::make_shared<const NormedModule>(ext.group(), 6, SignedPermutation({2, 3, -1}), std::vector<std::int64_t>{1, 2});
  const FolnerSequence seq(ext, FolnerKind::Interval);
  for (int i = 0; i < 20; ++i) {
    const TwistedChain c = random_twisted(A, 1 + i % 2, rng);
    const TwistedSplit split = twisted_epsilon_split(ext, c);
    REQUIRE(split.epsilon_achieved == 0);
    REQUIRE(split.head + split.tail == c);
    REQUIRE(twisted_pushforward(ext, split.tail).is_zero());
    const TwistedSigmaDecomposition d = twisted_sigma_decompose(ext, split.tail);
    REQUIRE(reconstruct(d, A) == split.tail);
    for (std::int64_t k : {1, 4}) {
      const EstimateCertificate cert = twisted_estimate(ext, c, seq.at(k));
      REQUIRE(cert.holds_sum);
    }
  }
}

TEST_CASE("sign module kills every class", "[twisted]") {
  const AmenableExtension ext = AmenableExtension::parse("Z", "Z");
  const ModulePtr A = std::make_shared<const NormedModule>(ext.group(), 2, SignedPermutation({-1}),
                                                           std::vector<std::int64_t>{1});
  TwistedChain c(A, 1);
  c.add({{0}, {1}}, vec({1}));
  CHECK(twisted_pushforward(ext, c).is_zero());
  const FolnerSequence seq(ext, FolnerKind::Interval);
  for (std::int64_t k : {1, 2, 8, 32}) {
    const EstimateCertificate cert = twisted_estimate(ext, c, seq.at(k), 0);
    CHECK(cert.holds_sum);
    CHECK(cert.pushforward_norm == 0);
  }
  CHECK(twisted_estimate(ext, c, seq.at(32), 0).lhs < 1);
}

TEST_CASE("twisted sigma decomposition rejects a nonzero push-forward", "[twisted]") {
  const AmenableExtension ext = AmenableExtension::parse("Z", "2Z");
  const ModulePtr A = swap_module(ext.group(), {1});
  TwistedChain c(A, 1);
  c.add({{0}, {1}}, vec({1, 0}));
  CHECK_THROWS_AS(twisted_sigma_decompose(ext, c), Error);
}
