#include <doctest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "pmor/features.hpp"

using namespace pmor;

namespace {

using Exp = std::vector<std::uint8_t>;

// Independent enumeration: s_i * s_j^b and s_i^a * s_j^b, a, b in [2, p].
std::set<Exp> brute_force(int r, int p) {
  std::set<Exp> out;
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      for (int b = 2; b <= p; ++b) {
        Exp e(static_cast<std::size_t>(r), 0);
        e[i] += 1;
        e[j] += static_cast<std::uint8_t>(b);
        out.insert(e);
        for (int a = 2; a <= p; ++a) {
          Exp f(static_cast<std::size_t>(r), 0);
          f[i] += static_cast<std::uint8_t>(a);
          f[j] += static_cast<std::uint8_t>(b);
          out.insert(f);
        }
      }
    }
  }
  return out;
}

Exp mono(int a, int b) { return {static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)}; }

template <typename F>
Matrix central_difference(F f, const Vector& x, double h) {
  const Vector f0 = f(x);
  Matrix j(f0.size(), x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    j.col(i) = (f(xp) - f(xm)) / (2 * h);
  }
  return j;
}

}  // namespace

TEST_CASE("g_eval stacks elementwise powers") {
  Vector s(2);
  s << 2, 3;
  Vector expect(4);
  expect << 4, 9, 8, 27;
  CHECK(g_eval(s, 3) == expect);
  CHECK(g_eval(Vector::Zero(3), 4).isZero(0.0));
  CHECK(g_eval(Vector::Ones(3), 4) == Vector::Ones(9));
  CHECK_THROWS_AS(g_eval(s, 1), Error);
}

TEST_CASE("g_jacobian") {
  CHECK(g_jacobian(Vector::Constant(1, 2.0), 2)(0, 0) == 4.0);
  CHECK(g_jacobian(Vector::Zero(3), 3).isZero(0.0));
  Vector s(2);
  s << 0.3, -0.7;
  const Matrix fd = central_difference([](const Vector& v) { return g_eval(v, 4); }, s, 1e-6);
  const Matrix jac = g_jacobian(s, 4);
  CHECK((fd - jac).norm() <= 1e-6 * jac.norm());
  CHECK(jac(0, 1) == 0.0);
}

TEST_CASE("unique quadratic products") {
  Vector s(2);
  s << 2, 5;
  Vector e(3);
  e << 4, 10, 25;
  CHECK(quad_eval(s, QuadIndexing(2)) == e);
  Vector s3(3);
  s3 << 1, 2, 3;
  Vector e3(6);
  e3 << 1, 2, 3, 4, 6, 9;
  CHECK(quad_eval(s3, QuadIndexing(3)) == e3);
  CHECK(quad_eval(Vector::Zero(4), QuadIndexing(4)).isZero(0.0));
  CHECK(QuadIndexing(5).size() == 15);
}

TEST_CASE("monomial table sizes match the reference table") {
  const int rs[] = {2, 4, 6, 8, 10};
  const int expect[5][3] = {{7, 16, 27}, {26, 64, 114}, {57, 144, 261}, {100, 256, 468}, {155, 400, 735}};
  for (int i = 0; i < 5; ++i)
    for (int p = 2; p <= 4; ++p) CHECK(ghat_table(rs[i], p).size() == expect[i][p - 2]);
}

TEST_CASE("monomial table equals brute-force enumeration") {
  for (int r = 1; r <= 10; ++r) {
    for (int p = 2; p <= 4; ++p) {
      const MonomialTable t = ghat_table(r, p);
      const std::set<Exp> bf = brute_force(r, p);
      CHECK(std::set<Exp>(t.exponents.begin(), t.exponents.end()) == bf);
      CHECK(static_cast<std::size_t>(t.size()) == bf.size());
      CHECK_NOTHROW(validate_table(t));
      int lo = 100, hi = 0;
      for (Index m = 0; m < t.size(); ++m) {
        lo = std::min(lo, t.degree(m));
        hi = std::max(hi, t.degree(m));
      }
      CHECK(lo == 3);
      CHECK(hi == 2 * p);
    }
  }
}

TEST_CASE("r=2 tables match the worked example") {
  const MonomialTable t2 = ghat_table(2, 2);
  const std::vector<Exp> expect2{mono(3, 0), mono(2, 1), mono(1, 2), mono(0, 3),
                                 mono(4, 0), mono(2, 2), mono(0, 4)};
  CHECK(t2.exponents == expect2);

  // The reference listing has "s1^2 s1^3"; read as s1^2 s2^3.
  const std::set<Exp> example{mono(3, 0), mono(1, 2), mono(2, 1), mono(0, 3), mono(4, 0), mono(1, 3),
                              mono(3, 1), mono(2, 2), mono(0, 4), mono(5, 0), mono(2, 3), mono(3, 2),
                              mono(0, 5), mono(6, 0), mono(3, 3), mono(0, 6)};
  const MonomialTable t3 = ghat_table(2, 3);
  CHECK(std::set<Exp>(t3.exponents.begin(), t3.exponents.end()) == example);
}

TEST_CASE("ghat_eval") {
  const MonomialTable t = ghat_table(2, 3);
  CHECK(ghat_eval(Vector::Ones(2), t) == Vector::Ones(t.size()));

  Vector s(2);
  s << 2, 0;
  const Vector v = ghat_eval(s, ghat_table(2, 2));
  Vector expect(7);
  expect << 8, 0, 0, 0, 16, 0, 0;
  CHECK(v == expect);

  s << 0.5, -1;
  const Vector w = ghat_eval(s, t);
  const auto it = std::find(t.exponents.begin(), t.exponents.end(), mono(1, 2));
  REQUIRE(it != t.exponents.end());
  CHECK(w(it - t.exponents.begin()) == 0.5);
}

TEST_CASE("ghat_eval is permutation equivariant") {
  const int r = 3;
  const MonomialTable t = ghat_table(r, 3);
  Vector s(3);
  s << 0.4, -1.3, 0.9;
  const int perm[3] = {2, 0, 1};
  Vector sp(3);
  for (int i = 0; i < r; ++i) sp(perm[i]) = s(i);
  const Vector base = ghat_eval(s, t);
  const Vector permuted = ghat_eval(sp, t);
  for (Index m = 0; m < t.size(); ++m) {
    Exp e(r);
    for (int i = 0; i < r; ++i) e[perm[i]] = t.exponents[m][i];
    const auto it = std::find(t.exponents.begin(), t.exponents.end(), e);
    REQUIRE(it != t.exponents.end());
    CHECK(permuted(it - t.exponents.begin()) == doctest::Approx(base(m)).epsilon(1e-14));
  }
}

TEST_CASE("ghat_jacobian") {
  MonomialTable t1 = ghat_table(1, 2);
  REQUIRE(t1.size() == 2);
  const Matrix j1 = ghat_jacobian(Vector::Constant(1, 2.0), t1);
  CHECK(j1(0, 0) == 12.0);
  CHECK(j1(1, 0) == 32.0);

  const MonomialTable t = ghat_table(3, 2);
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const Vector s = testutil::random_matrix(3, 1, seed).col(0);
    const Matrix fd = central_difference([&](const Vector& v) { return ghat_eval(v, t); }, s, 1e-5);
    const Matrix jac = ghat_jacobian(s, t);
    CHECK((fd - jac).norm() <= 1e-6 * jac.norm());
  }

  Vector z(3);
  z << 0.0, 1.5, -0.5;
  CHECK(ghat_jacobian(z, ghat_table(3, 3)).allFinite());
}

TEST_CASE("columnwise feature maps agree with the vector versions") {
  const Matrix s = testutil::random_matrix(3, 4, 9);
  const MonomialTable t = ghat_table(3, 3);
  const Matrix g = g_columns(s, 3);
  const Matrix q = quad_columns(s, QuadIndexing(3));
  const Matrix h = ghat_columns(s, t);
  for (Index j = 0; j < 4; ++j) {
    CHECK((g.col(j) - g_eval(s.col(j), 3)).norm() == 0.0);
    CHECK((q.col(j) - quad_eval(s.col(j), QuadIndexing(3))).norm() == 0.0);
    CHECK((h.col(j) - ghat_eval(s.col(j), t)).norm() <= 1e-14 * h.col(j).norm());
  }
}

TEST_CASE("validate_table rejects malformed tables") {
  MonomialTable t = ghat_table(2, 2);
  std::swap(t.exponents[0], t.exponents[1]);
  CHECK_THROWS_AS(validate_table(t), Error);
  t = ghat_table(2, 2);
  t.exponents.push_back(t.exponents.front());
  CHECK_THROWS_AS(validate_table(t), Error);
  t = ghat_table(2, 2);
  t.exponents.front() = mono(1, 1);
  CHECK_THROWS_AS(validate_table(t), Error);
}
