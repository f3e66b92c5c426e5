#include "doctest.h"

#include "etaforge/exactla.hpp"

#include <random>

using namespace etaforge;

namespace {

Matrix<Rational> random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_int_distribution<int> v(-6, 6);
  std::uniform_int_distribution<int> d(1, 3);
  Matrix<Rational> m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = make_rational(v(rng), d(rng));
    }
  }
  return m;
}

Matrix<Rational> product(const Matrix<Rational>& a, const Matrix<Rational>& b) {
  Matrix<Rational> out(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      Rational s = 0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) {
        s += a(i, k) * b(k, j);
      }
      out(i, j) = s;
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("exactla") {
  TEST_CASE("rational parsing and printing") {
    CHECK(parse_rational(" -6/4 ") == make_rational(-3, 2));
    CHECK(to_string(make_rational(-3, 2)) == "-3/2");
    CHECK(to_string(Rational(5)) == "5");
    CHECK_THROWS_AS(parse_rational("1/0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_rational("x"), std::invalid_argument);
  }

  TEST_CASE("rref of a small dependent system") {
    Matrix<Rational> m(3, 3);
    m << 1, 2, 3, 2, 4, 6, 1, 0, 1;
    const auto r = rref(m);
    CHECK(r.rank() == 2);
    CHECK(r.pivots == std::vector<Eigen::Index>{0, 1});
    CHECK(r.reduced(0, 2) == 1);
    CHECK(r.reduced(1, 2) == 1);
  }

  TEST_CASE("fraction-free and field elimination agree") {
    std::mt19937_64 rng(99);
    for (int t = 0; t < 25; ++t) {
      Matrix<Rational> m = random_matrix(rng, 5, 7);
      m.row(4) = m.row(0) * Rational(3) - m.row(2);
      const auto a = rref(m);
      const auto b = detail::rref_field<Rational>(m);
      CHECK(a.pivots == b.pivots);
      CHECK(a.reduced == b.reduced);
      CHECK(a.rank() == 4);
    }
  }

  TEST_CASE("inverse and linear solves") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
      const Matrix<Rational> m = random_matrix(rng, 4, 4);
      const auto inv = inverse(m);
      if (!inv) {
        CHECK(rank(m) < 4);
        continue;
      }
      const Matrix<Rational> id = product(m, *inv);
      for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) {
          CHECK(id(i, j) == (i == j ? 1 : 0));
        }
      }
      Vector<Rational> x = random_matrix(rng, 4, 1);
      const Vector<Rational> b = product(m, x);
      const auto solved = solve_linear_system<Rational>(m, b);
      REQUIRE(solved);
      CHECK(*solved == x);
    }
    Matrix<Rational> singular(2, 2);
    singular << 1, 2, 2, 4;
    CHECK_FALSE(inverse(singular));
    Vector<Rational> b(2);
    b << 1, 1;
    CHECK_FALSE(solve_linear_system<Rational>(singular, b));
  }

  TEST_CASE("span membership prefers earlier vectors") {
    Vector<Rational> u(3), v(3), w(3), t(3);
    u << 1, 0, 1;
    v << 2, 0, 2;
    w << 0, 1, 0;
    t << 3, 2, 3;
    const auto c = solve_in_span<Rational>({u, v, w}, t);
    REQUIRE(c);
    CHECK((*c)[0] == 3);
    CHECK((*c)[1] == 0);
    CHECK((*c)[2] == 2);
    Vector<Rational> out(3);
    out << 1, 0, 0;
    CHECK_FALSE(solve_in_span<Rational>({u, w}, out));
    Vector<Rational> shorter(2);
    CHECK_THROWS_AS(solve_in_span<Rational>({u}, shorter), std::invalid_argument);
  }

  TEST_CASE("echelon basis over both fields") {
    EchelonBasis<ModP> fast(3);
    EchelonBasis<Rational> exact(3);
    Vector<Rational> a(3), b(3), c(3);
    a << 1, 2, 3;
    b << 2, 4, 6;
    c << 0, 1, 1;
    CHECK(exact.insert(a));
    CHECK_FALSE(exact.insert(b));
    CHECK(exact.insert(c));
    CHECK(fast.insert(reduce_mod_p(a)));
    CHECK_FALSE(fast.insert(reduce_mod_p(b)));
    CHECK(fast.insert(reduce_mod_p(c)));
    CHECK(exact.size() == 2);
    CHECK(exact.contains(a * Rational(5) - c));
  }

  TEST_CASE("modular reduction of fractions") {
    Vector<Rational> v(2);
    v << make_rational(1, 2), -3;
    const Vector<ModP> r = reduce_mod_p(v);
    CHECK(r(0) * ModP(2) == ModP(1));
    CHECK(r(1) == ModP(-3));
  }
}
