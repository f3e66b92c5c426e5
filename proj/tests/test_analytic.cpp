#include "doctest.h"

#include "etaforge/analytic.hpp"

#include <cmath>
#include <numbers>

using namespace etaforge;

namespace {
const Complex I(0.0, 1.0);
}

TEST_SUITE("analytic") {
  TEST_CASE("Dedekind sums in closed form") {
    CHECK(dedekind_sum(1, 1) == 0);
    CHECK(dedekind_sum(1, 2) == 0);
    CHECK(dedekind_sum(1, 3) == make_rational(1, 18));
    CHECK(dedekind_sum(2, 5) == 0);
    // s(1, k) = (k - 1)(k - 2) / (12 k)
    for (std::int64_t k = 1; k <= 40; ++k) {
      CHECK(dedekind_sum(1, k) == make_rational((k - 1) * (k - 2), 12 * k));
    }
    CHECK(dedekind_sum(-1, 7) == -dedekind_sum(1, 7));
    CHECK(dedekind_sum(8, 7) == dedekind_sum(1, 7));
    CHECK_THROWS_AS(dedekind_sum(2, 4), std::invalid_argument);
    CHECK_THROWS_AS(dedekind_sum(1, 0), std::invalid_argument);
  }

  TEST_CASE("multiplier of the generators") {
    CHECK(eta_multiplier_exponent({1, 1, 0, 1}) == 1);   // eta(z+1) = e^{pi i/12} eta(z)
    CHECK(eta_multiplier_exponent({0, -1, 1, 0}) == 0);  // eta(-1/z) = sqrt(-iz) eta(z)
    CHECK(eta_multiplier_exponent({-1, 0, 0, -1}) == 0);
    CHECK_THROWS_AS(eta_multiplier({1, 1, 1, 1}), std::invalid_argument);
  }

  TEST_CASE("eta(i) matches its closed form") {
    const NumericValue v = eta_numeric(I);
    const double closed = std::tgamma(0.25) / (2.0 * std::pow(std::numbers::pi, 0.75));
    CHECK(std::abs(v.value - closed) < 1e-14);
    CHECK(v.error < 1e-14);
  }

  TEST_CASE("reduction lands in the fundamental domain") {
    for (Complex z : {Complex(0.3, 0.01), Complex(-7.2, 0.4), Complex(0.49, 0.0005)}) {
      const ModularMatrix g = reduce_to_fundamental_domain(z);
      g.check();
      const Complex w = g.act(z);
      CHECK(std::abs(w.real()) <= 0.5 + 1e-12);
      CHECK(std::abs(w) >= 1.0 - 1e-12);
    }
  }

  TEST_CASE("the transformation law holds for the generators at sample points") {
    const UpperHalfPoint z = make_point({0.13, 0.71});
    CHECK(eta_transform_check({1, 1, 0, 1}, z));
    CHECK(eta_transform_check({0, -1, 1, 0}, z));
    CHECK(eta_transform_check({2, 1, 7, 4}, z));
    CHECK(eta_transform_check({-3, 2, -5, 3}, z));
  }

  TEST_CASE("point parsing") {
    const UpperHalfPoint w = parse_point("1/2 + i/(2*sqrt(21))");
    CHECK(w.re == doctest::Approx(0.5));
    CHECK(w.im == doctest::Approx(1.0 / (2.0 * std::sqrt(21.0))).epsilon(1e-15));
    CHECK(parse_point("3i").im == doctest::Approx(3.0));
    CHECK(parse_point("-0.25+1.5e-1i").re == doctest::Approx(-0.25));
    CHECK(parse_point("(1+i)*(1+i)/2").im == doctest::Approx(1.0));
    CHECK_THROWS_AS(parse_point("-i"), std::invalid_argument);
    CHECK_THROWS_AS(parse_point("1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_point("1 + "), std::invalid_argument);
    CHECK_THROWS_AS(parse_point("sqrt(2"), std::invalid_argument);
  }

  TEST_CASE("the truncation error bound is honoured") {
    Expression e;
    e.level = 11;
    e.terms = {{Rational(1), EtaQuotient(11, {2, 2})}};
    // Products are taken after reduction, so small imaginary parts still converge fast.
    CHECK_NOTHROW(eval_expression(e, make_point({0.0, 0.02})));
    CHECK_THROWS_AS(eval_expression(e, make_point({0.3, 0.8}), 1, 1e-12), std::runtime_error);
    const NumericValue one = eta_numeric(Complex(0.3, 0.8), 1);
    const NumericValue many = eta_numeric(Complex(0.3, 0.8), 40);
    CHECK(std::abs(one.value - many.value) <= one.error);
    CHECK_THROWS_AS(eta_numeric(Complex(0.3, 0.8), 0), std::invalid_argument);
  }

  TEST_CASE("eta relations compare relatively") {
    const UpperHalfPoint z = make_point(I);
    const EtaProduct lhs{{1, 3}, {6, 3}, {7, 3}, {42, 3}};
    const EtaProduct rhs{{2, 3}, {3, 3}, {14, 3}, {21, 3}};
    CHECK(verify_eta_relation(lhs, lhs, z));
    CHECK_FALSE(verify_eta_relation(lhs, rhs, z));
  }
}
