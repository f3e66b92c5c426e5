#include "doctest.h"

#include "etaforge/arith.hpp"
#include "etaforge/eta_quotient.hpp"

using namespace etaforge;

TEST_SUITE("etaquot") {
  TEST_CASE("arithmetic helpers") {
    CHECK(divisors(12) == std::vector<std::int64_t>{1, 2, 3, 4, 6, 12});
    CHECK(index_gamma0(11) == 12);
    CHECK(index_gamma0(42) == 96);
    CHECK(sturm_bound(11, 2) == 2);
    CHECK(sturm_bound(42, 2) == 16);
    CHECK(cusp_multiplicity(32, 4) == 2);
    CHECK_THROWS_AS(sturm_bound(11, 3), std::invalid_argument);
  }

  TEST_CASE("text form round-trips") {
    const EtaQuotient q(42, {-1, 2, 2, -1, -1, 2, 2, -1});
    CHECK(to_string(q) == "eta_42[-1,2,2,-1,-1,2,2,-1]");
    CHECK(parse_eta_quotient(" eta_42[ -1, 2,2,-1,-1,2,2,-1 ]") == q);
    CHECK_THROWS_AS(parse_eta_quotient("eta_42[1,2]"), std::invalid_argument);
    CHECK_THROWS_AS(parse_eta_quotient("eta42[1,1]"), std::invalid_argument);
  }

  TEST_CASE("exponent count must match the divisor count") {
    CHECK_THROWS_AS(EtaQuotient(6, {1, 1, 1}), std::invalid_argument);
  }

  TEST_CASE("embedding raises the level without changing the function") {
    const EtaQuotient q(11, {2, 2});
    const EtaQuotient up = q.embed(2);
    CHECK(up.level() == 22);
    CHECK(up.exponent_at(11) == 2);
    CHECK(up.exponent_at(2) == 0);
    CHECK(q_expansion(up, 20) == q_expansion(q, 20));
  }

  TEST_CASE("eta(z)^2 eta(11z)^2 is the level-11 newform") {
    const EtaQuotient q(11, {2, 2});
    CHECK(weight(q) == 2);
    CHECK(newman_conditions(q).all());
    CHECK(is_holomorphic(q));
    CHECK(cusp_order(q, 1) == 1);
    CHECK(cusp_order(q, 11) == 1);
    const QExpansion s = q_expansion(q, 12);
    CHECK(s.offset() == 1);
    const int an[] = {1, -2, -1, 2, 1, 2, -2, 0, -2, -2, 1, -2};
    for (int i = 0; i < 12; ++i) {
      CHECK(s[i] == an[i]);
    }
  }

  TEST_CASE("the recurrence agrees with the series product") {
    const EtaQuotient q(42, {-1, 2, 2, -1, -1, 2, 2, -1});
    const QExpansion s = q_expansion(q, 60);
    const auto c = eta_coefficients<Rational>(q, 60);
    for (int i = 0; i < 60; ++i) {
      CHECK(c(i) == s[i]);
    }
    const auto f = form_coefficients<Integer>(q, 30);
    CHECK(f(0) == 0);
    CHECK(f(1) == 1);
  }

  TEST_CASE("Newman conditions detect each failure") {
    CHECK_FALSE(newman_conditions(EtaQuotient(2, {1, 0})).divisor_sum);
    const NewmanConditions odd_power = newman_conditions(EtaQuotient(3, {15, 3}));
    CHECK(odd_power.divisor_sum);
    CHECK(odd_power.codivisor_sum);
    CHECK_FALSE(odd_power.square_product);
    CHECK_FALSE(is_holomorphic(EtaQuotient(3, {15, 3})));
    CHECK(is_holomorphic(EtaQuotient(2, {16, -8})));
    // Newman holds, but the order at infinity is -1.
    CHECK(newman_conditions(EtaQuotient(2, {24, -24})).all());
    CHECK(cusp_order(EtaQuotient(2, {24, -24}), 2) == -1);
    CHECK_FALSE(is_holomorphic(EtaQuotient(2, {24, -24})));
  }

  TEST_CASE("valence identity for a single quotient") {
    const EtaQuotient q(20, {2, -1, 0, 0, -1, 4});
    const CuspProfile p = cusp_profile(q);
    Rational total = 0;
    for (std::size_t i = 0; i < p.orders.size(); ++i) {
      total += p.orders[i] * p.multiplicities[i];
    }
    CHECK(total == weight(q) * index_gamma0(20) / 12);
  }
}
