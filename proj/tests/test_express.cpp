#include "doctest.h"

#include "etaforge/arith.hpp"
#include "etaforge/express.hpp"
#include "support.hpp"

#include <algorithm>

using namespace etaforge;
using testing::fixture_form;

namespace {

Expression expr(std::int64_t level, std::initializer_list<std::pair<const char*, const char*>> terms) {
  Expression e;
  e.level = level;
  for (const auto& [coef, quotient] : terms) {
    e.terms.push_back({parse_rational(coef), parse_eta_quotient(quotient)});
  }
  return e;
}

std::vector<Rational> sorted_coefficients(const Expression& e) {
  std::vector<Rational> c;
  for (const Term& t : e.terms) {
    c.push_back(t.coef);
  }
  std::sort(c.begin(), c.end());
  return c;
}

QuotientTable table_for(const TargetForm& f, std::int64_t level) {
  return QuotientTable(enumerate_eta_quotients(level, 2), sturm_bound(level, 2));
}

}  // namespace

TEST_SUITE("express") {
  TEST_CASE("validation rejects malformed expressions") {
    CHECK_NOTHROW(validate_expression(expr(11, {{"1", "eta_11[2,2]"}})));
    CHECK_THROWS_AS(validate_expression(expr(11, {{"0", "eta_11[2,2]"}})), std::invalid_argument);
    CHECK_THROWS_AS(validate_expression(expr(22, {{"1", "eta_11[2,2]"}})), std::invalid_argument);
    CHECK_THROWS_AS(validate_expression(expr(11, {{"1", "eta_11[2,2]"}, {"2", "eta_11[2,2]"}})), std::invalid_argument);
    CHECK_THROWS_AS(validate_expression(expr(11, {{"1", "eta_11[2,2]"}, {"1", "eta_11[4,4]"}})), std::invalid_argument);
  }

  TEST_CASE("heights and the size order") {
    const Expression a = expr(42, {{"1", "eta_42[-1,2,2,-1,-1,2,2,-1]"}, {"-1", "eta_42[2,-1,-1,2,2,-1,-1,2]"}});
    const Expression b = expr(42, {{"1/2", "eta_42[-1,2,2,-1,-1,2,2,-1]"}, {"-3", "eta_42[2,-1,-1,2,2,-1,-1,2]"}});
    const Expression c = expr(42, {{"1", "eta_42[-1,2,2,-1,-1,2,2,-1]"}});
    CHECK(height_product(a) == 1);
    CHECK(height_product(b) == 6);
    CHECK(size_order(a, b) == SizeOrder::Smaller);
    CHECK(size_order(b, a) == SizeOrder::Larger);
    CHECK(size_order(c, b) == SizeOrder::Smaller);
    CHECK(size_order(a, a) == SizeOrder::Equivalent);
  }

  TEST_CASE("the level-11 newform is a single quotient") {
    const TargetForm f = fixture_form("11.2.a.a");
    const auto any = find_any_expression(f, enumerate_eta_quotients(11, 2));
    REQUIRE(any);
    CHECK(verify_expression(*any, f));
    const SearchOutcome o = exhaustive_search(f, enumerate_eta_quotients(11, 2));
    CHECK(o.status == SearchStatus::ProvedMinimal);
    CHECK(o.n_lower == 1);
    CHECK(o.n_upper == 1);
    CHECK(to_string(o.best->terms.front().quotient) == "eta_11[2,2]");
  }

  TEST_CASE("forms outside the span report n_lower = infinity") {
    const TargetForm f = fixture_form("17.2.a.a");
    const SearchOutcome o = exhaustive_search(f, enumerate_eta_quotients(17, 2));
    CHECK_FALSE(o.best);
    CHECK(o.n_lower == kUnreachable);
    CHECK(o.status == SearchStatus::NoneFound);
    CHECK(format_block(outcome_block("17.2.a.a", o)).find("n_lower=inf") != std::string::npos);
  }

  TEST_CASE("level raising for 17.2.a.a stops at d = 4") {
    const auto lm = minimal_level_multiplier(fixture_form("17.2.a.a"), 6);
    REQUIRE(lm);
    CHECK(lm->d == 4);
    CHECK(verify_expression(lm->expression, fixture_form("17.2.a.a")));
  }

  TEST_CASE("too few coefficients is a distinct error") {
    TargetForm f = fixture_form("17.2.a.a");
    f.an.resize(3);
    CHECK_THROWS_AS(minimal_level_multiplier(f, 4), InsufficientCoefficients);
  }

  TEST_CASE("exhaustive search recovers the 35 and 42 coefficients") {
    const SearchOutcome o35 = exhaustive_search(fixture_form("35.2.a.a"), enumerate_eta_quotients(35, 2));
    CHECK(o35.status == SearchStatus::ProvedMinimal);
    CHECK(sorted_coefficients(*o35.best) == std::vector<Rational>{1, 1});
    const SearchOutcome o42 = exhaustive_search(fixture_form("42.2.a.a"), enumerate_eta_quotients(42, 2));
    CHECK(o42.status == SearchStatus::ProvedMinimal);
    CHECK(o42.n_lower == 2);
    CHECK(sorted_coefficients(*o42.best) == std::vector<Rational>{-1, 1});
  }

  TEST_CASE("a tiny budget leaves the result bounded, not proved") {
    const TargetForm f = fixture_form("42.2.a.a");
    const SearchOutcome o = exhaustive_search(f, enumerate_eta_quotients(42, 2), 10);
    CHECK(o.status != SearchStatus::ProvedMinimal);
    REQUIRE(o.best);
    CHECK(verify_expression(*o.best, f));
    CHECK(o.n_lower <= o.n_upper);
  }

  TEST_CASE("strategies agree on the minimal length") {
    for (const char* label : {"35.2.a.a", "42.2.a.a", "20.2.a.a"}) {
      const TargetForm f = fixture_form(label);
      const QuotientTable table = table_for(f, f.level);
      const SearchOutcome ex = exhaustive_search(f, table);
      const SearchOutcome rnd = random_search(f, table, 50, 3);
      const SearchOutcome perm = permutation_search(f, table, 1'000'000);
      REQUIRE(ex.best);
      REQUIRE(rnd.best);
      CHECK(verify_expression(*rnd.best, f));
      CHECK(rnd.best->length() >= ex.best->length());
      CHECK(rnd.best->length() == ex.best->length());
      if (perm.best) {
        CHECK(verify_expression(*perm.best, f));
        CHECK(perm.best->length() >= ex.best->length());
      }
    }
  }

  TEST_CASE("random search is reproducible and independent of the worker count") {
    const TargetForm f = fixture_form("19.2.a.a");
    const QuotientTable table = table_for(f, 76);
    RandomOptions two;
    two.workers = 2;
    const SearchOutcome a = random_search(f, table, 24, 11);
    const SearchOutcome b = random_search(f, table, 24, 11, two);
    const SearchOutcome c = random_search(f, table, 24, 11);
    REQUIRE(a.best);
    CHECK(verify_expression(*a.best, f));
    CHECK(format_expression(*a.best) == format_expression(*b.best));
    CHECK(format_expression(*a.best) == format_expression(*c.best));
    CHECK(a.spent.iterations == 24);
  }

  TEST_CASE("resuming random search in two halves matches one run") {
    const TargetForm f = fixture_form("19.2.a.a");
    const QuotientTable table = table_for(f, 76);
    const SearchOutcome whole = random_search(f, table, 32, 5);
    const SearchOutcome first = random_search(f, table, 16, 5);
    RandomOptions rest;
    rest.first_iteration = 16;
    rest.incumbent = first.best;
    const SearchOutcome second = random_search(f, table, 16, 5, rest);
    REQUIRE(whole.best);
    REQUIRE(second.best);
    CHECK(format_expression(*whole.best) == format_expression(*second.best));
  }

  TEST_CASE("certify upgrades but never downgrades") {
    SearchOutcome o;
    o.best = expr(42, {{"1", "eta_42[-1,2,2,-1,-1,2,2,-1]"}, {"-1", "eta_42[2,-1,-1,2,2,-1,-1,2]"}});
    o.n_upper = 2;
    o.n_lower = 1;
    o.status = SearchStatus::Bounded;
    CHECK(certify(o).status == SearchStatus::Bounded);
    o.n_lower = 2;
    CHECK(certify(o).status == SearchStatus::InferredMinimal);
    o.exhaustive_at_upper = true;
    CHECK(certify(o).status == SearchStatus::ProvedMinimal);
    o.exhaustive_at_upper = false;
    o.status = SearchStatus::ProvedMinimal;
    CHECK(certify(o).status == SearchStatus::ProvedMinimal);

    SearchOutcome half = o;
    half.status = SearchStatus::Bounded;
    half.best->terms[0].coef = make_rational(1, 2);
    CHECK(certify(half).status == SearchStatus::Bounded);
  }

  TEST_CASE("single-quotient exclusion") {
    CHECK(single_quotient_newforms().size() == 11);
    CHECK_FALSE(rule_out_single_quotient(fixture_form("11.2.a.a")));
    CHECK(rule_out_single_quotient(fixture_form("96.2.a.a")));
    SearchOutcome o;
    CHECK(apply_single_quotient_exclusion(o, fixture_form("96.2.a.a")).n_lower == 2);
    CHECK(apply_single_quotient_exclusion(o, fixture_form("11.2.a.a")).n_lower == 1);
  }

  TEST_CASE("expression blocks round-trip") {
    ExpressionBlock block;
    block.header = {{"label", "42.2.a.a"}, {"level", "42"}, {"note", "x"}};
    block.expression = expr(42, {{"1/3", "eta_42[-1,2,2,-1,-1,2,2,-1]"}, {"-1", "eta_42[2,-1,-1,2,2,-1,-1,2]"}});
    const std::string text = format_block(block);
    CHECK(text.rfind("# label=42.2.a.a level=42", 0) == 0);
    const auto back = parse_expression_blocks(text + "\n" + text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].header == block.header);
    CHECK(format_expression(back[1].expression) == format_expression(block.expression));
  }

  TEST_CASE("malformed blocks are rejected") {
    CHECK_THROWS(parse_expression_blocks("# x=1\n1 * eta_11[2,2]\n1 * eta_22[1,1,1,1]\n"));
    CHECK_THROWS(parse_expression_blocks("# level\n"));
    CHECK_THROWS(parse_expression_blocks("1 * eta_11[2,2]\n"));
    CHECK_THROWS(parse_expression_blocks("# level=11\n1 eta_11[2,2]\n"));
    CHECK(parse_expression_blocks("").empty());
  }

  TEST_CASE("the printed 55.2.a.a row fails and the corrected fourth term fixes it") {
    const TargetForm f = fixture_form("55.2.a.a");
    const TableRow& row = testing::table_row("55.2.a.a");
    REQUIRE(row.expression);
    CHECK_FALSE(verify_expression(*row.expression, f));
    Expression fixed = *row.expression;
    REQUIRE(fixed.terms.size() == 4);
    fixed.terms[3] = {Rational(2), parse_eta_quotient("eta_110[1,1,0,0,0,0,1,1]")};
    CHECK(verify_expression(fixed, f));
  }
}
