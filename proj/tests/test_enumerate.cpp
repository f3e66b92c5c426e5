#include "doctest.h"

#include "etaforge/arith.hpp"
#include "etaforge/enumerate.hpp"
#include "support.hpp"

#include <algorithm>
#include <fstream>

using namespace etaforge;

TEST_SUITE("enumerate") {
  TEST_CASE("weight 0 at level 1 is the constant alone") {
    const EnumerationResult r = enumerate_eta_quotients(1, 0);
    REQUIRE(r.count() == 1);
    CHECK(r.quotients.front() == EtaQuotient::one(1));
  }

  TEST_CASE("level 32 weight 2 has 131 holomorphic quotients") {
    CHECK(enumerate_eta_quotients(32, 2).count() == 131);
  }

  TEST_CASE("results are sorted, distinct, holomorphic and of the right weight") {
    for (std::int64_t level : {12, 20, 36}) {
      const EnumerationResult r = enumerate_eta_quotients(level, 2);
      CHECK(std::is_sorted(r.quotients.begin(), r.quotients.end()));
      CHECK(std::adjacent_find(r.quotients.begin(), r.quotients.end()) == r.quotients.end());
      for (const EtaQuotient& q : r.quotients) {
        CHECK(is_holomorphic(q));
        CHECK(weight(q) == 2);
      }
    }
  }

  TEST_CASE("a level with no weight-2 quotient gives an empty list") {
    CHECK(enumerate_eta_quotients(2, 2).count() == 0);
  }

  TEST_CASE("worker count does not change the result") {
    EnumerationOptions one;
    EnumerationOptions three;
    three.workers = 3;
    const auto a = enumerate_eta_quotients(48, 2, one);
    const auto b = enumerate_eta_quotients(48, 2, three);
    CHECK(a.quotients == b.quotients);
  }

  TEST_CASE("a tiny node budget raises instead of returning a short list") {
    EnumerationOptions o;
    o.node_budget = 5;
    CHECK_THROWS_AS(enumerate_eta_quotients(32, 2, o), EnumerationBudgetExceeded);
  }

  TEST_CASE("bad arguments") {
    CHECK_THROWS_AS(enumerate_eta_quotients(0, 2), std::invalid_argument);
    CHECK_THROWS_AS(enumerate_eta_quotients(12, -2), std::invalid_argument);
    CHECK_THROWS_AS(enumerate_eta_quotients(11, 1), std::invalid_argument);
  }

  TEST_CASE("cache files round-trip and are reused") {
    testing::TempDir dir("etaforge-enum");
    const EnumerationResult r = cached_enumeration(24, 2, dir.path());
    const auto path = dir.path() / "quotients" / "eta_24_2.txt";
    REQUIRE(std::filesystem::exists(path));
    const EnumerationResult back = load_enumeration(path);
    CHECK(back.level == 24);
    CHECK(back.weight == 2);
    CHECK(back.quotients == r.quotients);
    CHECK(cached_enumeration(24, 2, dir.path()).quotients == r.quotients);
  }

  TEST_CASE("a truncated cache file is rejected") {
    testing::TempDir dir("etaforge-enum-bad");
    const auto path = dir.path() / "bad.txt";
    {
      std::ofstream out(path);
      out << "# level=11 weight=2 count=3\neta_11[2,2]\n";
    }
    CHECK_THROWS(load_enumeration(path));
  }

  TEST_CASE("the box scan oracle agrees on a few small levels") {
    for (std::int64_t level : {6, 10, 16, 18}) {
      const auto bounds = exponent_bounds(level, 2);
      CHECK(box_scan_eta_quotients(level, 2, bounds).quotients == enumerate_eta_quotients(level, 2).quotients);
    }
  }
}
