#include "doctest.h"

#include "etaforge/cli.hpp"
#include "support.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

using namespace etaforge;
using testing::TempDir;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(const TempDir& cache, std::vector<std::string> args) {
  args.insert(args.begin(), {"etaforge", "--cache-dir", cache.path().string()});
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("enumerate prints the count and writes the cache") {
    TempDir cache("etaforge-cli");
    Run r = run(cache, {"enumerate", "1", "0"});
    CHECK(r.code == 0);
    CHECK(r.out == "1\n");
    r = run(cache, {"enumerate", "32", "2"});
    CHECK(r.out == "131\n");
    CHECK(std::filesystem::exists(cache.path() / "quotients" / "eta_32_2.txt"));
    r = run(cache, {"--json", "enumerate", "32", "2"});
    CHECK(nlohmann::json::parse(r.out)["count"] == 131);
  }

  TEST_CASE("usage errors exit with 2") {
    TempDir cache("etaforge-cli-usage");
    CHECK(run(cache, {}).code == 2);
    CHECK(run(cache, {"enumerate", "0", "2"}).code == 2);
    CHECK(run(cache, {"frobnicate"}).code == 2);
    CHECK(run(cache, {"express", "not-a-label"}).code == 2);
    CHECK(run(cache, {"express", "35.2.a.a", "--strategy", "psychic"}).code == 2);
    const Run r = run(cache, {"verify-zero", "42.2.a.a", "--point", "i", "--tol", "0"});
    CHECK(r.code == 2);
    CHECK(contains(r.err, "tol"));
    CHECK(run(cache, {"verify-zero", "42.2.a.a", "--point", "-i"}).code == 2);
    CHECK(run(cache, {"verify-zero", "42.2.a.a", "--point", "i", "--pairing", "1,1,1,1@1->1"}).code == 2);
  }

  TEST_CASE("express 35.2.a.a gives d = 1 and two terms") {
    TempDir cache("etaforge-cli-express");
    const Run r = run(cache, {"express", "35.2.a.a"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("d=1\n", 0) == 0);
    const std::size_t from = r.out.find('#');
    const auto blocks = parse_expression_blocks(r.out.substr(from, r.out.find("bounds:") - from));
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].expression.length() == 2);
    CHECK(blocks[0].header.at("status") == "proved-minimal");
  }

  TEST_CASE("express 11.2.a.a gives one term") {
    TempDir cache("etaforge-cli-11");
    const Run r = run(cache, {"--json", "express", "11.2.a.a"});
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["d"] == 1);
    CHECK(j["outcome"]["terms"].size() == 1);
  }

  TEST_CASE("express reports forms outside every tried level") {
    TempDir cache("etaforge-cli-none");
    const Run r = run(cache, {"express", "53.2.a.a", "--d-max", "3"});
    CHECK(r.code == 0);
    CHECK(contains(r.out, "no expression for d <= 3"));
  }

  TEST_CASE("human and JSON output agree and are deterministic") {
    TempDir cache("etaforge-cli-det");
    const Run a = run(cache, {"--json", "--seed", "4", "express", "19.2.a.a", "--strategy", "random", "--iterations", "16"});
    const Run b = run(cache, {"--json", "--seed", "4", "--workers", "2", "express", "19.2.a.a", "--strategy", "random",
                              "--iterations", "16"});
    CHECK(a.code == 0);
    auto ja = nlohmann::json::parse(a.out);
    auto jb = nlohmann::json::parse(b.out);
    CHECK(ja == jb);
    const Run h = run(cache, {"--seed", "4", "express", "19.2.a.a", "--strategy", "random", "--iterations", "16"});
    CHECK(contains(h.out, "d=" + std::to_string(ja["d"].get<int>())));
    CHECK(contains(h.out, "n_upper=" + std::to_string(ja["outcome"]["n_upper"].get<int>())));
  }

  TEST_CASE("verify-zero at the special point and at i") {
    TempDir cache("etaforge-cli-zero");
    Run r = run(cache, {"verify-zero", "42.2.a.a", "--point", "1/2 + i/(2*sqrt(21))", "--tol", "1e-10"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("PASS", 0) == 0);
    r = run(cache, {"verify-zero", "42.2.a.a", "--point", "i"});
    CHECK(r.code == 1);
    CHECK(r.out.rfind("FAIL", 0) == 0);
  }

  TEST_CASE("verify-zero with inline terms and pairings") {
    TempDir cache("etaforge-cli-pair");
    const std::string inline_terms = "1 * eta_42[-1,2,2,-1,-1,2,2,-1]; -1 * eta_42[2,-1,-1,2,2,-1,-1,2]";
    Run r = run(cache, {"--json", "verify-zero", inline_terms, "--point", "1/2 + i/(2*sqrt(21))", "--pairing",
                        "1,-11,2,-21@21->1", "--pairing", "3,-22,1,-7@14->6", "--pairing", "7,-11,2,-3@3->7",
                        "--pairing", "21,-22,1,-1@2->42"});
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["pass"] == true);
    CHECK(j["pairings"].size() == 4);
    r = run(cache, {"verify-zero", inline_terms, "--point", "1/2 + i/(2*sqrt(21))", "--pairing", "1,1,0,1@1->1"});
    CHECK(r.code == 1);
  }

  TEST_CASE("verify-tables over the shipped rows, a flipped row and an empty file") {
    TempDir cache("etaforge-cli-tables");
    Run r = run(cache, {"verify-tables"});
    CHECK(contains(r.out, "PASS 42.2.a.a"));
    CHECK(contains(r.out, "FAIL 55.2.a.a"));
    CHECK(r.code == 1);

    const auto flipped = cache.path() / "flipped.txt";
    {
      std::ofstream out(flipped);
      out << "# label=42.2.a.a level=42 d=1 status=check\n"
             "1 * eta_42[-1,2,2,-1,-1,2,2,-1]\n"
             "1 * eta_42[2,-1,-1,2,2,-1,-1,2]\n\n"
             "# label=35.2.a.a level=35 d=1 status=check\n"
             "1 * eta_35[0,2,2,0]\n"
             "1 * eta_35[2,0,0,2]\n";
    }
    r = run(cache, {"verify-tables", flipped.string()});
    CHECK(r.code == 1);
    CHECK(contains(r.out, "FAIL 42.2.a.a"));
    CHECK(contains(r.out, "PASS 35.2.a.a"));

    const auto empty = cache.path() / "empty.txt";
    std::ofstream(empty).close();
    r = run(cache, {"verify-tables", empty.string()});
    CHECK(r.code == 0);
    CHECK(contains(r.out, "0 rows"));
  }

  TEST_CASE("minimize checkpoints and resumes") {
    TempDir cache("etaforge-cli-min");
    const auto ckpt = cache.path() / "run.json";
    Run r = run(cache, {"minimize", "19.2.a.a", "--budget", "1000", "--iterations", "16", "--checkpoint", ckpt.string(),
                        "--checkpoint-secs", "0"});
    CHECK(r.code == 0);
    REQUIRE(std::filesystem::exists(ckpt));
    const auto saved = nlohmann::json::parse(std::ifstream(ckpt));
    CHECK(saved["next_iteration"] == 16);
    r = run(cache, {"minimize", "19.2.a.a", "--budget", "1000", "--iterations", "24", "--checkpoint", ckpt.string()});
    CHECK(r.code == 0);
    CHECK(contains(r.err, "resuming random search at iteration 16"));
    CHECK(run(cache, {"--seed", "9", "minimize", "19.2.a.a", "--budget", "1000", "--iterations", "24", "--checkpoint",
                      ckpt.string()})
              .code == 2);
  }

  TEST_CASE("fetch works offline from fixtures placed in the cache") {
    TempDir cache("etaforge-cli-fetch");
    const FormRecord r = load_form_file(testing::data_dir() / "forms" / "11.2.a.a.json");
    save_form_file(r, cache.path() / "forms" / "11.2.a.a.json");
    Run out = run(cache, {"--offline", "fetch", "11.2.a.a", "--min-coeffs", "50"});
    CHECK(out.code == 0);
    CHECK(contains(out.out, "11.2.a.a: 400 coefficients"));
    out = run(cache, {"--offline", "fetch", "15.2.a.a"});
    CHECK(out.code == 2);
  }
}
