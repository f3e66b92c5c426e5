#include "doctest.h"

#include "etaforge/ingest.hpp"
#include "support.hpp"

// Same configuration as the library build, so both see one definition of the client classes.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

using namespace etaforge;
using testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// A stand-in for the LMFDB newform API, serving the shipped fixtures.
class MockLmfdb {
 public:
  MockLmfdb() {
    server_.Get("/api/mf_newforms/", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      const std::string label = req.get_param_value("label");
      if (label == "500.2.a.a") {
        res.status = 500;
        return;
      }
      nlohmann::json body{{"data", nlohmann::json::array()}};
      const auto file = testing::data_dir() / "forms" / (label + ".json");
      if (std::filesystem::exists(file)) {
        const FormRecord r = load_form_file(file);
        std::vector<std::int64_t> traces = r.an;
        if (label == "11.2.a.a") {
          traces.resize(100);
        }
        if (label == "14.2.a.a") {
          traces[5] += 1;  // breaks multiplicativity at a_6
        }
        body["data"].push_back({{"label", r.label},
                                {"level", r.level},
                                {"weight", r.weight},
                                {"dim", 1},
                                {"char_orbit_label", "a"},
                                {"traces", traces}});
      }
      res.set_content(body.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockLmfdb() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
};

}  // namespace

TEST_SUITE("ingest") {
  TEST_CASE("labels") {
    const ParsedLabel p = parse_label("96.2.a.b");
    CHECK(p.level == 96);
    CHECK(p.weight == 2);
    CHECK(p.character == "a");
    CHECK(p.orbit == "b");
    CHECK_THROWS_AS(parse_label("96.2.a"), IngestError);
    CHECK_THROWS_AS(parse_label("96.2.A.b"), IngestError);
    CHECK_THROWS_AS(parse_label("../etc.2.a.a"), IngestError);
  }

  TEST_CASE("every shipped fixture passes the record checks") {
    int count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(testing::data_dir() / "forms")) {
      const FormRecord r = load_form_file(entry.path());
      CHECK_NOTHROW(check_record(r));
      CHECK(r.an.size() >= 400);
      ++count;
    }
    CHECK(count == 93);
  }

  TEST_CASE("JSON records round-trip byte for byte") {
    const FormRecord r = load_form_file(testing::data_dir() / "forms" / "37.2.a.a.json");
    const std::string text = format_form_json(r);
    CHECK(parse_form_json(text) == r);
    CHECK(format_form_json(parse_form_json(text)) == text);
  }

  TEST_CASE("schema and invariant errors name the problem") {
    const auto kind_of = [](const std::string& text) {
      try {
        parse_form_json(text, "t.json");
      } catch (const IngestError& e) {
        return e.kind();
      }
      FAIL("no error for " << text);
      return IngestError::Kind::Network;
    };
    CHECK(kind_of("{") == IngestError::Kind::Schema);
    CHECK(kind_of(R"({"label":"11.2.a.a","level":11,"weight":2})") == IngestError::Kind::Schema);
    CHECK(kind_of(R"({"label":"11.2.a.a","level":11,"weight":2,"an":[1,"x"],"source":"file"})") == IngestError::Kind::Schema);
    CHECK(kind_of(R"({"label":"11.2.a.a","level":11,"weight":2,"an":[2,-2],"source":"file"})") == IngestError::Kind::Invariant);
    CHECK(kind_of(R"({"label":"11.2.a.a","level":12,"weight":2,"an":[1,-2],"source":"file"})") == IngestError::Kind::Invariant);
    CHECK(kind_of(R"({"label":"11.2.a.a","level":11,"weight":2,"an":[1,-2,-1,2,1,3],"source":"file"})") ==
          IngestError::Kind::Invariant);
    try {
      parse_form_json(R"({"label":"11.2.a.a","level":11,"weight":2,"an":[1,"x"],"source":"file"})", "t.json");
    } catch (const IngestError& e) {
      CHECK(std::string(e.what()).find("t.json") != std::string::npos);
      CHECK(std::string(e.what()).find("an") != std::string::npos);
    }
  }

  TEST_CASE("multiplicativity") {
    CHECK(is_multiplicative({1, -2, -1, 2, 1, 2}));
    CHECK_FALSE(is_multiplicative({1, -2, -1, 2, 1, 3}));
  }

  TEST_CASE("fetching from a mock server, then from the cache") {
    MockLmfdb server;
    TempDir cache("etaforge-fetch");
    FetchOptions o;
    o.cache_dir = cache.path();
    o.base_url = server.url();
    o.timeout_secs = 5;
    const FormRecord r = fetch_newform("37.2.a.a", 400, o);
    CHECK(r.source == FormSource::Lmfdb);
    CHECK_FALSE(r.fetched_at.empty());
    CHECK(r.an == load_form_file(testing::data_dir() / "forms" / "37.2.a.a.json").an);
    CHECK(server.requests() == 1);

    const auto file = cache.path() / "forms" / "37.2.a.a.json";
    const std::string first = slurp(file);
    const FormRecord again = fetch_newform("37.2.a.a", 400, o);
    CHECK(server.requests() == 1);
    CHECK(again.an == r.an);
    CHECK(slurp(file) == first);

    o.offline = true;
    CHECK(fetch_newform("37.2.a.a", 300, o).an.size() == 400);
  }

  TEST_CASE("mock server failure modes") {
    MockLmfdb server;
    TempDir cache("etaforge-fetch-errors");
    FetchOptions o;
    o.cache_dir = cache.path();
    o.base_url = server.url();
    o.timeout_secs = 5;
    const auto kind_of = [&](const std::string& label, std::int64_t n) {
      try {
        fetch_newform(label, n, o);
      } catch (const IngestError& e) {
        return e.kind();
      }
      FAIL("no error for " << label);
      return IngestError::Kind::Schema;
    };
    CHECK(kind_of("9999.2.a.a", 10) == IngestError::Kind::NotFound);
    CHECK(kind_of("11.2.a.a", 400) == IngestError::Kind::Unavailable);
    CHECK(kind_of("14.2.a.a", 100) == IngestError::Kind::Invariant);
    CHECK(kind_of("500.2.a.a", 10) == IngestError::Kind::Network);
    CHECK_FALSE(std::filesystem::exists(cache.path() / "forms" / "14.2.a.a.json"));
    o.offline = true;
    CHECK(kind_of("15.2.a.a", 10) == IngestError::Kind::Unavailable);
  }

  TEST_CASE("an unreachable server is a network error") {
    TempDir cache("etaforge-fetch-down");
    FetchOptions o;
    o.cache_dir = cache.path();
    o.base_url = "http://127.0.0.1:1";
    o.timeout_secs = 2;
    try {
      fetch_newform("11.2.a.a", 10, o);
      FAIL("expected an error");
    } catch (const IngestError& e) {
      CHECK(e.kind() == IngestError::Kind::Network);
    }
  }

  TEST_CASE("fixtures take precedence over the network") {
    TempDir cache("etaforge-load");
    FetchOptions o;
    o.cache_dir = cache.path();
    o.offline = true;
    const FormRecord r = load_form("42.2.a.a", 100, {testing::data_dir() / "forms"}, o);
    CHECK(r.source == FormSource::Fixture);
    CHECK(to_target(r).an.size() == r.an.size());
  }
}
