#include "etaforge/ingest.hpp"

#include "etaforge/arith.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <numeric>
#include <regex>
#include <sstream>

namespace etaforge {

namespace {

using Json = nlohmann::ordered_json;

IngestError schema_error(const std::string& origin, const std::string& why) {
  return IngestError(IngestError::Kind::Schema, origin + ": " + why);
}

std::string now_iso8601() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// One writer at a time for cache and fixture files within the process.
std::mutex& write_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::string to_string(FormSource s) {
  switch (s) {
    case FormSource::Lmfdb:
      return "lmfdb";
    case FormSource::File:
      return "file";
    case FormSource::Fixture:
      return "fixture";
  }
  return "file";
}

FormSource parse_form_source(const std::string& text) {
  for (FormSource s : {FormSource::Lmfdb, FormSource::File, FormSource::Fixture}) {
    if (text == to_string(s)) {
      return s;
    }
  }
  throw std::invalid_argument("unknown form source '" + text + "'");
}

TargetForm to_target(const FormRecord& r) {
  TargetForm f;
  f.label = r.label;
  f.level = r.level;
  f.weight = r.weight;
  f.an.reserve(r.an.size());
  for (std::int64_t a : r.an) {
    f.an.emplace_back(static_cast<long>(a));
  }
  return f;
}

ParsedLabel parse_label(const std::string& label) {
  static const std::regex pattern(R"(^([1-9][0-9]*)\.([1-9][0-9]*)\.([a-z]+)\.([a-z]+)$)");
  std::smatch m;
  if (!std::regex_match(label, m, pattern)) {
    throw IngestError(IngestError::Kind::BadLabel,
                      "malformed newform label '" + label + "' (expected <level>.<weight>.<char>.<iso>, e.g. 11.2.a.a)");
  }
  ParsedLabel out;
  try {
    out.level = std::stoll(m[1].str());
    out.weight = std::stoi(m[2].str());
  } catch (const std::out_of_range&) {
    throw IngestError(IngestError::Kind::BadLabel, "label '" + label + "' has an out-of-range level or weight");
  }
  out.character = m[3].str();
  out.orbit = m[4].str();
  return out;
}

bool is_multiplicative(const std::vector<std::int64_t>& an) {
  const auto len = static_cast<std::int64_t>(an.size());
  for (std::int64_t m = 2; m * m <= len; ++m) {
    for (std::int64_t n = m + 1; m * n <= len; ++n) {
      if (std::gcd(m, n) != 1) {
        continue;
      }
      const __int128 prod = static_cast<__int128>(an[static_cast<std::size_t>(m - 1)]) * an[static_cast<std::size_t>(n - 1)];
      if (prod != an[static_cast<std::size_t>(m * n - 1)]) {
        return false;
      }
    }
  }
  return true;
}

void check_record(const FormRecord& r) {
  const ParsedLabel p = parse_label(r.label);
  const auto fail = [&](const std::string& why) { return IngestError(IngestError::Kind::Invariant, r.label + ": " + why); };
  if (p.level != r.level) {
    throw fail("label level " + std::to_string(p.level) + " differs from level field " + std::to_string(r.level));
  }
  if (p.weight != r.weight) {
    throw fail("label weight " + std::to_string(p.weight) + " differs from weight field " + std::to_string(r.weight));
  }
  if (p.character != "a") {
    throw fail("only trivial character is supported");
  }
  if (r.an.empty()) {
    throw fail("no coefficients");
  }
  if (r.an[0] != 1) {
    throw fail("a_1 = " + std::to_string(r.an[0]) + ", expected 1");
  }
  if (!is_multiplicative(r.an)) {
    throw fail("coefficients are not multiplicative (a_mn != a_m a_n for some coprime m, n)");
  }
}

std::string format_form_json(const FormRecord& r) {
  Json j;
  j["label"] = r.label;
  j["level"] = r.level;
  j["weight"] = r.weight;
  j["an"] = r.an;
  j["source"] = to_string(r.source);
  if (!r.fetched_at.empty()) {
    j["fetched_at"] = r.fetched_at;
  }
  return j.dump() + "\n";
}

FormRecord parse_form_json(const std::string& text, const std::string& origin) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw schema_error(origin, "line " + std::to_string(line) + ": invalid JSON (" + e.what() + ")");
  }
  if (!j.is_object()) {
    throw schema_error(origin, "top level is not a JSON object");
  }
  const auto field = [&](const char* name) -> const Json& {
    if (!j.contains(name)) {
      throw schema_error(origin, std::string("missing field '") + name + "'");
    }
    return j.at(name);
  };
  FormRecord r;
  const Json& label = field("label");
  if (!label.is_string()) {
    throw schema_error(origin, "field 'label' must be a string");
  }
  r.label = label.get<std::string>();
  const Json& level = field("level");
  const Json& weight = field("weight");
  if (!level.is_number_integer() || !weight.is_number_integer()) {
    throw schema_error(origin, "fields 'level' and 'weight' must be integers");
  }
  r.level = level.get<std::int64_t>();
  r.weight = weight.get<int>();
  const Json& an = field("an");
  if (!an.is_array()) {
    throw schema_error(origin, "field 'an' must be an array of integers");
  }
  for (std::size_t i = 0; i < an.size(); ++i) {
    if (!an[i].is_number_integer()) {
      throw schema_error(origin, "field 'an' entry " + std::to_string(i) + " (a_" + std::to_string(i + 1) +
                                     ") is not an integer");
    }
    r.an.push_back(an[i].get<std::int64_t>());
  }
  if (j.contains("source")) {
    if (!j["source"].is_string()) {
      throw schema_error(origin, "field 'source' must be a string");
    }
    try {
      r.source = parse_form_source(j["source"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw schema_error(origin, std::string("field 'source': ") + e.what());
    }
  }
  if (j.contains("fetched_at")) {
    if (!j["fetched_at"].is_string()) {
      throw schema_error(origin, "field 'fetched_at' must be a string");
    }
    r.fetched_at = j["fetched_at"].get<std::string>();
  }
  try {
    check_record(r);
  } catch (const IngestError& e) {
    throw IngestError(e.kind(), origin + ": " + e.what());
  }
  return r;
}

FormRecord load_form_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IngestError(IngestError::Kind::NotFound, "cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_form_json(buf.str(), path.string());
}

void save_form_file(const FormRecord& r, const std::filesystem::path& path) {
  check_record(r);
  const std::lock_guard lock(write_mutex());
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << format_form_json(r);
    out.flush();
    if (!out) {
      throw std::runtime_error("cannot write " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::filesystem::path default_cache_dir() {
  if (const char* env = std::getenv("ETAFORGE_CACHE"); env && *env) {
    return env;
  }
  if (const char* xdg = std::getenv("XDG_DATA_HOME"); xdg && *xdg) {
    return std::filesystem::path(xdg) / "etaforge";
  }
  if (const char* home = std::getenv("HOME"); home && *home) {
    return std::filesystem::path(home) / ".local" / "share" / "etaforge";
  }
  return std::filesystem::temp_directory_path() / "etaforge";
}

std::string default_lmfdb_url() {
  if (const char* env = std::getenv("ETAFORGE_LMFDB_URL"); env && *env) {
    return env;
  }
  return "https://www.lmfdb.org";
}

namespace {

std::filesystem::path cache_path(const std::filesystem::path& dir, const std::string& label) {
  return dir / "forms" / (label + ".json");
}

// Splits "scheme://host[:port][/prefix]" into the httplib client address and a path prefix.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', start);
  if (slash == std::string::npos) {
    return {url, ""};
  }
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') {
    prefix.pop_back();
  }
  return {url.substr(0, slash), prefix};
}

FormRecord query_lmfdb(const std::string& label, std::int64_t min_coeffs, const FetchOptions& options) {
  const ParsedLabel parsed = parse_label(label);
  const std::string base = options.base_url.empty() ? default_lmfdb_url() : options.base_url;
  const auto [address, prefix] = split_url(base);
  httplib::Client client(address);
  if (!client.is_valid()) {
    throw IngestError(IngestError::Kind::Network, "cannot use LMFDB address '" + base + "'");
  }
  client.set_connection_timeout(options.timeout_secs, 0);
  client.set_read_timeout(options.timeout_secs, 0);
  client.set_follow_location(true);
  const std::string path =
      prefix + "/api/mf_newforms/?label=" + label + "&_format=json&_fields=label,level,weight,dim,char_orbit_label,traces";
  const httplib::Result res = client.Get(path);
  if (!res) {
    throw IngestError(IngestError::Kind::Network,
                      "request to " + base + path + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 404) {
    throw IngestError(IngestError::Kind::NotFound, "LMFDB has no newform " + label);
  }
  if (res->status != 200) {
    throw IngestError(IngestError::Kind::Network, "LMFDB answered HTTP " + std::to_string(res->status) + " for " + label);
  }
  Json body;
  try {
    body = Json::parse(res->body);
  } catch (const Json::parse_error& e) {
    throw IngestError(IngestError::Kind::Network, "LMFDB reply for " + label + " is not JSON: " + e.what());
  }
  if (!body.contains("data") || !body["data"].is_array()) {
    throw IngestError(IngestError::Kind::Network, "LMFDB reply for " + label + " has no data array");
  }
  const Json* found = nullptr;
  for (const Json& row : body["data"]) {
    if (row.is_object() && row.value("label", "") == label) {
      found = &row;
    }
  }
  if (!found) {
    throw IngestError(IngestError::Kind::NotFound, "LMFDB has no newform " + label);
  }
  if (found->contains("dim") && (*found)["dim"] != 1) {
    throw IngestError(IngestError::Kind::Unavailable, label + " does not have rational coefficients");
  }
  if (!found->contains("traces") || !(*found)["traces"].is_array()) {
    throw IngestError(IngestError::Kind::Unavailable, "LMFDB record for " + label + " has no coefficient list");
  }
  const Json& traces = (*found)["traces"];
  if (static_cast<std::int64_t>(traces.size()) < min_coeffs) {
    throw IngestError(IngestError::Kind::Unavailable, "LMFDB lists " + std::to_string(traces.size()) +
                                                          " coefficients of " + label + ", " + std::to_string(min_coeffs) +
                                                          " requested");
  }
  FormRecord r;
  r.label = label;
  r.level = parsed.level;
  r.weight = parsed.weight;
  r.source = FormSource::Lmfdb;
  for (std::int64_t i = 0; i < min_coeffs; ++i) {
    const Json& t = traces[static_cast<std::size_t>(i)];
    if (!t.is_number_integer()) {
      throw IngestError(IngestError::Kind::Unavailable,
                        label + ": coefficient a_" + std::to_string(i + 1) + " is not a rational integer");
    }
    r.an.push_back(t.get<std::int64_t>());
  }
  check_record(r);
  return r;
}

}  // namespace

FormRecord fetch_newform(const std::string& label, std::int64_t min_coeffs, const FetchOptions& options) {
  parse_label(label);
  if (min_coeffs < 1) {
    throw std::invalid_argument("fetch_newform: min_coeffs must be positive");
  }
  const std::filesystem::path dir = options.cache_dir ? *options.cache_dir : default_cache_dir();
  const std::filesystem::path file = cache_path(dir, label);
  if (std::filesystem::exists(file)) {
    FormRecord cached = load_form_file(file);
    if (static_cast<std::int64_t>(cached.an.size()) >= min_coeffs) {
      return cached;
    }
  }
  if (options.offline) {
    throw IngestError(IngestError::Kind::Unavailable,
                      label + ": not cached with " + std::to_string(min_coeffs) + " coefficients and offline mode is on");
  }
  FormRecord fresh = query_lmfdb(label, min_coeffs, options);
  save_form_file(fresh, file);
  fresh.fetched_at = now_iso8601();
  return fresh;
}

FormRecord load_form(const std::string& label, std::int64_t min_coeffs,
                     const std::vector<std::filesystem::path>& fixture_dirs, const FetchOptions& options) {
  parse_label(label);
  for (const auto& dir : fixture_dirs) {
    const std::filesystem::path file = dir / (label + ".json");
    if (std::filesystem::exists(file)) {
      FormRecord r = load_form_file(file);
      if (static_cast<std::int64_t>(r.an.size()) >= min_coeffs) {
        return r;
      }
    }
  }
  return fetch_newform(label, min_coeffs, options);
}

}  // namespace etaforge
