#include "etaforge/cli.hpp"

#include "etaforge/analytic.hpp"
#include "etaforge/arith.hpp"
#include "etaforge/enumerate.hpp"
#include "etaforge/ingest.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#ifndef ETAFORGE_DATA_DIR
#define ETAFORGE_DATA_DIR "data"
#endif

namespace etaforge {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Table fixture

namespace {

std::optional<std::int64_t> header_int(const std::map<std::string, std::string>& h, const std::string& key,
                                       const std::string& label) {
  const auto it = h.find(key);
  if (it == h.end() || it->second.empty()) {
    return std::nullopt;
  }
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(it->second, &used);
    if (used == it->second.size()) {
      return v;
    }
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("table row " + label + ": field " + key + "='" + it->second + "' is not an integer");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::vector<TableRow> parse_table(const std::string& text) {
  std::vector<TableRow> rows;
  for (ExpressionBlock& block : parse_expression_blocks(text)) {
    TableRow row;
    const auto& h = block.header;
    const auto label = h.find("label");
    if (label == h.end()) {
      throw std::invalid_argument("table block without a label");
    }
    row.label = label->second;
    row.level = header_int(h, "level", row.label).value_or(0);
    if (row.level <= 0) {
      throw std::invalid_argument("table row " + row.label + ": missing level");
    }
    if (const auto d = h.find("d"); d != h.end()) {
      if (d->second.rfind(">=", 0) == 0) {
        std::map<std::string, std::string> tmp{{"d", d->second.substr(2)}};
        row.d_lower = header_int(tmp, "d", row.label);
      } else {
        row.d = header_int(h, "d", row.label);
      }
    }
    row.status = h.count("status") ? h.at("status") : "";
    row.n_lower = header_int(h, "n_lower", row.label);
    row.n_upper = header_int(h, "n_upper", row.label);
    row.source = h.count("source") ? h.at("source") : "";
    if (!block.expression.terms.empty()) {
      if (row.d && block.expression.level != row.level * *row.d) {
        throw std::invalid_argument("table row " + row.label + ": expression level disagrees with d");
      }
      row.expression = std::move(block.expression);
    } else if (!row.d && !row.d_lower) {
      throw std::invalid_argument("table row " + row.label + ": neither an expression nor a bound on d");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<TableRow> load_table(const std::filesystem::path& path) { return parse_table(read_file(path)); }

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("ETAFORGE_DATA"); env && *env) {
    return env;
  }
  return ETAFORGE_DATA_DIR;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct Globals {
  int workers = 1;
  std::uint64_t seed = 1;
  bool json = false;
  std::string cache_dir;
  std::string data_dir;
  int timeout_secs = 30;
  bool offline = false;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Env {
  Globals g;
  std::ostream& out;
  std::ostream& err;

  std::filesystem::path data() const { return g.data_dir.empty() ? default_data_dir() : std::filesystem::path(g.data_dir); }
  std::filesystem::path cache() const { return g.cache_dir.empty() ? default_cache_dir() : std::filesystem::path(g.cache_dir); }
  FetchOptions fetch() const {
    FetchOptions o;
    o.cache_dir = cache();
    o.timeout_secs = g.timeout_secs;
    o.offline = g.offline;
    return o;
  }
  TargetForm form(const std::string& label, std::int64_t min_coeffs) const {
    return to_target(load_form(label, min_coeffs, {data() / "forms"}, fetch()));
  }
  void emit(const Json& j) const { out << j.dump() << "\n"; }
};

Json outcome_json(const SearchOutcome& o) {
  Json j;
  j["status"] = to_string(o.status);
  j["n_lower"] = o.n_lower == kUnreachable ? Json("inf") : Json(o.n_lower);
  j["n_upper"] = o.n_upper;
  if (o.best) {
    j["level"] = o.best->level;
    Json terms = Json::array();
    for (const Term& t : o.best->terms) {
      terms.push_back({{"coef", to_string(t.coef)}, {"quotient", to_string(t.quotient)}});
    }
    j["terms"] = terms;
  }
  j["spent"] = {{"subsets", o.spent.subsets}, {"iterations", o.spent.iterations}, {"exact_checks", o.spent.exact_checks}};
  return j;
}

/// Strictly shorter-or-lighter candidate replaces the record; ties keep the record.
void merge_best(SearchOutcome& into, const SearchOutcome& from) {
  into.spent.subsets += from.spent.subsets;
  into.spent.iterations += from.spent.iterations;
  into.spent.exact_checks += from.spent.exact_checks;
  if (!from.best) {
    return;
  }
  if (!into.best || size_order(*from.best, *into.best) == SizeOrder::Smaller) {
    into.best = from.best;
    into.n_upper = from.n_upper;
    into.exhaustive_at_upper = from.exhaustive_at_upper;
    if (into.status == SearchStatus::NoneFound) {
      into.status = SearchStatus::Bounded;
    }
  }
}

int cmd_enumerate(const Env& env, std::int64_t level, int weight, const std::string& out_path) {
  EnumerationOptions options;
  options.workers = env.g.workers;
  const auto start = std::chrono::steady_clock::now();
  const EnumerationResult r = enumerate_eta_quotients(level, weight, options);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::filesystem::path path;
  if (!out_path.empty()) {
    path = out_path;
  } else {
    path = env.cache() / "quotients" / ("eta_" + std::to_string(level) + "_" + std::to_string(weight) + ".txt");
  }
  save_enumeration(r, path);
  if (env.g.json) {
    env.emit({{"level", level}, {"weight", weight}, {"count", r.count()}, {"path", path.string()}, {"seconds", secs}});
  } else {
    env.out << r.count() << "\n";
    env.err << "level " << level << ", weight " << weight << ": " << r.count() << " holomorphic eta quotients, written to "
            << path.string() << "\n";
  }
  return 0;
}

struct SearchFlags {
  std::string strategy = "exhaustive";
  std::int64_t budget = 100'000'000;
  std::int64_t iterations = 2000;
};

SearchOutcome run_strategy(const Env& env, const TargetForm& f, const QuotientTable& table, const SearchFlags& flags) {
  if (flags.strategy == "exhaustive") {
    ExhaustiveOptions o;
    o.subset_budget = flags.budget;
    o.workers = env.g.workers;
    return exhaustive_search(f, table, o);
  }
  if (flags.strategy == "random") {
    RandomOptions o;
    o.workers = env.g.workers;
    return random_search(f, table, flags.iterations, env.g.seed, o);
  }
  if (flags.strategy == "permutation") {
    return permutation_search(f, table, flags.budget);
  }
  if (flags.strategy == "none") {
    SearchOutcome o;
    if (auto e = find_any_expression(f, table)) {
      o.best = std::move(e);
      o.n_upper = static_cast<std::int64_t>(o.best->length());
      o.status = SearchStatus::Bounded;
    }
    return o;
  }
  throw UsageError("unknown strategy '" + flags.strategy + "' (exhaustive, random, permutation, none)");
}

std::optional<LevelMultiplier> level_for(const Env& env, const TargetForm& f, std::int64_t d_max) {
  LevelOptions lo;
  lo.cache_dir = env.cache();
  lo.enumeration.workers = env.g.workers;
  lo.on_level = [&](std::int64_t d, bool ok) {
    if (!env.g.json) {
      env.err << "  d=" << d << " (level " << f.level * d << "): " << (ok ? "expressible" : "not in span") << "\n";
    }
  };
  return minimal_level_multiplier(f, d_max, lo);
}

QuotientTable table_at(const Env& env, const TargetForm& f, std::int64_t level) {
  EnumerationOptions eo;
  eo.workers = env.g.workers;
  const EnumerationResult q = cached_enumeration(level, f.weight, env.cache(), eo);
  return QuotientTable(q, sturm_bound(level, f.weight), env.g.workers);
}

void print_outcome(const Env& env, const std::string& label, std::int64_t d, const SearchOutcome& o) {
  if (env.g.json) {
    Json j{{"label", label}, {"d", d}};
    j["outcome"] = outcome_json(o);
    env.emit(j);
    return;
  }
  env.out << "d=" << d << "\n" << format_block(outcome_block(label, o));
  env.out << "bounds: " << (o.n_lower == kUnreachable ? std::string("inf") : std::to_string(o.n_lower))
          << " <= n <= " << o.n_upper << " (" << to_string(o.status) << ")\n";
}

int cmd_express(const Env& env, const std::string& label, std::int64_t d_max, const SearchFlags& flags) {
  const TargetForm f = env.form(label, 1);
  const std::optional<LevelMultiplier> lm = level_for(env, f, d_max);
  if (!lm) {
    if (env.g.json) {
      env.emit({{"label", label}, {"d_max", d_max}, {"expressible", false}});
    } else {
      env.out << "no expression for d <= " << d_max << "\n";
    }
    return 0;
  }
  const QuotientTable table = table_at(env, f, f.level * lm->d);
  SearchOutcome o = run_strategy(env, f, table, flags);
  if (!o.best) {
    o.best = lm->expression;
    o.n_upper = static_cast<std::int64_t>(lm->expression.length());
    o.status = SearchStatus::Bounded;
  }
  o = certify(apply_single_quotient_exclusion(o, f));
  print_outcome(env, label, lm->d, o);
  return 0;
}

// Checkpoint: the random-search record and the next iteration to run.
struct Checkpoint {
  std::string label;
  std::int64_t level = 0;
  std::uint64_t seed = 0;
  std::int64_t next_iteration = 0;
  std::optional<Expression> best;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  Json j{{"label", c.label}, {"level", c.level}, {"seed", c.seed}, {"next_iteration", c.next_iteration}};
  j["best"] = c.best ? format_expression(*c.best) : "";
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

std::optional<Checkpoint> read_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    return std::nullopt;
  }
  const Json j = Json::parse(read_file(path));
  Checkpoint c;
  c.label = j.at("label").get<std::string>();
  c.level = j.at("level").get<std::int64_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.next_iteration = j.at("next_iteration").get<std::int64_t>();
  const std::string best = j.at("best").get<std::string>();
  if (!best.empty()) {
    auto blocks = parse_expression_blocks("# source=checkpoint\n" + best);
    c.best = std::move(blocks.front().expression);
  }
  return c;
}

int cmd_minimize(const Env& env, const std::string& label, std::int64_t d, std::int64_t d_max, const SearchFlags& flags,
                 const std::string& checkpoint_path, double checkpoint_secs) {
  const TargetForm f = env.form(label, 1);
  if (d <= 0) {
    const std::optional<LevelMultiplier> lm = level_for(env, f, d_max);
    if (!lm) {
      if (env.g.json) {
        env.emit({{"label", label}, {"d_max", d_max}, {"expressible", false}});
      } else {
        env.out << "no expression for d <= " << d_max << "\n";
      }
      return 0;
    }
    d = lm->d;
  }
  const std::int64_t level = f.level * d;
  const QuotientTable table = table_at(env, f, level);

  ExhaustiveOptions eo;
  eo.subset_budget = flags.budget;
  eo.workers = env.g.workers;
  SearchOutcome result = exhaustive_search(f, table, eo);
  if (result.n_lower == kUnreachable) {
    print_outcome(env, label, d, result);
    return 0;
  }
  if (result.status != SearchStatus::ProvedMinimal) {
    merge_best(result, permutation_search(f, table, flags.budget));

    RandomOptions ro;
    ro.workers = env.g.workers;
    ro.incumbent = result.best;
    std::int64_t remaining = flags.iterations;
    std::optional<Checkpoint> resume;
    if (!checkpoint_path.empty()) {
      resume = read_checkpoint(checkpoint_path);
      if (resume && (resume->label != label || resume->level != level || resume->seed != env.g.seed)) {
        throw UsageError("checkpoint " + checkpoint_path + " belongs to another run");
      }
    }
    if (resume) {
      ro.first_iteration = resume->next_iteration;
      remaining = std::max<std::int64_t>(0, flags.iterations - resume->next_iteration);
      if (resume->best && (!ro.incumbent || size_order(*resume->best, *ro.incumbent) == SizeOrder::Smaller)) {
        ro.incumbent = resume->best;
      }
      if (!env.g.json) {
        env.err << "resuming random search at iteration " << resume->next_iteration << "\n";
      }
    }
    auto last = std::chrono::steady_clock::now();
    ro.on_progress = [&](const SearchOutcome& o, std::int64_t next) {
      const auto now = std::chrono::steady_clock::now();
      if (!checkpoint_path.empty() &&
          (std::chrono::duration<double>(now - last).count() >= checkpoint_secs || next == flags.iterations)) {
        write_checkpoint(checkpoint_path, Checkpoint{label, level, env.g.seed, next, o.best});
        last = now;
      }
    };
    merge_best(result, random_search(f, table, remaining, env.g.seed, ro));
  }
  result = certify(apply_single_quotient_exclusion(result, f));
  print_outcome(env, label, d, result);
  return 0;
}

int cmd_verify_tables(const Env& env, const std::string& table_path, bool check_bounds, std::int64_t max_level) {
  const std::filesystem::path path = table_path.empty() ? env.data() / "tables" / "tables.txt" : std::filesystem::path(table_path);
  const std::vector<TableRow> rows = load_table(path);
  int passed = 0;
  int failed = 0;
  int skipped = 0;
  Json report = Json::array();
  const auto note = [&](const TableRow& row, const std::string& verdict, const std::string& detail) {
    if (verdict == "pass") {
      ++passed;
    } else if (verdict == "fail") {
      ++failed;
    } else {
      ++skipped;
    }
    if (env.g.json) {
      report.push_back({{"label", row.label}, {"result", verdict}, {"detail", detail}});
    } else {
      std::string tag = verdict;
      std::transform(tag.begin(), tag.end(), tag.begin(), ::toupper);
      env.out << tag << " " << row.label << ": " << detail << "\n";
    }
  };
  for (const TableRow& row : rows) {
    if (row.expression) {
      const std::int64_t bound = sturm_bound(row.expression->level, 2);
      const TargetForm f = env.form(row.label, bound);
      bool ok = false;
      std::string detail;
      try {
        ok = verify_expression(*row.expression, f);
        detail = std::to_string(row.expression->length()) + " terms at level " + std::to_string(row.expression->level) +
                 ", coefficients match to q^" + std::to_string(bound);
        if (!ok) {
          detail = "expression at level " + std::to_string(row.expression->level) + " disagrees with the form below q^" +
                   std::to_string(bound + 1);
        }
      } catch (const std::exception& e) {
        detail = e.what();
      }
      note(row, ok ? "pass" : "fail", detail);
      continue;
    }
    if (!check_bounds) {
      note(row, "skip", "no expression; bound checks not requested");
      continue;
    }
    const std::int64_t below = row.d ? *row.d - 1 : *row.d_lower - 1;
    const std::int64_t top = row.d ? *row.d : below;
    if (row.level * top > max_level) {
      note(row, "skip", "needs level " + std::to_string(row.level * top) + " > --max-level");
      continue;
    }
    const TargetForm f = env.form(row.label, sturm_bound(row.level * top, 2));
    const std::optional<LevelMultiplier> lm = below >= 1 ? level_for(env, f, below) : std::nullopt;
    if (lm) {
      note(row, "fail", "expressible already at d = " + std::to_string(lm->d));
      continue;
    }
    if (row.d) {
      const QuotientTable table = table_at(env, f, row.level * *row.d);
      const bool found = find_any_expression(f, table).has_value();
      note(row, found ? "pass" : "fail",
           found ? "least d is " + std::to_string(*row.d) : "not expressible at d = " + std::to_string(*row.d));
    } else {
      note(row, "pass", "not expressible for d <= " + std::to_string(below));
    }
  }
  if (env.g.json) {
    env.emit({{"table", path.string()}, {"passed", passed}, {"failed", failed}, {"skipped", skipped}, {"rows", report}});
  } else {
    env.out << rows.size() << " rows: " << passed << " passed, " << failed << " failed, " << skipped << " skipped\n";
  }
  return failed == 0 ? 0 : 1;
}

// "a,b,c,d@k->m": the matrix maps k*w to m*w.
struct Pairing {
  ModularMatrix g;
  std::int64_t from = 1;
  std::int64_t to = 1;
  std::string text;
};

Pairing parse_pairing(const std::string& text) {
  static const std::regex pattern(R"(^\s*(-?\d+),(-?\d+),(-?\d+),(-?\d+)@(\d+)->(\d+)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) {
    throw UsageError("pairing '" + text + "' is not of the form a,b,c,d@k->m");
  }
  Pairing p{{std::stoll(m[1]), std::stoll(m[2]), std::stoll(m[3]), std::stoll(m[4])}, std::stoll(m[5]), std::stoll(m[6]), text};
  try {
    p.g.check();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return p;
}

Expression resolve_expression(const Env& env, const std::string& target) {
  static const std::regex label_pattern(R"(^\d+\.\d+\.[a-z]+\.[a-z]+$)");
  if (std::regex_match(target, label_pattern)) {
    for (const TableRow& row : load_table(env.data() / "tables" / "tables.txt")) {
      if (row.label == target) {
        if (!row.expression) {
          throw UsageError("the table has no expression for " + target);
        }
        return *row.expression;
      }
    }
    throw UsageError("no table row for " + target);
  }
  std::string text;
  if (std::filesystem::exists(target)) {
    text = read_file(target);
  } else {
    text = target;
    std::replace(text.begin(), text.end(), ';', '\n');
  }
  if (text.find('#') == std::string::npos) {
    text = "# source=inline\n" + text;
  }
  auto blocks = parse_expression_blocks(text);
  if (blocks.empty() || blocks.front().expression.terms.empty()) {
    throw UsageError("no expression terms in '" + target + "'");
  }
  return blocks.front().expression;
}

int cmd_verify_zero(const Env& env, const std::string& target, const std::string& point_text, double tol,
                    const std::vector<std::string>& pairings) {
  if (!(tol > 0.0)) {
    throw UsageError("--tol must be positive");
  }
  const UpperHalfPoint z = parse_point(point_text);
  const Expression e = resolve_expression(env, target);
  const NumericValue v = eval_expression(e, z, 40, tol);
  const bool zero = std::abs(v.value) < tol;
  bool all = zero;
  Json checks = Json::array();
  for (const std::string& text : pairings) {
    const Pairing p = parse_pairing(text);
    const UpperHalfPoint from = make_point(static_cast<double>(p.from) * z.z());
    const Complex image = p.g.act(from.z());
    const bool maps = std::abs(image - static_cast<double>(p.to) * z.z()) < tol * std::max(1.0, std::abs(image));
    const bool law = eta_transform_check(p.g, from, tol);
    const Complex factor = eta_transform_factor(p.g, from.z());
    all = all && maps && law;
    if (env.g.json) {
      checks.push_back({{"pairing", text}, {"maps", maps}, {"transform", law}, {"factor", format_complex(factor)}});
    } else {
      env.out << (maps && law ? "PASS" : "FAIL") << " eta(" << p.to << "w) = eta(g(" << p.from << "w)) with g = " << text
              << ": factor " << format_complex(factor) << (maps ? "" : " [g does not map the points]")
              << (law ? "" : " [transformation law fails]") << "\n";
    }
  }
  if (env.g.json) {
    env.emit({{"point", format_complex(z.z())},
              {"value", format_complex(v.value)},
              {"abs", std::abs(v.value)},
              {"error_bound", v.error},
              {"tol", tol},
              {"zero", zero},
              {"pairings", checks},
              {"pass", all}});
  } else {
    env.out << (zero ? "PASS" : "FAIL") << " |f(z)| = " << std::abs(v.value) << " at z = " << format_complex(z.z())
            << " (tol " << tol << ", truncation bound " << v.error << ")\n";
  }
  return all ? 0 : 1;
}

int cmd_fetch(const Env& env, const std::string& label, std::int64_t min_coeffs, const std::string& out_path) {
  const FormRecord r = fetch_newform(label, min_coeffs, env.fetch());
  if (!out_path.empty()) {
    save_form_file(r, out_path);
  }
  if (env.g.json) {
    env.emit({{"label", r.label}, {"level", r.level}, {"weight", r.weight}, {"coefficients", r.an.size()},
              {"source", to_string(r.source)}});
  } else {
    env.out << r.label << ": " << r.an.size() << " coefficients (" << to_string(r.source) << "), a_1..a_10 =";
    for (std::size_t i = 0; i < std::min<std::size_t>(10, r.an.size()); ++i) {
      env.out << " " << r.an[i];
    }
    env.out << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Eta quotients and eta expressions for weight-2 newforms"};
  app.require_subcommand(1);
  Env env{Globals{}, out, err};
  Globals& g = env.g;
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::Range(1, 1024));
  app.add_option("--seed", g.seed, "Seed for randomized search (default 1)");
  app.add_flag("--json", g.json, "Machine-readable output");
  app.add_option("--cache-dir", g.cache_dir, "Cache directory for enumerations and fetched forms");
  app.add_option("--data-dir", g.data_dir, "Directory with forms/ and tables/ fixtures");
  app.add_option("--timeout-secs", g.timeout_secs, "HTTP timeout for LMFDB requests")->check(CLI::PositiveNumber);
  app.add_flag("--offline", g.offline, "Never contact the LMFDB");

  std::int64_t level = 0;
  int weight = 2;
  std::string out_path;
  auto* enumerate = app.add_subcommand("enumerate", "Enumerate holomorphic eta quotients of a level and weight");
  enumerate->add_option("level", level, "Level N")->required()->check(CLI::PositiveNumber);
  enumerate->add_option("weight", weight, "Weight k")->required()->check(CLI::NonNegativeNumber);
  enumerate->add_option("--out", out_path, "Output file (default: the cache)");

  std::string label;
  std::int64_t d_max = 20;
  SearchFlags search;
  auto* express = app.add_subcommand("express", "Least level multiplier and an expression for a newform");
  express->add_option("label", label, "Newform label, e.g. 35.2.a.a")->required();
  express->add_option("--d-max", d_max, "Largest level multiplier to try")->check(CLI::PositiveNumber);
  express->add_option("--strategy", search.strategy, "exhaustive, random, permutation or none");
  express->add_option("--budget", search.budget, "Subset budget (exhaustive, permutation)");
  express->add_option("--iterations", search.iterations, "Iterations (random)");

  std::int64_t d = 0;
  std::string checkpoint;
  double checkpoint_secs = 60.0;
  auto* minimize = app.add_subcommand("minimize", "Exhaustive, permutation and random search with checkpointing");
  minimize->add_option("label", label, "Newform label")->required();
  minimize->add_option("--d", d, "Level multiplier (default: the least one)");
  minimize->add_option("--d-max", d_max, "Largest level multiplier to try")->check(CLI::PositiveNumber);
  minimize->add_option("--budget", search.budget, "Subset budget");
  minimize->add_option("--iterations", search.iterations, "Random-search iterations");
  minimize->add_option("--checkpoint", checkpoint, "Checkpoint file; an existing one is resumed");
  minimize->add_option("--checkpoint-secs", checkpoint_secs, "Seconds between checkpoints");

  std::string table_path;
  bool check_bounds = false;
  std::int64_t max_level = 2000;
  auto* verify_tables = app.add_subcommand("verify-tables", "Check every table row against the form coefficients");
  verify_tables->add_option("table", table_path, "Table file (default: the shipped tables)");
  verify_tables->add_flag("--check-bounds", check_bounds, "Also confirm the level-multiplier bounds of rows without expressions");
  verify_tables->add_option("--max-level", max_level, "Skip bound checks needing a higher level");

  std::string target;
  std::string point;
  double tol = 1e-10;
  std::vector<std::string> pairings;
  auto* verify_zero = app.add_subcommand("verify-zero", "Evaluate an expression at a point and test for a zero");
  verify_zero->add_option("target", target, "Table label, expression file, or inline terms separated by ';'")->required();
  verify_zero->add_option("--point", point, "Point, e.g. \"1/2 + i/(2*sqrt(21))\"")->required();
  verify_zero->add_option("--tol", tol, "Tolerance");
  verify_zero->add_option("--pairing", pairings, "Transformation a,b,c,d@k->m claiming eta(m z) = eta(g (k z)) up to the factor");

  std::int64_t min_coeffs = 400;
  auto* fetch = app.add_subcommand("fetch", "Fetch newform coefficients from the LMFDB into the cache");
  fetch->add_option("label", label, "Newform label")->required();
  fetch->add_option("--min-coeffs", min_coeffs, "Number of coefficients")->check(CLI::PositiveNumber);
  fetch->add_option("--out", out_path, "Also write the record here");

  for (auto* sub : {enumerate, express, minimize, verify_tables, verify_zero, fetch}) {
    sub->fallthrough();
  }

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*enumerate) {
      return cmd_enumerate(env, level, weight, out_path);
    }
    if (*express) {
      return cmd_express(env, label, d_max, search);
    }
    if (*minimize) {
      return cmd_minimize(env, label, d, d_max, search, checkpoint, checkpoint_secs);
    }
    if (*verify_tables) {
      return cmd_verify_tables(env, table_path, check_bounds, max_level);
    }
    if (*verify_zero) {
      return cmd_verify_zero(env, target, point, tol, pairings);
    }
    if (*fetch) {
      return cmd_fetch(env, label, min_coeffs, out_path);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const IngestError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace etaforge
