#pragma once

// The etaforge command line, callable in-process for tests.

#include "etaforge/express.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace etaforge {

/// One row of the shipped expression tables.
struct TableRow {
  std::int64_t level = 0;
  std::string label;
  std::optional<Expression> expression;
  std::optional<std::int64_t> d;        // exact level multiplier, when known
  std::optional<std::int64_t> d_lower;  // "d >= bound" rows
  std::string status;                   // check, n-range or d-bound
  std::optional<std::int64_t> n_lower;
  std::optional<std::int64_t> n_upper;
  std::string source;
};

/// Parses the expression-block table format (header keys label, level, d,
/// status, n_lower, n_upper, source). Throws std::invalid_argument on bad rows.
std::vector<TableRow> parse_table(const std::string& text);
std::vector<TableRow> load_table(const std::filesystem::path& path);

/// Data directory holding forms/ and tables/: $ETAFORGE_DATA, else the source tree's data/.
std::filesystem::path default_data_dir();

/// Runs the CLI with argv-style arguments (args[0] is the program name).
/// Returns the process exit code: 0 on success, 1 when a requested check
/// fails, 2 on usage or input errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace etaforge
