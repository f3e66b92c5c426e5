#pragma once

#include "etaforge/cli.hpp"
#include "etaforge/ingest.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

#include <unistd.h>

namespace etaforge::testing {

inline std::filesystem::path data_dir() { return ETAFORGE_TEST_DATA; }

inline TargetForm fixture_form(const std::string& label) {
  return to_target(load_form_file(data_dir() / "forms" / (label + ".json")));
}

inline const std::vector<TableRow>& shipped_table() {
  static const std::vector<TableRow> rows = load_table(data_dir() / "tables" / "tables.txt");
  return rows;
}

inline const TableRow& table_row(const std::string& label) {
  for (const TableRow& row : shipped_table()) {
    if (row.label == label) {
      return row;
    }
  }
  throw std::out_of_range("no table row " + label);
}

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& stem) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            (stem + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace etaforge::testing
