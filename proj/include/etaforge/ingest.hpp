#pragma once

// Coefficient data for target newforms: JSON record files, an on-disk cache
// and an LMFDB HTTP client.

#include "etaforge/express.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace etaforge {

enum class FormSource { Lmfdb, File, Fixture };

std::string to_string(FormSource s);
FormSource parse_form_source(const std::string& text);

struct FormRecord {
  std::string label;
  std::int64_t level = 1;
  int weight = 2;
  std::vector<std::int64_t> an;  // an[i] holds a_{i+1}
  FormSource source = FormSource::File;
  std::string fetched_at;  // ISO 8601 UTC; empty when unknown

  bool operator==(const FormRecord&) const = default;
};

TargetForm to_target(const FormRecord& r);

class IngestError : public std::runtime_error {
 public:
  enum class Kind { BadLabel, Schema, Invariant, NotFound, Unavailable, Network };

  IngestError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct ParsedLabel {
  std::int64_t level = 0;
  int weight = 0;
  std::string character;  // Galois orbit of the character, "a" for trivial
  std::string orbit;      // newform orbit letters
};

/// Parses "<level>.<weight>.<char>.<iso>"; throws IngestError(BadLabel).
ParsedLabel parse_label(const std::string& label);

/// Checks the label/level/weight agreement, a_1 = 1 and a_{mn} = a_m a_n for
/// coprime m, n. Throws IngestError(Invariant).
void check_record(const FormRecord& r);

/// a_{mn} = a_m a_n for all coprime m, n with mn within the list.
bool is_multiplicative(const std::vector<std::int64_t>& an);

std::string format_form_json(const FormRecord& r);
FormRecord parse_form_json(const std::string& text, const std::string& origin = "<string>");

/// Throws IngestError(Schema / Invariant) with the file name and offending field.
FormRecord load_form_file(const std::filesystem::path& path);

/// Atomic write: a temporary file renamed into place.
void save_form_file(const FormRecord& r, const std::filesystem::path& path);

/// $ETAFORGE_CACHE, else $XDG_DATA_HOME/etaforge, else ~/.local/share/etaforge.
std::filesystem::path default_cache_dir();

struct FetchOptions {
  std::optional<std::filesystem::path> cache_dir;  // default_cache_dir() when empty
  std::string base_url;                            // $ETAFORGE_LMFDB_URL, else https://www.lmfdb.org
  int timeout_secs = 30;
  bool offline = false;  // cache only
};

std::string default_lmfdb_url();

/// The record for `label` with at least min_coeffs coefficients: from the
/// cache when it holds enough of them, else from the LMFDB (then cached).
/// Cache files carry no timestamp so repeated fetches write identical bytes.
FormRecord fetch_newform(const std::string& label, std::int64_t min_coeffs, const FetchOptions& options = {});

/// Looks in the fixture directories, then the cache, then the network.
FormRecord load_form(const std::string& label, std::int64_t min_coeffs,
                     const std::vector<std::filesystem::path>& fixture_dirs, const FetchOptions& options = {});

}  // namespace etaforge
