#pragma once

// Eta expressions for target forms: membership in spans of eta quotients,
// level raising, and searches for short expressions.
//
// Every search filters with coefficient vectors reduced modulo p = 2^61 - 1
// and confirms every reported relation over the rationals.

#include "etaforge/enumerate.hpp"
#include "etaforge/eta_quotient.hpp"
#include "etaforge/exactla.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace etaforge {

struct TargetForm {
  std::string label;
  std::int64_t level = 1;
  int weight = 2;
  std::vector<Integer> an;  // an[i] holds a_{i+1}
};

class InsufficientCoefficients : public std::runtime_error {
 public:
  InsufficientCoefficients(const std::string& label, std::int64_t required, std::int64_t available);

  std::int64_t required() const { return required_; }
  std::int64_t available() const { return available_; }

 private:
  std::int64_t required_;
  std::int64_t available_;
};

/// Coefficients of q^0..q^bound of the target (a_0 = 0). Throws
/// InsufficientCoefficients when a_bound is not supplied.
Vector<Rational> target_coefficients(const TargetForm& f, std::int64_t bound);

struct Term {
  Rational coef;
  EtaQuotient quotient;
};

struct Expression {
  std::int64_t level = 1;
  std::vector<Term> terms;

  std::size_t length() const { return terms.size(); }
};

/// Throws std::invalid_argument on a zero coefficient, a quotient at another
/// level, a repeated quotient, or mixed weights.
void validate_expression(const Expression& e);

/// prod |a_i b_i| over the coefficients a_i/b_i in lowest terms: the exponential
/// of the total height. Throws on a zero coefficient.
Integer height_product(const Expression& e);

enum class SizeOrder { Smaller, Larger, Equivalent };

/// Fewer terms wins; equal length compares total height exactly.
SizeOrder size_order(const Expression& a, const Expression& b);

/// q^0..q^bound of sum coef * quotient.
Vector<Rational> expression_coefficients(const Expression& e, std::int64_t bound);

/// Exact agreement with f up to the Sturm bound of the expression's level.
bool verify_expression(const Expression& e, const TargetForm& f);

enum class SearchStatus { ProvedMinimal, InferredMinimal, Bounded, NoneFound };

std::string to_string(SearchStatus s);
SearchStatus parse_search_status(std::string_view text);

struct SearchCounters {
  std::int64_t subsets = 0;       // subsets covered by completed sweeps or sampled
  std::int64_t iterations = 0;    // random-search iterations run
  std::int64_t exact_checks = 0;  // candidate relations confirmed over Q
};

/// n_lower when the target lies outside the span of every quotient.
inline constexpr std::int64_t kUnreachable = std::numeric_limits<std::int64_t>::max();

struct SearchOutcome {
  std::optional<Expression> best;
  std::int64_t n_lower = 1;
  std::int64_t n_upper = 0;  // length of best; 0 without one
  SearchStatus status = SearchStatus::NoneFound;
  bool exhaustive_at_upper = false;  // every subset of size n_upper was examined
  SearchCounters spent;
};

/// Truncated coefficient vectors of a fixed quotient list, reduced mod p
/// eagerly and computed exactly on demand. Shareable across threads.
class QuotientTable {
 public:
  QuotientTable(std::vector<EtaQuotient> quotients, std::int64_t bound, int workers = 1);
  QuotientTable(const EnumerationResult& quotients, std::int64_t bound, int workers = 1);

  std::size_t size() const { return quotients_.size(); }
  std::int64_t bound() const { return bound_; }
  std::int64_t level() const { return level_; }
  const EtaQuotient& quotient(std::size_t i) const { return quotients_[i]; }
  const std::vector<EtaQuotient>& quotients() const { return quotients_; }

  const Vector<ModP>& residues(std::size_t i) const { return residues_[i]; }
  const Vector<Rational>& exact(std::size_t i) const;

 private:
  std::int64_t level_ = 1;
  std::int64_t bound_ = 0;
  std::vector<EtaQuotient> quotients_;
  std::vector<Vector<ModP>> residues_;
  mutable std::unique_ptr<std::once_flag[]> exact_once_;
  mutable std::vector<Vector<Rational>> exact_;
};

/// Some expression for f over the listed quotients, or nullopt when f is not
/// in their span (established by an exact annihilating functional).
std::optional<Expression> find_any_expression(const TargetForm& f, const QuotientTable& table);
std::optional<Expression> find_any_expression(const TargetForm& f, const EnumerationResult& quotients);

struct LevelOptions {
  std::optional<std::filesystem::path> cache_dir;
  EnumerationOptions enumeration;
  std::function<void(std::int64_t d, bool expressible)> on_level;
};

struct LevelMultiplier {
  std::int64_t d = 1;
  Expression expression;
};

/// Least d <= d_max such that f is in the span of the holomorphic eta
/// quotients of level N*d and f's weight.
std::optional<LevelMultiplier> minimal_level_multiplier(const TargetForm& f, std::int64_t d_max,
                                                        const LevelOptions& options = {});

struct ExhaustiveOptions {
  std::int64_t subset_budget = 100'000'000;
  int workers = 1;
  std::function<void(const SearchOutcome&)> on_progress;
};

/// Sweeps n = 1, 2, ... while C(m, n) fits the budget; at the first n with a
/// solution returns the height-minimal one (ties: colexicographically first
/// subset) as proved-minimal.
SearchOutcome exhaustive_search(const TargetForm& f, const QuotientTable& table, const ExhaustiveOptions& options = {});
SearchOutcome exhaustive_search(const TargetForm& f, const EnumerationResult& quotients, std::int64_t subset_budget = 100'000'000);

struct RandomOptions {
  int workers = 1;
  std::int64_t batch = 8;  // iterations between record updates
  std::int64_t first_iteration = 0;
  std::optional<Expression> incumbent;  // resumes from a checkpointed record
  std::function<void(const SearchOutcome&, std::int64_t next_iteration)> on_progress;
};

/// Grows random quotient subsets one element at a time. After each addition
/// it also looks for every one- or two-quotient completion of the current
/// subset, so a subset of size s proposes expressions of length s+1 and s+2.
/// Deterministic in (seed, iterations, batch); the worker count does not
/// affect the result.
SearchOutcome random_search(const TargetForm& f, const QuotientTable& table, std::int64_t iterations, std::uint64_t seed,
                            const RandomOptions& options = {});
SearchOutcome random_search(const TargetForm& f, const EnumerationResult& quotients, std::int64_t iterations,
                            std::uint64_t seed);

/// Searches subsets of quotients sharing one exponent multiset, then of the
/// union of two such classes, until `budget` subsets have been covered.
SearchOutcome permutation_search(const TargetForm& f, const QuotientTable& table, std::int64_t budget);
SearchOutcome permutation_search(const TargetForm& f, const EnumerationResult& quotients, std::int64_t budget);

/// Upgrades the status of an outcome: proved-minimal when an exhaustive pass
/// at length n_upper completed and n_lower = n_upper; inferred-minimal when
/// every coefficient is +-1 and n_lower equals the length. Never downgrades.
SearchOutcome certify(SearchOutcome outcome);

/// Labels of the weight-2 newforms that are single eta quotients.
const std::vector<std::string>& single_quotient_newforms();

/// True when f is not a single eta quotient, from the complete list above.
bool rule_out_single_quotient(const TargetForm& f);

/// Raises n_lower to 2 when rule_out_single_quotient applies.
SearchOutcome apply_single_quotient_exclusion(SearchOutcome outcome, const TargetForm& f);

// Text form: a header line "# key=value ..." followed by "<coef> * eta_N[...]" lines.
struct ExpressionBlock {
  std::map<std::string, std::string> header;
  Expression expression;
};

std::string format_expression(const Expression& e);
std::string format_block(const ExpressionBlock& block);
std::vector<ExpressionBlock> parse_expression_blocks(std::string_view text);

/// Header for a search result: label, level, status, n_lower, n_upper.
ExpressionBlock outcome_block(const std::string& label, const SearchOutcome& outcome);

}  // namespace etaforge
