#pragma once

#include "etaforge/eta_quotient.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace etaforge {

struct EnumerationResult {
  std::int64_t level = 1;
  int weight = 0;
  std::vector<EtaQuotient> quotients;  // sorted by exponent vector, no duplicates

  std::int64_t count() const { return static_cast<std::int64_t>(quotients.size()); }
};

/// Raised when the lattice walk would exceed its node budget. Distinct from an
/// empty result.
class EnumerationBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnumerationOptions {
  std::int64_t node_budget = 1'000'000'000;
  int workers = 1;
};

/// 24 * (Ligozat order at 1/d_j) as an integer linear form in the exponents:
/// row j, column i holds N gcd(d_j, d_i)^2 / (gcd(d_j, N/d_j) d_j d_i).
std::vector<std::vector<std::int64_t>> scaled_order_matrix(std::int64_t level);

/// Every holomorphic eta quotient of weight k on Gamma0(N).
///
/// Works in scaled cusp-order coordinates w = 24 v: holomorphy is w >= 0, the
/// valence identity fixes sum_j eps_j w_j = 2 k index(N), and Newman's
/// congruences cut out a sublattice whose image is walked coordinate by
/// coordinate through a lower-triangular (Hermite) basis.
EnumerationResult enumerate_eta_quotients(std::int64_t level, int weight, const EnumerationOptions& options = {});

/// Plain scan of the box |r_i| <= bounds_i, filtered by is_holomorphic. Branches
/// are cut only when some cusp order is negative for every completion inside
/// the box. Used when the order matrix is singular, and as a test oracle.
EnumerationResult box_scan_eta_quotients(std::int64_t level, int weight, const std::vector<std::int64_t>& bounds);
EnumerationResult box_scan_eta_quotients(std::int64_t level, int weight, int radius);

/// Per-divisor bound on |r_i| over the holomorphic weight-k region, from the
/// inverse order matrix and the valence identity.
std::vector<std::int64_t> exponent_bounds(std::int64_t level, int weight);

/// Cache file: header "# level=N weight=k count=C", then one quotient per line.
void save_enumeration(const EnumerationResult& result, const std::filesystem::path& path);
EnumerationResult load_enumeration(const std::filesystem::path& path);

/// Loads <cache_dir>/quotients/eta_<N>_<k>.txt, or enumerates and writes it.
EnumerationResult cached_enumeration(std::int64_t level, int weight, const std::optional<std::filesystem::path>& cache_dir,
                                     const EnumerationOptions& options = {});

}  // namespace etaforge
