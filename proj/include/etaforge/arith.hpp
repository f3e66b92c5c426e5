#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace etaforge {

/// Sorted positive divisors of n (n >= 1).
std::vector<std::int64_t> divisors(std::int64_t n);

/// Prime factorisation as (prime, exponent) pairs, primes ascending.
std::vector<std::pair<std::int64_t, int>> factorize(std::int64_t n);

/// p-adic valuation of n != 0.
int valuation(std::int64_t n, std::int64_t p);

std::int64_t euler_phi(std::int64_t n);

/// Index of Gamma0(N) in SL2(Z): N * prod_{p | N} (1 + 1/p).
std::int64_t index_gamma0(std::int64_t level);

/// Coefficient index past which two forms in M_k(Gamma0(N)) must differ:
/// floor(k * index / 12). Throws std::invalid_argument unless k >= 2 is even.
std::int64_t sturm_bound(std::int64_t level, int weight);

/// Number of cusps of Gamma0(N) with denominator d: phi(gcd(d, N/d)).
std::int64_t cusp_multiplicity(std::int64_t level, std::int64_t d);

/// sigma_1(n) for n = 0..count-1 (sigma_1(0) = 0).
std::vector<std::int64_t> divisor_sums(std::size_t count);

std::int64_t binomial_saturating(std::int64_t n, std::int64_t k, std::int64_t cap);

}  // namespace etaforge
