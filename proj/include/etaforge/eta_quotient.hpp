#pragma once

#include "etaforge/modp.hpp"
#include "etaforge/rational.hpp"
#include "etaforge/series.hpp"

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace etaforge {

/// prod_{d | N} eta(d z)^{r_d}, exponents indexed by the ascending divisors of N.
class EtaQuotient {
 public:
  EtaQuotient() = default;
  EtaQuotient(std::int64_t level, std::vector<int> exponents);

  /// The constant 1 at the given level.
  static EtaQuotient one(std::int64_t level);

  std::int64_t level() const { return level_; }
  const std::vector<int>& exponents() const { return exponents_; }
  const std::vector<std::int64_t>& divisors() const { return divisors_; }

  /// Exponent of eta(d z); zero when d is not a divisor of the level.
  int exponent_at(std::int64_t d) const;

  /// Same function viewed at level N*m (new divisors get exponent 0).
  EtaQuotient embed(std::int64_t multiplier) const;

  /// Pointwise product (levels must agree).
  EtaQuotient operator*(const EtaQuotient& other) const;

  friend bool operator==(const EtaQuotient& a, const EtaQuotient& b) {
    return a.level_ == b.level_ && a.exponents_ == b.exponents_;
  }
  friend std::strong_ordering operator<=>(const EtaQuotient& a, const EtaQuotient& b) {
    if (auto c = a.level_ <=> b.level_; c != 0) {
      return c;
    }
    return a.exponents_ <=> b.exponents_;
  }

 private:
  std::int64_t level_ = 1;
  std::vector<std::int64_t> divisors_{1};
  std::vector<int> exponents_{0};
};

/// "eta_N[r1,...,rl]" with no spaces.
std::string to_string(const EtaQuotient& q);

/// Inverse of to_string; tolerates whitespace. Throws std::invalid_argument.
EtaQuotient parse_eta_quotient(std::string_view text);

Rational weight(const EtaQuotient& q);

struct NewmanConditions {
  bool divisor_sum = false;     // sum d_i r_i == 0 mod 24
  bool codivisor_sum = false;   // sum (N/d_i) r_i == 0 mod 24
  bool square_product = false;  // prod d_i^{r_i} is a rational square

  bool all() const { return divisor_sum && codivisor_sum && square_product; }
};

NewmanConditions newman_conditions(const EtaQuotient& q);

/// Ligozat order of vanishing at a cusp with denominator d (d | N).
Rational cusp_order(const EtaQuotient& q, std::int64_t d);

struct CuspProfile {
  std::vector<std::int64_t> denominators;
  std::vector<Rational> orders;
  std::vector<std::int64_t> multiplicities;
};

CuspProfile cusp_profile(const EtaQuotient& q);

/// Newman's conditions hold and every cusp order is nonnegative.
bool is_holomorphic(const EtaQuotient& q);

/// Offset (sum d_i r_i)/24 and coefficients prod_i euler(q^{d_i})^{r_i}, built
/// from the series primitives.
QExpansion q_expansion(const EtaQuotient& q, std::int64_t prec);

namespace detail {

inline void divide_exact(Rational& x, std::int64_t n) { x /= n; }
inline void divide_exact(Integer& x, std::int64_t n) { mpz_divexact_ui(x.get_mpz_t(), x.get_mpz_t(), static_cast<unsigned long>(n)); }
inline void divide_exact(ModP& x, std::int64_t n) { x *= ModP(n).inverse(); }

std::vector<std::int64_t> log_derivative_weights(const std::vector<std::int64_t>& divisors, const std::vector<int>& exponents,
                                                 std::int64_t count);

}  // namespace detail

/// First `count` coefficients of prod_i euler(q^{d_i})^{r_i} (offset dropped),
/// via the logarithmic-derivative recurrence n p_n = sum_j c_j p_{n-j}.
template <class Scalar>
CoeffVector<Scalar> eta_coefficients(const EtaQuotient& q, std::int64_t count) {
  const std::vector<std::int64_t> c = detail::log_derivative_weights(q.divisors(), q.exponents(), count);
  CoeffVector<Scalar> p(count);
  for (std::int64_t i = 0; i < count; ++i) {
    p(i) = Scalar(0);
  }
  if (count == 0) {
    return p;
  }
  p(0) = Scalar(1);
  for (std::int64_t n = 1; n < count; ++n) {
    Scalar acc(0);
    for (std::int64_t j = 1; j <= n; ++j) {
      if (c[j] != 0) {
        acc += Scalar(c[j]) * p(n - j);
      }
    }
    detail::divide_exact(acc, n);
    p(n) = acc;
  }
  return p;
}

/// Coefficients of q^0..q^{bound} of a quotient whose offset is a nonnegative
/// integer (a holomorphic form), shifted into place.
template <class Scalar>
CoeffVector<Scalar> form_coefficients(const EtaQuotient& q, std::int64_t bound) {
  std::int64_t offset = 0;
  for (std::size_t i = 0; i < q.divisors().size(); ++i) {
    offset += q.divisors()[i] * q.exponents()[i];
  }
  if (offset % 24 != 0 || offset < 0) {
    throw std::invalid_argument("form_coefficients: offset is not a nonnegative integer for " + to_string(q));
  }
  offset /= 24;
  CoeffVector<Scalar> out(bound + 1);
  for (std::int64_t i = 0; i <= bound; ++i) {
    out(i) = Scalar(0);
  }
  if (offset > bound) {
    return out;
  }
  const CoeffVector<Scalar> body = eta_coefficients<Scalar>(q, bound + 1 - offset);
  for (std::int64_t i = 0; i < body.size(); ++i) {
    out(offset + i) = body(i);
  }
  return out;
}

}  // namespace etaforge
