#pragma once

// Double-precision evaluation of the Dedekind eta function and of eta
// expressions, with the eta multiplier and Dedekind sums computed exactly.

#include "etaforge/express.hpp"
#include "etaforge/rational.hpp"

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace etaforge {

using Complex = std::complex<double>;

/// Element of SL2(Z).
struct ModularMatrix {
  std::int64_t a = 1;
  std::int64_t b = 0;
  std::int64_t c = 0;
  std::int64_t d = 1;

  /// Throws std::invalid_argument unless ad - bc = 1.
  void check() const;
  Complex act(Complex z) const { return (double(a) * z + double(b)) / (double(c) * z + double(d)); }
  ModularMatrix operator*(const ModularMatrix& o) const;
  ModularMatrix negated() const { return {-a, -b, -c, -d}; }
};

struct UpperHalfPoint {
  double re = 0.0;
  double im = 1.0;
  std::string exact;  // the text it was parsed from, when any

  Complex z() const { return {re, im}; }
};

/// Throws std::invalid_argument when im <= 0.
UpperHalfPoint make_point(Complex z, std::string exact = {});

/// Parses "1/2 + i/(2*sqrt(21))", "0.5+0.1091i", "3i", ... : sums, products and
/// quotients of decimals, i and sqrt(...). The result must lie in the upper half-plane.
UpperHalfPoint parse_point(std::string_view text);

/// "re + im*i" with 15 significant digits.
std::string format_complex(Complex z);

/// s(h, k) = sum_{r=1}^{k-1} (r/k)(hr/k - floor(hr/k) - 1/2). Requires k > 0 and gcd(h, k) = 1.
Rational dedekind_sum(std::int64_t h, std::int64_t k);

/// The 24th root of unity chi(g) in eta(gz) = chi(g) (-i(cz+d))^{1/2} eta(z),
/// after normalizing g to c > 0, or to c = 0 and d = 1.
Complex eta_multiplier(const ModularMatrix& g);

/// Exact exponent e with chi(g) = exp(pi i e / 12), reduced to 0 <= e < 24.
std::int64_t eta_multiplier_exponent(const ModularMatrix& g);

/// eta(gz) / eta(z) from the transformation law (principal square root; the
/// c = 0 case is the pure translation factor).
Complex eta_transform_factor(const ModularMatrix& g, Complex z);

struct NumericValue {
  Complex value;
  double error = 0.0;  // bound on the truncation error of the products
};

/// eta(z), first moved into the standard fundamental domain, with `terms`
/// factors of the product.
NumericValue eta_numeric(const UpperHalfPoint& z, int terms = 40);
NumericValue eta_numeric(Complex z, int terms = 40);

/// Matrix g with g z in the standard fundamental domain.
ModularMatrix reduce_to_fundamental_domain(Complex z);

/// |eta(gz) - chi(g) (-i(cz+d))^{1/2} eta(z)| < tol, with both sides evaluated numerically.
bool eta_transform_check(const ModularMatrix& g, const UpperHalfPoint& z, double tol = 1e-10);

/// prod eta(d z)^r over (d, r) pairs.
using EtaProduct = std::vector<std::pair<std::int64_t, int>>;

NumericValue eval_eta_product(const EtaProduct& p, const UpperHalfPoint& z, int terms = 40);

/// Sum of coef * quotient(z). Throws std::runtime_error when the truncation
/// error is not below tol/10.
NumericValue eval_expression(const Expression& e, const UpperHalfPoint& z, int terms = 40, double tol = 1e-10);

/// |lhs(z) - factor * rhs(z)| <= tol * max(|lhs(z)|, |factor * rhs(z)|): a
/// relative test, since eta products span many orders of magnitude. Throws
/// std::runtime_error when the truncation error is too large to decide.
bool verify_eta_relation(const EtaProduct& lhs, const EtaProduct& rhs, const UpperHalfPoint& z, double tol = 1e-10,
                         Complex factor = 1.0);

}  // namespace etaforge
