#pragma once

#include <gmpxx.h>

#include <Eigen/Core>

#include <string>
#include <string_view>

namespace etaforge {

using Rational = mpq_class;
using Integer = mpz_class;

/// Parses "p/q", "-p", "p" (surrounding whitespace allowed). Throws std::invalid_argument.
Rational parse_rational(std::string_view text);

/// Canonical text form: "p" when the denominator is 1, else "p/q".
std::string to_string(const Rational& x);

inline Rational make_rational(long num, long den = 1) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

}  // namespace etaforge

namespace Eigen {

template <>
struct NumTraits<mpq_class> : GenericNumTraits<mpq_class> {
  using Real = mpq_class;
  using NonInteger = mpq_class;
  using Nested = mpq_class;
  using Literal = mpq_class;

  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 6,
    AddCost = 150,
    MulCost = 150
  };

  static inline Real epsilon() { return Real(0); }
  static inline Real dummy_precision() { return Real(0); }
  static inline int digits10() { return 0; }
  static inline Real highest() { return Real(0); }
  static inline Real lowest() { return Real(0); }
};

}  // namespace Eigen
