#pragma once

// Truncated q-expansions  sum_{i < prec} c_i q^{offset + i}  with an offset in (1/24)Z.
//
// All operations are templated on the coefficient scalar so the same code runs
// over the rationals (exact results) and over ModP (fast filtering).

#include "etaforge/rational.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace etaforge {

template <class Scalar>
using CoeffVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
class BasicQExpansion {
 public:
  BasicQExpansion() = default;

  BasicQExpansion(Rational offset, CoeffVector<Scalar> coeffs)
      : offset_(std::move(offset)), coeffs_(std::move(coeffs)) {
    offset_.canonicalize();
    if (24 % offset_.get_den() != 0) {
      throw std::invalid_argument("q-expansion offset must lie in (1/24)Z");
    }
  }

  const Rational& offset() const { return offset_; }
  const CoeffVector<Scalar>& coeffs() const { return coeffs_; }
  std::int64_t prec() const { return coeffs_.size(); }
  const Scalar& operator[](std::int64_t i) const { return coeffs_(i); }

  friend bool operator==(const BasicQExpansion& a, const BasicQExpansion& b) {
    if (a.offset_ != b.offset_ || a.prec() != b.prec()) {
      return false;
    }
    for (std::int64_t i = 0; i < a.prec(); ++i) {
      if (a.coeffs_(i) != b.coeffs_(i)) {
        return false;
      }
    }
    return true;
  }

 private:
  Rational offset_{0};
  CoeffVector<Scalar> coeffs_;
};

using QExpansion = BasicQExpansion<Rational>;

namespace detail {

inline void require_prec(std::int64_t prec) {
  if (prec <= 0) {
    throw std::invalid_argument("precision must be positive");
  }
}

template <class Scalar>
CoeffVector<Scalar> zeros(std::int64_t n) {
  CoeffVector<Scalar> v(n);
  for (std::int64_t i = 0; i < n; ++i) {
    v(i) = Scalar(0);
  }
  return v;
}

template <class Scalar>
CoeffVector<Scalar> convolve(const CoeffVector<Scalar>& a, const CoeffVector<Scalar>& b, std::int64_t prec) {
  CoeffVector<Scalar> out = zeros<Scalar>(prec);
  for (std::int64_t i = 0; i < std::min<std::int64_t>(a.size(), prec); ++i) {
    if (a(i) == Scalar(0)) {
      continue;
    }
    const std::int64_t jmax = std::min<std::int64_t>(b.size(), prec - i);
    for (std::int64_t j = 0; j < jmax; ++j) {
      if (b(j) != Scalar(0)) {
        out(i + j) += a(i) * b(j);
      }
    }
  }
  return out;
}

template <class Scalar>
CoeffVector<Scalar> invert_unit(const CoeffVector<Scalar>& a, std::int64_t prec) {
  if (a.size() == 0 || a(0) == Scalar(0)) {
    throw std::domain_error("series is not invertible: leading coefficient is zero");
  }
  CoeffVector<Scalar> b = zeros<Scalar>(prec);
  const Scalar lead_inv = Scalar(1) / a(0);
  b(0) = lead_inv;
  for (std::int64_t n = 1; n < prec; ++n) {
    Scalar acc(0);
    const std::int64_t jmax = std::min<std::int64_t>(n, a.size() - 1);
    for (std::int64_t j = 1; j <= jmax; ++j) {
      if (a(j) != Scalar(0)) {
        acc += a(j) * b(n - j);
      }
    }
    b(n) = -(acc * lead_inv);
  }
  return b;
}

}  // namespace detail

/// Coefficients of prod_{n >= 1} (1 - q^n) to `prec` terms, offset 0, via the
/// pentagonal number theorem.
template <class Scalar = Rational>
BasicQExpansion<Scalar> euler_series(std::int64_t prec) {
  detail::require_prec(prec);
  CoeffVector<Scalar> c = detail::zeros<Scalar>(prec);
  c(0) = Scalar(1);
  for (std::int64_t k = 1;; ++k) {
    const std::int64_t e1 = k * (3 * k - 1) / 2;
    const std::int64_t e2 = k * (3 * k + 1) / 2;
    if (e1 >= prec) {
      break;
    }
    const Scalar sign = (k % 2 == 0) ? Scalar(1) : Scalar(-1);
    c(e1) = sign;
    if (e2 < prec) {
      c(e2) = sign;
    }
  }
  return BasicQExpansion<Scalar>(Rational(0), std::move(c));
}

template <class Scalar>
BasicQExpansion<Scalar> mul(const BasicQExpansion<Scalar>& a, const BasicQExpansion<Scalar>& b, std::int64_t prec) {
  detail::require_prec(prec);
  return BasicQExpansion<Scalar>(Rational(a.offset() + b.offset()), detail::convolve(a.coeffs(), b.coeffs(), prec));
}

/// a^e truncated to `prec`; negative e inverts the unit part first.
template <class Scalar>
BasicQExpansion<Scalar> int_pow(const BasicQExpansion<Scalar>& a, std::int64_t e, std::int64_t prec) {
  detail::require_prec(prec);
  CoeffVector<Scalar> base;
  if (e < 0) {
    base = detail::invert_unit(a.coeffs(), prec);
  } else {
    base = a.coeffs().head(std::min<std::int64_t>(a.prec(), prec));
  }
  std::uint64_t n = e < 0 ? static_cast<std::uint64_t>(-e) : static_cast<std::uint64_t>(e);
  CoeffVector<Scalar> acc = detail::zeros<Scalar>(prec);
  acc(0) = Scalar(1);
  while (n != 0) {
    if ((n & 1U) != 0) {
      acc = detail::convolve(acc, base, prec);
    }
    n >>= 1U;
    if (n != 0) {
      base = detail::convolve(base, base, prec);
    }
  }
  return BasicQExpansion<Scalar>(Rational(a.offset() * e), std::move(acc));
}

/// Substitutes q -> q^d.
template <class Scalar>
BasicQExpansion<Scalar> rescale_variable(const BasicQExpansion<Scalar>& a, std::int64_t d, std::int64_t prec) {
  detail::require_prec(prec);
  if (d <= 0) {
    throw std::invalid_argument("rescale_variable: d must be positive");
  }
  CoeffVector<Scalar> c = detail::zeros<Scalar>(prec);
  for (std::int64_t i = 0; i < a.prec() && i * d < prec; ++i) {
    c(i * d) = a[i];
  }
  return BasicQExpansion<Scalar>(Rational(a.offset() * d), std::move(c));
}

}  // namespace etaforge
