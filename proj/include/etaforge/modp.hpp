#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <ostream>

namespace etaforge {

/// Element of F_p for the Mersenne prime p = 2^61 - 1.
///
/// Used as a fast filter scalar; every decision taken on the strength of a
/// mod-p computation is re-checked over the rationals before it is reported.
class ModP {
 public:
  static constexpr std::uint64_t kModulus = (std::uint64_t{1} << 61) - 1;

  constexpr ModP() = default;
  ModP(std::int64_t v) : value_(reduce_signed(v)) {}  // NOLINT(google-explicit-constructor)

  static constexpr ModP from_raw(std::uint64_t v) {
    ModP m;
    m.value_ = v;
    return m;
  }

  constexpr std::uint64_t value() const { return value_; }
  constexpr bool is_zero() const { return value_ == 0; }

  friend constexpr ModP operator+(ModP a, ModP b) {
    std::uint64_t s = a.value_ + b.value_;
    if (s >= kModulus) {
      s -= kModulus;
    }
    return from_raw(s);
  }
  friend constexpr ModP operator-(ModP a, ModP b) {
    return from_raw(a.value_ >= b.value_ ? a.value_ - b.value_ : a.value_ + kModulus - b.value_);
  }
  friend constexpr ModP operator-(ModP a) { return from_raw(a.value_ == 0 ? 0 : kModulus - a.value_); }
  friend constexpr ModP operator*(ModP a, ModP b) {
    const unsigned __int128 prod = static_cast<unsigned __int128>(a.value_) * b.value_;
    std::uint64_t lo = static_cast<std::uint64_t>(prod & kModulus);
    std::uint64_t hi = static_cast<std::uint64_t>(prod >> 61);
    std::uint64_t s = lo + hi;
    if (s >= kModulus) {
      s -= kModulus;
    }
    return from_raw(s);
  }
  friend ModP operator/(ModP a, ModP b) { return a * b.inverse(); }

  ModP& operator+=(ModP o) { return *this = *this + o; }
  ModP& operator-=(ModP o) { return *this = *this - o; }
  ModP& operator*=(ModP o) { return *this = *this * o; }
  ModP& operator/=(ModP o) { return *this = *this / o; }

  friend constexpr bool operator==(ModP a, ModP b) { return a.value_ == b.value_; }
  friend constexpr bool operator!=(ModP a, ModP b) { return a.value_ != b.value_; }

  ModP pow(std::uint64_t e) const {
    ModP base = *this;
    ModP acc = from_raw(1);
    while (e != 0) {
      if ((e & 1U) != 0) {
        acc *= base;
      }
      base *= base;
      e >>= 1U;
    }
    return acc;
  }

  /// Multiplicative inverse; the inverse of zero is reported as zero.
  ModP inverse() const { return pow(kModulus - 2); }

  friend std::ostream& operator<<(std::ostream& os, ModP m) { return os << m.value_; }

 private:
  static constexpr std::uint64_t reduce_signed(std::int64_t v) {
    const std::int64_t m = static_cast<std::int64_t>(kModulus);
    std::int64_t r = v % m;
    if (r < 0) {
      r += m;
    }
    return static_cast<std::uint64_t>(r);
  }

  std::uint64_t value_ = 0;
};

}  // namespace etaforge

namespace Eigen {

template <>
struct NumTraits<etaforge::ModP> : GenericNumTraits<etaforge::ModP> {
  using Real = etaforge::ModP;
  using NonInteger = etaforge::ModP;
  using Nested = etaforge::ModP;
  using Literal = etaforge::ModP;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 0,
    RequireInitialization = 0,
    ReadCost = 1,
    AddCost = 2,
    MulCost = 4
  };
  static inline Real epsilon() { return Real(0); }
  static inline Real dummy_precision() { return Real(0); }
  static inline int digits10() { return 0; }
  static inline Real highest() { return Real(0); }
  static inline Real lowest() { return Real(0); }
};

}  // namespace Eigen
