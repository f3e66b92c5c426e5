#include "etaforge/analytic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

namespace etaforge {

namespace {

constexpr double kPi = std::numbers::pi;
const Complex kI(0.0, 1.0);

std::int64_t checked_mul_add(std::int64_t x, std::int64_t y, std::int64_t u, std::int64_t v) {
  std::int64_t p = 0;
  std::int64_t q = 0;
  std::int64_t r = 0;
  if (__builtin_mul_overflow(x, y, &p) || __builtin_mul_overflow(u, v, &q) || __builtin_add_overflow(p, q, &r)) {
    throw std::overflow_error("modular matrix entries overflow 64 bits");
  }
  return r;
}

ModularMatrix normalized(const ModularMatrix& g) {
  g.check();
  if (g.c < 0 || (g.c == 0 && g.d < 0)) {
    return g.negated();
  }
  return g;
}

}  // namespace

void ModularMatrix::check() const {
  const __int128 det = static_cast<__int128>(a) * d - static_cast<__int128>(b) * c;
  if (det != 1) {
    throw std::invalid_argument("matrix [[" + std::to_string(a) + "," + std::to_string(b) + "],[" + std::to_string(c) +
                                "," + std::to_string(d) + "]] does not have determinant 1");
  }
}

ModularMatrix ModularMatrix::operator*(const ModularMatrix& o) const {
  return {checked_mul_add(a, o.a, b, o.c), checked_mul_add(a, o.b, b, o.d), checked_mul_add(c, o.a, d, o.c),
          checked_mul_add(c, o.b, d, o.d)};
}

UpperHalfPoint make_point(Complex z, std::string exact) {
  if (!(z.imag() > 0.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw std::invalid_argument("point " + format_complex(z) + " is not in the upper half-plane");
  }
  return UpperHalfPoint{z.real(), z.imag(), std::move(exact)};
}

// ---------------------------------------------------------------------------
// Point grammar: a small complex calculator.

namespace {

class PointParser {
 public:
  explicit PointParser(std::string_view text) : text_(text) {}

  Complex parse() {
    const Complex v = sum();
    skip_space();
    if (pos_ != text_.size()) {
      fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    }
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw std::invalid_argument("cannot parse point '" + std::string(text_) + "' at offset " + std::to_string(pos_) +
                                ": " + why);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool eat(char ch) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == ch) {
      ++pos_;
      return true;
    }
    return false;
  }

  Complex sum() {
    Complex v = product();
    while (true) {
      if (eat('+')) {
        v += product();
      } else if (eat('-')) {
        v -= product();
      } else {
        return v;
      }
    }
  }

  // Juxtaposition ("2i", "3sqrt(2)") multiplies.
  bool starts_factor() {
    skip_space();
    if (pos_ >= text_.size()) {
      return false;
    }
    const char ch = text_[pos_];
    return ch == '(' || ch == 'i' || ch == 's';
  }

  Complex product() {
    Complex v = unary();
    while (true) {
      if (eat('*')) {
        v *= unary();
      } else if (eat('/')) {
        const Complex den = unary();
        if (den == Complex(0.0, 0.0)) {
          fail("division by zero");
        }
        v /= den;
      } else if (starts_factor()) {
        v *= factor();
      } else {
        return v;
      }
    }
  }

  Complex unary() {
    if (eat('-')) {
      return -unary();
    }
    if (eat('+')) {
      return unary();
    }
    return factor();
  }

  Complex factor() {
    skip_space();
    if (pos_ >= text_.size()) {
      fail("expected a number, i, sqrt(...) or (...)");
    }
    if (eat('(')) {
      const Complex v = sum();
      if (!eat(')')) {
        fail("expected ')'");
      }
      return v;
    }
    if (text_.substr(pos_, 4) == "sqrt") {
      pos_ += 4;
      if (!eat('(')) {
        fail("expected '(' after sqrt");
      }
      const Complex v = sum();
      if (!eat(')')) {
        fail("expected ')'");
      }
      return std::sqrt(v);
    }
    if (text_[pos_] == 'i') {
      ++pos_;
      return kI;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) {
        ++look;
      }
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          ++pos_;
        }
      }
    }
    if (start == pos_) {
      fail("expected a number, i, sqrt(...) or (...)");
    }
    const std::string digits(text_.substr(start, pos_ - start));
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(digits, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != digits.size()) {
      fail("bad number '" + digits + "'");
    }
    return {x, 0.0};
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

UpperHalfPoint parse_point(std::string_view text) {
  return make_point(PointParser(text).parse(), std::string(text));
}

std::string format_complex(Complex z) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.15g %c %.15g*i", z.real(), std::signbit(z.imag()) ? '-' : '+', std::abs(z.imag()));
  return buf;
}

// ---------------------------------------------------------------------------
// Dedekind sums and the multiplier

Rational dedekind_sum(std::int64_t h, std::int64_t k) {
  if (k <= 0) {
    throw std::invalid_argument("dedekind_sum: k must be positive");
  }
  if (std::gcd(h, k) != 1) {
    throw std::invalid_argument("dedekind_sum: gcd(" + std::to_string(h) + ", " + std::to_string(k) + ") != 1");
  }
  // sum (r/k)(hr/k - floor(hr/k) - 1/2) = (sum r * (hr mod k)) / k^2 - (k - 1)/4
  if (k > (std::int64_t{1} << 40)) {
    throw std::invalid_argument("dedekind_sum: k too large");
  }
  const std::int64_t hm = ((h % k) + k) % k;
  unsigned __int128 total = 0;  // below k^3 < 2^120
  for (std::int64_t r = 1; r < k; ++r) {
    const auto rem = static_cast<std::int64_t>((static_cast<__int128>(hm) * r) % k);
    total += static_cast<unsigned __int128>(r) * static_cast<unsigned __int128>(rem);
  }
  Integer acc(static_cast<unsigned long>(total >> 64));
  acc <<= 64;
  acc += Integer(static_cast<unsigned long>(total & ~std::uint64_t{0}));
  Rational out(acc, Integer(k) * Integer(k));
  out.canonicalize();
  Rational shift(k - 1, 4);
  shift.canonicalize();
  return out - shift;
}

std::int64_t eta_multiplier_exponent(const ModularMatrix& g) {
  const ModularMatrix n = normalized(g);
  if (n.c == 0) {
    return ((n.b % 24) + 24) % 24;
  }
  // chi = exp(pi i ((a+d)/(12c) + s(-d, c))), so the exponent over pi i / 12 is
  // (a+d)/c + 12 s(-d, c).
  Rational e(n.a + n.d, n.c);
  e.canonicalize();
  e += 12 * dedekind_sum(-n.d, n.c);
  if (e.get_den() != 1) {
    throw std::logic_error("eta multiplier exponent is not an integer");
  }
  Integer r = e.get_num() % 24;
  if (r < 0) {
    r += 24;
  }
  return r.get_si();
}

Complex eta_multiplier(const ModularMatrix& g) {
  return std::polar(1.0, kPi * static_cast<double>(eta_multiplier_exponent(g)) / 12.0);
}

Complex eta_transform_factor(const ModularMatrix& g, Complex z) {
  const ModularMatrix n = normalized(g);
  const Complex chi = eta_multiplier(n);
  if (n.c == 0) {
    return chi;
  }
  return chi * std::sqrt(-kI * (static_cast<double>(n.c) * z + static_cast<double>(n.d)));
}

// ---------------------------------------------------------------------------
// Numeric eta

ModularMatrix reduce_to_fundamental_domain(Complex z) {
  if (!(z.imag() > 0.0)) {
    throw std::invalid_argument("reduce_to_fundamental_domain: point not in the upper half-plane");
  }
  ModularMatrix g;
  for (int step = 0; step < 100000; ++step) {
    const double shift = std::round(z.real());
    if (shift != 0.0) {
      const auto n = static_cast<std::int64_t>(shift);
      z -= shift;
      g = ModularMatrix{1, -n, 0, 1} * g;
    }
    if (std::norm(z) < 1.0 - 1e-14) {
      z = -1.0 / z;
      g = ModularMatrix{0, -1, 1, 0} * g;
    } else {
      return g;
    }
  }
  throw std::runtime_error("reduce_to_fundamental_domain: no convergence");
}

namespace {

/// eta(z) by the product, for z already in the fundamental domain.
NumericValue eta_product_direct(Complex z, int terms) {
  const Complex q = std::exp(2.0 * kPi * kI * z);
  Complex prod = 1.0;
  Complex qn = 1.0;
  for (int n = 1; n <= terms; ++n) {
    qn *= q;
    prod *= 1.0 - qn;
  }
  const Complex value = std::exp(kPi * kI * z / 12.0) * prod;
  // |prod_{n>terms}(1 - q^n) - 1| <= exp(sum_{n>terms} |q|^n) - 1
  const double aq = std::abs(q);
  const double tail = std::pow(aq, terms + 1) / (1.0 - aq);
  return {value, std::abs(value) * std::expm1(tail)};
}

}  // namespace

NumericValue eta_numeric(Complex z, int terms) {
  if (terms < 1) {
    throw std::invalid_argument("eta_numeric: terms must be at least 1");
  }
  if (!(z.imag() > 0.0)) {
    throw std::invalid_argument("eta_numeric: point not in the upper half-plane");
  }
  const ModularMatrix g = reduce_to_fundamental_domain(z);
  const NumericValue reduced = eta_product_direct(g.act(z), terms);
  // eta(gz) = factor * eta(z)
  const Complex factor = eta_transform_factor(g, z);
  return {reduced.value / factor, reduced.error / std::abs(factor)};
}

NumericValue eta_numeric(const UpperHalfPoint& z, int terms) { return eta_numeric(z.z(), terms); }

bool eta_transform_check(const ModularMatrix& g, const UpperHalfPoint& z, double tol) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("eta_transform_check: tol must be positive");
  }
  g.check();
  const NumericValue lhs = eta_numeric(g.act(z.z()));
  const NumericValue rhs = eta_numeric(z);
  const Complex factor = eta_transform_factor(g, z.z());
  return std::abs(lhs.value - factor * rhs.value) < tol;
}

NumericValue eval_eta_product(const EtaProduct& p, const UpperHalfPoint& z, int terms) {
  Complex value = 1.0;
  double growth = 1.0;  // bound on |computed / exact| deviation, multiplicatively
  for (const auto& [d, r] : p) {
    if (d < 1) {
      throw std::invalid_argument("eta product divisor must be positive");
    }
    const NumericValue e = eta_numeric(static_cast<double>(d) * z.z(), terms);
    double rel = e.error / std::abs(e.value);
    if (r < 0) {
      rel = rel < 1.0 ? rel / (1.0 - rel) : INFINITY;
    }
    growth *= std::pow(1.0 + rel, std::abs(r));
    value *= std::pow(e.value, r);
  }
  return {value, std::abs(value) * (growth - 1.0)};
}

NumericValue eval_expression(const Expression& e, const UpperHalfPoint& z, int terms, double tol) {
  NumericValue out{0.0, 0.0};
  for (const Term& t : e.terms) {
    EtaProduct p;
    const std::vector<std::int64_t> ds = t.quotient.divisors();
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (t.quotient.exponents()[i] != 0) {
        p.emplace_back(ds[i], t.quotient.exponents()[i]);
      }
    }
    const NumericValue v = eval_eta_product(p, z, terms);
    const double c = t.coef.get_d();
    out.value += c * v.value;
    out.error += std::abs(c) * v.error;
  }
  if (!(out.error < tol / 10.0)) {
    throw std::runtime_error("eval_expression: truncation error " + std::to_string(out.error) +
                             " is not below tol/10; raise the number of terms");
  }
  return out;
}

bool verify_eta_relation(const EtaProduct& lhs, const EtaProduct& rhs, const UpperHalfPoint& z, double tol, Complex factor) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("verify_eta_relation: tol must be positive");
  }
  const NumericValue l = eval_eta_product(lhs, z);
  const NumericValue r = eval_eta_product(rhs, z);
  // Eta products range over many orders of magnitude, so the comparison is relative.
  const double scale = std::max(std::abs(l.value), std::abs(factor * r.value));
  if (!(l.error + std::abs(factor) * r.error < scale * tol / 10.0)) {
    throw std::runtime_error("verify_eta_relation: truncation error is not below tol/10");
  }
  return std::abs(l.value - factor * r.value) <= scale * tol;
}

}  // namespace etaforge
