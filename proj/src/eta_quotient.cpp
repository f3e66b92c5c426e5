#include "etaforge/eta_quotient.hpp"

#include "etaforge/arith.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <stdexcept>

namespace etaforge {

EtaQuotient::EtaQuotient(std::int64_t level, std::vector<int> exponents)
    : level_(level), divisors_(etaforge::divisors(level)), exponents_(std::move(exponents)) {
  if (exponents_.size() != divisors_.size()) {
    throw std::invalid_argument("eta quotient at level " + std::to_string(level) + " needs " +
                                std::to_string(divisors_.size()) + " exponents, got " +
                                std::to_string(exponents_.size()));
  }
}

EtaQuotient EtaQuotient::one(std::int64_t level) {
  return EtaQuotient(level, std::vector<int>(etaforge::divisors(level).size(), 0));
}

int EtaQuotient::exponent_at(std::int64_t d) const {
  const auto it = std::lower_bound(divisors_.begin(), divisors_.end(), d);
  if (it == divisors_.end() || *it != d) {
    return 0;
  }
  return exponents_[static_cast<std::size_t>(it - divisors_.begin())];
}

EtaQuotient EtaQuotient::embed(std::int64_t multiplier) const {
  if (multiplier < 1) {
    throw std::invalid_argument("embed: multiplier must be positive");
  }
  const std::int64_t new_level = level_ * multiplier;
  std::vector<std::int64_t> divs = etaforge::divisors(new_level);
  std::vector<int> exps(divs.size(), 0);
  for (std::size_t i = 0; i < divs.size(); ++i) {
    exps[i] = exponent_at(divs[i]);
  }
  return EtaQuotient(new_level, std::move(exps));
}

EtaQuotient EtaQuotient::operator*(const EtaQuotient& other) const {
  if (level_ != other.level_) {
    throw std::invalid_argument("cannot multiply eta quotients of different levels");
  }
  std::vector<int> exps(exponents_);
  for (std::size_t i = 0; i < exps.size(); ++i) {
    exps[i] += other.exponents_[i];
  }
  return EtaQuotient(level_, std::move(exps));
}

std::string to_string(const EtaQuotient& q) {
  std::string out = "eta_" + std::to_string(q.level()) + "[";
  for (std::size_t i = 0; i < q.exponents().size(); ++i) {
    if (i != 0) {
      out += ',';
    }
    out += std::to_string(q.exponents()[i]);
  }
  out += ']';
  return out;
}

EtaQuotient parse_eta_quotient(std::string_view text) {
  const auto fail = [&](const char* why) {
    return std::invalid_argument(std::string("cannot parse eta quotient '") + std::string(text) + "': " + why);
  };
  std::size_t pos = 0;
  const auto skip_ws = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
      ++pos;
    }
  };
  const auto read_int = [&](bool allow_sign) -> long long {
    skip_ws();
    const std::size_t start = pos;
    if (allow_sign && pos < text.size() && (text[pos] == '-' || text[pos] == '+')) {
      ++pos;
    }
    const std::size_t digits_start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      ++pos;
    }
    if (pos == digits_start || pos - digits_start > 12) {
      throw fail("expected an integer");
    }
    return std::stoll(std::string(text.substr(start, pos - start)));
  };

  skip_ws();
  if (text.substr(pos, 4) != "eta_") {
    throw fail("missing 'eta_' prefix");
  }
  pos += 4;
  const long long level = read_int(false);
  if (level < 1) {
    throw fail("level must be positive");
  }
  skip_ws();
  if (pos >= text.size() || text[pos] != '[') {
    throw fail("missing '['");
  }
  ++pos;
  std::vector<int> exps;
  skip_ws();
  if (pos < text.size() && text[pos] == ']') {
    throw fail("empty exponent list");
  }
  while (true) {
    exps.push_back(static_cast<int>(read_int(true)));
    skip_ws();
    if (pos < text.size() && text[pos] == ',') {
      ++pos;
      continue;
    }
    if (pos < text.size() && text[pos] == ']') {
      ++pos;
      break;
    }
    throw fail("expected ',' or ']'");
  }
  skip_ws();
  if (pos != text.size()) {
    throw fail("trailing characters");
  }
  return EtaQuotient(level, std::move(exps));
}

Rational weight(const EtaQuotient& q) {
  long sum = 0;
  for (int r : q.exponents()) {
    sum += r;
  }
  return make_rational(sum, 2);
}

NewmanConditions newman_conditions(const EtaQuotient& q) {
  const std::int64_t n = q.level();
  std::int64_t lower = 0;
  std::int64_t upper = 0;
  for (std::size_t i = 0; i < q.divisors().size(); ++i) {
    lower += q.divisors()[i] * q.exponents()[i];
    upper += (n / q.divisors()[i]) * q.exponents()[i];
  }
  NewmanConditions out;
  out.divisor_sum = lower % 24 == 0;
  out.codivisor_sum = upper % 24 == 0;
  out.square_product = true;
  for (const auto& [p, e] : factorize(n)) {
    std::int64_t total = 0;
    for (std::size_t i = 0; i < q.divisors().size(); ++i) {
      total += static_cast<std::int64_t>(valuation(q.divisors()[i], p)) * q.exponents()[i];
    }
    if (total % 2 != 0) {
      out.square_product = false;
    }
  }
  return out;
}

Rational cusp_order(const EtaQuotient& q, std::int64_t d) {
  const std::int64_t n = q.level();
  if (d < 1 || n % d != 0) {
    throw std::invalid_argument("cusp_order: " + std::to_string(d) + " does not divide " + std::to_string(n));
  }
  const std::int64_t g = std::gcd(d, n / d);
  Rational sum(0);
  for (std::size_t i = 0; i < q.divisors().size(); ++i) {
    const std::int64_t di = q.divisors()[i];
    const std::int64_t gi = std::gcd(d, di);
    sum += Rational(Integer(gi * gi) * q.exponents()[i], Integer(g) * d * di);
  }
  Rational out = sum * Rational(n, 24);
  out.canonicalize();
  return out;
}

CuspProfile cusp_profile(const EtaQuotient& q) {
  CuspProfile out;
  for (std::int64_t d : q.divisors()) {
    out.denominators.push_back(d);
    out.orders.push_back(cusp_order(q, d));
    out.multiplicities.push_back(cusp_multiplicity(q.level(), d));
  }
  return out;
}

bool is_holomorphic(const EtaQuotient& q) {
  if (!newman_conditions(q).all()) {
    return false;
  }
  return std::all_of(q.divisors().begin(), q.divisors().end(), [&](std::int64_t d) { return cusp_order(q, d) >= 0; });
}

QExpansion q_expansion(const EtaQuotient& q, std::int64_t prec) {
  detail::require_prec(prec);
  const QExpansion euler = euler_series<Rational>(prec);
  CoeffVector<Rational> one = detail::zeros<Rational>(prec);
  one(0) = 1;
  QExpansion acc(Rational(0), one);
  std::int64_t lower = 0;
  for (std::size_t i = 0; i < q.divisors().size(); ++i) {
    const int r = q.exponents()[i];
    lower += q.divisors()[i] * r;
    if (r == 0) {
      continue;
    }
    acc = mul(acc, int_pow(rescale_variable(euler, q.divisors()[i], prec), r, prec), prec);
  }
  return QExpansion(make_rational(lower, 24), acc.coeffs());
}

namespace detail {

std::vector<std::int64_t> log_derivative_weights(const std::vector<std::int64_t>& divisors, const std::vector<int>& exponents,
                                                 std::int64_t count) {
  std::vector<std::int64_t> c(static_cast<std::size_t>(std::max<std::int64_t>(count, 1)), 0);
  const std::vector<std::int64_t> sigma = divisor_sums(c.size());
  for (std::size_t i = 0; i < divisors.size(); ++i) {
    const std::int64_t delta = divisors[i];
    const int r = exponents[i];
    if (r == 0) {
      continue;
    }
    for (std::int64_t m = 1; m * delta < count; ++m) {
      c[m * delta] -= r * delta * sigma[m];
    }
  }
  return c;
}

}  // namespace detail

}  // namespace etaforge
