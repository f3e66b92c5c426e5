#include "etaforge/arith.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace etaforge {

std::vector<std::int64_t> divisors(std::int64_t n) {
  if (n < 1) {
    throw std::invalid_argument("divisors: n must be positive");
  }
  std::vector<std::int64_t> small;
  std::vector<std::int64_t> large;
  for (std::int64_t i = 1; i * i <= n; ++i) {
    if (n % i == 0) {
      small.push_back(i);
      if (i != n / i) {
        large.push_back(n / i);
      }
    }
  }
  small.insert(small.end(), large.rbegin(), large.rend());
  return small;
}

std::vector<std::pair<std::int64_t, int>> factorize(std::int64_t n) {
  if (n < 1) {
    throw std::invalid_argument("factorize: n must be positive");
  }
  std::vector<std::pair<std::int64_t, int>> out;
  for (std::int64_t p = 2; p * p <= n; ++p) {
    if (n % p == 0) {
      int e = 0;
      while (n % p == 0) {
        n /= p;
        ++e;
      }
      out.emplace_back(p, e);
    }
  }
  if (n > 1) {
    out.emplace_back(n, 1);
  }
  return out;
}

int valuation(std::int64_t n, std::int64_t p) {
  int v = 0;
  while (n != 0 && n % p == 0) {
    n /= p;
    ++v;
  }
  return v;
}

std::int64_t euler_phi(std::int64_t n) {
  std::int64_t result = n;
  for (const auto& [p, e] : factorize(n)) {
    result = result / p * (p - 1);
  }
  return result;
}

std::int64_t index_gamma0(std::int64_t level) {
  if (level < 1) {
    throw std::invalid_argument("index_gamma0: level must be positive");
  }
  std::int64_t mu = level;
  for (const auto& [p, e] : factorize(level)) {
    mu = mu / p * (p + 1);
  }
  return mu;
}

std::int64_t sturm_bound(std::int64_t level, int weight) {
  if (weight < 2 || weight % 2 != 0) {
    throw std::invalid_argument("sturm_bound: weight must be a positive even integer");
  }
  return weight * index_gamma0(level) / 12;
}

std::int64_t cusp_multiplicity(std::int64_t level, std::int64_t d) {
  return euler_phi(std::gcd(d, level / d));
}

std::vector<std::int64_t> divisor_sums(std::size_t count) {
  std::vector<std::int64_t> sigma(count, 0);
  for (std::size_t d = 1; d < count; ++d) {
    for (std::size_t m = d; m < count; m += d) {
      sigma[m] += static_cast<std::int64_t>(d);
    }
  }
  return sigma;
}

std::int64_t binomial_saturating(std::int64_t n, std::int64_t k, std::int64_t cap) {
  if (k < 0 || k > n) {
    return 0;
  }
  k = std::min(k, n - k);
  __int128 acc = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    acc = acc * (n - k + i) / i;
    if (acc > cap) {
      return cap + 1;
    }
  }
  return static_cast<std::int64_t>(acc);
}

}  // namespace etaforge
