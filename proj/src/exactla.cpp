#include "etaforge/exactla.hpp"

#include <stdexcept>

namespace etaforge {

namespace {

using IntRow = std::vector<Integer>;

void make_primitive(IntRow& row) {
  Integer g = 0;
  for (const Integer& x : row) {
    if (x != 0) {
      mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_mpz_t());
      if (g == 1) {
        return;
      }
    }
  }
  if (g > 1) {
    for (Integer& x : row) {
      if (x != 0) {
        mpz_divexact(x.get_mpz_t(), x.get_mpz_t(), g.get_mpz_t());
      }
    }
  }
}

IntRow integer_row(const Matrix<Rational>& m, Eigen::Index i) {
  Integer lcm = 1;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const Integer& den = m(i, j).get_den();
    if (den != 1) {
      mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), den.get_mpz_t());
    }
  }
  IntRow row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const Rational& x = m(i, j);
    Integer scaled = lcm / x.get_den();
    row[static_cast<std::size_t>(j)] = scaled * x.get_num();
  }
  make_primitive(row);
  return row;
}

}  // namespace

namespace detail {

RrefResult<Rational> rref_rational(const Matrix<Rational>& m) {
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  std::vector<IntRow> work;
  work.reserve(static_cast<std::size_t>(rows));
  for (Eigen::Index i = 0; i < rows; ++i) {
    work.push_back(integer_row(m, i));
  }

  RrefResult<Rational> out;
  std::size_t r = 0;
  Integer tmp;
  for (Eigen::Index c = 0; c < cols && r < work.size(); ++c) {
    const auto col = static_cast<std::size_t>(c);
    std::size_t piv = r;
    while (piv < work.size() && work[piv][col] == 0) {
      ++piv;
    }
    if (piv == work.size()) {
      continue;
    }
    std::swap(work[piv], work[r]);
    const IntRow& prow = work[r];
    for (std::size_t i = 0; i < work.size(); ++i) {
      if (i == r || work[i][col] == 0) {
        continue;
      }
      // row_i <- p * row_i - e * row_r, scaled down by g = gcd(p, e) first.
      Integer g;
      mpz_gcd(g.get_mpz_t(), prow[col].get_mpz_t(), work[i][col].get_mpz_t());
      const Integer a = prow[col] / g;
      const Integer b = work[i][col] / g;
      IntRow& row = work[i];
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] == 0 && prow[j] == 0) {
          continue;
        }
        mpz_mul(row[j].get_mpz_t(), row[j].get_mpz_t(), a.get_mpz_t());
        if (prow[j] != 0) {
          mpz_mul(tmp.get_mpz_t(), prow[j].get_mpz_t(), b.get_mpz_t());
          mpz_sub(row[j].get_mpz_t(), row[j].get_mpz_t(), tmp.get_mpz_t());
        }
      }
      make_primitive(row);
    }
    out.pivots.push_back(c);
    ++r;
  }

  out.reduced.resize(rows, cols);
  for (std::size_t i = 0; i < work.size(); ++i) {
    if (i < out.pivots.size()) {
      const Integer& p = work[i][static_cast<std::size_t>(out.pivots[i])];
      for (std::size_t j = 0; j < static_cast<std::size_t>(cols); ++j) {
        Rational x(work[i][j], p);
        x.canonicalize();
        out.reduced(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
      }
    } else {
      for (std::size_t j = 0; j < static_cast<std::size_t>(cols); ++j) {
        out.reduced(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0;
      }
    }
  }
  return out;
}

}  // namespace detail

Vector<ModP> reduce_mod_p(const Vector<Integer>& v) {
  Vector<ModP> out(v.size());
  const Integer p(static_cast<unsigned long>(ModP::kModulus));
  Integer r;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    mpz_fdiv_r(r.get_mpz_t(), v(i).get_mpz_t(), p.get_mpz_t());
    out(i) = ModP::from_raw(r.get_ui());
  }
  return out;
}

Vector<ModP> reduce_mod_p(const Vector<Rational>& v) {
  Vector<ModP> out(v.size());
  const Integer p(static_cast<unsigned long>(ModP::kModulus));
  Integer num;
  Integer den;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    mpz_fdiv_r(num.get_mpz_t(), v(i).get_num_mpz_t(), p.get_mpz_t());
    mpz_fdiv_r(den.get_mpz_t(), v(i).get_den_mpz_t(), p.get_mpz_t());
    if (den == 0) {
      throw std::domain_error("reduce_mod_p: denominator divisible by the working prime");
    }
    out(i) = ModP::from_raw(num.get_ui()) / ModP::from_raw(den.get_ui());
  }
  return out;
}

}  // namespace etaforge
