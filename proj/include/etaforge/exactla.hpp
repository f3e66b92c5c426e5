#pragma once

// Dense exact linear algebra over Eigen matrices, templated on the scalar.
//
// Rational matrices are reduced fraction-free: every row is kept as a primitive
// integer vector (divided by its content after each elimination step) and only
// divided by its pivot at the end. Other fields (ModP) use plain elimination.

#include "etaforge/modp.hpp"
#include "etaforge/rational.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace etaforge {

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Rows are truncated q-expansions, columns the coefficients of q^0..q^B.
using CoeffMatrix = Matrix<Rational>;

template <class Scalar>
struct RrefResult {
  Matrix<Scalar> reduced;
  std::vector<Eigen::Index> pivots;  // pivot column of row i, for i < rank

  Eigen::Index rank() const { return static_cast<Eigen::Index>(pivots.size()); }
};

namespace detail {

template <class Scalar>
RrefResult<Scalar> rref_field(Matrix<Scalar> m) {
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  RrefResult<Scalar> out;
  Eigen::Index r = 0;
  for (Eigen::Index c = 0; c < cols && r < rows; ++c) {
    Eigen::Index piv = r;
    while (piv < rows && m(piv, c) == Scalar(0)) {
      ++piv;
    }
    if (piv == rows) {
      continue;
    }
    if (piv != r) {
      m.row(piv).swap(m.row(r));
    }
    const Scalar inv = Scalar(1) / m(r, c);
    for (Eigen::Index j = c; j < cols; ++j) {
      m(r, j) = m(r, j) * inv;
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (i == r || m(i, c) == Scalar(0)) {
        continue;
      }
      const Scalar factor = m(i, c);
      for (Eigen::Index j = c; j < cols; ++j) {
        if (m(r, j) != Scalar(0)) {
          m(i, j) = m(i, j) - factor * m(r, j);
        }
      }
    }
    out.pivots.push_back(c);
    ++r;
  }
  out.reduced = std::move(m);
  return out;
}

RrefResult<Rational> rref_rational(const Matrix<Rational>& m);

}  // namespace detail

/// Reduced row echelon form; pivots are the first nonzero column in order,
/// taken from the topmost available row.
template <class Scalar>
RrefResult<Scalar> rref(const Matrix<Scalar>& m) {
  return detail::rref_field<Scalar>(m);
}

template <>
inline RrefResult<Rational> rref<Rational>(const Matrix<Rational>& m) {
  return detail::rref_rational(m);
}

template <class Scalar>
Eigen::Index rank(const Matrix<Scalar>& m) {
  return rref<Scalar>(m).rank();
}

/// Coefficients a with sum_i a_i basis_i == target, or nullopt when the target
/// is outside the span. Dependent bases are resolved by preferring earlier
/// vectors as pivots; coefficients of non-pivot vectors are zero.
template <class Scalar>
std::optional<std::vector<Scalar>> solve_in_span(const std::vector<Vector<Scalar>>& basis, const Vector<Scalar>& target) {
  const Eigen::Index len = target.size();
  for (const auto& b : basis) {
    if (b.size() != len) {
      throw std::invalid_argument("solve_in_span: dimension mismatch");
    }
  }
  const Eigen::Index n = static_cast<Eigen::Index>(basis.size());
  Matrix<Scalar> aug(len, n + 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < len; ++i) {
      aug(i, j) = basis[static_cast<std::size_t>(j)](i);
    }
  }
  for (Eigen::Index i = 0; i < len; ++i) {
    aug(i, n) = target(i);
  }
  const RrefResult<Scalar> red = rref<Scalar>(aug);
  if (!red.pivots.empty() && red.pivots.back() == n) {
    return std::nullopt;
  }
  std::vector<Scalar> coeffs(static_cast<std::size_t>(n), Scalar(0));
  for (Eigen::Index r = 0; r < red.rank(); ++r) {
    coeffs[static_cast<std::size_t>(red.pivots[static_cast<std::size_t>(r)])] = red.reduced(r, n);
  }
  return coeffs;
}

/// Some x with a x = b (free variables set to zero), or nullopt when inconsistent.
template <class Scalar>
std::optional<Vector<Scalar>> solve_linear_system(const Matrix<Scalar>& a, const Vector<Scalar>& b) {
  if (a.rows() != b.size()) {
    throw std::invalid_argument("solve_linear_system: dimension mismatch");
  }
  const Eigen::Index n = a.cols();
  Matrix<Scalar> aug(a.rows(), n + 1);
  aug.leftCols(n) = a;
  aug.col(n) = b;
  const RrefResult<Scalar> red = rref<Scalar>(aug);
  if (!red.pivots.empty() && red.pivots.back() == n) {
    return std::nullopt;
  }
  Vector<Scalar> x(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    x(j) = Scalar(0);
  }
  for (Eigen::Index r = 0; r < red.rank(); ++r) {
    x(red.pivots[static_cast<std::size_t>(r)]) = red.reduced(r, n);
  }
  return x;
}

/// Inverse of a square matrix, or nullopt when singular.
template <class Scalar>
std::optional<Matrix<Scalar>> inverse(const Matrix<Scalar>& m) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n) {
    throw std::invalid_argument("inverse: matrix is not square");
  }
  Matrix<Scalar> aug(n, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      aug(i, j) = m(i, j);
      aug(i, n + j) = (i == j) ? Scalar(1) : Scalar(0);
    }
  }
  const RrefResult<Scalar> red = rref<Scalar>(aug);
  if (red.rank() < n || red.pivots[static_cast<std::size_t>(n - 1)] != n - 1) {
    return std::nullopt;
  }
  Matrix<Scalar> inv(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      inv(i, j) = red.reduced(i, n + j);
    }
  }
  return inv;
}

/// Incrementally maintained echelon basis of a subspace of Scalar^dim.
///
/// Rows are stored reduced against each other's pivots so reducing a vector
/// costs one pass over the stored rows.
template <class Scalar>
class EchelonBasis {
 public:
  explicit EchelonBasis(Eigen::Index dim) : dim_(dim) {}

  Eigen::Index dim() const { return dim_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(rows_.size()); }

  Vector<Scalar> reduce(Vector<Scalar> v) const {
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      const Eigen::Index p = pivots_[k];
      if (v(p) != Scalar(0)) {
        const Scalar f = v(p);
        for (Eigen::Index j = 0; j < dim_; ++j) {
          if (rows_[k](j) != Scalar(0)) {
            v(j) = v(j) - f * rows_[k](j);
          }
        }
      }
    }
    return v;
  }

  bool contains(const Vector<Scalar>& v) const { return is_zero(reduce(v)); }

  /// Adds v; returns false (and leaves the basis unchanged) when v is already in the span.
  bool insert(const Vector<Scalar>& v) {
    Vector<Scalar> red = reduce(v);
    Eigen::Index p = 0;
    while (p < dim_ && red(p) == Scalar(0)) {
      ++p;
    }
    if (p == dim_) {
      return false;
    }
    const Scalar inv = Scalar(1) / red(p);
    for (Eigen::Index j = 0; j < dim_; ++j) {
      red(j) = red(j) * inv;
    }
    for (auto& row : rows_) {
      if (row(p) != Scalar(0)) {
        const Scalar f = row(p);
        for (Eigen::Index j = 0; j < dim_; ++j) {
          if (red(j) != Scalar(0)) {
            row(j) = row(j) - f * red(j);
          }
        }
      }
    }
    rows_.push_back(std::move(red));
    pivots_.push_back(p);
    return true;
  }

  const std::vector<Eigen::Index>& pivots() const { return pivots_; }
  const std::vector<Vector<Scalar>>& rows() const { return rows_; }

  static bool is_zero(const Vector<Scalar>& v) {
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (v(j) != Scalar(0)) {
        return false;
      }
    }
    return true;
  }

 private:
  Eigen::Index dim_;
  std::vector<Vector<Scalar>> rows_;
  std::vector<Eigen::Index> pivots_;
};

/// Reduction of an integer vector modulo p.
Vector<ModP> reduce_mod_p(const Vector<Integer>& v);
Vector<ModP> reduce_mod_p(const Vector<Rational>& v);

}  // namespace etaforge
