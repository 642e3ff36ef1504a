#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "rfm/error.hpp"
#include "rfm/number.hpp"

namespace rfm {

/// Dense row-major matrix. Lattices and equation systems are stored as rows
/// throughout the library.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  Matrix(std::size_t rows, std::size_t cols, const T& fill)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<T>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) throw Error("ragged matrix initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n, T(0));
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }
  static Matrix zero(std::size_t rows, std::size_t cols) { return Matrix(rows, cols, T(0)); }
  static Matrix from_rows(const std::vector<std::vector<T>>& rows, std::size_t cols) {
    Matrix m(rows.size(), cols, T(0));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != cols) throw Error("ragged matrix rows");
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::vector<T> row_vector(std::size_t i) const {
    auto r = row(i);
    return {r.begin(), r.end()};
  }
  std::vector<T> col_vector(std::size_t j) const {
    std::vector<T> c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  void swap_rows(std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t j = 0; j < cols_; ++j) std::swap((*this)(a, j), (*this)(b, j));
  }
  void swap_cols(std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t i = 0; i < rows_; ++i) std::swap((*this)(i, a), (*this)(i, b));
  }
  void negate_row(std::size_t i) {
    for (auto& x : row(i)) x = -x;
  }
  /// row(dst) += factor * row(src)
  void add_row_multiple(std::size_t dst, std::size_t src, const T& factor) {
    for (std::size_t j = 0; j < cols_; ++j) (*this)(dst, j) += factor * (*this)(src, j);
  }
  void add_col_multiple(std::size_t dst, std::size_t src, const T& factor) {
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, dst) += factor * (*this)(i, src);
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix select_rows(std::size_t first, std::size_t last) const {
    Matrix m(last - first, cols_);
    for (std::size_t i = first; i < last; ++i)
      for (std::size_t j = 0; j < cols_; ++j) m(i - first, j) = (*this)(i, j);
    return m;
  }
  Matrix select_cols(const std::vector<std::size_t>& cols) const {
    Matrix m(rows_, cols.size());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols.size(); ++j) m(i, j) = (*this)(i, cols[j]);
    return m;
  }

  /// Stacks `below` under this matrix.
  Matrix stack(const Matrix& below) const {
    if (rows_ != 0 && below.rows_ != 0 && cols_ != below.cols_)
      throw Error("dimension mismatch in stack");
    std::size_t c = rows_ ? cols_ : below.cols_;
    Matrix m(rows_ + below.rows_, c);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < c; ++j) m(i, j) = (*this)(i, j);
    for (std::size_t i = 0; i < below.rows_; ++i)
      for (std::size_t j = 0; j < c; ++j) m(rows_ + i, j) = below(i, j);
    return m;
  }

  bool is_zero() const {
    for (const auto& x : data_)
      if (!(x == T(0))) return false;
    return true;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw Error("dimension mismatch in matrix product");
    Matrix c(a.rows_, b.cols_, T(0));
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const T& aik = a(i, k);
        if (aik == T(0)) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend std::vector<T> operator*(const Matrix& a, const std::vector<T>& v) {
    if (a.cols_ != v.size()) throw Error("dimension mismatch in matrix-vector product");
    std::vector<T> r(a.rows_, T(0));
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t j = 0; j < a.cols_; ++j) r[i] += a(i, j) * v[j];
    return r;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using IntMatrix = Matrix<Int>;
using RatMatrix = Matrix<Rat>;
using IntVector = std::vector<Int>;
using RatVector = std::vector<Rat>;

template <class To, class From>
Matrix<To> matrix_cast(const Matrix<From>& m) {
  Matrix<To> r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) = To(m(i, j));
  return r;
}

inline RatMatrix to_rational(const IntMatrix& m) { return matrix_cast<Rat>(m); }

inline RatVector to_rational(const IntVector& v) { return {v.begin(), v.end()}; }

/// Exact integer entries of a rational matrix; throws if any entry is fractional.
inline IntMatrix to_integer(const RatMatrix& m) {
  IntMatrix r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (!is_integer(m(i, j))) throw Error("non-integral entry " + to_string(m(i, j)));
      r(i, j) = m(i, j).get_num();
    }
  return r;
}

inline Rat dot(std::span<const Rat> a, std::span<const Rat> b) {
  Rat s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <class T>
std::string to_string(const Matrix<T>& m) {
  std::string s = "[";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) s += "; ";
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) s += ", ";
      if constexpr (std::is_integral_v<T>)
        s += std::to_string(m(i, j));
      else
        s += to_string(m(i, j));
    }
  }
  return s + "]";
}

// ---------------------------------------------------------------------------
// Rational elimination.

struct RowEchelon {
  RatMatrix reduced;                 // reduced row echelon form, zero rows dropped
  std::vector<std::size_t> pivots;   // pivot column of each row
  RatMatrix transform;               // reduced = transform * input (rows of the kept part)
};

/// Reduced row echelon form over Q, with the row transform that produces it.
inline RowEchelon rref(const RatMatrix& m) {
  RatMatrix a = m;
  RatMatrix t = RatMatrix::identity(m.rows());
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < a.cols() && r < a.rows(); ++c) {
    std::size_t p = r;
    while (p < a.rows() && a(p, c) == 0) ++p;
    if (p == a.rows()) continue;
    a.swap_rows(p, r);
    t.swap_rows(p, r);
    Rat inv = 1 / a(r, c);
    for (auto& x : a.row(r)) x *= inv;
    for (auto& x : t.row(r)) x *= inv;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      if (i == r || a(i, c) == 0) continue;
      Rat f = -a(i, c);
      a.add_row_multiple(i, r, f);
      t.add_row_multiple(i, r, f);
    }
    pivots.push_back(c);
    ++r;
  }
  return {a.select_rows(0, r), pivots, t.select_rows(0, r)};
}

inline std::size_t rank(const RatMatrix& m) { return rref(m).pivots.size(); }
inline std::size_t rank(const IntMatrix& m) { return rank(to_rational(m)); }

/// Inverse of a square rational matrix; throws if singular.
inline RatMatrix inverse(const RatMatrix& m) {
  if (m.rows() != m.cols()) throw Error("inverse of non-square matrix");
  auto e = rref(m);
  if (e.pivots.size() != m.rows()) throw PreconditionError("singular", "matrix is not invertible");
  return e.transform;
}

/// Determinant by fraction-free (Bareiss) elimination.
template <class I>
I determinant(Matrix<I> a) {
  if (a.rows() != a.cols()) throw Error("determinant of non-square matrix");
  const std::size_t n = a.rows();
  if (n == 0) return I(1);
  I sign = 1, prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (num::is_zero(a(k, k))) {
      std::size_t p = k + 1;
      while (p < n && num::is_zero(a(p, k))) ++p;
      if (p == n) return I(0);
      a.swap_rows(p, k);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j)
        a(i, j) = num::exact_div(a(i, j) * a(k, k) - a(i, k) * a(k, j), prev);
    prev = a(k, k);
  }
  return sign * a(n - 1, n - 1);
}

inline Rat determinant(const RatMatrix& m) {
  if (m.rows() != m.cols()) throw Error("determinant of non-square matrix");
  RatMatrix a = m;
  Rat det = 1;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    std::size_t p = c;
    while (p < a.rows() && a(p, c) == 0) ++p;
    if (p == a.rows()) return 0;
    if (p != c) {
      a.swap_rows(p, c);
      det = -det;
    }
    det *= a(c, c);
    for (std::size_t i = c + 1; i < a.rows(); ++i)
      if (a(i, c) != 0) a.add_row_multiple(i, c, -a(i, c) / a(c, c));
  }
  return det;
}

/// Some rational solution of m * x = rhs, or throws if inconsistent.
inline RatVector solve_particular(const RatMatrix& m, const RatVector& rhs) {
  RatMatrix aug(m.rows(), m.cols() + 1);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) aug(i, j) = m(i, j);
    aug(i, m.cols()) = rhs[i];
  }
  auto e = rref(aug);
  RatVector x(m.cols(), Rat(0));
  for (std::size_t r = 0; r < e.pivots.size(); ++r) {
    if (e.pivots[r] == m.cols()) throw PreconditionError("inconsistent", "linear system has no solution");
    x[e.pivots[r]] = e.reduced(r, m.cols());
  }
  return x;
}

}  // namespace rfm
