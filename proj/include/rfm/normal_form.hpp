#pragma once

// Hermite and Smith normal forms, integer kernels and lattice saturation.
// All routines are templates over the integer type; the library uses
// mpz (rfm::Int) everywhere, the int64 instantiation only backs exhaustive
// small-entry sweeps in the test suite.

#include <cstddef>
#include <cstdint>
#include <utility>

#include "rfm/error.hpp"
#include "rfm/matrix.hpp"
#include "rfm/number.hpp"

namespace rfm {

template <class I>
struct HermiteForm {
  Matrix<I> h;  // h == u * m
  Matrix<I> u;  // unimodular
  std::size_t rank = 0;
};

template <class I>
struct SmithForm {
  Matrix<I> d;  // d == u * m * v, diagonal, d(i,i) | d(i+1,i+1), nonnegative
  Matrix<I> u;
  Matrix<I> v;
};

namespace detail {

// Replaces rows (p, q) by the unimodular combination that puts gcd(a, b) in
// row p and zero in row q at the given column.
template <class I>
void gcd_rows(Matrix<I>& m, Matrix<I>& u, std::size_t p, std::size_t q, std::size_t col) {
  const I a = m(p, col), b = m(q, col);
  if (num::divides(a, b)) {
    const I f = -num::exact_div(b, a);
    m.add_row_multiple(q, p, f);
    u.add_row_multiple(q, p, f);
    return;
  }
  auto [g, s, t] = num::ext_gcd(a, b);
  const I ag = num::exact_div(a, g), bg = num::exact_div(b, g);
  auto mix = [&](Matrix<I>& x) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      I xp = x(p, j), xq = x(q, j);
      x(p, j) = s * xp + t * xq;
      x(q, j) = ag * xq - bg * xp;
    }
  };
  mix(m);
  mix(u);
}

template <class I>
void gcd_cols(Matrix<I>& m, Matrix<I>& v, std::size_t p, std::size_t q, std::size_t row) {
  const I a = m(row, p), b = m(row, q);
  if (num::divides(a, b)) {
    const I f = -num::exact_div(b, a);
    m.add_col_multiple(q, p, f);
    v.add_col_multiple(q, p, f);
    return;
  }
  auto [g, s, t] = num::ext_gcd(a, b);
  const I ag = num::exact_div(a, g), bg = num::exact_div(b, g);
  auto mix = [&](Matrix<I>& x) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      I xp = x(i, p), xq = x(i, q);
      x(i, p) = s * xp + t * xq;
      x(i, q) = ag * xq - bg * xp;
    }
  };
  mix(m);
  mix(v);
}

}  // namespace detail

/// Row Hermite normal form: echelon, positive pivots, entries above each
/// pivot reduced into [0, pivot), zero rows last.
template <class I>
HermiteForm<I> hnf(const Matrix<I>& input) {
  Matrix<I> m = input;
  Matrix<I> u = Matrix<I>::identity(m.rows());
  std::size_t p = 0;
  for (std::size_t col = 0; col < m.cols() && p < m.rows(); ++col) {
    for (std::size_t i = p + 1; i < m.rows(); ++i)
      if (!num::is_zero(m(i, col))) detail::gcd_rows(m, u, p, i, col);
    if (num::is_zero(m(p, col))) continue;
    if (num::sign(m(p, col)) < 0) {
      m.negate_row(p);
      u.negate_row(p);
    }
    for (std::size_t i = 0; i < p; ++i) {
      if (num::is_zero(m(i, col))) continue;
      I q = num::floor_div(m(i, col), m(p, col));
      if (num::is_zero(q)) continue;
      m.add_row_multiple(i, p, -q);
      u.add_row_multiple(i, p, -q);
    }
    ++p;
  }
  return {std::move(m), std::move(u), p};
}

/// Smith normal form with both unimodular transforms.
template <class I>
SmithForm<I> snf(const Matrix<I>& input) {
  Matrix<I> d = input;
  Matrix<I> u = Matrix<I>::identity(d.rows());
  Matrix<I> v = Matrix<I>::identity(d.cols());
  const std::size_t n = std::min(d.rows(), d.cols());
  for (std::size_t t = 0; t < n; ++t) {
    // smallest nonzero entry of the trailing block becomes the pivot
    bool found = false;
    std::size_t bi = t, bj = t;
    for (std::size_t i = t; i < d.rows(); ++i)
      for (std::size_t j = t; j < d.cols(); ++j) {
        if (num::is_zero(d(i, j))) continue;
        if (!found || num::abs_of(d(i, j)) < num::abs_of(d(bi, bj))) {
          bi = i;
          bj = j;
          found = true;
        }
      }
    if (!found) break;
    d.swap_rows(t, bi);
    u.swap_rows(t, bi);
    d.swap_cols(t, bj);
    v.swap_cols(t, bj);

    for (;;) {
      for (std::size_t i = t + 1; i < d.rows(); ++i)
        if (!num::is_zero(d(i, t))) detail::gcd_rows(d, u, t, i, t);
      for (std::size_t j = t + 1; j < d.cols(); ++j)
        if (!num::is_zero(d(t, j))) detail::gcd_cols(d, v, t, j, t);
      bool clean = true;
      for (std::size_t i = t + 1; i < d.rows() && clean; ++i)
        if (!num::is_zero(d(i, t))) clean = false;
      if (!clean) continue;
      // divisibility d(t,t) | rest of trailing block
      std::size_t bad = d.rows();
      for (std::size_t i = t + 1; i < d.rows() && bad == d.rows(); ++i)
        for (std::size_t j = t + 1; j < d.cols(); ++j)
          if (!num::divides(d(t, t), d(i, j))) {
            bad = i;
            break;
          }
      if (bad == d.rows()) break;
      d.add_row_multiple(t, bad, I(1));
      u.add_row_multiple(t, bad, I(1));
    }
    if (num::sign(d(t, t)) < 0) {
      d.negate_row(t);
      u.negate_row(t);
    }
  }
  return {std::move(d), std::move(u), std::move(v)};
}

/// Rows form a saturated Z-basis (in Hermite form) of {v in Z^n : m * v = 0}.
template <class I>
Matrix<I> kernel_basis(const Matrix<I>& m) {
  const std::size_t n = m.cols();
  if (m.rows() == 0) return Matrix<I>::identity(n);
  auto hf = hnf(m.transpose());
  Matrix<I> k = hf.u.select_rows(hf.rank, n);
  return hnf(k).h;
}

/// Row lattice (span_Q(rows) intersected with Z^n), in Hermite form.
/// Rows of `lattice` must be linearly independent.
template <class I>
Matrix<I> saturate(const Matrix<I>& lattice) {
  if (hnf(lattice).rank != lattice.rows())
    throw PreconditionError("rank deficient", "lattice generators are linearly dependent");
  if (lattice.rows() == 0) return lattice;
  return kernel_basis(kernel_basis(lattice));
}

/// |det u| == 1
template <class I>
bool is_unimodular(const Matrix<I>& u) {
  if (u.rows() != u.cols()) return false;
  I d = determinant(u);
  return num::abs_of(d) == I(1);
}

/// True iff m is in the canonical row Hermite form produced by hnf().
template <class I>
bool is_hermite_form(const Matrix<I>& m) {
  std::size_t last_pivot = 0;
  bool seen_zero_row = false, first = true;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::size_t c = 0;
    while (c < m.cols() && num::is_zero(m(i, c))) ++c;
    if (c == m.cols()) {
      seen_zero_row = true;
      continue;
    }
    if (seen_zero_row) return false;
    if (!first && c <= last_pivot) return false;
    if (num::sign(m(i, c)) <= 0) return false;
    for (std::size_t r = 0; r < i; ++r)
      if (num::sign(m(r, c)) < 0 || !(m(r, c) < m(i, c))) return false;
    for (std::size_t r = i + 1; r < m.rows(); ++r)
      if (!num::is_zero(m(r, c))) return false;
    last_pivot = c;
    first = false;
  }
  return true;
}

}  // namespace rfm
