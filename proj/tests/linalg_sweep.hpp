#pragma once

// Oracle comparison of hnf / snf / kernel_basis / saturate on one matrix.
// The oracles never call the routines under test: lattices are compared
// through determinantal divisors, membership in a Hermite basis by
// back-substitution, and primitivity by the gcd of maximal minors.

#include <array>
#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "rfm/normal_form.hpp"

namespace sweep {

template <class I>
using M = rfm::Matrix<I>;

// Determinantal divisors by enumerating minors over bitmasks; no allocation,
// fine up to 8 rows and 5 columns.
template <class I>
I det_small(const M<I>& m, const std::array<std::size_t, 8>& rows,
            const std::array<std::size_t, 8>& cols, std::size_t k) {
  if (k == 1) return m(rows[0], cols[0]);
  if (k == 2) return m(rows[0], cols[0]) * m(rows[1], cols[1]) - m(rows[0], cols[1]) * m(rows[1], cols[0]);
  I total = 0;
  std::array<std::size_t, 8> sub_rows{}, sub_cols{};
  for (std::size_t i = 1; i < k; ++i) sub_rows[i - 1] = rows[i];
  for (std::size_t j = 0; j < k; ++j) {
    if (rfm::num::is_zero(m(rows[0], cols[j]))) continue;
    std::size_t t = 0;
    for (std::size_t c = 0; c < k; ++c)
      if (c != j) sub_cols[t++] = cols[c];
    I term = m(rows[0], cols[j]) * det_small(m, sub_rows, sub_cols, k - 1);
    if (j % 2) total -= term;
    else total += term;
  }
  return total;
}

// gcd of the k x k minors; stops early once it reaches 1.
template <class I>
I minor_gcd(const M<I>& m, std::size_t k) {
  if (k == 0) return I(1);
  if (k > m.rows() || k > m.cols()) return I(0);
  std::array<std::size_t, 8> rows{}, cols{};
  I g = 0;
  for (unsigned rm = 0; rm < (1u << m.rows()); ++rm) {
    if (static_cast<std::size_t>(std::popcount(rm)) != k) continue;
    std::size_t t = 0;
    for (std::size_t i = 0; i < m.rows(); ++i)
      if (rm >> i & 1u) rows[t++] = i;
    for (unsigned cm = 0; cm < (1u << m.cols()); ++cm) {
      if (static_cast<std::size_t>(std::popcount(cm)) != k) continue;
      std::size_t u = 0;
      for (std::size_t j = 0; j < m.cols(); ++j)
        if (cm >> j & 1u) cols[u++] = j;
      g = rfm::num::gcd_of(g, det_small(m, rows, cols, k));
      if (g == I(1)) return g;
    }
  }
  return rfm::num::abs_of(g);
}

template <class I>
struct Divisors {
  std::array<I, 6> gcd{};  // gcd[k] = gcd of k x k minors, gcd[0] = 1
  std::size_t rank = 0;
};

template <class I>
Divisors<I> divisors(const M<I>& m) {
  Divisors<I> out;
  out.gcd[0] = 1;
  for (std::size_t k = 1; k <= std::min(m.rows(), m.cols()); ++k) {
    out.gcd[k] = minor_gcd(m, k);
    if (rfm::num::is_zero(out.gcd[k])) break;
    out.rank = k;
  }
  return out;
}

template <class I>
bool primitive(const M<I>& b) {
  return minor_gcd(b, b.rows()) == I(1);
}

// v in the row lattice of an echelon basis with nonzero rows.
template <class I>
bool echelon_contains(const M<I>& h, std::size_t rows, std::vector<I> v) {
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t c = 0;
    while (rfm::num::is_zero(h(i, c))) ++c;
    for (std::size_t j = 0; j < c; ++j)
      if (!rfm::num::is_zero(v[j])) return false;
    if (!rfm::num::divides(h(i, c), v[c])) return false;
    I q = rfm::num::exact_div(v[c], h(i, c));
    for (std::size_t j = 0; j < v.size(); ++j) v[j] -= q * h(i, j);
  }
  for (const auto& e : v)
    if (!rfm::num::is_zero(e)) return false;
  return true;
}

template <class I>
std::vector<I> row_of(const M<I>& m, std::size_t i) {
  std::vector<I> v(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) v[j] = m(i, j);
  return v;
}

template <class I>
M<I> stack(const M<I>& a, const M<I>& b) {
  M<I> s(a.rows() + b.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = a(i, j);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) s(a.rows() + i, j) = b(i, j);
  return s;
}

// Empty string on agreement, otherwise the first disagreement.
template <class I>
std::string check_matrix(const M<I>& a) {
  const auto div = divisors(a);
  const std::size_t r = div.rank;
  const std::size_t n = a.cols();

  // Hermite form: shape, rank, and the same lattice
  auto hf = rfm::hnf(a);
  const M<I>& h = hf.h;
  if (!rfm::is_hermite_form(h)) return "hnf: not in Hermite form";
  if (hf.rank != r) return "hnf: rank differs from minors";
  for (std::size_t i = r; i < h.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (!rfm::num::is_zero(h(i, j))) return "hnf: nonzero row below rank";
  for (std::size_t i = 0; i < a.rows(); ++i)
    if (!echelon_contains(h, r, row_of(a, i))) return "hnf: input row outside lattice";
  if (r > 0 && minor_gcd(h, r) != div.gcd[r]) return "hnf: index differs";

  // Smith form against determinantal divisors
  auto d = rfm::snf(a).d;
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = 0; j < d.cols(); ++j) {
      I want = (i == j && i < r) ? rfm::num::exact_div(div.gcd[i + 1], div.gcd[i]) : I(0);
      if (d(i, j) != want) return "snf: invariant factors differ";
    }

  // kernel: n - r primitive vectors annihilated by a
  auto k = rfm::kernel_basis(a);
  if (k.rows() != n - r || k.cols() != n) return "kernel: wrong shape";
  for (std::size_t t = 0; t < k.rows(); ++t)
    for (std::size_t i = 0; i < a.rows(); ++i) {
      I s = 0;
      for (std::size_t j = 0; j < n; ++j) s += a(i, j) * k(t, j);
      if (!rfm::num::is_zero(s)) return "kernel: vector not annihilated";
    }
  if (!primitive(k)) return "kernel: dependent or not saturated";

  // saturation of independent rows: primitive, same span, contains input
  if (r == a.rows()) {
    auto s = rfm::saturate(a);
    if (s.rows() != r) return "saturate: wrong row count";
    if (!primitive(s)) return "saturate: not primitive";
    if (r < n && !rfm::num::is_zero(minor_gcd(stack(a, s), r + 1))) return "saturate: span differs";
    if (r > 0 && !rfm::is_hermite_form(s)) return "saturate: not in Hermite form";
    for (std::size_t i = 0; i < a.rows(); ++i)
      if (!echelon_contains(s, r, row_of(a, i))) return "saturate: input row outside lattice";
  }
  return {};
}

}  // namespace sweep
