#pragma once

// Independent brute-force oracles shared by the unit and acceptance suites.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "rfm/matrix.hpp"
#include "rfm/normal_form.hpp"
#include "rfm/number.hpp"

namespace oracle {

using rfm::Int;
using rfm::Matrix;
using rfm::Rat;

// Cofactor determinant of the minor on the given rows/cols.
template <class I>
I minor_det(const Matrix<I>& m, const std::vector<std::size_t>& rows,
            const std::vector<std::size_t>& cols) {
  const std::size_t n = rows.size();
  if (n == 0) return I(1);
  if (n == 1) return m(rows[0], cols[0]);
  I total = 0;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::size_t> sub_rows(rows.begin() + 1, rows.end());
    std::vector<std::size_t> sub_cols;
    for (std::size_t c = 0; c < n; ++c)
      if (c != j) sub_cols.push_back(cols[c]);
    I term = m(rows[0], cols[j]) * minor_det(m, sub_rows, sub_cols);
    if (j % 2) total -= term;
    else total += term;
  }
  return total;
}

inline void for_each_subset(std::size_t n, std::size_t k,
                            const std::function<void(const std::vector<std::size_t>&)>& f) {
  std::vector<std::size_t> idx(k);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t start) {
    if (pos == k) {
      f(idx);
      return;
    }
    for (std::size_t i = start; i + (k - pos) <= n; ++i) {
      idx[pos] = i;
      rec(pos + 1, i + 1);
    }
  };
  rec(0, 0);
}

// gcd of all k x k minors (0 if all vanish).
template <class I>
I minor_gcd(const Matrix<I>& m, std::size_t k) {
  I g = 0;
  for_each_subset(m.rows(), k, [&](const std::vector<std::size_t>& r) {
    for_each_subset(m.cols(), k, [&](const std::vector<std::size_t>& c) {
      g = rfm::num::gcd_of(g, minor_det(m, r, c));
    });
  });
  return g;
}

// Smith invariants from determinantal divisors: d_1 ... d_r.
template <class I>
std::vector<I> smith_invariants(const Matrix<I>& m) {
  std::vector<I> out;
  I prev = 1;
  for (std::size_t k = 1; k <= std::min(m.rows(), m.cols()); ++k) {
    I g = minor_gcd(m, k);
    if (rfm::num::is_zero(g)) break;
    out.push_back(rfm::num::exact_div(g, prev));
    prev = g;
  }
  return out;
}

// Rank over Q via the Smith invariants count.
template <class I>
std::size_t rank_by_minors(const Matrix<I>& m) {
  std::size_t r = 0;
  for (std::size_t k = 1; k <= std::min(m.rows(), m.cols()); ++k)
    if (!rfm::num::is_zero(minor_gcd(m, k))) r = k;
  return r;
}

// Rows independent and generating a saturated lattice <=> gcd of maximal minors is 1.
template <class I>
bool is_primitive_basis(const Matrix<I>& b) {
  if (b.rows() == 0) return true;
  return minor_gcd(b, b.rows()) == I(1);
}

// v is an integer combination of the rows of `basis` (rows independent).
inline bool lattice_contains(const rfm::IntMatrix& basis, const rfm::IntVector& v) {
  if (basis.rows() == 0) {
    for (const auto& e : v)
      if (e != 0) return false;
    return true;
  }
  rfm::RatMatrix bt = rfm::to_rational(basis.transpose());
  try {
    rfm::RatVector c = rfm::solve_particular(bt, rfm::to_rational(v));
    for (const auto& q : c)
      if (!rfm::is_integer(q)) return false;
    return true;
  } catch (const rfm::PreconditionError&) {
    return false;
  }
}

// All integer vectors with entries in [-bound, bound].
inline void for_each_box_vector(std::size_t n, int bound,
                                const std::function<void(const rfm::IntVector&)>& f) {
  rfm::IntVector v(n, Int(-bound));
  if (n == 0) {
    f(v);
    return;
  }
  for (;;) {
    f(v);
    std::size_t i = 0;
    while (i < n && v[i] == bound) v[i++] = -bound;
    if (i == n) return;
    v[i] += 1;
  }
}

inline rfm::IntMatrix random_int_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c,
                                        int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  rfm::IntMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = d(rng);
  return m;
}

inline rfm::IntMatrix random_unimodular(std::mt19937_64& rng, std::size_t n, int steps = 12) {
  rfm::IntMatrix u = rfm::IntMatrix::identity(n);
  if (n < 2) {
    if (n == 1 && (rng() & 1)) u(0, 0) = -1;
    return u;
  }
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_int_distribution<int> f(-2, 2);
  for (int s = 0; s < steps; ++s) {
    std::size_t a = pick(rng), b = pick(rng);
    if (a == b) continue;
    u.add_row_multiple(a, b, Int(f(rng)));
    if (rng() % 5 == 0) u.swap_rows(a, b);
  }
  return u;
}

}  // namespace oracle
