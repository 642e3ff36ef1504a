#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <cstdlib>
#include <string>
#include <string_view>
#include <tuple>

#include "rfm/error.hpp"

namespace rfm {

using Int = mpz_class;
using Rat = mpq_class;

// Integer traits shared by the mpz and the int64 instantiations of the
// lattice algorithms. The int64 path exists for exhaustive sweeps only.
namespace num {

inline int sign(const Int& a) { return sgn(a); }
inline int sign(std::int64_t a) { return (a > 0) - (a < 0); }

inline Int abs_of(const Int& a) { return abs(a); }
inline std::int64_t abs_of(std::int64_t a) { return a < 0 ? -a : a; }

inline bool is_zero(const Int& a) { return sgn(a) == 0; }
inline bool is_zero(std::int64_t a) { return a == 0; }

/// Floor division, b != 0.
inline Int floor_div(const Int& a, const Int& b) {
  Int q;
  mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}
inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

/// Returns (g, s, t) with s*a + t*b = g = gcd(a, b) >= 0.
inline std::tuple<Int, Int, Int> ext_gcd(const Int& a, const Int& b) {
  Int g, s, t;
  mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return {g, s, t};
}
inline std::tuple<std::int64_t, std::int64_t, std::int64_t> ext_gcd(std::int64_t a,
                                                                    std::int64_t b) {
  std::int64_t old_r = a, r = b, old_s = 1, s = 0, old_t = 0, t = 1;
  while (r != 0) {
    std::int64_t q = old_r / r;
    std::tie(old_r, r) = std::make_tuple(r, old_r - q * r);
    std::tie(old_s, s) = std::make_tuple(s, old_s - q * s);
    std::tie(old_t, t) = std::make_tuple(t, old_t - q * t);
  }
  if (old_r < 0) return {-old_r, -old_s, -old_t};
  return {old_r, old_s, old_t};
}

inline Int gcd_of(const Int& a, const Int& b) { return gcd(a, b); }
inline std::int64_t gcd_of(std::int64_t a, std::int64_t b) {
  a = abs_of(a);
  b = abs_of(b);
  while (b != 0) std::tie(a, b) = std::make_tuple(b, a % b);
  return a;
}

/// Exact division a / b (b divides a).
inline Int exact_div(const Int& a, const Int& b) {
  Int q;
  mpz_divexact(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}
inline std::int64_t exact_div(std::int64_t a, std::int64_t b) { return a / b; }

inline bool divides(const Int& d, const Int& a) {
  return sgn(d) == 0 ? sgn(a) == 0 : mpz_divisible_p(a.get_mpz_t(), d.get_mpz_t()) != 0;
}
inline bool divides(std::int64_t d, std::int64_t a) { return d == 0 ? a == 0 : a % d == 0; }

}  // namespace num

/// Canonical representative of q modulo 1, in [0, 1).
inline Rat frac_mod1(const Rat& q) {
  Int f;
  mpz_fdiv_q(f.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  Rat r = q - Rat(f);
  r.canonicalize();
  return r;
}

inline Int floor_of(const Rat& q) {
  Int f;
  mpz_fdiv_q(f.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return f;
}

inline bool is_integer(const Rat& q) { return q.get_den() == 1; }

/// "p" or "p/q", reduced, sign on the numerator.
inline std::string to_string(const Rat& q) {
  Rat c = q;
  c.canonicalize();
  return c.get_str();
}

inline std::string to_string(const Int& z) { return z.get_str(); }

/// Parses "p", "-p" or "p/q". Throws ParseError on anything else.
inline Rat parse_rational(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && (text[b] == ' ' || text[b] == '\t')) ++b;
  while (e > b && (text[e - 1] == ' ' || text[e - 1] == '\t')) --e;
  std::string_view s = text.substr(b, e - b);
  if (s.empty()) throw ParseError("empty rational", b);
  std::size_t i = 0;
  if (s[0] == '-' || s[0] == '+') ++i;
  auto digits = [&](std::size_t from) {
    std::size_t j = from;
    while (j < s.size() && s[j] >= '0' && s[j] <= '9') ++j;
    return j;
  };
  std::size_t j = digits(i);
  if (j == i) throw ParseError("expected digits in rational", b + i);
  Int num(std::string(s.substr(i, j - i)));
  if (s[0] == '-') num = -num;
  Int den = 1;
  if (j < s.size()) {
    if (s[j] != '/') throw ParseError("unexpected character in rational", b + j);
    std::size_t k = digits(j + 1);
    if (k == j + 1 || k != s.size()) throw ParseError("malformed denominator", b + j + 1);
    den = Int(std::string(s.substr(j + 1, k - j - 1)));
    if (den == 0) throw ParseError("zero denominator", b + j + 1);
  }
  Rat q(num, den);
  q.canonicalize();
  return q;
}

}  // namespace rfm
