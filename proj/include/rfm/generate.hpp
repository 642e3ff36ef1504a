#pragma once

// Seeded random instances: subtorus systems on a torus, Lagrangian relative
// supports with local systems, and a one-entry perturbation of the fibre
// matrix that keeps the support Lagrangian. Used by the test suites and by
// the command-line seed replay.

#include <algorithm>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "rfm/fm_absolute.hpp"
#include "rfm/fm_relative.hpp"
#include "rfm/torus.hpp"

namespace rfm::generate {

inline rfm::IntMatrix random_int_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c,
                                        int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  rfm::IntMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = d(rng);
  return m;
}

// Calls f on every increasing k-subset of 0..n-1.
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


inline rfm::Rat random_fraction(std::mt19937_64& rng, int max_den = 6) {
  int den = std::uniform_int_distribution<int>(1, max_den)(rng);
  int num = std::uniform_int_distribution<int>(-2 * den, 2 * den)(rng);
  rfm::Rat q(num, den);
  q.canonicalize();
  return q;
}

inline rfm::RatVector random_fractions(std::mt19937_64& rng, std::size_t n, int max_den = 6) {
  rfm::RatVector v(n);
  for (auto& q : v) q = random_fraction(rng, max_den);
  return v;
}

/// Random full-row-rank (g-k) x g integer system with entries in [lo, hi].
inline rfm::IntMatrix random_equations(std::mt19937_64& rng, std::size_t g, std::size_t k,
                                       int lo = -5, int hi = 5) {
  for (;;) {
    rfm::IntMatrix a = random_int_matrix(rng, g - k, g, lo, hi);
    if (rfm::rank(a) == g - k) return a;
  }
}

inline rfm::AffineSubtorus random_subtorus(std::mt19937_64& rng, const rfm::Torus& t,
                                           std::size_t k) {
  return rfm::subtorus_from_equations(t, random_equations(rng, t.dim(), k),
                                      random_fractions(rng, t.dim() - k));
}

inline rfm::SubtorusLocalSystem random_system(std::mt19937_64& rng, const rfm::Torus& t,
                                              std::size_t k, bool trivial_holonomy = false) {
  rfm::AffineSubtorus s = random_subtorus(rng, t, k);
  rfm::RatVector xi = trivial_holonomy ? rfm::RatVector(k, rfm::Rat(0)) : random_fractions(rng, k);
  return rfm::make_subtorus_system(s, xi);
}

/// Random diagonal-dominant symmetric positive-definite rational metric.
inline rfm::RatMatrix random_metric(std::mt19937_64& rng, std::size_t g) {
  rfm::RatMatrix m(g, g);
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = i + 1; j < g; ++j) {
      m(i, j) = rfm::Rat(std::uniform_int_distribution<int>(-2, 2)(rng), 3);
      m(j, i) = m(i, j);
    }
  for (std::size_t i = 0; i < g; ++i) m(i, i) = rfm::Rat(static_cast<long>(g) + 1);
  return m;
}


struct RelativeInstance {
  rfm::RelativeSupport support;
  rfm::LocalSystemData local;
};

inline rfm::RatMatrix pick_rows(const rfm::RatMatrix& m, const std::vector<std::size_t>& rows) {
  return m.transpose().select_cols(rows).transpose();
}

inline rfm::Rat small_fraction(std::mt19937_64& rng) { return random_fraction(rng, 3); }

// Column block [B | C] of the dual fibre equations, B = columns 1..k.
inline rfm::RatMatrix dual_rows(const rfm::RelativeSupport& s, const rfm::RatMatrix& a) {
  const auto piv = s.pivot_indices();
  const auto fre = s.free_indices();
  rfm::RatMatrix d(s.g - s.k, s.g);
  for (std::size_t f = 0; f < fre.size(); ++f) {
    d(f, fre[f] - 1) = 1;
    for (std::size_t p = 0; p < piv.size(); ++p) d(f, piv[p] - 1) = a(p, f);
  }
  return d;
}

inline rfm::Expr affine(const rfm::Rat& c0, const std::vector<rfm::Rat>& c) {
  rfm::Expr e = rfm::cst(c0);
  for (std::size_t j = 0; j < c.size(); ++j)
    if (c[j] != 0) e = rfm::add(e, rfm::mul(rfm::cst(c[j]), rfm::x(static_cast<int>(j + 1))));
  return e;
}

/// Constant fibre matrix, affine base image, affine chi when `affine_chi`
/// (constant otherwise), alpha the gradient of a quadratic potential.
inline RelativeInstance random_relative(std::mt19937_64& rng, std::size_t g, std::size_t k,
                                        bool random_pivots, bool affine_chi = true) {
  using namespace rfm;
  RelativeInstance out;
  RelativeSupport& s = out.support;
  s.g = g;
  s.k = k;
  if (random_pivots && k > 0) {
    std::vector<std::size_t> all;
    for (std::size_t j = 1; j <= g; ++j) all.push_back(j);
    std::shuffle(all.begin(), all.end(), rng);
    s.pivots.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(s.pivots.begin(), s.pivots.end());
  }
  const std::size_t n = g - k;
  RatMatrix a(k, n), d;
  for (;;) {
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t f = 0; f < n; ++f) a(p, f) = small_fraction(rng);
    d = dual_rows(s, a);
    std::vector<std::size_t> cols;
    for (std::size_t i = k; i < g; ++i) cols.push_back(i);
    if (n == 0 || rank(d.select_cols(cols)) == n) break;
  }
  // Jacobian of zeta from the Lagrangian rows: C J = -B
  RatMatrix jac(n, k);
  if (n > 0 && k > 0) {
    std::vector<std::size_t> bc, cc;
    for (std::size_t i = 0; i < k; ++i) bc.push_back(i);
    for (std::size_t i = k; i < g; ++i) cc.push_back(i);
    RatMatrix cinv = inverse(d.select_cols(cc));
    RatMatrix b = d.select_cols(bc);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        Rat v = 0;
        for (std::size_t t = 0; t < n; ++t) v -= cinv(i, t) * b(t, j);
        jac(i, j) = v;
      }
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Rat> row(k);
    for (std::size_t j = 0; j < k; ++j) row[j] = jac(i, j);
    s.zeta.push_back(affine(small_fraction(rng), row));
  }
  s.a.assign(k, std::vector<Expr>(n));
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t f = 0; f < n; ++f) s.a[p][f] = cst(a(p, f));

  // chi_p = chi0_p + sum_j c[p][j] x^j with M^T c symmetric, M[p][j] = (X_j)_{pivot p}
  const auto piv = s.pivot_indices();
  RatMatrix m(k, k), c(k, k);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < k; ++j)
      m(p, j) = piv[p] <= k ? Rat(piv[p] == j + 1 ? 1 : 0) : jac(piv[p] - k - 1, j);
  if (affine_chi && k > 0 && rank(m) == k) {
    RatMatrix sym(k, k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i; j < k; ++j) sym(i, j) = sym(j, i) = small_fraction(rng);
    c = inverse(m.transpose()) * sym;
  }
  for (std::size_t p = 0; p < k; ++p) {
    std::vector<Rat> row(k);
    for (std::size_t j = 0; j < k; ++j) row[j] = c(p, j);
    s.chi.push_back(affine(small_fraction(rng), row));
  }

  // alpha = grad(b.x + x^T Q x / 2)
  RatMatrix q(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) q(i, j) = q(j, i) = small_fraction(rng);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<Rat> row(k);
    for (std::size_t l = 0; l < k; ++l) row[l] = q(j, l);
    out.local.alpha.push_back(affine(small_fraction(rng), row));
  }
  out.local.xi = random_fractions(rng, n, 4);
  return out;
}

/// Makes one fibre matrix entry non-constant along s = c.x, c the gradient
/// of the pivot coordinate, and bends zeta to keep the Lagrangian rows exact.
/// Sign and scale are chosen so the fibre matrix keeps constant rank.
/// Needs a constant fibre matrix, affine zeta and constant chi.
inline std::optional<RelativeInstance> flip_entry(const RelativeInstance& in,
                                                  std::mt19937_64& rng) {
  using namespace rfm;
  const RelativeSupport& s = in.support;
  const std::size_t g = s.g, k = s.k, n = g - k;
  if (k == 0 || n == 0) return std::nullopt;
  auto ar = detail::as_rational_matrix(s.a, n);
  if (!ar) return std::nullopt;
  const auto piv = s.pivot_indices();
  RatMatrix jac(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      auto v = as_rational(diff(s.zeta[i], static_cast<int>(j + 1)));
      if (!v) return std::nullopt;
      jac(i, j) = *v;
    }
  RatMatrix d = dual_rows(s, *ar);
  std::vector<std::size_t> cc;
  for (std::size_t i = k; i < g; ++i) cc.push_back(i);
  RatMatrix cinv = inverse(d.select_cols(cc));

  RelativeInstance out = in;
  for (auto& e : out.support.chi) e = cst(*eval_exact(e, std::vector<Rat>(k, Rat(0))));

  struct Candidate {
    std::size_t p, f;
    std::vector<Rat> c;
    RatVector v;
    Rat vq;  // component of v at the pivot, 0 for pivots <= k
  };
  std::vector<Candidate> cands;
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t f = 0; f < n; ++f) {
      std::vector<Rat> c(k);
      bool nonzero = false;
      for (std::size_t j = 0; j < k; ++j) {
        c[j] = piv[p] <= k ? Rat(piv[p] == j + 1 ? 1 : 0) : jac(piv[p] - k - 1, j);
        nonzero = nonzero || c[j] != 0;
      }
      if (!nonzero) continue;
      RatVector v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = cinv(i, f);
      cands.push_back({p, f, c, v, piv[p] > k ? v[piv[p] - k - 1] : Rat(0)});
    }
  std::shuffle(cands.begin(), cands.end(), rng);

  // Generic rank of a + t E_{pf}.
  auto generic_rank = [&](const Candidate& cd) {
    RatMatrix m = *ar;
    m(cd.p, cd.f) += Rat(7919);
    return rank(m);
  };
  // A minor of size r through which a + t E_{pf} keeps rank r for every t
  // between lo and hi; an absent bound is infinite. The far end (1 / |vq|)
  // is never attained, so it is open.
  auto rank_constant_on = [&](const Candidate& cd, const std::optional<Rat>& lo,
                              const std::optional<Rat>& hi, bool lo_open, bool hi_open) {
    const std::size_t r = generic_rank(cd);
    bool ok = false;
    for_each_subset(k, r, [&](const std::vector<std::size_t>& rr) {
      for_each_subset(n, r, [&](const std::vector<std::size_t>& cc) {
        if (ok) return;
        RatMatrix minor = pick_rows(ar->select_cols(cc), rr);
        Rat m0 = determinant(minor), cof = 0;
        auto pi = std::find(rr.begin(), rr.end(), cd.p);
        auto fi = std::find(cc.begin(), cc.end(), cd.f);
        if (pi != rr.end() && fi != cc.end()) {
          RatMatrix bumped = minor;
          bumped(static_cast<std::size_t>(pi - rr.begin()), static_cast<std::size_t>(fi - cc.begin())) += 1;
          cof = determinant(bumped) - m0;
        }
        if (cof == 0) {
          ok = m0 != 0;
          return;
        }
        Rat root = -m0 / cof;
        ok = (lo && (root < *lo || (lo_open && root == *lo))) ||
             (hi && (root > *hi || (hi_open && root == *hi)));
      });
    });
    return ok;
  };

  // psi = sigma lambda (s^2 + 1) bends zeta by -v Psi, Psi' = psi. The entry
  // moves by h = psi / (1 - vq psi), which keeps -C^-1 B = J0 - psi v c^T.
  // With sigma vq <= 0 the denominator is at least 1, and h runs over
  // sigma [lambda / (1 + |vq| lambda), 1 / |vq|).
  for (const Candidate& cd : cands)
    for (const Rat& lambda : {Rat(1), Rat(1, 4), Rat(1, 16), Rat(4)})
      for (int sigma : {1, -1}) {
        if (cd.vq * sigma > 0) continue;
        const Rat u = abs(cd.vq);
        const Rat near = lambda / (1 + u * lambda);
        std::optional<Rat> far;
        if (u != 0) far = 1 / u;
        bool ok = sigma > 0 ? rank_constant_on(cd, near, far, false, true)
                            : rank_constant_on(cd, far ? std::optional<Rat>(-*far) : std::nullopt,
                                               std::optional<Rat>(-near), true, false);
        if (!ok) continue;
        Expr sx = affine(Rat(0), cd.c);
        Expr psi = mul(cst(sigma * lambda), add(pow(sx, 2), cst(1)));
        Expr big_psi = mul(cst(sigma * lambda), add(mul(cst(Rat(1, 3)), pow(sx, 3)), sx));
        Expr h = cd.vq == 0 ? psi : mul(psi, Expr::make_pow(sub(cst(1), mul(cst(cd.vq), psi)), -1));
        out.support.a[cd.p][cd.f] = add(s.a[cd.p][cd.f], h);
        for (std::size_t i = 0; i < n; ++i)
          if (cd.v[i] != 0) out.support.zeta[i] = sub(s.zeta[i], mul(cst(cd.v[i]), big_psi));
        return out;
      }
  return std::nullopt;
}

}  // namespace rfm::generate
