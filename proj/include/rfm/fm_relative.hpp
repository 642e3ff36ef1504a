#pragma once

// Relative transform on a Lagrangian torus fibration in action-angle
// coordinates. Base coordinates x^1..x^g, fibre angles y_1..y_g, dual angles
// w^1..w^g, complex coordinates z^j = x^j + i w^j on the dual fibration.
//
// A support S is given in solved form over its base image:
//   x^{k+i} = zeta_i(x^1..x^k)                              i = 1..g-k
//   y_l = sum_m a[l][m] y_m + chi_l(x^1..x^k)                l pivot, m free
// Pivots are any k fibre indices (default g-k+1..g); the rest are free and
// parametrize the fibre subtorus. Expression variable x_j is x^j.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rfm/error.hpp"
#include "rfm/expr.hpp"
#include "rfm/fm_absolute.hpp"
#include "rfm/line_bundles.hpp"
#include "rfm/matrix.hpp"
#include "rfm/torus.hpp"

namespace rfm {

using ExprMatrix = std::vector<std::vector<Expr>>;

struct FibrationModel {
  std::size_t g = 0;
  std::size_t k = 0;

  static std::string base_label(std::size_t j) { return "x^" + std::to_string(j); }
  static std::string fibre_label(std::size_t j) { return "y_" + std::to_string(j); }
  static std::string dual_label(std::size_t j) { return "w^" + std::to_string(j); }
};

struct RelativeSupport {
  std::size_t g = 0;
  std::size_t k = 0;
  std::vector<Expr> zeta;          // g-k entries
  ExprMatrix a;                    // k rows (pivots) x g-k columns (free)
  std::vector<Expr> chi;           // k entries
  std::vector<std::size_t> pivots; // 1-based; empty means g-k+1..g

  std::vector<std::size_t> pivot_indices() const {
    if (!pivots.empty()) return pivots;
    std::vector<std::size_t> p;
    for (std::size_t l = g - k + 1; l <= g; ++l) p.push_back(l);
    return p;
  }
  std::vector<std::size_t> free_indices() const {
    auto p = pivot_indices();
    std::vector<std::size_t> f;
    for (std::size_t j = 1; j <= g; ++j)
      if (std::find(p.begin(), p.end(), j) == p.end()) f.push_back(j);
    return f;
  }
};

/// y_j = eps_j(x^1..x^g)
struct SectionSupport {
  std::vector<Expr> epsilon;
};

/// A = i sum alpha_j dx^j + 2 pi i sum_m xi_m dy_m over the free fibre
/// coordinates. Higher rank is a direct sum of copies.
struct LocalSystemData {
  std::vector<Expr> alpha;
  RatVector xi;
  int rank = 1;
};

/// Dual support x^{k+i} = zeta_i, w^{k+i} = sum_j gamma_tilde[i][j] w^j + varsigma_i,
/// connection A^ = i sum alpha_hat_j dx^j + 2 pi i sum beta_j dw^j.
/// In `connection` the variables are x^1..x^k then w^1..w^k.
struct TransformedBundle {
  std::size_t g = 0;
  std::size_t k = 0;
  std::vector<Expr> zeta;
  ExprMatrix gamma_tilde;  // g-k x k
  std::vector<Expr> varsigma;
  std::vector<Expr> alpha_hat;
  std::vector<Expr> beta;
  ConnectionForm1 connection;
  ZeroVerdict holomorphic = ZeroVerdict::ProvenZero;  // verdict on d(gamma_tilde) == 0
  std::vector<std::string> non_holomorphic;
  ZeroVerdict w_invariant = ZeroVerdict::ProvenZero;  // no coefficient depends on w
  int wit_index = 0;
  int rank = 1;
};

/// x^{k+j} = zeta_j, w^{k+j} = sum_i P[j][i] w^i + Q_j,
/// A^ = i sum alpha_j dx^j + 2 pi i sum beta_j dw^j.
struct DualBundleInput {
  std::size_t g = 0;
  std::size_t k = 0;
  std::vector<Expr> zeta;
  ExprMatrix P;  // g-k x k
  std::vector<Expr> Q;
  std::vector<Expr> alpha;
  std::vector<Expr> beta;
};

/// Named condition with its combined verdict. For every condition the verdict
/// is about "the residuals vanish": ProvenZero / NumericallyZero mean it holds.
struct ConditionReport {
  std::string name;
  ZeroVerdict verdict = ZeroVerdict::ProvenZero;
  std::vector<std::string> failures;

  bool holds() const { return holds_zero(verdict); }
};

struct TransformOptions {
  bool require_c1 = true;
  SampleOptions sample{};
};

namespace detail {

inline std::string join(const std::vector<std::string>& v, const char* sep = "; ") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += v[i];
  }
  return s;
}

inline void check_arity(const Expr& e, std::size_t n, const char* what) {
  if (e.max_var() > static_cast<int>(n))
    throw Error(std::string(what) + " may only depend on x^1..x^" + std::to_string(n) +
                ", got " + to_string(e));
}

// Adds one residual to a report; failing ones are listed.
inline void record(ConditionReport& r, std::vector<ZeroVerdict>& vs, const std::string& label,
                   const Expr& residual, const SampleOptions& opt) {
  ZeroVerdict v = is_zero(residual, opt);
  vs.push_back(v);
  if (!holds_zero(v))
    r.failures.push_back(label + ": " + to_string(simplify(residual)) + " (" + to_string(v) + ")");
}

inline Expr expr_det(const ExprMatrix& m) {
  const std::size_t n = m.size();
  if (n == 0) return cst(1);
  if (n == 1) return m[0][0];
  Expr d = cst(0);
  for (std::size_t c = 0; c < n; ++c) {
    ExprMatrix minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<Expr> row;
      for (std::size_t j = 0; j < n; ++j)
        if (j != c) row.push_back(m[r][j]);
      minor.push_back(std::move(row));
    }
    Expr t = mul(m[0][c], expr_det(minor));
    d = (c % 2 == 0) ? add(d, t) : sub(d, t);
  }
  return d;
}

inline std::optional<RatMatrix> as_rational_matrix(const ExprMatrix& m, std::size_t cols) {
  RatMatrix r(m.size(), cols);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      auto v = as_rational(m[i][j]);
      if (!v) return std::nullopt;
      r(i, j) = *v;
    }
  return r;
}

// X = C^-1 R for square C; exact over Q when C is constant, Cramer otherwise.
inline ExprMatrix solve_left(const ExprMatrix& c, const ExprMatrix& r, std::size_t rcols,
                             const SampleOptions& opt) {
  const std::size_t n = c.size();
  ExprMatrix out(n, std::vector<Expr>(rcols, cst(0)));
  if (n == 0) return out;
  if (auto cr = as_rational_matrix(c, n)) {
    if (rank(*cr) != n) throw PreconditionError("C1", "dual fibre equations are singular");
    RatMatrix inv = inverse(*cr);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < rcols; ++j) {
        Expr s = cst(0);
        for (std::size_t t = 0; t < n; ++t)
          if (inv(i, t) != 0) s = add(s, mul(cst(inv(i, t)), r[t][j]));
        out[i][j] = simplify(s);
      }
    return out;
  }
  Expr det = expr_det(c);
  if (is_zero(det, opt) == ZeroVerdict::ProvenZero)
    throw PreconditionError("C1", "dual fibre equations are singular");
  Expr inv_det = Expr::make_pow(det, -1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < rcols; ++j) {
      // Cramer: replace column i of c by column j of r
      ExprMatrix ci = c;
      for (std::size_t t = 0; t < n; ++t) ci[t][i] = r[t][j];
      out[i][j] = simplify(mul(expr_det(ci), inv_det));
    }
  return out;
}

inline std::string point_text(const RatVector& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + to_string(p[i]);
  return s + ")";
}

}  // namespace detail

/// Size and arity checks. Throws Error.
inline void validate(const RelativeSupport& s) {
  if (s.k > s.g) throw Error("support: k must not exceed g");
  if (s.zeta.size() != s.g - s.k) throw Error("support: expected g-k zeta entries");
  if (s.chi.size() != s.k) throw Error("support: expected k chi entries");
  if (s.a.size() != s.k) throw Error("support: fibre matrix needs k rows");
  for (const auto& row : s.a)
    if (row.size() != s.g - s.k) throw Error("support: fibre matrix needs g-k columns");
  if (!s.pivots.empty()) {
    if (s.pivots.size() != s.k) throw Error("support: expected k pivot indices");
    auto p = s.pivots;
    std::sort(p.begin(), p.end());
    if (std::adjacent_find(p.begin(), p.end()) != p.end() || p.front() < 1 || p.back() > s.g)
      throw Error("support: pivot indices must be distinct and in 1..g");
  }
  for (const auto& e : s.zeta) detail::check_arity(e, s.k, "zeta");
  for (const auto& e : s.chi) detail::check_arity(e, s.k, "chi");
  for (const auto& row : s.a)
    for (const auto& e : row) detail::check_arity(e, s.k, "fibre matrix entry");
}

inline void validate(const RelativeSupport& s, const LocalSystemData& l) {
  validate(s);
  if (l.alpha.size() != s.k) throw Error("local system: expected k alpha entries");
  if (l.xi.size() != s.g - s.k) throw Error("local system: expected g-k xi entries");
  for (const auto& e : l.alpha) detail::check_arity(e, s.k, "alpha");
  if (l.rank < 1) throw Error("local system: rank must be positive");
}

inline void validate(const DualBundleInput& b) {
  if (b.k > b.g) throw Error("dual bundle: k must not exceed g");
  const std::size_t n = b.g - b.k;
  if (b.zeta.size() != n || b.Q.size() != n || b.P.size() != n)
    throw Error("dual bundle: expected g-k entries of zeta, P rows and Q");
  for (const auto& row : b.P)
    if (row.size() != b.k) throw Error("dual bundle: P needs k columns");
  if (b.alpha.size() != b.k || b.beta.size() != b.k)
    throw Error("dual bundle: expected k alpha and beta entries");
  for (const auto& e : b.zeta) detail::check_arity(e, b.k, "zeta");
  for (const auto& e : b.alpha) detail::check_arity(e, b.k, "alpha");
  for (const auto& e : b.beta) detail::check_arity(e, b.k, "beta");
  for (const auto& row : b.P)
    for (const auto& e : row) detail::check_arity(e, b.k, "P entry");
  for (const auto& e : b.Q) detail::check_arity(e, b.k, "Q entry");
}

/// Tangent vector d/dx^j of the base image, 1-based j, as g components.
inline std::vector<Expr> base_tangent(const RelativeSupport& s, std::size_t j) {
  std::vector<Expr> t(s.g, cst(0));
  for (std::size_t i = 1; i <= s.g; ++i)
    t[i - 1] = i <= s.k ? cst(i == j ? 1 : 0) : diff(s.zeta[i - s.k - 1], static_cast<int>(j));
  return t;
}

/// Lagrangian condition. Rows "sist3" pair each base tangent with each fibre
/// direction; rows "eq4" pair base tangents. The y-dependent part of the
/// base-base pairing is the antisymmetrized derivative of sist3 and needs no
/// separate row.
inline ConditionReport check_C1(const RelativeSupport& s, const SampleOptions& opt = {}) {
  validate(s);
  ConditionReport r{"C1", ZeroVerdict::ProvenZero, {}};
  std::vector<ZeroVerdict> vs;
  const auto piv = s.pivot_indices();
  const auto fre = s.free_indices();
  std::vector<std::vector<Expr>> X;
  for (std::size_t j = 1; j <= s.k; ++j) X.push_back(base_tangent(s, j));
  for (std::size_t f = 0; f < fre.size(); ++f)
    for (std::size_t j = 1; j <= s.k; ++j) {
      Expr e = X[j - 1][fre[f] - 1];
      for (std::size_t p = 0; p < piv.size(); ++p) e = add(e, mul(s.a[p][f], X[j - 1][piv[p] - 1]));
      detail::record(r, vs, "sist3[m=" + std::to_string(fre[f]) + ", j=" + std::to_string(j) + "]",
                     e, opt);
    }
  for (std::size_t j = 1; j <= s.k; ++j)
    for (std::size_t l = j + 1; l <= s.k; ++l) {
      Expr e = cst(0);
      for (std::size_t p = 0; p < piv.size(); ++p) {
        e = add(e, mul(X[j - 1][piv[p] - 1], diff(s.chi[p], static_cast<int>(l))));
        e = sub(e, mul(X[l - 1][piv[p] - 1], diff(s.chi[p], static_cast<int>(j))));
      }
      detail::record(r, vs, "eq4[j=" + std::to_string(j) + ", l=" + std::to_string(l) + "]", e, opt);
    }
  r.verdict = combine(vs);
  return r;
}

/// eq4 residual for the pair (j, l), 1-based.
inline Expr eq4_residual(const RelativeSupport& s, std::size_t j, std::size_t l) {
  const auto piv = s.pivot_indices();
  auto xj = base_tangent(s, j), xl = base_tangent(s, l);
  Expr e = cst(0);
  for (std::size_t p = 0; p < piv.size(); ++p) {
    e = add(e, mul(xj[piv[p] - 1], diff(s.chi[p], static_cast<int>(l))));
    e = sub(e, mul(xl[piv[p] - 1], diff(s.chi[p], static_cast<int>(j))));
  }
  return e;
}

namespace detail {

// Numeric rank by partial pivoting, relative tolerance.
inline std::size_t numeric_rank(std::vector<std::vector<double>> m, double tol) {
  if (m.empty()) return 0;
  const std::size_t rows = m.size(), cols = m[0].size();
  double scale = 1.0;
  for (const auto& r : m)
    for (double v : r) scale = std::max(scale, std::fabs(v));
  std::size_t rk = 0;
  for (std::size_t c = 0; c < cols && rk < rows; ++c) {
    std::size_t best = rk;
    for (std::size_t i = rk + 1; i < rows; ++i)
      if (std::fabs(m[i][c]) > std::fabs(m[best][c])) best = i;
    if (std::fabs(m[best][c]) <= tol * scale) continue;
    std::swap(m[rk], m[best]);
    for (std::size_t i = rk + 1; i < rows; ++i) {
      double f = m[i][c] / m[rk][c];
      for (std::size_t j = c; j < cols; ++j) m[i][j] -= f * m[rk][j];
    }
    ++rk;
  }
  return rk;
}

// Base points {-1, -1/2, 0, 1/2, 1}^k, at most 625 of them.
inline std::vector<RatVector> rational_grid(std::size_t k) {
  static const Rat nodes[] = {Rat(-1), Rat(-1, 2), Rat(0), Rat(1, 2), Rat(1)};
  std::vector<RatVector> pts;
  std::size_t total = 1;
  for (std::size_t i = 0; i < k && total < 625; ++i) total *= 5;
  total = std::min<std::size_t>(total, 625);
  for (std::size_t n = 0; n < total; ++n) {
    RatVector p(k, Rat(0));
    std::size_t r = n;
    for (std::size_t i = 0; i < k; ++i) {
      p[i] = nodes[r % 5];
      r /= 5;
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

inline std::optional<Rat> try_eval(const Expr& e, const RatVector& p) {
  try {
    return eval_exact(e, std::span<const Rat>(p.data(), p.size()));
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// C2: the fibre matrix has constant rank over the base chart. Constant
/// matrices are decided exactly; otherwise a rank drop at an exact rational
/// grid point is a proof of failure, and sampling decides the rest.
/// C3: every fibre matrix entry is constant.
inline std::pair<ConditionReport, ConditionReport> check_C2_C3(const RelativeSupport& s,
                                                               const SampleOptions& opt = {}) {
  validate(s);
  ConditionReport c2{"C2", ZeroVerdict::ProvenZero, {}};
  ConditionReport c3{"C3", ZeroVerdict::ProvenZero, {}};
  const auto piv = s.pivot_indices();
  const auto fre = s.free_indices();
  const std::size_t cols = s.g - s.k;

  std::vector<ZeroVerdict> v3;
  for (std::size_t p = 0; p < s.k; ++p)
    for (std::size_t f = 0; f < cols; ++f)
      for (std::size_t j = 1; j <= s.k; ++j)
        detail::record(c3, v3,
                       "a[" + std::to_string(piv[p]) + "][" + std::to_string(fre[f]) + "] = " +
                           to_string(s.a[p][f]) + " depends on x^" + std::to_string(j),
                       diff(s.a[p][f], static_cast<int>(j)), opt);
  c3.verdict = combine(v3);

  if (s.k == 0 || cols == 0 || detail::as_rational_matrix(s.a, cols)) return {c2, c3};

  std::size_t max_rank = 0;
  std::vector<std::pair<RatVector, std::size_t>> exact;
  for (const auto& pt : detail::rational_grid(s.k)) {
    RatMatrix m(s.k, cols);
    bool ok = true;
    for (std::size_t p = 0; p < s.k && ok; ++p)
      for (std::size_t f = 0; f < cols && ok; ++f) {
        auto v = detail::try_eval(s.a[p][f], pt);
        if (!v) ok = false;
        else m(p, f) = *v;
      }
    if (!ok) continue;
    std::size_t rk = rank(m);
    max_rank = std::max(max_rank, rk);
    exact.emplace_back(pt, rk);
  }
  std::vector<std::pair<std::vector<double>, std::size_t>> sampled;
  for (const auto& pt : sample_points(static_cast<int>(s.k), opt.grid)) {
    std::vector<std::vector<double>> m(s.k, std::vector<double>(cols));
    bool ok = true;
    for (std::size_t p = 0; p < s.k && ok; ++p)
      for (std::size_t f = 0; f < cols && ok; ++f) {
        double v = eval_double(s.a[p][f], pt);
        if (!std::isfinite(v)) ok = false;
        m[p][f] = v;
      }
    if (!ok) continue;
    std::size_t rk = detail::numeric_rank(std::move(m), opt.tol);
    max_rank = std::max(max_rank, rk);
    sampled.emplace_back(pt, rk);
  }
  for (const auto& [pt, rk] : exact)
    if (rk < max_rank) {
      c2.verdict = ZeroVerdict::ProvenNonzero;
      c2.failures.push_back("fibre matrix rank drops from " + std::to_string(max_rank) + " to " +
                            std::to_string(rk) + " at x = " + detail::point_text(pt));
      return {c2, c3};
    }
  for (const auto& [pt, rk] : sampled)
    if (rk < max_rank) {
      c2.verdict = ZeroVerdict::NumericallyNonzero;
      std::string at = "(";
      for (std::size_t i = 0; i < pt.size(); ++i) at += (i ? ", " : "") + std::to_string(pt[i]);
      c2.failures.push_back("fibre matrix rank drops from " + std::to_string(max_rank) + " to " +
                            std::to_string(rk) + " near x = " + at + ")");
      return {c2, c3};
    }
  c2.verdict = ZeroVerdict::NumericallyZero;
  return {c2, c3};
}

/// Fibre subtorus dimension g - k. Requires C2.
inline int wit_index(const RelativeSupport& s, const SampleOptions& opt = {}) {
  auto [c2, c3] = check_C2_C3(s, opt);
  if (!c2.holds()) throw PreconditionError("C2", detail::join(c2.failures));
  return static_cast<int>(s.g - s.k);
}

/// Forward transform of a rank-r local system on a relative support.
/// The dual fibre over x is the absolute dual support of the fibre of S:
/// for each free m, w_m + sum_l a[l][m] w_l + xi_m = 0. Splitting its
/// columns as [B | C] at k gives w_{>k} = -C^-1 B w_{<=k} - C^-1 xi.
inline TransformedBundle transform_nontransversal(const RelativeSupport& s,
                                                  const LocalSystemData& l,
                                                  const TransformOptions& opt = {}) {
  validate(s, l);
  if (opt.require_c1) {
    auto c1 = check_C1(s, opt.sample);
    if (!c1.holds()) throw PreconditionError("C1", detail::join(c1.failures));
  }
  auto [c2, c3] = check_C2_C3(s, opt.sample);
  if (!c2.holds()) throw PreconditionError("C2", detail::join(c2.failures));

  const std::size_t g = s.g, k = s.k, n = g - k;
  const auto piv = s.pivot_indices();
  const auto fre = s.free_indices();

  // dual fibre equation rows, one per free index
  ExprMatrix d0(n, std::vector<Expr>(g, cst(0)));
  for (std::size_t f = 0; f < n; ++f) {
    d0[f][fre[f] - 1] = cst(1);
    for (std::size_t p = 0; p < k; ++p) d0[f][piv[p] - 1] = s.a[p][f];
  }
  ExprMatrix cmat(n, std::vector<Expr>(n)), rhs(n, std::vector<Expr>(k + 1));
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t i = 0; i < n; ++i) cmat[f][i] = d0[f][k + i];
    for (std::size_t j = 0; j < k; ++j) rhs[f][j] = neg(d0[f][j]);
    rhs[f][k] = cst(-l.xi[f]);
  }
  ExprMatrix sol = detail::solve_left(cmat, rhs, k + 1, opt.sample);

  TransformedBundle b;
  b.g = g;
  b.k = k;
  b.zeta = s.zeta;
  b.rank = l.rank;
  b.wit_index = static_cast<int>(n);
  b.gamma_tilde.assign(n, std::vector<Expr>(k, cst(0)));
  b.varsigma.assign(n, cst(0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) b.gamma_tilde[i][j] = sol[i][j];
    b.varsigma[i] = sol[i][k];
  }

  // w^l restricted to the dual support, as a function of (x, w^1..w^k)
  auto w_var = [&](std::size_t j) { return x(static_cast<int>(k + j)); };
  auto w_on_support = [&](std::size_t idx) {
    if (idx <= k) return w_var(idx);
    Expr e = b.varsigma[idx - k - 1];
    for (std::size_t j = 1; j <= k; ++j) e = add(e, mul(b.gamma_tilde[idx - k - 1][j - 1], w_var(j)));
    return e;
  };
  const Expr two_pi = mul(cst(2), Expr::pi());
  b.alpha_hat.resize(k);
  b.beta.resize(k);
  for (std::size_t j = 1; j <= k; ++j) {
    // A^ = i alpha dx - 2 pi i sum_l chi_l dw^l, pulled back to the support
    Expr ax = l.alpha[j - 1];
    Expr bw = cst(0);
    for (std::size_t p = 0; p < k; ++p) {
      const std::size_t lp = piv[p];
      Expr wl = w_on_support(lp);
      ax = sub(ax, mul(two_pi, mul(s.chi[p], diff(wl, static_cast<int>(j)))));
      bw = sub(bw, mul(s.chi[p], diff(wl, static_cast<int>(k + j))));
    }
    b.alpha_hat[j - 1] = simplify(ax);
    b.beta[j - 1] = simplify(bw);
  }
  for (std::size_t j = 1; j <= k; ++j) b.connection.labels.push_back(FibrationModel::base_label(j));
  for (std::size_t j = 1; j <= k; ++j) b.connection.labels.push_back(FibrationModel::dual_label(j));
  for (const auto& e : b.alpha_hat) b.connection.coeffs.push_back(e);
  for (const auto& e : b.beta) b.connection.coeffs.push_back(simplify(mul(two_pi, e)));

  std::vector<ZeroVerdict> hv;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t t = 1; t <= k; ++t) {
        ZeroVerdict v = is_zero(diff(b.gamma_tilde[i][j], static_cast<int>(t)), opt.sample);
        hv.push_back(v);
        if (!holds_zero(v))
          b.non_holomorphic.push_back("gamma_tilde[" + std::to_string(k + i + 1) + "][" +
                                      std::to_string(j + 1) + "] = " +
                                      to_string(b.gamma_tilde[i][j]) + " depends on x^" +
                                      std::to_string(t));
      }
  b.holomorphic = combine(hv);

  std::vector<ZeroVerdict> wv;
  for (const auto& c : b.connection.coeffs)
    for (std::size_t j = 1; j <= k; ++j)
      wv.push_back(is_zero(diff(c, static_cast<int>(k + j)), opt.sample));
  b.w_invariant = combine(wv);
  return b;
}

/// Section case k = g. Requires a closed A and a symmetric Jacobian of eps.
inline TransformedBundle transform_section(const SectionSupport& s, const LocalSystemData& l,
                                           const TransformOptions& opt = {}) {
  const std::size_t g = s.epsilon.size();
  if (l.alpha.size() != g) throw Error("section: expected g alpha entries");
  if (!l.xi.empty()) throw Error("section: a section has no fibre holonomy");
  for (const auto& e : s.epsilon) detail::check_arity(e, g, "epsilon");
  for (std::size_t j = 1; j <= g; ++j)
    for (std::size_t m = j + 1; m <= g; ++m) {
      const int jj = static_cast<int>(j), mm = static_cast<int>(m);
      const std::string pair = "(" + std::to_string(j) + ", " + std::to_string(m) + ")";
      if (!holds_zero(is_zero(sub(diff(l.alpha[j - 1], mm), diff(l.alpha[m - 1], jj)), opt.sample)))
        throw PreconditionError("closed", "dA_j/dx^m != dA_m/dx^j for (j, m) = " + pair);
      if (!holds_zero(
              is_zero(sub(diff(s.epsilon[j - 1], mm), diff(s.epsilon[m - 1], jj)), opt.sample)))
        throw PreconditionError("C1", "d eps_j/dx^m != d eps_m/dx^j for (j, m) = " + pair);
    }
  RelativeSupport r;
  r.g = g;
  r.k = g;
  r.a.assign(g, {});
  r.chi = s.epsilon;
  return transform_nontransversal(r, l, opt);
}

/// A^ = i sum A_j dx^j - 2 pi i sum eps_j dw^j for section data, without the
/// closedness and symmetry checks.
inline ConnectionForm1 section_connection(const SectionSupport& s, const LocalSystemData& l) {
  const std::size_t g = s.epsilon.size();
  if (l.alpha.size() != g) throw Error("section: expected g alpha entries");
  ConnectionForm1 c;
  for (std::size_t j = 1; j <= g; ++j) c.labels.push_back(FibrationModel::base_label(j));
  for (std::size_t j = 1; j <= g; ++j) c.labels.push_back(FibrationModel::dual_label(j));
  for (const auto& a : l.alpha) c.coeffs.push_back(a);
  for (const auto& e : s.epsilon)
    c.coeffs.push_back(simplify(mul(mul(cst(-2), Expr::pi()), e)));
  return c;
}

struct ComplexExpr {
  Expr re = cst(0);
  Expr im = cst(0);
};
using ComplexTable = std::vector<std::vector<ComplexExpr>>;

/// Curvature split by type in z^j = x^j + i w^j. f20[a][b] and f02[a][b] are
/// the coefficients of dz^a ^ dz^b and dzbar^a ^ dzbar^b for a < b (stored
/// antisymmetric); f11[a][b] multiplies dz^a ^ dzbar^b.
struct HodgeComponents {
  ComplexTable f20, f11, f02;
};

/// Connection variables are x^1..x^n then w^1..w^n.
inline HodgeComponents curvature_hodge(const ConnectionForm1& a, std::size_t n) {
  if (a.dim() != 2 * n) throw Error("curvature_hodge: connection must have 2n coefficients");
  auto r = curvature(a);
  auto rxx = [&](std::size_t i, std::size_t j) { return r[i][j]; };
  auto rxw = [&](std::size_t i, std::size_t j) { return r[i][n + j]; };
  auto rww = [&](std::size_t i, std::size_t j) { return r[n + i][n + j]; };
  const Expr q = cst(Rat(1, 4));
  HodgeComponents h;
  h.f20.assign(n, std::vector<ComplexExpr>(n));
  h.f11 = h.f02 = h.f20;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Expr im = simplify(mul(q, sub(rxx(i, j), rww(i, j))));
      Expr xw_anti = simplify(mul(q, sub(rxw(i, j), rxw(j, i))));
      h.f20[i][j] = {xw_anti, im};
      h.f02[i][j] = {simplify(neg(xw_anti)), im};
      h.f11[i][j] = {simplify(neg(mul(q, add(rxw(i, j), rxw(j, i))))),
                     simplify(mul(q, add(rxx(i, j), rww(i, j))))};
    }
  return h;
}

inline HodgeComponents curvature_hodge(const TransformedBundle& b) {
  return curvature_hodge(b.connection, b.k);
}

/// Verdict that every entry of a table vanishes.
inline ZeroVerdict table_is_zero(const ComplexTable& t, const SampleOptions& opt = {}) {
  std::vector<ZeroVerdict> vs;
  for (const auto& row : t)
    for (const auto& c : row) {
      vs.push_back(is_zero(c.re, opt));
      vs.push_back(is_zero(c.im, opt));
    }
  return combine(vs);
}

/// Symbolic gamma_tilde == Jacobian of zeta.
inline ZeroVerdict gamma_matches_jacobian(const TransformedBundle& b, const SampleOptions& opt = {}) {
  std::vector<ZeroVerdict> vs;
  for (std::size_t i = 0; i < b.gamma_tilde.size(); ++i)
    for (std::size_t j = 0; j < b.k; ++j)
      vs.push_back(is_zero(sub(b.gamma_tilde[i][j], diff(b.zeta[i], static_cast<int>(j + 1))), opt));
  return combine(vs);
}

struct F02Report {
  ZeroVerdict agreement = ZeroVerdict::ProvenZero;  // Re F02 == -(pi/2) eq4, entrywise
  ZeroVerdict f02_zero = ZeroVerdict::ProvenZero;
  ZeroVerdict eq4_zero = ZeroVerdict::ProvenZero;
};

/// The dzbar^j ^ dzbar^l part of the transformed curvature has real part
/// -(pi/2) times the eq4 residual. Its imaginary part is the x-curvature of
/// the local system and vanishes for flat input.
inline F02Report check_F02_iff_lagrangian(const RelativeSupport& s, const TransformedBundle& b,
                                          const SampleOptions& opt = {}) {
  if (s.g != b.g || s.k != b.k) throw Error("check_F02: bundle was not produced from this support");
  auto h = curvature_hodge(b);
  F02Report r;
  std::vector<ZeroVerdict> agree, f02, eq4;
  const Expr half_pi = mul(cst(Rat(1, 2)), Expr::pi());
  for (std::size_t j = 1; j <= s.k; ++j)
    for (std::size_t l = j + 1; l <= s.k; ++l) {
      Expr e4 = eq4_residual(s, j, l);
      const ComplexExpr& c = h.f02[j - 1][l - 1];
      agree.push_back(is_zero(add(c.re, mul(half_pi, e4)), opt));
      f02.push_back(is_zero(c.re, opt));
      f02.push_back(is_zero(c.im, opt));
      eq4.push_back(is_zero(e4, opt));
    }
  r.agreement = combine(agree);
  r.f02_zero = combine(f02);
  r.eq4_zero = combine(eq4);
  return r;
}

struct DConditions {
  ConditionReport d1, d2, d3, f02;

  bool all_hold() const { return d1.holds() && d2.holds() && d3.holds() && f02.holds(); }
};

/// D1: P, Q constant and d zeta / dx = P (the dual support is complex).
/// D2: alpha closed. D3: no w-dependence, structural in this representation.
/// F02: beta closed, i.e. the (0,2) curvature vanishes.
inline DConditions check_D_conditions(const DualBundleInput& b, const SampleOptions& opt = {}) {
  validate(b);
  DConditions d{{"D1", ZeroVerdict::ProvenZero, {}},
                {"D2", ZeroVerdict::ProvenZero, {}},
                {"D3", ZeroVerdict::ProvenZero, {}},
                {"F02", ZeroVerdict::ProvenZero, {}}};
  std::vector<ZeroVerdict> v1, v2, vf;
  const std::size_t n = b.g - b.k;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string row = std::to_string(b.k + i + 1);
    for (std::size_t t = 1; t <= b.k; ++t) {
      const int tt = static_cast<int>(t);
      detail::record(d.d1, v1, "Q[" + row + "] depends on x^" + std::to_string(t),
                     diff(b.Q[i], tt), opt);
      for (std::size_t j = 0; j < b.k; ++j)
        detail::record(d.d1, v1,
                       "P[" + row + "][" + std::to_string(j + 1) + "] depends on x^" +
                           std::to_string(t),
                       diff(b.P[i][j], tt), opt);
      detail::record(d.d1, v1, "d zeta_" + row + "/dx^" + std::to_string(t) + " != P",
                     sub(diff(b.zeta[i], tt), b.P[i][t - 1]), opt);
    }
  }
  for (std::size_t j = 1; j <= b.k; ++j)
    for (std::size_t l = j + 1; l <= b.k; ++l) {
      const int jj = static_cast<int>(j), ll = static_cast<int>(l);
      const std::string pair = "(" + std::to_string(j) + ", " + std::to_string(l) + ")";
      detail::record(d.d2, v2, "d alpha " + pair,
                     sub(diff(b.alpha[j - 1], ll), diff(b.alpha[l - 1], jj)), opt);
      detail::record(d.f02, vf, "d beta " + pair,
                     sub(diff(b.beta[j - 1], ll), diff(b.beta[l - 1], jj)), opt);
    }
  d.d1.verdict = combine(v1);
  d.d2.verdict = combine(v2);
  d.f02.verdict = combine(vf);
  return d;
}

struct InverseResult {
  RelativeSupport support;
  LocalSystemData local;
  int wit_index = 0;
};

/// y_l + sum_m P[m][l] y_m + beta_l = 0 for l <= k,
/// A = i sum alpha_j dx^j - 2 pi i sum_m Q_m dy_m.
inline InverseResult inverse_transform(const DualBundleInput& b, const SampleOptions& opt = {}) {
  auto d = check_D_conditions(b, opt);
  for (const ConditionReport* c : {&d.d1, &d.d2, &d.d3, &d.f02})
    if (!c->holds()) throw PreconditionError(c->name, detail::join(c->failures));
  const std::size_t n = b.g - b.k;
  InverseResult r;
  r.wit_index = static_cast<int>(b.k);
  RelativeSupport& s = r.support;
  s.g = b.g;
  s.k = b.k;
  s.zeta = b.zeta;
  for (std::size_t l = 1; l <= b.k; ++l) s.pivots.push_back(l);
  s.a.assign(b.k, std::vector<Expr>(n, cst(0)));
  for (std::size_t p = 0; p < b.k; ++p)
    for (std::size_t f = 0; f < n; ++f) s.a[p][f] = simplify(neg(b.P[f][p]));
  for (const auto& e : b.beta) s.chi.push_back(simplify(neg(e)));
  r.local.alpha = b.alpha;
  r.local.xi.resize(n);
  for (std::size_t f = 0; f < n; ++f) {
    auto q = as_rational(b.Q[f]);
    if (!q) throw PreconditionError("D1", "Q[" + std::to_string(b.k + f + 1) + "] is not a rational constant");
    r.local.xi[f] = -*q;
  }
  return r;
}

/// Reads a forward output as inverse input. The dx-coefficients must not
/// depend on w.
inline DualBundleInput as_dual_input(const TransformedBundle& t) {
  if (!holds_zero(t.w_invariant))
    throw PreconditionError("D3", "transformed connection depends on w");
  DualBundleInput b;
  b.g = t.g;
  b.k = t.k;
  b.zeta = t.zeta;
  b.P = t.gamma_tilde;
  b.Q = t.varsigma;
  b.alpha = t.alpha_hat;
  b.beta = t.beta;
  return b;
}

// ---------------------------------------------------------------------------
// Canonical form and fibre slices

/// Data equal for equivalent (support, local system) pairs with constant
/// fibre matrix: fibre equations in reduced echelon form over Q, offsets
/// and holonomy carried along, expressions in normal form.
struct CanonicalRelative {
  std::size_t g = 0, k = 0;
  std::vector<std::string> zeta;
  RatMatrix fibre;                  // k x g, reduced row echelon form
  std::vector<std::string> offset;  // fibre * y == offset
  RatVector holonomy;               // along e_m - sum_r fibre(r, m) e_{pivot r}, m non-pivot
  std::vector<std::string> alpha;

  friend bool operator==(const CanonicalRelative&, const CanonicalRelative&) = default;
};

inline std::string canonical_text(const Expr& e) { return to_string(simplify(e)); }

inline CanonicalRelative canonical_form(const RelativeSupport& s, const LocalSystemData& l) {
  validate(s, l);
  const auto piv = s.pivot_indices();
  const auto fre = s.free_indices();
  const std::size_t n = s.g - s.k;
  auto ar = detail::as_rational_matrix(s.a, n);
  if (!ar) throw PreconditionError("C3", "canonical form needs a constant fibre matrix");
  RatMatrix e(s.k, s.g);
  for (std::size_t p = 0; p < s.k; ++p) {
    e(p, piv[p] - 1) = 1;
    for (std::size_t f = 0; f < n; ++f) e(p, fre[f] - 1) = -(*ar)(p, f);
  }
  CanonicalRelative c;
  c.g = s.g;
  c.k = s.k;
  for (const auto& z : s.zeta) c.zeta.push_back(canonical_text(z));
  for (const auto& a : l.alpha) c.alpha.push_back(canonical_text(a));
  if (s.k == 0) {
    c.fibre = RatMatrix(0, s.g);
    c.holonomy = l.xi;
    return c;
  }
  RowEchelon re = rref(e);
  c.fibre = re.reduced;
  for (std::size_t r = 0; r < s.k; ++r) {
    Expr o = cst(0);
    for (std::size_t p = 0; p < s.k; ++p)
      if (re.transform(r, p) != 0) o = add(o, mul(cst(re.transform(r, p)), s.chi[p]));
    c.offset.push_back(canonical_text(o));
  }
  for (std::size_t m = 0; m < s.g; ++m) {
    if (std::find(re.pivots.begin(), re.pivots.end(), m) != re.pivots.end()) continue;
    RatVector u(s.g, Rat(0));
    u[m] = 1;
    for (std::size_t r = 0; r < re.pivots.size(); ++r) u[re.pivots[r]] = -re.reduced(r, m);
    Rat h = 0;
    for (std::size_t f = 0; f < n; ++f) h += l.xi[f] * u[fre[f] - 1];
    c.holonomy.push_back(h);
  }
  return c;
}

namespace detail {

inline Rat eval_at(const Expr& e, const RatVector& b, const char* what) {
  auto v = try_eval(e, b);
  if (!v) throw Error(std::string("slice: ") + what + " is not rational at x = " + point_text(b));
  return *v;
}

}  // namespace detail

/// Fibre of (S, L) over the base point b (k rational coordinates) as an
/// absolute subtorus system on the unit square torus.
inline SubtorusLocalSystem slice(const RelativeSupport& s, const LocalSystemData& l,
                                 const RatVector& b) {
  validate(s, l);
  if (b.size() != s.k) throw Error("slice: base point needs k coordinates");
  const auto piv = s.pivot_indices();
  const auto fre = s.free_indices();
  const std::size_t n = s.g - s.k;
  Torus t(s.g);
  RatMatrix e(s.k, s.g);
  RatVector c(s.k);
  for (std::size_t p = 0; p < s.k; ++p) {
    e(p, piv[p] - 1) = 1;
    for (std::size_t f = 0; f < n; ++f)
      e(p, fre[f] - 1) = -detail::eval_at(s.a[p][f], b, "fibre matrix");
    c[p] = -detail::eval_at(s.chi[p], b, "chi");
  }
  AffineSubtorus sb = subtorus_from_equations(t, e, c);
  const IntMatrix& dirs = sb.direction_basis();
  RatVector hol(dirs.rows());
  for (std::size_t r = 0; r < dirs.rows(); ++r)
    for (std::size_t f = 0; f < n; ++f) hol[r] += l.xi[f] * Rat(dirs(r, fre[f] - 1));
  return make_subtorus_system(sb, hol, l.rank);
}

/// Fibre of the transformed bundle over b, on the dual torus.
inline SubtorusLocalSystem slice(const TransformedBundle& t, const RatVector& b) {
  if (b.size() != t.k) throw Error("slice: base point needs k coordinates");
  const std::size_t n = t.g - t.k;
  Torus dual = Torus(t.g).dual();
  RatMatrix e(n, t.g);
  RatVector c(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < t.k; ++j)
      e(i, j) = -detail::eval_at(t.gamma_tilde[i][j], b, "gamma_tilde");
    e(i, t.k + i) = 1;
    c[i] = -detail::eval_at(t.varsigma[i], b, "varsigma");
  }
  AffineSubtorus sb = subtorus_from_equations(dual, e, c);
  const IntMatrix& dirs = sb.direction_basis();
  RatVector hol(dirs.rows());
  for (std::size_t r = 0; r < dirs.rows(); ++r)
    for (std::size_t j = 0; j < t.k; ++j)
      hol[r] += detail::eval_at(t.beta[j], b, "beta") * Rat(dirs(r, j));
  return make_subtorus_system(sb, hol, t.rank);
}

}  // namespace rfm
