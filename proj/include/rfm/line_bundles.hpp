#pragma once

// Appell-Humbert data on a lattice Z^n, factors of automorphy, gauge changes,
// the Poincare pair and flat-coordinate connection forms. U(1) values are
// phases in turns (value = exp(2 pi i phase)).

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "rfm/error.hpp"
#include "rfm/expr.hpp"
#include "rfm/matrix.hpp"
#include "rfm/number.hpp"

namespace rfm {

/// Point of U(1) as a phase in turns, reduced into [0, 1). Exact when rational.
class UnitCircleValue {
 public:
  UnitCircleValue() : phase_(Rat(0)) {}
  explicit UnitCircleValue(const Rat& turns) : phase_(frac_mod1(turns)) {}
  explicit UnitCircleValue(double turns) : phase_(turns - std::floor(turns)) {}
  static UnitCircleValue from(const Value& v) {
    return std::holds_alternative<Rat>(v) ? UnitCircleValue(std::get<Rat>(v))
                                          : UnitCircleValue(std::get<double>(v));
  }

  bool is_exact() const { return std::holds_alternative<Rat>(phase_); }
  const Rat& exact() const { return std::get<Rat>(phase_); }
  double turns() const { return to_double(phase_); }

  UnitCircleValue operator*(const UnitCircleValue& o) const {
    if (is_exact() && o.is_exact()) return UnitCircleValue(exact() + o.exact());
    return UnitCircleValue(turns() + o.turns());
  }
  UnitCircleValue inverse() const {
    return is_exact() ? UnitCircleValue(Rat(-exact())) : UnitCircleValue(-turns());
  }

  /// Exact comparison for exact phases; otherwise distance on the circle.
  bool equals(const UnitCircleValue& o, double tol = 1e-9) const {
    if (is_exact() && o.is_exact()) return exact() == o.exact();
    double d = std::fabs(turns() - o.turns());
    return std::min(d, 1.0 - d) <= tol;
  }

  std::string to_string() const {
    return is_exact() ? rfm::to_string(exact()) : std::to_string(turns());
  }

 private:
  Value phase_;
};

struct AppellHumbertPair {
  IntMatrix form;    // alternating n x n
  RatVector chi_log;  // chi(e_j) = exp(2 pi i chi_log_j), in [0, 1)

  std::size_t rank() const { return form.rows(); }
  friend bool operator==(const AppellHumbertPair&, const AppellHumbertPair&) = default;
};

inline AppellHumbertPair make_pair(IntMatrix form, RatVector chi_log) {
  const std::size_t n = form.rows();
  if (form.cols() != n || chi_log.size() != n) throw Error("Appell-Humbert pair: size mismatch");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (form(i, j) != -form(j, i))
        throw PreconditionError("alternating", "form is not antisymmetric");
  for (auto& c : chi_log) c = frac_mod1(c);
  return {std::move(form), std::move(chi_log)};
}

inline AppellHumbertPair identity_pair(std::size_t n) {
  return {IntMatrix::zero(n, n), RatVector(n, Rat(0))};
}

/// Pair of the flat bundle L_y: form 0, chi(lambda) = exp(2 pi i y.lambda).
inline AppellHumbertPair flat_pair(const RatVector& y) {
  return make_pair(IntMatrix::zero(y.size(), y.size()), y);
}

/// A(u, v) = u^T form v
template <class U, class V>
Rat bilinear(const IntMatrix& form, const std::vector<U>& u, const std::vector<V>& v) {
  Rat s = 0;
  for (std::size_t i = 0; i < form.rows(); ++i)
    for (std::size_t j = 0; j < form.cols(); ++j)
      if (form(i, j) != 0) s += Rat(form(i, j)) * Rat(u[i]) * Rat(v[j]);
  return s;
}

/// chi(lambda) = sum c_j lambda_j + 1/2 sum_{i<j} A_ij lambda_i lambda_j  (turns)
inline UnitCircleValue semicharacter(const AppellHumbertPair& p, const IntVector& lambda) {
  if (lambda.size() != p.rank()) throw Error("semicharacter: lattice vector size mismatch");
  Rat s = 0;
  for (std::size_t j = 0; j < lambda.size(); ++j) s += p.chi_log[j] * Rat(lambda[j]);
  for (std::size_t i = 0; i < lambda.size(); ++i)
    for (std::size_t j = i + 1; j < lambda.size(); ++j)
      s += Rat(p.form(i, j)) * Rat(lambda[i] * lambda[j]) / 2;
  return UnitCircleValue(s);
}

/// chi(l+m) == chi(l) chi(m) exp(i pi A(l, m))
inline bool semicharacter_law_holds(const AppellHumbertPair& p, const IntVector& l,
                                    const IntVector& m) {
  IntVector lm(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) lm[i] = l[i] + m[i];
  UnitCircleValue rhs =
      semicharacter(p, l) * semicharacter(p, m) * UnitCircleValue(bilinear(p.form, l, m) / 2);
  return semicharacter(p, lm).equals(rhs);
}

/// The law on all pairs of standard generators.
inline bool semicharacter_law_on_generators(const AppellHumbertPair& p) {
  const std::size_t n = p.rank();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      IntVector a(n, Int(0)), b(n, Int(0));
      a[i] = 1;
      b[j] = 1;
      if (!semicharacter_law_holds(p, a, b)) return false;
    }
  return true;
}

inline AppellHumbertPair ah_compose(const AppellHumbertPair& a, const AppellHumbertPair& b) {
  if (a.rank() != b.rank()) throw Error("ah_compose: dimension mismatch");
  RatVector c(a.rank());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.chi_log[i] + b.chi_log[i];
  IntMatrix f = a.form;
  for (std::size_t i = 0; i < f.rows(); ++i)
    for (std::size_t j = 0; j < f.cols(); ++j) f(i, j) += b.form(i, j);
  return make_pair(std::move(f), std::move(c));
}

inline AppellHumbertPair ah_inverse(const AppellHumbertPair& a) {
  IntMatrix f = a.form;
  for (std::size_t i = 0; i < f.rows(); ++i) f.negate_row(i);
  RatVector c = a.chi_log;
  for (auto& q : c) q = -q;
  return make_pair(std::move(f), std::move(c));
}

/// Factor of automorphy a(x, lambda), x in V (rational), lambda in the lattice.
class AutomorphyFactor {
 public:
  using Fn = std::function<UnitCircleValue(const RatVector&, const IntVector&)>;
  AutomorphyFactor(std::size_t n, Fn f) : n_(n), f_(std::move(f)) {}

  UnitCircleValue operator()(const RatVector& x, const IntVector& lambda) const {
    if (x.size() != n_ || lambda.size() != n_) throw Error("automorphy factor: size mismatch");
    return f_(x, lambda);
  }
  std::size_t dim() const { return n_; }

  /// a(x + l, m) a(x, l) == a(x, l + m)
  bool cocycle_holds(const RatVector& x, const IntVector& l, const IntVector& m,
                     double tol = 1e-9) const {
    RatVector xl = x;
    IntVector lm = l;
    for (std::size_t i = 0; i < n_; ++i) {
      xl[i] += Rat(l[i]);
      lm[i] += m[i];
    }
    return ((*this)(xl, m) * (*this)(x, l)).equals((*this)(x, lm), tol);
  }

 private:
  std::size_t n_;
  Fn f_;
};

/// chi(lambda) exp(i pi A(x, lambda))
inline AutomorphyFactor factor_of_automorphy(const AppellHumbertPair& p) {
  return AutomorphyFactor(p.rank(), [p](const RatVector& x, const IntVector& lambda) {
    return semicharacter(p, lambda) * UnitCircleValue(bilinear(p.form, x, lambda) / 2);
  });
}

/// a'(x, l) = phi(x + l) a(x, l) / phi(x), phi = exp(2 pi i phi_log), phi_log
/// an expression in x1..xn.
inline AutomorphyFactor gauge_transform(const AutomorphyFactor& a, const Expr& phi_log) {
  if (static_cast<std::size_t>(phi_log.max_var()) > a.dim())
    throw Error("gauge: phase expression uses more variables than the lattice rank");
  return AutomorphyFactor(a.dim(), [a, phi_log](const RatVector& x, const IntVector& l) {
    RatVector xl = x;
    for (std::size_t i = 0; i < x.size(); ++i) xl[i] += Rat(l[i]);
    UnitCircleValue phi_xl = UnitCircleValue::from(eval(phi_log, xl));
    UnitCircleValue phi_x = UnitCircleValue::from(eval(phi_log, x));
    return phi_xl * a(x, l) * phi_x.inverse();
  });
}

/// Poincare pair on Z^g x (Z^g)^*, coordinates (lambda, mu):
/// A((l1, m1), (l2, m2)) = m1(l2) - m2(l1), chi(l, m) = exp(i pi m(l)).
inline AppellHumbertPair poincare_pair(std::size_t g) {
  if (g < 1) throw Error("poincare_pair: g must be >= 1");
  IntMatrix f = IntMatrix::zero(2 * g, 2 * g);
  for (std::size_t i = 0; i < g; ++i) {
    f(i, g + i) = -1;
    f(g + i, i) = 1;
  }
  return make_pair(std::move(f), RatVector(2 * g, Rat(0)));
}

/// Gauge phase (turns) y(x)/2 taking the Poincare factor to exp(2 pi i y(lambda));
/// sign -1 gives the gauge with factor exp(-2 pi i mu(x)).
inline Expr poincare_gauge(std::size_t g, int sign = 1) {
  Expr s = cst(0);
  for (std::size_t j = 1; j <= g; ++j)
    s = add(s, mul(x(static_cast<int>(g + j)), x(static_cast<int>(j))));
  return mul(cst(Rat(sign, 2)), s);
}

/// Restriction of a factor on Z^g x (Z^g)^* to Z^g x {0} at fixed second coordinates y.
inline AutomorphyFactor restrict_first_factor(const AutomorphyFactor& a, const RatVector& y) {
  const std::size_t g = y.size();
  if (a.dim() != 2 * g) throw Error("restrict: dimension mismatch");
  return AutomorphyFactor(g, [a, y, g](const RatVector& x, const IntVector& l) {
    RatVector xy = x;
    xy.insert(xy.end(), y.begin(), y.end());
    IntVector l0 = l;
    l0.resize(2 * g, Int(0));
    return a(xy, l0);
  });
}

/// Connection form A = i * sum_a coeff_a dq^a; coordinate q^a is the
/// expression variable x_{a+1}; labels are for display.
struct ConnectionForm1 {
  std::vector<std::string> labels;
  std::vector<Expr> coeffs;

  std::size_t dim() const { return coeffs.size(); }
};

/// R with F = dA = i * sum_{a<b} R_ab dq^a ^ dq^b, R_ab = d_a c_b - d_b c_a.
inline std::vector<std::vector<Expr>> curvature(const ConnectionForm1& a) {
  const std::size_t n = a.dim();
  for (const auto& c : a.coeffs)
    if (static_cast<std::size_t>(c.max_var()) > n)
      throw Error("curvature: coefficient depends on a variable outside the chart");
  std::vector<std::vector<Expr>> r(n, std::vector<Expr>(n, cst(0)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j)
        r[i][j] = sub(diff(a.coeffs[j], static_cast<int>(i + 1)),
                      diff(a.coeffs[i], static_cast<int>(j + 1)));
  return r;
}

/// Poincare connection in flat coordinates. Absolute: labels x^1..x^g, y_1..y_g
/// and A = 2 pi i sum y_j dx^j. Relative: labels y_1..y_g, w^1..w^g and
/// A = 2 pi i sum w^j dy_j.
inline ConnectionForm1 poincare_connection(std::size_t g, bool relative = false) {
  ConnectionForm1 f;
  for (std::size_t j = 1; j <= g; ++j)
    f.labels.push_back((relative ? "y_" : "x^") + std::to_string(j));
  for (std::size_t j = 1; j <= g; ++j)
    f.labels.push_back((relative ? "w^" : "y_") + std::to_string(j));
  for (std::size_t j = 1; j <= g; ++j)
    f.coeffs.push_back(mul(mul(cst(2), Expr::pi()), x(static_cast<int>(g + j))));
  for (std::size_t j = 1; j <= g; ++j) f.coeffs.push_back(cst(0));
  return f;
}

/// F(u, v) for u, v tangent vectors (rational components).
inline Expr curvature_pairing(const ConnectionForm1& a, const RatVector& u, const RatVector& v) {
  auto r = curvature(a);
  Expr s = cst(0);
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j)
      if (u[i] != 0 && v[j] != 0) s = add(s, mul(cst(u[i] * v[j]), r[i][j]));
  return s;
}

/// Verdict for "F vanishes on span(us) x span(vs)".
inline ZeroVerdict curvature_vanishes_on(const ConnectionForm1& a, const std::vector<RatVector>& us,
                                         const std::vector<RatVector>& vs,
                                         const SampleOptions& opt = {}) {
  std::vector<ZeroVerdict> out;
  for (const auto& u : us)
    for (const auto& v : vs) out.push_back(is_zero(curvature_pairing(a, u, v), opt));
  return combine(out);
}

}  // namespace rfm
