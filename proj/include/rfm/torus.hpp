#pragma once

// Real tori V/Z^g, rational affine subtori, duality of subtori and
// intersections. An affine subtorus is the image in the torus of the real
// affine subspace {y : E y + c = 0}; the stored equations E are the Hermite
// form of a saturated integer system and c is reduced into [0, 1).

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rfm/error.hpp"
#include "rfm/matrix.hpp"
#include "rfm/normal_form.hpp"
#include "rfm/number.hpp"

namespace rfm {

class Torus {
 public:
  explicit Torus(std::size_t g) : g_(g), metric_(RatMatrix::identity(g)) {}
  Torus(std::size_t g, RatMatrix metric) : g_(g), metric_(std::move(metric)) {
    for (std::size_t i = 0; i < metric_.rows(); ++i)
      for (auto& q : metric_.row(i)) q.canonicalize();
    validate();
  }

  std::size_t dim() const { return g_; }
  const RatMatrix& metric() const { return metric_; }

  /// The dual torus V*/Z^g with the inverse metric.
  Torus dual() const { return Torus(g_, inverse(metric_)); }

  friend bool operator==(const Torus& a, const Torus& b) {
    return a.g_ == b.g_ && a.metric_ == b.metric_;
  }

 private:
  void validate() const {
    if (metric_.rows() != g_ || metric_.cols() != g_)
      throw PreconditionError("metric", "metric must be " + std::to_string(g_) + "x" +
                                            std::to_string(g_));
    for (std::size_t i = 0; i < g_; ++i)
      for (std::size_t j = 0; j < g_; ++j)
        if (metric_(i, j) != metric_(j, i)) throw PreconditionError("metric", "not symmetric");
    for (std::size_t k = 1; k <= g_; ++k) {
      std::vector<std::size_t> idx(k);
      for (std::size_t i = 0; i < k; ++i) idx[i] = i;
      if (determinant(metric_.select_rows(0, k).select_cols(idx)) <= 0)
        throw PreconditionError("metric", "not positive definite");
    }
  }

  std::size_t g_;
  RatMatrix metric_;
};

/// A point of the torus, coordinates reduced into [0, 1).
struct TorusPoint {
  RatVector coords;

  TorusPoint() = default;
  explicit TorusPoint(RatVector c) : coords(std::move(c)) {
    for (auto& q : coords) q = frac_mod1(q);
  }
  friend bool operator==(const TorusPoint&, const TorusPoint&) = default;
  friend bool operator<(const TorusPoint& a, const TorusPoint& b) { return a.coords < b.coords; }
};

inline TorusPoint negate(const TorusPoint& p) {
  RatVector c = p.coords;
  for (auto& q : c) q = -q;
  return TorusPoint(std::move(c));
}

inline std::string to_string(const RatVector& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += to_string(v[i]);
  }
  return s + ")";
}

class AffineSubtorus {
 public:
  const Torus& torus() const { return torus_; }
  /// (g - k) x g, Hermite form, saturated.
  const IntMatrix& equations() const { return eqns_; }
  /// length g - k, entries in [0, 1)
  const RatVector& offset() const { return offset_; }
  std::size_t ambient_dim() const { return torus_.dim(); }
  std::size_t dim() const { return torus_.dim() - eqns_.rows(); }
  std::size_t codim() const { return eqns_.rows(); }

  /// Canonical Z-basis (Hermite form) of the lattice of directions, k x g.
  const IntMatrix& direction_basis() const { return directions_; }

  /// Some point of the subtorus (rational, not reduced).
  RatVector base_point() const {
    RatVector rhs(offset_.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = -offset_[i];
    if (eqns_.rows() == 0) return RatVector(ambient_dim(), Rat(0));
    return solve_particular(to_rational(eqns_), rhs);
  }

  /// base_point + sum t_i * direction_i, reduced mod 1.
  TorusPoint point_at(const RatVector& t) const {
    if (t.size() != dim()) throw Error("point_at: parameter count must equal dim");
    RatVector p = base_point();
    for (std::size_t i = 0; i < t.size(); ++i)
      for (std::size_t j = 0; j < p.size(); ++j) p[j] += t[i] * Rat(directions_(i, j));
    return TorusPoint(std::move(p));
  }

  friend bool operator==(const AffineSubtorus& a, const AffineSubtorus& b) {
    return a.torus_ == b.torus_ && a.eqns_ == b.eqns_ && a.offset_ == b.offset_;
  }

  // Built only through subtorus_from_equations.
  static AffineSubtorus make_canonical(Torus t, IntMatrix eqns, RatVector offset) {
    AffineSubtorus s;
    s.torus_ = std::move(t);
    s.eqns_ = std::move(eqns);
    s.offset_ = std::move(offset);
    s.directions_ = kernel_basis(s.eqns_);
    return s;
  }

 private:
  AffineSubtorus() : torus_(0) {}
  Torus torus_;
  IntMatrix eqns_;
  RatVector offset_;
  IntMatrix directions_;
};

/// Canonical subtorus {y : A y + chi = 0} (image in the torus). Rational rows
/// are cleared of denominators; non-primitive systems are saturated.
inline AffineSubtorus subtorus_from_equations(const Torus& t, const RatMatrix& a,
                                              const RatVector& chi) {
  if (a.cols() != t.dim()) throw Error("equation matrix must have g columns");
  if (a.rows() != chi.size()) throw Error("one offset entry per equation row required");
  if (rank(a) != a.rows())
    throw PreconditionError("degenerate equations", "equation rows are linearly dependent");
  if (a.rows() == 0) return AffineSubtorus::make_canonical(t, IntMatrix(0, t.dim()), {});
  RatVector rhs(chi.size());
  for (std::size_t i = 0; i < chi.size(); ++i) rhs[i] = -chi[i];
  RatVector y0 = solve_particular(a, rhs);
  IntMatrix rows(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Int l = 1;
    for (std::size_t j = 0; j < a.cols(); ++j) l = lcm(l, a(i, j).get_den());
    for (std::size_t j = 0; j < a.cols(); ++j) rows(i, j) = Int(a(i, j) * Rat(l));
  }
  IntMatrix h = hnf(saturate(rows)).h;
  RatVector off(h.rows());
  for (std::size_t i = 0; i < h.rows(); ++i) {
    Rat v = 0;
    for (std::size_t j = 0; j < h.cols(); ++j) v -= Rat(h(i, j)) * y0[j];
    off[i] = frac_mod1(v);
  }
  return AffineSubtorus::make_canonical(t, std::move(h), std::move(off));
}

inline AffineSubtorus subtorus_from_equations(const Torus& t, const IntMatrix& a,
                                              const RatVector& chi) {
  return subtorus_from_equations(t, to_rational(a), chi);
}

/// The whole torus as a subtorus.
inline AffineSubtorus whole_torus(const Torus& t) {
  return subtorus_from_equations(t, RatMatrix(0, t.dim()), {});
}

/// The point p as a zero-dimensional subtorus.
inline AffineSubtorus point_subtorus(const Torus& t, const TorusPoint& p) {
  RatVector off(p.coords.size());
  for (std::size_t i = 0; i < off.size(); ++i) off[i] = -p.coords[i];
  return subtorus_from_equations(t, RatMatrix::identity(t.dim()), off);
}

inline bool contains(const AffineSubtorus& s, const TorusPoint& p) {
  if (p.coords.size() != s.ambient_dim()) throw Error("contains: point dimension mismatch");
  for (std::size_t i = 0; i < s.codim(); ++i) {
    Rat v = s.offset()[i];
    for (std::size_t j = 0; j < s.ambient_dim(); ++j) v += Rat(s.equations()(i, j)) * p.coords[j];
    if (!is_integer(v)) return false;
  }
  return true;
}

/// Dual subtorus in the dual torus: its equations are the direction lattice
/// of s, its offset the holonomy xi. Normal to s for every metric.
inline AffineSubtorus dual_support(const AffineSubtorus& s, const RatVector& xi) {
  if (xi.size() != s.dim())
    throw PreconditionError("holonomy dimension mismatch",
                            "expected " + std::to_string(s.dim()) + " holonomy entries, got " +
                                std::to_string(xi.size()));
  return subtorus_from_equations(s.torus().dual(), to_rational(s.direction_basis()), xi);
}

/// True iff the directions of shat (covectors, moved to V by the inverse
/// metric) span the metric-orthogonal complement of the directions of s.
inline bool is_normal_to(const AffineSubtorus& s, const AffineSubtorus& shat) {
  if (s.ambient_dim() != shat.ambient_dim())
    throw Error("is_normal_to: dimension mismatch");
  if (s.dim() + shat.dim() != s.ambient_dim()) return false;
  const RatMatrix& g = s.torus().metric();
  RatMatrix ginv = inverse(g);
  RatMatrix u = to_rational(s.direction_basis());
  RatMatrix w = to_rational(shat.direction_basis()) * ginv;  // rows: G^-1 w (G symmetric)
  RatMatrix pairing = u * g * w.transpose();
  return pairing.is_zero();
}

/// Connected components of s1 ∩ s2, each canonical. Empty when disjoint.
inline std::vector<AffineSubtorus> intersect(const AffineSubtorus& s1, const AffineSubtorus& s2) {
  if (!(s1.torus() == s2.torus())) throw Error("intersect: different ambient tori");
  const std::size_t g = s1.ambient_dim();
  IntMatrix m = s1.equations().stack(s2.equations());
  RatVector c = s1.offset();
  c.insert(c.end(), s2.offset().begin(), s2.offset().end());
  if (m.rows() == 0) return {s1};
  auto sf = snf(m);
  RatVector cp = to_rational(sf.u) * c;
  std::size_t r = 0;
  while (r < std::min(m.rows(), g) && sf.d(r, r) != 0) ++r;
  for (std::size_t i = r; i < m.rows(); ++i)
    if (!is_integer(cp[i])) return {};
  IntMatrix vinv = to_integer(inverse(to_rational(sf.v)));
  RatMatrix eq = to_rational(vinv.select_rows(0, r));
  std::vector<AffineSubtorus> out;
  std::vector<Int> n(r, Int(0));
  for (;;) {
    RatVector off(r);
    for (std::size_t i = 0; i < r; ++i) off[i] = (cp[i] - Rat(n[i])) / Rat(sf.d(i, i));
    out.push_back(subtorus_from_equations(s1.torus(), eq, off));
    std::size_t i = 0;
    while (i < r && n[i] + 1 == sf.d(i, i)) n[i++] = 0;
    if (i == r) break;
    n[i] += 1;
  }
  std::sort(out.begin(), out.end(), [](const AffineSubtorus& a, const AffineSubtorus& b) {
    return a.offset() < b.offset();
  });
  return out;
}

}  // namespace rfm
