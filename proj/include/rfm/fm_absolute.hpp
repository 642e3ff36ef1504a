#pragma once

// The transform on a single torus: skyscrapers <-> flat systems, and local
// systems on affine subtori <-> local systems on dual subtori.
//
// Holonomy of a rank-one system on a subtorus S is stored as its phases (in
// turns) along the rows of S.direction_basis(). The transform sends
// (S, offset c, holonomy xi) to (support with equations D(S) and offset xi,
// holonomy c along the rows of its own direction basis). The same map
// inverts it, after the identification of the double dual with the torus.

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "rfm/error.hpp"
#include "rfm/torus.hpp"

namespace rfm {

/// Finite-length skyscraper: points with multiplicities.
struct Skyscraper {
  Torus torus;
  std::map<TorusPoint, int> points;

  std::size_t length() const {
    std::size_t n = 0;
    for (const auto& [p, m] : points) n += static_cast<std::size_t>(m);
    return n;
  }
  void add(const TorusPoint& p, int multiplicity = 1) {
    if (multiplicity < 1) throw Error("multiplicity must be >= 1");
    if (p.coords.size() != torus.dim()) throw Error("point dimension mismatch");
    points[p] += multiplicity;
  }
  friend bool operator==(const Skyscraper&, const Skyscraper&) = default;
};

/// Direct sum of flat line bundles L_y, y a point of the dual torus.
struct FlatLocalSystem {
  Torus torus;  // the torus carrying the bundles
  std::map<TorusPoint, int> summands;

  std::size_t rank() const {
    std::size_t n = 0;
    for (const auto& [p, m] : summands) n += static_cast<std::size_t>(m);
    return n;
  }
  void add(const TorusPoint& y, int multiplicity = 1) {
    if (multiplicity < 1) throw Error("multiplicity must be >= 1");
    if (y.coords.size() != torus.dim()) throw Error("summand dimension mismatch");
    summands[y] += multiplicity;
  }
  friend bool operator==(const FlatLocalSystem&, const FlatLocalSystem&) = default;
};

/// C(x) -> L_{-x} on the dual torus, additively.
inline FlatLocalSystem transform_skyscraper(const Skyscraper& m) {
  FlatLocalSystem out{m.torus.dual(), {}};
  for (const auto& [p, mult] : m.points) out.add(negate(p), mult);
  return out;
}

/// L_y -> C(-y) on the torus whose dual carries the system.
inline Skyscraper transform_local_system(const FlatLocalSystem& e) {
  Skyscraper out{e.torus.dual(), {}};
  for (const auto& [y, mult] : e.summands) out.add(negate(y), mult);
  return out;
}

struct SubtorusLocalSystem {
  AffineSubtorus support;
  RatVector holonomy;  // along support.direction_basis() rows, in [0, 1)
  int rank = 1;

  friend bool operator==(const SubtorusLocalSystem&, const SubtorusLocalSystem&) = default;
};

inline SubtorusLocalSystem make_subtorus_system(const AffineSubtorus& s, const RatVector& xi,
                                                int rank = 1) {
  if (xi.size() != s.dim())
    throw PreconditionError("holonomy dimension mismatch",
                            "expected " + std::to_string(s.dim()) + " holonomy entries, got " +
                                std::to_string(xi.size()));
  if (rank < 1) throw Error("rank must be >= 1");
  RatVector h(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) h[i] = frac_mod1(xi[i]);
  return {s, std::move(h), rank};
}

struct AbsoluteTransform {
  SubtorusLocalSystem system;
  int wit_index = 0;
};

inline AbsoluteTransform transform_subtorus_system(const SubtorusLocalSystem& l) {
  AffineSubtorus shat = dual_support(l.support, l.holonomy);
  // the direction basis of shat spans the same saturated lattice as the
  // equations of the support, and both are in Hermite form
  if (!(shat.direction_basis() == l.support.equations()))
    throw Error("internal: dual direction basis differs from support equations");
  return {make_subtorus_system(shat, l.support.offset(), l.rank),
          static_cast<int>(l.support.dim())};
}

/// Inverse transform, from the dual torus back to the torus.
inline AbsoluteTransform inverse_transform_subtorus_system(const SubtorusLocalSystem& lhat) {
  return transform_subtorus_system(lhat);
}

/// Flat system on the whole dual torus as a subtorus system.
inline SubtorusLocalSystem as_subtorus_system(const FlatLocalSystem& e, const TorusPoint& y) {
  return make_subtorus_system(whole_torus(e.torus), y.coords);
}

/// Holonomy of l along an integer vector of its direction lattice.
inline Rat holonomy_along(const SubtorusLocalSystem& l, const IntVector& v) {
  const IntMatrix& d = l.support.direction_basis();
  if (d.rows() == 0) return 0;
  RatVector coeff = solve_particular(to_rational(d.transpose()), to_rational(v));
  Rat h = 0;
  for (std::size_t i = 0; i < coeff.size(); ++i) {
    if (!is_integer(coeff[i])) throw Error("vector is not in the direction lattice");
    h += coeff[i] * l.holonomy[i];
  }
  return frac_mod1(h);
}

/// Sum over components R of the intersection of the supports of
/// [holonomies agree along the direction lattice of R], times rank product.
inline std::size_t morphism_space_dim(const SubtorusLocalSystem& a,
                                      const SubtorusLocalSystem& b) {
  std::size_t n = 0;
  for (const auto& r : intersect(a.support, b.support)) {
    bool agree = true;
    const IntMatrix& d = r.direction_basis();
    for (std::size_t i = 0; i < d.rows() && agree; ++i)
      agree = holonomy_along(a, d.row_vector(i)) == holonomy_along(b, d.row_vector(i));
    if (agree) ++n;
  }
  return n * static_cast<std::size_t>(a.rank) * static_cast<std::size_t>(b.rank);
}

/// The system translated by delta: support moved by delta, same holonomy.
inline SubtorusLocalSystem translate(const SubtorusLocalSystem& l, const RatVector& delta) {
  const AffineSubtorus& s = l.support;
  RatVector off = s.offset();
  for (std::size_t i = 0; i < off.size(); ++i)
    for (std::size_t j = 0; j < delta.size(); ++j) off[i] -= Rat(s.equations()(i, j)) * delta[j];
  return make_subtorus_system(subtorus_from_equations(s.torus(), s.equations(), off),
                              l.holonomy, l.rank);
}

}  // namespace rfm

namespace rfm {

inline std::string to_string(const AffineSubtorus& s) {
  return "{eqns " + to_string(s.equations()) + ", offset " + to_string(s.offset()) + "}";
}

inline std::string to_string(const SubtorusLocalSystem& l) {
  return "{support " + to_string(l.support) + ", holonomy " + to_string(l.holonomy) +
         ", rank " + std::to_string(l.rank) + "}";
}

inline void PrintTo(const SubtorusLocalSystem& l, std::ostream* os) { *os << to_string(l); }
inline void PrintTo(const AffineSubtorus& s, std::ostream* os) { *os << to_string(s); }

}  // namespace rfm
