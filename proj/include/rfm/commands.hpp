#pragma once

// Command drivers behind the rfm command line tool. Each returns a JSON body
// plus an exit code; the text form is rendered from the same body so both
// formats carry the same fields.

#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfm/error.hpp"
#include "rfm/fm_absolute.hpp"
#include "rfm/fm_relative.hpp"
#include "rfm/generate.hpp"
#include "rfm/scene.hpp"

namespace rfm {

using Json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitParse = 1;
constexpr int kExitPrecondition = 2;

struct CommandOptions {
  SampleOptions sample;
  std::optional<std::uint64_t> seed;
  std::size_t count = 20;
};

struct Report {
  Json body;
  int exit_code = kExitOk;
};

namespace detail {

inline Json rat_json(const RatVector& v) {
  Json a = Json::array();
  for (const auto& q : v) a.push_back(to_string(q));
  return a;
}

inline Json int_matrix_json(const IntMatrix& m) {
  Json a = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) r.push_back(to_string(m(i, j)));
    a.push_back(r);
  }
  return a;
}

inline Json rat_matrix_json(const RatMatrix& m) {
  Json a = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) r.push_back(to_string(m(i, j)));
    a.push_back(r);
  }
  return a;
}

inline Json expr_json(const std::vector<Expr>& v) {
  Json a = Json::array();
  for (const auto& e : v) a.push_back(canonical_text(e));
  return a;
}

inline Json expr_matrix_json(const ExprMatrix& m) {
  Json a = Json::array();
  for (const auto& row : m) a.push_back(expr_json(row));
  return a;
}

inline Json strings_json(const std::vector<std::string>& v) {
  Json a = Json::array();
  for (const auto& s : v) a.push_back(s);
  return a;
}

// Collects warnings for every verdict that rests on sampling.
class Verdicts {
 public:
  explicit Verdicts(const SampleOptions& opt) : opt_(opt) {}

  Json verdict(const std::string& name, ZeroVerdict v, const std::vector<std::string>& failures = {}) {
    Json j;
    j["name"] = name;
    j["verdict"] = to_string(v);
    j["holds"] = holds_zero(v);
    j["proof"] = is_proven(v) ? "proven" : "numerical";
    if (!failures.empty()) j["failures"] = strings_json(failures);
    if (!is_proven(v)) {
      std::ostringstream w;
      w << name << ": " << to_string(v) << " (sampled, grid " << opt_.grid << ", tol "
        << opt_.tol << ")";
      warnings_.push_back(w.str());
    }
    return j;
  }
  Json condition(const ConditionReport& c) { return verdict(c.name, c.verdict, c.failures); }

  Json warnings() const { return strings_json(warnings_); }

 private:
  SampleOptions opt_;
  std::vector<std::string> warnings_;
};

inline Json subtorus_json(const SubtorusLocalSystem& l) {
  Json j;
  j["dim"] = l.support.dim();
  j["equations"] = int_matrix_json(l.support.equations());
  j["offset"] = rat_json(l.support.offset());
  j["directions"] = int_matrix_json(l.support.direction_basis());
  j["holonomy"] = rat_json(l.holonomy);
  j["rank"] = l.rank;
  return j;
}

inline Json points_json(const std::map<TorusPoint, int>& pts, const char* coord_key) {
  Json a = Json::array();
  for (const auto& [p, m] : pts) {
    Json e;
    e[coord_key] = rat_json(p.coords);
    e["multiplicity"] = m;
    a.push_back(e);
  }
  return a;
}

inline Json support_json(const RelativeSupport& s) {
  Json j;
  j["g"] = s.g;
  j["k"] = s.k;
  Json piv = Json::array();
  for (auto p : s.pivot_indices()) piv.push_back(p);
  j["pivots"] = piv;
  j["zeta"] = expr_json(s.zeta);
  j["a"] = expr_matrix_json(s.a);
  j["chi"] = expr_json(s.chi);
  return j;
}

inline Json local_json(const LocalSystemData& l) {
  Json j;
  j["alpha"] = expr_json(l.alpha);
  j["xi"] = rat_json(l.xi);
  j["rank"] = l.rank;
  return j;
}

inline Json canonical_json(const CanonicalRelative& c) {
  Json j;
  j["g"] = c.g;
  j["k"] = c.k;
  j["zeta"] = strings_json(c.zeta);
  j["fibre"] = rat_matrix_json(c.fibre);
  j["offset"] = strings_json(c.offset);
  j["holonomy"] = rat_json(c.holonomy);
  j["alpha"] = strings_json(c.alpha);
  return j;
}

inline Json bundle_json(const TransformedBundle& b, Verdicts& v) {
  Json j;
  j["g"] = b.g;
  j["k"] = b.k;
  j["zeta"] = expr_json(b.zeta);
  j["gamma_tilde"] = expr_matrix_json(b.gamma_tilde);
  j["varsigma"] = expr_json(b.varsigma);
  j["alpha_hat"] = expr_json(b.alpha_hat);
  j["beta"] = expr_json(b.beta);
  j["rank"] = b.rank;
  j["holomorphic"] = v.verdict("holomorphic", b.holomorphic, b.non_holomorphic);
  j["w_invariant"] = v.verdict("w_invariant", b.w_invariant);
  return j;
}

inline Json dual_input_json(const DualBundleInput& b) {
  Json j;
  j["g"] = b.g;
  j["k"] = b.k;
  j["zeta"] = expr_json(b.zeta);
  j["P"] = expr_matrix_json(b.P);
  j["Q"] = expr_json(b.Q);
  j["alpha"] = expr_json(b.alpha);
  j["beta"] = expr_json(b.beta);
  return j;
}

inline RelativeSupport section_as_relative(const SectionSupport& s) {
  RelativeSupport r;
  r.g = r.k = s.epsilon.size();
  r.a.assign(r.g, {});
  r.chi = s.epsilon;
  return r;
}

// Closedness of sum alpha_j dx^j.
inline ConditionReport closed_report(const std::string& name, const std::vector<Expr>& alpha,
                                     const SampleOptions& opt) {
  ConditionReport r{name, ZeroVerdict::ProvenZero, {}};
  std::vector<ZeroVerdict> vs;
  for (std::size_t j = 1; j <= alpha.size(); ++j)
    for (std::size_t m = j + 1; m <= alpha.size(); ++m)
      record(r, vs, "(" + std::to_string(j) + ", " + std::to_string(m) + ")",
             sub(diff(alpha[j - 1], static_cast<int>(m)), diff(alpha[m - 1], static_cast<int>(j))),
             opt);
  r.verdict = combine(vs);
  return r;
}

inline std::vector<std::string> canonical_diff(const CanonicalRelative& a, const CanonicalRelative& b) {
  std::vector<std::string> d;
  if (a.g != b.g || a.k != b.k) d.push_back("dimensions");
  if (a.zeta != b.zeta) d.push_back("zeta");
  if (!(a.fibre == b.fibre)) d.push_back("fibre");
  if (a.offset != b.offset) d.push_back("offset");
  if (a.holonomy != b.holonomy) d.push_back("holonomy");
  if (a.alpha != b.alpha) d.push_back("alpha");
  return d;
}

inline std::vector<std::string> dual_input_diff(const DualBundleInput& a, const DualBundleInput& b) {
  std::vector<std::string> d;
  auto texts = [](const std::vector<Expr>& v) {
    std::vector<std::string> s;
    for (const auto& e : v) s.push_back(canonical_text(e));
    return s;
  };
  if (a.g != b.g || a.k != b.k) d.push_back("dimensions");
  if (texts(a.zeta) != texts(b.zeta)) d.push_back("zeta");
  if (a.P.size() != b.P.size()) {
    d.push_back("P");
  } else {
    for (std::size_t i = 0; i < a.P.size(); ++i)
      if (texts(a.P[i]) != texts(b.P[i])) {
        d.push_back("P");
        break;
      }
  }
  if (texts(a.Q) != texts(b.Q)) d.push_back("Q");
  if (texts(a.alpha) != texts(b.alpha)) d.push_back("alpha");
  if (texts(a.beta) != texts(b.beta)) d.push_back("beta");
  return d;
}

inline Json hodge_table_json(const ComplexTable& t, bool upper_only) {
  Json a = Json::array();
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = upper_only ? i + 1 : 0; j < t.size(); ++j) {
      Json e;
      e["entry"] = "(" + std::to_string(i + 1) + ", " + std::to_string(j + 1) + ")";
      e["re"] = canonical_text(t[i][j].re);
      e["im"] = canonical_text(t[i][j].im);
      a.push_back(e);
    }
  return a;
}

inline Json hodge_json(const HodgeComponents& h, Verdicts& v) {
  Json j;
  j["f20"] = hodge_table_json(h.f20, true);
  j["f11"] = hodge_table_json(h.f11, false);
  j["f02"] = hodge_table_json(h.f02, true);
  j["verdicts"] = Json::array({v.verdict("F20 == 0", table_is_zero(h.f20)),
                               v.verdict("F11 == 0", table_is_zero(h.f11)),
                               v.verdict("F02 == 0", table_is_zero(h.f02))});
  return j;
}

inline Json header(const char* command, const Scene& sc) {
  Json j;
  j["command"] = command;
  j["kind"] = to_string(sc.kind);
  j["g"] = sc.g;
  return j;
}

inline TransformOptions transform_options(const CommandOptions& o, bool require_c1 = true) {
  TransformOptions t;
  t.sample = o.sample;
  t.require_c1 = require_c1;
  return t;
}

// Forward, inverse and canonical comparison of one relative instance.
inline Json relative_roundtrip(const RelativeSupport& s, const LocalSystemData& l,
                               const CommandOptions& o, Verdicts& v, bool& ok) {
  TransformedBundle b = transform_nontransversal(s, l, transform_options(o));
  InverseResult back = inverse_transform(as_dual_input(b), o.sample);
  CanonicalRelative before = canonical_form(s, l);
  CanonicalRelative after = canonical_form(back.support, back.local);
  auto mismatch = canonical_diff(before, after);
  ConditionReport flat = closed_report("recovered flatness", back.local.alpha, o.sample);
  Json j;
  j["identity"] = mismatch.empty();
  j["mismatched_fields"] = strings_json(mismatch);
  j["recovered_flat"] = v.condition(flat);
  j["forward_wit_index"] = b.wit_index;
  j["inverse_wit_index"] = back.wit_index;
  j["canonical"] = canonical_json(after);
  ok = ok && mismatch.empty() && flat.holds();
  return j;
}

}  // namespace detail

inline Report cmd_transform(const Scene& sc, const CommandOptions& o = {}) {
  using namespace detail;
  Verdicts v(o.sample);
  Json j = header("transform", sc);
  switch (sc.kind) {
    case SceneKind::Skyscraper: {
      FlatLocalSystem e = transform_skyscraper(*sc.skyscraper);
      j["length"] = sc.skyscraper->length();
      j["result"] = {{"type", "flat local system"},
                     {"rank", e.rank()},
                     {"summands", points_json(e.summands, "holonomy")}};
      bool trivial = true;
      for (const auto& [y, m] : e.summands)
        for (const auto& q : y.coords) trivial = trivial && q == 0;
      j["result"]["trivial"] = trivial;
      j["wit_index"] = 0;
      break;
    }
    case SceneKind::Flat: {
      Skyscraper m = transform_local_system(*sc.flat);
      j["result"] = {{"type", "skyscraper"},
                     {"length", m.length()},
                     {"points", points_json(m.points, "point")}};
      j["wit_index"] = sc.g;
      break;
    }
    case SceneKind::Subtorus: {
      AbsoluteTransform t = transform_subtorus_system(*sc.subtorus);
      j["input"] = subtorus_json(*sc.subtorus);
      j["result"] = subtorus_json(t.system);
      j["result"]["normal"] = is_normal_to(sc.subtorus->support, t.system.support);
      bool origin = true;
      for (const auto& q : t.system.support.offset()) origin = origin && q == 0;
      j["result"]["through_origin"] = origin;
      j["wit_index"] = t.wit_index;
      break;
    }
    case SceneKind::Section: {
      TransformedBundle b = transform_section(sc.section, sc.local, transform_options(o));
      j["result"] = bundle_json(b, v);
      j["jacobian_match"] = v.verdict("gamma_tilde == d zeta", gamma_matches_jacobian(b, o.sample));
      j["wit_index"] = b.wit_index;
      break;
    }
    case SceneKind::Relative: {
      TransformedBundle b = transform_nontransversal(sc.relative, sc.local, transform_options(o));
      j["result"] = bundle_json(b, v);
      j["jacobian_match"] = v.verdict("gamma_tilde == d zeta", gamma_matches_jacobian(b, o.sample));
      j["wit_index"] = b.wit_index;
      break;
    }
    case SceneKind::Bundle: {
      InverseResult r = inverse_transform(sc.bundle, o.sample);
      j["result"] = {{"support", support_json(r.support)}, {"local_system", local_json(r.local)}};
      j["wit_index"] = r.wit_index;
      break;
    }
  }
  j["warnings"] = v.warnings();
  return {j, kExitOk};
}

inline Report cmd_check(const Scene& sc, const CommandOptions& o = {}) {
  using namespace detail;
  Verdicts v(o.sample);
  Json j = header("check", sc);
  Json conds = Json::array();
  bool ok = true;
  auto add = [&](const ConditionReport& c) {
    conds.push_back(v.condition(c));
    ok = ok && c.holds();
  };
  switch (sc.kind) {
    case SceneKind::Skyscraper:
    case SceneKind::Flat:
    case SceneKind::Subtorus:
      // nothing beyond what loading validated
      break;
    case SceneKind::Section: {
      add(closed_report("closed", sc.local.alpha, o.sample));
      auto c1 = check_C1(section_as_relative(sc.section), o.sample);
      add(c1);
      break;
    }
    case SceneKind::Relative: {
      add(check_C1(sc.relative, o.sample));
      auto [c2, c3] = check_C2_C3(sc.relative, o.sample);
      add(c2);
      add(c3);
      add(closed_report("closed", sc.local.alpha, o.sample));
      if (c2.holds()) j["wit_index"] = wit_index(sc.relative, o.sample);
      break;
    }
    case SceneKind::Bundle: {
      DConditions d = check_D_conditions(sc.bundle, o.sample);
      for (const ConditionReport* c : {&d.d1, &d.d2, &d.d3, &d.f02}) add(*c);
      break;
    }
  }
  j["conditions"] = conds;
  j["all_hold"] = ok;
  j["warnings"] = v.warnings();
  return {j, ok ? kExitOk : kExitPrecondition};
}

inline Report cmd_roundtrip(const Scene& sc, const CommandOptions& o = {}) {
  using namespace detail;
  Verdicts v(o.sample);
  Json j = header("roundtrip", sc);
  bool ok = true;
  switch (sc.kind) {
    case SceneKind::Skyscraper: {
      Skyscraper back = transform_local_system(transform_skyscraper(*sc.skyscraper));
      ok = back == *sc.skyscraper;
      j["identity"] = ok;
      j["points"] = points_json(back.points, "point");
      break;
    }
    case SceneKind::Flat: {
      FlatLocalSystem back = transform_skyscraper(transform_local_system(*sc.flat));
      ok = back == *sc.flat;
      j["identity"] = ok;
      j["summands"] = points_json(back.summands, "holonomy");
      break;
    }
    case SceneKind::Subtorus: {
      AbsoluteTransform f = transform_subtorus_system(*sc.subtorus);
      AbsoluteTransform b = inverse_transform_subtorus_system(f.system);
      ok = b.system == *sc.subtorus;
      j["identity"] = ok;
      j["forward"] = subtorus_json(f.system);
      j["back"] = subtorus_json(b.system);
      break;
    }
    case SceneKind::Section: {
      TransformedBundle b = transform_section(sc.section, sc.local, transform_options(o));
      InverseResult back = inverse_transform(as_dual_input(b), o.sample);
      auto mismatch = canonical_diff(canonical_form(section_as_relative(sc.section), sc.local),
                                     canonical_form(back.support, back.local));
      ConditionReport flat = closed_report("recovered flatness", back.local.alpha, o.sample);
      ok = mismatch.empty() && flat.holds();
      j["identity"] = mismatch.empty();
      j["mismatched_fields"] = strings_json(mismatch);
      j["recovered_flat"] = v.condition(flat);
      break;
    }
    case SceneKind::Relative:
      j["result"] = relative_roundtrip(sc.relative, sc.local, o, v, ok);
      break;
    case SceneKind::Bundle: {
      InverseResult r = inverse_transform(sc.bundle, o.sample);
      TransformedBundle b = transform_nontransversal(r.support, r.local, transform_options(o));
      auto mismatch = dual_input_diff(sc.bundle, as_dual_input(b));
      ok = mismatch.empty();
      j["identity"] = ok;
      j["mismatched_fields"] = strings_json(mismatch);
      j["back"] = dual_input_json(as_dual_input(b));
      break;
    }
  }
  j["warnings"] = v.warnings();
  return {j, ok ? kExitOk : kExitPrecondition};
}

/// Round trips of seeded random constant-coefficient relative instances,
/// 2 <= g <= 4 and 1 <= k <= g-1. Same seed, same report.
inline Report cmd_roundtrip_seeded(const CommandOptions& o) {
  using namespace detail;
  if (!o.seed) throw Error("seeded round trip needs a seed");
  Verdicts v(o.sample);
  std::mt19937_64 rng(*o.seed);
  Json j;
  j["command"] = "roundtrip";
  j["seed"] = *o.seed;
  j["count"] = o.count;
  Json cases = Json::array();
  std::size_t passed = 0;
  for (std::size_t i = 0; i < o.count; ++i) {
    const std::size_t g = 2 + static_cast<std::size_t>(rng() % 3);
    const std::size_t k = 1 + static_cast<std::size_t>(rng() % (g - 1));
    auto inst = generate::random_relative(rng, g, k, true);
    bool ok = true;
    Json c = relative_roundtrip(inst.support, inst.local, o, v, ok);
    c.erase("canonical");
    Json e;
    e["index"] = i;
    e["g"] = g;
    e["k"] = k;
    e["input"] = {{"support", support_json(inst.support)}, {"local_system", local_json(inst.local)}};
    e.update(c);
    cases.push_back(e);
    passed += ok ? 1 : 0;
  }
  j["passed"] = passed;
  j["cases"] = cases;
  j["warnings"] = v.warnings();
  return {j, passed == o.count ? kExitOk : kExitPrecondition};
}

inline Report cmd_curvature(const Scene& sc, const CommandOptions& o = {}) {
  using namespace detail;
  Verdicts v(o.sample);
  Json j = header("curvature", sc);
  switch (sc.kind) {
    case SceneKind::Skyscraper:
    case SceneKind::Flat:
    case SceneKind::Subtorus:
      throw Error("curvature needs a section, relative or bundle scene");
    case SceneKind::Section: {
      ConnectionForm1 c = section_connection(sc.section, sc.local);
      j["connection"] = expr_json(c.coeffs);
      j["variables"] = strings_json(c.labels);
      j["hodge"] = hodge_json(curvature_hodge(c, sc.g), v);
      break;
    }
    case SceneKind::Relative: {
      // C1 is reported rather than required so its failure shows up in F02.
      TransformedBundle b = transform_nontransversal(sc.relative, sc.local, transform_options(o, false));
      j["C1"] = v.condition(check_C1(sc.relative, o.sample));
      j["connection"] = expr_json(b.connection.coeffs);
      j["variables"] = strings_json(b.connection.labels);
      j["hodge"] = hodge_json(curvature_hodge(b), v);
      F02Report f = check_F02_iff_lagrangian(sc.relative, b, o.sample);
      j["F02_vs_lagrangian"] = {{"agreement", v.verdict("Re F02 == -(pi/2) eq4", f.agreement)},
                                {"eq4_zero", v.verdict("eq4 == 0", f.eq4_zero)}};
      break;
    }
    case SceneKind::Bundle: {
      const DualBundleInput& in = sc.bundle;
      ConnectionForm1 c;
      for (std::size_t i = 1; i <= in.k; ++i) c.labels.push_back(FibrationModel::base_label(i));
      for (std::size_t i = 1; i <= in.k; ++i) c.labels.push_back(FibrationModel::dual_label(i));
      for (const auto& a : in.alpha) c.coeffs.push_back(a);
      for (const auto& b : in.beta) c.coeffs.push_back(simplify(mul(mul(cst(2), Expr::pi()), b)));
      j["connection"] = expr_json(c.coeffs);
      j["variables"] = strings_json(c.labels);
      j["hodge"] = hodge_json(curvature_hodge(c, in.k), v);
      break;
    }
  }
  j["warnings"] = v.warnings();
  return {j, kExitOk};
}

// ---------------------------------------------------------------------------
// Rendering

namespace detail {

inline bool is_scalar(const Json& j) { return !j.is_object() && !j.is_array(); }

inline std::string scalar_text(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  return j.dump();
}

inline bool is_flat_array(const Json& j) {
  if (!j.is_array()) return false;
  for (const auto& e : j)
    if (!is_scalar(e) && !(e.is_array() && std::all_of(e.begin(), e.end(), is_scalar))) return false;
  return true;
}

inline std::string inline_text(const Json& j) {
  if (is_scalar(j)) return scalar_text(j);
  std::string s = "[";
  bool first = true;
  for (const auto& e : j) {
    if (!first) s += j.front().is_array() ? "; " : ", ";
    first = false;
    s += e.is_array() ? inline_text(e).substr(1, inline_text(e).size() - 2) : scalar_text(e);
  }
  return s + "]";
}

inline void render(const Json& j, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (is_scalar(v) || is_flat_array(v)) {
        out += pad + k + ": " + inline_text(v) + "\n";
      } else if (v.empty()) {
        out += pad + k + ": " + (v.is_array() ? "[]" : "{}") + "\n";
      } else {
        out += pad + k + ":\n";
        render(v, indent + 2, out);
      }
    }
  } else if (j.is_array()) {
    for (const auto& e : j) {
      if (is_scalar(e) || is_flat_array(e)) {
        out += pad + "- " + inline_text(e) + "\n";
      } else {
        std::string inner;
        render(e, indent + 2, inner);
        inner.replace(static_cast<std::size_t>(indent), 2, "- ");
        out += inner;
      }
    }
  } else {
    out += pad + scalar_text(j) + "\n";
  }
}

}  // namespace detail

inline std::string render_text(const Json& j) {
  std::string out;
  detail::render(j, 0, out);
  return out;
}

inline std::string render(const Report& r, bool json) {
  return json ? r.body.dump(2) + "\n" : render_text(r.body);
}

/// Error reports with the exit code the command line tool uses.
inline Report error_report(const std::exception& e) {
  Json j;
  if (const auto* p = dynamic_cast<const ParseError*>(&e)) {
    j["error"] = {{"kind", "parse"}, {"message", p->message()}, {"offset", p->offset()}};
    return {j, kExitParse};
  }
  if (const auto* p = dynamic_cast<const PreconditionError*>(&e)) {
    j["error"] = {{"kind", "precondition"}, {"condition", p->condition()}, {"message", p->what()}};
    return {j, kExitPrecondition};
  }
  j["error"] = {{"kind", "error"}, {"message", e.what()}};
  return {j, kExitParse};
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace rfm
