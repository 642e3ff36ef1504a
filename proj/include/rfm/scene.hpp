#pragma once

// Scene files: a line-oriented sectioned text format.
//
//   # comment
//   [torus]
//   g = 2
//   metric = 2, 1; 1, 2          optional, absolute scenes only
//   [support]
//   kind = subtorus
//   equations = 1, -2
//   offset = 1/3
//   [system]
//   holonomy = 1/5
//
// Vectors are comma separated, matrix rows are separated by ';'. Entries are
// rationals "p/q" or expressions in x1, x2, ... Byte offsets in errors refer
// to the whole file.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rfm/error.hpp"
#include "rfm/expr.hpp"
#include "rfm/fm_absolute.hpp"
#include "rfm/fm_relative.hpp"
#include "rfm/number.hpp"
#include "rfm/torus.hpp"

namespace rfm {

struct SceneEntry {
  std::string value;
  std::size_t offset = 0;  // byte offset of the value in the file
  std::size_t key_offset = 0;
};

using SceneSection = std::map<std::string, SceneEntry>;

enum class SceneKind { Skyscraper, Flat, Subtorus, Section, Relative, Bundle };

inline const char* to_string(SceneKind k) {
  switch (k) {
    case SceneKind::Skyscraper: return "skyscraper";
    case SceneKind::Flat: return "flat";
    case SceneKind::Subtorus: return "subtorus";
    case SceneKind::Section: return "section";
    case SceneKind::Relative: return "relative";
    case SceneKind::Bundle: return "bundle";
  }
  return "?";
}

struct Scene {
  SceneKind kind = SceneKind::Skyscraper;
  std::size_t g = 0;
  Torus torus{0};
  std::optional<Skyscraper> skyscraper;
  std::optional<FlatLocalSystem> flat;
  std::optional<SubtorusLocalSystem> subtorus;
  SectionSupport section;
  RelativeSupport relative;
  LocalSystemData local;
  DualBundleInput bundle;
};

namespace detail {

inline std::string_view trim(std::string_view s, std::size_t* lead = nullptr) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  if (lead) *lead = b;
  return s.substr(b, e - b);
}

struct Piece {
  std::string_view text;
  std::size_t offset;
};

// Splits on `sep`, trimming pieces. An empty value gives no pieces.
inline std::vector<Piece> split(std::string_view s, std::size_t base, char sep) {
  std::vector<Piece> out;
  std::size_t lead = 0;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  for (;;) {
    std::size_t end = s.find(sep, start);
    std::string_view raw = s.substr(start, end == std::string_view::npos ? s.npos : end - start);
    std::string_view t = trim(raw, &lead);
    if (t.empty()) throw ParseError(std::string("empty entry before '") + sep + "'", base + start);
    out.push_back({t, base + start + lead});
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

template <class F>
auto rebase(std::size_t base, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw ParseError(e.message(), base + e.offset());
  }
}

inline Rat parse_rat_at(const Piece& p) {
  return rebase(p.offset, [&] { return parse_rational(p.text); });
}

inline RatVector rat_vector(const SceneEntry& e) {
  RatVector v;
  for (const auto& p : split(e.value, e.offset, ',')) v.push_back(parse_rat_at(p));
  return v;
}

inline std::vector<RatVector> rat_rows(const SceneEntry& e) {
  std::vector<RatVector> rows;
  for (const auto& r : split(e.value, e.offset, ';')) {
    RatVector v;
    for (const auto& p : split(r.text, r.offset, ',')) v.push_back(parse_rat_at(p));
    rows.push_back(std::move(v));
  }
  return rows;
}

inline std::vector<Expr> expr_vector(const SceneEntry& e, int arity) {
  std::vector<Expr> v;
  for (const auto& p : split(e.value, e.offset, ','))
    v.push_back(rebase(p.offset, [&] { return parse_expr(p.text, arity); }));
  return v;
}

inline ExprMatrix expr_rows(const SceneEntry& e, int arity) {
  ExprMatrix m;
  for (const auto& r : split(e.value, e.offset, ';')) {
    std::vector<Expr> row;
    for (const auto& p : split(r.text, r.offset, ','))
      row.push_back(rebase(p.offset, [&] { return parse_expr(p.text, arity); }));
    m.push_back(std::move(row));
  }
  return m;
}

inline long parse_count(const SceneEntry& e, const char* what) {
  Rat q = rebase(e.offset, [&] { return parse_rational(e.value); });
  if (!is_integer(q) || q < 0)
    throw ParseError(std::string(what) + " must be a nonnegative integer", e.offset);
  return q.get_num().get_si();
}

inline RatMatrix to_matrix(const std::vector<RatVector>& rows, std::size_t cols,
                           const SceneEntry& e, const char* what) {
  RatMatrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols)
      throw ParseError(std::string(what) + " rows need " + std::to_string(cols) + " entries",
                       e.offset);
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

class SceneReader {
 public:
  explicit SceneReader(const std::map<std::string, SceneSection>& s) : sections_(s) {}

  bool has(const std::string& sec) const { return sections_.count(sec) > 0; }

  const SceneEntry* find(const std::string& sec, const std::string& key) const {
    auto it = sections_.find(sec);
    if (it == sections_.end()) return nullptr;
    auto k = it->second.find(key);
    return k == it->second.end() ? nullptr : &k->second;
  }

  const SceneEntry& need(const std::string& sec, const std::string& key) const {
    if (const SceneEntry* e = find(sec, key)) return *e;
    throw ParseError("missing key '" + key + "' in [" + sec + "]", 0);
  }

  // Only the listed keys may appear in the section.
  void allow(const std::string& sec, std::initializer_list<const char*> keys) const {
    auto it = sections_.find(sec);
    if (it == sections_.end()) return;
    for (const auto& [k, e] : it->second) {
      bool ok = false;
      for (const char* a : keys) ok = ok || k == a;
      if (!ok) throw ParseError("unexpected key '" + k + "' in [" + sec + "]", e.key_offset);
    }
  }

 private:
  const std::map<std::string, SceneSection>& sections_;
};

}  // namespace detail

/// Sections and raw entries. Throws ParseError on malformed lines, unknown
/// or duplicate sections and duplicate keys.
inline std::map<std::string, SceneSection> parse_scene_sections(std::string_view text) {
  std::map<std::string, SceneSection> out;
  std::string current;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    std::size_t lead = 0;
    std::string_view t = detail::trim(line, &lead);
    const std::size_t at = pos + lead;
    if (!t.empty() && t[0] != '#') {
      if (t[0] == '[') {
        if (t.back() != ']') throw ParseError("unterminated section header", at);
        current = std::string(detail::trim(t.substr(1, t.size() - 2)));
        if (current != "torus" && current != "support" && current != "system" &&
            current != "bundle")
          throw ParseError("unknown section [" + current + "]", at);
        if (out.count(current)) throw ParseError("duplicate section [" + current + "]", at);
        out[current];
      } else {
        std::size_t eq = t.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", at);
        if (current.empty()) throw ParseError("entry outside of any section", at);
        std::string key(detail::trim(t.substr(0, eq)));
        if (key.empty()) throw ParseError("empty key", at);
        std::size_t vlead = 0;
        std::string_view v = detail::trim(t.substr(eq + 1), &vlead);
        auto& sec = out[current];
        if (sec.count(key)) throw ParseError("duplicate key '" + key + "'", at);
        sec[key] = {std::string(v), at + eq + 1 + vlead, at};
      }
    }
    if (end == text.size()) break;
    pos = end + 1;
  }
  if (!out.count("torus")) throw ParseError("missing [torus] section", 0);
  return out;
}

/// Typed scene. ParseError for syntax and shape problems, PreconditionError
/// for mathematically invalid data (degenerate equations, bad metric).
inline Scene load_scene(std::string_view text) {
  using namespace detail;
  auto sections = parse_scene_sections(text);
  SceneReader r(sections);
  r.allow("torus", {"g", "metric"});
  Scene sc;
  sc.g = static_cast<std::size_t>(parse_count(r.need("torus", "g"), "g"));
  if (sc.g == 0) throw ParseError("g must be positive", r.need("torus", "g").offset);
  const int g = static_cast<int>(sc.g);
  if (const SceneEntry* m = r.find("torus", "metric"))
    sc.torus = Torus(sc.g, to_matrix(rat_rows(*m), sc.g, *m, "metric"));
  else
    sc.torus = Torus(sc.g);

  if (r.has("bundle")) {
    if (r.has("support") || r.has("system"))
      throw ParseError("a [bundle] scene has no [support] or [system]", 0);
    sc.kind = SceneKind::Bundle;
  } else {
    const SceneEntry& k = r.need("support", "kind");
    if (k.value == "skyscraper") sc.kind = SceneKind::Skyscraper;
    else if (k.value == "flat") sc.kind = SceneKind::Flat;
    else if (k.value == "subtorus") sc.kind = SceneKind::Subtorus;
    else if (k.value == "section") sc.kind = SceneKind::Section;
    else if (k.value == "relative") sc.kind = SceneKind::Relative;
    else throw ParseError("unknown support kind '" + k.value + "'", k.offset);
  }
  const bool absolute = sc.kind == SceneKind::Skyscraper || sc.kind == SceneKind::Flat ||
                        sc.kind == SceneKind::Subtorus;
  if (!absolute && r.find("torus", "metric"))
    throw ParseError("metric applies to absolute scenes only", r.find("torus", "metric")->offset);

  auto multiplicities = [&](std::size_t n) {
    std::vector<int> m(n, 1);
    if (const SceneEntry* e = r.find("support", "multiplicities")) {
      RatVector v = rat_vector(*e);
      if (v.size() != n) throw ParseError("one multiplicity per row required", e->offset);
      for (std::size_t i = 0; i < n; ++i) {
        if (!is_integer(v[i]) || v[i] < 1)
          throw ParseError("multiplicities must be positive integers", e->offset);
        m[i] = static_cast<int>(v[i].get_num().get_si());
      }
    }
    return m;
  };

  switch (sc.kind) {
    case SceneKind::Skyscraper: {
      r.allow("support", {"kind", "points", "multiplicities"});
      r.allow("system", {});
      const SceneEntry& e = r.need("support", "points");
      auto rows = rat_rows(e);
      auto mult = multiplicities(rows.size());
      sc.skyscraper = Skyscraper{sc.torus, {}};
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != sc.g) throw ParseError("points need g coordinates", e.offset);
        sc.skyscraper->add(TorusPoint(rows[i]), mult[i]);
      }
      break;
    }
    case SceneKind::Flat: {
      r.allow("support", {"kind", "multiplicities"});
      r.allow("system", {"holonomy"});
      const SceneEntry& e = r.need("system", "holonomy");
      auto rows = rat_rows(e);
      auto mult = multiplicities(rows.size());
      sc.flat = FlatLocalSystem{sc.torus.dual(), {}};
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != sc.g) throw ParseError("holonomy rows need g entries", e.offset);
        sc.flat->add(TorusPoint(rows[i]), mult[i]);
      }
      break;
    }
    case SceneKind::Subtorus: {
      r.allow("support", {"kind", "equations", "offset"});
      r.allow("system", {"holonomy", "rank"});
      RatMatrix eq(0, sc.g);
      RatVector off;
      if (const SceneEntry* e = r.find("support", "equations"))
        eq = to_matrix(rat_rows(*e), sc.g, *e, "equations");
      if (const SceneEntry* e = r.find("support", "offset")) off = rat_vector(*e);
      if (off.size() != eq.rows())
        throw ParseError("one offset entry per equation row required",
                         r.find("support", "kind")->offset);
      AffineSubtorus s = subtorus_from_equations(sc.torus, eq, off);
      RatVector hol;
      if (const SceneEntry* e = r.find("system", "holonomy")) hol = rat_vector(*e);
      int rank = 1;
      if (const SceneEntry* e = r.find("system", "rank")) rank = static_cast<int>(parse_count(*e, "rank"));
      sc.subtorus = make_subtorus_system(s, hol, rank);
      break;
    }
    case SceneKind::Section: {
      r.allow("support", {"kind", "epsilon"});
      r.allow("system", {"alpha"});
      sc.section.epsilon = expr_vector(r.need("support", "epsilon"), g);
      if (const SceneEntry* e = r.find("system", "alpha")) sc.local.alpha = expr_vector(*e, g);
      else sc.local.alpha.assign(sc.g, cst(0));
      if (sc.section.epsilon.size() != sc.g || sc.local.alpha.size() != sc.g)
        throw ParseError("section needs g epsilon and alpha entries", r.need("support", "epsilon").offset);
      break;
    }
    case SceneKind::Relative: {
      r.allow("support", {"kind", "k", "zeta", "a", "chi", "pivots"});
      r.allow("system", {"alpha", "xi", "rank"});
      RelativeSupport& s = sc.relative;
      s.g = sc.g;
      const SceneEntry& ke = r.need("support", "k");
      s.k = static_cast<std::size_t>(parse_count(ke, "k"));
      if (s.k > sc.g) throw ParseError("k must not exceed g", ke.offset);
      const int k = static_cast<int>(s.k);
      if (const SceneEntry* e = r.find("support", "zeta")) s.zeta = expr_vector(*e, k);
      if (const SceneEntry* e = r.find("support", "a")) s.a = expr_rows(*e, k);
      if (const SceneEntry* e = r.find("support", "chi")) s.chi = expr_vector(*e, k);
      if (!r.find("support", "zeta")) s.zeta.assign(sc.g - s.k, cst(0));
      if (!r.find("support", "chi")) s.chi.assign(s.k, cst(0));
      if (!r.find("support", "a")) s.a.assign(s.k, std::vector<Expr>(sc.g - s.k, cst(0)));
      if (const SceneEntry* e = r.find("support", "pivots"))
        for (const Rat& q : rat_vector(*e)) {
          if (!is_integer(q) || q < 1) throw ParseError("pivots are indices 1..g", e->offset);
          s.pivots.push_back(static_cast<std::size_t>(q.get_num().get_si()));
        }
      if (const SceneEntry* e = r.find("system", "alpha")) sc.local.alpha = expr_vector(*e, k);
      else sc.local.alpha.assign(s.k, cst(0));
      if (const SceneEntry* e = r.find("system", "xi")) sc.local.xi = rat_vector(*e);
      else sc.local.xi.assign(sc.g - s.k, Rat(0));
      if (const SceneEntry* e = r.find("system", "rank"))
        sc.local.rank = static_cast<int>(parse_count(*e, "rank"));
      rebase(ke.offset, [&] {
        try {
          validate(s, sc.local);
        } catch (const PreconditionError&) {
          throw;
        } catch (const Error& err) {
          throw ParseError(err.what(), 0);
        }
        return 0;
      });
      break;
    }
    case SceneKind::Bundle: {
      r.allow("bundle", {"k", "zeta", "P", "Q", "alpha", "beta"});
      DualBundleInput& b = sc.bundle;
      b.g = sc.g;
      const SceneEntry& ke = r.need("bundle", "k");
      b.k = static_cast<std::size_t>(parse_count(ke, "k"));
      if (b.k > sc.g) throw ParseError("k must not exceed g", ke.offset);
      const int k = static_cast<int>(b.k);
      const std::size_t n = sc.g - b.k;
      if (const SceneEntry* e = r.find("bundle", "zeta")) b.zeta = expr_vector(*e, k);
      if (const SceneEntry* e = r.find("bundle", "P")) b.P = expr_rows(*e, k);
      if (const SceneEntry* e = r.find("bundle", "Q")) b.Q = expr_vector(*e, k);
      if (const SceneEntry* e = r.find("bundle", "alpha")) b.alpha = expr_vector(*e, k);
      else b.alpha.assign(b.k, cst(0));
      if (const SceneEntry* e = r.find("bundle", "beta")) b.beta = expr_vector(*e, k);
      else b.beta.assign(b.k, cst(0));
      if (b.P.empty()) b.P.assign(n, std::vector<Expr>(b.k, cst(0)));
      if (b.Q.empty()) b.Q.assign(n, cst(0));
      if (b.zeta.empty()) b.zeta.assign(n, cst(0));
      rebase(ke.offset, [&] {
        try {
          validate(b);
        } catch (const Error& err) {
          throw ParseError(err.what(), 0);
        }
        return 0;
      });
      break;
    }
  }
  return sc;
}

}  // namespace rfm
