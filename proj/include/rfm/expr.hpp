#pragma once

// Expressions over base coordinates x1..xn: rational literals, pi, +, -, *,
// integer powers, sin, cos. Parsing, canonical printing, exact
// differentiation, Laurent-polynomial normal forms and zero verdicts.
//
// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor ('*' factor)*
//   factor := atom ('^' '-'? integer)?
//   atom   := rational | 'pi' | var | 'sin' '(' expr ')' | 'cos' '(' expr ')'
//           | '(' expr ')' | '-' atom
//   var    := 'x' integer            (1-based)

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "rfm/error.hpp"
#include "rfm/number.hpp"

namespace rfm {

class Expr;

namespace detail {
struct ExprNode;
}

class Expr {
 public:
  enum class Kind { Const, Pi, Var, Neg, Add, Sub, Mul, Pow, Sin, Cos };

  /// The zero constant.
  Expr();

  // Structural constructors: no simplification.
  static Expr constant(const Rat& value);
  static Expr pi();
  static Expr var(int index);
  static Expr make_neg(Expr a);
  static Expr make_add(Expr a, Expr b);
  static Expr make_sub(Expr a, Expr b);
  static Expr make_mul(Expr a, Expr b);
  static Expr make_pow(Expr base, int exponent);
  static Expr make_sin(Expr a);
  static Expr make_cos(Expr a);

  Kind kind() const;
  const Rat& value() const;  // Const
  int index() const;         // Var (1-based) or Pow exponent
  const Expr& child(std::size_t i) const;
  std::size_t child_count() const;

  bool is_constant_node() const { return kind() == Kind::Const; }
  bool is_const(const Rat& v) const { return kind() == Kind::Const && value() == v; }

  /// Largest variable index appearing (0 if none).
  int max_var() const;
  bool has_transcendental() const;  // pi, sin or cos anywhere

  friend bool operator==(const Expr& a, const Expr& b);

  // Internal: wraps an already built node.
  static Expr from_node(std::shared_ptr<const detail::ExprNode> n) { return Expr(std::move(n)); }

 private:
  explicit Expr(std::shared_ptr<const detail::ExprNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const detail::ExprNode> node_;
};

namespace detail {
struct ExprNode {
  Expr::Kind kind = Expr::Kind::Const;
  Rat value;
  int index = 0;
  std::vector<Expr> kids;
};
}  // namespace detail

inline Expr::Expr() : node_(std::make_shared<detail::ExprNode>()) {}

inline Expr Expr::constant(const Rat& value) {
  auto n = std::make_shared<detail::ExprNode>();
  n->kind = Kind::Const;
  n->value = value;
  n->value.canonicalize();
  return Expr(std::move(n));
}
inline Expr Expr::pi() {
  auto n = std::make_shared<detail::ExprNode>();
  n->kind = Kind::Pi;
  return Expr(std::move(n));
}
inline Expr Expr::var(int index) {
  if (index < 1) throw Error("variable index must be >= 1");
  auto n = std::make_shared<detail::ExprNode>();
  n->kind = Kind::Var;
  n->index = index;
  return Expr(std::move(n));
}

namespace detail {
inline Expr make_node(Expr::Kind k, std::vector<Expr> kids, int index = 0);
}

inline Expr Expr::make_neg(Expr a) { return detail::make_node(Kind::Neg, {std::move(a)}); }
inline Expr Expr::make_add(Expr a, Expr b) {
  return detail::make_node(Kind::Add, {std::move(a), std::move(b)});
}
inline Expr Expr::make_sub(Expr a, Expr b) {
  return detail::make_node(Kind::Sub, {std::move(a), std::move(b)});
}
inline Expr Expr::make_mul(Expr a, Expr b) {
  return detail::make_node(Kind::Mul, {std::move(a), std::move(b)});
}
inline Expr Expr::make_pow(Expr base, int exponent) {
  return detail::make_node(Kind::Pow, {std::move(base)}, exponent);
}
inline Expr Expr::make_sin(Expr a) { return detail::make_node(Kind::Sin, {std::move(a)}); }
inline Expr Expr::make_cos(Expr a) { return detail::make_node(Kind::Cos, {std::move(a)}); }

inline Expr::Kind Expr::kind() const { return node_->kind; }
inline const Rat& Expr::value() const { return node_->value; }
inline int Expr::index() const { return node_->index; }
inline const Expr& Expr::child(std::size_t i) const { return node_->kids.at(i); }
inline std::size_t Expr::child_count() const { return node_->kids.size(); }

inline int Expr::max_var() const {
  if (kind() == Kind::Var) return index();
  int m = 0;
  for (const auto& k : node_->kids) m = std::max(m, k.max_var());
  return m;
}

inline bool Expr::has_transcendental() const {
  if (kind() == Kind::Pi || kind() == Kind::Sin || kind() == Kind::Cos) return true;
  for (const auto& k : node_->kids)
    if (k.has_transcendental()) return true;
  return false;
}

inline bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.kind != y.kind || x.index != y.index || x.kids.size() != y.kids.size()) return false;
  if (x.kind == Expr::Kind::Const && x.value != y.value) return false;
  for (std::size_t i = 0; i < x.kids.size(); ++i)
    if (!(x.kids[i] == y.kids[i])) return false;
  return true;
}

namespace detail {
inline Expr make_node(Expr::Kind k, std::vector<Expr> kids, int index) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->index = index;
  n->kids = std::move(kids);
  return Expr::from_node(std::move(n));
}
}  // namespace detail


// ---------------------------------------------------------------------------
// Simplifying builders (constant folding, 0/1 absorption).

inline Expr cst(const Rat& v) { return Expr::constant(v); }
inline Expr x(int i) { return Expr::var(i); }

inline Expr neg(const Expr& a) {
  if (a.kind() == Expr::Kind::Const) return cst(-a.value());
  if (a.kind() == Expr::Kind::Neg) return a.child(0);
  return Expr::make_neg(a);
}

inline Expr add(const Expr& a, const Expr& b) {
  if (a.is_constant_node() && b.is_constant_node()) return cst(a.value() + b.value());
  if (a.is_const(0)) return b;
  if (b.is_const(0)) return a;
  if (b.kind() == Expr::Kind::Neg) return Expr::make_sub(a, b.child(0));
  return Expr::make_add(a, b);
}

inline Expr sub(const Expr& a, const Expr& b) {
  if (a.is_constant_node() && b.is_constant_node()) return cst(a.value() - b.value());
  if (b.is_const(0)) return a;
  if (a.is_const(0)) return neg(b);
  if (a == b) return cst(0);
  if (b.kind() == Expr::Kind::Neg) return Expr::make_add(a, b.child(0));
  return Expr::make_sub(a, b);
}

inline Expr mul(const Expr& a, const Expr& b) {
  if (a.is_constant_node() && b.is_constant_node()) return cst(a.value() * b.value());
  if (a.is_const(0) || b.is_const(0)) return cst(0);
  if (a.is_const(1)) return b;
  if (b.is_const(1)) return a;
  if (a.is_const(-1)) return neg(b);
  if (b.is_const(-1)) return neg(a);
  return Expr::make_mul(a, b);
}

inline Expr pow(const Expr& base, int n) {
  if (n == 0) return cst(1);
  if (n == 1) return base;
  if (base.is_constant_node()) {
    if (base.value() == 0) {
      if (n < 0) throw Error("division by zero in power");
      return cst(0);
    }
    Rat r = 1;
    for (int i = 0; i < (n < 0 ? -n : n); ++i) r *= base.value();
    return cst(n < 0 ? Rat(1) / r : r);
  }
  return Expr::make_pow(base, n);
}

inline Expr sin_of(const Expr& a) {
  if (a.is_const(0)) return cst(0);
  return Expr::make_sin(a);
}
inline Expr cos_of(const Expr& a) {
  if (a.is_const(0)) return cst(1);
  return Expr::make_cos(a);
}

inline Expr operator+(const Expr& a, const Expr& b) { return add(a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return sub(a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return mul(a, b); }
inline Expr operator-(const Expr& a) { return neg(a); }

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class ExprParser {
 public:
  ExprParser(std::string_view s, int max_arity) : s_(s), max_arity_(max_arity) {}

  Expr run() {
    Expr e = expr();
    skip();
    if (pos_ != s_.size()) throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' ||
                                s_[pos_] == '\r'))
      ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  bool accept(char c) {
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }
  void expect(char c) {
    if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
  }
  bool is_digit(std::size_t i) const { return i < s_.size() && s_[i] >= '0' && s_[i] <= '9'; }
  bool is_alpha(std::size_t i) const {
    return i < s_.size() && ((s_[i] >= 'a' && s_[i] <= 'z') || (s_[i] >= 'A' && s_[i] <= 'Z'));
  }

  Int integer() {
    skip();
    std::size_t b = pos_;
    while (is_digit(pos_)) ++pos_;
    if (b == pos_) throw ParseError("expected integer", b);
    return Int(std::string(s_.substr(b, pos_ - b)));
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (accept('+'))
        e = Expr::make_add(e, term());
      else if (accept('-'))
        e = Expr::make_sub(e, term());
      else
        return e;
    }
  }

  Expr term() {
    Expr e = factor();
    while (accept('*')) e = Expr::make_mul(e, factor());
    return e;
  }

  Expr factor() {
    Expr a = atom();
    if (accept('^')) {
      skip();
      std::size_t at = pos_;
      bool negative = accept('-');
      Int n = integer();
      if (n > 1000000) throw ParseError("exponent too large", at);
      int k = static_cast<int>(n.get_si());
      a = Expr::make_pow(a, negative ? -k : k);
    }
    return a;
  }

  Expr atom() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    std::size_t at = pos_;
    if (accept('-')) {
      Expr a = atom();
      if (a.kind() == Expr::Kind::Const) return Expr::constant(-a.value());
      return Expr::make_neg(a);
    }
    if (accept('(')) {
      Expr e = expr();
      expect(')');
      return e;
    }
    if (is_digit(pos_)) {
      Int p = integer();
      Int q = 1;
      if (pos_ < s_.size() && s_[pos_] == '/') {
        ++pos_;
        std::size_t dat = pos_;
        if (!is_digit(pos_)) throw ParseError("expected denominator", pos_);
        q = integer();
        if (q == 0) throw ParseError("zero denominator", dat);
      }
      return Expr::constant(Rat(p, q));
    }
    if (is_alpha(pos_)) {
      std::size_t b = pos_;
      while (is_alpha(pos_)) ++pos_;
      std::string_view word = s_.substr(b, pos_ - b);
      if (word == "pi") return Expr::pi();
      if (word == "sin" || word == "cos") {
        expect('(');
        Expr e = expr();
        expect(')');
        return word == "sin" ? Expr::make_sin(e) : Expr::make_cos(e);
      }
      if (word == "x") {
        if (!is_digit(pos_)) throw ParseError("expected variable index", pos_);
        Int idx = integer();
        if (idx < 1) throw ParseError("variable index must be >= 1", b);
        if (max_arity_ >= 0 && idx > max_arity_)
          throw ParseError("arity violation: x" + idx.get_str() + " exceeds " +
                               std::to_string(max_arity_) + " variables",
                           b);
        if (idx > 1000000) throw ParseError("variable index too large", b);
        return Expr::var(static_cast<int>(idx.get_si()));
      }
      throw ParseError("unknown identifier '" + std::string(word) + "'", b);
    }
    throw ParseError(std::string("unexpected character '") + s_[at] + "'", at);
  }

  std::string_view s_;
  int max_arity_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses `text`. With max_arity >= 0, any variable x_i with i > max_arity is
/// a ParseError.
inline Expr parse_expr(std::string_view text, int max_arity = -1) {
  return detail::ExprParser(text, max_arity).run();
}

// ---------------------------------------------------------------------------
// Canonical printing. parse_expr(to_string(e)) == e for every parser output.

namespace detail {

inline int precedence(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::Add:
    case Expr::Kind::Sub:
      return 1;
    case Expr::Kind::Mul:
      return 2;
    case Expr::Kind::Pow:
      return 3;
    default:
      return 4;
  }
}

inline void print(const Expr& e, int need, std::string& out) {
  const bool paren = precedence(e) < need;
  if (paren) out += '(';
  switch (e.kind()) {
    case Expr::Kind::Const:
      out += to_string(e.value());
      break;
    case Expr::Kind::Pi:
      out += "pi";
      break;
    case Expr::Kind::Var:
      out += 'x';
      out += std::to_string(e.index());
      break;
    case Expr::Kind::Neg:
      out += '-';
      print(e.child(0), 4, out);
      break;
    case Expr::Kind::Add:
    case Expr::Kind::Sub:
      print(e.child(0), 1, out);
      out += e.kind() == Expr::Kind::Add ? " + " : " - ";
      print(e.child(1), 2, out);
      break;
    case Expr::Kind::Mul:
      print(e.child(0), 2, out);
      out += '*';
      print(e.child(1), 3, out);
      break;
    case Expr::Kind::Pow:
      print(e.child(0), 4, out);
      out += '^';
      out += std::to_string(e.index());
      break;
    case Expr::Kind::Sin:
    case Expr::Kind::Cos:
      out += e.kind() == Expr::Kind::Sin ? "sin(" : "cos(";
      print(e.child(0), 0, out);
      out += ')';
      break;
  }
  if (paren) out += ')';
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print(e, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Differentiation

/// d e / d x_i, simplified with the folding builders.
inline Expr diff(const Expr& e, int i) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Const:
    case K::Pi:
      return cst(0);
    case K::Var:
      return cst(e.index() == i ? 1 : 0);
    case K::Neg:
      return neg(diff(e.child(0), i));
    case K::Add:
      return add(diff(e.child(0), i), diff(e.child(1), i));
    case K::Sub:
      return sub(diff(e.child(0), i), diff(e.child(1), i));
    case K::Mul: {
      const Expr& a = e.child(0);
      const Expr& b = e.child(1);
      return add(mul(diff(a, i), b), mul(a, diff(b, i)));
    }
    case K::Pow: {
      const Expr& u = e.child(0);
      int n = e.index();
      if (n == 0) return cst(0);
      return mul(mul(cst(n), pow(u, n - 1)), diff(u, i));
    }
    case K::Sin: {
      const Expr& u = e.child(0);
      return mul(diff(u, i), cos_of(u));
    }
    case K::Cos: {
      const Expr& u = e.child(0);
      return neg(mul(diff(u, i), sin_of(u)));
    }
  }
  return cst(0);
}

/// Substitutes x_i -> values[i-1] (values are expressions).
inline Expr substitute(const Expr& e, std::span<const Expr> values) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Const:
    case K::Pi:
      return e;
    case K::Var:
      if (static_cast<std::size_t>(e.index()) > values.size())
        throw Error("substitute: missing value for x" + std::to_string(e.index()));
      return values[e.index() - 1];
    case K::Neg:
      return neg(substitute(e.child(0), values));
    case K::Add:
      return add(substitute(e.child(0), values), substitute(e.child(1), values));
    case K::Sub:
      return sub(substitute(e.child(0), values), substitute(e.child(1), values));
    case K::Mul:
      return mul(substitute(e.child(0), values), substitute(e.child(1), values));
    case K::Pow:
      return pow(substitute(e.child(0), values), e.index());
    case K::Sin:
      return sin_of(substitute(e.child(0), values));
    case K::Cos:
      return cos_of(substitute(e.child(0), values));
  }
  return e;
}

// ---------------------------------------------------------------------------
// Evaluation

/// Exact value, when the expression is rational at this point: no pi, and
/// every sin/cos argument evaluates exactly to 0. Throws on division by zero.
inline std::optional<Rat> eval_exact(const Expr& e, std::span<const Rat> point) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Const:
      return e.value();
    case K::Pi:
      return std::nullopt;
    case K::Var:
      if (static_cast<std::size_t>(e.index()) > point.size())
        throw Error("eval: point has no coordinate x" + std::to_string(e.index()));
      return point[e.index() - 1];
    case K::Neg: {
      auto a = eval_exact(e.child(0), point);
      if (!a) return std::nullopt;
      return Rat(-*a);
    }
    case K::Add:
    case K::Sub:
    case K::Mul: {
      auto a = eval_exact(e.child(0), point);
      auto b = eval_exact(e.child(1), point);
      if (!a || !b) return std::nullopt;
      if (e.kind() == K::Add) return Rat(*a + *b);
      if (e.kind() == K::Sub) return Rat(*a - *b);
      return Rat(*a * *b);
    }
    case K::Pow: {
      auto a = eval_exact(e.child(0), point);
      if (!a) return std::nullopt;
      int n = e.index();
      if (*a == 0 && n < 0) throw Error("division by zero in power");
      Rat r = 1;
      for (int k = 0; k < (n < 0 ? -n : n); ++k) r *= *a;
      return n < 0 ? Rat(1 / r) : r;
    }
    case K::Sin:
    case K::Cos: {
      auto a = eval_exact(e.child(0), point);
      if (!a || *a != 0) return std::nullopt;
      return Rat(e.kind() == K::Sin ? 0 : 1);
    }
  }
  return std::nullopt;
}

inline double eval_double(const Expr& e, std::span<const double> point) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Const:
      return e.value().get_d();
    case K::Pi:
      return 3.14159265358979323846;
    case K::Var:
      if (static_cast<std::size_t>(e.index()) > point.size())
        throw Error("eval: point has no coordinate x" + std::to_string(e.index()));
      return point[e.index() - 1];
    case K::Neg:
      return -eval_double(e.child(0), point);
    case K::Add:
      return eval_double(e.child(0), point) + eval_double(e.child(1), point);
    case K::Sub:
      return eval_double(e.child(0), point) - eval_double(e.child(1), point);
    case K::Mul:
      return eval_double(e.child(0), point) * eval_double(e.child(1), point);
    case K::Pow:
      return std::pow(eval_double(e.child(0), point), e.index());
    case K::Sin:
      return std::sin(eval_double(e.child(0), point));
    case K::Cos:
      return std::cos(eval_double(e.child(0), point));
  }
  return 0.0;
}

/// Exact Rat when available, double otherwise.
using Value = std::variant<Rat, double>;

inline Value eval(const Expr& e, std::span<const Rat> point) {
  if (auto r = eval_exact(e, point)) return *r;
  std::vector<double> p;
  p.reserve(point.size());
  for (const auto& q : point) p.push_back(q.get_d());
  return eval_double(e, p);
}

inline double to_double(const Value& v) {
  return std::holds_alternative<Rat>(v) ? std::get<Rat>(v).get_d() : std::get<double>(v);
}

// ---------------------------------------------------------------------------
// Laurent-polynomial normal form in pi, x_i and opaque atoms (sin(..), cos(..)
// and inverses of non-monomial subexpressions, each keyed by the canonical
// string of its normalized argument).

struct Atom {
  int cls = 0;  // 0 pi, 1 variable, 2 opaque
  int index = 0;
  std::string key;
  friend auto operator<=>(const Atom&, const Atom&) = default;
};

using Monomial = std::map<Atom, int>;

class Polynomial {
 public:
  Polynomial() = default;
  static Polynomial constant(const Rat& c) {
    Polynomial p;
    if (c != 0) p.terms_[{}] = c;
    return p;
  }
  static Polynomial atom(const Atom& a, const Expr& source) {
    Polynomial p;
    p.terms_[{{a, 1}}] = 1;
    if (a.cls == 2) p.opaque_.emplace(a.key, source);
    return p;
  }

  bool is_zero() const { return terms_.empty(); }
  bool has_opaque() const { return !opaque_.empty(); }
  /// The constant value, when this is a constant.
  std::optional<Rat> constant_value() const {
    if (terms_.empty()) return Rat(0);
    if (terms_.size() == 1 && terms_.begin()->first.empty()) return terms_.begin()->second;
    return std::nullopt;
  }
  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.terms_ == b.terms_; }
  const std::map<Monomial, Rat>& terms() const { return terms_; }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    Polynomial r = a;
    r.merge_opaque(b);
    for (const auto& [m, c] : b.terms_) r.accumulate(m, c);
    return r;
  }
  friend Polynomial operator-(const Polynomial& a) {
    Polynomial r = a;
    for (auto& [m, c] : r.terms_) c = -c;
    return r;
  }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    Polynomial r;
    r.merge_opaque(a);
    r.merge_opaque(b);
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) {
        Monomial m = ma;
        for (const auto& [atom, k] : mb) {
          int& slot = m[atom];
          slot += k;
          if (slot == 0) m.erase(atom);
        }
        r.accumulate(m, ca * cb);
      }
    return r;
  }

  /// Multiplicative inverse when this is a single monomial.
  std::optional<Polynomial> monomial_inverse() const {
    if (terms_.size() != 1) return std::nullopt;
    const auto& [m, c] = *terms_.begin();
    Polynomial r;
    r.opaque_ = opaque_;
    Monomial inv;
    for (const auto& [a, k] : m) inv[a] = -k;
    r.terms_[inv] = Rat(1) / c;
    return r;
  }

  /// Sum-of-products expression with deterministic term order.
  Expr to_expr() const;

 private:
  void accumulate(const Monomial& m, const Rat& c) {
    if (c == 0) return;
    auto it = terms_.find(m);
    if (it == terms_.end()) {
      terms_.emplace(m, c);
      return;
    }
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
  void merge_opaque(const Polynomial& o) {
    for (const auto& kv : o.opaque_) opaque_.insert(kv);
  }

  std::map<Monomial, Rat> terms_;
  std::map<std::string, Expr> opaque_;
};

inline Expr Polynomial::to_expr() const {
  Expr sum = cst(0);
  bool first = true;
  for (const auto& [m, c] : terms_) {
    Expr prod = cst(1);
    for (const auto& [a, k] : m) {
      Expr base = a.cls == 0 ? Expr::pi() : a.cls == 1 ? Expr::var(a.index) : opaque_.at(a.key);
      Expr f = k == 1 ? base : Expr::make_pow(base, k);
      prod = prod.is_const(1) ? f : Expr::make_mul(prod, f);
    }
    Rat mag = c < 0 ? Rat(-c) : c;
    Expr term = prod;
    if (prod.is_const(1))
      term = cst(mag);
    else if (mag != 1)
      term = Expr::make_mul(cst(mag), prod);
    if (first) {
      if (c < 0)
        term = prod.is_const(1) ? cst(c) : c == -1 ? Expr::make_neg(prod) : Expr::make_mul(cst(c), prod);
      sum = term;
      first = false;
    } else {
      sum = c < 0 ? Expr::make_sub(sum, term) : Expr::make_add(sum, term);
    }
  }
  return sum;
}

inline Polynomial expand(const Expr& e) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Const:
      return Polynomial::constant(e.value());
    case K::Pi:
      return Polynomial::atom({0, 0, "pi"}, e);
    case K::Var:
      return Polynomial::atom({1, e.index(), ""}, e);
    case K::Neg:
      return -expand(e.child(0));
    case K::Add:
      return expand(e.child(0)) + expand(e.child(1));
    case K::Sub:
      return expand(e.child(0)) - expand(e.child(1));
    case K::Mul:
      return expand(e.child(0)) * expand(e.child(1));
    case K::Pow: {
      Polynomial b = expand(e.child(0));
      int n = e.index();
      if (n < 0) {
        if (b.is_zero()) throw Error("division by zero in power");
        if (auto inv = b.monomial_inverse()) {
          b = *inv;
        } else {
          Expr arg = b.to_expr();
          std::string key = "(" + to_string(arg) + ")^-1";
          b = Polynomial::atom({2, 0, key}, Expr::make_pow(arg, -1));
        }
        n = -n;
      }
      Polynomial r = Polynomial::constant(1);
      for (int k = 0; k < n; ++k) r = r * b;
      return r;
    }
    case K::Sin:
    case K::Cos: {
      Polynomial u = expand(e.child(0));
      if (u.is_zero()) return Polynomial::constant(e.kind() == K::Sin ? 0 : 1);
      Expr arg = u.to_expr();
      Expr node = e.kind() == K::Sin ? Expr::make_sin(arg) : Expr::make_cos(arg);
      return Polynomial::atom({2, 0, to_string(node)}, node);
    }
  }
  return {};
}

/// Canonical form: equal for expressions with equal Laurent expansions.
inline Expr normalize(const Expr& e) { return expand(e).to_expr(); }
inline std::string canonical_string(const Expr& e) { return to_string(normalize(e)); }

/// Exact inverse for monomials, otherwise the opaque node e^-1.
inline Expr inverse(const Expr& e) {
  Polynomial p = expand(e);
  if (p.is_zero()) throw Error("division by zero: inverse of zero expression");
  if (auto inv = p.monomial_inverse()) return inv->to_expr();
  return Expr::make_pow(e, -1);
}

// ---------------------------------------------------------------------------
// Rational-function form num / den with Laurent-polynomial parts. Monomial
// denominators are folded into the numerator.

struct Fraction {
  Polynomial num;
  Polynomial den = Polynomial::constant(1);

  bool has_opaque() const { return num.has_opaque() || den.has_opaque(); }
};

namespace detail {

inline Fraction reduce(Polynomial num, Polynomial den) {
  if (den.is_zero()) throw Error("division by zero");
  if (auto inv = den.monomial_inverse()) return {num * *inv, Polynomial::constant(1)};
  return {std::move(num), std::move(den)};
}

inline Fraction frac_add(const Fraction& a, const Fraction& b, bool subtract) {
  Polynomial bn = subtract ? -b.num : b.num;
  if (a.den == b.den) return reduce(a.num + bn, a.den);
  return reduce(a.num * b.den + bn * a.den, a.den * b.den);
}

inline Expr fraction_expr(const Fraction& f) {
  if (f.den == Polynomial::constant(1)) return f.num.to_expr();
  return Expr::make_mul(f.num.to_expr(), Expr::make_pow(f.den.to_expr(), -1));
}

}  // namespace detail

inline Fraction to_fraction(const Expr& e) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Const:
    case K::Pi:
    case K::Var:
      return {expand(e)};
    case K::Neg: {
      Fraction f = to_fraction(e.child(0));
      return {-f.num, f.den};
    }
    case K::Add:
    case K::Sub:
      return detail::frac_add(to_fraction(e.child(0)), to_fraction(e.child(1)),
                              e.kind() == K::Sub);
    case K::Mul: {
      Fraction a = to_fraction(e.child(0)), b = to_fraction(e.child(1));
      return detail::reduce(a.num * b.num, a.den * b.den);
    }
    case K::Pow: {
      Fraction b = to_fraction(e.child(0));
      int n = e.index();
      if (n < 0) {
        if (b.num.is_zero()) throw Error("division by zero in power");
        b = detail::reduce(b.den, b.num);
        n = -n;
      }
      Polynomial num = Polynomial::constant(1), den = Polynomial::constant(1);
      for (int k = 0; k < n; ++k) {
        num = num * b.num;
        den = den * b.den;
      }
      return detail::reduce(std::move(num), std::move(den));
    }
    case K::Sin:
    case K::Cos: {
      Fraction u = to_fraction(e.child(0));
      if (u.num.is_zero()) return {Polynomial::constant(e.kind() == K::Sin ? 0 : 1)};
      Expr arg = detail::fraction_expr(u);
      Expr node = e.kind() == K::Sin ? Expr::make_sin(arg) : Expr::make_cos(arg);
      return {Polynomial::atom({2, 0, to_string(node)}, node)};
    }
  }
  return {};
}

/// num * den^-1 with both parts in Laurent normal form.
inline Expr simplify(const Expr& e) { return detail::fraction_expr(to_fraction(e)); }

/// Constant value when the expression is provably a rational constant.
inline std::optional<Rat> as_rational(const Expr& e) {
  if (e.kind() == Expr::Kind::Const) return e.value();
  Fraction f = to_fraction(e);
  auto n = f.num.constant_value();
  auto d = f.den.constant_value();
  if (n && d) return Rat(*n / *d);
  // num == c * den for a constant c (no common factors are cancelled)
  const auto& [m, dc] = *f.den.terms().begin();
  auto it = f.num.terms().find(m);
  if (it == f.num.terms().end()) return std::nullopt;
  Rat c = it->second / dc;
  if (!(f.num - f.den * Polynomial::constant(c)).is_zero()) return std::nullopt;
  return c;
}

// ---------------------------------------------------------------------------
// Zero verdicts

enum class ZeroVerdict { ProvenZero, ProvenNonzero, NumericallyZero, NumericallyNonzero };

inline const char* to_string(ZeroVerdict v) {
  switch (v) {
    case ZeroVerdict::ProvenZero:
      return "ProvenZero";
    case ZeroVerdict::ProvenNonzero:
      return "ProvenNonzero";
    case ZeroVerdict::NumericallyZero:
      return "NumericallyZero";
    case ZeroVerdict::NumericallyNonzero:
      return "NumericallyNonzero";
  }
  return "?";
}

inline bool holds_zero(ZeroVerdict v) {
  return v == ZeroVerdict::ProvenZero || v == ZeroVerdict::NumericallyZero;
}
inline bool is_proven(ZeroVerdict v) {
  return v == ZeroVerdict::ProvenZero || v == ZeroVerdict::ProvenNonzero;
}

/// Verdict for "all of these are zero".
inline ZeroVerdict combine(std::span<const ZeroVerdict> vs) {
  ZeroVerdict r = ZeroVerdict::ProvenZero;
  for (auto v : vs) {
    if (v == ZeroVerdict::ProvenNonzero) return v;
    if (v == ZeroVerdict::NumericallyNonzero) r = v;
    if (v == ZeroVerdict::NumericallyZero && r == ZeroVerdict::ProvenZero) r = v;
  }
  return r;
}

struct SampleOptions {
  int grid = 17;  // points per axis for up to three variables
  double tol = 1e-9;
};

/// Sample points in [-2, 2]^n, shifted off rational nodes.
inline std::vector<std::vector<double>> sample_points(int n, int grid) {
  std::vector<std::vector<double>> pts;
  if (n <= 0) {
    pts.emplace_back();
    return pts;
  }
  const double shift = 0.0137 * std::sqrt(2.0);
  auto node = [&](double t) { return -2.0 + 4.0 * t + shift; };
  if (n <= 3) {
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(grid);
    for (std::size_t k = 0; k < total; ++k) {
      std::vector<double> p(n);
      std::size_t r = k;
      for (int i = 0; i < n; ++i) {
        p[i] = node((static_cast<double>(r % grid) + 0.5) / grid);
        r /= grid;
      }
      pts.push_back(std::move(p));
    }
    return pts;
  }
  static const int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                               43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
  if (n > 25) throw Error("sampling supports at most 25 variables");
  const std::size_t total = static_cast<std::size_t>(grid) * grid * grid;
  for (std::size_t k = 1; k <= total; ++k) {
    std::vector<double> p(n);
    for (int i = 0; i < n; ++i) {
      double f = 1.0, h = 0.0;
      for (std::size_t r = k; r > 0; r /= primes[i]) {
        f /= primes[i];
        h += f * static_cast<double>(r % primes[i]);
      }
      p[i] = node(h);
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

/// Exact when the Laurent expansion decides it, sampled otherwise.
inline ZeroVerdict is_zero(const Expr& e, const SampleOptions& opt = {}) {
  Fraction f = to_fraction(e);
  if (f.num.is_zero()) return ZeroVerdict::ProvenZero;
  if (!f.has_opaque()) return ZeroVerdict::ProvenNonzero;
  const int n = e.max_var();
  for (const auto& pt : sample_points(n, opt.grid)) {
    double v = eval_double(e, pt);
    if (!std::isfinite(v)) continue;
    if (std::fabs(v) > opt.tol) return ZeroVerdict::NumericallyNonzero;
  }
  return ZeroVerdict::NumericallyZero;
}

inline ZeroVerdict equivalent(const Expr& a, const Expr& b, const SampleOptions& opt = {}) {
  return is_zero(sub(a, b), opt);
}

/// Verdict for "e does not depend on any variable".
inline ZeroVerdict is_constant(const Expr& e, const SampleOptions& opt = {}) {
  std::vector<ZeroVerdict> vs;
  for (int i = 1; i <= e.max_var(); ++i) vs.push_back(is_zero(diff(e, i), opt));
  return combine(vs);
}

}  // namespace rfm
