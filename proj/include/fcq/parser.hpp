#pragma once

#include <cctype>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "fcq/model.hpp"
#include "fcq/sercq.hpp"

namespace fcq {

struct SourceSpan {
  std::size_t start = 0, end = 0;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, SourceSpan span)
      : Error(msg + " at " + std::to_string(span.start) + ".." + std::to_string(span.end)), span_(span) {}
  SourceSpan span() const { return span_; }

 private:
  SourceSpan span_;
};

class NotSynchronized : public ParseError {
 public:
  using ParseError::ParseError;
};

class NotFunctional : public ParseError {
 public:
  using ParseError::ParseError;
};

namespace detail {

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Cursor {
 public:
  Cursor(std::string_view text, const Alphabet& alpha) : s_(text), alpha_(alpha) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= s_.size();
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }
  char peek_raw(std::size_t off = 0) const { return pos_ + off < s_.size() ? s_[pos_ + off] : '\0'; }
  bool accept(std::string_view tok) {
    skip_ws();
    if (s_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }
  void expect(std::string_view tok) {
    if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
  }
  // keyword followed by a non-identifier character
  bool at_keyword(std::string_view kw) {
    skip_ws();
    return s_.substr(pos_, kw.size()) == kw && !ident_char(peek_raw(kw.size()));
  }
  std::string identifier() {
    skip_ws();
    std::size_t b = pos_;
    if (pos_ >= s_.size() || !ident_start(s_[pos_])) fail("expected identifier");
    while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
    return std::string(s_.substr(b, pos_ - b));
  }
  // identifier at the cursor followed by '{'?  Does not consume.
  bool at_binding() {
    skip_ws();
    std::size_t p = pos_;
    if (p >= s_.size() || !ident_start(s_[p])) return false;
    while (p < s_.size() && ident_char(s_[p])) ++p;
    while (p < s_.size() && std::isspace(static_cast<unsigned char>(s_[p]))) ++p;
    return p < s_.size() && s_[p] == '{';
  }
  // quoted literal, cursor on the opening quote
  std::string quoted() {
    skip_ws();
    std::size_t b = pos_;
    expect("'");
    std::size_t close = s_.find('\'', pos_);
    if (close == std::string_view::npos) fail_at("unterminated literal", b, s_.size());
    std::string lit(s_.substr(pos_, close - pos_));
    for (std::size_t i = 0; i < lit.size(); ++i)
      if (!alpha_.contains(lit[i]))
        fail_at("symbol '" + std::string(1, lit[i]) + "' is not in the alphabet", pos_ + i, pos_ + i + 1);
    pos_ = close + 1;
    return lit;
  }
  char symbol() {
    skip_ws();
    if (pos_ >= s_.size()) fail("expected symbol");
    char c = s_[pos_];
    if (!alpha_.contains(c)) fail_at("symbol '" + std::string(1, c) + "' is not in the alphabet", pos_, pos_ + 1);
    ++pos_;
    return c;
  }

  std::size_t pos() const { return pos_; }
  const Alphabet& alphabet() const { return alpha_; }
  [[noreturn]] void fail(const std::string& msg) {
    std::size_t b = std::min(pos_, s_.size());
    fail_at(msg, b, std::min(b + 1, s_.size()));
  }
  [[noreturn]] static void fail_at(const std::string& msg, std::size_t b, std::size_t e) {
    throw ParseError(msg, SourceSpan{b, std::max(b, e)});
  }

 private:
  std::string_view s_;
  const Alphabet& alpha_;
  std::size_t pos_ = 0;
};

// Shared regex grammar.  With bindings enabled it produces formulas; the
// plain-regex entry point converts afterwards.
class FormulaParser {
 public:
  FormulaParser(Cursor& c, bool bindings) : c_(c), bindings_(bindings) {}

  Formula parse() { return alternation(); }

 private:
  bool at_stop() {
    char p = c_.peek();
    return p == '\0' || p == '|' || p == ')' || p == '/' || p == '}' || (bindings_ && c_.at_keyword("join"));
  }

  Formula alternation() {
    Formula f = concatenation();
    while (c_.accept("|")) f = rf::alt(f, concatenation());
    return f;
  }

  Formula concatenation() {
    if (at_stop()) c_.fail("expected regular expression");
    Formula f = postfix();
    for (;;) {
      if (c_.peek() == '.') {
        c_.accept(".");
        f = rf::cat(f, postfix());
        continue;
      }
      if (at_stop()) break;
      f = rf::cat(f, postfix());
    }
    return f;
  }

  Formula postfix() {
    Formula f = atom();
    for (;;) {
      if (c_.accept("*")) {
        f = rf::star(f);
      } else if (c_.accept("+")) {
        f = rf::cat(f, rf::star(f));
      } else if (c_.accept("?")) {
        f = rf::alt(f, rf::eps());
      } else {
        break;
      }
    }
    return f;
  }

  Formula atom() {
    char p = c_.peek();
    if (p == '(') {
      c_.accept("(");
      Formula f = alternation();
      c_.expect(")");
      return f;
    }
    if (p == '#') {
      c_.accept("#");
      return rf::empty();
    }
    if (p == '\'') {
      std::string lit = c_.quoted();
      if (lit.empty()) return rf::eps();
      Formula f = rf::lit(lit[0]);
      for (std::size_t i = 1; i < lit.size(); ++i) f = rf::cat(f, rf::lit(lit[i]));
      return f;
    }
    if (bindings_ && c_.at_binding()) {
      std::string x = c_.identifier();
      c_.expect("{");
      Formula inner = alternation();
      c_.expect("}");
      return rf::bind(x, inner);
    }
    if (p == 'S' && !c_.alphabet().contains('S')) {
      c_.accept("S");
      Formula any;
      for (char s : c_.alphabet().symbols()) any = any ? rf::alt(any, rf::lit(s)) : rf::lit(s);
      return any;
    }
    return rf::lit(c_.symbol());
  }

  Cursor& c_;
  bool bindings_;
};

inline Pattern parse_concat(Cursor& c, VarTable& vars) {
  Pattern out;
  for (;;) {
    if (c.peek() == '\'') {
      for (char s : c.quoted()) out.push_back(Term::sym(s));
    } else {
      out.push_back(Term::of(vars.intern(c.identifier())));
    }
    if (!c.accept(".")) break;
  }
  return out;
}

inline FcCq parse_one_query(Cursor& c) {
  FcCq q;
  std::size_t head_start = c.pos();
  c.expect("ans");
  c.expect("(");
  std::vector<std::pair<std::string, SourceSpan>> head_names;
  if (!c.accept(")")) {
    do {
      c.skip_ws();
      std::size_t b = c.pos();
      std::string n = c.identifier();
      head_names.push_back({n, SourceSpan{b, c.pos()}});
    } while (c.accept(","));
    c.expect(")");
  }
  c.expect(":-");
  do {
    c.skip_ws();
    std::size_t b = c.pos();
    std::string lhs = c.identifier();
    VarId x = q.vars.intern(lhs);
    if (c.accept("=")) {
      q.equations.push_back(WordEquation{x, parse_concat(c, q.vars)});
    } else if (c.at_keyword("in")) {
      c.accept("in");
      c.expect("/");
      FormulaParser fp(c, false);
      Formula f = fp.parse();
      c.expect("/");
      q.constraints.push_back(RegularConstraint{x, to_regex(f)});
    } else {
      Cursor::fail_at("expected '=' or 'in' after variable", b, c.pos());
    }
  } while (c.accept(","));

  auto used = q.all_vars();
  for (auto& [n, span] : head_names) {
    if (n == kUniverseName) Cursor::fail_at("the universe variable cannot be a head variable", span.start, span.end);
    if (!q.vars.contains(n) || !used.count(q.vars.id(n)))
      Cursor::fail_at("head variable " + n + " does not occur in the body", span.start, span.end);
    VarId v = q.vars.id(n);
    if (std::find(q.head.begin(), q.head.end(), v) != q.head.end())
      Cursor::fail_at("duplicate head variable " + n, span.start, span.end);
    q.head.push_back(v);
  }
  (void)head_start;
  return q;
}

}  // namespace detail

inline FcCq parse_query(std::string_view text, const Alphabet& alphabet = Alphabet()) {
  detail::Cursor c(text, alphabet);
  FcCq q = detail::parse_one_query(c);
  if (!c.at_end()) c.fail("unexpected trailing input");
  return q;
}

// Several queries back to back, read as their union.
inline std::vector<FcCq> parse_queries(std::string_view text, const Alphabet& alphabet = Alphabet()) {
  detail::Cursor c(text, alphabet);
  std::vector<FcCq> out;
  do {
    out.push_back(detail::parse_one_query(c));
    c.accept(";");
  } while (!c.at_end());
  return out;
}

inline Regex parse_regex(std::string_view text, const Alphabet& alphabet = Alphabet()) {
  detail::Cursor c(text, alphabet);
  detail::FormulaParser fp(c, false);
  Formula f = fp.parse();
  if (!c.at_end()) c.fail("unexpected trailing input");
  return to_regex(f);
}

// Terminal-and-variable pattern in the loose command-line form: variables are
// letters followed by digits ("x1x2x1"), terminals are quoted, '.' and spaces
// separate.
inline Pattern parse_pattern(std::string_view text, VarTable& vars, const Alphabet& alphabet = Alphabet()) {
  Pattern out;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == '.') {
      ++i;
    } else if (c == '\'') {
      std::size_t close = text.find('\'', i + 1);
      if (close == std::string_view::npos) detail::Cursor::fail_at("unterminated literal", i, text.size());
      for (std::size_t k = i + 1; k < close; ++k) {
        if (!alphabet.contains(text[k]))
          detail::Cursor::fail_at("symbol not in the alphabet", k, k + 1);
        out.push_back(Term::sym(text[k]));
      }
      i = close + 1;
    } else if (detail::ident_start(c)) {
      std::size_t b = i;
      while (i < text.size() && (std::isalpha(static_cast<unsigned char>(text[i])) || text[i] == '_')) ++i;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      out.push_back(Term::of(vars.intern(std::string(text.substr(b, i - b)))));
    } else {
      detail::Cursor::fail_at("unexpected character in pattern", i, i + 1);
    }
  }
  if (out.empty()) detail::Cursor::fail_at("empty pattern", 0, text.size());
  return out;
}

// "((x1.x2).(x3.x1))"; a node needs at least two children.
inline Bracketing parse_bracketing(std::string_view text, VarTable& vars) {
  std::size_t i = 0;
  auto skip = [&] {
    while (i < text.size() && (std::isspace(static_cast<unsigned char>(text[i])) || text[i] == '.')) ++i;
  };
  std::function<Bracketing()> item = [&]() -> Bracketing {
    skip();
    if (i >= text.size()) detail::Cursor::fail_at("unexpected end of bracketing", i, i);
    if (text[i] == '(') {
      std::size_t open = i++;
      std::vector<Bracketing> ch;
      for (;;) {
        skip();
        if (i >= text.size()) detail::Cursor::fail_at("unbalanced parenthesis", open, open + 1);
        if (text[i] == ')') break;
        ch.push_back(item());
      }
      ++i;
      if (ch.size() == 1) return ch[0];
      if (ch.empty()) detail::Cursor::fail_at("empty bracket", open, i);
      return Bracketing::node(std::move(ch));
    }
    if (!detail::ident_start(text[i])) detail::Cursor::fail_at("unexpected character in bracketing", i, i + 1);
    std::size_t b = i;
    while (i < text.size() && (std::isalpha(static_cast<unsigned char>(text[i])) || text[i] == '_')) ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    return Bracketing::var(vars.intern(std::string(text.substr(b, i - b))));
  };
  Bracketing out = item();
  skip();
  if (i != text.size()) detail::Cursor::fail_at("trailing input after bracketing", i, text.size());
  return out;
}

namespace detail {

inline void check_formula(const Formula& f, bool under_union, bool under_star, std::set<std::string>& bound,
                          std::size_t at) {
  if (!f) return;
  using K = FormulaNode::Kind;
  if (f->kind == K::Bind) {
    if (under_union) throw NotSynchronized("variable " + f->var + " is bound under a union", {at, at + 1});
    if (under_star) throw NotFunctional("variable " + f->var + " is bound under a star", {at, at + 1});
    if (!bound.insert(f->var).second)
      throw NotFunctional("variable " + f->var + " is bound twice in one formula", {at, at + 1});
  }
  bool u = under_union, s = under_star;
  if (f->kind == K::Union && !is_variable_free(f)) u = true;
  if (f->kind == K::Star && !is_variable_free(f)) s = true;
  check_formula(f->left, u, s, bound, at);
  check_formula(f->right, u, s, bound, at);
}

}  // namespace detail

inline SercqAst parse_sercq(std::string_view text, const Alphabet& alphabet = Alphabet()) {
  detail::Cursor c(text, alphabet);
  SercqAst p;
  c.expect("pi");
  c.expect("{");
  if (!c.accept("}")) {
    do p.projection.push_back(c.identifier());
    while (c.accept(","));
    c.expect("}");
  }
  while (c.at_keyword("eq")) {
    c.accept("eq");
    c.expect("{");
    std::string a = c.identifier();
    c.expect(",");
    std::string b = c.identifier();
    c.expect("}");
    p.equalities.emplace_back(a, b);
  }
  c.expect("(");
  do {
    c.skip_ws();
    std::size_t b = c.pos();
    detail::FormulaParser fp(c, true);
    Formula f = fp.parse();
    std::set<std::string> bound;
    detail::check_formula(f, false, false, bound, b);
    p.formulas.push_back(f);
  } while (c.accept("join"));
  c.expect(")");
  if (!c.at_end()) c.fail("unexpected trailing input");

  auto vars = p.span_vars();
  auto known = [&](const std::string& v) { return std::find(vars.begin(), vars.end(), v) != vars.end(); };
  for (const auto& y : p.projection)
    if (!known(y)) throw ParseError("projected variable " + y + " is not bound by any formula", {0, text.size()});
  for (const auto& [a, b] : p.equalities)
    if (!known(a) || !known(b)) throw ParseError("equality over an unbound variable", {0, text.size()});
  return p;
}

// ---- printing ----

namespace detail {

inline std::string print_formula(const Formula& f, int ctx) {
  // ctx: 0 = top/union operand, 1 = concat operand, 2 = star operand
  using K = FormulaNode::Kind;
  switch (f->kind) {
    case K::Empty: return "#";
    case K::Epsilon: return "''";
    case K::Literal: return "'" + std::string(1, f->symbol) + "'";
    case K::Bind: return f->var + "{" + print_formula(f->left, 0) + "}";
    case K::Star: return print_formula(f->left, 2) + "*";
    case K::Concat: {
      // right operands that are themselves concatenations need brackets to
      // keep the tree shape on re-parse
      std::string r = print_formula(f->right, 1);
      if (f->right->kind == K::Concat) r = "(" + r + ")";
      std::string s = print_formula(f->left, 1) + "." + r;
      return ctx >= 2 ? "(" + s + ")" : s;
    }
    case K::Union: {
      std::string r = print_formula(f->right, 0);
      if (f->right->kind == K::Union) r = "(" + r + ")";
      std::string s = print_formula(f->left, 0) + "|" + r;
      return ctx >= 1 ? "(" + s + ")" : s;
    }
  }
  return "#";
}

}  // namespace detail

inline std::string print_regex(const Regex& r) { return detail::print_formula(rf::from_regex(r), 0); }
inline std::string print_formula(const Formula& f) { return detail::print_formula(f, 0); }

inline std::string print_query(const FcCq& q) {
  std::string out = "ans(";
  for (std::size_t i = 0; i < q.head.size(); ++i) {
    if (i) out += ",";
    out += q.vars.name(q.head[i]);
  }
  out += ") :- ";
  bool first = true;
  for (const auto& e : q.equations) {
    if (!first) out += ", ";
    first = false;
    out += q.vars.name(e.lhs) + " = " + format_pattern(e.rhs, q.vars);
  }
  for (const auto& c : q.constraints) {
    if (!first) out += ", ";
    first = false;
    out += q.vars.name(c.var) + " in /" + print_regex(c.regex) + "/";
  }
  return out;
}

inline std::string print_sercq(const SercqAst& p) {
  std::string out = "pi{";
  for (std::size_t i = 0; i < p.projection.size(); ++i) out += (i ? "," : "") + p.projection[i];
  out += "}";
  for (const auto& [a, b] : p.equalities) out += " eq{" + a + "," + b + "}";
  out += " (";
  for (std::size_t i = 0; i < p.formulas.size(); ++i) {
    if (i) out += " join";
    out += " " + print_formula(p.formulas[i]);
  }
  return out + " )";
}

// Structural equality up to nothing: same names, same order.
inline bool same_query(const FcCq& a, const FcCq& b) {
  auto names = [](const FcCq& q, VarId v) { return q.vars.name(v); };
  if (a.head.size() != b.head.size() || a.equations.size() != b.equations.size() ||
      a.constraints.size() != b.constraints.size())
    return false;
  for (std::size_t i = 0; i < a.head.size(); ++i)
    if (names(a, a.head[i]) != names(b, b.head[i])) return false;
  for (std::size_t i = 0; i < a.equations.size(); ++i) {
    const auto &x = a.equations[i], &y = b.equations[i];
    if (names(a, x.lhs) != names(b, y.lhs) || x.rhs.size() != y.rhs.size()) return false;
    for (std::size_t k = 0; k < x.rhs.size(); ++k) {
      if (x.rhs[k].is_var != y.rhs[k].is_var) return false;
      if (x.rhs[k].is_var ? names(a, x.rhs[k].var) != names(b, y.rhs[k].var) : x.rhs[k].symbol != y.rhs[k].symbol)
        return false;
    }
  }
  for (std::size_t i = 0; i < a.constraints.size(); ++i)
    if (names(a, a.constraints[i].var) != names(b, b.constraints[i].var) ||
        !regex_equal(a.constraints[i].regex, b.constraints[i].regex))
      return false;
  return true;
}

}  // namespace fcq
