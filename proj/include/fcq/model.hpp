#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fcq {

using VarId = std::uint32_t;

// Id 0 is always the universe variable; it is bound to the whole input word.
inline constexpr VarId kUniverse = 0;
inline constexpr std::string_view kUniverseName = "u";

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnboundVariable : public Error {
 public:
  using Error::Error;
};

// Characters the textual syntax needs for itself.
inline bool is_reserved_char(char c) {
  static constexpr std::string_view meta = "'.,()|*+?#/{}=:\\\"";
  auto uc = static_cast<unsigned char>(c);
  return uc <= 0x20 || uc >= 0x7f || meta.find(c) != std::string_view::npos;
}

class Alphabet {
 public:
  Alphabet() : Alphabet(std::string_view("abcdefghijklmnopqrstuvwxyz")) {}

  explicit Alphabet(std::string_view symbols) {
    for (char c : symbols) {
      if (is_reserved_char(c))
        throw Error("alphabet symbol '" + std::string(1, c) + "' is reserved by the query syntax");
      symbols_.push_back(c);
    }
    std::sort(symbols_.begin(), symbols_.end());
    symbols_.erase(std::unique(symbols_.begin(), symbols_.end()), symbols_.end());
    if (symbols_.empty()) throw Error("alphabet must not be empty");
  }

  bool contains(char c) const { return std::binary_search(symbols_.begin(), symbols_.end(), c); }
  const std::string& symbols() const { return symbols_; }
  std::size_t size() const { return symbols_.size(); }

  bool operator==(const Alphabet&) const = default;

 private:
  std::string symbols_;
};

// Interned variable names.  Each query owns one table.
class VarTable {
 public:
  VarTable() { intern(std::string(kUniverseName)); }

  VarId intern(const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    auto id = static_cast<VarId>(names_.size());
    names_.push_back(name);
    ids_.emplace(name, id);
    return id;
  }

  // Smallest unused name of the form prefix<N>, N >= 1.
  VarId fresh(const std::string& prefix = "z") {
    for (std::size_t n = next_[prefix] + 1;; ++n) {
      std::string cand = prefix + std::to_string(n);
      if (!ids_.count(cand)) {
        next_[prefix] = n;
        return intern(cand);
      }
    }
  }

  bool contains(const std::string& name) const { return ids_.count(name) != 0; }
  VarId id(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) throw Error("unknown variable " + name);
    return it->second;
  }
  const std::string& name(VarId v) const { return names_.at(v); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, VarId> ids_;
  std::map<std::string, std::size_t> next_;
};

// One letter of a pattern: a terminal symbol or a variable.
struct Term {
  bool is_var = false;
  VarId var = 0;
  char symbol = 0;

  static Term sym(char c) { return Term{false, 0, c}; }
  static Term of(VarId v) { return Term{true, v, 0}; }

  bool operator==(const Term&) const = default;
  auto operator<=>(const Term&) const = default;
};

using Pattern = std::vector<Term>;

inline Pattern pattern_of(std::initializer_list<VarId> vs) {
  Pattern p;
  for (VarId v : vs) p.push_back(Term::of(v));
  return p;
}

inline std::set<VarId> vars_of(const Pattern& p) {
  std::set<VarId> out;
  for (const Term& t : p)
    if (t.is_var) out.insert(t.var);
  return out;
}

inline bool is_terminal_free(const Pattern& p) {
  return std::all_of(p.begin(), p.end(), [](const Term& t) { return t.is_var; });
}

inline std::string apply_substitution(const Pattern& p, const std::map<VarId, std::string>& sigma) {
  std::string out;
  for (const Term& t : p) {
    if (!t.is_var) {
      out.push_back(t.symbol);
      continue;
    }
    auto it = sigma.find(t.var);
    if (it == sigma.end()) throw UnboundVariable("variable #" + std::to_string(t.var) + " has no value");
    out += it->second;
  }
  return out;
}

struct WordEquation {
  VarId lhs = kUniverse;
  Pattern rhs;
  bool operator==(const WordEquation&) const = default;
};

// Regular expressions.  Nodes are immutable and shared.
struct RegexNode;
using Regex = std::shared_ptr<const RegexNode>;

struct RegexNode {
  enum class Kind { Empty, Epsilon, Literal, Union, Concat, Star };
  Kind kind;
  char symbol = 0;
  Regex left, right;  // Star uses left only
};

namespace re {
inline Regex empty() { return std::make_shared<RegexNode>(RegexNode{RegexNode::Kind::Empty}); }
inline Regex eps() { return std::make_shared<RegexNode>(RegexNode{RegexNode::Kind::Epsilon}); }
inline Regex lit(char c) { return std::make_shared<RegexNode>(RegexNode{RegexNode::Kind::Literal, c}); }
inline Regex alt(Regex a, Regex b) {
  return std::make_shared<RegexNode>(RegexNode{RegexNode::Kind::Union, 0, std::move(a), std::move(b)});
}
inline Regex cat(Regex a, Regex b) {
  return std::make_shared<RegexNode>(RegexNode{RegexNode::Kind::Concat, 0, std::move(a), std::move(b)});
}
inline Regex star(Regex a) {
  return std::make_shared<RegexNode>(RegexNode{RegexNode::Kind::Star, 0, std::move(a), nullptr});
}
inline Regex word(std::string_view w) {
  if (w.empty()) return eps();
  Regex r = lit(w[0]);
  for (std::size_t i = 1; i < w.size(); ++i) r = cat(r, lit(w[i]));
  return r;
}
// Any single symbol of the alphabet.
inline Regex any(const Alphabet& a) {
  Regex r;
  for (char c : a.symbols()) r = r ? alt(r, lit(c)) : lit(c);
  return r;
}
inline Regex plus(Regex a) { return cat(a, star(a)); }
}  // namespace re

inline bool regex_equal(const Regex& a, const Regex& b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  switch (a->kind) {
    case RegexNode::Kind::Empty:
    case RegexNode::Kind::Epsilon: return true;
    case RegexNode::Kind::Literal: return a->symbol == b->symbol;
    case RegexNode::Kind::Star: return regex_equal(a->left, b->left);
    default: return regex_equal(a->left, b->left) && regex_equal(a->right, b->right);
  }
}

struct RegularConstraint {
  VarId var = kUniverse;
  Regex regex;
  bool operator==(const RegularConstraint& o) const { return var == o.var && regex_equal(regex, o.regex); }
};

struct FcCq {
  VarTable vars;
  std::vector<VarId> head;
  std::vector<WordEquation> equations;
  std::vector<RegularConstraint> constraints;

  std::set<VarId> all_vars() const {
    std::set<VarId> out;
    for (const auto& e : equations) {
      out.insert(e.lhs);
      for (const Term& t : e.rhs)
        if (t.is_var) out.insert(t.var);
    }
    for (const auto& c : constraints) out.insert(c.var);
    return out;
  }
};

// Full parenthesisation of a terminal-free pattern.  A leaf has no children.
struct Bracketing {
  VarId leaf = 0;
  std::vector<Bracketing> children;

  static Bracketing var(VarId v) { return Bracketing{v, {}}; }
  static Bracketing node(std::vector<Bracketing> ch) { return Bracketing{0, std::move(ch)}; }

  bool is_leaf() const { return children.empty(); }
  bool operator==(const Bracketing&) const = default;
  // gcc 11 cannot default <=> through the recursive vector
  bool operator<(const Bracketing& o) const {
    if (leaf != o.leaf) return leaf < o.leaf;
    return std::lexicographical_compare(children.begin(), children.end(), o.children.begin(), o.children.end());
  }

  std::vector<VarId> flatten() const {
    std::vector<VarId> out;
    append_to(out);
    return out;
  }

 private:
  void append_to(std::vector<VarId>& out) const {
    if (is_leaf()) {
      out.push_back(leaf);
      return;
    }
    for (const auto& c : children) c.append_to(out);
  }
};

// Equation whose right-hand side is a short list of variables (length 1..k).
struct VarEquation {
  VarId lhs = kUniverse;
  std::vector<VarId> rhs;
  bool operator==(const VarEquation&) const = default;
  auto operator<=>(const VarEquation&) const = default;
};

// Decomposed query: every equation has a variables-only rhs of bounded length.
struct TwoFcCq {
  VarTable vars;
  std::vector<VarId> head;
  std::vector<VarEquation> equations;
  std::vector<RegularConstraint> constraints;
  std::set<VarId> introduced;
};

struct JoinTree {
  std::vector<std::set<VarId>> node_vars;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  std::size_t size() const { return node_vars.size(); }
  std::vector<std::vector<std::size_t>> adjacency() const {
    std::vector<std::vector<std::size_t>> adj(node_vars.size());
    for (auto [a, b] : edges) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    return adj;
  }
};

inline std::string format_pattern(const Pattern& p, const VarTable& vars) {
  if (p.empty()) return "''";
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].is_var) {
      if (!out.empty()) out += '.';
      out += vars.name(p[i].var);
      continue;
    }
    if (!out.empty()) out += '.';
    out += '\'';
    while (i < p.size() && !p[i].is_var) out += p[i++].symbol;
    out += '\'';
    --i;
  }
  return out;
}

inline std::string format_bracketing(const Bracketing& b, const VarTable& vars) {
  if (b.is_leaf()) return vars.name(b.leaf);
  std::string out = "(";
  for (std::size_t i = 0; i < b.children.size(); ++i) {
    if (i) out += '.';
    out += format_bracketing(b.children[i], vars);
  }
  return out + ")";
}

inline std::string format_equation(const VarEquation& e, const VarTable& vars) {
  std::string out = vars.name(e.lhs) + " = ";
  for (std::size_t i = 0; i < e.rhs.size(); ++i) {
    if (i) out += '.';
    out += vars.name(e.rhs[i]);
  }
  return out;
}

}  // namespace fcq
