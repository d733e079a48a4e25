#pragma once

#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fcq/model.hpp"

namespace fcq {

// Regex formula: a regular expression that may also bind span variables.
struct FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
  enum class Kind { Empty, Epsilon, Literal, Union, Concat, Star, Bind };
  Kind kind;
  char symbol = 0;
  std::string var;  // Bind only
  Formula left, right;
};

namespace rf {
inline Formula make(FormulaNode n) { return std::make_shared<FormulaNode>(std::move(n)); }
inline Formula empty() { return make({FormulaNode::Kind::Empty}); }
inline Formula eps() { return make({FormulaNode::Kind::Epsilon}); }
inline Formula lit(char c) { return make({FormulaNode::Kind::Literal, c}); }
inline Formula alt(Formula a, Formula b) { return make({FormulaNode::Kind::Union, 0, {}, std::move(a), std::move(b)}); }
inline Formula cat(Formula a, Formula b) { return make({FormulaNode::Kind::Concat, 0, {}, std::move(a), std::move(b)}); }
inline Formula star(Formula a) { return make({FormulaNode::Kind::Star, 0, {}, std::move(a), nullptr}); }
inline Formula bind(std::string x, Formula a) { return make({FormulaNode::Kind::Bind, 0, std::move(x), std::move(a), nullptr}); }

inline Formula from_regex(const Regex& r) {
  using K = RegexNode::Kind;
  switch (r->kind) {
    case K::Empty: return empty();
    case K::Epsilon: return eps();
    case K::Literal: return lit(r->symbol);
    case K::Union: return alt(from_regex(r->left), from_regex(r->right));
    case K::Concat: return cat(from_regex(r->left), from_regex(r->right));
    case K::Star: return star(from_regex(r->left));
  }
  return empty();
}
}  // namespace rf

// Variables in order of first appearance (left to right).
inline void formula_vars(const Formula& f, std::vector<std::string>& out) {
  if (!f) return;
  if (f->kind == FormulaNode::Kind::Bind &&
      std::find(out.begin(), out.end(), f->var) == out.end())
    out.push_back(f->var);
  formula_vars(f->left, out);
  formula_vars(f->right, out);
}

inline std::vector<std::string> formula_vars(const Formula& f) {
  std::vector<std::string> out;
  formula_vars(f, out);
  return out;
}

inline bool is_variable_free(const Formula& f) { return formula_vars(f).empty(); }

// Only valid for variable-free formulas.
inline Regex to_regex(const Formula& f) {
  using K = FormulaNode::Kind;
  switch (f->kind) {
    case K::Empty: return re::empty();
    case K::Epsilon: return re::eps();
    case K::Literal: return re::lit(f->symbol);
    case K::Union: return re::alt(to_regex(f->left), to_regex(f->right));
    case K::Concat: return re::cat(to_regex(f->left), to_regex(f->right));
    case K::Star: return re::star(to_regex(f->left));
    case K::Bind: throw Error("binding inside a variable-free subexpression");
  }
  return re::empty();
}

struct SercqAst {
  std::vector<std::string> projection;
  std::vector<std::pair<std::string, std::string>> equalities;
  std::vector<Formula> formulas;

  std::vector<std::string> span_vars() const {
    std::vector<std::string> out;
    for (const auto& f : formulas) formula_vars(f, out);
    return out;
  }
};

}  // namespace fcq
