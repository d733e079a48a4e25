#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fcq/model.hpp"
#include "fcq/planner.hpp"
#include "fcq/sercq.hpp"

namespace fcq {

class NotPseudoAcyclic : public Error {
 public:
  using Error::Error;
};

inline std::string prefix_var(const std::string& x) { return x + "_P"; }
inline std::string content_var(const std::string& x) { return x + "_C"; }
inline std::string suffix_var(const std::string& x) { return x + "_S"; }

namespace bridge_detail {

inline bool has_vars(const Formula& f) { return !is_variable_free(f); }

struct TreeNode {
  Formula f;
  enum class Kind { Concat, Bind, Leaf } kind;
  std::vector<std::size_t> children;
  VarId var = 0;
  Pattern prefix;
};

}  // namespace bridge_detail

// One formula as FC atoms; the parse tree is numbered breadth first, binding
// nodes reuse the content variable of their span variable.
inline void append_formula(FcCq& q, const Formula& f) {
  using bridge_detail::TreeNode;
  using K = FormulaNode::Kind;
  if (!bridge_detail::has_vars(f)) {
    q.constraints.push_back({kUniverse, to_regex(f)});
    return;
  }
  std::vector<TreeNode> nodes;
  auto classify = [](const Formula& g) {
    if (!bridge_detail::has_vars(g)) return TreeNode::Kind::Leaf;
    if (g->kind == K::Bind) return TreeNode::Kind::Bind;
    if (g->kind == K::Concat) return TreeNode::Kind::Concat;
    throw Error("formula binds a variable under union or star");
  };
  nodes.push_back({f, classify(f), {}, 0, {}});
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Formula g = nodes[i].f;
    if (nodes[i].kind == TreeNode::Kind::Bind) {
      nodes[i].var = q.vars.intern(content_var(g->var));
      nodes[i].children.push_back(nodes.size());
      nodes.push_back({g->left, classify(g->left), {}, 0, {}});
      continue;
    }
    nodes[i].var = q.vars.fresh("v");
    if (nodes[i].kind == TreeNode::Kind::Concat) {
      for (const Formula& c : {g->left, g->right}) {
        nodes[i].children.push_back(nodes.size());
        nodes.push_back({c, classify(c), {}, 0, {}});
      }
    }
  }
  // prefix patterns: a right child sees its left sibling
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    for (std::size_t c = 0; c < n.children.size(); ++c) {
      nodes[n.children[c]].prefix = n.prefix;
      if (c == 1) nodes[n.children[c]].prefix.push_back(Term::of(nodes[n.children[0]].var));
    }
  }
  q.equations.push_back({kUniverse, {Term::of(nodes[0].var)}});
  for (const auto& n : nodes) {
    switch (n.kind) {
      case TreeNode::Kind::Concat:
        q.equations.push_back({n.var, {Term::of(nodes[n.children[0]].var), Term::of(nodes[n.children[1]].var)}});
        break;
      case TreeNode::Kind::Bind:
        q.equations.push_back({n.var, {Term::of(nodes[n.children[0]].var)}});
        break;
      case TreeNode::Kind::Leaf:
        q.constraints.push_back({n.var, to_regex(n.f)});
        break;
    }
  }
  for (const auto& n : nodes)
    if (n.kind == TreeNode::Kind::Bind) q.equations.push_back({q.vars.intern(prefix_var(n.f->var)), n.prefix});
}

inline FcCq sercq_to_fccq(const SercqAst& p) {
  FcCq q;
  // span variables first so their FC names are never taken by node names
  for (const auto& x : p.span_vars()) {
    q.vars.intern(prefix_var(x));
    q.vars.intern(content_var(x));
  }
  for (const auto& f : p.formulas) append_formula(q, f);
  for (const auto& [x, y] : p.equalities)
    q.equations.push_back({q.vars.id(content_var(x)), {Term::of(q.vars.id(content_var(y)))}});
  for (const auto& y : p.projection) {
    q.head.push_back(q.vars.id(prefix_var(y)));
    q.head.push_back(q.vars.id(content_var(y)));
  }
  return q;
}

// FC query to SERCQ through structured normal form.  The first occurrence
// of a variable in the whole query is bound; later ones get a fresh span
// variable plus an equality.
inline SercqAst fccq_to_sercq(const FcCq& input, const Alphabet& sigma) {
  FcCq q = to_structured_normal_form(input);
  SercqAst p;
  Formula any_star = rf::star(rf::from_regex(re::any(sigma)));
  std::set<std::string> taken;
  for (VarId v = 0; v < q.vars.size(); ++v) taken.insert(q.vars.name(v));
  auto fresh = [&](const std::string& base) {
    for (int i = 2;; ++i) {
      std::string c = base + "_" + std::to_string(i);
      if (taken.insert(c).second) return c;
    }
  };
  std::set<VarId> bound;
  auto concat = [](Formula a, Formula b) { return a ? rf::cat(a, b) : b; };
  for (const auto& e : q.equations) {
    Formula f;
    for (const Term& t : e.rhs) {
      if (!t.is_var) {
        f = concat(f, rf::lit(t.symbol));
        continue;
      }
      const std::string& x = q.vars.name(t.var);
      if (bound.insert(t.var).second) {
        f = concat(f, rf::bind(x, any_star));
      } else {
        std::string y = fresh(x);
        f = concat(f, rf::bind(y, any_star));
        p.equalities.emplace_back(x, y);
      }
    }
    p.formulas.push_back(f ? f : rf::eps());
  }
  for (const auto& c : q.constraints) {
    if (c.var == kUniverse) {
      p.formulas.push_back(rf::from_regex(c.regex));
      continue;
    }
    const std::string& x = q.vars.name(c.var);
    std::string y = x;
    if (!bound.insert(c.var).second) {
      y = fresh(x);
      p.equalities.emplace_back(x, y);
    }
    p.formulas.push_back(rf::cat(rf::cat(any_star, rf::bind(y, rf::from_regex(c.regex))), any_star));
  }
  for (VarId h : q.head) p.projection.push_back(q.vars.name(h));
  return p;
}

// ---- pseudo-acyclic SERCQs ----

struct PseudoAcyclicShape {
  Regex before, inside, after;
  std::string var;
};

namespace bridge_detail {

inline void flatten_concat(const Formula& f, std::vector<Formula>& out) {
  if (f->kind == FormulaNode::Kind::Concat) {
    flatten_concat(f->left, out);
    flatten_concat(f->right, out);
  } else {
    out.push_back(f);
  }
}

inline Regex concat_all(const std::vector<Formula>& items, std::size_t from, std::size_t to) {
  Regex r;
  for (std::size_t i = from; i < to; ++i) r = r ? re::cat(r, to_regex(items[i])) : to_regex(items[i]);
  return r ? r : re::eps();
}

}  // namespace bridge_detail

inline std::optional<PseudoAcyclicShape> pseudo_acyclic_shape(const Formula& f) {
  std::vector<Formula> items;
  bridge_detail::flatten_concat(f, items);
  std::optional<std::size_t> at;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (is_variable_free(items[i])) continue;
    if (at || items[i]->kind != FormulaNode::Kind::Bind || !is_variable_free(items[i]->left)) return std::nullopt;
    at = i;
  }
  if (!at) return std::nullopt;
  return PseudoAcyclicShape{bridge_detail::concat_all(items, 0, *at), to_regex(items[*at]->left),
                            bridge_detail::concat_all(items, *at + 1, items.size()), items[*at]->var};
}

inline bool is_pseudo_acyclic(const SercqAst& p) {
  for (const auto& f : p.formulas)
    if (!pseudo_acyclic_shape(f)) return false;
  return true;
}

inline FcCq pseudo_acyclic_to_acyclic_fccq(const SercqAst& p) {
  std::vector<PseudoAcyclicShape> shapes;
  for (const auto& f : p.formulas) {
    auto s = pseudo_acyclic_shape(f);
    if (!s) throw NotPseudoAcyclic("formula is not of the form b1.x{b2}.b3 with variable-free b's");
    shapes.push_back(*s);
  }
  FcCq q;
  auto vars = p.span_vars();
  for (const auto& x : vars) {
    q.vars.intern(prefix_var(x));
    q.vars.intern(content_var(x));
    q.vars.intern(suffix_var(x));
  }
  for (const auto& x : vars) {
    VarId z = q.vars.fresh("z");
    q.equations.push_back({kUniverse, {Term::of(q.vars.id(prefix_var(x))), Term::of(z)}});
    q.equations.push_back({z, {Term::of(q.vars.id(content_var(x))), Term::of(q.vars.id(suffix_var(x)))}});
  }
  for (const auto& s : shapes) {
    q.constraints.push_back({q.vars.id(prefix_var(s.var)), s.before});
    q.constraints.push_back({q.vars.id(content_var(s.var)), s.inside});
    q.constraints.push_back({q.vars.id(suffix_var(s.var)), s.after});
  }
  // spanning forest of the equality graph, edges taken in input order
  std::map<std::string, std::string> parent;
  std::function<std::string(const std::string&)> find = [&](const std::string& v) -> std::string {
    auto it = parent.find(v);
    if (it == parent.end() || it->second == v) return v;
    return it->second = find(it->second);
  };
  for (const auto& [x, y] : p.equalities) {
    auto a = find(x), b = find(y);
    if (a == b) continue;
    parent[a] = b;
    q.equations.push_back({q.vars.id(content_var(x)), {Term::of(q.vars.id(content_var(y)))}});
  }
  for (const auto& y : p.projection) {
    q.head.push_back(q.vars.id(prefix_var(y)));
    q.head.push_back(q.vars.id(content_var(y)));
  }
  return q;
}

// Span of x from the words bound to x_P and x_C (1-based, half-open).
inline std::pair<std::size_t, std::size_t> span_of(std::string_view prefix, std::string_view content) {
  return {prefix.size() + 1, prefix.size() + content.size() + 1};
}

}  // namespace fcq
