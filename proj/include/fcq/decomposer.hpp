#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fcq/gyo.hpp"
#include "fcq/model.hpp"

namespace fcq {

class NotTerminalFree : public Error {
 public:
  using Error::Error;
};

using PairSet = std::set<std::pair<VarId, VarId>>;  // each pair stored (min, max)

inline std::pair<VarId, VarId> make_pair_key(VarId a, VarId b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); }

inline std::vector<VarId> terminal_free_vars(const Pattern& p) {
  std::vector<VarId> out;
  for (const Term& t : p) {
    if (!t.is_var) throw NotTerminalFree("pattern contains terminal symbols");
    out.push_back(t.var);
  }
  return out;
}

// Replace each maximal terminal block by a fresh variable.
struct TerminalFreeCore {
  std::vector<VarId> core;
  std::map<VarId, std::string> blocks;
};

inline TerminalFreeCore terminal_free_core(const Pattern& p, VarTable& vars) {
  TerminalFreeCore out;
  for (std::size_t i = 0; i < p.size();) {
    if (p[i].is_var) {
      out.core.push_back(p[i++].var);
      continue;
    }
    std::string block;
    while (i < p.size() && !p[i].is_var) block += p[i++].symbol;
    VarId z = vars.fresh("z");
    out.core.push_back(z);
    out.blocks[z] = block;
  }
  return out;
}

// ---- decomposition of a fixed bracketing ----

struct Decomposition {
  Bracketing bracketing;
  std::vector<VarEquation> equations;  // bottom-up, root equation last
  std::set<VarId> introduced;
};

// Names every distinct inner sub-bracketing; equal sub-bracketings share a
// name.  A lone leaf gives the copy equation root = x.
inline Decomposition decompose_into(const Bracketing& b, VarId root, VarTable& vars) {
  Decomposition d;
  d.bracketing = b;
  if (b.is_leaf()) {
    d.equations.push_back(VarEquation{root, {b.leaf}});
    return d;
  }
  std::map<Bracketing, VarId> names;
  std::function<VarId(const Bracketing&, bool)> name = [&](const Bracketing& t, bool is_root) -> VarId {
    if (t.is_leaf()) return t.leaf;
    if (!is_root)
      if (auto it = names.find(t); it != names.end()) return it->second;
    VarEquation eq;
    for (const auto& c : t.children) eq.rhs.push_back(name(c, false));
    if (is_root) {
      eq.lhs = root;
    } else {
      eq.lhs = vars.fresh("z");
      d.introduced.insert(eq.lhs);
      names.emplace(t, eq.lhs);
    }
    d.equations.push_back(eq);
    return eq.lhs;
  };
  name(b, true);
  return d;
}

inline TwoFcCq decompose_bracketing(const Bracketing& b, VarId root, const VarTable& vars) {
  TwoFcCq q;
  q.vars = vars;
  auto d = decompose_into(b, root, q.vars);
  q.equations = d.equations;
  q.introduced = d.introduced;
  return q;
}

inline std::vector<std::set<VarId>> equation_var_sets(const std::vector<VarEquation>& eqs) {
  std::vector<std::set<VarId>> out;
  for (const auto& e : eqs) {
    std::set<VarId> s(e.rhs.begin(), e.rhs.end());
    s.insert(e.lhs);
    out.push_back(s);
  }
  return out;
}

// ---- concatenation trees ----

struct ConcatenationTree {
  struct Node {
    VarId label = 0;
    std::size_t parent = 0;  // root points to itself
    std::size_t depth = 0;
    std::vector<std::size_t> children;
  };
  std::vector<Node> nodes;  // node 0 is the root

  bool is_x_parent(std::size_t v, VarId x) const {
    for (auto c : nodes[v].children)
      if (nodes[c].label == x) return true;
    return false;
  }

  // x-parents induce a connected subtree iff exactly one of them has no
  // x-parent above it.
  bool x_localized(VarId x) const {
    std::size_t tops = 0, count = 0;
    for (std::size_t v = 0; v < nodes.size(); ++v) {
      if (!is_x_parent(v, x)) continue;
      ++count;
      if (v == 0 || !is_x_parent(nodes[v].parent, x)) ++tops;
    }
    return count == 0 || tops == 1;
  }

  bool localized() const {
    std::set<VarId> labels;
    for (const auto& n : nodes) labels.insert(n.label);
    for (VarId x : labels)
      if (!x_localized(x)) return false;
    return true;
  }
};

// Unfold the decomposition from root, then keep children only at the
// deepest (then leftmost) inner node of every label.
inline ConcatenationTree concatenation_tree(const std::vector<VarEquation>& eqs, VarId root) {
  std::map<VarId, const VarEquation*> def;
  for (const auto& e : eqs) def[e.lhs] = &e;
  ConcatenationTree t;
  t.nodes.push_back({root, 0, 0, {}});
  std::vector<std::vector<std::size_t>> path{{}};  // child-index path per node
  for (std::size_t v = 0; v < t.nodes.size(); ++v) {
    auto it = def.find(t.nodes[v].label);
    if (it == def.end()) continue;
    if (t.nodes.size() > 100000) throw Error("concatenation tree too large");
    for (std::size_t c = 0; c < it->second->rhs.size(); ++c) {
      std::size_t id = t.nodes.size();
      t.nodes.push_back({it->second->rhs[c], v, t.nodes[v].depth + 1, {}});
      auto p = path[v];
      p.push_back(c);
      path.push_back(p);
      t.nodes[v].children.push_back(id);
    }
  }
  std::map<VarId, std::size_t> best;
  for (std::size_t v = 0; v < t.nodes.size(); ++v) {
    if (t.nodes[v].children.empty()) continue;
    auto [it, fresh] = best.try_emplace(t.nodes[v].label, v);
    if (fresh) continue;
    std::size_t b = it->second;
    if (t.nodes[v].depth > t.nodes[b].depth || (t.nodes[v].depth == t.nodes[b].depth && path[v] < path[b]))
      it->second = v;
  }
  // rebuild keeping only surviving nodes
  ConcatenationTree out;
  std::function<void(std::size_t, std::size_t, std::size_t)> copy = [&](std::size_t v, std::size_t parent,
                                                                       std::size_t depth) {
    std::size_t id = out.nodes.size();
    out.nodes.push_back({t.nodes[v].label, id == 0 ? 0 : parent, depth, {}});
    if (t.nodes[v].children.empty() || best[t.nodes[v].label] != v) return;
    for (auto c : t.nodes[v].children) {
      out.nodes[id].children.push_back(out.nodes.size());
      copy(c, id, depth + 1);
    }
  };
  copy(0, 0, 0);
  return out;
}

inline bool is_acyclic_bracketing(const Bracketing& b) {
  VarTable scratch;
  VarId top = 0;
  for (VarId v : b.flatten()) top = std::max(top, v);
  while (scratch.size() <= top) scratch.intern("#" + std::to_string(scratch.size()));
  auto d = decompose_into(b, kUniverse, scratch);
  return concatenation_tree(d.equations, kUniverse).localized();
}

inline bool bracketing_gyo_acyclic(const Bracketing& b) {
  VarTable scratch;
  VarId top = 0;
  for (VarId v : b.flatten()) top = std::max(top, v);
  while (scratch.size() <= top) scratch.intern("#" + std::to_string(scratch.size()));
  auto d = decompose_into(b, kUniverse, scratch);
  return gyo(equation_var_sets(d.equations)).has_value();
}

// ---- interval graph shared by the binary algorithms ----

namespace decomp_detail {

class Intervals {
 public:
  explicit Intervals(const std::vector<VarId>& a) : a_(a), n_(a.size()) {
    std::map<VarId, std::size_t> idx;
    for (VarId v : a) idx.try_emplace(v, idx.size());
    words_ = (idx.size() + 63) / 64;
    cid_.assign((n_ + 2) * (n_ + 2), -1);
    bits_.assign((n_ + 2) * (n_ + 2) * words_, 0);
    std::map<std::pair<int, VarId>, int> intern;
    for (std::size_t i = 1; i <= n_; ++i) {
      int prev = -1;
      for (std::size_t j = i; j <= n_; ++j) {
        auto [it, fresh] = intern.try_emplace({prev, a[j - 1]}, static_cast<int>(intern.size()));
        prev = it->second;
        cid_[key(i, j)] = prev;
        for (std::size_t w = 0; w < words_; ++w) bits_[key(i, j) * words_ + w] = j > i ? bits_[key(i, j - 1) * words_ + w] : 0;
        std::size_t b = idx[a[j - 1]];
        bits_[key(i, j) * words_ + b / 64] |= std::uint64_t{1} << (b % 64);
      }
    }
  }

  std::size_t n() const { return n_; }
  VarId at(std::size_t i) const { return a_[i - 1]; }
  int cid(std::size_t i, std::size_t j) const { return cid_[key(i, j)]; }
  bool disjoint(std::size_t i, std::size_t j, std::size_t p, std::size_t q) const {
    for (std::size_t w = 0; w < words_; ++w)
      if (bits_[key(i, j) * words_ + w] & bits_[key(p, q) * words_ + w]) return false;
    return true;
  }
  std::set<VarId> vars(std::size_t i, std::size_t j) const { return {a_.begin() + (i - 1), a_.begin() + j}; }

 private:
  std::size_t key(std::size_t i, std::size_t j) const { return i * (n_ + 2) + j; }
  std::vector<VarId> a_;
  std::size_t n_, words_;
  std::vector<int> cid_;
  std::vector<std::uint64_t> bits_;
};

// V and E of the binary fixed point.  edge(i,k,j) means (i,k) -> (i,j),(j+1,k).
class BinaryGraph {
 public:
  explicit BinaryGraph(const Intervals& iv) : iv_(iv), n_(iv.n()) {
    inV_.assign((n_ + 2) * (n_ + 2), 0);
    edge_.assign((n_ + 2) * (n_ + 2) * (n_ + 2), 0);
    for (std::size_t i = 1; i <= n_; ++i) inV_[key(i, i)] = 1;
  }

  bool in_v(std::size_t i, std::size_t k) const { return inV_[key(i, k)]; }
  bool edge(std::size_t i, std::size_t k, std::size_t j) const { return edge_[key(i, k) * (n_ + 2) + j]; }
  void add(std::size_t i, std::size_t k, std::size_t j) {
    edge_[key(i, k) * (n_ + 2) + j] = 1;
    inV_[key(i, k)] = 1;
  }
  const Intervals& iv() const { return iv_; }

  // Why (i,k) may split at j: 0 if the halves are equal or disjoint,
  // otherwise the witnessing split of one half.
  struct Reason {
    bool ok = false;
    bool left = false;  // which half carries the witness
    std::size_t x = 0;  // 0: no witness needed
  };
  Reason reason(std::size_t i, std::size_t j, std::size_t k) const {
    if (iv_.cid(i, j) == iv_.cid(j + 1, k) || iv_.disjoint(i, j, j + 1, k)) return {true, false, 0};
    int right = iv_.cid(j + 1, k), left = iv_.cid(i, j);
    for (std::size_t x = i; x < j; ++x)
      if (edge(i, j, x) && (right == iv_.cid(i, x) || right == iv_.cid(x + 1, j))) return {true, true, x};
    for (std::size_t x = j + 1; x < k; ++x)
      if (edge(j + 1, k, x) && (left == iv_.cid(j + 1, x) || left == iv_.cid(x + 1, k))) return {true, false, x};
    return {};
  }

  // Fixed point over lengths >= min_len, shortest intervals first.
  template <class Extra>
  void saturate(std::size_t min_len, Extra&& extra) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t len = min_len; len <= n_; ++len)
        for (std::size_t i = 1; i + len - 1 <= n_; ++i) {
          std::size_t k = i + len - 1;
          for (std::size_t j = i; j < k; ++j) {
            if (edge(i, k, j) || !in_v(i, j) || !in_v(j + 1, k)) continue;
            if (reason(i, j, k).ok && extra(i, j, k)) {
              add(i, k, j);
              changed = true;
            }
          }
        }
    }
  }

 private:
  std::size_t key(std::size_t i, std::size_t k) const { return i * (n_ + 2) + k; }
  const Intervals& iv_;
  std::size_t n_;
  std::vector<char> inV_, edge_;
};

// Shared tail of tree derivation: given a split for every node of one
// derivation tree, name nodes by content, keep the deepest-then-leftmost
// copy of each content, and rebuild the bracketing from those copies.
struct DerivedTree {
  // cuts[node] = right ends of all children but the last
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> cuts;
};

inline Bracketing rebuild_pruned(const Intervals& iv, const DerivedTree& t) {
  struct Seen {
    std::size_t depth;
    std::vector<std::size_t> path;
    std::pair<std::size_t, std::size_t> node;
  };
  std::map<int, Seen> best;
  std::function<void(std::size_t, std::size_t, std::size_t, std::vector<std::size_t>&)> walk =
      [&](std::size_t i, std::size_t k, std::size_t depth, std::vector<std::size_t>& path) {
        if (i == k) return;
        int c = iv.cid(i, k);
        auto it = best.find(c);
        if (it == best.end() || depth > it->second.depth ||
            (depth == it->second.depth && path < it->second.path))
          best[c] = Seen{depth, path, {i, k}};
        const auto& cut = t.cuts.at({i, k});
        std::size_t from = i;
        for (std::size_t ci = 0; ci <= cut.size(); ++ci) {
          std::size_t to = ci < cut.size() ? cut[ci] : k;
          path.push_back(ci);
          walk(from, to, depth + 1, path);
          path.pop_back();
          from = to + 1;
        }
      };
  std::vector<std::size_t> path;
  walk(1, iv.n(), 0, path);

  std::function<Bracketing(std::size_t, std::size_t)> build = [&](std::size_t i, std::size_t k) -> Bracketing {
    if (i == k) return Bracketing::var(iv.at(i));
    auto [bi, bk] = best.at(iv.cid(i, k)).node;
    std::vector<Bracketing> ch;
    std::size_t from = i;
    const auto& cut = t.cuts.at({bi, bk});
    for (std::size_t ci = 0; ci <= cut.size(); ++ci) {
      std::size_t to = ci < cut.size() ? cut[ci] - bi + i : k;
      ch.push_back(build(from, to));
      from = to + 1;
    }
    return Bracketing::node(std::move(ch));
  };
  return build(1, iv.n());
}

// Top-down derivation over the binary graph.  Each edge's reason fixes the
// split of the half that carries its witness; every other node takes its
// first (or, for the root, the chosen) edge.
inline std::optional<Bracketing> derive_binary(const BinaryGraph& g, std::size_t root_choice) {
  const auto& iv = g.iv();
  const std::size_t n = iv.n();
  if (!g.in_v(1, n)) return std::nullopt;
  if (n == 1) return Bracketing::var(iv.at(1));
  std::vector<std::size_t> roots;
  for (std::size_t j = 1; j < n; ++j)
    if (g.edge(1, n, j)) roots.push_back(j);
  if (root_choice >= roots.size()) return std::nullopt;

  DerivedTree t;
  std::function<void(std::size_t, std::size_t, std::size_t)> expand = [&](std::size_t i, std::size_t k,
                                                                         std::size_t forced) {
    if (i == k) return;
    std::size_t j = forced;
    if (j == 0) {
      if (i == 1 && k == n) {
        j = roots[root_choice];
      } else {
        for (std::size_t c = i; c < k && j == 0; ++c)
          if (g.edge(i, k, c)) j = c;
      }
    }
    if (j == 0) throw Error("derivation reached an interval without edges");
    t.cuts[{i, k}] = {j};
    auto r = g.reason(i, j, k);
    expand(i, j, r.x && r.left ? r.x : 0);
    expand(j + 1, k, r.x && !r.left ? r.x : 0);
  };
  expand(1, n, 0);
  return rebuild_pruned(iv, t);
}

inline std::size_t root_edge_count(const BinaryGraph& g) {
  std::size_t c = 0;
  for (std::size_t j = 1; j < g.iv().n(); ++j) c += g.edge(1, g.iv().n(), j);
  return c;
}

}  // namespace decomp_detail

// ---- acyclic patterns ----

inline bool is_acyclic_pattern(const std::vector<VarId>& alpha) {
  if (alpha.empty()) throw Error("empty pattern");
  decomp_detail::Intervals iv(alpha);
  decomp_detail::BinaryGraph g(iv);
  for (std::size_t i = 1; i < alpha.size(); ++i) g.add(i, i + 1, i);
  g.saturate(3, [](std::size_t, std::size_t, std::size_t) { return true; });
  return g.in_v(1, alpha.size());
}

inline bool is_acyclic_pattern(const Pattern& alpha) { return is_acyclic_pattern(terminal_free_vars(alpha)); }

// An acyclic bracketing of alpha, if there is one.
inline std::optional<Bracketing> find_acyclic_bracketing(const std::vector<VarId>& alpha) {
  if (alpha.empty()) throw Error("empty pattern");
  decomp_detail::Intervals iv(alpha);
  decomp_detail::BinaryGraph g(iv);
  for (std::size_t i = 1; i < alpha.size(); ++i) g.add(i, i + 1, i);
  g.saturate(3, [](std::size_t, std::size_t, std::size_t) { return true; });
  if (!g.in_v(1, alpha.size())) return std::nullopt;
  if (alpha.size() == 1) return Bracketing::var(alpha[0]);
  for (std::size_t r = 0; r < decomp_detail::root_edge_count(g); ++r) {
    auto b = decomp_detail::derive_binary(g, r);
    if (b && bracketing_gyo_acyclic(*b)) return b;
  }
  throw Error("internal: no derivable acyclic bracketing although the pattern is acyclic");
}

inline std::optional<Decomposition> find_acyclic_decomposition(const std::vector<VarId>& alpha, VarId root,
                                                              VarTable& vars) {
  auto b = find_acyclic_bracketing(alpha);
  if (!b) return std::nullopt;
  return decompose_into(*b, root, vars);
}

inline std::optional<TwoFcCq> find_acyclic_decomposition(const Pattern& alpha, VarId root, const VarTable& vars) {
  auto b = find_acyclic_bracketing(terminal_free_vars(alpha));
  if (!b) return std::nullopt;
  return decompose_bracketing(*b, root, vars);
}

// ---- constrained bracketings ----

inline bool pairs_covered(const std::vector<VarEquation>& eqs, const PairSet& c) {
  auto sets = equation_var_sets(eqs);
  for (auto [x, y] : c) {
    bool found = false;
    for (const auto& s : sets)
      if (s.count(x) && s.count(y)) found = true;
    if (!found) return false;
  }
  return true;
}

namespace decomp_detail {

inline bool decomposition_ok(const Bracketing& b, VarId root, const PairSet& c) {
  VarTable scratch;
  VarId top = root;
  for (VarId v : b.flatten()) top = std::max(top, v);
  for (auto [x, y] : c) top = std::max({top, x, y});
  while (scratch.size() <= top) scratch.intern("#" + std::to_string(scratch.size()));
  auto d = decompose_into(b, root, scratch);
  return pairs_covered(d.equations, c) && gyo(equation_var_sets(d.equations)).has_value();
}

}  // namespace decomp_detail

// Acyclic bracketing in which every pair of c appears as an adjacent
// (x.y) or (y.x).
inline std::optional<Bracketing> constrained_acyclic_bracketing(const std::vector<VarId>& alpha, const PairSet& c) {
  if (alpha.empty()) throw Error("empty pattern");
  std::set<VarId> in_alpha(alpha.begin(), alpha.end()), in_c;
  for (auto [x, y] : c) {
    if (!in_alpha.count(x) || !in_alpha.count(y)) return std::nullopt;
    in_c.insert(x);
    in_c.insert(y);
  }
  const std::size_t n = alpha.size();
  if (n == 1) {
    if (!c.empty()) return std::nullopt;
    return Bracketing::var(alpha[0]);
  }
  decomp_detail::Intervals iv(alpha);
  decomp_detail::BinaryGraph g(iv);
  for (std::size_t i = 1; i < n; ++i) {
    VarId a = alpha[i - 1], b = alpha[i];
    bool paired = a != b && c.count(make_pair_key(a, b));
    if (paired || (!in_c.count(a) && !in_c.count(b))) g.add(i, i + 1, i);
  }
  // A paired variable concatenated to a single bracketing forces that
  // bracketing's variables to be exactly the pair.
  auto extra = [&](std::size_t i, std::size_t j, std::size_t k) {
    auto single_side = [&](VarId v, std::size_t p, std::size_t q) -> std::optional<bool> {
      bool involved = false;
      for (auto [x, y] : c) {
        if (v != x && v != y) continue;
        involved = true;
        if (iv.vars(p, q) == std::set<VarId>{x, y}) return true;
      }
      if (involved) return false;
      return std::nullopt;
    };
    if (i == j)
      if (auto r = single_side(iv.at(i), j + 1, k)) return *r;
    if (j + 1 == k)
      if (auto r = single_side(iv.at(k), i, j)) return *r;
    return true;
  };
  g.saturate(3, extra);
  if (!g.in_v(1, n)) return std::nullopt;
  for (std::size_t r = 0; r < decomp_detail::root_edge_count(g); ++r) {
    auto b = decomp_detail::derive_binary(g, r);
    if (b && decomp_detail::decomposition_ok(*b, kUniverse, c)) return b;
  }
  return std::nullopt;
}

// Bracketing of the rhs of (lhs = rhs) whose decomposition, rooted at lhs,
// is acyclic and has an atom holding both variables of every pair in c.
inline std::optional<Bracketing> atom_bracketing_with_constraints(VarId lhs, const std::vector<VarId>& rhs,
                                                                  const PairSet& c) {
  if (rhs.size() <= 2) {
    Bracketing b = rhs.size() == 1 ? Bracketing::var(rhs[0])
                                   : Bracketing::node({Bracketing::var(rhs[0]), Bracketing::var(rhs[1])});
    if (decomp_detail::decomposition_ok(b, lhs, c)) return b;
    return std::nullopt;
  }
  std::vector<std::pair<VarId, VarId>> with_lhs;
  PairSet rest;
  for (auto p : c) {
    if (p.first == lhs || p.second == lhs)
      with_lhs.push_back(p);
    else
      rest.insert(p);
  }
  if (with_lhs.size() > 1) return std::nullopt;
  if (with_lhs.empty()) return constrained_acyclic_bracketing(rhs, rest);

  // The root atom can only hold lhs, y and one more name, so y has to be a
  // whole side of the root split.  Peel it off and demand y at the root of
  // the remainder too while y still occurs there.
  VarId y = with_lhs[0].first == lhs ? with_lhs[0].second : with_lhs[0].first;
  VarId hole = lhs;
  for (VarId v : rhs) hole = std::max(hole, v);
  for (auto [p, q] : c) hole = std::max({hole, p, q});
  ++hole;
  std::map<std::pair<std::size_t, std::size_t>, std::optional<Bracketing>> memo;
  std::function<std::optional<Bracketing>(std::size_t, std::size_t)> peel =
      [&](std::size_t from, std::size_t to) -> std::optional<Bracketing> {  // rhs[from, to)
    if (auto it = memo.find({from, to}); it != memo.end()) return it->second;
    std::optional<Bracketing> out;
    auto yv = Bracketing::var(y);
    for (int side = 0; side < 2 && !out; ++side) {
      std::size_t at = side == 0 ? from : to - 1;
      if (rhs[at] != y) continue;
      std::size_t rf = side == 0 ? from + 1 : from, rt = side == 0 ? to : to - 1;
      std::vector<VarId> r(rhs.begin() + rf, rhs.begin() + rt);
      std::optional<Bracketing> inner;
      if (std::find(r.begin(), r.end(), y) == r.end()) {
        inner = r.size() == 1 ? std::optional<Bracketing>(Bracketing::var(r[0])) : constrained_acyclic_bracketing(r, rest);
      } else if (r.size() <= 2) {
        PairSet need = rest;
        need.insert(make_pair_key(hole, y));
        Bracketing b = r.size() == 1 ? Bracketing::var(r[0])
                                     : Bracketing::node({Bracketing::var(r[0]), Bracketing::var(r[1])});
        if (decomp_detail::decomposition_ok(b, hole, need)) inner = b;
      } else {
        inner = peel(rf, rt);
      }
      if (!inner) continue;
      Bracketing b = side == 0 ? Bracketing::node({yv, *inner}) : Bracketing::node({*inner, yv});
      PairSet need = rest;
      need.insert(make_pair_key(from == 0 && to == rhs.size() ? lhs : hole, y));
      if (decomp_detail::decomposition_ok(b, from == 0 && to == rhs.size() ? lhs : hole, need)) out = b;
    }
    memo[{from, to}] = out;
    return out;
  };
  return peel(0, rhs.size());
}

inline std::optional<TwoFcCq> decompose_atom_with_constraints(const WordEquation& eta, const PairSet& c,
                                                             const VarTable& vars) {
  auto b = atom_bracketing_with_constraints(eta.lhs, terminal_free_vars(eta.rhs), c);
  if (!b) return std::nullopt;
  return decompose_bracketing(*b, eta.lhs, vars);
}

// ---- k-ary local decompositions ----

namespace decomp_detail {

class KaryGraph {
 public:
  struct Tuple {
    std::vector<std::size_t> ends;    // right end of every child, last = parent end
    std::vector<int> witness;         // per child: tuple index in that child, -1 if none
  };

  KaryGraph(const Intervals& iv, std::size_t k) : iv_(iv), n_(iv.n()), k_(k) {
    tuples_.resize((n_ + 2) * (n_ + 2));
    for (std::size_t i = 1; i <= n_; ++i) mark(i, i);
    for (std::size_t i = 1; i <= n_; ++i)
      for (std::size_t len = 2; len <= k_ && i + len - 1 <= n_; ++len) {
        Tuple t;
        for (std::size_t p = i; p < i + len; ++p) t.ends.push_back(p);
        t.witness.assign(len, -1);
        insert(i, i + len - 1, std::move(t));
      }
  }

  bool in_v(std::size_t i, std::size_t j) const { return inV_.count({i, j}) != 0; }
  const std::vector<Tuple>& tuples(std::size_t i, std::size_t j) const { return tuples_[key(i, j)]; }
  const Intervals& iv() const { return iv_; }

  void saturate() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t len = 2; len <= n_; ++len)
        for (std::size_t i = 1; i + len - 1 <= n_; ++i) {
          std::size_t j = i + len - 1;
          std::vector<std::size_t> ends;
          std::function<void(std::size_t)> compose = [&](std::size_t from) {
            if (from > j) {
              if (ends.size() < 2) return;
              if (known_.count({i, ends})) return;
              if (auto w = localized(i, ends)) {
                insert(i, j, Tuple{ends, *w});
                changed = true;
              }
              return;
            }
            if (ends.size() == k_) return;
            for (std::size_t to = from; to <= j; ++to) {
              if (from == i && to == j) continue;
              if (!in_v(from, to)) continue;
              ends.push_back(to);
              compose(to + 1);
              ends.pop_back();
            }
          };
          compose(i);
        }
    }
  }

 private:
  std::size_t key(std::size_t i, std::size_t j) const { return i * (n_ + 2) + j; }
  void mark(std::size_t i, std::size_t j) { inV_.insert({i, j}); }
  void insert(std::size_t i, std::size_t j, Tuple t) {
    known_.insert({i, t.ends});
    tuples_[key(i, j)].push_back(std::move(t));
    mark(i, j);
  }

  // Every pair of children must be equal, disjoint, or have one of them
  // equal to a child of the other.  One tuple per child has to serve all of
  // that child's pairs at once.
  std::optional<std::vector<int>> localized(std::size_t i, const std::vector<std::size_t>& ends) const {
    const std::size_t m = ends.size();
    std::vector<std::pair<std::size_t, std::size_t>> ch;
    for (std::size_t c = 0, from = i; c < m; from = ends[c] + 1, ++c) ch.push_back({from, ends[c]});
    std::vector<std::pair<std::size_t, std::size_t>> hard;
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b) {
        auto [p, q] = ch[a];
        auto [r, s] = ch[b];
        if (iv_.cid(p, q) == iv_.cid(r, s) || iv_.disjoint(p, q, r, s)) continue;
        hard.push_back({a, b});
      }
    std::vector<int> pick(m, -1);
    if (hard.empty()) return pick;

    // options per child: one representative tuple per set of siblings it can witness
    std::vector<std::vector<std::pair<std::uint32_t, int>>> options(m);
    for (std::size_t a = 0; a < m; ++a) {
      options[a].push_back({0, -1});
      std::set<std::uint32_t> seen{0};
      auto [p, q] = ch[a];
      const auto& ts = tuples(p, q);
      for (std::size_t t = 0; t < ts.size(); ++t) {
        std::uint32_t mask = 0;
        std::size_t from = p;
        for (std::size_t e : ts[t].ends) {
          int gc = iv_.cid(from, e);
          for (std::size_t b = 0; b < m; ++b)
            if (b != a && iv_.cid(ch[b].first, ch[b].second) == gc) mask |= std::uint32_t{1} << b;
          from = e + 1;
        }
        if (seen.insert(mask).second) options[a].push_back({mask, static_cast<int>(t)});
      }
    }
    std::vector<std::uint32_t> chosen(m, 0);
    std::function<bool(std::size_t)> search = [&](std::size_t a) -> bool {
      if (a == m) return true;
      for (auto [mask, t] : options[a]) {
        chosen[a] = mask;
        pick[a] = t;
        bool ok = true;
        for (auto [x, y] : hard)
          if (y == a && !((chosen[x] >> y) & 1) && !((chosen[y] >> x) & 1)) {
            ok = false;
            break;
          }
        if (ok && search(a + 1)) return true;
      }
      pick[a] = -1;
      return false;
    };
    if (!search(0)) return std::nullopt;
    return pick;
  }

  const Intervals& iv_;
  std::size_t n_, k_;
  std::vector<std::vector<Tuple>> tuples_;
  std::set<std::pair<std::size_t, std::size_t>> inV_;
  std::set<std::pair<std::size_t, std::vector<std::size_t>>> known_;
};

inline std::optional<Bracketing> derive_kary(const KaryGraph& g, std::size_t root_choice) {
  const auto& iv = g.iv();
  const std::size_t n = iv.n();
  const auto& roots = g.tuples(1, n);
  if (root_choice >= roots.size()) return std::nullopt;
  DerivedTree t;
  std::function<void(std::size_t, std::size_t, int)> expand = [&](std::size_t i, std::size_t j, int forced) {
    if (i == j) return;
    const auto& ts = g.tuples(i, j);
    if (ts.empty()) throw Error("derivation reached an interval without tuples");
    const auto& tup = (i == 1 && j == n) ? ts[root_choice] : ts[forced < 0 ? 0 : forced];
    t.cuts[{i, j}] = std::vector<std::size_t>(tup.ends.begin(), tup.ends.end() - 1);
    std::size_t from = i;
    for (std::size_t c = 0; c < tup.ends.size(); ++c) {
      expand(from, tup.ends[c], tup.witness[c]);
      from = tup.ends[c] + 1;
    }
  };
  expand(1, n, -1);
  return rebuild_pruned(iv, t);
}

}  // namespace decomp_detail

// k-ary bracketing whose decomposition is x-localized for every x.
inline std::optional<Bracketing> k_ary_local_bracketing(const std::vector<VarId>& alpha, std::size_t k) {
  if (alpha.empty()) throw Error("empty pattern");
  if (k < 2) throw Error("arity must be at least 2");
  if (alpha.size() == 1) return Bracketing::var(alpha[0]);
  decomp_detail::Intervals iv(alpha);
  decomp_detail::KaryGraph g(iv, k);
  g.saturate();
  if (!g.in_v(1, alpha.size())) return std::nullopt;
  for (std::size_t r = 0; r < g.tuples(1, alpha.size()).size(); ++r) {
    auto b = decomp_detail::derive_kary(g, r);
    if (b && is_acyclic_bracketing(*b)) return b;
  }
  return std::nullopt;
}

inline std::optional<TwoFcCq> k_ary_local_decomposition(const Pattern& alpha, std::size_t k, VarId root,
                                                       const VarTable& vars) {
  auto b = k_ary_local_bracketing(terminal_free_vars(alpha), k);
  if (!b) return std::nullopt;
  return decompose_bracketing(*b, root, vars);
}

}  // namespace fcq
