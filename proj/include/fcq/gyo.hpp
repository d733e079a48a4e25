#pragma once

#include <optional>
#include <set>
#include <vector>

#include "fcq/model.hpp"

namespace fcq {

// Mark-and-absorb GYO.  The universe variable is treated as a constant and
// ignored.  Absorption picks the least node index first and absorbs it into
// the least eligible partner, so output is stable for a fixed atom order.
inline std::optional<JoinTree> gyo(const std::vector<std::set<VarId>>& atoms) {
  JoinTree tree;
  tree.node_vars = atoms;
  for (auto& s : tree.node_vars) s.erase(kUniverse);
  const std::size_t n = atoms.size();
  if (n == 0) return tree;

  std::vector<bool> node_marked(n, false);
  std::set<VarId> var_marked;
  std::size_t unmarked = n;

  auto live = [&](std::size_t i) {
    std::set<VarId> out;
    for (VarId v : tree.node_vars[i])
      if (!var_marked.count(v)) out.insert(v);
    return out;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n && !changed; ++i) {
      if (node_marked[i]) continue;
      auto vi = live(i);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || node_marked[j]) continue;
        auto vj = live(j);
        if (std::includes(vj.begin(), vj.end(), vi.begin(), vi.end())) {
          tree.edges.emplace_back(i, j);
          node_marked[i] = true;
          --unmarked;
          changed = true;
          break;
        }
      }
    }
    std::map<VarId, int> occurrences;
    for (std::size_t i = 0; i < n; ++i)
      if (!node_marked[i])
        for (VarId v : tree.node_vars[i])
          if (!var_marked.count(v)) ++occurrences[v];
    for (auto [v, c] : occurrences)
      if (c == 1) {
        var_marked.insert(v);
        changed = true;
      }
  }
  if (unmarked != 1) return std::nullopt;
  return tree;
}

inline bool is_tree(const JoinTree& t) {
  const std::size_t n = t.size();
  if (n == 0) return t.edges.empty();
  if (t.edges.size() != n - 1) return false;
  auto adj = t.adjacency();
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (auto w : adj[v])
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        stack.push_back(w);
      }
  }
  return count == n;
}

// Path-connectedness: for every non-universe variable the nodes containing it
// induce a connected subtree.
inline bool verify_join_tree(const JoinTree& t) {
  if (!is_tree(t)) return false;
  std::set<VarId> all;
  for (const auto& s : t.node_vars) all.insert(s.begin(), s.end());
  all.erase(kUniverse);
  for (VarId x : all) {
    std::size_t nodes = 0, inner_edges = 0;
    for (const auto& s : t.node_vars) nodes += s.count(x);
    for (auto [a, b] : t.edges)
      if (t.node_vars[a].count(x) && t.node_vars[b].count(x)) ++inner_edges;
    // a forest with k nodes is connected iff it has k-1 edges
    if (inner_edges + 1 != nodes) return false;
  }
  return true;
}

}  // namespace fcq
