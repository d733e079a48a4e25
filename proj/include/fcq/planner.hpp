#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fcq/decomposer.hpp"
#include "fcq/gyo.hpp"
#include "fcq/model.hpp"
#include "fcq/parser.hpp"

namespace fcq {

namespace plan_detail {

inline std::string names(const std::set<VarId>& vs, const VarTable& vars) {
  std::string out = "{";
  for (VarId v : vs) {
    if (out.size() > 1) out += ',';
    out += vars.name(v);
  }
  return out + "}";
}

inline std::string eq_text(const WordEquation& e, const VarTable& vars) {
  return vars.name(e.lhs) + " = " + format_pattern(e.rhs, vars);
}

inline std::set<VarId> eq_vars(const WordEquation& e) {
  auto s = vars_of(e.rhs);
  s.insert(e.lhs);
  return s;
}

inline bool contains_var(const Pattern& p, VarId v) {
  for (const Term& t : p)
    if (t.is_var && t.var == v) return true;
  return false;
}

inline void add_constraint(FcCq& q, VarId v, Regex r) {
  RegularConstraint c{v, std::move(r)};
  for (const auto& d : q.constraints)
    if (d == c) return;
  q.constraints.push_back(std::move(c));
}

// Name `base` if free, otherwise the first free base<N>.
inline VarId unique_var(VarTable& vars, const std::string& base) {
  if (!vars.contains(base)) return vars.intern(base);
  return vars.fresh(base);
}

}  // namespace plan_detail

// ---- normalization ----

struct NormalizedQuery {
  FcCq query;
  std::vector<std::string> trace;
};

inline NormalizedQuery normalize(const FcCq& input) {
  using namespace plan_detail;
  NormalizedQuery out;
  FcCq& q = out.query;
  q = input;
  q.equations.clear();
  auto& vars = q.vars;
  auto log = [&](std::string s) { out.trace.push_back(std::move(s)); };

  // step 1: terminal blocks become fresh variables
  for (const auto& e : input.equations) {
    if (e.rhs.empty()) {
      log("1: " + eq_text(e, vars) + "  =>  " + vars.name(e.lhs) + " in ''");
      add_constraint(q, e.lhs, re::eps());
      continue;
    }
    WordEquation n{e.lhs, {}};
    std::vector<std::string> added;
    for (std::size_t i = 0; i < e.rhs.size();) {
      if (e.rhs[i].is_var) {
        n.rhs.push_back(e.rhs[i++]);
        continue;
      }
      std::string block;
      while (i < e.rhs.size() && !e.rhs[i].is_var) block += e.rhs[i++].symbol;
      VarId z = vars.fresh("z");
      n.rhs.push_back(Term::of(z));
      q.constraints.push_back({z, re::word(block)});
      added.push_back(vars.name(z) + " in '" + block + "'");
    }
    if (!added.empty()) {
      std::string s = "1: " + eq_text(e, vars) + "  =>  " + eq_text(n, vars);
      for (const auto& a : added) s += ", " + a;
      log(s);
    }
    q.equations.push_back(n);
  }

  auto eps_all = [&](const Pattern& a, const Pattern& b, std::string& s) {
    std::set<VarId> vs = vars_of(a);
    auto vb = vars_of(b);
    vs.insert(vb.begin(), vb.end());
    for (VarId v : vs) {
      add_constraint(q, v, re::eps());
      s += ", " + vars.name(v) + " in ''";
    }
  };

  // Step 4 can bounce between copy equations of one class (z = x, x = z,
  // v = x).  On a repeated state each class becomes a chain c0 = c1 = ...
  // with u first, which has pairwise distinct right-hand sides.
  auto chain_copies = [&]() {
    std::map<VarId, VarId> parent;
    std::function<VarId(VarId)> find = [&](VarId v) -> VarId {
      auto it = parent.find(v);
      if (it == parent.end() || it->second == v) return v;
      return it->second = find(it->second);
    };
    std::vector<VarId> order;
    auto touch = [&](VarId v) {
      if (!parent.count(v)) {
        parent[v] = v;
        order.push_back(v);
      }
    };
    std::vector<WordEquation> rest;
    for (const auto& e : q.equations) {
      if (e.rhs.size() != 1) {
        rest.push_back(e);
        continue;
      }
      touch(e.lhs);
      touch(e.rhs[0].var);
      VarId a = find(e.lhs), b = find(e.rhs[0].var);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::map<VarId, std::vector<VarId>> classes;
    for (VarId v : order) classes[find(v)].push_back(v);
    std::string s = "4: copy classes";
    for (auto& [r, members] : classes) {
      auto u = std::find(members.begin(), members.end(), kUniverse);
      if (u != members.end()) std::rotate(members.begin(), u, u + 1);
      s += " " + names(std::set<VarId>(members.begin(), members.end()), vars);
      for (std::size_t i = 0; i + 1 < members.size(); ++i) rest.push_back({members[i], {Term::of(members[i + 1])}});
    }
    log(s + " become chains");
    q.equations = rest;
  };
  std::set<std::vector<std::pair<VarId, Pattern>>> states;

  for (int round = 0;; ++round) {
    if (round > 10000) throw Error("normalization did not converge");
    bool changed = false;
    {
      std::vector<std::pair<VarId, Pattern>> st;
      for (const auto& e : q.equations) st.push_back({e.lhs, e.rhs});
      if (!states.insert(st).second) chain_copies();
    }

    // step 2: x = a1.x.a2
    for (auto& e : q.equations) {
      for (std::size_t i = 0; i < e.rhs.size(); ++i) {
        if (!e.rhs[i].is_var || e.rhs[i].var != e.lhs) continue;
        Pattern a1(e.rhs.begin(), e.rhs.begin() + i), a2(e.rhs.begin() + i + 1, e.rhs.end());
        std::string s = "2: " + eq_text(e, vars) + "  =>  ";
        VarId z = vars.fresh("z");
        WordEquation n{e.lhs, {Term::of(z)}};
        s += eq_text(n, vars);
        eps_all(a1, a2, s);
        log(s);
        e = n;
        changed = true;
        break;
      }
    }

    // step 3: x = a1.u.a2
    for (auto& e : q.equations) {
      if (e.lhs == kUniverse) continue;
      for (std::size_t i = 0; i < e.rhs.size(); ++i) {
        if (!e.rhs[i].is_var || e.rhs[i].var != kUniverse) continue;
        Pattern a1(e.rhs.begin(), e.rhs.begin() + i), a2(e.rhs.begin() + i + 1, e.rhs.end());
        WordEquation n{kUniverse, {Term::of(e.lhs)}};
        std::string s = "3: " + eq_text(e, vars) + "  =>  " + eq_text(n, vars);
        eps_all(a1, a2, s);
        log(s);
        e = n;
        changed = true;
        break;
      }
    }
    // u = u carries no information
    for (std::size_t i = 0; i < q.equations.size(); ++i) {
      const auto& e = q.equations[i];
      if (e.lhs == kUniverse && e.rhs.size() == 1 && e.rhs[0].is_var && e.rhs[0].var == kUniverse) {
        log("3: drop " + eq_text(e, vars));
        q.equations.erase(q.equations.begin() + i--);
        changed = true;
      }
    }

    // step 4: duplicates
    for (std::size_t j = 0; j < q.equations.size(); ++j)
      for (std::size_t i = 0; i < j; ++i) {
        if (q.equations[i].rhs != q.equations[j].rhs) continue;
        if (q.equations[i].lhs == q.equations[j].lhs) {
          log("4: drop duplicate " + eq_text(q.equations[j], vars));
          q.equations.erase(q.equations.begin() + j--);
        } else {
          WordEquation n{q.equations[j].lhs, {Term::of(q.equations[i].lhs)}};
          log("4: " + eq_text(q.equations[j], vars) + "  =>  " + eq_text(n, vars));
          q.equations[j] = n;
        }
        changed = true;
        break;
      }
    if (!changed) break;
  }
  return out;
}

inline bool is_normalized(const FcCq& q) {
  for (std::size_t i = 0; i < q.equations.size(); ++i) {
    const auto& e = q.equations[i];
    if (e.rhs.empty() || !is_terminal_free(e.rhs)) return false;
    if (plan_detail::contains_var(e.rhs, e.lhs) || plan_detail::contains_var(e.rhs, kUniverse)) return false;
    for (std::size_t j = 0; j < i; ++j)
      if (q.equations[j].rhs == e.rhs) return false;
  }
  return true;
}

// ---- structured normal form: every equation is u = a with u not in a ----

inline FcCq to_structured_normal_form(const FcCq& input) {
  using namespace plan_detail;
  FcCq q = input;
  auto& vars = q.vars;
  // step 1
  for (;;) {
    auto it = std::find_if(q.equations.begin(), q.equations.end(),
                           [](const WordEquation& e) { return contains_var(e.rhs, kUniverse); });
    if (it == q.equations.end()) break;
    WordEquation e = *it;
    q.equations.erase(it);
    std::size_t i = 0;
    while (!(e.rhs[i].is_var && e.rhs[i].var == kUniverse)) ++i;
    Pattern b1(e.rhs.begin(), e.rhs.begin() + i), b2(e.rhs.begin() + i + 1, e.rhs.end());
    VarId z = vars.fresh("z");
    if (e.lhs != kUniverse) q.equations.push_back({kUniverse, {Term::of(e.lhs)}});
    q.equations.push_back({z, b1});
    q.equations.push_back({z, b2});
    q.equations.push_back({z, {}});
  }
  // step 2
  std::map<VarId, std::pair<VarId, VarId>> affix;
  std::vector<WordEquation> out;
  for (const auto& e : q.equations) {
    if (e.lhs == kUniverse) {
      out.push_back(e);
      continue;
    }
    auto it = affix.find(e.lhs);
    if (it == affix.end()) {
      VarId p = unique_var(vars, "p_" + vars.name(e.lhs));
      VarId s = unique_var(vars, "s_" + vars.name(e.lhs));
      it = affix.emplace(e.lhs, std::make_pair(p, s)).first;
    }
    auto [p, s] = it->second;
    out.push_back({kUniverse, {Term::of(p), Term::of(e.lhs), Term::of(s)}});
    Pattern r{Term::of(p)};
    r.insert(r.end(), e.rhs.begin(), e.rhs.end());
    r.push_back(Term::of(s));
    out.push_back({kUniverse, r});
  }
  q.equations = out;
  return q;
}

// Common-subpattern pre-factoring: a shared factor of length >= 2 between
// two equations is named once.  Off by default in plan().
inline FcCq prefactor(const FcCq& input) {
  FcCq q = normalize(input).query;
  for (int guard = 0; guard < 1000; ++guard) {
    std::size_t best_len = 1, bi = 0, bj = 0, pi = 0, pj = 0;
    for (std::size_t i = 0; i < q.equations.size(); ++i)
      for (std::size_t j = i + 1; j < q.equations.size(); ++j) {
        const auto& a = q.equations[i].rhs;
        const auto& b = q.equations[j].rhs;
        for (std::size_t s = 0; s < a.size(); ++s)
          for (std::size_t t = 0; t < b.size(); ++t) {
            std::size_t l = 0;
            while (s + l < a.size() && t + l < b.size() && a[s + l] == b[t + l]) ++l;
            if (l == a.size() && l == b.size()) continue;
            if (l > best_len) best_len = l, bi = i, bj = j, pi = s, pj = t;
          }
      }
    if (best_len < 2) break;
    Pattern factor(q.equations[bi].rhs.begin() + pi, q.equations[bi].rhs.begin() + pi + best_len);
    VarId z = q.vars.fresh("z");
    auto replace = [&](Pattern& p, std::size_t at) {
      p.erase(p.begin() + at, p.begin() + at + best_len);
      p.insert(p.begin() + at, Term::of(z));
    };
    // a whole rhs is reused rather than renamed
    if (factor.size() == q.equations[bi].rhs.size()) {
      replace(q.equations[bj].rhs, pj);
      q.equations[bj].rhs[pj] = Term::of(q.equations[bi].lhs);
      continue;
    }
    if (factor.size() == q.equations[bj].rhs.size()) {
      replace(q.equations[bi].rhs, pi);
      q.equations[bi].rhs[pi] = Term::of(q.equations[bj].lhs);
      continue;
    }
    replace(q.equations[bi].rhs, pi);
    replace(q.equations[bj].rhs, pj);
    q.equations.push_back({z, factor});
  }
  return normalize(q).query;
}

// ---- weak join tree and prechecks ----

inline std::vector<std::set<VarId>> atom_var_sets(const FcCq& q) {
  std::vector<std::set<VarId>> out;
  for (const auto& e : q.equations) out.push_back(plan_detail::eq_vars(e));
  return out;
}

inline std::optional<JoinTree> weak_join_tree(const FcCq& normalized) { return gyo(atom_var_sets(normalized)); }

inline std::set<VarId> shared_vars(const std::set<VarId>& a, const std::set<VarId>& b) {
  std::set<VarId> out;
  for (VarId v : a)
    if (v != kUniverse && b.count(v)) out.insert(v);
  return out;
}

struct CyclicReason {
  int rule = 0;  // 0: none
  std::size_t first = 0, second = 0;
  std::string message;
  bool ok() const { return rule == 0; }
};

inline CyclicReason cyclicity_prechecks(const FcCq& q, const std::optional<JoinTree>& weak) {
  const auto& vars = q.vars;
  if (!weak) return {1, 0, 0, "query is weakly cyclic"};
  for (std::size_t i = 0; i < q.equations.size(); ++i)
    if (!is_acyclic_pattern(terminal_free_vars(q.equations[i].rhs)))
      return {2, i, i, "rhs of " + plan_detail::eq_text(q.equations[i], vars) + " is a cyclic pattern"};
  auto sets = atom_var_sets(q);
  for (std::size_t i = 0; i < sets.size(); ++i)
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      auto s = shared_vars(sets[i], sets[j]);
      std::string pair = plan_detail::eq_text(q.equations[i], vars) + " and " +
                         plan_detail::eq_text(q.equations[j], vars);
      if (s.size() > 3) return {3, i, j, pair + " share " + plan_detail::names(s, vars)};
      std::size_t li = 1 + q.equations[i].rhs.size(), lj = 1 + q.equations[j].rhs.size();
      if (s.size() == 3 && (li > 3 || lj > 3))
        return {4, i, j, pair + " share " + plan_detail::names(s, vars) + " and one of them is longer than 3"};
    }
  return {};
}

// ---- plans ----

struct PlanNode {
  bool is_equation = true;
  std::size_t index = 0;  // into query.equations or query.constraints
  std::size_t atom = 0;   // source atom of the normalized query (equations only)
};

struct Plan {
  FcCq normalized;
  std::vector<std::string> trace;
  JoinTree weak;
  TwoFcCq query;
  std::vector<PlanNode> nodes;
  JoinTree tree;  // node i describes nodes[i]; universe variable omitted
};

struct PlanResult {
  bool acyclic = false;
  std::optional<Plan> plan;
  std::string stage;   // where a cyclic query was rejected
  std::string reason;
  NormalizedQuery normalized;
};

struct PlanOptions {
  bool prefactor = false;
};

inline PlanResult plan(const FcCq& input, PlanOptions opts = {}) {
  PlanResult res;
  res.normalized = normalize(opts.prefactor ? prefactor(input) : input);
  const FcCq& nq = res.normalized.query;
  auto weak = weak_join_tree(nq);
  auto check = cyclicity_prechecks(nq, weak);
  if (!check.ok()) {
    res.stage = "precheck " + std::to_string(check.rule);
    res.reason = check.message;
    return res;
  }
  auto sets = atom_var_sets(nq);
  const std::size_t m = nq.equations.size();

  std::vector<PairSet> pairs(m);
  for (auto [a, b] : weak->edges) {
    auto s = shared_vars(sets[a], sets[b]);
    if (s.size() != 2) continue;
    auto p = make_pair_key(*s.begin(), *s.rbegin());
    pairs[a].insert(p);
    pairs[b].insert(p);
  }

  Plan p;
  p.normalized = nq;
  p.trace = res.normalized.trace;
  p.weak = *weak;
  p.query.vars = nq.vars;
  p.query.head = nq.head;
  p.query.constraints = nq.constraints;

  std::vector<std::vector<std::size_t>> members(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& e = nq.equations[i];
    auto b = atom_bracketing_with_constraints(e.lhs, terminal_free_vars(e.rhs), pairs[i]);
    if (!b) {
      res.stage = "atom decomposition";
      res.reason = "no acyclic decomposition of " + plan_detail::eq_text(e, nq.vars);
      if (!pairs[i].empty()) {
        res.reason += " keeps together";
        for (auto [x, y] : pairs[i]) res.reason += " {" + nq.vars.name(x) + "," + nq.vars.name(y) + "}";
      }
      return res;
    }
    auto d = decompose_into(*b, e.lhs, p.query.vars);
    p.query.introduced.insert(d.introduced.begin(), d.introduced.end());
    std::size_t base = p.query.equations.size();
    for (const auto& ve : d.equations) {
      members[i].push_back(p.nodes.size());
      p.nodes.push_back({true, p.query.equations.size(), i});
      p.query.equations.push_back(ve);
      std::set<VarId> s(ve.rhs.begin(), ve.rhs.end());
      s.insert(ve.lhs);
      s.erase(kUniverse);
      p.tree.node_vars.push_back(s);
    }
    auto sub = gyo(equation_var_sets(d.equations));
    if (!sub) throw Error("internal: atom decomposition is not acyclic");
    for (auto [a, c] : sub->edges) p.tree.edges.emplace_back(base + a, base + c);
  }

  // connect atom subtrees along the weak join tree
  for (auto [a, b] : weak->edges) {
    auto s = shared_vars(sets[a], sets[b]);
    auto pick = [&](std::size_t atom) -> std::size_t {
      for (auto n : members[atom])
        if (std::includes(p.tree.node_vars[n].begin(), p.tree.node_vars[n].end(), s.begin(), s.end())) return n;
      throw Error("internal: no node of an atom holds the shared variables");
    };
    p.tree.edges.emplace_back(pick(a), pick(b));
  }

  // constraints hang off any node holding their variable
  std::map<VarId, std::size_t> first_holder;
  for (std::size_t n = 0; n < p.tree.node_vars.size(); ++n)
    for (VarId v : p.tree.node_vars[n]) first_holder.try_emplace(v, n);
  for (std::size_t c = 0; c < nq.constraints.size(); ++c) {
    VarId v = nq.constraints[c].var;
    std::size_t id = p.nodes.size();
    p.nodes.push_back({false, c, 0});
    p.tree.node_vars.push_back(v == kUniverse ? std::set<VarId>{} : std::set<VarId>{v});
    if (id == 0) {
      if (v != kUniverse) first_holder.emplace(v, 0);
      continue;
    }
    auto it = v == kUniverse ? first_holder.end() : first_holder.find(v);
    if (it == first_holder.end()) {
      p.tree.edges.emplace_back(id, 0);
      if (v != kUniverse) first_holder.emplace(v, id);
    } else {
      p.tree.edges.emplace_back(id, it->second);
    }
  }

  if (!verify_join_tree(p.tree)) throw Error("internal: assembled plan is not a join tree");
  res.acyclic = true;
  res.plan = std::move(p);
  return res;
}

// Contract the plan tree by source atom.
inline JoinTree skeleton_of(const Plan& p) {
  JoinTree t;
  t.node_vars = atom_var_sets(p.normalized);
  for (auto& s : t.node_vars) s.erase(kUniverse);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto [a, b] : p.tree.edges) {
    if (!p.nodes[a].is_equation || !p.nodes[b].is_equation) continue;
    std::size_t x = p.nodes[a].atom, y = p.nodes[b].atom;
    if (x == y) continue;
    if (seen.insert({std::min(x, y), std::max(x, y)}).second) t.edges.emplace_back(x, y);
  }
  return t;
}

inline std::string format_plan_node(const Plan& p, std::size_t n) {
  const auto& node = p.nodes[n];
  if (node.is_equation) return format_equation(p.query.equations[node.index], p.query.vars);
  const auto& c = p.query.constraints[node.index];
  return p.query.vars.name(c.var) + " in /" + print_regex(c.regex) + "/";
}

inline std::string explain(const PlanResult& r) {
  const auto& nq = r.normalized.query;
  std::string out = "normalized:\n";
  for (const auto& e : nq.equations) out += "  " + plan_detail::eq_text(e, nq.vars) + "\n";
  for (const auto& c : nq.constraints) out += "  " + nq.vars.name(c.var) + " in /" + print_regex(c.regex) + "/\n";
  if (!r.normalized.trace.empty()) {
    out += "rewrites:\n";
    for (const auto& t : r.normalized.trace) out += "  step " + t + "\n";
  }
  if (!r.acyclic) return out + "cyclic (" + r.stage + "): " + r.reason + "\n";
  const Plan& p = *r.plan;
  out += "weak join tree:\n";
  for (auto [a, b] : p.weak.edges)
    out += "  [" + std::to_string(a) + "] - [" + std::to_string(b) + "] shared " +
           plan_detail::names(shared_vars(atom_var_sets(nq)[a], atom_var_sets(nq)[b]), nq.vars) + "\n";
  out += "plan:\n";
  for (std::size_t n = 0; n < p.nodes.size(); ++n) {
    out += "  " + std::to_string(n) + ": " + format_plan_node(p, n);
    if (p.nodes[n].is_equation) out += "   (atom " + std::to_string(p.nodes[n].atom) + ")";
    out += "\n";
  }
  out += "edges:\n";
  for (auto [a, b] : p.tree.edges) {
    std::set<VarId> s;
    for (VarId v : p.tree.node_vars[a])
      if (p.tree.node_vars[b].count(v)) s.insert(v);
    out += "  " + std::to_string(a) + " - " + std::to_string(b) + " " + plan_detail::names(s, p.query.vars) + "\n";
  }
  return out;
}

}  // namespace fcq
