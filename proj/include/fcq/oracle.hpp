#pragma once

// Brute-force reference semantics.  Nothing here touches the planner, the
// decomposer or the word index; only the shared model types, GYO and the NFA.

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fcq/gyo.hpp"
#include "fcq/model.hpp"
#include "fcq/regex.hpp"
#include "fcq/sercq.hpp"

namespace fcq {

// Head assignments as words, in head order.
using WordTuples = std::set<std::vector<std::string>>;

namespace oracle_detail {

inline std::set<std::string> factors(const std::string& w) {
  std::set<std::string> out{""};
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = i + 1; j <= w.size(); ++j) out.insert(w.substr(i, j - i));
  return out;
}

struct Search {
  const FcCq& q;
  const std::string& w;
  std::set<std::string> universe;
  std::vector<Nfa> nfas;
  std::map<VarId, std::string> sigma;
  std::vector<bool> done;
  std::vector<VarId> free_vars;  // vars occurring in no equation
  WordTuples out;
  bool stop_at_first = false;

  Search(const FcCq& query, const std::string& word) : q(query), w(word), universe(factors(word)) {
    for (const auto& c : q.constraints) nfas.push_back(Nfa::compile(c.regex));
    done.assign(q.equations.size(), false);
    sigma[kUniverse] = w;
    std::set<VarId> in_eq{kUniverse};
    for (const auto& e : q.equations) {
      in_eq.insert(e.lhs);
      for (const Term& t : e.rhs)
        if (t.is_var) in_eq.insert(t.var);
    }
    for (VarId v : q.all_vars())
      if (!in_eq.count(v)) free_vars.push_back(v);
  }

  bool finished() const { return stop_at_first && !out.empty(); }

  // Match rhs[k..] against target[pos..], binding fresh variables.
  void match(const Pattern& rhs, std::size_t k, const std::string& target, std::size_t pos,
             const std::function<void()>& next) {
    if (finished()) return;
    if (k == rhs.size()) {
      if (pos == target.size()) next();
      return;
    }
    const Term& t = rhs[k];
    if (!t.is_var) {
      if (pos < target.size() && target[pos] == t.symbol) match(rhs, k + 1, target, pos + 1, next);
      return;
    }
    auto it = sigma.find(t.var);
    if (it != sigma.end()) {
      const std::string& v = it->second;
      if (target.compare(pos, v.size(), v) == 0 && pos + v.size() <= target.size())
        match(rhs, k + 1, target, pos + v.size(), next);
      return;
    }
    for (std::size_t len = 0; pos + len <= target.size(); ++len) {
      sigma[t.var] = target.substr(pos, len);
      match(rhs, k + 1, target, pos + len, next);
      sigma.erase(t.var);
      if (finished()) return;
    }
  }

  void solve_equations() {
    if (finished()) return;
    // prefer an equation whose lhs is already bound
    int pick = -1;
    for (std::size_t i = 0; i < q.equations.size(); ++i)
      if (!done[i] && sigma.count(q.equations[i].lhs)) {
        pick = static_cast<int>(i);
        break;
      }
    if (pick < 0)
      for (std::size_t i = 0; i < q.equations.size(); ++i)
        if (!done[i]) {
          pick = static_cast<int>(i);
          break;
        }
    if (pick < 0) {
      assign_free(0);
      return;
    }
    const auto& eq = q.equations[pick];
    done[pick] = true;
    auto with_lhs = [&](const std::string& value) {
      match(eq.rhs, 0, value, 0, [&] { solve_equations(); });
    };
    if (sigma.count(eq.lhs)) {
      std::string value = sigma[eq.lhs];
      with_lhs(value);
    } else {
      for (const auto& f : universe) {
        sigma[eq.lhs] = f;
        with_lhs(f);
        sigma.erase(eq.lhs);
        if (finished()) break;
      }
    }
    done[pick] = false;
  }

  void assign_free(std::size_t i) {
    if (finished()) return;
    if (i == free_vars.size()) {
      check_and_record();
      return;
    }
    for (const auto& f : universe) {
      sigma[free_vars[i]] = f;
      assign_free(i + 1);
      if (finished()) break;
    }
    sigma.erase(free_vars[i]);
  }

  void check_and_record() {
    for (std::size_t i = 0; i < q.constraints.size(); ++i)
      if (!nfas[i].accepts(sigma.at(q.constraints[i].var))) return;
    std::vector<std::string> row;
    for (VarId h : q.head) row.push_back(sigma.at(h));
    out.insert(std::move(row));
  }
};

}  // namespace oracle_detail

// Every substitution over factors of w (universe bound to w) that satisfies
// all atoms, projected to the head.
inline WordTuples brute_evaluate(const FcCq& q, const std::string& w) {
  oracle_detail::Search s(q, w);
  s.solve_equations();
  return s.out;
}

inline bool brute_model_check(const FcCq& q, const std::string& w) {
  oracle_detail::Search s(q, w);
  s.stop_at_first = true;
  s.solve_equations();
  return !s.out.empty();
}

inline bool brute_pattern_member(const Pattern& alpha, const std::string& w, bool erasing) {
  std::map<VarId, std::string> sigma;
  std::function<bool(std::size_t, std::size_t)> go = [&](std::size_t k, std::size_t pos) -> bool {
    if (k == alpha.size()) return pos == w.size();
    const Term& t = alpha[k];
    if (!t.is_var) return pos < w.size() && w[pos] == t.symbol && go(k + 1, pos + 1);
    if (auto it = sigma.find(t.var); it != sigma.end())
      return w.compare(pos, it->second.size(), it->second) == 0 && pos + it->second.size() <= w.size() &&
             go(k + 1, pos + it->second.size());
    for (std::size_t len = erasing ? 0 : 1; pos + len <= w.size(); ++len) {
      sigma[t.var] = w.substr(pos, len);
      if (go(k + 1, pos + len)) return true;
    }
    sigma.erase(t.var);
    return false;
  };
  return go(0, 0);
}

// ---- bracketings ----

// All binary bracketings of a variable sequence.
inline std::vector<Bracketing> all_bracketings(const std::vector<VarId>& xs) {
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Bracketing>> memo;
  std::function<const std::vector<Bracketing>&(std::size_t, std::size_t)> go =
      [&](std::size_t i, std::size_t j) -> const std::vector<Bracketing>& {
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::vector<Bracketing> out;
    if (i == j) {
      out.push_back(Bracketing::var(xs[i]));
    } else {
      for (std::size_t m = i; m < j; ++m)
        for (const auto& l : go(i, m))
          for (const auto& r : go(m + 1, j)) out.push_back(Bracketing::node({l, r}));
    }
    return memo[key] = std::move(out);
  };
  if (xs.empty()) return {};
  return go(0, xs.size() - 1);
}

// All k-ary bracketings (every inner node has 2..k children).
inline std::vector<Bracketing> all_k_bracketings(const std::vector<VarId>& xs, std::size_t k) {
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Bracketing>> memo;
  std::function<const std::vector<Bracketing>&(std::size_t, std::size_t)> go =
      [&](std::size_t i, std::size_t j) -> const std::vector<Bracketing>& {
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::vector<Bracketing> out;
    if (i == j) {
      out.push_back(Bracketing::var(xs[i]));
    } else {
      // split [i, j] into 2..k contiguous non-empty parts
      std::vector<Bracketing> parts;
      std::function<void(std::size_t)> split = [&](std::size_t from) {
        if (from > j) {
          if (parts.size() >= 2) out.push_back(Bracketing::node(parts));
          return;
        }
        if (parts.size() == k) return;
        for (std::size_t to = from; to <= j; ++to) {
          if (from == i && to == j) continue;
          for (const auto& b : go(from, to)) {
            parts.push_back(b);
            split(to + 1);
            parts.pop_back();
          }
        }
      };
      split(i);
    }
    return memo[key] = std::move(out);
  };
  if (xs.empty()) return {};
  return go(0, xs.size() - 1);
}

// Atoms (as variable sets) of the decomposition of b, written from scratch:
// equal sub-bracketings share a name, the whole bracketing is named by root.
inline std::vector<std::set<VarId>> brute_decomposition_atoms(const Bracketing& b, VarId root, VarId first_fresh) {
  std::map<Bracketing, VarId> names;
  std::vector<std::set<VarId>> atoms;
  VarId next = first_fresh;
  std::function<VarId(const Bracketing&, bool)> name = [&](const Bracketing& t, bool is_root) -> VarId {
    if (t.is_leaf()) return t.leaf;
    if (!is_root)
      if (auto it = names.find(t); it != names.end()) return it->second;
    std::set<VarId> atom;
    for (const auto& c : t.children) atom.insert(name(c, false));
    VarId me = is_root ? root : next++;
    atom.insert(me);
    atoms.push_back(atom);
    if (!is_root) names[t] = me;
    return me;
  };
  if (b.is_leaf()) return {{root, b.leaf}};
  name(b, true);
  return atoms;
}

inline bool brute_bracketing_acyclic(const Bracketing& b) {
  VarId top = 0;
  for (VarId v : b.flatten()) top = std::max(top, v);
  return gyo(brute_decomposition_atoms(b, kUniverse, top + 1)).has_value();
}

class TooLarge : public Error {
 public:
  using Error::Error;
};

inline bool brute_acyclic(const std::vector<VarId>& alpha) {
  if (alpha.size() > 11) throw TooLarge("pattern too long for exhaustive bracketing search");
  for (const auto& b : all_bracketings(alpha))
    if (brute_bracketing_acyclic(b)) return true;
  return false;
}

// ---- spanners ----

// Spans are 1-based half-open, like the rest of the engine.
using SpanTuple = std::map<std::string, std::pair<std::size_t, std::size_t>>;
using SpanRelation = std::set<SpanTuple>;

namespace oracle_detail {

// NFA over bytes plus open/close markers (256 + 2i, 257 + 2i).
inline Nfa::Fragment formula_fragment(Nfa& n, const Formula& f, const std::vector<std::string>& vars) {
  using K = FormulaNode::Kind;
  switch (f->kind) {
    case K::Empty: return n.empty_fragment();
    case K::Epsilon: return n.epsilon_fragment();
    case K::Literal: return n.symbol_fragment(static_cast<unsigned char>(f->symbol));
    case K::Union: return n.alternative(formula_fragment(n, f->left, vars), formula_fragment(n, f->right, vars));
    case K::Concat: return n.concat(formula_fragment(n, f->left, vars), formula_fragment(n, f->right, vars));
    case K::Star: return n.kleene(formula_fragment(n, f->left, vars));
    case K::Bind: {
      int idx = static_cast<int>(std::find(vars.begin(), vars.end(), f->var) - vars.begin());
      auto open = n.symbol_fragment(256 + 2 * idx);
      auto body = formula_fragment(n, f->left, vars);
      auto close = n.symbol_fragment(257 + 2 * idx);
      return n.concat(n.concat(open, body), close);
    }
  }
  return n.empty_fragment();
}

// All span assignments of one formula on w: place every marker pair, then
// run the marked word through the NFA, allowing the markers that share a
// position to be read in any valid order.
inline SpanRelation formula_spans(const Formula& f, const std::string& w) {
  auto vars = formula_vars(f);
  Nfa nfa;
  nfa.set_entry(formula_fragment(nfa, f, vars));
  const std::size_t n = w.size(), m = vars.size();
  std::vector<std::pair<std::size_t, std::size_t>> spans(m);
  SpanRelation out;

  auto run = [&]() {
    // markers at each position 0..n
    std::vector<std::vector<int>> at(n + 1);
    for (std::size_t i = 0; i < m; ++i) {
      at[spans[i].first].push_back(256 + 2 * static_cast<int>(i));
      at[spans[i].second].push_back(257 + 2 * static_cast<int>(i));
    }
    auto cur = nfa.initial();
    for (std::size_t p = 0; p <= n; ++p) {
      const auto& ms = at[p];
      if (!ms.empty()) {
        // subsets of markers consumed so far; a close needs its open first
        std::size_t full = (std::size_t{1} << ms.size()) - 1;
        std::vector<Nfa::StateSet> by_mask(full + 1);
        std::vector<bool> reached(full + 1, false);
        by_mask[0] = cur;
        reached[0] = true;
        for (std::size_t mask = 0; mask <= full; ++mask) {
          if (!reached[mask]) continue;
          for (std::size_t b = 0; b < ms.size(); ++b) {
            if (mask & (std::size_t{1} << b)) continue;
            int sym = ms[b];
            if (sym % 2 == 1) {
              bool open_here = false, open_done = false;
              for (std::size_t c = 0; c < ms.size(); ++c)
                if (ms[c] == sym - 1) {
                  open_here = true;
                  open_done = mask & (std::size_t{1} << c);
                }
              if (open_here && !open_done) continue;
            }
            auto nxt = nfa.step(by_mask[mask], sym);
            std::size_t to = mask | (std::size_t{1} << b);
            if (!reached[to]) {
              by_mask[to] = nxt;
              reached[to] = true;
            } else {
              for (int q : nxt.list) nfa.add_closed(by_mask[to], q);
            }
          }
        }
        cur = by_mask[full];
      }
      if (cur.empty()) return;
      if (p < n) cur = nfa.step(cur, static_cast<unsigned char>(w[p]));
    }
    if (!nfa.accepting(cur)) return;
    SpanTuple t;
    for (std::size_t i = 0; i < m; ++i) t[vars[i]] = {spans[i].first + 1, spans[i].second + 1};
    out.insert(std::move(t));
  };

  std::function<void(std::size_t)> place = [&](std::size_t i) {
    if (i == m) {
      run();
      return;
    }
    for (std::size_t a = 0; a <= n; ++a)
      for (std::size_t b = a; b <= n; ++b) {
        spans[i] = {a, b};
        place(i + 1);
      }
  };
  place(0);
  return out;
}

}  // namespace oracle_detail

inline SpanRelation brute_sercq_evaluate(const SercqAst& p, const std::string& w) {
  auto content = [&](std::pair<std::size_t, std::size_t> s) { return w.substr(s.first - 1, s.second - s.first); };
  // equality selections commute with the join, so each is applied as soon as
  // both of its variables are bound
  auto consistent = [&](const SpanTuple& t) {
    for (const auto& [x, y] : p.equalities) {
      auto a = t.find(x), b = t.find(y);
      if (a != t.end() && b != t.end() && content(a->second) != content(b->second)) return false;
    }
    return true;
  };
  SpanRelation acc{SpanTuple{}};
  for (const auto& f : p.formulas) {
    SpanRelation rel = oracle_detail::formula_spans(f, w), joined;
    for (const auto& a : acc)
      for (const auto& b : rel) {
        bool ok = true;
        for (const auto& [x, s] : b)
          if (auto it = a.find(x); it != a.end() && it->second != s) {
            ok = false;
            break;
          }
        if (!ok) continue;
        SpanTuple t = a;
        t.insert(b.begin(), b.end());
        if (consistent(t)) joined.insert(std::move(t));
      }
    acc = std::move(joined);
  }
  SpanRelation out;
  for (const auto& t : acc) {
    if (!consistent(t)) continue;
    SpanTuple proj;
    for (const auto& y : p.projection) proj[y] = t.at(y);
    out.insert(std::move(proj));
  }
  return out;
}

}  // namespace fcq
