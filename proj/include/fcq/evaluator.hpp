#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fcq/model.hpp"
#include "fcq/oracle.hpp"
#include "fcq/planner.hpp"
#include "fcq/regex.hpp"
#include "fcq/word_index.hpp"

namespace fcq {

class HasConstraints : public Error {
 public:
  using Error::Error;
};

struct KeyHash {
  std::size_t operator()(const std::vector<FactorId>& k) const {
    std::size_t h = k.size();
    for (FactorId x : k) h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

// Rows stored flat.  Arity-0 relations are either empty or hold the empty row.
class Relation {
 public:
  Relation() = default;
  explicit Relation(std::vector<VarId> schema) : schema_(std::move(schema)) {}

  const std::vector<VarId>& schema() const { return schema_; }
  std::size_t arity() const { return schema_.size(); }
  std::size_t size() const { return rows_; }
  bool empty() const { return rows_ == 0; }
  const FactorId* row(std::size_t i) const { return data_.data() + i * arity(); }
  std::vector<FactorId> row_vec(std::size_t i) const { return {row(i), row(i) + arity()}; }

  void add(const FactorId* r) {
    data_.insert(data_.end(), r, r + arity());
    ++rows_;
  }
  void add(const std::vector<FactorId>& r) { add(r.data()); }

  // sort rows and drop duplicates
  void canonicalize() {
    const std::size_t a = arity();
    if (a == 0) {
      rows_ = std::min<std::size_t>(rows_, 1);
      return;
    }
    std::vector<std::size_t> idx(rows_);
    std::iota(idx.begin(), idx.end(), 0);
    auto less = [&](std::size_t x, std::size_t y) {
      return std::lexicographical_compare(row(x), row(x) + a, row(y), row(y) + a);
    };
    std::sort(idx.begin(), idx.end(), less);
    std::vector<FactorId> out;
    out.reserve(data_.size());
    std::size_t n = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (k && std::equal(row(idx[k]), row(idx[k]) + a, row(idx[k - 1]))) continue;
      out.insert(out.end(), row(idx[k]), row(idx[k]) + a);
      ++n;
    }
    data_ = std::move(out);
    rows_ = n;
  }

  int column(VarId v) const {
    for (std::size_t i = 0; i < schema_.size(); ++i)
      if (schema_[i] == v) return static_cast<int>(i);
    return -1;
  }

  std::set<std::vector<FactorId>> as_set() const {
    std::set<std::vector<FactorId>> out;
    for (std::size_t i = 0; i < rows_; ++i) out.insert(row_vec(i));
    return out;
  }

 private:
  std::vector<VarId> schema_;
  std::vector<FactorId> data_;
  std::size_t rows_ = 0;
};

// Rows of r whose projection onto the shared variables appears in s.
inline Relation semijoin(const Relation& r, const Relation& s) {
  std::vector<int> rc, sc;
  for (std::size_t i = 0; i < r.arity(); ++i) {
    int j = s.column(r.schema()[i]);
    if (j >= 0) {
      rc.push_back(static_cast<int>(i));
      sc.push_back(j);
    }
  }
  Relation out(r.schema());
  if (s.empty()) return out;
  std::unordered_set<std::vector<FactorId>, KeyHash> keys;
  std::vector<FactorId> k(sc.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t c = 0; c < sc.size(); ++c) k[c] = s.row(i)[sc[c]];
    keys.insert(k);
  }
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t c = 0; c < rc.size(); ++c) k[c] = r.row(i)[rc[c]];
    if (keys.count(k)) out.add(r.row(i));
  }
  return out;
}

namespace eval_detail {

inline std::vector<VarId> schema_of(const VarEquation& e) {
  std::vector<VarId> s;
  auto add = [&](VarId v) {
    if (v != kUniverse && std::find(s.begin(), s.end(), v) == s.end()) s.push_back(v);
  };
  add(e.lhs);
  for (VarId v : e.rhs) add(v);
  return s;
}

using Env = std::unordered_map<VarId, FactorId>;
using Masks = std::unordered_map<VarId, std::vector<char>>;

// All (lhs, rhs...) value tuples of z = x.y or z = x consistent with env.
template <class Emit>
void equation_rows(const WordIndex& ix, const VarEquation& e, const Env& env, Emit&& emit) {
  auto val = [&](VarId v) -> std::optional<FactorId> {
    if (v == kUniverse) return ix.whole();
    if (auto it = env.find(v); it != env.end()) return it->second;
    return std::nullopt;
  };
  const std::size_t n = ix.size();
  if (e.rhs.size() == 1) {
    auto z = val(e.lhs), x = val(e.rhs[0]);
    if (z && x) {
      if (*z == *x) emit(*z, *x, *x);
    } else if (z || x) {
      FactorId v = z ? *z : *x;
      emit(v, v, v);
    } else {
      for (FactorId f = 0; f < ix.factor_count(); ++f) emit(f, f, f);
    }
    return;
  }
  if (e.rhs.size() != 2) throw Error("internal: equation of arity " + std::to_string(e.rhs.size()) + " in plan");
  auto z = val(e.lhs), x = val(e.rhs[0]), y = val(e.rhs[1]);
  auto splits = [&](FactorId zz) {
    std::size_t s = ix.start_of(zz), l = ix.length(zz);
    for (std::size_t k = 0; k <= l; ++k) emit(zz, ix.id_at(s, k), ix.id_at(s + k, l - k));
  };
  if (z) {
    splits(*z);
  } else if (x && y) {
    if (auto c = ix.concat_id(*x, *y)) emit(*c, *x, *y);
  } else if (x) {
    std::size_t lx = ix.length(*x);
    auto [first, last] = ix.occurrences(*x);
    for (auto p = first; p != last; ++p)
      for (std::size_t end = *p + lx; end <= n; ++end) emit(ix.id_at(*p, end - *p), *x, ix.id_at(*p + lx, end - *p - lx));
  } else if (y) {
    std::size_t ly = ix.length(*y);
    auto [first, last] = ix.occurrences(*y);
    for (auto p = first; p != last; ++p)
      for (std::size_t b = 0; b <= *p; ++b) emit(ix.id_at(b, *p - b + ly), ix.id_at(b, *p - b), *y);
  } else {
    for (FactorId f = 0; f < ix.factor_count(); ++f) splits(f);
  }
}

}  // namespace eval_detail

// Standalone relation of one decomposed equation (universe bound to w).
inline Relation materialize(const WordIndex& ix, const VarEquation& e) {
  Relation r(eval_detail::schema_of(e));
  std::vector<FactorId> row(r.arity());
  eval_detail::equation_rows(ix, e, {}, [&](FactorId z, FactorId x, FactorId y) {
    std::map<VarId, FactorId> a;
    FactorId vals[3] = {z, x, y};
    VarId names[3] = {e.lhs, e.rhs[0], e.rhs.size() > 1 ? e.rhs[1] : e.rhs[0]};
    for (int i = 0; i < 3; ++i) {
      if (names[i] == kUniverse && vals[i] != ix.whole()) return;
      auto [it, fresh] = a.emplace(names[i], vals[i]);
      if (!fresh && it->second != vals[i]) return;
    }
    for (std::size_t c = 0; c < r.arity(); ++c) row[c] = a[r.schema()[c]];
    r.add(row);
  });
  r.canonicalize();
  return r;
}

inline Relation materialize(const WordIndex& ix, const RegularConstraint& c) {
  auto mask = ix.regex_mask(c.regex);
  if (c.var == kUniverse) {
    Relation r{std::vector<VarId>{}};
    if (mask[ix.whole()]) r.add(std::vector<FactorId>{});
    return r;
  }
  Relation r({c.var});
  for (FactorId f = 0; f < mask.size(); ++f)
    if (mask[f]) r.add(&f);
  return r;
}

using ResultTuple = std::map<VarId, FactorId>;

// One plan evaluated on one word: materialize, fully reduce, enumerate.
class Evaluation {
 public:
  Evaluation(const Plan& p, const WordIndex& ix) : p_(p), ix_(ix) {
    const std::size_t n = p.nodes.size();
    rel_.resize(n);
    if (n == 0) return;
    build_masks();
    order_tree();
    if (!dead_) materialize_all();
    if (dead_) {
      for (std::size_t i = 0; i < n; ++i) rel_[i] = Relation(rel_[i].schema());
      return;
    }
    reduce();
  }

  bool satisfiable() const { return p_.nodes.empty() || !rel_[root_].empty(); }
  const Relation& relation(std::size_t node) const { return rel_[node]; }
  std::size_t root() const { return root_; }

  // Calls f for each distinct head assignment until f returns false.
  std::size_t enumerate(const std::function<bool(const ResultTuple&)>& f) const {
    if (!satisfiable()) return 0;
    const auto& head = p_.query.head;
    std::size_t emitted = 0;
    if (p_.nodes.empty() || head.empty()) {
      f(ResultTuple{});
      return 1;
    }
    build_indexes();
    std::unordered_map<VarId, FactorId> val;
    std::unordered_set<std::vector<FactorId>, KeyHash> seen;
    std::size_t head_bound = 0;
    std::set<VarId> head_set(head.begin(), head.end());
    bool stop = false;
    std::function<void(std::size_t)> rec = [&](std::size_t pos) {
      if (stop) return;
      if (head_bound == head_set.size() || pos == order_.size()) {
        std::vector<FactorId> key;
        for (VarId h : head) key.push_back(val.at(h));
        if (!seen.insert(key).second) return;
        ResultTuple t;
        for (VarId h : head) t[h] = val.at(h);
        ++emitted;
        if (!f(t)) stop = true;
        return;
      }
      std::size_t node = order_[pos];
      const Relation& r = rel_[node];
      const std::vector<std::uint32_t>* rows = nullptr;
      std::vector<std::uint32_t> all;
      if (node == root_) {
        all.resize(r.size());
        std::iota(all.begin(), all.end(), 0);
        rows = &all;
      } else {
        std::vector<FactorId> key;
        for (VarId v : link_[node]) key.push_back(val.at(v));
        auto it = index_[node].find(key);
        if (it == index_[node].end()) return;
        rows = &it->second;
      }
      for (auto ri : *rows) {
        std::vector<VarId> added;
        for (std::size_t c = 0; c < r.arity(); ++c) {
          VarId v = r.schema()[c];
          if (val.count(v)) continue;
          val[v] = r.row(ri)[c];
          added.push_back(v);
          if (head_set.count(v)) ++head_bound;
        }
        rec(pos + 1);
        for (VarId v : added) {
          if (head_set.count(v)) --head_bound;
          val.erase(v);
        }
        if (stop) return;
      }
    };
    rec(0);
    return emitted;
  }

 private:
  void build_masks() {
    for (const auto& c : p_.query.constraints) {
      auto m = ix_.regex_mask(c.regex);
      if (c.var == kUniverse) {
        if (!m[ix_.whole()]) dead_ = true;
        continue;
      }
      auto [it, fresh] = masks_.emplace(c.var, m);
      if (!fresh)
        for (std::size_t i = 0; i < m.size(); ++i) it->second[i] &= m[i];
    }
    for (auto& [v, m] : masks_) {
      std::size_t count = 0;
      FactorId only = 0;
      for (FactorId i = 0; i < m.size(); ++i)
        if (m[i]) ++count, only = i;
      if (count == 0) dead_ = true;
      if (count == 1) fixed_[v] = only;
    }
  }

  bool allowed(VarId v, FactorId f) const {
    auto it = masks_.find(v);
    return it == masks_.end() || it->second[f];
  }

  void order_tree() {
    const std::size_t n = p_.nodes.size();
    root_ = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (p_.nodes[i].is_equation && p_.query.equations[p_.nodes[i].index].lhs == kUniverse) {
        root_ = i;
        break;
      }
    auto adj = p_.tree.adjacency();
    parent_.assign(n, n);
    std::vector<char> seen(n, 0);
    order_ = {root_};
    seen[root_] = 1;
    for (std::size_t k = 0; k < order_.size(); ++k)
      for (auto c : adj[order_[k]])
        if (!seen[c]) {
          seen[c] = 1;
          parent_[c] = order_[k];
          order_.push_back(c);
        }
    if (order_.size() != n) throw Error("internal: plan tree is disconnected");
  }

  std::vector<VarId> schema(std::size_t node) const {
    const auto& pn = p_.nodes[node];
    if (pn.is_equation) return eval_detail::schema_of(p_.query.equations[pn.index]);
    VarId v = p_.query.constraints[pn.index].var;
    if (v == kUniverse) return {};
    return {v};
  }

  Relation materialize_node(std::size_t node, const eval_detail::Env& env) const {
    const auto& pn = p_.nodes[node];
    Relation r(schema(node));
    std::vector<FactorId> row(r.arity());
    if (!pn.is_equation) {
      const auto& c = p_.query.constraints[pn.index];
      if (c.var == kUniverse) {
        r.add(row);  // already checked
        return r;
      }
      if (auto it = env.find(c.var); it != env.end()) {
        if (allowed(c.var, it->second)) r.add(&it->second);
        return r;
      }
      const auto& m = masks_.at(c.var);
      for (FactorId f = 0; f < m.size(); ++f)
        if (m[f]) r.add(&f);
      return r;
    }
    const auto& e = p_.query.equations[pn.index];
    VarId names[3] = {e.lhs, e.rhs[0], e.rhs.size() > 1 ? e.rhs[1] : e.rhs[0]};
    eval_detail::equation_rows(ix_, e, env, [&](FactorId z, FactorId x, FactorId y) {
      FactorId vals[3] = {z, x, y};
      for (int i = 0; i < 3; ++i) {
        VarId v = names[i];
        if (v == kUniverse) {
          if (vals[i] != ix_.whole()) return;
          continue;
        }
        if (auto it = env.find(v); it != env.end() && it->second != vals[i]) return;
        if (!allowed(v, vals[i])) return;
        for (int j = 0; j < i; ++j)
          if (names[j] == v && vals[j] != vals[i]) return;
      }
      for (std::size_t c = 0; c < r.arity(); ++c)
        for (int i = 0; i < 3; ++i)
          if (names[i] == r.schema()[c]) row[c] = vals[i];
      r.add(row);
    });
    return r;
  }

  // Top-down: each child is generated only for the distinct values its
  // parent offers on the shared variables.
  void materialize_all() {
    for (std::size_t node : order_) {
      auto sch = schema(node);
      if (node == root_) {
        eval_detail::Env env(fixed_.begin(), fixed_.end());
        rel_[node] = materialize_node(node, env);
      } else {
        const Relation& pr = rel_[parent_[node]];
        std::vector<int> pc;
        std::vector<VarId> link;
        for (VarId v : sch)
          if (int c = pr.column(v); c >= 0) {
            pc.push_back(c);
            link.push_back(v);
          }
        Relation out(sch);
        std::unordered_set<std::vector<FactorId>, KeyHash> keys;
        std::vector<FactorId> k(pc.size());
        for (std::size_t i = 0; i < pr.size(); ++i) {
          for (std::size_t c = 0; c < pc.size(); ++c) k[c] = pr.row(i)[pc[c]];
          keys.insert(k);
        }
        for (const auto& key : keys) {
          eval_detail::Env env(fixed_.begin(), fixed_.end());
          for (std::size_t c = 0; c < link.size(); ++c) env[link[c]] = key[c];
          Relation part = materialize_node(node, env);
          for (std::size_t i = 0; i < part.size(); ++i) out.add(part.row(i));
        }
        rel_[node] = std::move(out);
      }
      rel_[node].canonicalize();
      if (rel_[node].empty()) {
        dead_ = true;
        return;
      }
    }
  }

  void reduce() {
    for (std::size_t k = order_.size(); k-- > 1;) {
      std::size_t c = order_[k];
      rel_[parent_[c]] = semijoin(rel_[parent_[c]], rel_[c]);
    }
    for (std::size_t k = 1; k < order_.size(); ++k) {
      std::size_t c = order_[k];
      rel_[c] = semijoin(rel_[c], rel_[parent_[c]]);
    }
  }

  void build_indexes() const {
    if (!index_.empty()) return;
    const std::size_t n = order_.size();
    index_.resize(n);
    link_.resize(n);
    for (std::size_t node : order_) {
      if (node == root_) continue;
      const Relation& r = rel_[node];
      const Relation& pr = rel_[parent_[node]];
      std::vector<int> cols;
      for (std::size_t c = 0; c < r.arity(); ++c)
        if (pr.column(r.schema()[c]) >= 0) {
          cols.push_back(static_cast<int>(c));
          link_[node].push_back(r.schema()[c]);
        }
      std::vector<FactorId> k(cols.size());
      for (std::uint32_t i = 0; i < r.size(); ++i) {
        for (std::size_t c = 0; c < cols.size(); ++c) k[c] = r.row(i)[cols[c]];
        index_[node][k].push_back(i);
      }
    }
  }

  const Plan& p_;
  const WordIndex& ix_;
  std::vector<Relation> rel_;
  std::vector<std::size_t> order_, parent_;
  std::size_t root_ = 0;
  bool dead_ = false;
  eval_detail::Masks masks_;
  std::map<VarId, FactorId> fixed_;
  mutable std::vector<std::unordered_map<std::vector<FactorId>, std::vector<std::uint32_t>, KeyHash>> index_;
  mutable std::vector<std::vector<VarId>> link_;
};

inline bool model_check(const Plan& p, const WordIndex& ix) { return Evaluation(p, ix).satisfiable(); }

inline std::size_t enumerate(const Plan& p, const WordIndex& ix, const std::function<bool(const ResultTuple&)>& f) {
  return Evaluation(p, ix).enumerate(f);
}

inline std::vector<ResultTuple> enumerate_all(const Plan& p, const WordIndex& ix) {
  std::vector<ResultTuple> out;
  enumerate(p, ix, [&](const ResultTuple& t) {
    out.push_back(t);
    return true;
  });
  return out;
}

// Word-level result set in head order, through the engine when the query
// is acyclic and through the oracle otherwise.
inline WordTuples evaluate_words(const FcCq& q, const std::string& w) {
  auto r = plan(q);
  if (!r.acyclic) return brute_evaluate(q, w);
  WordIndex ix(w);
  WordTuples out;
  enumerate(*r.plan, ix, [&](const ResultTuple& t) {
    std::vector<std::string> row;
    for (VarId h : q.head) row.emplace_back(ix.text(t.at(h)));
    out.insert(row);
    return true;
  });
  return out;
}

inline bool accepts(const FcCq& q, const std::string& w) {
  auto r = plan(q);
  if (!r.acyclic) return brute_model_check(q, w);
  WordIndex ix(w);
  return model_check(*r.plan, ix);
}

// L(q) = all words iff eps and some single letter are in L(q).
inline bool check_universality(const FcCq& q, const Alphabet& sigma) {
  if (!q.constraints.empty()) throw HasConstraints("universality check needs a query without regular constraints");
  if (!accepts(q, "")) return false;
  for (char a : sigma.symbols())
    if (accepts(q, std::string(1, a))) return true;
  return false;
}

// No word up to max_len has more than k results.  Semi-decision only.
inline bool check_k_ambiguous_bounded(const FcCq& q, std::size_t k, std::size_t max_len, const Alphabet& sigma) {
  std::vector<std::string> level{""};
  for (std::size_t len = 0; len <= max_len; ++len) {
    for (const auto& w : level)
      if (evaluate_words(q, w).size() > k) return false;
    if (len == max_len) break;
    std::vector<std::string> next;
    for (const auto& w : level)
      for (char a : sigma.symbols()) next.push_back(w + a);
    level = std::move(next);
  }
  return true;
}

}  // namespace fcq
