#pragma once

// Random generators for property tests.  Everything is driven by a fixed
// seed so failures reproduce.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fcq/fcq.hpp"

namespace gen {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : e_(seed) {}
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(e_); }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(e_); }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

 private:
  std::mt19937_64 e_;
};

inline std::string word(Rng& r, std::size_t max_len, const std::string& sigma = "ab") {
  std::string w;
  for (std::size_t n = r.below(max_len + 1); n > 0; --n) w += sigma[r.below(sigma.size())];
  return w;
}

// All words over sigma up to max_len, shortest first.
inline std::vector<std::string> all_words(std::size_t max_len, const std::string& sigma = "ab") {
  std::vector<std::string> out{""};
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i].size() < max_len)
      for (char c : sigma) out.push_back(out[i] + c);
  return out;
}

// Terminal-free pattern over variable ids 1..vars.
inline std::vector<fcq::VarId> pattern_ids(Rng& r, std::size_t max_len, std::size_t vars) {
  std::vector<fcq::VarId> p(r.between(1, max_len));
  for (auto& v : p) v = static_cast<fcq::VarId>(r.between(1, vars));
  return p;
}

// Every terminal-free pattern over 1..vars of exactly length n.
inline std::vector<std::vector<fcq::VarId>> all_patterns(std::size_t n, std::size_t vars) {
  std::vector<std::vector<fcq::VarId>> out{{}};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::vector<fcq::VarId>> next;
    for (const auto& p : out)
      for (fcq::VarId v = 1; v <= vars; ++v) {
        next.push_back(p);
        next.back().push_back(v);
      }
    out = std::move(next);
  }
  return out;
}

struct QueryShape {
  std::size_t atoms = 3;
  std::size_t max_rhs = 5;
  std::size_t constraints = 2;
  std::size_t vars = 4;
  double terminal = 0.2;
  double universe_lhs = 0.35;
  bool allow_constraints = true;
};

// Query text in the on-disk syntax; variables are x, y, z, v and head is a
// random subset of the used ones.
inline std::string query_text(Rng& r, const QueryShape& s = {}) {
  static const std::vector<std::string> names = {"x", "y", "z", "v", "w1", "w2"};
  static const std::vector<std::string> regexes = {"'a'*", "'b'.'a'*", "''", "('a'|'b').('a'|'b')", "'a'|'b'.'b'",
                                                   "('a'|'b')*.'b'"};
  std::set<std::string> used;
  std::string body;
  std::size_t n = r.between(1, s.atoms);
  for (std::size_t a = 0; a < n; ++a) {
    std::string lhs = r.coin(s.universe_lhs) ? "u" : names[r.below(s.vars)];
    std::string rhs;
    for (std::size_t i = 0, len = r.between(1, s.max_rhs); i < len; ++i) {
      if (i) rhs += ".";
      if (r.coin(s.terminal)) {
        rhs += r.coin() ? "'a'" : "'b'";
      } else {
        std::string v = names[r.below(s.vars)];
        used.insert(v);
        rhs += v;
      }
    }
    if (lhs != "u") used.insert(lhs);
    body += (body.empty() ? "" : ", ") + lhs + " = " + rhs;
  }
  if (s.allow_constraints)
    for (std::size_t c = r.below(s.constraints + 1); c > 0 && !used.empty(); --c) {
      std::vector<std::string> u(used.begin(), used.end());
      body += ", " + r.pick(u) + " in /" + r.pick(regexes) + "/";
    }
  std::string head;
  for (const auto& v : used)
    if (r.coin(0.4)) head += (head.empty() ? "" : ",") + v;
  return "ans(" + head + ") :- " + body;
}

// Pseudo-acyclic SERCQ text: each formula is b1.x{b2}.b3 over {a,b}.
inline std::string pseudo_acyclic_sercq(Rng& r) {
  static const std::vector<std::string> outer = {"S*", "''", "'a'", "('a'|'b')*.'b'", "'b'*", "S"};
  static const std::vector<std::string> inner = {"'a'", "'b'", "S*", "S+", "'a'*", "''", "'ab'", "'a'|'b'.'b'"};
  static const std::vector<std::string> vars = {"x", "y", "z"};
  std::set<std::string> used;
  std::string body;
  for (std::size_t f = 0, n = r.between(1, 3); f < n; ++f) {
    std::string v = r.pick(vars);
    used.insert(v);
    body += (f ? " join " : "") + r.pick(outer) + "." + v + "{" + r.pick(inner) + "}." + r.pick(outer);
  }
  std::vector<std::string> u(used.begin(), used.end());
  std::string pi;
  for (const auto& v : u)
    if (r.coin()) pi += (pi.empty() ? "" : ",") + v;
  std::string eqs;
  for (std::size_t e = r.below(3); e > 0 && u.size() > 1; --e) {
    std::size_t a = r.below(u.size()), b = r.below(u.size());
    if (a != b) eqs += " eq{" + u[a] + "," + u[b] + "}";
  }
  return "pi{" + pi + "}" + eqs + " (" + body + ")";
}

// Functional SERCQ text with nested bindings.
inline std::string sercq_text(Rng& r) {
  static const std::vector<std::string> regs = {"'a'", "'b'", "S*", "('a'|'b')", "'a'*", "''", "'ab'", "S+"};
  std::vector<std::string> all = {"x", "y", "z"};
  std::set<std::string> used;
  std::function<std::string(int, std::vector<std::string>&)> formula = [&](int depth, std::vector<std::string>& pool) {
    std::string s;
    for (std::size_t i = 0, n = r.between(1, 3); i < n; ++i) {
      if (i) s += ".";
      if (!pool.empty() && r.coin()) {
        std::string x = pool.back();
        pool.pop_back();
        used.insert(x);
        s += x + "{" + (depth > 0 && r.coin() ? formula(depth - 1, pool) : r.pick(regs)) + "}";
      } else {
        s += r.pick(regs);
      }
    }
    return "(" + s + ")";
  };
  std::string body;
  for (std::size_t f = 0, n = r.between(1, 2); f < n; ++f) {
    std::vector<std::string> pool = all;
    std::shuffle(pool.begin(), pool.end(), std::mt19937(static_cast<unsigned>(r.below(1u << 30))));
    body += (f ? " join " : "") + formula(2, pool);
  }
  std::vector<std::string> u(used.begin(), used.end());
  std::string pi;
  for (const auto& v : u)
    if (r.coin()) pi += (pi.empty() ? "" : ",") + v;
  std::string eqs;
  if (u.size() > 1 && r.coin()) eqs = " eq{" + u[0] + "," + u[1] + "}";
  return "pi{" + pi + "}" + eqs + " (" + body + ")";
}

inline fcq::SpanRelation project(const fcq::SpanRelation& r, const std::vector<std::string>& names) {
  fcq::SpanRelation out;
  for (const auto& t : r) {
    fcq::SpanTuple u;
    for (const auto& x : names) u[x] = t.at(x);
    out.insert(u);
  }
  return out;
}

// FC results over (x_P, x_C) pairs read back as spans.
inline fcq::SpanRelation as_spans(const fcq::WordTuples& rows, const std::vector<std::string>& names) {
  fcq::SpanRelation out;
  for (const auto& row : rows) {
    fcq::SpanTuple u;
    for (std::size_t i = 0; i < names.size(); ++i) u[names[i]] = fcq::span_of(row[2 * i], row[2 * i + 1]);
    out.insert(u);
  }
  return out;
}

}  // namespace gen
