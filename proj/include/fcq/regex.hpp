#pragma once

#include <string_view>
#include <vector>

#include "fcq/model.hpp"

namespace fcq {

// Thompson NFA.  Symbols are ints so callers can add their own markers above
// the byte range (the spanner oracle does).
class Nfa {
 public:
  struct State {
    int symbol = -1;  // -1: no symbol edge
    int next = -1;
    std::vector<int> eps;
  };
  struct Fragment {
    int start, accept;
  };

  int add_state() {
    states_.emplace_back();
    return static_cast<int>(states_.size()) - 1;
  }
  void add_eps(int from, int to) { states_[from].eps.push_back(to); }
  void add_symbol(int from, int sym, int to) {
    states_[from].symbol = sym;
    states_[from].next = to;
  }

  Fragment symbol_fragment(int sym) {
    int s = add_state(), a = add_state();
    add_symbol(s, sym, a);
    return {s, a};
  }
  Fragment epsilon_fragment() {
    int s = add_state(), a = add_state();
    add_eps(s, a);
    return {s, a};
  }
  Fragment empty_fragment() { return {add_state(), add_state()}; }
  Fragment concat(Fragment a, Fragment b) {
    add_eps(a.accept, b.start);
    return {a.start, b.accept};
  }
  Fragment alternative(Fragment a, Fragment b) {
    int s = add_state(), f = add_state();
    add_eps(s, a.start);
    add_eps(s, b.start);
    add_eps(a.accept, f);
    add_eps(b.accept, f);
    return {s, f};
  }
  Fragment kleene(Fragment a) {
    int s = add_state(), f = add_state();
    add_eps(s, a.start);
    add_eps(s, f);
    add_eps(a.accept, a.start);
    add_eps(a.accept, f);
    return {s, f};
  }

  Fragment fragment(const Regex& r) {
    using K = RegexNode::Kind;
    switch (r->kind) {
      case K::Empty: return empty_fragment();
      case K::Epsilon: return epsilon_fragment();
      case K::Literal: return symbol_fragment(static_cast<unsigned char>(r->symbol));
      case K::Union: return alternative(fragment(r->left), fragment(r->right));
      case K::Concat: return concat(fragment(r->left), fragment(r->right));
      case K::Star: return kleene(fragment(r->left));
    }
    return empty_fragment();
  }

  void set_entry(Fragment f) {
    start_ = f.start;
    accept_ = f.accept;
  }

  static Nfa compile(const Regex& r) {
    Nfa n;
    n.set_entry(n.fragment(r));
    return n;
  }

  int start() const { return start_; }
  int accept() const { return accept_; }
  std::size_t size() const { return states_.size(); }
  const State& state(int i) const { return states_[i]; }

  // Sets are kept as sorted-free vectors with a membership bitmap.
  struct StateSet {
    std::vector<int> list;
    std::vector<char> in;
    bool empty() const { return list.empty(); }
  };

  StateSet initial() const {
    StateSet s{{}, std::vector<char>(states_.size(), 0)};
    add_closed(s, start_);
    return s;
  }

  void add_closed(StateSet& s, int q) const {
    if (s.in[q]) return;
    std::vector<int> stack{q};
    s.in[q] = 1;
    while (!stack.empty()) {
      int p = stack.back();
      stack.pop_back();
      s.list.push_back(p);
      for (int t : states_[p].eps)
        if (!s.in[t]) {
          s.in[t] = 1;
          stack.push_back(t);
        }
    }
  }

  StateSet step(const StateSet& s, int sym) const {
    StateSet out{{}, std::vector<char>(states_.size(), 0)};
    for (int q : s.list)
      if (states_[q].symbol == sym) add_closed(out, states_[q].next);
    return out;
  }

  bool accepting(const StateSet& s) const { return s.in[accept_] != 0; }

  bool accepts(std::string_view w) const {
    StateSet s = initial();
    for (char c : w) {
      s = step(s, static_cast<unsigned char>(c));
      if (s.empty()) return false;
    }
    return accepting(s);
  }

 private:
  std::vector<State> states_;
  int start_ = 0, accept_ = 0;
};

inline bool regex_matches(const Regex& r, std::string_view w) { return Nfa::compile(r).accepts(w); }

}  // namespace fcq
