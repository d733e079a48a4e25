#include <gtest/gtest.h>

#include "support.hpp"

using namespace fcq;

namespace {

std::vector<std::string> lines(const FcCq& q) {
  std::vector<std::string> out;
  for (const auto& e : q.equations) out.push_back(q.vars.name(e.lhs) + " = " + format_pattern(e.rhs, q.vars));
  for (const auto& c : q.constraints) out.push_back(q.vars.name(c.var) + " in /" + print_regex(c.regex) + "/");
  return out;
}

FcCq as_fccq(const TwoFcCq& t) {
  FcCq q;
  q.vars = t.vars;
  q.head = t.head;
  q.constraints = t.constraints;
  for (const auto& e : t.equations) {
    Pattern p;
    for (VarId v : e.rhs) p.push_back(Term::of(v));
    q.equations.push_back({e.lhs, p});
  }
  return q;
}

// Tries every combination of per-atom bracketings.
bool exhaustive_acyclic(const FcCq& nq) {
  std::vector<std::vector<Bracketing>> opts;
  for (const auto& e : nq.equations) opts.push_back(all_bracketings(terminal_free_vars(e.rhs)));
  std::vector<std::size_t> pick(opts.size(), 0);
  for (;;) {
    std::vector<std::set<VarId>> atoms;
    VarId fresh = 1000;
    for (std::size_t i = 0; i < opts.size(); ++i)
      for (auto& s : brute_decomposition_atoms(opts[i][pick[i]], nq.equations[i].lhs, fresh)) {
        for (VarId v : s)
          if (v >= fresh) fresh = v + 1;
        atoms.push_back(s);
      }
    if (gyo(atoms)) return true;
    std::size_t k = 0;
    while (k < pick.size() && ++pick[k] == opts[k].size()) pick[k++] = 0;
    if (k == pick.size()) return false;
  }
}

void check_plan_shape(const Plan& p) {
  ASSERT_TRUE(verify_join_tree(p.tree));
  ASSERT_EQ(p.tree.node_vars.size(), p.nodes.size());
  for (const auto& e : p.query.equations) EXPECT_LE(e.rhs.size(), 2u);
  // equations of one atom form a connected subtree
  std::map<std::size_t, std::vector<std::size_t>> by_atom;
  for (std::size_t n = 0; n < p.nodes.size(); ++n)
    if (p.nodes[n].is_equation) by_atom[p.nodes[n].atom].push_back(n);
  for (const auto& [atom, ns] : by_atom) {
    std::set<std::size_t> in(ns.begin(), ns.end()), reached{ns[0]};
    std::vector<std::size_t> stack{ns[0]};
    while (!stack.empty()) {
      auto n = stack.back();
      stack.pop_back();
      for (auto [a, b] : p.tree.edges)
        for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}})
          if (x == n && in.count(y) && reached.insert(y).second) stack.push_back(y);
    }
    EXPECT_EQ(reached, in) << "atom " << atom;
  }
  // inter-atom edges carry exactly the variables the two atoms share
  auto sets = atom_var_sets(p.normalized);
  for (auto [a, b] : p.tree.edges) {
    if (!p.nodes[a].is_equation || !p.nodes[b].is_equation) continue;
    if (p.nodes[a].atom == p.nodes[b].atom) continue;
    std::set<VarId> s;
    for (VarId v : p.tree.node_vars[a])
      if (p.tree.node_vars[b].count(v)) s.insert(v);
    EXPECT_EQ(s, shared_vars(sets[p.nodes[a].atom], sets[p.nodes[b].atom]));
  }
}

}  // namespace

TEST(Planner, NormalizationGolden) {
  auto n = normalize(parse_query("ans() :- x1 = x2.u.x2, x4 = x4, x3 = 'aab'"));
  auto got = lines(n.query);
  std::set<std::string> want = {"u = x1", "x2 in /''/", "x4 = z2", "x3 = z1", "z1 in /'a'.'a'.'b'/"};
  EXPECT_EQ(std::set<std::string>(got.begin(), got.end()), want);
  EXPECT_EQ(got.size(), want.size());
  EXPECT_TRUE(is_normalized(n.query));
  EXPECT_EQ(n.trace.size(), 3u);
}

TEST(Planner, NormalizeKeepsNormalQueries) {
  auto q = parse_query("ans(x,y) :- x = z1.z2, y = z1.z3, x in /s/, z1 in /w/");
  auto n = normalize(q);
  EXPECT_TRUE(n.trace.empty());
  EXPECT_EQ(lines(n.query), lines(q));
}

TEST(Planner, StructuredNormalForm) {
  auto s = to_structured_normal_form(parse_query("ans(x) :- x = y.'a', y in /b*/"));
  for (const auto& e : s.equations) EXPECT_EQ(e.lhs, kUniverse);
  auto q = parse_query("ans(x) :- x = y.'a', y in /b*/");
  for (const auto& w : gen::all_words(4)) EXPECT_EQ(brute_evaluate(q, w), brute_evaluate(s, w)) << w;
}

TEST(Planner, PrecheckSharedVariables) {
  auto q = parse_query("ans() :- x1 = y1.y2.y3.y4.y5, x2 = y6.y2.y3.y4.y5");
  auto r = plan(q);
  EXPECT_FALSE(r.acyclic);
  EXPECT_EQ(r.stage, "precheck 3");
  auto c = cyclicity_prechecks(r.normalized.query, weak_join_tree(r.normalized.query));
  EXPECT_EQ(c.rule, 3);
  auto f = plan(q, {true});
  EXPECT_TRUE(f.acyclic);
  for (const auto& w : gen::all_words(4)) EXPECT_EQ(brute_model_check(q, w), brute_model_check(prefactor(q), w));
}

TEST(Planner, PrecheckRules) {
  EXPECT_EQ(plan(parse_query("ans() :- x = a.b, y = b.c, z = c.a")).stage, "precheck 1");
  EXPECT_EQ(plan(parse_query("ans() :- u = x1.x2.x1.x3.x1")).stage, "precheck 2");
  EXPECT_EQ(plan(parse_query("ans() :- x = a.b.c.d, y = a.b.c")).stage, "precheck 4");
}

TEST(Planner, LocalVariableDecomposition) {
  auto r = plan(parse_query("ans() :- x1 = y1.y2.y3, x2 = y2.y3.y3.y4"));
  ASSERT_TRUE(r.acyclic);
  check_plan_shape(*r.plan);
  auto sk = skeleton_of(*r.plan);
  EXPECT_EQ(sk.node_vars.size(), 2u);
  EXPECT_EQ(sk.edges.size(), 1u);
}

TEST(Planner, NestedAtomSkeleton) {
  auto r = plan(parse_query("ans() :- x1 = x2.x3.x2, x2 = x4.x4.x5"));
  ASSERT_TRUE(r.acyclic);
  check_plan_shape(*r.plan);
  auto sk = skeleton_of(*r.plan);
  EXPECT_EQ(sk.node_vars.size(), 2u);
  ASSERT_EQ(sk.edges.size(), 1u);
  EXPECT_TRUE(verify_join_tree(sk));
}

TEST(Planner, AcyclicAtomsCyclicQuery) {
  auto r = plan(parse_query("ans() :- x1 = y1.y2.y3, x2 = y1.y4.y3"));
  EXPECT_FALSE(r.acyclic);
  EXPECT_EQ(r.stage, "atom decomposition");
  EXPECT_NE(explain(r).find("cyclic"), std::string::npos);
}

TEST(Planner, SentencePairsWeakTree) {
  auto r = plan(parse_query("ans(x,y) :- x = z1.z2, y = z1.z3, x in /s/, z1 in /w/"));
  ASSERT_TRUE(r.acyclic);
  EXPECT_EQ(r.plan->weak.edges, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}}));
  EXPECT_EQ(r.plan->nodes.size(), 4u);
  check_plan_shape(*r.plan);
}

TEST(Planner, ExplainListsEdges) {
  auto text = explain(plan(parse_query("ans() :- x1 = y1.y2.y3, x2 = y2.y3.y3.y4")));
  EXPECT_NE(text.find("weak join tree:"), std::string::npos);
  EXPECT_NE(text.find("{y2,y3}"), std::string::npos);
}

// ---- properties ----

TEST(PlannerProperty, CompleteAgainstExhaustiveSearch) {
  gen::Rng r(31);
  gen::QueryShape s;
  s.terminal = 0;
  s.allow_constraints = false;
  int acyclic = 0, cyclic = 0;
  for (int it = 0; it < 1500; ++it) {
    auto q = parse_query(gen::query_text(r, s));
    auto p = plan(q);
    ASSERT_TRUE(is_normalized(p.normalized.query)) << print_query(q);
    ASSERT_EQ(p.acyclic, exhaustive_acyclic(p.normalized.query)) << print_query(q);
    (p.acyclic ? acyclic : cyclic)++;
    if (p.acyclic) check_plan_shape(*p.plan);
  }
  EXPECT_GT(acyclic, 100);
  EXPECT_GT(cyclic, 100);
}

TEST(PlannerProperty, PreservesSemantics) {
  gen::Rng r(32);
  gen::QueryShape s;
  s.max_rhs = 4;
  int planned = 0;
  for (int it = 0; it < 150; ++it) {
    auto q = parse_query(gen::query_text(r, s), Alphabet("ab"));
    auto n = normalize(q).query;
    auto p = plan(q);
    if (p.acyclic) ++planned;
    for (int k = 0; k < 4; ++k) {
      std::string w = gen::word(r, 10);
      auto want = brute_evaluate(q, w);
      ASSERT_EQ(brute_evaluate(n, w), want) << print_query(q) << " on " << w;
      if (p.acyclic) {
        ASSERT_EQ(brute_evaluate(as_fccq(p.plan->query), w), want) << print_query(q) << " on " << w;
      }
    }
  }
  EXPECT_GT(planned, 30);
}
