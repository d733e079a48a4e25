#include <gtest/gtest.h>

#include "support.hpp"

using namespace fcq;

namespace {

using Rows = std::set<std::vector<std::string>>;

Rows texts(const WordIndex& ix, const Relation& r) {
  Rows out;
  for (const auto& row : r.as_set()) {
    std::vector<std::string> t;
    for (FactorId id : row) t.emplace_back(ix.text(id));
    out.insert(t);
  }
  return out;
}

WordTuples engine_words(const Plan& p, const std::string& w, std::size_t* emitted = nullptr) {
  WordIndex ix(w);
  WordTuples out;
  std::size_t n = 0;
  enumerate(p, ix, [&](const ResultTuple& t) {
    std::vector<std::string> row;
    for (VarId h : p.query.head) row.emplace_back(ix.text(t.at(h)));
    out.insert(row);
    ++n;
    return true;
  });
  if (emitted) *emitted = n;
  return out;
}

Plan must_plan(const std::string& text) {
  auto r = plan(parse_query(text, Alphabet("ab")));
  if (!r.acyclic) throw Error("test query is cyclic: " + text);
  return *r.plan;
}

}  // namespace

TEST(Evaluator, SemijoinPaperTables) {
  // R over (x,y), S over (y,z); a1..a5 stand for ids 1..5
  Relation r({1, 2}), s({2, 3});
  for (auto row : std::vector<std::vector<FactorId>>{{1, 2}, {3, 4}, {1, 4}, {2, 1}}) r.add(row);
  for (auto row : std::vector<std::vector<FactorId>>{{3, 5}, {2, 2}, {4, 5}}) s.add(row);
  auto out = semijoin(r, s);
  EXPECT_EQ(out.as_set(), (std::set<std::vector<FactorId>>{{1, 2}, {3, 4}, {1, 4}}));
  EXPECT_EQ(out.schema(), r.schema());
}

TEST(Evaluator, SemijoinEdgeCases) {
  Relation r({1}), empty({2}), other({2});
  r.add({7});
  r.add({8});
  EXPECT_TRUE(semijoin(r, empty).empty());
  other.add({1});
  EXPECT_EQ(semijoin(r, other).as_set(), r.as_set());
}

TEST(Evaluator, MaterializeConcat) {
  WordIndex aa("aa");
  VarTable t;
  VarId x = t.intern("x"), y = t.intern("y"), z = t.intern("z");
  auto rel = materialize(aa, VarEquation{kUniverse, {x, y}});
  EXPECT_EQ(rel.schema(), (std::vector<VarId>{x, y}));
  EXPECT_EQ(texts(aa, rel), (Rows{{"", "aa"}, {"a", "a"}, {"aa", ""}}));

  WordIndex abab("abab");
  auto sq = materialize(abab, VarEquation{z, {x, x}});
  EXPECT_EQ(sq.schema(), (std::vector<VarId>{z, x}));
  EXPECT_EQ(texts(abab, sq), (Rows{{"", ""}, {"abab", "ab"}}));

  auto copy = materialize(aa, VarEquation{z, {x}});
  EXPECT_EQ(copy.size(), aa.factor_count());
}

TEST(Evaluator, MaterializeConstraint) {
  WordIndex ix("abab");
  Alphabet ab("ab");
  EXPECT_TRUE(materialize(ix, RegularConstraint{1, parse_regex("#", ab)}).empty());
  EXPECT_EQ(texts(ix, materialize(ix, RegularConstraint{1, parse_regex("b.a?", ab)})), (Rows{{"b"}, {"ba"}}));
}

TEST(Evaluator, ModelCheckMembership) {
  // the pattern itself is cyclic; acceptance falls back to the oracle
  auto q = parse_query("ans() :- u = 'ab'.x.'ba'.x.y.x", Alphabet("ab"));
  EXPECT_FALSE(plan(q).acyclic);
  EXPECT_TRUE(accepts(q, "abaabaaaaa"));
  EXPECT_FALSE(accepts(q, "abab"));
  EXPECT_TRUE(accepts(q, "abba"));

  auto p = must_plan("ans() :- u = 'ab'.x.'ba'.x.y");
  EXPECT_TRUE(model_check(p, WordIndex("abaabaaaa")));
  EXPECT_FALSE(model_check(p, WordIndex("abaabaaba")));
  EXPECT_FALSE(model_check(must_plan("ans() :- u = x, x in /#/"), WordIndex("ab")));
}

TEST(Evaluator, StrictlyLessLanguage) {
  // this query is cyclic, so acceptance goes through the fallback
  auto q = parse_query("ans() :- u = x.'b'.y, y = z.x, y in /a+/, z in /a+/", Alphabet("ab"));
  EXPECT_FALSE(plan(q).acyclic);
  EXPECT_TRUE(accepts(q, "abaa"));
  EXPECT_FALSE(accepts(q, "aba"));
  EXPECT_TRUE(accepts(q, "ba"));
  EXPECT_FALSE(accepts(q, "aaba"));
}

TEST(Evaluator, UnequalLanguage) {
  auto q = parse_query(
      "ans() :- u = x.yb1.z.yb2.x, u in /a*.b.a*/, z in /a+/, x in /a*/, yb = yb1.yb2, yb in /b/", Alphabet("ab"));
  for (const auto& w : gen::all_words(7)) {
    auto b = w.find('b');
    bool want = b != std::string::npos && w.find('b', b + 1) == std::string::npos && b != w.size() - 1 - b;
    EXPECT_EQ(accepts(q, w), want) << w;
  }
}

TEST(Evaluator, EnumerateExamples) {
  EXPECT_EQ(engine_words(must_plan("ans(x) :- u = x.x"), "abab"), (WordTuples{{"ab"}}));
  EXPECT_EQ(engine_words(must_plan("ans(x) :- u = x.y"), "aaa"), (WordTuples{{""}, {"a"}, {"aa"}, {"aaa"}}));
  std::size_t n = 0;
  EXPECT_EQ(engine_words(must_plan("ans() :- u = x.y"), "ab", &n), (WordTuples{{}}));
  EXPECT_EQ(n, 1u);
  EXPECT_TRUE(engine_words(must_plan("ans() :- u = x.x"), "aba", &n).empty());
  EXPECT_EQ(n, 0u);
}

TEST(Evaluator, EnumerateStopsEarly) {
  auto p = must_plan("ans(x,y) :- u = x.y");
  WordIndex ix("abab");
  std::size_t calls = 0;
  enumerate(p, ix, [&](const ResultTuple&) { return ++calls < 2; });
  EXPECT_EQ(calls, 2u);
}

TEST(Evaluator, Universality) {
  Alphabet ab("ab");
  EXPECT_TRUE(check_universality(parse_query("ans() :- u = x", ab), ab));
  EXPECT_FALSE(check_universality(parse_query("ans() :- u = 'a'.x", ab), ab));
  EXPECT_FALSE(check_universality(parse_query("ans() :- u = x.x", ab), ab));
  EXPECT_THROW(check_universality(parse_query("ans() :- u = x, x in /a*/", ab), ab), HasConstraints);
}

TEST(Evaluator, BoundedAmbiguity) {
  Alphabet ab("ab");
  EXPECT_FALSE(check_k_ambiguous_bounded(parse_query("ans(x) :- u = x.y", ab), 1, 2, ab));
  EXPECT_TRUE(check_k_ambiguous_bounded(parse_query("ans(x) :- u = x.y", ab), 5, 4, ab));
  EXPECT_TRUE(check_k_ambiguous_bounded(parse_query("ans(x) :- u = x, x in /#/", ab), 0, 4, ab));
  // x ranges over factors in both regexes
  EXPECT_FALSE(check_k_ambiguous_bounded(parse_query("ans(x) :- x = x, x in /a*/, x in /(a|b)*/", ab), 1, 3, ab));
}

// ---- properties ----

TEST(EvaluatorProperty, MatchesOracle) {
  gen::Rng r(41);
  int tested = 0;
  for (int it = 0; tested < 250 && it < 5000; ++it) {
    auto q = parse_query(gen::query_text(r), Alphabet("ab"));
    auto pr = plan(q);
    if (!pr.acyclic) continue;
    ++tested;
    for (int k = 0; k < 5; ++k) {
      std::string w = gen::word(r, 10);
      std::size_t emitted = 0;
      auto got = engine_words(*pr.plan, w, &emitted);
      ASSERT_EQ(got, brute_evaluate(q, w)) << print_query(q) << " on " << w;
      EXPECT_EQ(emitted, got.size()) << "duplicates for " << print_query(q) << " on " << w;
      EXPECT_EQ(model_check(*pr.plan, WordIndex(w)), !got.empty());
    }
  }
  EXPECT_EQ(tested, 250);
}

TEST(EvaluatorProperty, SemijoinLaws) {
  gen::Rng r(42);
  for (int it = 0; it < 500; ++it) {
    Relation a({1, 2}), b({r.coin() ? VarId{2} : VarId{3}, 4});
    for (std::size_t k = r.below(12); k > 0; --k) a.add({FactorId(r.below(4)), FactorId(r.below(4))});
    for (std::size_t k = r.below(12); k > 0; --k) b.add({FactorId(r.below(4)), FactorId(r.below(4))});
    auto once = semijoin(a, b);
    auto as = a.as_set();
    for (const auto& row : once.as_set()) EXPECT_TRUE(as.count(row));
    EXPECT_EQ(semijoin(once, b).as_set(), once.as_set());
  }
}

// After full reduction every tuple is part of some full join result.
TEST(EvaluatorProperty, NoDanglingTuples) {
  gen::Rng r(43);
  int tested = 0;
  for (int it = 0; tested < 80 && it < 3000; ++it) {
    gen::QueryShape s;
    s.max_rhs = 3;
    auto pr = plan(parse_query(gen::query_text(r, s), Alphabet("ab")));
    if (!pr.acyclic) continue;
    ++tested;
    WordIndex ix(gen::word(r, 5));
    Evaluation ev(*pr.plan, ix);
    const std::size_t n = pr.plan->nodes.size();
    std::vector<std::set<std::size_t>> used(n);
    std::map<VarId, FactorId> val;
    std::vector<std::size_t> pick(n);
    std::function<void(std::size_t)> join = [&](std::size_t i) {
      if (i == n) {
        for (std::size_t j = 0; j < n; ++j) used[j].insert(pick[j]);
        return;
      }
      const auto& rel = ev.relation(i);
      for (std::size_t k = 0; k < rel.size(); ++k) {
        auto saved = val;
        bool ok = true;
        for (std::size_t c = 0; c < rel.arity() && ok; ++c) {
          auto [pos, fresh] = val.emplace(rel.schema()[c], rel.row(k)[c]);
          ok = fresh || pos->second == rel.row(k)[c];
        }
        if (ok) {
          pick[i] = k;
          join(i + 1);
        }
        val = saved;
      }
    };
    join(0);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(used[i].size(), ev.relation(i).size());
  }
}
