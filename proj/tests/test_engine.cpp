#include <gtest/gtest.h>

#include <map>
#include <set>

#include "cqap/engine.hpp"
#include "support.hpp"

using namespace cqap;

namespace {

std::multiset<std::string> labels(const Query& q, const ViewTree& t) {
  std::multiset<std::string> out;
  for (const auto& n : t.nodes) out.insert(node_label(q, n));
  return out;
}

int node_of(const Query& q, const ViewTree& t, const std::string& label) {
  for (int i = 0; i < static_cast<int>(t.nodes.size()); ++i)
    if (node_label(q, t.nodes[i]) == label) return i;
  return -1;
}

template <class P>
std::map<Tuple, P> contents(const Relation<P>& r) {
  std::map<Tuple, P> out;
  r.for_each([&](const Tuple& t, const P& p) { out[t] = p; });
  return out;
}

template <class P>
std::vector<std::map<Tuple, P>> snapshot(const ViewEngine<P>& v) {
  std::vector<std::map<Tuple, P>> out;
  for (int t = 0; t < v.num_trees(); ++t)
    for (int n = 0; n < static_cast<int>(v.tree(t).nodes.size()); ++n) out.push_back(contents(v.rel(t, n)));
  return out;
}

const char* kStar = "Q1(B,C,D|A1) = R(A1,B,C), S(A1,B,D).";
const char* kTriangle = "Q(B,C|A) = R(A,B), S(B,C), T(C,A).";

}  // namespace

TEST(ViewTrees, BranchingShape) {
  Query q = parse_query(kStar);
  auto trees = build_view_trees(q, canonical_vo(q));
  ASSERT_EQ(trees.size(), 1u);
  auto l = labels(q, trees[0]);
  for (const char* s : {"V_A1(A1)", "V_B(A1,B)", "V'_C(A1,B)", "V_C(A1,B,C)", "V'_D(A1,B)", "V_D(A1,B,D)"})
    EXPECT_EQ(l.count(s), 1u) << s;
  for (const auto& n : trees[0].nodes) EXPECT_NE(n.kind, ViewKind::Indicator);
}

TEST(ViewTrees, TriangleShape) {
  Query q = parse_query(kTriangle);
  Plan p = query_plan(q);
  auto trees = build_view_trees(q, p.vo);
  ASSERT_EQ(trees.size(), 1u);
  const ViewTree& t = trees[0];
  auto l = labels(q, t);
  for (const char* s : {"V_A(A)", "V_B(A,B)", "V'_C(A,B)", "V_C(A,B,C)", "S(B,C)", "T(C,A)", "I_{A,B}R(A,B)"})
    EXPECT_EQ(l.count(s), 1u) << s;
  int vc = node_of(q, t, "V_C(A,B,C)"), ind = node_of(q, t, "I_{A,B}R(A,B)");
  ASSERT_GE(ind, 0);
  EXPECT_EQ(t.nodes[ind].parent, vc);
}

TEST(ViewTrees, SingleAtomAlias) {
  Query q = parse_query("Q(A|.) = R(A).");
  auto trees = build_view_trees(q, canonical_vo(q));
  const ViewTree& t = trees[0];
  EXPECT_TRUE(t.nodes[t.root].alias);
  EXPECT_EQ(t.nodes.size(), 2u);
}

TEST(Materialize, EmptyDatabase) {
  Query q = parse_query(kTriangle);
  Engine<std::int64_t> e(q, {});
  for (const auto& r : snapshot(e.views())) EXPECT_TRUE(r.empty());
}

TEST(Materialize, BranchingSingletons) {
  Query q = parse_query(kStar);
  Database<std::int64_t> db;
  db.relation("R", 3).upsert({0, 1, 2}, 1);
  db.relation("S", 3).upsert({0, 1, 3}, 1);
  Engine<std::int64_t> e(q, db);
  const ViewTree& t = e.views().tree(0);
  EXPECT_EQ(contents(e.views().rel(0, node_of(q, t, "V_B(A1,B)"))), (std::map<Tuple, std::int64_t>{{{0, 1}, 1}}));
  EXPECT_EQ(contents(e.views().rel(0, node_of(q, t, "V_A1(A1)"))), (std::map<Tuple, std::int64_t>{{{0}, 1}}));
}

TEST(Materialize, TriangleOnThreeCycle) {
  Query q = parse_query(kTriangle);
  Database<std::int64_t> db;
  for (const char* r : {"R", "S", "T"})
    for (Tuple e : {Tuple{1, 2}, Tuple{2, 3}, Tuple{3, 1}}) db.relation(r, 2).upsert(e, 1);
  Engine<std::int64_t> e(q, db);
  const ViewTree& t = e.views().tree(0);
  std::set<Tuple> tri;
  for (const auto& [k, p] : contents(e.views().rel(0, node_of(q, t, "V_C(A,B,C)")))) tri.insert(k);
  EXPECT_EQ(tri, (std::set<Tuple>{{1, 2, 3}, {2, 3, 1}, {3, 1, 2}}));
  std::set<Tuple> va;
  for (const auto& [k, p] : contents(e.views().rel(0, t.root))) va.insert(k);
  EXPECT_EQ(va, (std::set<Tuple>{{1}, {2}, {3}}));
}

TEST(Update, InsertThenDeleteRestores) {
  fx::Rng rng(4);
  for (const char* text : {kStar, kTriangle, "Q1(D|A1,C) = R(A1,B,C), S(A1,B,D)."}) {
    Query q = parse_query(text);
    Engine<std::int64_t> e(q, fx::random_db(q, rng, 4, 20));
    auto before = snapshot(e.views());
    for (int i = 0; i < 30; ++i) {
      const Atom& a = q.atoms[fx::pick(rng, q.atoms.size())];
      Tuple t = fx::random_tuple(rng, a.vars.size(), 5);
      e.update(a.relation, t, 1);
      e.update(a.relation, t, -1);
    }
    EXPECT_EQ(snapshot(e.views()), before) << text;
  }
}

TEST(Update, IndicatorDeltas) {
  Query q = parse_query("Q(B,C|A) = R(A,B,X), S(B,C), T(C,A).");
  Engine<std::int64_t> e(q, {});
  const ViewTree& t = e.views().tree(0);
  int ind = -1;
  for (int n = 0; n < static_cast<int>(t.nodes.size()); ++n)
    if (t.nodes[n].kind == ViewKind::Indicator) ind = n;
  ASSERT_GE(ind, 0);
  auto ind_rel = [&] { return contents(e.views().rel(0, ind)); };
  e.update("R", {1, 2, 7}, 1);
  EXPECT_EQ(ind_rel(), (std::map<Tuple, std::int64_t>{{{1, 2}, 1}}));
  e.update("R", {1, 2, 8}, 1);  // same key: no change
  EXPECT_EQ(ind_rel(), (std::map<Tuple, std::int64_t>{{{1, 2}, 1}}));
  e.update("R", {1, 2, 7}, -1);
  EXPECT_EQ(ind_rel(), (std::map<Tuple, std::int64_t>{{{1, 2}, 1}}));
  e.update("R", {1, 2, 8}, -1);  // last tuple of the key
  EXPECT_TRUE(ind_rel().empty());
  EXPECT_TRUE(e.views().matches_recompute());
}

TEST(Update, MatchesRecompute) {
  fx::Rng rng(9);
  std::size_t runs = 0;
  for (int i = 0; i < 120; ++i) {
    Query q = parse_query(fx::random_query_text(rng));
    Engine<std::int64_t> e(q, fx::random_db(q, rng, 5, 15));
    ASSERT_TRUE(e.views().matches_recompute()) << q.to_string();
    for (int s = 0; s < 25; ++s) {
      auto u = fx::random_update(q, e.db(), rng, 5);
      e.update(u.rel, u.t, u.m);
      ASSERT_TRUE(e.views().matches_recompute()) << q.to_string();
    }
    ++runs;
  }
  EXPECT_EQ(runs, 120u);
}

TEST(Update, Cqap0PathIsConstantWork) {
  Query q = parse_query(kStar);
  std::vector<std::uint64_t> touches;
  for (std::size_t n : {100u, 10000u}) {
    Database<std::int64_t> db;
    for (Value i = 0; i < static_cast<Value>(n); ++i) {
      db.relation("R", 3).upsert({i % 10, i, i}, 1);
      db.relation("S", 3).upsert({i % 10, i, i}, 1);
    }
    Engine<std::int64_t> e(q, db);
    counters().reset();
    e.update("R", {3, 3, 99}, 1);
    touches.push_back(counters().touches);
  }
  EXPECT_EQ(touches[0], touches[1]);
  EXPECT_LE(touches[1], 8u);
}

TEST(Update, StaleIteratorDetected) {
  Query q = parse_query(kStar);
  Database<std::int64_t> db;
  db.relation("R", 3).upsert({0, 1, 2}, 1);
  db.relation("S", 3).upsert({0, 1, 3}, 1);
  Engine<std::int64_t> e(q, db);
  auto it = e.open({0});
  Tuple t;
  ASSERT_TRUE(it->next(t));
  e.update("R", {0, 1, 5}, 1);
  EXPECT_THROW(it->next(t), StaleIterator);
}

TEST(Request, WrongArityRejected) {
  Engine<std::int64_t> e(parse_query(kStar), {});
  EXPECT_THROW(e.open({}), std::invalid_argument);
  EXPECT_THROW(e.open({1, 2}), std::invalid_argument);
}
