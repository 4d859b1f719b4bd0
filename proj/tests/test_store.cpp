#include <gtest/gtest.h>

#include <map>

#include "cqap/prob.hpp"
#include "cqap/relation.hpp"
#include "support.hpp"

using namespace cqap;

TEST(Relation, UpsertAndCancel) {
  Relation<std::int64_t> r(2);
  r.upsert({1, 2}, 1);
  EXPECT_EQ(r.get({1, 2}), 1);
  r.upsert({1, 2}, 1);
  r.upsert({1, 2}, -2);
  EXPECT_FALSE(r.contains({1, 2}));
  EXPECT_TRUE(r.empty());
}

TEST(Relation, UpsertReportsOldAndNew) {
  Relation<std::int64_t> r(1);
  auto [o1, n1] = r.upsert({7}, 3);
  EXPECT_EQ(o1, 0);
  EXPECT_EQ(n1, 3);
  auto [o2, n2] = r.upsert({7}, -1);
  EXPECT_EQ(o2, 3);
  EXPECT_EQ(n2, 2);
}

TEST(Relation, ProbabilityCancellation) {
  Relation<PProb> r(1);
  r.upsert({1}, parse_pprob("1/2+"));
  r.upsert({1}, parse_pprob("1/2-"));
  EXPECT_FALSE(r.contains({1}));
}

TEST(Relation, ArityChecked) {
  Relation<std::int64_t> r(2);
  EXPECT_THROW(r.upsert({1}, 1), std::invalid_argument);
  EXPECT_THROW(r.add_index({2}), std::out_of_range);
}

// Random operations against a std::map model; index buckets against full scans.
TEST(Relation, MatchesModelAndScans) {
  fx::Rng rng(1);
  Relation<std::int64_t> r(3);
  int i0 = r.add_index({0});
  int i12 = r.add_index({2, 1});
  std::map<Tuple, std::int64_t> model;
  for (int step = 0; step < 20000; ++step) {
    Tuple t = fx::random_tuple(rng, 3, 6);
    std::int64_t m = static_cast<std::int64_t>(fx::pick(rng, 5)) - 2;
    if (m == 0) m = 1;
    r.upsert(t, m);
    if ((model[t] += m) == 0) model.erase(t);
    if (step == 10000) r.add_index({1});  // late index over live data
    if (step % 997 != 0) continue;
    ASSERT_EQ(r.size(), model.size());
    for (const auto& [k, v] : model) ASSERT_EQ(r.get(k), v);
    std::map<Tuple, std::pair<std::size_t, std::int64_t>> by0, by21;
    for (const auto& [k, v] : model) {
      auto& a = by0[{k[0]}];
      ++a.first;
      a.second += v;
      auto& b = by21[{k[2], k[1]}];
      ++b.first;
      b.second += v;
    }
    for (const auto& [k, cnt] : by0) {
      EXPECT_EQ(r.count(i0, k), cnt.first);
      EXPECT_EQ(r.bucket(i0, k)->aggregate, cnt.second);
    }
    std::size_t buckets = 0;
    r.for_each_bucket(i12, [&](const Tuple& k, const auto& b) {
      ++buckets;
      EXPECT_EQ(b.count, by21.at(k).first);
      std::size_t walked = 0;
      for (auto s = b.head; s != Relation<std::int64_t>::npos; s = r.next_in(i12, s)) {
        ++walked;
        EXPECT_EQ(project(r.tuple(s), {2, 1}), k);
      }
      EXPECT_EQ(walked, b.count);
    });
    EXPECT_EQ(buckets, by21.size());
    EXPECT_EQ(r.count(i0, {99}), 0u);
    EXPECT_EQ(r.bucket(i0, {99}), nullptr);
  }
  Relation<std::int64_t> copy = r;
  EXPECT_TRUE(copy == r);
  copy.upsert({0, 0, 0}, 1);
  EXPECT_FALSE(copy == r);
}

TEST(Relation, IterationVisitsAll) {
  Relation<std::int64_t> r(1);
  for (Value v = 0; v < 100; ++v) r.upsert({v}, 1);
  for (Value v = 0; v < 100; v += 2) r.upsert({v}, -1);
  std::set<Value> seen;
  for (auto s = r.first(); s != Relation<std::int64_t>::npos; s = r.next(s)) seen.insert(r.tuple(s)[0]);
  EXPECT_EQ(seen.size(), 50u);
  for (Value v : seen) EXPECT_EQ(v % 2, 1);
}

TEST(Relation, Counters) {
  Relation<std::int64_t> r(1);
  counters().reset();
  r.upsert({1}, 1);
  r.get({1});
  r.get({2});
  EXPECT_EQ(counters().touches, 1u);
  EXPECT_EQ(counters().probes, 2u);
}
