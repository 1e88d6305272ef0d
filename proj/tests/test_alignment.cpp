#include <gtest/gtest.h>

#include <algorithm>

#include "test_util.hpp"
#include "tmedit/alignment.hpp"
#include "tmedit/errors.hpp"

using namespace tmedit;

namespace {

tmtest::PairList pairs_of(const OneWayAlignment& a) {
  tmtest::PairList out;
  for (const auto& p : a.pairs) out.emplace_back(p.i, p.j);
  return out;
}

// Expected k-best list: every matching, (size desc, lexicographic asc).
std::vector<tmtest::PairList> kbest_oracle(const TokenSeq& y, const TokenSeq& ref,
                                           std::size_t k) {
  auto all = tmtest::all_matchings(tmtest::ids(y), tmtest::ids(ref));
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a < b;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

std::vector<std::vector<int>> ids_of(const std::vector<TokenSeq>& ys) {
  std::vector<std::vector<int>> out;
  for (const auto& y : ys) out.push_back(tmtest::ids(y));
  return out;
}

}  // namespace

TEST(KBest, RepeatedTokenExample) {
  Vocab v;
  const auto y = tmtest::seq(v, "a b a");
  const auto ref = tmtest::seq(v, "a a");
  const auto got = kbest_1way(y, ref, 6);
  std::vector<std::size_t> scores;
  for (const auto& a : got) scores.push_back(a.score());
  EXPECT_EQ(scores, (std::vector<std::size_t>{2, 1, 1, 1, 1, 0}));
  EXPECT_EQ(pairs_of(got[0]), (tmtest::PairList{{0, 0}, {2, 1}}));
}

TEST(KBest, IdenticalSequencesGiveDiagonalFirst) {
  Vocab v;
  const auto y = tmtest::seq(v, "a b c d");
  const auto got = kbest_1way(y, y, 3);
  ASSERT_FALSE(got.empty());
  EXPECT_EQ(got[0].score(), 4u);
  EXPECT_EQ(pairs_of(got[0]), (tmtest::PairList{{0, 0}, {1, 1}, {2, 2}, {3, 3}}));
}

TEST(KBest, EmptyInputsGiveTheEmptyMatching) {
  Vocab v;
  const auto got = kbest_1way(TokenSeq{}, tmtest::seq(v, "a"), 5);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].score(), 0u);
}

TEST(KBest, MatchesExhaustiveEnumeration) {
  Rng rng(10);
  for (int t = 0; t < 300; ++t) {
    const auto y = tmtest::random_seq(rng, 7, 3);
    const auto ref = tmtest::random_seq(rng, 7, 3);
    for (std::size_t k : {1u, 2u, 5u, 10u}) {
      const auto got = kbest_1way(y, ref, k);
      const auto want = kbest_oracle(y, ref, k);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t r = 0; r < got.size(); ++r) {
        ASSERT_EQ(pairs_of(got[r]), want[r]) << "trial " << t << " k " << k << " rank " << r;
      }
    }
  }
}

TEST(KBest, FirstIsLcs) {
  Rng rng(11);
  for (int t = 0; t < 300; ++t) {
    const auto y = tmtest::random_seq(rng, 20, 10);
    const auto ref = tmtest::random_seq(rng, 20, 10);
    EXPECT_EQ(kbest_1way(y, ref, 1).at(0).score(),
              tmtest::lcs_oracle(tmtest::ids(y), tmtest::ids(ref)));
  }
}

TEST(NWay, SingleMatchCoverageIsLcs) {
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    const std::vector<TokenSeq> ys{tmtest::random_seq(rng, 15, 5)};
    const auto ref = tmtest::random_seq(rng, 15, 5);
    const auto g = nway_align(ys, ref);
    EXPECT_EQ(g.coverage().covered, tmtest::lcs_oracle(tmtest::ids(ys[0]), tmtest::ids(ref)));
    EXPECT_NO_THROW(g.validate(ys, ref));
  }
}

TEST(NWay, RecombinationBeatsIndependentChoice) {
  Vocab v;
  const auto ref = tmtest::seq(v, "a c a");
  const std::vector<TokenSeq> ys{tmtest::seq(v, "a c"), tmtest::seq(v, "a")};
  std::vector<bool> independent(ref.size(), false);
  for (const auto& y : ys) {
    const auto best = kbest_1way(y, ref, 1);
    for (const auto& p : best.at(0).pairs) independent[p.j] = true;
  }
  EXPECT_EQ(std::count(independent.begin(), independent.end(), true), 2);
  const auto g = nway_align(ys, ref, 10);
  EXPECT_EQ(g.coverage().covered, 3u);
}

TEST(NWay, NoMatchesGivesEmptyGraph) {
  Vocab v;
  const auto g = nway_align(std::vector<TokenSeq>{}, tmtest::seq(v, "a b"));
  EXPECT_TRUE(g.edges().empty());
  EXPECT_EQ(g.coverage().covered, 0u);
}

TEST(NWay, HeuristicNeverBeatsExactAndExactMatchesBruteForce) {
  Rng rng(13);
  for (int t = 0; t < 150; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(0, 1));
    std::vector<TokenSeq> ys;
    for (std::size_t i = 0; i < n; ++i) ys.push_back(tmtest::random_seq(rng, 5, 3));
    const auto ref = tmtest::random_seq(rng, 6, 3);
    const auto h = nway_align(ys, ref, 10);
    const auto e = exact_nway_oracle(ys, ref);
    EXPECT_NO_THROW(e.validate(ys, ref));
    const auto brute = tmtest::brute_coverage(ids_of(ys), tmtest::ids(ref));
    EXPECT_EQ(e.coverage().covered, brute.covered);
    EXPECT_EQ(e.coverage().total_edges, brute.edges);
    EXPECT_LE(h.coverage(), e.coverage());
  }
}

TEST(NWay, OracleRefusesLargeInstances) {
  Rng rng(14);
  std::vector<TokenSeq> ys;
  for (int i = 0; i < 6; ++i) ys.push_back(tmtest::random_seq(rng, 30, 5, 30));
  const auto ref = tmtest::random_seq(rng, 30, 5, 30);
  EXPECT_THROW(exact_nway_oracle(ys, ref, 1000), BudgetError);
}

TEST(AlignmentGraph, ValidateRejectsBadEdges) {
  Vocab v;
  const std::vector<TokenSeq> ys{tmtest::seq(v, "a b")};
  const auto ref = tmtest::seq(v, "a b");
  EXPECT_NO_THROW(AlignmentGraph({2}, 2, {{0, 0, 0}, {0, 1, 1}}).validate(ys, ref));
  EXPECT_THROW(AlignmentGraph({2}, 2, {{0, 0, 1}}).validate(ys, ref), InvariantError);
  const auto ref2 = tmtest::seq(v, "b a");
  const std::vector<TokenSeq> ys2{tmtest::seq(v, "a b")};
  EXPECT_THROW(AlignmentGraph({2}, 2, {{0, 0, 1}, {0, 1, 0}}).validate(ys2, ref2),
               InvariantError);
  EXPECT_THROW(AlignmentGraph({2}, 2, {{0, 5, 0}}).validate(ys, ref), InvariantError);
}

TEST(AlignmentGraph, CoverageCountsDistinctPositions) {
  const AlignmentGraph g({2, 2}, 3, {{0, 0, 0}, {1, 0, 0}, {1, 1, 2}});
  EXPECT_EQ(g.coverage().covered, 2u);
  EXPECT_EQ(g.coverage().total_edges, 3u);
  EXPECT_EQ(g.covered_mask(), (std::vector<bool>{true, false, true}));
}

TEST(SetCover, DecisionMatchesDirectSearch) {
  Rng rng(15);
  for (int t = 0; t < 200; ++t) {
    const std::size_t universe = 1 + static_cast<std::size_t>(rng.uniform_int(0, 5));
    std::vector<std::vector<std::size_t>> c0;
    const auto m = rng.uniform_int(1, 5);
    for (int s = 0; s < m; ++s) {
      std::vector<std::size_t> subset;
      for (std::size_t e = 0; e < universe; ++e) {
        if (rng.bernoulli(0.4)) subset.push_back(e);
      }
      c0.push_back(subset);
    }
    const auto k = static_cast<std::size_t>(rng.uniform_int(1, 3));
    // Direct search: is there any choice of k subsets covering everything?
    bool direct = false;
    std::vector<std::size_t> pick(k, 0);
    while (true) {
      std::vector<bool> cov(universe, false);
      for (std::size_t p : pick) {
        for (std::size_t e : c0[p]) cov[e] = true;
      }
      direct = direct || std::all_of(cov.begin(), cov.end(), [](bool b) { return b; });
      std::size_t i = 0;
      while (i < k && ++pick[i] == c0.size()) pick[i++] = 0;
      if (i == k) break;
    }
    EXPECT_EQ(set_cover_decision(set_cover_to_coverage(universe, c0, k)), direct);
  }
}

TEST(SetCover, ReductionShape) {
  const auto inst = set_cover_to_coverage(4, {{0, 1}, {2}, {3}}, 2);
  EXPECT_EQ(inst.p, 4u);
  EXPECT_EQ(inst.choices.size(), 2u);
  EXPECT_FALSE(set_cover_decision(inst));
  EXPECT_TRUE(set_cover_decision(set_cover_to_coverage(4, {{0, 1}, {2, 3}}, 2)));
  CoverageInstance trivial;
  trivial.p = 0;
  EXPECT_TRUE(set_cover_decision(trivial));
}
