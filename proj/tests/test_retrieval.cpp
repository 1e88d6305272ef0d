#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tmedit/retrieval.hpp"

using namespace tmedit;

namespace {

std::vector<TMEntry> random_tm(Rng& rng, std::size_t n, std::size_t max_len,
                               std::size_t v) {
  std::vector<TMEntry> tm;
  for (std::size_t i = 0; i < n; ++i) {
    tm.push_back({static_cast<std::int64_t>(i), tmtest::random_seq(rng, max_len, v, 1),
                  tmtest::random_seq(rng, max_len, v, 1)});
  }
  return tm;
}

void expect_same(const MatchSet& a, const MatchSet& b) {
  ASSERT_EQ(a.matches.size(), b.matches.size());
  for (std::size_t i = 0; i < a.matches.size(); ++i) {
    EXPECT_EQ(a.matches[i].id, b.matches[i].id);
    EXPECT_DOUBLE_EQ(a.matches[i].score, b.matches[i].score);
  }
}

}  // namespace

TEST(EditDistance, Examples) {
  Vocab v;
  const auto s = tmtest::seq(v, "a b c");
  EXPECT_EQ(edit_distance(s, s), 0u);
  EXPECT_EQ(edit_distance(tmtest::seq(v, "a b c"), tmtest::seq(v, "a x c")), 1u);
  EXPECT_EQ(edit_distance(tmtest::seq(v, "a b c d e"), tmtest::seq(v, "f g h i j")), 5u);
  EXPECT_EQ(edit_distance(TokenSeq{}, tmtest::seq(v, "a b")), 2u);
}

TEST(EditDistance, MatchesFullTableOracle) {
  Rng rng(1);
  for (int t = 0; t < 300; ++t) {
    const auto a = tmtest::random_seq(rng, 15, 4);
    const auto b = tmtest::random_seq(rng, 15, 4);
    EXPECT_EQ(edit_distance(a, b), tmtest::lev_oracle(tmtest::ids(a), tmtest::ids(b)));
  }
}

TEST(EditDistance, BoundedAgreesOrRefuses) {
  Rng rng(2);
  for (int t = 0; t < 300; ++t) {
    const auto a = tmtest::random_seq(rng, 15, 3);
    const auto b = tmtest::random_seq(rng, 15, 3);
    const std::vector<TokenSeq> pair{a, b};
    const auto k = token_keys(std::span<const TokenSeq>(pair));
    const std::size_t exact = tmtest::lev_oracle(tmtest::ids(a), tmtest::ids(b));
    for (std::size_t bound : {0u, 1u, 3u, 6u, 20u}) {
      const auto got = bounded_edit_distance(k[0], k[1], bound);
      if (exact <= bound) {
        ASSERT_TRUE(got.has_value());
        EXPECT_EQ(*got, exact);
      } else {
        EXPECT_FALSE(got.has_value());
      }
    }
  }
}

TEST(Similarity, Examples) {
  Vocab v;
  const auto x = tmtest::seq(v, "a b c d e");
  EXPECT_DOUBLE_EQ(similarity(x, x), 1.0);
  EXPECT_DOUBLE_EQ(similarity(x, tmtest::seq(v, "a b z d e")), 0.8);
  EXPECT_DOUBLE_EQ(similarity(x, tmtest::seq(v, "f g h i j")), 0.0);
  EXPECT_DOUBLE_EQ(similarity(TokenSeq{}, TokenSeq{}), 1.0);
  EXPECT_DOUBLE_EQ(similarity(TokenSeq{}, x), 0.0);
}

TEST(Similarity, RangeAndSymmetry) {
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    const auto a = tmtest::random_seq(rng, 10, 4);
    const auto b = tmtest::random_seq(rng, 10, 4);
    const double s = similarity(a, b);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_DOUBLE_EQ(s, similarity(b, a));
  }
}

TEST(TMIndex, EveryEntryInExactlyOneBucket) {
  Rng rng(4);
  const auto idx = TMIndex::build(random_tm(rng, 200, 12, 6));
  for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(idx.buckets_containing(i), 1u);
}

TEST(TMIndex, IndexedEqualsBruteForce) {
  Rng rng(5);
  const auto idx = TMIndex::build(random_tm(rng, 2000, 12, 8));
  for (double tau : {0.0, 0.2, 0.4, 0.7}) {
    for (std::size_t n_max : {1u, 3u, 10u}) {
      RetrieveOptions o;
      o.tau = tau;
      o.n_max = n_max;
      for (int q = 0; q < 20; ++q) {
        const auto x = tmtest::random_seq(rng, 12, 8, 1);
        expect_same(idx.retrieve(x, o), idx.retrieve_brute_force(x, o));
      }
    }
  }
}

TEST(TMIndex, MatchSetInvariants) {
  Rng rng(6);
  const auto idx = TMIndex::build(random_tm(rng, 500, 8, 4));
  RetrieveOptions o;
  for (int q = 0; q < 50; ++q) {
    const auto ms = idx.retrieve(tmtest::random_seq(rng, 8, 4, 1), o);
    EXPECT_LE(ms.matches.size(), o.n_max);
    for (std::size_t i = 0; i < ms.matches.size(); ++i) {
      EXPECT_GE(ms.matches[i].score, o.tau);
      if (i > 0) {
        const auto& p = ms.matches[i - 1];
        const auto& c = ms.matches[i];
        EXPECT_TRUE(p.score > c.score || (p.score == c.score && p.id < c.id));
      }
    }
  }
}

TEST(TMIndex, ThresholdIsInclusive) {
  Vocab v;
  std::vector<TMEntry> tm = {{1, tmtest::seq(v, "a b c d e"), tmtest::seq(v, "A")},
                             {2, tmtest::seq(v, "a b x y z"), tmtest::seq(v, "B")}};
  const auto idx = TMIndex::build(tm);
  RetrieveOptions o;
  o.tau = 0.4;
  const auto ms = idx.retrieve(tmtest::seq(v, "a b c d e"), o);
  ASSERT_EQ(ms.matches.size(), 2u);
  EXPECT_DOUBLE_EQ(ms.matches[1].score, 0.4);
}

TEST(TMIndex, ExcludeSelf) {
  Vocab v;
  std::vector<TMEntry> tm = {{1, tmtest::seq(v, "a b c"), tmtest::seq(v, "A")},
                             {2, tmtest::seq(v, "a b d"), tmtest::seq(v, "B")}};
  const auto idx = TMIndex::build(tm);
  RetrieveOptions o;
  o.exclude_self = true;
  o.query_id = 1;
  const auto ms = idx.retrieve(tmtest::seq(v, "a b c"), o);
  ASSERT_EQ(ms.matches.size(), 1u);
  EXPECT_EQ(ms.matches[0].id, 2);
  expect_same(ms, idx.retrieve_brute_force(tmtest::seq(v, "a b c"), o));
}

TEST(TMIndex, BatchEqualsSerial) {
  Rng rng(7);
  const auto idx = TMIndex::build(random_tm(rng, 800, 10, 6));
  std::vector<Query> qs;
  for (int i = 0; i < 64; ++i) qs.push_back({tmtest::random_seq(rng, 10, 6, 1), i});
  RetrieveOptions o;
  const auto a = idx.retrieve_batch(qs, o);
  const auto b = idx.retrieve_batch_serial(qs, o);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    expect_same(a[i], b[i]);
    RetrieveOptions oi = o;
    oi.query_id = qs[i].id;
    expect_same(a[i], idx.retrieve_brute_force(qs[i].tokens, oi));
  }
}

TEST(TMIndex, CharacterGranularity) {
  Vocab v;
  std::vector<TMEntry> tm = {{1, tmtest::seq(v, "abc"), tmtest::seq(v, "A")}};
  const auto idx = TMIndex::build(tm, Granularity::kCharacter, &v);
  RetrieveOptions o;
  o.tau = 0.5;
  const auto ms = idx.retrieve(tmtest::seq(v, "abd"), o);
  ASSERT_EQ(ms.matches.size(), 1u);
  EXPECT_NEAR(ms.matches[0].score, 1.0 - 1.0 / 3.0, 1e-12);
  const auto tok_idx = TMIndex::build(tm);
  EXPECT_TRUE(tok_idx.retrieve(tmtest::seq(v, "abd"), o).matches.empty());
}
