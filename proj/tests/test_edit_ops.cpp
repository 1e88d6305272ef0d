#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tmedit/alignment.hpp"
#include "tmedit/edit_ops.hpp"
#include "tmedit/errors.hpp"

using namespace tmedit;

namespace {

std::string stage_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const StageError& e) {
    return e.stage();
  }
  return "";
}

}  // namespace

TEST(EditOps, DeletionAndInsertion) {
  Vocab v;
  const auto s = tmtest::seq(v, "a b c");
  EXPECT_EQ(apply_deletion(s, {true, false, true}), tmtest::seq(v, "a c"));
  EXPECT_EQ(apply_insertion(tmtest::seq(v, "a c"), {1, 0, 2}), tmtest::seq(v, "_ a c _ _"));
  EXPECT_THROW(apply_deletion(s, {true}), DataError);
  EXPECT_THROW(apply_insertion(s, {0, 0}), DataError);
  EXPECT_THROW(apply_insertion(s, {0, 0, 0, 3}, 2), GapOverflowError);
}

TEST(EditOps, CombineLowestIndexWins) {
  Vocab v;
  const std::vector<TokenSeq> seqs{tmtest::seq(v, "a _ c"), tmtest::seq(v, "x b y")};
  const auto out = combine(seqs, {{true, true, false}, {true, true, true}});
  EXPECT_EQ(out, tmtest::seq(v, "a b y"));
  const auto none = combine(seqs, {{false, false, false}, {false, false, false}});
  EXPECT_EQ(none, tmtest::seq(v, "_ _ _"));
  const std::vector<TokenSeq> bad{tmtest::seq(v, "a"), tmtest::seq(v, "a b")};
  EXPECT_THROW(combine(bad, {{true}, {true, true}}), DataError);
}

TEST(EditOps, CombineTracksOrigins) {
  Vocab v;
  const std::vector<TrackedSeq> seqs{
      apply_insertion(TrackedSeq::from_match(tmtest::seq(v, "a"), 0), {0, 1}),
      apply_insertion(TrackedSeq::from_match(tmtest::seq(v, "b"), 1), {1, 0})};
  const auto out = combine(seqs, {{true, true}, {true, true}});
  EXPECT_EQ(out.tokens, tmtest::seq(v, "a b"));
  EXPECT_EQ(out.origins, (Provenance{Origin::copy(0, 0), Origin::copy(1, 0)}));
}

TEST(EditOps, FillOnlyTargetsPlaceholders) {
  Vocab v;
  const auto s = tmtest::seq(v, "a _");
  const TokenId b = v.intern("b");
  EXPECT_EQ(fill_tokens(s, std::vector<Fill>{{1, b, ""}}), tmtest::seq(v, "a b"));
  EXPECT_THROW(fill_tokens(s, std::vector<Fill>{{0, b, ""}}), DataError);
  EXPECT_THROW(fill_tokens(s, std::vector<Fill>{{5, b, ""}}), DataError);
}

TEST(EditOps, ExampleScript) {
  Vocab v;
  const auto ref = tmtest::seq(v, "a b c d");
  const std::vector<TokenSeq> ms{tmtest::seq(v, "a x c"), tmtest::seq(v, "b d")};
  const auto g = nway_align(ms, ref);
  const auto script = derive_edits(g, ms, ref);
  EXPECT_EQ(script.del_masks[0], (std::vector<bool>{true, false, true}));
  EXPECT_EQ(script.del_masks[1], (std::vector<bool>{true, true}));
  EXPECT_EQ(script.plh_counts[0], (std::vector<std::size_t>{0, 1, 1}));
  EXPECT_EQ(script.plh_counts[1], (std::vector<std::size_t>{1, 1, 0}));
  EXPECT_EQ(script.cmb_seqs[0], tmtest::seq(v, "a _ c _"));
  EXPECT_EQ(script.cmb_seqs[1], tmtest::seq(v, "_ b _ d"));
  EXPECT_EQ(script.tok_seq, ref);
  EXPECT_TRUE(script.tok_fills.empty());
  const auto r = replay(script, ms);
  EXPECT_EQ(r.output, ref);
  EXPECT_EQ(r.provenance, (Provenance{Origin::copy(0, 0), Origin::copy(1, 0),
                                      Origin::copy(0, 2), Origin::copy(1, 1)}));
}

TEST(EditOps, NoMatchesMeansAllGenerated) {
  Vocab v;
  const auto ref = tmtest::seq(v, "a b");
  const auto script = derive_edits(AlignmentGraph({}, 2, {}), {}, ref);
  EXPECT_EQ(script.tok_seq, tmtest::seq(v, "_ _"));
  const auto r = replay(script, {});
  EXPECT_EQ(r.output, ref);
  EXPECT_EQ(r.provenance, (Provenance{Origin::generated(), Origin::generated()}));
}

TEST(EditOps, GapOverflowIsReported) {
  TokenSeq ref;
  ref.push_back(Vocab::kNumReserved);
  for (int i = 0; i < 69; ++i) ref.push_back(Vocab::kNumReserved + 1);
  TokenSeq y;
  y.push_back(Vocab::kNumReserved);
  const std::vector<TokenSeq> ms{y};
  const AlignmentGraph g({1}, ref.size(), {{0, 0, 0}});
  try {
    derive_edits(g, ms, ref, 64);
    FAIL() << "expected overflow";
  } catch (const GapOverflowError& e) {
    EXPECT_EQ(e.seq(), 0u);
    EXPECT_EQ(e.gap(), 1u);
    EXPECT_EQ(e.needed(), 69u);
  }
  EXPECT_NO_THROW(derive_edits(g, ms, ref, 69));
}

TEST(EditOps, ReplayNamesTheFailingStage) {
  Vocab v;
  const auto ref = tmtest::seq(v, "a b c");
  const std::vector<TokenSeq> ms{tmtest::seq(v, "a c"), tmtest::seq(v, "b")};
  const auto base = derive_edits(nway_align(ms, ref), ms, ref);

  auto s = base;
  s.del_masks[0].pop_back();
  EXPECT_EQ(stage_of([&] { replay(s, ms); }), "deletion");
  s = base;
  s.plh_counts[1].push_back(0);
  EXPECT_EQ(stage_of([&] { replay(s, ms); }), "insertion");
  s = base;
  s.plh_counts[1].back() += 1;
  EXPECT_EQ(stage_of([&] { replay(s, ms); }), "combination");
  s = base;
  s.tok_fills.push_back({0, v.intern("z"), ""});
  EXPECT_EQ(stage_of([&] { replay(s, ms); }), "prediction");
  s = base;
  s.cmb_keep[0][0] = false;
  EXPECT_EQ(stage_of([&] { replay(s, ms); }), "prediction");
}

TEST(EditOps, UnknownTokensMatchOnlyBySurface) {
  TokenSeq ref;
  ref.push_back(Vocab::kUnk, "foo");
  ref.push_back(Vocab::kUnk, "bar");
  TokenSeq y;
  y.push_back(Vocab::kUnk, "bar");
  const std::vector<TokenSeq> ms{y};
  const auto g = nway_align(ms, ref);
  ASSERT_EQ(g.edges().size(), 1u);
  EXPECT_EQ(g.edges()[0].j, 1u);
  const auto r = replay(derive_edits(g, ms, ref), ms);
  EXPECT_EQ(r.output, ref);
  EXPECT_EQ(r.output.surface(0), "foo");
}

// Property: the expert script replays to the reference and every copied
// token points at an equal match token.
TEST(EditOps, ReplayReproducesReference) {
  Rng rng(21);
  for (int t = 0; t < 400; ++t) {
    const auto ref = tmtest::random_seq(rng, 12, 6);
    std::vector<TokenSeq> ms;
    const auto n = rng.uniform_int(0, 3);
    for (int i = 0; i < n; ++i) ms.push_back(tmtest::random_seq(rng, 12, 6));
    const auto g = nway_align(ms, ref);
    const auto script = derive_edits(g, ms, ref);
    for (const auto& c : script.cmb_seqs) ASSERT_EQ(c.size(), ref.size());
    const auto r = replay(script, ms);
    ASSERT_EQ(r.output, ref) << "trial " << t;
    ASSERT_EQ(r.provenance.size(), ref.size());
    std::size_t generated = 0;
    for (std::size_t j = 0; j < ref.size(); ++j) {
      const auto& o = r.provenance[j];
      if (!o.is_copy()) {
        ++generated;
        continue;
      }
      ASSERT_EQ(ms[o.seq][o.pos], ref[j]);
    }
    EXPECT_EQ(generated, script.tok_fills.size());
    EXPECT_EQ(ref.size() - generated, g.coverage().covered);
  }
}
