#include <gtest/gtest.h>

#include <map>

#include "test_util.hpp"
#include "tmedit/errors.hpp"
#include "tmedit/metrics.hpp"

using namespace tmedit;

namespace {

Provenance prov(const std::string& pattern) {
  Provenance out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    out.push_back(pattern[i] == 'c' ? Origin::copy(0, i) : Origin::generated());
  }
  return out;
}

// (matched, total) per class name, from nested maps and a linear scan.
std::map<std::string, std::pair<std::size_t, std::size_t>> ngram_oracle(
    const std::vector<TokenSeq>& outs, const std::vector<Provenance>& provs,
    const std::vector<TokenSeq>& refs, std::size_t n) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> res;
  for (std::size_t s = 0; s < outs.size(); ++s) {
    const auto o = tmtest::ids(outs[s]);
    const auto r = tmtest::ids(refs[s]);
    std::map<std::string, std::map<std::vector<int>, std::size_t>> by_class;
    for (std::size_t i = 0; i + n <= o.size(); ++i) {
      std::string name;
      for (std::size_t t = 0; t < n; ++t) {
        name += (t ? "-" : "") + std::string(provs[s][i + t].is_copy() ? "copy" : "gen");
      }
      ++by_class[name][{o.begin() + i, o.begin() + i + n}];
    }
    for (const auto& [name, grams] : by_class) {
      for (const auto& [g, c] : grams) {
        std::size_t in_ref = 0;
        for (std::size_t j = 0; j + n <= r.size(); ++j) {
          in_ref += std::equal(g.begin(), g.end(), r.begin() + j) ? 1 : 0;
        }
        res[name].first += std::min(c, in_ref);
        res[name].second += c;
      }
    }
  }
  return res;
}

}  // namespace

TEST(Metrics, WorkedExample) {
  Vocab v;
  const std::vector<TokenSeq> outs{tmtest::seq(v, "a b a")};
  const std::vector<Provenance> provs{prov("cgc")};
  const std::vector<TokenSeq> refs{tmtest::seq(v, "a b")};
  const auto st = origin_ngram_stats(outs, provs, refs, 2);
  ASSERT_EQ(st.orders.size(), 2u);
  const auto& uni = st.orders[0].classes;
  EXPECT_EQ(uni.at("copy").matched, 1u);
  EXPECT_EQ(uni.at("copy").total, 2u);
  EXPECT_DOUBLE_EQ(*uni.at("copy").precision, 0.5);
  EXPECT_DOUBLE_EQ(uni.at("copy").share, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(*uni.at("gen").precision, 1.0);
  const auto& bi = st.orders[1].classes;
  EXPECT_EQ(bi.size(), 4u);
  EXPECT_DOUBLE_EQ(*bi.at("copy-gen").precision, 1.0);
  EXPECT_DOUBLE_EQ(*bi.at("gen-copy").precision, 0.0);
  EXPECT_FALSE(bi.at("copy-copy").precision.has_value());
  EXPECT_EQ(st.orders[1].total, 2u);
}

TEST(Metrics, ClippingIsPerClass) {
  Vocab v;
  // Both "a" tokens match the single reference "a" within their own class.
  const std::vector<TokenSeq> outs{tmtest::seq(v, "a a")};
  const std::vector<Provenance> provs{prov("cg")};
  const std::vector<TokenSeq> refs{tmtest::seq(v, "a")};
  const auto st = origin_ngram_stats(outs, provs, refs, 1);
  EXPECT_EQ(st.orders[0].classes.at("copy").matched, 1u);
  EXPECT_EQ(st.orders[0].classes.at("gen").matched, 1u);
}

TEST(Metrics, MatchesOracle) {
  Rng rng(51);
  std::vector<TokenSeq> outs, refs;
  std::vector<Provenance> provs;
  for (int s = 0; s < 100; ++s) {
    outs.push_back(tmtest::random_seq(rng, 12, 4));
    refs.push_back(tmtest::random_seq(rng, 12, 4));
    std::string pat;
    for (std::size_t i = 0; i < outs.back().size(); ++i) pat += rng.bernoulli(0.5) ? 'c' : 'g';
    provs.push_back(prov(pat));
  }
  const auto st = origin_ngram_stats(outs, provs, refs, 3);
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto want = ngram_oracle(outs, provs, refs, n);
    const auto& got = st.orders[n - 1];
    EXPECT_EQ(got.classes.size(), std::size_t{1} << n);
    double share = 0.0;
    for (const auto& [name, cs] : got.classes) {
      const auto it = want.find(name);
      const auto w = it == want.end() ? std::pair<std::size_t, std::size_t>{0, 0} : it->second;
      EXPECT_EQ(cs.matched, w.first) << name;
      EXPECT_EQ(cs.total, w.second) << name;
      share += cs.share;
    }
    EXPECT_NEAR(share, 1.0, 1e-12);
  }
}

TEST(Metrics, MismatchedListsAreDataErrors) {
  Vocab v;
  const std::vector<TokenSeq> outs{tmtest::seq(v, "a")};
  const std::vector<Provenance> provs{prov("c"), prov("c")};
  EXPECT_THROW(origin_ngram_stats(outs, provs, outs), DataError);
  const std::vector<Provenance> short_prov{prov("")};
  EXPECT_THROW(origin_ngram_stats(outs, short_prov, outs), DataError);
}

TEST(Metrics, CoverAndNoise) {
  Vocab v;
  const auto ref = tmtest::seq(v, "a b c a");
  const std::vector<TokenSeq> ms{tmtest::seq(v, "a x"), tmtest::seq(v, "b a a")};
  const auto cn = cover_noise(ref, ms);
  EXPECT_DOUBLE_EQ(cn.cover, 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(cn.noise, 1.0 / 5.0);
  const auto empty = cover_noise(TokenSeq{}, {});
  EXPECT_DOUBLE_EQ(empty.cover, 1.0);
  EXPECT_DOUBLE_EQ(empty.noise, 0.0);
  const auto none = cover_noise(ref, {});
  EXPECT_DOUBLE_EQ(none.cover, 0.0);
}

TEST(Metrics, JsonHasNullPrecision) {
  Vocab v;
  const std::vector<TokenSeq> outs{tmtest::seq(v, "a")};
  const std::vector<Provenance> provs{prov("c")};
  const auto j = to_json(origin_ngram_stats(outs, provs, outs, 1));
  EXPECT_TRUE(j["orders"][0]["classes"]["gen"]["precision"].is_null());
  EXPECT_EQ(j["orders"][0]["classes"]["copy"]["precision"], 1.0);
}
