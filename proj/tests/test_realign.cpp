#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "test_util.hpp"
#include "tmedit/errors.hpp"
#include "tmedit/realign.hpp"

using namespace tmedit;

namespace {

// Random normalized logits for the gaps of `seqs`.
PlhLogits random_logits(Rng& rng, const std::vector<TokenSeq>& seqs, std::size_t k_max) {
  std::size_t gaps = 0;
  for (const auto& s : seqs) gaps = std::max(gaps, s.size() + 1);
  PlhLogits out(seqs.size(), gaps, k_max);
  for (std::size_t n = 0; n < seqs.size(); ++n) {
    for (std::size_t g = 0; g <= seqs[n].size(); ++g) {
      out.valid[n * gaps + g] = 1;
      auto r = out.row(n, g);
      for (double& v : r) v = rng.uniform_real(-3.0, 3.0);
      PlhLogits::normalize_row(r);
    }
  }
  return out;
}

std::vector<double> random_plan(Rng& rng, const PlhLogits& lg, double hi) {
  std::vector<double> p(lg.n_seqs * lg.n_gaps, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (lg.valid[i]) p[i] = rng.uniform_real(0.0, hi);
  }
  return p;
}

}  // namespace

TEST(PlhLogits, ValidateArgmaxOneHot) {
  const auto lg = PlhLogits::one_hot({{0, 2}, {1}}, 3);
  EXPECT_NO_THROW(lg.validate());
  EXPECT_EQ(lg.gaps_of(0), 2u);
  EXPECT_EQ(lg.gaps_of(1), 1u);
  EXPECT_EQ(lg.argmax(), (std::vector<std::vector<std::size_t>>{{0, 2}, {1}}));
  auto bad = lg;
  bad.at(0, 0, 0) = 1.0;
  EXPECT_THROW(bad.validate(), DataError);
  auto hole = lg;
  hole.valid[0] = 0;
  EXPECT_THROW(hole.validate(), DataError);
  EXPECT_THROW(PlhLogits::one_hot({{5}}, 3), GapOverflowError);
}

TEST(PlhLogits, ArgmaxTiesGoLow) {
  PlhLogits lg(1, 1, 2);
  lg.valid[0] = 1;
  auto r = lg.row(0, 0);
  r[0] = -5;
  r[1] = 0;
  r[2] = 0;
  PlhLogits::normalize_row(r);
  EXPECT_EQ(lg.argmax()[0][0], 1u);
}

TEST(Realign, ScheduleShape) {
  RealignConfig cfg;
  EXPECT_EQ(mu_schedule(cfg, 0), 0.0);
  EXPECT_EQ(mu_schedule(cfg, 29.9), 0.0);
  EXPECT_EQ(mu_schedule(cfg, 80), cfg.mu_final);
  EXPECT_EQ(mu_schedule(cfg, 100), cfg.mu_final);
  double prev = 0.0;
  for (double t = 30; t <= 80; t += 1) {
    const double mu = mu_schedule(cfg, t);
    EXPECT_GE(mu, prev);
    prev = mu;
  }
  cfg.t0 = 90;
  EXPECT_THROW(cfg.validate(), UsageError);
}

TEST(Realign, PositionsFollowPrefixSums) {
  const std::vector<double> plan{1, 0, 2, 0.5, 0.5, 0};
  const std::vector<std::size_t> lengths{4, 3};
  const auto x = positions(plan, 2, 3, lengths);
  EXPECT_EQ(x, (std::vector<double>{0, 2, 3, 6, 0, 1.5, 3, 0}));
}

TEST(Realign, ProblemRejectsShapeMismatch) {
  Vocab v;
  const std::vector<TokenSeq> seqs{tmtest::seq(v, "a b")};
  EXPECT_THROW(RealignProblem(PlhLogits::one_hot({{0, 0}}, 4), seqs, {}), DataError);
  EXPECT_NO_THROW(RealignProblem(PlhLogits::one_hot({{0, 0, 0}}, 4), seqs, {}));
}

TEST(Realign, MomentsAndClamp) {
  Vocab v;
  const std::vector<TokenSeq> seqs{tmtest::seq(v, "a")};
  const RealignProblem p(PlhLogits::one_hot({{2, 0}}, 4), seqs, {});
  EXPECT_NEAR(p.mean()[0], 2.0, 1e-9);
  EXPECT_DOUBLE_EQ(p.variance()[0], 0.25);
  PlhLogits flat(1, 2, 4);
  flat.valid = {1, 1};
  for (double& x : flat.values) x = std::log(0.2);
  const RealignProblem q(flat, seqs, {});
  EXPECT_NEAR(q.mean()[0], 2.0, 1e-9);
  EXPECT_NEAR(q.variance()[0], 2.0, 1e-9);
}

TEST(Realign, GraphMatchesDefinition) {
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    std::vector<TokenSeq> seqs;
    for (int n = 0; n < 3; ++n) seqs.push_back(tmtest::random_seq(rng, 5, 3));
    const auto lg = random_logits(rng, seqs, 4);
    const RealignProblem prob(lg, seqs, {});
    const auto plan = random_plan(rng, lg, 2.0);
    const auto x = prob.positions(plan);
    const auto g = prob.graph(x);
    const auto keys = tmtest::framed_ids(seqs);
    const std::size_t np = prob.n_pos();
    for (std::size_t n = 0; n < 3; ++n) {
      for (std::size_t i = 0; i < keys[n].size(); ++i) {
        for (std::size_t m = 0; m < 3; ++m) {
          for (std::size_t j = 0; j < keys[m].size(); ++j) {
            const bool want = n != m && keys[n][i] == keys[m][j] &&
                              std::abs(x[n * np + i] - x[m * np + j]) < 4.0;
            EXPECT_EQ(g[((n * np + i) * 3 + m) * np + j] != 0, want);
          }
        }
      }
    }
  }
}

TEST(Realign, LossesMatchDefinitionAndGradientsMatchFiniteDifferences) {
  Rng rng(32);
  const RealignConfig cfg;
  for (int t = 0; t < 60; ++t) {
    std::vector<TokenSeq> seqs;
    const auto n_seqs = static_cast<std::size_t>(rng.uniform_int(2, 3));
    for (std::size_t n = 0; n < n_seqs; ++n) seqs.push_back(tmtest::random_seq(rng, 5, 3));
    const auto lg = random_logits(rng, seqs, 4);
    const RealignProblem prob(lg, seqs, cfg);
    const auto plan = random_plan(rng, lg, 2.5);
    const double step = 50.0;
    LossGradients grads;
    const auto l = prob.losses(plan, step, &grads);

    std::vector<std::vector<double>> rows(n_seqs);
    for (std::size_t n = 0; n < n_seqs; ++n) {
      for (std::size_t g = 0; g < lg.n_gaps; ++g) rows[n].push_back(plan[n * lg.n_gaps + g]);
    }
    EXPECT_NEAR(l.alignment, tmtest::alignment_loss_oracle(tmtest::framed_ids(seqs), rows, cfg.d_max), 1e-9);
    const double mu = mu_schedule(cfg, step);
    double integer = 0.0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      if (lg.valid[i]) integer += mu * std::pow(std::sin(std::numbers::pi * plan[i]), 2);
    }
    EXPECT_NEAR(l.integer, integer, 1e-9);

    const double h = 1e-6;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      if (!lg.valid[i]) continue;
      auto up = plan, down = plan;
      up[i] += h;
      down[i] -= h;
      const auto lu = prob.losses(up, step);
      const auto ld = prob.losses(down, step);
      EXPECT_NEAR((lu.likelihood - ld.likelihood) / (2 * h), grads.likelihood[i], 1e-5);
      EXPECT_NEAR((lu.integer - ld.integer) / (2 * h), grads.integer[i], 1e-5);
      // The alignment term is piecewise linear; compare where no kink or
      // graph change lies within the probe.
      if (prob.graph(prob.positions(up)) != prob.graph(prob.positions(down))) continue;
      const double fd = (lu.alignment - ld.alignment) / (2 * h);
      const double one_side = (lu.alignment - l.alignment) / h;
      if (std::abs(fd - one_side) > 1e-4) continue;
      EXPECT_NEAR(fd, grads.alignment[i], 1e-4) << "trial " << t << " coord " << i;
    }
  }
}

TEST(Realign, ConsistentPlanIsKept) {
  Vocab v;
  const std::vector<TokenSeq> seqs{tmtest::seq(v, "a c"), tmtest::seq(v, "b c")};
  const auto lg = PlhLogits::one_hot({{0, 1, 0}, {1, 0, 0}}, 4);
  const auto r = realign(lg, seqs);
  EXPECT_EQ(r.changes, 0u);
  EXPECT_EQ(r.counts, lg.argmax());
  EXPECT_DOUBLE_EQ(r.loss_after.alignment, 0.0);
}

TEST(Realign, MisalignedExampleAligns) {
  const auto ex = tmtest::misaligned_example();
  const auto r = realign(ex.logits, ex.seqs);
  EXPECT_EQ(r.counts, ex.aligned);
  EXPECT_EQ(r.changes, 3u);
  EXPECT_GT(r.loss_before.alignment, 0.0);
  EXPECT_DOUBLE_EQ(r.loss_after.alignment, 0.0);
  EXPECT_LT(r.loss_after.total(), r.loss_before.total());
}

TEST(Realign, NeverWorseThanArgmax) {
  Rng rng(33);
  for (int t = 0; t < 100; ++t) {
    std::vector<TokenSeq> seqs;
    for (int n = 0; n < 3; ++n) seqs.push_back(tmtest::random_seq(rng, 6, 3));
    const auto lg = random_logits(rng, seqs, 5);
    const auto r = realign(lg, seqs);
    EXPECT_LE(r.loss_after.total(), r.loss_before.total() + 1e-12);
    for (std::size_t n = 0; n < seqs.size(); ++n) {
      ASSERT_EQ(r.counts[n].size(), seqs[n].size() + 1);
      for (auto c : r.counts[n]) EXPECT_LE(c, 5u);
    }
  }
}

TEST(Realign, NonFiniteLogitsAreRejected) {
  Vocab v;
  const std::vector<TokenSeq> seqs{tmtest::seq(v, "a")};
  auto lg = PlhLogits::one_hot({{0, 0}}, 2);
  lg.at(0, 0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(realign(lg, seqs), DataError);
}

TEST(Realign, BatchEqualsSerial) {
  Rng rng(34);
  std::vector<RealignInstance> batch;
  for (int t = 0; t < 40; ++t) {
    RealignInstance inst;
    for (int n = 0; n < 3; ++n) inst.seqs.push_back(tmtest::random_seq(rng, 6, 3));
    inst.logits = random_logits(rng, inst.seqs, 4);
    batch.push_back(std::move(inst));
  }
  const auto a = realign_batch(batch);
  const auto b = realign_batch_serial(batch);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].counts, b[i].counts);
    EXPECT_EQ(a[i].loss_after.total(), b[i].loss_after.total());
  }
}
