#include "tmedit/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tmedit/errors.hpp"
#include "tmedit/parallel.hpp"
#include "tmedit/rng.hpp"
#include "tmedit/rollin.hpp"

namespace tmedit {

namespace {

template <typename Fn>
auto staged(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e.what());
  }
}

std::vector<std::vector<bool>> threshold(const std::vector<std::vector<double>>& p,
                                         std::span<const TokenSeq> seqs) {
  if (p.size() != seqs.size()) throw DataError("del: wrong number of rows");
  std::vector<std::vector<bool>> out;
  for (std::size_t n = 0; n < p.size(); ++n) {
    if (p[n].size() != seqs[n].size()) throw DataError("del: row length mismatch");
    std::vector<bool> keep(p[n].size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = p[n][i] >= 0.5;
    out.push_back(std::move(keep));
  }
  return out;
}

void check_plh_shape(const PlhLogits& logits, std::span<const TokenSeq> seqs) {
  logits.validate();
  if (logits.n_seqs != seqs.size()) throw DataError("plh: wrong number of sequences");
  for (std::size_t n = 0; n < seqs.size(); ++n) {
    if (logits.gaps_of(n) != seqs[n].size() + 1) {
      throw DataError("plh: sequence " + std::to_string(n) + " needs " +
                      std::to_string(seqs[n].size() + 1) + " gap rows");
    }
  }
}

std::vector<Fill> choose_fills(const TokenSeq& seq,
                               const std::vector<TokenDist>& dists) {
  std::vector<Fill> fills;
  std::size_t d = 0;
  for (std::size_t j = 0; j < seq.size(); ++j) {
    if (seq[j] != Vocab::kPlh) continue;
    if (d >= dists.size() || dists[d].empty()) {
      throw DataError("tok: no distribution for placeholder at " + std::to_string(j));
    }
    const TokenChoice* best = &dists[d].front();
    for (const auto& c : dists[d]) {
      if (c.prob > best->prob || (c.prob == best->prob && c.token < best->token)) {
        best = &c;
      }
    }
    fills.push_back({j, best->token, best->surface});
    ++d;
  }
  if (d != dists.size()) throw DataError("tok: more distributions than placeholders");
  return fills;
}

std::vector<TokenSeq> tokens_of(std::span<const TrackedSeq> seqs) {
  std::vector<TokenSeq> out;
  for (const auto& s : seqs) out.push_back(s.tokens);
  return out;
}

bool same_seqs(std::span<const TokenSeq> a, std::span<const TokenSeq> b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

// Insertion counts moving y toward ref along its best 1-way alignment.
std::vector<std::size_t> counts_toward(const TokenSeq& y, const TokenSeq& ref,
                                       std::size_t k_max) {
  std::vector<std::int64_t> aligned(y.size(), -1);
  const auto best = kbest_1way(y, ref, 1);
  if (!best.empty()) {
    for (const auto& p : best.front().pairs) {
      aligned[p.i] = static_cast<std::int64_t>(p.j);
    }
  }
  std::vector<std::size_t> counts;
  std::int64_t prev = -1;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const std::int64_t t = std::max(aligned[i], prev + 1);
    counts.push_back(static_cast<std::size_t>(t - prev - 1));
    prev = t;
  }
  const auto m = static_cast<std::int64_t>(ref.size());
  counts.push_back(static_cast<std::size_t>(std::max<std::int64_t>(0, m - prev - 1)));
  for (auto& c : counts) c = std::min(c, k_max);
  return counts;
}

std::vector<std::vector<double>> as_scores(const std::vector<std::vector<bool>>& b) {
  std::vector<std::vector<double>> out;
  for (const auto& row : b) {
    std::vector<double> r(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) r[i] = row[i] ? 1.0 : 0.0;
    out.push_back(std::move(r));
  }
  return out;
}

std::uint64_t state_hash(std::uint64_t seed, std::uint64_t kind,
                         std::span<const TokenSeq> seqs) {
  std::uint64_t h = splitmix64(seed ^ (kind * 0x9e3779b97f4a7c15ULL));
  for (const auto& s : seqs) {
    h = splitmix64(h ^ 0xabcdefULL);
    for (TokenId id : s.content()) {
      h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(id)));
    }
  }
  return h;
}

TokenDist certain(TokenId id, std::string_view surface = {}) {
  return {TokenChoice{id, 1.0, std::string(surface)}};
}

}  // namespace

void DecodeConfig::validate() const {
  if (!(zero_plh_penalty >= 0.0)) throw UsageError("decode: penalty must be >= 0");
  if (n_max == 0) throw UsageError("decode: n_max must be >= 1");
  if (realign) realign_cfg.validate();
}

std::vector<std::vector<std::size_t>> plh_argmax(const PlhLogits& logits,
                                                 double penalty) {
  std::vector<std::vector<std::size_t>> out(logits.n_seqs);
  for (std::size_t n = 0; n < logits.n_seqs; ++n) {
    for (std::size_t g = 0; g < logits.gaps_of(n); ++g) {
      const auto r = logits.row(n, g);
      std::size_t best = 0;
      double best_v = r[0] - penalty;
      for (std::size_t k = 1; k < r.size(); ++k) {
        if (r[k] > best_v) {
          best = k;
          best_v = r[k];
        }
      }
      out[n].push_back(best);
    }
  }
  return out;
}

FirstPass first_pass(const TokenSeq& x, std::span<const TokenSeq> matches,
                     const Policy& policy, const DecodeConfig& cfg) {
  const std::size_t n_seqs = matches.size();
  if (n_seqs == 0 || n_seqs > cfg.n_max) {
    throw UsageError("first pass needs 1.." + std::to_string(cfg.n_max) +
                     " matches, got " + std::to_string(n_seqs));
  }
  FirstPass fp;
  TraceRound& rec = fp.record;

  std::vector<TrackedSeq> kept;
  staged("deletion", [&] {
    rec.del = threshold(policy.del(x, matches), matches);
    for (std::size_t n = 0; n < n_seqs; ++n) {
      kept.push_back(apply_deletion(TrackedSeq::from_match(matches[n], n), rec.del[n]));
    }
    return 0;
  });

  std::vector<TrackedSeq> cmb;
  staged("insertion", [&] {
    const auto kept_tokens = tokens_of(kept);
    const PlhLogits logits = policy.plh(x, kept_tokens, cfg.k_max);
    check_plh_shape(logits, kept_tokens);
    if (cfg.realign && n_seqs >= 2) {
      rec.plh = realign(logits, kept_tokens, cfg.realign_cfg).counts;
      rec.realigned = true;
    } else {
      rec.plh = plh_argmax(logits, 0.0);
    }
    for (std::size_t n = 0; n < n_seqs; ++n) {
      cmb.push_back(apply_insertion(kept[n], rec.plh[n], cfg.k_max));
    }
    return 0;
  });

  TrackedSeq combined = staged("combination", [&] {
    const auto cmb_tokens = tokens_of(cmb);
    for (const auto& s : cmb_tokens) {
      if (s.size() != cmb_tokens.front().size()) {
        std::string lengths;
        for (const auto& t : cmb_tokens) {
          lengths += (lengths.empty() ? "" : ",") + std::to_string(t.size());
        }
        throw DataError("sequences to combine have lengths [" + lengths + "]");
      }
    }
    const auto scores = policy.cmb(x, cmb_tokens);
    if (scores.size() != n_seqs) throw DataError("cmb: wrong number of rows");
    const std::size_t len = cmb_tokens.front().size();
    rec.cmb.assign(n_seqs, std::vector<bool>(len, false));
    for (std::size_t j = 0; j < len; ++j) {
      std::optional<std::size_t> winner;
      for (std::size_t n = 0; n < n_seqs; ++n) {
        if (scores[n].size() != len) throw DataError("cmb: row length mismatch");
        if (cmb_tokens[n][j] == Vocab::kPlh || scores[n][j] < 0.5) continue;
        if (!winner || scores[n][j] > scores[*winner][j]) winner = n;
      }
      if (winner) rec.cmb[*winner][j] = true;
    }
    return combine(std::span<const TrackedSeq>(cmb), rec.cmb);
  });

  fp.seq = staged("prediction", [&] {
    rec.tok = choose_fills(combined.tokens, policy.tok(x, combined.tokens));
    return fill_tokens(combined, rec.tok);
  });
  return fp;
}

DecodeResult iterative_refine(const TrackedSeq& y, const TokenSeq& x,
                              const Policy& policy, const DecodeConfig& cfg) {
  DecodeResult res;
  TrackedSeq cur = y;
  for (std::size_t r = 1; r <= cfg.max_refinement_iters; ++r) {
    TraceRound rec;
    rec.round = r;
    const std::vector<TokenSeq> one{cur.tokens};
    TrackedSeq next = staged("deletion", [&] {
      rec.del = threshold(policy.del(x, one), one);
      return apply_deletion(cur, rec.del.front());
    });
    next = staged("insertion", [&] {
      const std::vector<TokenSeq> kept{next.tokens};
      const PlhLogits logits = policy.plh(x, kept, cfg.k_max);
      check_plh_shape(logits, kept);
      rec.plh = plh_argmax(logits, cfg.zero_plh_penalty);
      return apply_insertion(next, rec.plh.front(), cfg.k_max);
    });
    next = staged("prediction", [&] {
      rec.tok = choose_fills(next.tokens, policy.tok(x, next.tokens));
      return fill_tokens(next, rec.tok);
    });
    res.trace.push_back(std::move(rec));
    ++res.iterations;
    const bool unchanged = next.tokens == cur.tokens;
    cur = std::move(next);
    if (unchanged) break;
  }
  res.output = std::move(cur.tokens);
  res.provenance = std::move(cur.origins);
  return res;
}

DecodeResult decode(const TokenSeq& x, std::span<const TokenSeq> matches,
                    const Policy& policy, const DecodeConfig& cfg) {
  cfg.validate();
  if (matches.size() > cfg.n_max) {
    throw UsageError("decode: " + std::to_string(matches.size()) +
                     " matches exceed N_max=" + std::to_string(cfg.n_max));
  }
  if (matches.empty()) return iterative_refine(TrackedSeq{}, x, policy, cfg);
  FirstPass fp = first_pass(x, matches, policy, cfg);
  DecodeResult res = iterative_refine(fp.seq, x, policy, cfg);
  res.trace.insert(res.trace.begin(), std::move(fp.record));
  return res;
}

ReplayResult replay_trace(std::span<const TraceRound> trace,
                          std::span<const TokenSeq> matches, std::size_t k_max) {
  TrackedSeq cur;
  std::size_t start = 0;
  if (!matches.empty()) {
    if (trace.empty() || trace.front().round != 0) {
      throw StageError("replay", "trace lacks the first pass");
    }
    const TraceRound& r0 = trace.front();
    if (r0.del.size() != matches.size() || r0.plh.size() != matches.size()) {
      throw StageError("replay", "first pass does not match the number of matches");
    }
    std::vector<TrackedSeq> cmb;
    for (std::size_t n = 0; n < matches.size(); ++n) {
      const TrackedSeq kept = staged("deletion", [&] {
        return apply_deletion(TrackedSeq::from_match(matches[n], n), r0.del[n]);
      });
      cmb.push_back(staged("insertion", [&] {
        return apply_insertion(kept, r0.plh[n], k_max);
      }));
    }
    cur = staged("combination", [&] {
      return combine(std::span<const TrackedSeq>(cmb), r0.cmb);
    });
    cur = staged("prediction", [&] { return fill_tokens(cur, r0.tok); });
    start = 1;
  }
  for (std::size_t r = start; r < trace.size(); ++r) {
    const TraceRound& rec = trace[r];
    if (rec.del.size() != 1 || rec.plh.size() != 1) {
      throw StageError("replay", "refinement round must edit one sequence");
    }
    cur = staged("deletion", [&] { return apply_deletion(cur, rec.del.front()); });
    cur = staged("insertion", [&] {
      return apply_insertion(cur, rec.plh.front(), k_max);
    });
    cur = staged("prediction", [&] { return fill_tokens(cur, rec.tok); });
  }
  return {std::move(cur.tokens), std::move(cur.origins)};
}

ExpertPolicy::ExpertPolicy(TokenSeq ref, std::vector<TokenSeq> matches,
                           std::size_t k, std::size_t k_max)
    : ref_(std::move(ref)), matches_(std::move(matches)) {
  if (!matches_.empty()) {
    try {
      script_ = derive_edits(nway_align(matches_, ref_, k), matches_, ref_, k_max);
    } catch (const GapOverflowError&) {
      script_.reset();
    }
  }
}

std::vector<std::vector<double>> ExpertPolicy::del(
    const TokenSeq&, std::span<const TokenSeq> seqs) const {
  if (script_ && same_seqs(seqs, matches_)) return as_scores(script_->del_masks);
  std::vector<std::vector<bool>> keep;
  for (const auto& s : seqs) keep.push_back(expert_del_labels(s, ref_));
  return as_scores(keep);
}

PlhLogits ExpertPolicy::plh(const TokenSeq&, std::span<const TokenSeq> seqs,
                            std::size_t k_max) const {
  if (script_ && same_seqs(seqs, script_->plh_seqs)) {
    return PlhLogits::one_hot(script_->plh_counts, k_max);
  }
  std::vector<std::vector<std::size_t>> counts;
  for (const auto& s : seqs) counts.push_back(counts_toward(s, ref_, k_max));
  return PlhLogits::one_hot(counts, k_max);
}

std::vector<std::vector<double>> ExpertPolicy::cmb(
    const TokenSeq&, std::span<const TokenSeq> seqs) const {
  if (script_ && same_seqs(seqs, script_->cmb_seqs)) return as_scores(script_->cmb_keep);
  std::vector<std::vector<bool>> keep;
  for (const auto& s : seqs) {
    std::vector<bool> k(s.size(), false);
    for (std::size_t j = 0; j < s.size() && j < ref_.size(); ++j) {
      k[j] = s[j] != Vocab::kPlh && same_token(s, j, ref_, j);
    }
    keep.push_back(std::move(k));
  }
  return as_scores(keep);
}

std::vector<TokenDist> ExpertPolicy::tok(const TokenSeq&, const TokenSeq& seq) const {
  std::vector<TokenDist> out;
  for (std::size_t j = 0; j < seq.size(); ++j) {
    if (seq[j] != Vocab::kPlh) continue;
    out.push_back(j < ref_.size() ? certain(ref_[j], ref_.surface(j))
                                  : certain(Vocab::kUnk));
  }
  return out;
}

NoisyExpertPolicy::NoisyExpertPolicy(const ExpertPolicy& expert, double p,
                                     std::uint64_t seed, std::size_t vocab_size)
    : expert_(expert), p_(p), seed_(seed), vocab_size_(vocab_size) {
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("noisy policy: p must be in [0, 1]");
  if (vocab_size_ <= static_cast<std::size_t>(Vocab::kNumReserved)) {
    throw UsageError("noisy policy needs at least one regular token");
  }
}

std::vector<std::vector<double>> NoisyExpertPolicy::del(
    const TokenSeq& x, std::span<const TokenSeq> seqs) const {
  auto out = expert_.del(x, seqs);
  Rng rng(state_hash(seed_, 1, seqs));
  for (auto& row : out) {
    for (double& v : row) {
      if (rng.bernoulli(p_) && v >= 0.5) v = 0.0;
    }
  }
  return out;
}

PlhLogits NoisyExpertPolicy::plh(const TokenSeq& x, std::span<const TokenSeq> seqs,
                                 std::size_t k_max) const {
  auto counts = plh_argmax(expert_.plh(x, seqs, k_max), 0.0);
  Rng rng(state_hash(seed_, 2, seqs));
  for (auto& row : counts) {
    for (std::size_t g = 0; g < row.size(); ++g) {
      if (!rng.bernoulli(p_) || row[g] == 0 || row.size() < 2) continue;
      std::size_t to = g == 0 ? 1 : g - 1;
      if (g + 1 < row.size() && rng.bernoulli(0.5)) to = g + 1;
      if (row[to] >= k_max) continue;
      --row[g];
      ++row[to];
    }
  }
  return PlhLogits::one_hot(counts, k_max);
}

std::vector<std::vector<double>> NoisyExpertPolicy::cmb(
    const TokenSeq& x, std::span<const TokenSeq> seqs) const {
  auto out = expert_.cmb(x, seqs);
  Rng rng(state_hash(seed_, 3, seqs));
  for (auto& row : out) {
    for (double& v : row) {
      if (rng.bernoulli(p_)) v = 1.0 - v;
    }
  }
  return out;
}

std::vector<TokenDist> NoisyExpertPolicy::tok(const TokenSeq& x,
                                              const TokenSeq& seq) const {
  auto out = expert_.tok(x, seq);
  const std::vector<TokenSeq> one{seq};
  Rng rng(state_hash(seed_, 4, one));
  for (auto& d : out) {
    if (!rng.bernoulli(p_)) continue;
    d = certain(static_cast<TokenId>(rng.uniform_int(
        Vocab::kNumReserved, static_cast<std::int64_t>(vocab_size_) - 1)));
  }
  return out;
}

std::vector<std::vector<double>> StubPolicy::del(
    const TokenSeq&, std::span<const TokenSeq> seqs) const {
  std::vector<std::vector<double>> out;
  for (const auto& s : seqs) out.emplace_back(s.size(), 0.9);
  return out;
}

PlhLogits StubPolicy::plh(const TokenSeq& x, std::span<const TokenSeq> seqs,
                          std::size_t k_max) const {
  std::size_t gaps = 0;
  for (const auto& s : seqs) gaps = std::max(gaps, s.size() + 1);
  PlhLogits out(seqs.size(), gaps, k_max);
  for (std::size_t n = 0; n < seqs.size(); ++n) {
    for (std::size_t g = 0; g <= seqs[n].size(); ++g) {
      out.valid[n * gaps + g] = 1;
      auto r = out.row(n, g);
      if (seqs[n].empty()) {
        std::fill(r.begin(), r.end(), -30.0);
        r[std::min(x.size(), k_max)] = 0.0;
      } else {
        std::fill(r.begin(), r.end(), -plh_margin_ - 5.0);
        r[0] = 0.0;
        if (k_max >= 1) r[1] = -plh_margin_;
      }
      PlhLogits::normalize_row(r);
    }
  }
  return out;
}

std::vector<std::vector<double>> StubPolicy::cmb(
    const TokenSeq&, std::span<const TokenSeq> seqs) const {
  std::vector<std::vector<double>> out;
  for (const auto& s : seqs) {
    std::vector<double> r(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) r[j] = s[j] == Vocab::kPlh ? 0.0 : 0.9;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TokenDist> StubPolicy::tok(const TokenSeq& x, const TokenSeq& seq) const {
  std::vector<TokenDist> out;
  for (std::size_t j = 0; j < seq.size(); ++j) {
    if (seq[j] != Vocab::kPlh) continue;
    if (x.empty()) {
      out.push_back(certain(Vocab::kUnk));
    } else {
      const std::size_t i = j % x.size();
      out.push_back(certain(x[i], x.surface(i)));
    }
  }
  return out;
}

std::vector<std::vector<double>> OscillatingPolicy::del(
    const TokenSeq&, std::span<const TokenSeq> seqs) const {
  std::vector<std::vector<double>> out;
  for (const auto& s : seqs) {
    std::vector<double> r(s.size(), 1.0);
    if (s.size() >= 2) r[0] = 0.0;
    out.push_back(std::move(r));
  }
  return out;
}

PlhLogits OscillatingPolicy::plh(const TokenSeq&, std::span<const TokenSeq> seqs,
                                 std::size_t k_max) const {
  std::vector<std::vector<std::size_t>> counts;
  for (const auto& s : seqs) {
    std::vector<std::size_t> c(s.size() + 1, 0);
    if (s.size() == 1) c.back() = 1;
    counts.push_back(std::move(c));
  }
  return PlhLogits::one_hot(counts, k_max);
}

std::vector<std::vector<double>> OscillatingPolicy::cmb(
    const TokenSeq&, std::span<const TokenSeq> seqs) const {
  std::vector<std::vector<double>> out;
  for (const auto& s : seqs) {
    std::vector<double> r(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) r[j] = s[j] == Vocab::kPlh ? 0.0 : 1.0;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TokenDist> OscillatingPolicy::tok(const TokenSeq&,
                                              const TokenSeq& seq) const {
  std::vector<TokenDist> out;
  for (std::size_t j = 0; j < seq.size(); ++j) {
    if (seq[j] != Vocab::kPlh) continue;
    const bool left_is_a = j > 0 && seq[j - 1] == a_;
    out.push_back(certain(left_is_a ? b_ : a_));
  }
  return out;
}

std::vector<DecodeResult> decode_batch(std::span<const DecodeJob> jobs,
                                       const DecodeConfig& cfg) {
  std::vector<DecodeResult> out(jobs.size());
  FirstException err;
  const auto n = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    err.run([&] { out[i] = decode(jobs[i].x, jobs[i].matches, *jobs[i].policy, cfg); });
  }
  err.rethrow();
  return out;
}

std::vector<DecodeResult> decode_batch_serial(std::span<const DecodeJob> jobs,
                                              const DecodeConfig& cfg) {
  std::vector<DecodeResult> out;
  out.reserve(jobs.size());
  for (const auto& j : jobs) out.push_back(decode(j.x, j.matches, *j.policy, cfg));
  return out;
}

json trace_to_json(std::span<const TraceRound> trace, const Vocab& vocab) {
  json out = json::array();
  for (const auto& r : trace) {
    json fills = json::array();
    for (const Fill& f : r.tok) {
      fills.push_back({{"pos", f.pos},
                       {"token", f.surface.empty() ? vocab.token(f.token) : f.surface}});
    }
    json rec = {{"round", r.round}, {"del", r.del}, {"plh", r.plh}, {"tok", fills}};
    if (r.round == 0) {
      rec["cmb"] = r.cmb;
      rec["realigned"] = r.realigned;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

json provenance_to_json(const Provenance& prov) {
  json out = json::array();
  for (const Origin& o : prov) {
    out.push_back(o.is_copy() ? json::array({o.seq, o.pos}) : json(nullptr));
  }
  return out;
}

}  // namespace tmedit
