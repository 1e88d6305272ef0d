#include "tmedit/rollin.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>

#include "tmedit/errors.hpp"
#include "tmedit/parallel.hpp"

namespace tmedit {

namespace {

constexpr std::array<std::string_view, kNumFamilies> kFamilyNames = {
    "expert-del", "expert-plh", "expert-cmb",     "expert-tok", "rnd-del-N",
    "sel-noise",  "post-plh",   "post-del",       "post-del-extra",
    "rnd-msk"};

void append_token(TokenSeq& dst, const TokenSeq& src, std::size_t i) {
  dst.push_back(src[i], src.surface(i));
}

// Replaces position `pos` of `seq`, keeping the other tokens and surfaces.
TokenSeq with_token(const TokenSeq& seq, std::size_t pos, TokenId id,
                    std::string_view surface) {
  TokenSeq out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i == pos) {
      out.push_back(id, surface);
    } else {
      append_token(out, seq, i);
    }
  }
  return out;
}

std::vector<std::size_t> plh_positions(const TokenSeq& seq) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq[i] == Vocab::kPlh) out.push_back(i);
  }
  return out;
}

// Uniformly random subset of size k from [0, n), sorted (Floyd's algorithm).
std::vector<std::size_t> random_subset(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<bool> chosen(n, false);
  for (std::size_t j = n - k; j < n; ++j) {
    const auto t = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(j)));
    chosen[chosen[t] ? j : t] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (chosen[i]) out.push_back(i);
  }
  return out;
}

// Placeholder counts that put kept ref positions back in place.
std::vector<std::size_t> gaps_for(const std::vector<std::size_t>& kept,
                                  std::size_t ref_len, std::size_t k_max) {
  std::vector<std::size_t> gaps;
  std::size_t next = 0;
  for (std::size_t t = 0; t <= kept.size(); ++t) {
    const std::size_t target = t < kept.size() ? kept[t] : ref_len;
    if (target - next > k_max) throw GapOverflowError(0, t, target - next, k_max);
    gaps.push_back(target - next);
    next = target + 1;
  }
  return gaps;
}

StateSample make_sample(Family f, Stage s) {
  StateSample out;
  out.family = f;
  out.stage = s;
  return out;
}

// plh, cmb and tok samples of an expert script.
void push_script_states(const EditScript& script, Family f,
                        std::vector<StateSample>& out) {
  StateSample plh = make_sample(f, Stage::kPlh);
  plh.state = script.plh_seqs;
  plh.plh = script.plh_counts;
  out.push_back(std::move(plh));
  StateSample cmb = make_sample(f, Stage::kCmb);
  cmb.state = script.cmb_seqs;
  cmb.cmb = script.cmb_keep;
  out.push_back(std::move(cmb));
  StateSample tok = make_sample(f, Stage::kTok);
  tok.state = {script.tok_seq};
  tok.tok = script.tok_fills;
  out.push_back(std::move(tok));
}

void push_expert_states(const EditScript& script,
                        std::span<const TokenSeq> matches,
                        std::vector<StateSample>& out) {
  StateSample del = make_sample(Family::kExpertDel, Stage::kDel);
  del.state.assign(matches.begin(), matches.end());
  del.del = script.del_masks;
  out.push_back(std::move(del));
  const std::size_t first = out.size();
  push_script_states(script, Family::kExpertPlh, out);
  out[first + 1].family = Family::kExpertCmb;
  out[first + 2].family = Family::kExpertTok;
}

struct Span {
  std::size_t start = 0;
  std::size_t len = 0;
};

std::vector<Span> random_spans(std::size_t m, std::size_t n, Rng& rng) {
  std::vector<Span> spans;
  for (std::size_t k = 0; k < n; ++k) {
    const auto start = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(m)));
    const auto len = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(m - start)));
    spans.push_back({start, len});
  }
  return spans;
}

bool is_subsequence(const TokenSeq& y, const std::vector<bool>& keep,
                    const TokenSeq& ref) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!keep[i]) continue;
    while (j < ref.size() && !same_token(y, i, ref, j)) ++j;
    if (j == ref.size()) return false;
    ++j;
  }
  return true;
}

}  // namespace

std::string_view family_name(Family f) {
  return kFamilyNames[static_cast<std::size_t>(f)];
}

Family family_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumFamilies; ++i) {
    if (kFamilyNames[i] == name) return static_cast<Family>(i);
  }
  throw DataError("unknown state family '" + std::string(name) + "'");
}

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::kDel: return "del";
    case Stage::kPlh: return "plh";
    case Stage::kCmb: return "cmb";
    case Stage::kTok: return "tok";
  }
  return "?";
}

void RollinConfig::validate() const {
  const std::array<std::pair<const char*, double>, 5> probs = {{{"alpha", alpha},
                                                               {"beta", beta},
                                                               {"gamma", gamma},
                                                               {"delta", delta},
                                                               {"epsilon", epsilon}}};
  for (const auto& [name, p] : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw UsageError(std::string("rollin: ") + name + " must be in [0, 1]");
    }
  }
  if (n_random == 0) throw UsageError("rollin: N must be >= 1");
  if (k == 0) throw UsageError("rollin: k must be >= 1");
  if (!(extra_insert_mean >= 0.0)) {
    throw UsageError("rollin: extra_insert_mean must be >= 0");
  }
}

UniformFiller::UniformFiller(std::size_t vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size_ <= static_cast<std::size_t>(Vocab::kNumReserved)) {
    throw UsageError("uniform filler needs at least one regular token");
  }
}

void UniformFiller::fill(const TokenSeq&, TokenSeq& state, Rng& rng) const {
  for (std::size_t pos : plh_positions(state)) {
    const auto id = static_cast<TokenId>(rng.uniform_int(
        Vocab::kNumReserved, static_cast<std::int64_t>(vocab_size_) - 1));
    state = with_token(state, pos, id, {});
  }
}

void ReferenceFiller::fill(const TokenSeq& ref, TokenSeq& state, Rng&) const {
  if (ref.empty()) return;
  for (std::size_t pos : plh_positions(state)) {
    const std::size_t j = pos % ref.size();
    state = with_token(state, pos, ref[j], ref.surface(j));
  }
}

void AdversarialFiller::fill(const TokenSeq& ref, TokenSeq& state, Rng&) const {
  TokenId id = Vocab::kNumReserved;
  while (ref.count(id) > 0) ++id;
  for (std::size_t pos : plh_positions(state)) {
    state = with_token(state, pos, id, {});
  }
}

GeometricInserter::GeometricInserter(double mean, std::size_t k_max)
    : success_(1.0 / (1.0 + mean)), k_max_(k_max) {}

std::vector<std::size_t> GeometricInserter::counts(std::size_t n_gaps,
                                                   Rng& rng) const {
  std::vector<std::size_t> out(n_gaps);
  for (auto& c : out) {
    c = std::min(static_cast<std::size_t>(rng.geometric(success_)), k_max_);
  }
  return out;
}

std::vector<StateSample> gen_expert_states(const TokenSeq& x,
                                           std::span<const TokenSeq> matches,
                                           const TokenSeq& ref, std::size_t k,
                                           std::size_t k_max) {
  if (matches.empty()) throw DataError("expert states need at least one match");
  const AlignmentGraph graph = nway_align(matches, ref, k);
  std::vector<StateSample> out;
  push_expert_states(derive_edits(graph, matches, ref, k_max), matches, out);
  for (auto& s : out) s.source = x;
  return out;
}

TokenSeq substring(const TokenSeq& ref, std::size_t start, std::size_t len) {
  TokenSeq out;
  for (std::size_t i = start; i < start + len; ++i) append_token(out, ref, i);
  return out;
}

std::vector<TokenSeq> rnd_del_n(const TokenSeq& ref, std::size_t n, Rng& rng) {
  std::vector<TokenSeq> out;
  for (const Span& s : random_spans(ref.size(), n, rng)) {
    out.push_back(substring(ref, s.start, s.len));
  }
  return out;
}

SelNoiseResult sel_noise(std::span<const TokenSeq> cmb_seqs,
                         std::span<const TokenSeq> matches, const TokenSeq& ref,
                         double gamma, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> pool;  // (match, pos)
  for (std::size_t n = 0; n < matches.size(); ++n) {
    for (std::size_t i = 0; i < matches[n].size(); ++i) pool.emplace_back(n, i);
  }
  SelNoiseResult res;
  for (const TokenSeq& seq : cmb_seqs) {
    TokenSeq noised = seq;
    if (!pool.empty()) {
      for (std::size_t pos : plh_positions(seq)) {
        ++res.placeholders;
        if (!rng.bernoulli(gamma)) continue;
        const auto& [n, i] = pool[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
        noised = with_token(noised, pos, matches[n][i], matches[n].surface(i));
        ++res.replaced;
      }
    }
    std::vector<bool> keep(noised.size(), false);
    for (std::size_t j = 0; j < noised.size(); ++j) {
      keep[j] = noised[j] != Vocab::kPlh && j < ref.size() &&
                same_token(noised, j, ref, j);
    }
    res.cmb_seqs.push_back(std::move(noised));
    res.keep.push_back(std::move(keep));
  }
  return res;
}

StateSample rnd_del_1(const TokenSeq& ref, double alpha, Rng& rng) {
  StateSample s = make_sample(Family::kPostPlh, Stage::kPlh);
  s.trials = 1;
  const std::size_t m = ref.size();
  std::vector<std::size_t> kept;
  if (rng.bernoulli(alpha)) {
    s.hits = 1;
    for (std::size_t j = 0; j < m; ++j) kept.push_back(j);
  } else {
    const auto len = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(m)));
    kept = random_subset(m, len, rng);
  }
  TokenSeq state;
  for (std::size_t j : kept) append_token(state, ref, j);
  s.state = {std::move(state)};
  s.plh = {gaps_for(kept, m, std::numeric_limits<std::size_t>::max())};
  return s;
}

StateSample correct_mistakes_state(const TokenSeq& ref, double mask_rate,
                                   const TokenFiller& filler, Rng& rng) {
  StateSample s = make_sample(Family::kPostDel, Stage::kDel);
  TokenSeq state;
  for (std::size_t j = 0; j < ref.size(); ++j) {
    ++s.trials;
    if (rng.bernoulli(mask_rate)) {
      state.push_back(Vocab::kPlh);
      ++s.hits;
    } else {
      append_token(state, ref, j);
    }
  }
  filler.fill(ref, state, rng);
  s.del = {expert_del_labels(state, ref)};
  s.state = {std::move(state)};
  return s;
}

StateSample extra_tokens_state(const TokenSeq& ref, const Inserter& inserter,
                               const TokenFiller& filler, Rng& rng,
                               std::size_t k_max) {
  StateSample s = make_sample(Family::kPostDelExtra, Stage::kDel);
  const auto counts = inserter.counts(ref.size() + 1, rng);
  TokenSeq state = apply_insertion(ref, counts, k_max);
  s.trials = counts.size();
  for (std::size_t c : counts) s.hits += c;
  filler.fill(ref, state, rng);
  s.del = {expert_del_labels(state, ref)};
  s.state = {std::move(state)};
  return s;
}

StateSample rnd_mask(const TokenSeq& ref, double epsilon, Rng& rng) {
  StateSample s = make_sample(Family::kRndMsk, Stage::kTok);
  TokenSeq state;
  for (std::size_t j = 0; j < ref.size(); ++j) {
    ++s.trials;
    if (rng.bernoulli(epsilon)) {
      state.push_back(Vocab::kPlh);
      s.tok.push_back({j, ref[j], std::string(ref.surface(j))});
      ++s.hits;
    } else {
      append_token(state, ref, j);
    }
  }
  s.state = {std::move(state)};
  return s;
}

std::vector<bool> expert_del_labels(const TokenSeq& y, const TokenSeq& ref) {
  std::vector<bool> keep(y.size(), false);
  const auto best = kbest_1way(y, ref, 1);
  if (!best.empty()) {
    for (const auto& p : best.front().pairs) keep[p.i] = true;
  }
  return keep;
}

std::vector<TokenSeq> synth_matches(const TokenSeq& y, const SynthOptions& opts,
                                    const TokenFiller& filler, Rng& rng) {
  if (!(opts.r >= 0.0 && opts.r <= 1.0)) throw UsageError("synth: r must be in [0, 1]");
  if (!(opts.f >= 0.0)) throw UsageError("synth: f must be >= 0");
  const std::size_t m = y.size();
  const auto len = std::min(
      m, static_cast<std::size_t>(std::llround(static_cast<double>(m) * opts.r)));
  std::vector<TokenSeq> out;
  for (std::size_t k = 0; k < opts.n; ++k) {
    const auto start = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(m - len)));
    const double factor = opts.f > 0.0 ? rng.uniform_real(1.0, 1.0 + opts.f) : 1.0;
    const auto target = static_cast<std::size_t>(
        std::llround(static_cast<double>(len) * factor));
    TokenSeq seq = substring(y, start, len);
    for (std::size_t e = len; e < target; ++e) {
      const auto pos = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(seq.size())));
      TokenSeq next;
      for (std::size_t i = 0; i <= seq.size(); ++i) {
        if (i == pos) next.push_back(Vocab::kPlh);
        if (i < seq.size()) append_token(next, seq, i);
      }
      seq = std::move(next);
    }
    filler.fill(y, seq, rng);
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<StateSample> gen_sample_states(const RollinInput& in,
                                           std::uint64_t sample_id,
                                           const RollinConfig& cfg,
                                           const RollinPolicies& pol) {
  if (!pol.filler || !pol.inserter) throw UsageError("rollin: missing policies");
  Rng rng = Rng::derive(cfg.seed, sample_id);
  std::vector<StateSample> out;
  const TokenSeq& ref = in.ref;

  std::optional<EditScript> script;
  if (!in.matches.empty()) {
    try {
      const AlignmentGraph graph = nway_align(in.matches, ref, cfg.k);
      script = derive_edits(graph, in.matches, ref, cfg.k_max);
      push_expert_states(*script, in.matches, out);
    } catch (const GapOverflowError&) {
      script.reset();
    }
  }

  if (rng.bernoulli(cfg.beta)) {
    const auto spans = random_spans(ref.size(), cfg.n_random, rng);
    std::vector<TokenSeq> subs;
    std::vector<std::size_t> lengths;
    std::vector<Edge> edges;
    for (std::size_t n = 0; n < spans.size(); ++n) {
      subs.push_back(substring(ref, spans[n].start, spans[n].len));
      lengths.push_back(spans[n].len);
      for (std::size_t i = 0; i < spans[n].len; ++i) {
        edges.push_back({n, i, spans[n].start + i});
      }
    }
    try {
      const AlignmentGraph graph(lengths, ref.size(), std::move(edges));
      push_script_states(derive_edits(graph, subs, ref, cfg.k_max),
                         Family::kRndDelN, out);
    } catch (const GapOverflowError&) {
    }
  }

  if (script && cfg.gamma > 0.0) {
    SelNoiseResult noised =
        sel_noise(script->cmb_seqs, in.matches, ref, cfg.gamma, rng);
    StateSample s = make_sample(Family::kSelNoise, Stage::kCmb);
    s.state = std::move(noised.cmb_seqs);
    s.cmb = std::move(noised.keep);
    s.trials = noised.placeholders;
    s.hits = noised.replaced;
    out.push_back(std::move(s));
  }

  if (cfg.refinement_states) {
    StateSample post_plh = rnd_del_1(ref, cfg.alpha, rng);
    const auto& gaps = post_plh.plh.front();
    if (std::all_of(gaps.begin(), gaps.end(),
                    [&](std::size_t c) { return c <= cfg.k_max; })) {
      out.push_back(std::move(post_plh));
    }
    out.push_back(correct_mistakes_state(ref, cfg.epsilon, *pol.filler, rng));
    out.push_back(
        extra_tokens_state(ref, *pol.inserter, *pol.filler, rng, cfg.k_max));
  }

  if (rng.bernoulli(cfg.delta)) out.push_back(rnd_mask(ref, cfg.epsilon, rng));

  for (auto& s : out) {
    s.source = in.x;
    s.sample_id = sample_id;
  }
  return out;
}

std::vector<StateSample> gen_corpus(std::span<const RollinInput> inputs,
                                    const RollinConfig& cfg,
                                    const RollinPolicies& pol) {
  cfg.validate();
  std::vector<std::vector<StateSample>> parts(inputs.size());
  FirstException err;
  const auto n = static_cast<std::int64_t>(inputs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    err.run([&] {
      parts[i] = gen_sample_states(inputs[i], static_cast<std::uint64_t>(i), cfg, pol);
    });
  }
  err.rethrow();
  std::vector<StateSample> out;
  for (auto& p : parts) {
    std::move(p.begin(), p.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<StateSample> gen_corpus_serial(std::span<const RollinInput> inputs,
                                           const RollinConfig& cfg,
                                           const RollinPolicies& pol) {
  cfg.validate();
  std::vector<StateSample> out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto part = gen_sample_states(inputs[i], i, cfg, pol);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

std::string check_sample(const StateSample& s, const TokenSeq& ref) {
  try {
    switch (s.stage) {
      case Stage::kDel: {
        if (s.del.size() != s.state.size()) return "del label count";
        for (std::size_t n = 0; n < s.state.size(); ++n) {
          if (s.del[n].size() != s.state[n].size()) return "del label length";
          if (!is_subsequence(s.state[n], s.del[n], ref)) {
            return "kept tokens are not a subsequence of the reference";
          }
          if (s.family == Family::kPostDel || s.family == Family::kPostDelExtra) {
            const auto best = kbest_1way(s.state[n], ref, 1);
            const std::size_t lcs = best.empty() ? 0 : best.front().score();
            const auto kept = static_cast<std::size_t>(
                std::count(s.del[n].begin(), s.del[n].end(), true));
            if (kept != lcs) return "kept count differs from the LCS length";
          }
        }
        return {};
      }
      case Stage::kPlh: {
        if (s.plh.size() != s.state.size()) return "plh label count";
        for (std::size_t n = 0; n < s.state.size(); ++n) {
          const TokenSeq y = apply_insertion(
              s.state[n], s.plh[n], std::numeric_limits<std::size_t>::max());
          if (y.size() != ref.size()) return "insertion does not reach |ref|";
          for (std::size_t j = 0; j < y.size(); ++j) {
            if (y[j] != Vocab::kPlh && !same_token(y, j, ref, j)) {
              return "inserted skeleton misplaces a token";
            }
          }
        }
        return {};
      }
      case Stage::kCmb: {
        if (s.cmb.size() != s.state.size()) return "cmb label count";
        for (std::size_t n = 0; n < s.state.size(); ++n) {
          if (s.state[n].size() != ref.size() || s.cmb[n].size() != ref.size()) {
            return "cmb state length differs from |ref|";
          }
          for (std::size_t j = 0; j < ref.size(); ++j) {
            const bool good = s.state[n][j] != Vocab::kPlh &&
                              same_token(s.state[n], j, ref, j);
            if (s.cmb[n][j] != good) return "cmb label disagrees with the reference";
          }
        }
        return {};
      }
      case Stage::kTok: {
        if (s.state.size() != 1) return "tok state must be one sequence";
        if (!(fill_tokens(s.state.front(), s.tok) == ref)) {
          return "fills do not reproduce the reference";
        }
        return {};
      }
    }
  } catch (const Error& e) {
    return e.what();
  }
  return "unknown stage";
}

json sample_to_json(const StateSample& s, const Vocab& vocab, std::uint64_t seed) {
  json state = json::array();
  for (const auto& seq : s.state) state.push_back(token_strings(seq, vocab));
  json labels = json::object();
  switch (s.stage) {
    case Stage::kDel: labels["del"] = s.del; break;
    case Stage::kPlh: labels["plh"] = s.plh; break;
    case Stage::kCmb: labels["cmb"] = s.cmb; break;
    case Stage::kTok: {
      json fills = json::array();
      for (const Fill& f : s.tok) {
        fills.push_back({{"pos", f.pos},
                         {"token", f.surface.empty() ? vocab.token(f.token)
                                                     : f.surface}});
      }
      labels["tok"] = std::move(fills);
      break;
    }
  }
  json meta = {{"seed", seed}, {"sample_id", s.sample_id}};
  if (s.trials > 0) {
    meta["trials"] = s.trials;
    meta["hits"] = s.hits;
  }
  return {{"family", family_name(s.family)},
          {"stage", stage_name(s.stage)},
          {"x", token_strings(s.source, vocab)},
          {"state", std::move(state)},
          {"labels", std::move(labels)},
          {"meta", std::move(meta)}};
}

}  // namespace tmedit
