#include "tmedit/edit_ops.hpp"

#include <string>

#include "tmedit/errors.hpp"

namespace tmedit {

namespace {

void append(TrackedSeq& dst, const TrackedSeq& src, std::size_t i) {
  dst.tokens.push_back(src.tokens[i], src.tokens.surface(i));
  dst.origins.push_back(src.origins[i]);
}

}  // namespace

TrackedSeq TrackedSeq::from_match(const TokenSeq& match, std::size_t n) {
  TrackedSeq t{match, {}};
  t.origins.reserve(match.size());
  for (std::size_t i = 0; i < match.size(); ++i) {
    t.origins.push_back(Origin::copy(n, i));
  }
  return t;
}

TrackedSeq TrackedSeq::untracked(const TokenSeq& seq) {
  return {seq, Provenance(seq.size(), Origin::generated())};
}

EditScript derive_edits(const AlignmentGraph& graph,
                        std::span<const TokenSeq> matches, const TokenSeq& ref,
                        std::size_t k_max) {
  graph.validate(matches, ref);
  const std::size_t n_seqs = matches.size();
  const std::size_t m = ref.size();
  EditScript script;
  script.del_masks.resize(n_seqs);
  script.plh_counts.resize(n_seqs);
  script.cmb_keep.resize(n_seqs);

  for (std::size_t n = 0; n < n_seqs; ++n) {
    const auto pairs = graph.edges_of(n);
    auto& keep = script.del_masks[n];
    keep.assign(matches[n].size(), false);
    for (const auto& p : pairs) keep[p.i] = true;
    script.plh_seqs.push_back(apply_deletion(matches[n], keep));

    // Kept token t lands on reference position pairs[t].j.
    auto& counts = script.plh_counts[n];
    std::size_t next_free = 0;
    for (std::size_t t = 0; t <= pairs.size(); ++t) {
      const std::size_t target = t < pairs.size() ? pairs[t].j : m;
      const std::size_t gap = target - next_free;
      if (gap > k_max) throw GapOverflowError(n, t, gap, k_max);
      counts.push_back(gap);
      next_free = target + 1;
    }
    script.cmb_seqs.push_back(
        apply_insertion(script.plh_seqs.back(), counts, k_max));

    auto& cmb = script.cmb_keep[n];
    const TokenSeq& y = script.cmb_seqs.back();
    cmb.resize(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) cmb[j] = y[j] != Vocab::kPlh;
  }

  if (n_seqs == 0) {
    TokenSeq all_plh;
    for (std::size_t j = 0; j < m; ++j) all_plh.push_back(Vocab::kPlh);
    script.tok_seq = all_plh;
  } else {
    script.tok_seq = combine(script.cmb_seqs, script.cmb_keep);
  }
  script.tok_fills = fills_from_reference(script.tok_seq, ref);
  return script;
}

std::vector<Fill> fills_from_reference(const TokenSeq& seq,
                                       const TokenSeq& ref) {
  std::vector<Fill> fills;
  for (std::size_t j = 0; j < seq.size(); ++j) {
    if (seq[j] != Vocab::kPlh) continue;
    if (j >= ref.size()) {
      throw InvariantError("placeholder beyond the reference length");
    }
    fills.push_back({j, ref[j], std::string(ref.surface(j))});
  }
  return fills;
}

TrackedSeq apply_deletion(const TrackedSeq& seq, const std::vector<bool>& keep) {
  if (keep.size() != seq.tokens.size()) {
    throw DataError("deletion mask has " + std::to_string(keep.size()) +
                    " entries for " + std::to_string(seq.tokens.size()) +
                    " tokens");
  }
  TrackedSeq out;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) append(out, seq, i);
  }
  return out;
}

TokenSeq apply_deletion(const TokenSeq& seq, const std::vector<bool>& keep) {
  return apply_deletion(TrackedSeq::untracked(seq), keep).tokens;
}

TrackedSeq apply_insertion(const TrackedSeq& seq,
                           const std::vector<std::size_t>& counts,
                           std::size_t k_max) {
  if (counts.size() != seq.tokens.size() + 1) {
    throw DataError("insertion needs " + std::to_string(seq.tokens.size() + 1) +
                    " gap counts, got " + std::to_string(counts.size()));
  }
  TrackedSeq out;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    if (counts[g] > k_max) throw GapOverflowError(0, g, counts[g], k_max);
    for (std::size_t c = 0; c < counts[g]; ++c) {
      out.tokens.push_back(Vocab::kPlh);
      out.origins.push_back(Origin::generated());
    }
    if (g < seq.tokens.size()) append(out, seq, g);
  }
  return out;
}

TokenSeq apply_insertion(const TokenSeq& seq,
                         const std::vector<std::size_t>& counts,
                         std::size_t k_max) {
  return apply_insertion(TrackedSeq::untracked(seq), counts, k_max).tokens;
}

TrackedSeq combine(std::span<const TrackedSeq> cmb_seqs,
                   const std::vector<std::vector<bool>>& keep) {
  if (cmb_seqs.empty()) throw DataError("combination needs at least one sequence");
  if (keep.size() != cmb_seqs.size()) {
    throw DataError("combination keep matrix has wrong number of rows");
  }
  const std::size_t len = cmb_seqs.front().tokens.size();
  for (std::size_t n = 0; n < cmb_seqs.size(); ++n) {
    if (cmb_seqs[n].tokens.size() != len || keep[n].size() != len) {
      std::string lengths;
      for (const auto& s : cmb_seqs) {
        lengths += (lengths.empty() ? "" : ",") + std::to_string(s.tokens.size());
      }
      throw DataError("combination needs equal lengths, got [" + lengths + "]");
    }
  }
  TrackedSeq out;
  for (std::size_t j = 0; j < len; ++j) {
    bool placed = false;
    for (std::size_t n = 0; n < cmb_seqs.size() && !placed; ++n) {
      if (keep[n][j] && cmb_seqs[n].tokens[j] != Vocab::kPlh) {
        append(out, cmb_seqs[n], j);
        placed = true;
      }
    }
    if (!placed) {
      out.tokens.push_back(Vocab::kPlh);
      out.origins.push_back(Origin::generated());
    }
  }
  return out;
}

TokenSeq combine(std::span<const TokenSeq> cmb_seqs,
                 const std::vector<std::vector<bool>>& keep) {
  std::vector<TrackedSeq> tracked;
  tracked.reserve(cmb_seqs.size());
  for (const auto& s : cmb_seqs) tracked.push_back(TrackedSeq::untracked(s));
  return combine(std::span<const TrackedSeq>(tracked), keep).tokens;
}

TrackedSeq fill_tokens(const TrackedSeq& seq, std::span<const Fill> fills) {
  std::vector<const Fill*> at(seq.tokens.size(), nullptr);
  for (const Fill& f : fills) {
    if (f.pos >= seq.tokens.size() || seq.tokens[f.pos] != Vocab::kPlh) {
      throw DataError("fill at position " + std::to_string(f.pos) +
                      " does not target a placeholder");
    }
    at[f.pos] = &f;
  }
  TrackedSeq out;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (at[i]) {
      out.tokens.push_back(at[i]->token, at[i]->surface);
      out.origins.push_back(Origin::generated());
    } else {
      append(out, seq, i);
    }
  }
  return out;
}

TokenSeq fill_tokens(const TokenSeq& seq, std::span<const Fill> fills) {
  return fill_tokens(TrackedSeq::untracked(seq), fills).tokens;
}

ReplayResult replay(const EditScript& script, std::span<const TokenSeq> matches,
                    std::size_t k_max) {
  const std::size_t n_seqs = matches.size();
  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(name, e.what());
    }
  };
  if (script.del_masks.size() != n_seqs || script.plh_counts.size() != n_seqs ||
      script.cmb_keep.size() != n_seqs) {
    throw StageError("script", "script does not match the number of sequences");
  }
  std::vector<TrackedSeq> cmb;
  for (std::size_t n = 0; n < n_seqs; ++n) {
    const TrackedSeq kept = stage("deletion", [&] {
      return apply_deletion(TrackedSeq::from_match(matches[n], n),
                            script.del_masks[n]);
    });
    cmb.push_back(stage("insertion", [&] {
      return apply_insertion(kept, script.plh_counts[n], k_max);
    }));
  }
  TrackedSeq tok;
  if (n_seqs == 0) {
    tok = TrackedSeq::untracked(script.tok_seq);
  } else {
    tok = stage("combination", [&] {
      return combine(std::span<const TrackedSeq>(cmb), script.cmb_keep);
    });
  }
  TrackedSeq out = stage("prediction", [&] {
    return fill_tokens(tok, script.tok_fills);
  });
  for (TokenId id : out.tokens.content()) {
    if (id == Vocab::kPlh) {
      throw StageError("prediction", "placeholders remain after filling");
    }
  }
  return {std::move(out.tokens), std::move(out.origins)};
}

}  // namespace tmedit
