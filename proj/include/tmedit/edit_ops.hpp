#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tmedit/alignment.hpp"
#include "tmedit/token_seq.hpp"

namespace tmedit {

// Maximal number of placeholders inserted in one gap.
inline constexpr std::size_t kDefaultKMax = 64;

// Where an output token comes from: a copy of token `pos` of match `seq`, or
// generated by token prediction (seq < 0).
struct Origin {
  std::int32_t seq = -1;
  std::int32_t pos = -1;

  bool is_copy() const { return seq >= 0; }
  static Origin copy(std::size_t n, std::size_t i) {
    return {static_cast<std::int32_t>(n), static_cast<std::int32_t>(i)};
  }
  static Origin generated() { return {}; }
  friend bool operator==(const Origin&, const Origin&) = default;
};
using Provenance = std::vector<Origin>;

// A sequence whose content tokens each carry an Origin (placeholders carry a
// generated origin until filled).
struct TrackedSeq {
  TokenSeq tokens;
  Provenance origins;

  // Every token of `match` marked as a copy from sequence n.
  static TrackedSeq from_match(const TokenSeq& match, std::size_t n);
  static TrackedSeq untracked(const TokenSeq& seq);
};

struct Fill {
  std::size_t pos = 0;
  TokenId token = Vocab::kUnk;
  std::string surface;  // only for <UNK> with a known surface
  friend bool operator==(const Fill&, const Fill&) = default;
};

// The four expert stages with their intermediate sequences.
struct EditScript {
  std::vector<std::vector<bool>> del_masks;          // per match, per token
  std::vector<std::vector<std::size_t>> plh_counts;  // per match, |y^plh|+1
  std::vector<std::vector<bool>> cmb_keep;           // per match, per position
  std::vector<Fill> tok_fills;

  std::vector<TokenSeq> plh_seqs;  // after deletion
  std::vector<TokenSeq> cmb_seqs;  // after insertion, all of reference length
  TokenSeq tok_seq;                // after combination
};

// Expert script from an alignment: keep edge-incident tokens, pad each match
// so that token j sits at reference position j, keep every non-placeholder,
// fill the rest from the reference. Throws GapOverflowError when a gap needs
// more than k_max placeholders.
EditScript derive_edits(const AlignmentGraph& graph,
                        std::span<const TokenSeq> matches, const TokenSeq& ref,
                        std::size_t k_max = kDefaultKMax);

// keep.size() must equal the content length.
TokenSeq apply_deletion(const TokenSeq& seq, const std::vector<bool>& keep);
TrackedSeq apply_deletion(const TrackedSeq& seq, const std::vector<bool>& keep);

// counts.size() must equal content length + 1; counts[g] placeholders go
// before content token g (counts.back() before <EOS>).
TokenSeq apply_insertion(const TokenSeq& seq,
                         const std::vector<std::size_t>& counts,
                         std::size_t k_max = kDefaultKMax);
TrackedSeq apply_insertion(const TrackedSeq& seq,
                           const std::vector<std::size_t>& counts,
                           std::size_t k_max = kDefaultKMax);

// Position-wise merge of equal-length sequences. At each position the kept
// non-placeholder token of the lowest sequence index wins; otherwise <PLH>.
TokenSeq combine(std::span<const TokenSeq> cmb_seqs,
                 const std::vector<std::vector<bool>>& keep);
TrackedSeq combine(std::span<const TrackedSeq> cmb_seqs,
                   const std::vector<std::vector<bool>>& keep);

// Every fill must target a placeholder.
TokenSeq fill_tokens(const TokenSeq& seq, std::span<const Fill> fills);
TrackedSeq fill_tokens(const TrackedSeq& seq, std::span<const Fill> fills);

struct ReplayResult {
  TokenSeq output;
  Provenance provenance;
};

// Applies deletion, insertion, combination and filling in order. Errors are
// rethrown as StageError tagged with the failing stage.
ReplayResult replay(const EditScript& script,
                    std::span<const TokenSeq> matches,
                    std::size_t k_max = kDefaultKMax);

// Fill list that turns every placeholder of `seq` into the reference token at
// the same position.
std::vector<Fill> fills_from_reference(const TokenSeq& seq, const TokenSeq& ref);

}  // namespace tmedit
