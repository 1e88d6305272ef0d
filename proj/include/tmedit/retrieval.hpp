#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tmedit/token_seq.hpp"
#include "tmedit/vocab.hpp"

namespace tmedit {

// Unit-cost Levenshtein distance over content tokens.
std::size_t edit_distance(std::span<const TokenKey> a,
                          std::span<const TokenKey> b);
std::size_t edit_distance(const TokenSeq& a, const TokenSeq& b);

// Banded variant: the exact distance if it is <= max_distance, otherwise
// nullopt (the computation stops as soon as every band cell exceeds it).
std::optional<std::size_t> bounded_edit_distance(std::span<const TokenKey> a,
                                                 std::span<const TokenKey> b,
                                                 std::size_t max_distance);

// 1 - ED / max(|a|, |b|); two empty sequences score 1.
double similarity_from_distance(std::size_t distance, std::size_t len_a,
                                std::size_t len_b);
double similarity(const TokenSeq& a, const TokenSeq& b);

struct TMEntry {
  std::int64_t id = 0;
  TokenSeq src;
  TokenSeq tgt;
};

struct Match {
  std::int64_t id = 0;
  std::size_t entry = 0;  // position in the index
  double score = 0.0;
};

struct MatchSet {
  TokenSeq query;
  std::vector<Match> matches;  // score desc, then id asc
  std::size_t capacity = 0;
};

enum class Granularity { kToken, kCharacter };

struct RetrieveOptions {
  double tau = 0.4;
  std::size_t n_max = 3;
  // Leave-one-out: skip entries whose id equals query_id and whose source
  // equals the query.
  bool exclude_self = false;
  std::optional<std::int64_t> query_id;
};

struct Query {
  TokenSeq tokens;
  std::optional<std::int64_t> id;
};

// Source-side fuzzy-match index: entries bucketed by source length, each
// bucket holding token postings used to bound the distance before running a
// banded DP. Results are identical to `retrieve_brute_force`.
class TMIndex {
 public:
  TMIndex() = default;
  // Character granularity compares code points of the detokenized source and
  // needs the vocabulary.
  static TMIndex build(std::vector<TMEntry> tm,
                       Granularity granularity = Granularity::kToken,
                       const Vocab* vocab = nullptr);

  MatchSet retrieve(const TokenSeq& x, const RetrieveOptions& opts) const;
  // Reference scan over every entry with the full DP.
  MatchSet retrieve_brute_force(const TokenSeq& x,
                                const RetrieveOptions& opts) const;

  // One query per element; OpenMP over queries.
  std::vector<MatchSet> retrieve_batch(std::span<const Query> queries,
                                       const RetrieveOptions& opts) const;
  std::vector<MatchSet> retrieve_batch_serial(std::span<const Query> queries,
                                              const RetrieveOptions& opts) const;

  const std::vector<TMEntry>& entries() const { return entries_; }
  const TMEntry& entry(const Match& m) const { return entries_[m.entry]; }
  std::size_t size() const { return entries_.size(); }
  Granularity granularity() const { return granularity_; }
  // Number of length buckets containing entry `i` (always 1).
  std::size_t buckets_containing(std::size_t i) const;

 private:
  struct Posting {
    std::uint32_t local;  // index within the bucket
    std::uint32_t count;
  };
  struct Bucket {
    std::vector<std::uint32_t> members;  // entry indices
    std::unordered_map<TokenKey, std::vector<Posting>> postings;
  };

  std::vector<TokenKey> units(const TokenSeq& seq) const;
  bool is_self(std::size_t entry, std::span<const TokenKey> q,
               const RetrieveOptions& opts) const;

  Granularity granularity_ = Granularity::kToken;
  const Vocab* vocab_ = nullptr;
  std::vector<TMEntry> entries_;
  std::vector<std::vector<TokenKey>> units_;
  std::unordered_map<std::string, TokenKey> surface_keys_;
  std::map<std::size_t, Bucket> buckets_;
};

}  // namespace tmedit
