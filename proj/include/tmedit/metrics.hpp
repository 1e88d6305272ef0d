#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tmedit/corpus.hpp"
#include "tmedit/edit_ops.hpp"
#include "tmedit/token_seq.hpp"

namespace tmedit {

struct ClassStats {
  std::size_t matched = 0;  // clipped by reference n-gram counts
  std::size_t total = 0;
  std::optional<double> precision;  // empty when total == 0
  double share = 0.0;               // total / all n-grams of this order
};

// Classes are origin patterns joined by '-': "copy", "gen" for unigrams,
// "copy-copy", "copy-gen", "gen-copy", "gen-gen" for bigrams, and so on.
struct OrderStats {
  std::size_t order = 1;
  std::size_t total = 0;
  std::map<std::string, ClassStats> classes;
};

struct OriginStats {
  std::vector<OrderStats> orders;  // orders 1..max_order
};

// Corpus-level modified precision per origin class. Within each sentence a
// class's n-gram counts are clipped by the reference counts independently
// of the other classes.
OriginStats origin_ngram_stats(std::span<const TokenSeq> outputs,
                               std::span<const Provenance> provenance,
                               std::span<const TokenSeq> refs,
                               std::size_t max_order = 2);

struct CoverNoise {
  double cover = 0.0;
  double noise = 0.0;
};

// Bag-of-words cover of ref by the multiset union of the matches, and share
// of match tokens absent from ref. Empty ref: cover 1; no match tokens:
// noise 0.
CoverNoise cover_noise(const TokenSeq& ref, std::span<const TokenSeq> matches);

json to_json(const OriginStats& stats);

}  // namespace tmedit
