#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tmedit/token_seq.hpp"

namespace tmedit {

inline constexpr std::size_t kDefaultKBest = 10;
inline constexpr std::size_t kDefaultOracleBudget = 2'000'000;

// Monotone matching between content positions of one match (i) and the
// reference (j). Pairs are strictly increasing in both coordinates.
struct OneWayAlignment {
  struct Pair {
    std::size_t i = 0;
    std::size_t j = 0;
    auto operator<=>(const Pair&) const = default;
  };
  std::vector<Pair> pairs;
  std::size_t source_length = 0;
  std::size_t ref_length = 0;

  std::size_t score() const { return pairs.size(); }
  friend bool operator==(const OneWayAlignment&,
                         const OneWayAlignment&) = default;
};

struct Edge {
  std::size_t n = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  auto operator<=>(const Edge&) const = default;
};

struct CoverageStats {
  std::size_t covered = 0;      // reference positions touched by an edge
  std::size_t total_edges = 0;  // |E|
  auto operator<=>(const CoverageStats&) const = default;
};

// Bipartite edge set between N matches and the reference. Edges are kept
// sorted by (n, i, j). Sentinels never appear as edge endpoints.
class AlignmentGraph {
 public:
  AlignmentGraph() = default;
  AlignmentGraph(std::vector<std::size_t> match_lengths, std::size_t ref_length,
                 std::vector<Edge> edges);

  std::size_t n_seqs() const { return match_lengths_.size(); }
  const std::vector<std::size_t>& match_lengths() const {
    return match_lengths_;
  }
  std::size_t ref_length() const { return ref_length_; }
  const std::vector<Edge>& edges() const { return edges_; }

  CoverageStats coverage() const;
  // Reference positions covered by at least one edge.
  std::vector<bool> covered_mask() const;
  // Edges of sequence n as (i, j) pairs.
  std::vector<OneWayAlignment::Pair> edges_of(std::size_t n) const;

  // Checks identical endpoints and per-sequence non-crossing with distinct
  // coordinates; throws InvariantError on violation.
  void validate(std::span<const TokenSeq> matches, const TokenSeq& ref) const;

  friend bool operator==(const AlignmentGraph&,
                         const AlignmentGraph&) = default;

 private:
  std::vector<std::size_t> match_lengths_;
  std::size_t ref_length_ = 0;
  std::vector<Edge> edges_;
};

// Up to k distinct monotone matchings ordered by (score desc, edge list
// lexicographically asc). The first one is a longest common subsequence.
std::vector<OneWayAlignment> kbest_1way(std::span<const TokenKey> y,
                                        std::span<const TokenKey> ref,
                                        std::size_t k);
std::vector<OneWayAlignment> kbest_1way(const TokenSeq& y, const TokenSeq& ref,
                                        std::size_t k);

struct Recombination {
  AlignmentGraph graph;
  std::vector<std::size_t> choice;  // selected candidate index per sequence
};

// Picks one candidate per sequence maximizing (covered, total edges); ties
// go to the lexicographically smallest choice tuple. Branch and bound over
// the k^N tuples.
Recombination recombine(
    const std::vector<std::vector<OneWayAlignment>>& candidates,
    std::size_t ref_length);

// k-best 1-way alignments per match followed by recombination. No matches
// yields an empty graph.
AlignmentGraph nway_align(std::span<const TokenSeq> matches,
                          const TokenSeq& ref, std::size_t k = kDefaultKBest);

// Exact optimum of (covered, total edges) by dynamic programming over
// (reference position, progress in every match). Refuses (BudgetError) when
// prod(|y_n| + 1) * |ref| exceeds `budget`. Test oracle only.
AlignmentGraph exact_nway_oracle(std::span<const TokenSeq> matches,
                                 const TokenSeq& ref,
                                 std::size_t budget = kDefaultOracleBudget);

// Coverage-maximization decision problem: is there a selection c with
// c_k in choices[k] (indices into `subsets`) and |union c_k| >= p?
struct CoverageInstance {
  std::size_t universe_size = 0;
  std::vector<std::vector<std::size_t>> subsets;
  std::vector<std::vector<std::size_t>> choices;
  std::size_t p = 0;
};

bool set_cover_decision(const CoverageInstance& instance,
                        std::size_t budget = 10'000'000);

// Set cover as coverage maximization: K copies of C_0 and p = |X|.
CoverageInstance set_cover_to_coverage(
    std::size_t universe_size, std::vector<std::vector<std::size_t>> c0,
    std::size_t k);

}  // namespace tmedit
