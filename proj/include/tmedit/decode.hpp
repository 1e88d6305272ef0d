#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tmedit/alignment.hpp"
#include "tmedit/corpus.hpp"
#include "tmedit/edit_ops.hpp"
#include "tmedit/realign.hpp"
#include "tmedit/token_seq.hpp"

namespace tmedit {

struct TokenChoice {
  TokenId token = Vocab::kUnk;
  double prob = 0.0;
  std::string surface;
};
using TokenDist = std::vector<TokenChoice>;

// The four decision functions of an edit policy. Implementations must be
// safe for concurrent const use.
class Policy {
 public:
  virtual ~Policy() = default;
  // Keep probability of every content token of every sequence.
  virtual std::vector<std::vector<double>> del(
      const TokenSeq& x, std::span<const TokenSeq> seqs) const = 0;
  // Insertion log-probabilities; sequence n uses gaps 0..|seqs[n]|.
  virtual PlhLogits plh(const TokenSeq& x, std::span<const TokenSeq> seqs,
                        std::size_t k_max) const = 0;
  // Keep score in [0, 1] of every position of equal-length sequences.
  virtual std::vector<std::vector<double>> cmb(
      const TokenSeq& x, std::span<const TokenSeq> seqs) const = 0;
  // One distribution per <PLH> of seq, in position order.
  virtual std::vector<TokenDist> tok(const TokenSeq& x,
                                     const TokenSeq& seq) const = 0;
};

struct DecodeConfig {
  std::size_t max_refinement_iters = 10;
  double zero_plh_penalty = 3.0;
  bool realign = false;
  std::size_t n_max = 3;
  std::size_t k_max = kDefaultKMax;
  RealignConfig realign_cfg;

  // Throws UsageError.
  void validate() const;
};

// Decisions applied in one round. Round 0 is the first pass over the
// matches; later rounds refine a single sequence and leave `cmb` empty.
struct TraceRound {
  std::size_t round = 0;
  std::vector<std::vector<bool>> del;
  std::vector<std::vector<std::size_t>> plh;
  std::vector<std::vector<bool>> cmb;
  std::vector<Fill> tok;
  bool realigned = false;
};

struct DecodeResult {
  TokenSeq output;
  Provenance provenance;
  std::vector<TraceRound> trace;
  std::size_t iterations = 0;  // refinement rounds executed
};

struct FirstPass {
  TrackedSeq seq;
  TraceRound record;
};

// Deletion and insertion on every match, position-wise combination, token
// fill. Combination of unequal lengths throws StageError("combination").
FirstPass first_pass(const TokenSeq& x, std::span<const TokenSeq> matches,
                     const Policy& policy, const DecodeConfig& cfg);

// Delete, insert (count-0 log-probability lowered by the penalty), fill;
// repeated until a round leaves the sequence unchanged or the cap is hit.
DecodeResult iterative_refine(const TrackedSeq& y, const TokenSeq& x,
                              const Policy& policy, const DecodeConfig& cfg);

// First pass (skipped without matches) then refinement.
DecodeResult decode(const TokenSeq& x, std::span<const TokenSeq> matches,
                    const Policy& policy, const DecodeConfig& cfg = {});

// Re-applies a trace; equals the decoded output and provenance.
ReplayResult replay_trace(std::span<const TraceRound> trace,
                          std::span<const TokenSeq> matches,
                          std::size_t k_max = kDefaultKMax);

// Argmax with ties to the lowest count, after subtracting `penalty` from the
// count-0 log-probability.
std::vector<std::vector<std::size_t>> plh_argmax(const PlhLogits& logits,
                                                 double penalty);

// Knows the reference. On the states it produced itself it returns the
// memoized expert script; elsewhere it keeps the LCS with the reference,
// inserts what is missing and fills reference tokens.
class ExpertPolicy : public Policy {
 public:
  ExpertPolicy(TokenSeq ref, std::vector<TokenSeq> matches,
               std::size_t k = kDefaultKBest, std::size_t k_max = kDefaultKMax);

  std::vector<std::vector<double>> del(
      const TokenSeq& x, std::span<const TokenSeq> seqs) const override;
  PlhLogits plh(const TokenSeq& x, std::span<const TokenSeq> seqs,
                std::size_t k_max) const override;
  std::vector<std::vector<double>> cmb(
      const TokenSeq& x, std::span<const TokenSeq> seqs) const override;
  std::vector<TokenDist> tok(const TokenSeq& x,
                             const TokenSeq& seq) const override;

  const std::optional<EditScript>& script() const { return script_; }
  const TokenSeq& ref() const { return ref_; }

 private:
  TokenSeq ref_;
  std::vector<TokenSeq> matches_;
  std::optional<EditScript> script_;  // empty when a gap overflows
};

// Expert decisions perturbed with probability p: keep -> delete, one
// placeholder moved to a neighbouring gap (row sums preserved), combination
// score flipped, fill replaced by a uniform regular token. The noise is a
// function of (seed, state), so the policy stays const and reproducible.
class NoisyExpertPolicy : public Policy {
 public:
  NoisyExpertPolicy(const ExpertPolicy& expert, double p, std::uint64_t seed,
                    std::size_t vocab_size);

  std::vector<std::vector<double>> del(
      const TokenSeq& x, std::span<const TokenSeq> seqs) const override;
  PlhLogits plh(const TokenSeq& x, std::span<const TokenSeq> seqs,
                std::size_t k_max) const override;
  std::vector<std::vector<double>> cmb(
      const TokenSeq& x, std::span<const TokenSeq> seqs) const override;
  std::vector<TokenDist> tok(const TokenSeq& x,
                             const TokenSeq& seq) const override;

 private:
  const ExpertPolicy& expert_;
  double p_;
  std::uint64_t seed_;
  std::size_t vocab_size_;
};

// Reference-free baseline: keeps every token, prefers zero insertions by
// `plh_margin` nats except on an empty sequence (|x| placeholders), fills
// position j with source token x[j mod |x|].
class StubPolicy : public Policy {
 public:
  explicit StubPolicy(double plh_margin = 5.0) : plh_margin_(plh_margin) {}

  std::vector<std::vector<double>> del(
      const TokenSeq& x, std::span<const TokenSeq> seqs) const override;
  PlhLogits plh(const TokenSeq& x, std::span<const TokenSeq> seqs,
                std::size_t k_max) const override;
  std::vector<std::vector<double>> cmb(
      const TokenSeq& x, std::span<const TokenSeq> seqs) const override;
  std::vector<TokenDist> tok(const TokenSeq& x,
                             const TokenSeq& seq) const override;

 private:
  double plh_margin_;
};

// Never converges: deletes the first token of sequences of length >= 2,
// appends one placeholder to length-1 sequences and fills it with the token
// of {a, b} that differs from its left neighbour, so [a] -> [a b] -> [b a]
// -> [a b] -> ...
class OscillatingPolicy : public Policy {
 public:
  OscillatingPolicy(TokenId a, TokenId b) : a_(a), b_(b) {}

  std::vector<std::vector<double>> del(
      const TokenSeq& x, std::span<const TokenSeq> seqs) const override;
  PlhLogits plh(const TokenSeq& x, std::span<const TokenSeq> seqs,
                std::size_t k_max) const override;
  std::vector<std::vector<double>> cmb(
      const TokenSeq& x, std::span<const TokenSeq> seqs) const override;
  std::vector<TokenDist> tok(const TokenSeq& x,
                             const TokenSeq& seq) const override;

 private:
  TokenId a_, b_;
};

struct DecodeJob {
  TokenSeq x;
  std::vector<TokenSeq> matches;
  const Policy* policy = nullptr;
};

// OpenMP over jobs.
std::vector<DecodeResult> decode_batch(std::span<const DecodeJob> jobs,
                                       const DecodeConfig& cfg = {});
std::vector<DecodeResult> decode_batch_serial(std::span<const DecodeJob> jobs,
                                              const DecodeConfig& cfg = {});

json trace_to_json(std::span<const TraceRound> trace, const Vocab& vocab);
json provenance_to_json(const Provenance& prov);

}  // namespace tmedit
