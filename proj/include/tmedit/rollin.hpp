#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tmedit/alignment.hpp"
#include "tmedit/corpus.hpp"
#include "tmedit/edit_ops.hpp"
#include "tmedit/rng.hpp"
#include "tmedit/token_seq.hpp"

namespace tmedit {

enum class Family {
  kExpertDel,
  kExpertPlh,
  kExpertCmb,
  kExpertTok,
  kRndDelN,
  kSelNoise,
  kPostPlh,
  kPostDel,
  kPostDelExtra,
  kRndMsk,
};
inline constexpr std::size_t kNumFamilies = 10;

std::string_view family_name(Family f);
// Throws DataError on an unknown name.
Family family_from_name(std::string_view name);

// Which sub-policy a sample trains, hence which label field is filled.
enum class Stage { kDel, kPlh, kCmb, kTok };
std::string_view stage_name(Stage s);

struct RollinConfig {
  double alpha = 0.3;    // post-plh: probability of the identity state
  double beta = 0.2;     // gate of the rnd-del-N triplet
  double gamma = 0.2;    // sel-noise: per-placeholder replacement rate
  double delta = 0.2;    // gate of rnd-msk
  double epsilon = 0.4;  // masking rate (rnd-msk, post-del)
  std::size_t n_random = 3;  // N of rnd-del-N
  std::size_t k = kDefaultKBest;
  std::size_t k_max = kDefaultKMax;
  double extra_insert_mean = 0.5;  // post-del-extra inserter
  bool refinement_states = true;   // post-plh, post-del, post-del-extra
  std::uint64_t seed = 0;

  // Throws UsageError.
  void validate() const;
};

struct StateSample {
  Family family = Family::kExpertDel;
  Stage stage = Stage::kDel;
  std::uint64_t sample_id = 0;
  TokenSeq source;
  std::vector<TokenSeq> state;  // one per match for first-pass stages
  std::vector<std::vector<bool>> del;          // kDel
  std::vector<std::vector<std::size_t>> plh;   // kPlh
  std::vector<std::vector<bool>> cmb;          // kCmb
  std::vector<Fill> tok;                       // kTok
  // Bernoulli trials behind the sample: sel-noise (placeholders, replaced),
  // rnd-msk (tokens, masked), post-plh (1, identity branch taken).
  std::size_t trials = 0;
  std::size_t hits = 0;
};

// Fills one <PLH> position of `state`; `ref` is the sample reference.
class TokenFiller {
 public:
  virtual ~TokenFiller() = default;
  virtual void fill(const TokenSeq& ref, TokenSeq& state, Rng& rng) const = 0;
};

// Uniform over the non-reserved ids [kNumReserved, vocab_size).
class UniformFiller : public TokenFiller {
 public:
  explicit UniformFiller(std::size_t vocab_size);
  void fill(const TokenSeq& ref, TokenSeq& state, Rng& rng) const override;

 private:
  std::size_t vocab_size_;
};

// Reference token at the same position, else ref[pos % |ref|].
class ReferenceFiller : public TokenFiller {
 public:
  void fill(const TokenSeq& ref, TokenSeq& state, Rng& rng) const override;
};

// The smallest non-reserved id absent from the reference: never correct.
class AdversarialFiller : public TokenFiller {
 public:
  void fill(const TokenSeq& ref, TokenSeq& state, Rng& rng) const override;
};

// Placeholder counts for the gaps of a sequence.
class Inserter {
 public:
  virtual ~Inserter() = default;
  virtual std::vector<std::size_t> counts(std::size_t n_gaps, Rng& rng) const = 0;
};

// Independent geometric counts with the given mean, capped at k_max.
class GeometricInserter : public Inserter {
 public:
  GeometricInserter(double mean, std::size_t k_max);
  std::vector<std::size_t> counts(std::size_t n_gaps, Rng& rng) const override;

 private:
  double success_;
  std::size_t k_max_;
};

// Expert quadruple from the N-way alignment of `matches` onto `ref`.
std::vector<StateSample> gen_expert_states(const TokenSeq& x,
                                           std::span<const TokenSeq> matches,
                                           const TokenSeq& ref, std::size_t k,
                                           std::size_t k_max = kDefaultKMax);

// N contiguous substrings of ref (uniform start, uniform remaining length).
std::vector<TokenSeq> rnd_del_n(const TokenSeq& ref, std::size_t n, Rng& rng);
// Substring [start, start + len) of ref.
TokenSeq substring(const TokenSeq& ref, std::size_t start, std::size_t len);

struct SelNoiseResult {
  std::vector<TokenSeq> cmb_seqs;
  std::vector<std::vector<bool>> keep;  // non-placeholder and equal to ref
  std::size_t placeholders = 0;
  std::size_t replaced = 0;
};
// Each <PLH> replaced with probability gamma by a token drawn uniformly from
// the multiset of match tokens (no replacement if the matches are empty).
SelNoiseResult sel_noise(std::span<const TokenSeq> cmb_seqs,
                         std::span<const TokenSeq> matches, const TokenSeq& ref,
                         double gamma, Rng& rng);

StateSample rnd_del_1(const TokenSeq& ref, double alpha, Rng& rng);
// y_ref with each token masked with probability `mask_rate` and refilled.
StateSample correct_mistakes_state(const TokenSeq& ref, double mask_rate,
                                   const TokenFiller& filler, Rng& rng);
StateSample extra_tokens_state(const TokenSeq& ref, const Inserter& inserter,
                               const TokenFiller& filler, Rng& rng,
                               std::size_t k_max = kDefaultKMax);
StateSample rnd_mask(const TokenSeq& ref, double epsilon, Rng& rng);

// Keeps exactly the tokens of y on the best 1-way alignment with ref.
std::vector<bool> expert_del_labels(const TokenSeq& y, const TokenSeq& ref);

struct SynthOptions {
  std::size_t n = 3;
  double r = 0.8;
  double f = 0.5;
};
// N substrings of length round(|y| r), each stretched by a factor uniform in
// [1, 1 + f] with randomly placed placeholders, then filled.
std::vector<TokenSeq> synth_matches(const TokenSeq& y, const SynthOptions& opts,
                                    const TokenFiller& filler, Rng& rng);

struct RollinInput {
  TokenSeq x;
  std::vector<TokenSeq> matches;
  TokenSeq ref;
  std::optional<std::int64_t> id;
};

struct RollinPolicies {
  const TokenFiller* filler = nullptr;
  const Inserter* inserter = nullptr;
};

// Every sample of one input, in a fixed family order. Instances whose
// alignment overflows K_max skip the first-pass families.
std::vector<StateSample> gen_sample_states(const RollinInput& in,
                                           std::uint64_t sample_id,
                                           const RollinConfig& cfg,
                                           const RollinPolicies& pol);

// OpenMP over inputs; output order and content equal the serial version.
std::vector<StateSample> gen_corpus(std::span<const RollinInput> inputs,
                                    const RollinConfig& cfg,
                                    const RollinPolicies& pol);
std::vector<StateSample> gen_corpus_serial(std::span<const RollinInput> inputs,
                                           const RollinConfig& cfg,
                                           const RollinPolicies& pol);

// Mechanical label check against the reference; returns an empty string if
// consistent, else the reason.
std::string check_sample(const StateSample& s, const TokenSeq& ref);

json sample_to_json(const StateSample& s, const Vocab& vocab, std::uint64_t seed);

}  // namespace tmedit
