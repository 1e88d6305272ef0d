#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tmedit/corpus.hpp"
#include "tmedit/decode.hpp"
#include "tmedit/realign.hpp"
#include "tmedit/retrieval.hpp"
#include "tmedit/rollin.hpp"

namespace tmedit::cli {

inline constexpr const char* kVersion = "0.1.0";

// Every tunable of the pipeline. Loaded from a JSON file (unknown keys are
// rejected), then overridden by flags, then validated.
struct Config {
  std::uint64_t seed = 0;
  std::size_t max_length = kDefaultMaxLength;

  double tau = 0.4;
  std::size_t n_max = 3;
  bool exclude_self = false;
  std::string granularity = "token";  // token | char

  std::size_t k = kDefaultKBest;
  std::size_t k_max = kDefaultKMax;

  RollinConfig rollin;
  std::string filler = "uniform";  // uniform | reference | adversarial
  SynthOptions synth;
  RealignConfig realign;
  DecodeConfig decode;
  std::string policy = "stub";  // expert | noisy:<p> | stub

  static Config from_json(const json& j);
  void merge_json(const json& j);
  json to_json() const;
  // Copies shared fields (seed, k, k_max, n_max) into the module configs and
  // validates everything. Throws UsageError.
  void finalize();

  RetrieveOptions retrieve_options() const;
  Granularity granularity_mode() const;
};

// Turns token fields into sequences. Without a vocabulary file the vocabulary
// grows with the input; with one, unknown tokens become <UNK> with their
// surface kept.
class Codec {
 public:
  Codec() = default;
  explicit Codec(Vocab fixed) : vocab_(std::move(fixed)), grow_(false) {}

  TokenSeq encode(const json& field, std::size_t line, std::size_t max_length);
  json decode(const TokenSeq& seq) const;  // array of token strings
  const Vocab& vocab() const { return vocab_; }

 private:
  Vocab vocab_;
  bool grow_ = true;
};

// "-" is stdin / stdout.
class Input {
 public:
  explicit Input(const std::string& path);
  std::istream& stream() { return *in_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::unique_ptr<std::istream> owned_;
  std::istream* in_;
};

class Output {
 public:
  explicit Output(const std::string& path);
  // First line of every output: tool, command, effective config, inputs.
  void header(const std::string& command, const Config& cfg, const json& inputs);
  void line(const json& j);
  void close();

 private:
  std::string path_;
  std::unique_ptr<std::ostream> owned_;
  std::ostream* out_;
};

// Runs fn(i) for i in [0, n) with OpenMP; the exception of the lowest failing
// index is rethrown so that error reports do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Subcommand arguments after flag parsing.
struct Args {
  std::string out = "-";
  std::string tm, queries, matches, refs, corpus, logits, seqs, src, results;
  bool oracle = false;
  bool trace = false;
  bool normalize = false;
  std::size_t max_order = 2;
};

void cmd_build_index(const Config& cfg, const Args& a, Codec& codec);
void cmd_retrieve(const Config& cfg, const Args& a, Codec& codec);
void cmd_align(const Config& cfg, const Args& a, Codec& codec);
void cmd_edits(const Config& cfg, const Args& a, Codec& codec);
void cmd_rollin(const Config& cfg, const Args& a, Codec& codec);
void cmd_synth(const Config& cfg, const Args& a, Codec& codec);
void cmd_realign(const Config& cfg, const Args& a, Codec& codec);
void cmd_decode(const Config& cfg, const Args& a, Codec& codec);
void cmd_stats(const Config& cfg, const Args& a, Codec& codec);

}  // namespace tmedit::cli
