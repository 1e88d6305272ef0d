// tmedit: translation-memory edit pipeline.
//
// Exit status: 0 ok, 1 usage, 2 data, 3 internal invariant violation.
// Errors go to stderr as {"error": {"kind", "message", "line"?}}.

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cli.hpp"
#include "tmedit/errors.hpp"
#include "tmedit/parallel.hpp"

#include <omp.h>

namespace {

using namespace tmedit;
using namespace tmedit::cli;

int report(const char* kind, const std::string& message, std::size_t line, int code) {
  json err = {{"kind", kind}, {"message", message}};
  if (line != 0) err["line"] = line;
  std::cerr << json{{"error", err}}.dump() << '\n';
  return code;
}

// Flag values that override the config file when given.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_length, n_max, k, k_max, n_random, synth_n,
      steps, max_iters;
  std::optional<double> tau, alpha, beta, gamma, delta, epsilon, synth_r, synth_f,
      step_size, d_max, penalty;
  std::optional<std::string> granularity, filler, policy;
  bool exclude_self = false, realign = false;

  void apply(Config& c) const {
    auto set = [](const auto& from, auto& to) {
      if (from) to = *from;
    };
    set(seed, c.seed);
    set(max_length, c.max_length);
    set(tau, c.tau);
    set(n_max, c.n_max);
    set(granularity, c.granularity);
    set(k, c.k);
    set(k_max, c.k_max);
    set(alpha, c.rollin.alpha);
    set(beta, c.rollin.beta);
    set(gamma, c.rollin.gamma);
    set(delta, c.rollin.delta);
    set(epsilon, c.rollin.epsilon);
    set(n_random, c.rollin.n_random);
    set(filler, c.filler);
    set(synth_n, c.synth.n);
    set(synth_r, c.synth.r);
    set(synth_f, c.synth.f);
    set(steps, c.realign.steps);
    set(step_size, c.realign.step_size);
    set(d_max, c.realign.d_max);
    set(max_iters, c.decode.max_refinement_iters);
    set(penalty, c.decode.zero_plh_penalty);
    set(policy, c.policy);
    if (exclude_self) c.exclude_self = true;
    if (realign) c.decode.realign = true;
  }
};

Config load_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
  return Config::from_json(j);
}

int run(int argc, char** argv) {
  CLI::App app{"Translation-memory edit pipeline: retrieval, N-way alignment, "
               "edit scripts, roll-in states, realignment, decoding, statistics."};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kVersion));

  std::string config_path, vocab_path;
  std::optional<int> threads;
  Overrides ov;
  Args args;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--vocab", vocab_path,
                 "Fixed vocabulary (one token per line); unknown tokens become <UNK>")
      ->check(CLI::ExistingFile);
  app.add_option("--threads", threads, "Worker threads (default: TMEDIT_THREADS)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", ov.seed, "Random seed");
  app.add_option("--max-length", ov.max_length, "Maximum framed sequence length");

  auto out_opt = [&](CLI::App* sub) {
    sub->add_option("--out,-o", args.out, "Output JSONL ('-' for stdout)")
        ->capture_default_str();
  };
  auto retrieval_opts = [&](CLI::App* sub) {
    sub->add_option("--tau", ov.tau, "Similarity threshold");
    sub->add_option("--nmax", ov.n_max, "Maximum matches per query");
    sub->add_flag("--exclude-self", ov.exclude_self,
                  "Skip the entry with the query's id and source");
    sub->add_option("--granularity", ov.granularity, "token | char");
  };

  auto* build = app.add_subcommand("build-index", "Validate and normalize a TM");
  build->add_option("--tm", args.tm, "TM JSONL (src, tgt, id?)")->required();
  build->add_option("--granularity", ov.granularity, "token | char");
  out_opt(build);

  auto* retrieve = app.add_subcommand("retrieve", "Fuzzy matches for each query");
  retrieve->add_option("--tm", args.tm, "TM JSONL")->required();
  retrieve->add_option("--queries", args.queries, "Queries JSONL (tokens|text)")
      ->required();
  retrieval_opts(retrieve);
  out_opt(retrieve);

  auto* align = app.add_subcommand("align", "N-way alignment of matches onto references");
  align->add_option("--matches", args.matches, "JSONL with \"matches\"")->required();
  align->add_option("--refs", args.refs, "Reference JSONL, line-aligned")->required();
  align->add_option("--k", ov.k, "k-best 1-way alignments per match");
  align->add_flag("--oracle", args.oracle, "Exhaustive search instead of the heuristic");
  out_opt(align);

  auto* edits = app.add_subcommand("edits", "Expert edit scripts");
  edits->add_option("--matches", args.matches, "JSONL with \"matches\"")->required();
  edits->add_option("--refs", args.refs, "Reference JSONL, line-aligned")->required();
  edits->add_option("--k", ov.k, "k-best 1-way alignments per match");
  edits->add_option("--k-max", ov.k_max, "Placeholder cap per gap");
  out_opt(edits);

  auto* rollin = app.add_subcommand("rollin", "Training states with labels");
  rollin->add_option("--corpus", args.corpus, "JSONL with src, tgt, matches?")
      ->required();
  rollin->add_option("--tm", args.tm, "TM for lines without matches");
  retrieval_opts(rollin);
  rollin->add_option("--alpha", ov.alpha);
  rollin->add_option("--beta", ov.beta);
  rollin->add_option("--gamma", ov.gamma);
  rollin->add_option("--delta", ov.delta);
  rollin->add_option("--epsilon", ov.epsilon);
  rollin->add_option("--n-random", ov.n_random, "N of rnd-del-N");
  rollin->add_option("--filler", ov.filler, "uniform | reference | adversarial");
  rollin->add_option("--k", ov.k);
  rollin->add_option("--k-max", ov.k_max);
  out_opt(rollin);

  auto* synth = app.add_subcommand("synth", "Synthetic matches from targets");
  synth->add_option("--corpus", args.corpus, "JSONL with tgt|tokens|text")->required();
  synth->add_option("--n", ov.synth_n, "Matches per line");
  synth->add_option("--r", ov.synth_r, "Kept fraction of the target");
  synth->add_option("--f", ov.synth_f, "Maximum stretch");
  synth->add_option("--filler", ov.filler, "uniform | reference | adversarial");
  out_opt(synth);

  auto* realign = app.add_subcommand("realign", "Realign placeholder counts");
  realign->add_option("--logits", args.logits,
                      "JSONL with shape [N, G, K+1] and row-major values")
      ->required();
  realign->add_option("--seqs", args.seqs, "JSONL with \"seqs\", line-aligned")
      ->required();
  realign->add_flag("--normalize", args.normalize, "Log-softmax the valid rows first");
  realign->add_option("--steps", ov.steps);
  realign->add_option("--step-size", ov.step_size);
  realign->add_option("--d-max", ov.d_max);
  out_opt(realign);

  auto* decode = app.add_subcommand("decode", "Edit-based decoding");
  decode->add_option("--src", args.src, "Source JSONL (src|tokens|text, matches?)")
      ->required();
  decode->add_option("--tm", args.tm, "TM for lines without matches");
  decode->add_option("--refs", args.refs, "References (expert and noisy policies)");
  decode->add_option("--policy", ov.policy, "expert | noisy:<p> | stub");
  decode->add_flag("--realign", ov.realign, "Realign the first-pass insertions");
  decode->add_flag("--trace", args.trace, "Emit per-round decisions");
  decode->add_option("--penalty", ov.penalty, "Zero-insertion penalty in refinement");
  decode->add_option("--max-iters", ov.max_iters, "Refinement round cap");
  decode->add_option("--k", ov.k);
  decode->add_option("--k-max", ov.k_max);
  retrieval_opts(decode);
  out_opt(decode);

  auto* stats = app.add_subcommand("stats", "Copy/generate n-gram statistics");
  stats->add_option("--results", args.results, "decode output")->required();
  stats->add_option("--refs", args.refs, "References, line-aligned")->required();
  stats->add_option("--max-order", args.max_order, "Highest n-gram order")
      ->capture_default_str();
  out_opt(stats);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), 0, 1);
  }

  configure_threads_from_env();
  if (threads) omp_set_num_threads(*threads);

  Config cfg = load_config(config_path);
  ov.apply(cfg);
  cfg.finalize();
  Codec codec = vocab_path.empty() ? Codec() : Codec(Vocab::load(vocab_path));

  using Cmd = void (*)(const Config&, const Args&, Codec&);
  const std::pair<CLI::App*, Cmd> table[] = {
      {build, cmd_build_index}, {retrieve, cmd_retrieve}, {align, cmd_align},
      {edits, cmd_edits},       {rollin, cmd_rollin},     {synth, cmd_synth},
      {realign, cmd_realign},   {decode, cmd_decode},     {stats, cmd_stats},
  };
  for (const auto& [sub, fn] : table) {
    if (sub->parsed()) fn(cfg, args, codec);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    return report("usage", e.what(), 0, 1);
  } catch (const DataError& e) {
    return report("data", e.what(), e.line(), 2);
  } catch (const StageError& e) {
    return report("data", e.what(), 0, 2);
  } catch (const InvariantError& e) {
    return report("invariant", e.what(), 0, 3);
  } catch (const std::exception& e) {
    return report("internal", e.what(), 0, 3);
  }
}
