#include <algorithm>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cli.hpp"
#include "tmedit/alignment.hpp"
#include "tmedit/edit_ops.hpp"
#include "tmedit/errors.hpp"
#include "tmedit/metrics.hpp"
#include "tmedit/rng.hpp"

namespace tmedit::cli {
namespace {

struct Line {
  json obj;
  std::size_t line = 0;
};

std::vector<Line> read_lines(const std::string& path) {
  Input in(path);
  std::vector<Line> out;
  for_each_jsonl(in.stream(), [&](const json& obj, std::size_t line) {
    if (!obj.is_object()) throw DataError("expected a JSON object", line);
    out.push_back({obj, line});
  });
  return out;
}

const json* find_field(const Line& l, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    const auto it = l.obj.find(n);
    if (it != l.obj.end()) return &*it;
  }
  return nullptr;
}

const json& field(const Line& l, std::initializer_list<const char*> names) {
  if (const json* f = find_field(l, names)) return *f;
  std::string list;
  for (const char* n : names) list += (list.empty() ? "" : "|") + std::string(n);
  throw DataError("missing field " + list, l.line);
}

std::optional<std::int64_t> id_of(const Line& l) {
  const auto it = l.obj.find("id");
  if (it == l.obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw DataError("\"id\" must be an integer", l.line);
  return it->get<std::int64_t>();
}

json id_json(const std::optional<std::int64_t>& id) {
  return id ? json(*id) : json(nullptr);
}

// "matches": array of token fields or objects carrying "tgt" (the retrieve
// output shape).
std::vector<TokenSeq> matches_of(const Line& l, Codec& codec, const Config& cfg) {
  std::vector<TokenSeq> out;
  const json* arr = find_field(l, {"matches"});
  if (arr == nullptr) return out;
  if (!arr->is_array()) throw DataError("\"matches\" must be an array", l.line);
  for (const json& m : *arr) {
    if (m.is_object()) {
      if (!m.contains("tgt")) throw DataError("match object without \"tgt\"", l.line);
      out.push_back(codec.encode(m["tgt"], l.line, cfg.max_length));
    } else {
      out.push_back(codec.encode(m, l.line, cfg.max_length));
    }
  }
  return out;
}

void same_count(const std::vector<Line>& a, const std::vector<Line>& b,
                const std::string& what) {
  if (a.size() != b.size()) {
    throw DataError(what + ": " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + " lines");
  }
}

// Attaches the input line to errors raised while processing one record.
template <typename Fn>
void at_line(std::size_t line, Fn&& fn) {
  try {
    fn();
  } catch (const DataError& e) {
    if (e.line() != 0) throw;
    throw DataError(e.what(), line);
  } catch (const StageError& e) {
    throw DataError(e.what(), line);
  }
}

std::vector<TMEntry> load_tm(const std::string& path, Codec& codec,
                             const Config& cfg) {
  std::vector<TMEntry> tm;
  for (const Line& l : read_lines(path)) {
    TMEntry e;
    e.id = id_of(l).value_or(static_cast<std::int64_t>(tm.size()));
    e.src = codec.encode(field(l, {"src"}), l.line, cfg.max_length);
    e.tgt = codec.encode(field(l, {"tgt"}), l.line, cfg.max_length);
    tm.push_back(std::move(e));
  }
  return tm;
}

TMIndex make_index(std::vector<TMEntry> tm, const Codec& codec, const Config& cfg) {
  return TMIndex::build(std::move(tm), cfg.granularity_mode(), &codec.vocab());
}

json match_set_json(const MatchSet& ms, const TMIndex& index, const Codec& codec) {
  json matches = json::array();
  for (const Match& m : ms.matches) {
    const TMEntry& e = index.entry(m);
    matches.push_back({{"id", m.id},
                       {"score", m.score},
                       {"src", codec.decode(e.src)},
                       {"tgt", codec.decode(e.tgt)}});
  }
  return matches;
}

std::vector<TokenSeq> match_targets(const MatchSet& ms, const TMIndex& index) {
  std::vector<TokenSeq> out;
  for (const Match& m : ms.matches) out.push_back(index.entry(m).tgt);
  return out;
}

json loss_json(const LossTerms& t) {
  return {{"likelihood", t.likelihood},
          {"alignment", t.alignment},
          {"integer", t.integer},
          {"total", t.total()}};
}

json graph_json(const AlignmentGraph& g) {
  json edges = json::array();
  for (const Edge& e : g.edges()) edges.push_back({e.n, e.i, e.j});
  const CoverageStats c = g.coverage();
  return {{"edges", std::move(edges)},
          {"covered", c.covered},
          {"total_edges", c.total_edges}};
}

std::unique_ptr<TokenFiller> make_filler(const Config& cfg, const Codec& codec) {
  if (cfg.filler == "reference") return std::make_unique<ReferenceFiller>();
  if (cfg.filler == "adversarial") return std::make_unique<AdversarialFiller>();
  return std::make_unique<UniformFiller>(codec.vocab().size());
}

// Pairs of (matches line, ref line) shared by align and edits.
struct AlignInputs {
  std::vector<std::vector<TokenSeq>> matches;
  std::vector<TokenSeq> refs;
  std::vector<std::size_t> lines;
};

AlignInputs load_align_inputs(const Args& a, Codec& codec, const Config& cfg) {
  const auto m_lines = read_lines(a.matches);
  const auto r_lines = read_lines(a.refs);
  same_count(m_lines, r_lines, "matches and refs differ in length");
  AlignInputs in;
  for (std::size_t i = 0; i < m_lines.size(); ++i) {
    field(m_lines[i], {"matches"});
    in.matches.push_back(matches_of(m_lines[i], codec, cfg));
    in.refs.push_back(codec.encode(field(r_lines[i], {"tokens", "text", "tgt", "ref"}),
                                   r_lines[i].line, cfg.max_length));
    in.lines.push_back(m_lines[i].line);
  }
  return in;
}

}  // namespace

void cmd_build_index(const Config& cfg, const Args& a, Codec& codec) {
  const TMIndex index = make_index(load_tm(a.tm, codec, cfg), codec, cfg);
  Output out(a.out);
  std::size_t src_tokens = 0, tgt_tokens = 0;
  for (const auto& e : index.entries()) {
    src_tokens += e.src.size();
    tgt_tokens += e.tgt.size();
  }
  out.header("build-index", cfg,
             {{"tm", a.tm},
              {"entries", index.size()},
              {"src_tokens", src_tokens},
              {"tgt_tokens", tgt_tokens},
              {"vocab_size", codec.vocab().size()}});
  for (const auto& e : index.entries()) {
    out.line({{"id", e.id}, {"src", codec.decode(e.src)}, {"tgt", codec.decode(e.tgt)}});
  }
  out.close();
}

void cmd_retrieve(const Config& cfg, const Args& a, Codec& codec) {
  const TMIndex index = make_index(load_tm(a.tm, codec, cfg), codec, cfg);
  std::vector<Query> queries;
  for (const Line& l : read_lines(a.queries)) {
    queries.push_back({codec.encode(field(l, {"tokens", "text", "src"}), l.line,
                                    cfg.max_length),
                       id_of(l)});
  }
  const auto results = index.retrieve_batch(queries, cfg.retrieve_options());
  Output out(a.out);
  out.header("retrieve", cfg, {{"tm", a.tm}, {"queries", a.queries}});
  for (std::size_t q = 0; q < queries.size(); ++q) {
    out.line({{"id", id_json(queries[q].id)},
              {"query", codec.decode(queries[q].tokens)},
              {"matches", match_set_json(results[q], index, codec)}});
  }
  out.close();
}

void cmd_align(const Config& cfg, const Args& a, Codec& codec) {
  const AlignInputs in = load_align_inputs(a, codec, cfg);
  std::vector<AlignmentGraph> graphs(in.refs.size());
  parallel_for(graphs.size(), [&](std::size_t i) {
    at_line(in.lines[i], [&] {
      graphs[i] = a.oracle ? exact_nway_oracle(in.matches[i], in.refs[i])
                           : nway_align(in.matches[i], in.refs[i], cfg.k);
    });
  });
  Output out(a.out);
  out.header("align", cfg,
             {{"matches", a.matches}, {"refs", a.refs}, {"oracle", a.oracle}});
  for (const auto& g : graphs) out.line(graph_json(g));
  out.close();
}

void cmd_edits(const Config& cfg, const Args& a, Codec& codec) {
  const AlignInputs in = load_align_inputs(a, codec, cfg);
  std::vector<json> rows(in.refs.size());
  parallel_for(rows.size(), [&](std::size_t i) {
    at_line(in.lines[i], [&] {
      const AlignmentGraph g = nway_align(in.matches[i], in.refs[i], cfg.k);
      const EditScript s = derive_edits(g, in.matches[i], in.refs[i], cfg.k_max);
      const ReplayResult r = replay(s, in.matches[i], cfg.k_max);
      if (!(r.output == in.refs[i])) {
        throw InvariantError("replay does not reproduce the reference");
      }
      json plh_seqs = json::array(), cmb_seqs = json::array(), fills = json::array();
      for (const auto& t : s.plh_seqs) plh_seqs.push_back(codec.decode(t));
      for (const auto& t : s.cmb_seqs) cmb_seqs.push_back(codec.decode(t));
      for (const Fill& f : s.tok_fills) {
        fills.push_back({{"pos", f.pos},
                         {"token", f.surface.empty() ? codec.vocab().token(f.token)
                                                     : f.surface}});
      }
      rows[i] = {{"coverage", graph_json(g)},
                 {"del", s.del_masks},
                 {"plh", s.plh_counts},
                 {"cmb", s.cmb_keep},
                 {"tok", std::move(fills)},
                 {"plh_seqs", std::move(plh_seqs)},
                 {"cmb_seqs", std::move(cmb_seqs)},
                 {"tok_seq", codec.decode(s.tok_seq)},
                 {"output", codec.decode(r.output)},
                 {"provenance", provenance_to_json(r.provenance)}};
    });
  });
  Output out(a.out);
  out.header("edits", cfg, {{"matches", a.matches}, {"refs", a.refs}});
  for (const auto& r : rows) out.line(r);
  out.close();
}

void cmd_rollin(const Config& cfg, const Args& a, Codec& codec) {
  std::vector<RollinInput> inputs;
  std::vector<bool> has_matches;
  for (const Line& l : read_lines(a.corpus)) {
    RollinInput in;
    in.id = id_of(l);
    in.x = codec.encode(field(l, {"src"}), l.line, cfg.max_length);
    in.ref = codec.encode(field(l, {"tgt"}), l.line, cfg.max_length);
    in.matches = matches_of(l, codec, cfg);
    has_matches.push_back(l.obj.contains("matches"));
    inputs.push_back(std::move(in));
  }
  if (!a.tm.empty()) {
    const TMIndex index = make_index(load_tm(a.tm, codec, cfg), codec, cfg);
    parallel_for(inputs.size(), [&](std::size_t i) {
      if (has_matches[i]) return;
      RetrieveOptions opts = cfg.retrieve_options();
      opts.query_id = inputs[i].id;
      inputs[i].matches = match_targets(index.retrieve(inputs[i].x, opts), index);
    });
  }
  const auto filler = make_filler(cfg, codec);
  const GeometricInserter inserter(cfg.rollin.extra_insert_mean, cfg.k_max);
  const auto samples = gen_corpus(inputs, cfg.rollin, {filler.get(), &inserter});
  Output out(a.out);
  out.header("rollin", cfg, {{"corpus", a.corpus}, {"tm", a.tm}});
  for (const auto& s : samples) out.line(sample_to_json(s, codec.vocab(), cfg.seed));
  out.close();
}

void cmd_synth(const Config& cfg, const Args& a, Codec& codec) {
  const auto lines = read_lines(a.corpus);
  std::vector<TokenSeq> targets;
  for (const Line& l : lines) {
    targets.push_back(codec.encode(field(l, {"tgt", "tokens", "text"}), l.line,
                                   cfg.max_length));
  }
  const auto filler = make_filler(cfg, codec);
  std::vector<std::vector<TokenSeq>> synth(targets.size());
  parallel_for(targets.size(), [&](std::size_t i) {
    Rng rng = Rng::derive(cfg.seed, i);
    synth[i] = synth_matches(targets[i], cfg.synth, *filler, rng);
  });
  Output out(a.out);
  out.header("synth", cfg, {{"corpus", a.corpus}});
  for (std::size_t i = 0; i < lines.size(); ++i) {
    json row = lines[i].obj;
    json ms = json::array();
    for (const auto& m : synth[i]) ms.push_back(codec.decode(m));
    row["matches"] = std::move(ms);
    out.line(row);
  }
  out.close();
}

void cmd_realign(const Config& cfg, const Args& a, Codec& codec) {
  const auto l_lines = read_lines(a.logits);
  const auto s_lines = read_lines(a.seqs);
  same_count(l_lines, s_lines, "logits and seqs differ in length");
  std::vector<RealignInstance> batch;
  for (std::size_t i = 0; i < l_lines.size(); ++i) {
    const Line& ll = l_lines[i];
    const Line& sl = s_lines[i];
    RealignInstance inst;
    const json& seqs = field(sl, {"seqs"});
    if (!seqs.is_array()) throw DataError("\"seqs\" must be an array", sl.line);
    for (const json& s : seqs) inst.seqs.push_back(codec.encode(s, sl.line, cfg.max_length));
    const json& shape = field(ll, {"shape"});
    const json& values = field(ll, {"values"});
    if (!shape.is_array() || shape.size() != 3 || !values.is_array()) {
      throw DataError("logits need \"shape\": [N, G, K+1] and \"values\"", ll.line);
    }
    std::size_t dims[3];
    for (std::size_t d = 0; d < 3; ++d) {
      if (!shape[d].is_number_unsigned()) throw DataError("bad logits shape", ll.line);
      dims[d] = shape[d].get<std::size_t>();
    }
    if (dims[2] < 2 || dims[0] != inst.seqs.size() ||
        values.size() != dims[0] * dims[1] * dims[2]) {
      throw DataError("logits shape does not match seqs or values", ll.line);
    }
    inst.logits = PlhLogits(dims[0], dims[1], dims[2] - 1);
    for (std::size_t v = 0; v < values.size(); ++v) {
      if (!values[v].is_number()) throw DataError("non-numeric logit", ll.line);
      inst.logits.values[v] = values[v].get<double>();
    }
    for (std::size_t n = 0; n < dims[0]; ++n) {
      if (inst.seqs[n].size() + 1 > dims[1]) {
        throw DataError("sequence " + std::to_string(n) + " has more gaps than G",
                        ll.line);
      }
      for (std::size_t g = 0; g <= inst.seqs[n].size(); ++g) {
        inst.logits.valid[n * dims[1] + g] = 1;
        if (a.normalize) PlhLogits::normalize_row(inst.logits.row(n, g));
      }
    }
    at_line(ll.line, [&] { inst.logits.validate(); });
    batch.push_back(std::move(inst));
  }
  std::vector<RealignResult> results(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) {
    at_line(l_lines[i].line, [&] { results[i] = realign(batch[i].logits, batch[i].seqs, cfg.realign); });
  });
  Output out(a.out);
  out.header("realign", cfg,
             {{"logits", a.logits}, {"seqs", a.seqs}, {"normalize", a.normalize}});
  for (const auto& r : results) {
    out.line({{"counts", r.counts},
              {"initial", r.initial},
              {"changes", r.changes},
              {"loss_before", loss_json(r.loss_before)},
              {"loss_after", loss_json(r.loss_after)},
              {"kept_argmax", r.kept_argmax}});
  }
  out.close();
}

void cmd_decode(const Config& cfg, const Args& a, Codec& codec) {
  std::string kind = cfg.policy;
  double noise = 0.0;
  if (kind.rfind("noisy:", 0) == 0) {
    try {
      std::size_t used = 0;
      noise = std::stod(kind.substr(6), &used);
      if (used != kind.size() - 6) throw UsageError("");
    } catch (const std::exception&) {
      throw UsageError("policy noisy:<p> needs a number, got " + kind);
    }
    if (!(noise >= 0.0 && noise <= 1.0)) throw UsageError("noise must lie in [0, 1]");
    kind = "noisy";
  }
  if (kind != "expert" && kind != "noisy" && kind != "stub") {
    throw UsageError("unknown policy " + cfg.policy);
  }
  const bool needs_refs = kind != "stub";
  if (needs_refs && a.refs.empty()) throw UsageError("policy " + cfg.policy + " needs --refs");

  const auto src_lines = read_lines(a.src);
  std::vector<DecodeJob> jobs;
  std::vector<std::optional<std::int64_t>> ids;
  std::vector<bool> has_matches;
  for (const Line& l : src_lines) {
    DecodeJob job;
    job.x = codec.encode(field(l, {"src", "tokens", "text"}), l.line, cfg.max_length);
    job.matches = matches_of(l, codec, cfg);
    has_matches.push_back(l.obj.contains("matches"));
    ids.push_back(id_of(l));
    jobs.push_back(std::move(job));
  }
  std::vector<TokenSeq> refs;
  if (!a.refs.empty()) {
    const auto r_lines = read_lines(a.refs);
    same_count(src_lines, r_lines, "src and refs differ in length");
    for (const Line& l : r_lines) {
      refs.push_back(codec.encode(field(l, {"tokens", "text", "tgt", "ref"}), l.line,
                                  cfg.max_length));
    }
  }
  if (!a.tm.empty()) {
    const TMIndex index = make_index(load_tm(a.tm, codec, cfg), codec, cfg);
    parallel_for(jobs.size(), [&](std::size_t i) {
      if (has_matches[i]) return;
      RetrieveOptions opts = cfg.retrieve_options();
      opts.query_id = ids[i];
      jobs[i].matches = match_targets(index.retrieve(jobs[i].x, opts), index);
    });
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (jobs[i].matches.size() > cfg.n_max) {
      throw DataError("more than n_max matches", src_lines[i].line);
    }
  }

  // Policies live as long as the batch; the noisy one references its expert.
  std::vector<std::unique_ptr<ExpertPolicy>> experts(jobs.size());
  std::vector<std::unique_ptr<Policy>> policies(jobs.size());
  const StubPolicy stub;
  parallel_for(jobs.size(), [&](std::size_t i) {
    at_line(src_lines[i].line, [&] {
      if (kind == "stub") {
        jobs[i].policy = &stub;
        return;
      }
      experts[i] = std::make_unique<ExpertPolicy>(refs[i], jobs[i].matches, cfg.k,
                                                  cfg.k_max);
      if (kind == "expert") {
        jobs[i].policy = experts[i].get();
      } else {
        policies[i] = std::make_unique<NoisyExpertPolicy>(
            *experts[i], noise, Rng::derive(cfg.seed, i).uniform_int(0, INT64_MAX),
            codec.vocab().size());
        jobs[i].policy = policies[i].get();
      }
    });
  });

  std::vector<DecodeResult> results(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    at_line(src_lines[i].line,
            [&] { results[i] = tmedit::decode(jobs[i].x, jobs[i].matches, *jobs[i].policy, cfg.decode); });
  });

  Output out(a.out);
  out.header("decode", cfg,
             {{"src", a.src}, {"tm", a.tm}, {"refs", a.refs}, {"trace", a.trace}});
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const DecodeResult& r = results[i];
    json ms = json::array();
    for (const auto& m : jobs[i].matches) ms.push_back(codec.decode(m));
    json row = {{"id", id_json(ids[i])},
                {"output", codec.decode(r.output)},
                {"text", detokenize(r.output, codec.vocab())},
                {"provenance", provenance_to_json(r.provenance)},
                {"iterations", r.iterations},
                {"matches", std::move(ms)}};
    if (a.trace) row["trace"] = trace_to_json(r.trace, codec.vocab());
    out.line(row);
  }
  out.close();
}

void cmd_stats(const Config& cfg, const Args& a, Codec& codec) {
  const auto res_lines = read_lines(a.results);
  const auto ref_lines = read_lines(a.refs);
  same_count(res_lines, ref_lines, "results and refs differ in length");
  std::vector<TokenSeq> outputs, refs;
  std::vector<Provenance> provs;
  double cover_sum = 0.0, noise_sum = 0.0;
  std::size_t with_matches = 0;
  for (std::size_t i = 0; i < res_lines.size(); ++i) {
    const Line& l = res_lines[i];
    outputs.push_back(codec.encode(field(l, {"output", "tokens"}), l.line, cfg.max_length));
    refs.push_back(codec.encode(field(ref_lines[i], {"tokens", "text", "tgt", "ref"}),
                                ref_lines[i].line, cfg.max_length));
    const json& p = field(l, {"provenance"});
    if (!p.is_array() || p.size() != outputs.back().size()) {
      throw DataError("provenance must have one entry per output token", l.line);
    }
    Provenance prov;
    for (const json& o : p) {
      if (o.is_null()) {
        prov.push_back(Origin::generated());
      } else if (o.is_array() && o.size() == 2 && o[0].is_number_unsigned() &&
                 o[1].is_number_unsigned()) {
        prov.push_back(Origin::copy(o[0].get<std::size_t>(), o[1].get<std::size_t>()));
      } else {
        throw DataError("provenance entries are null or [match, position]", l.line);
      }
    }
    provs.push_back(std::move(prov));
    const auto matches = matches_of(l, codec, cfg);
    if (!matches.empty()) {
      const CoverNoise cn = cover_noise(refs.back(), matches);
      cover_sum += cn.cover;
      noise_sum += cn.noise;
      ++with_matches;
    }
  }
  if (a.max_order < 1) throw UsageError("max-order must be >= 1");
  const OriginStats stats = origin_ngram_stats(outputs, provs, refs, a.max_order);
  json report = to_json(stats);
  report["sentences"] = outputs.size();
  report["with_matches"] = with_matches;
  report["cover"] = with_matches ? json(cover_sum / static_cast<double>(with_matches))
                                 : json(nullptr);
  report["noise"] = with_matches ? json(noise_sum / static_cast<double>(with_matches))
                                 : json(nullptr);
  Output out(a.out);
  out.header("stats", cfg,
             {{"results", a.results}, {"refs", a.refs}, {"max_order", a.max_order}});
  out.line(report);
  out.close();
}

}  // namespace tmedit::cli
