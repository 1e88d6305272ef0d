// Serial reference vs OpenMP for the four batch kernels. Thread count comes
// from TMEDIT_THREADS / OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "tmedit/decode.hpp"
#include "tmedit/parallel.hpp"
#include "tmedit/realign.hpp"
#include "tmedit/retrieval.hpp"
#include "tmedit/rng.hpp"
#include "tmedit/rollin.hpp"

namespace {

using namespace tmedit;

constexpr std::size_t kVocab = 40;

TokenSeq random_seq(Rng& rng, std::size_t lo, std::size_t hi) {
  const auto len = static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
  TokenSeq s;
  for (std::size_t i = 0; i < len; ++i) {
    s.push_back(static_cast<TokenId>(Vocab::kNumReserved + rng.uniform_int(0, kVocab - 1)));
  }
  return s;
}

// Copy of `s` with a few substitutions.
TokenSeq perturb(const TokenSeq& s, Rng& rng, double rate) {
  TokenSeq out;
  for (TokenId t : s.content()) {
    out.push_back(rng.bernoulli(rate)
                      ? static_cast<TokenId>(Vocab::kNumReserved +
                                             rng.uniform_int(0, kVocab - 1))
                      : t);
  }
  return out;
}

struct RetrievalData {
  TMIndex index;
  std::vector<Query> queries;
};

const RetrievalData& retrieval_data() {
  static const RetrievalData d = [] {
    Rng rng(1);
    std::vector<TMEntry> tm;
    for (std::int64_t i = 0; i < 5000; ++i) {
      TokenSeq src = random_seq(rng, 5, 25);
      tm.push_back({i, src, perturb(src, rng, 0.3)});
    }
    RetrievalData out;
    for (int q = 0; q < 200; ++q) {
      out.queries.push_back({perturb(tm[static_cast<std::size_t>(
                                         rng.uniform_int(0, 4999))].src,
                                     rng, 0.3),
                             std::nullopt});
    }
    out.index = TMIndex::build(std::move(tm));
    return out;
  }();
  return d;
}

void BM_RetrieveSerial(benchmark::State& st) {
  const auto& d = retrieval_data();
  for (auto _ : st) benchmark::DoNotOptimize(d.index.retrieve_batch_serial(d.queries, {}));
}
void BM_RetrieveParallel(benchmark::State& st) {
  const auto& d = retrieval_data();
  for (auto _ : st) benchmark::DoNotOptimize(d.index.retrieve_batch(d.queries, {}));
}

const std::vector<RealignInstance>& realign_data() {
  static const std::vector<RealignInstance> d = [] {
    Rng rng(2);
    std::vector<RealignInstance> out;
    for (int b = 0; b < 64; ++b) {
      RealignInstance inst;
      std::size_t gaps = 0;
      for (int n = 0; n < 3; ++n) {
        inst.seqs.push_back(random_seq(rng, 4, 12));
        gaps = std::max(gaps, inst.seqs.back().size() + 1);
      }
      inst.logits = PlhLogits(3, gaps, 8);
      for (std::size_t n = 0; n < 3; ++n) {
        for (std::size_t g = 0; g <= inst.seqs[n].size(); ++g) {
          inst.logits.valid[n * gaps + g] = 1;
          auto r = inst.logits.row(n, g);
          for (double& v : r) v = rng.uniform_real(-4.0, 0.0);
          PlhLogits::normalize_row(r);
        }
      }
      out.push_back(std::move(inst));
    }
    return out;
  }();
  return d;
}

void BM_RealignSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(realign_batch_serial(realign_data()));
}
void BM_RealignParallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(realign_batch(realign_data()));
}

const std::vector<RollinInput>& rollin_data() {
  static const std::vector<RollinInput> d = [] {
    Rng rng(3);
    std::vector<RollinInput> out;
    for (int i = 0; i < 300; ++i) {
      RollinInput in;
      in.x = random_seq(rng, 5, 20);
      in.ref = random_seq(rng, 5, 20);
      for (int m = 0; m < 3; ++m) in.matches.push_back(perturb(in.ref, rng, 0.3));
      out.push_back(std::move(in));
    }
    return out;
  }();
  return d;
}

struct RollinPols {
  UniformFiller filler{Vocab::kNumReserved + kVocab};
  GeometricInserter inserter{0.5, kDefaultKMax};
};

void BM_RollinSerial(benchmark::State& st) {
  const RollinPols p;
  for (auto _ : st) {
    benchmark::DoNotOptimize(gen_corpus_serial(rollin_data(), {}, {&p.filler, &p.inserter}));
  }
}
void BM_RollinParallel(benchmark::State& st) {
  const RollinPols p;
  for (auto _ : st) {
    benchmark::DoNotOptimize(gen_corpus(rollin_data(), {}, {&p.filler, &p.inserter}));
  }
}

struct DecodeData {
  std::vector<std::unique_ptr<ExpertPolicy>> experts;
  std::vector<DecodeJob> jobs;
};

const DecodeData& decode_data() {
  static const DecodeData d = [] {
    DecodeData out;
    for (const auto& in : rollin_data()) {
      out.experts.push_back(std::make_unique<ExpertPolicy>(in.ref, in.matches));
      out.jobs.push_back({in.x, in.matches, out.experts.back().get()});
    }
    return out;
  }();
  return d;
}

void BM_DecodeSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(decode_batch_serial(decode_data().jobs));
}
void BM_DecodeParallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(decode_batch(decode_data().jobs));
}

BENCHMARK(BM_RetrieveSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RetrieveParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_RealignSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RealignParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_RollinSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RollinParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DecodeSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DecodeParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

int main(int argc, char** argv) {
  configure_threads_from_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
