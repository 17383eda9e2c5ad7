// Serial reference vs OpenMP kernels. Arg 0 runs the serial path, arg 1 the
// parallel one; throughput is reported as items per second.
#include <benchmark/benchmark.h>
#include <omp.h>

#include <string>
#include <vector>

#include "dqa/classifier.hpp"
#include "dqa/dataset.hpp"
#include "dqa/embeddings.hpp"
#include "dqa/rng.hpp"

namespace {

dqa::Exec exec_of(const benchmark::State& state) { return state.range(0) ? dqa::Exec::parallel : dqa::Exec::serial; }

std::vector<std::vector<std::string>> synthetic_corpus(std::size_t sentences, std::size_t vocab) {
  dqa::Rng rng(1);
  std::vector<std::vector<std::string>> corpus(sentences);
  for (auto& s : corpus) {
    for (int w = 0; w < 20; ++w) s.push_back("w" + std::to_string(rng.below(vocab)));
  }
  return corpus;
}

const dqa::EmbeddingModel& shared_model() {
  static const dqa::EmbeddingModel model = [] {
    dqa::TrainConfig tc;
    tc.dim = 64;
    tc.epochs = 1;
    tc.min_count = 1;
    tc.seed = 1;
    return dqa::train_sgns(synthetic_corpus(2000, 5000), tc);
  }();
  return model;
}

void BM_TrainSgns(benchmark::State& state) {
  const auto corpus = synthetic_corpus(2000, 2000);
  dqa::TrainConfig tc;
  tc.dim = 64;
  tc.epochs = 1;
  tc.min_count = 1;
  tc.seed = 1;
  tc.threads = state.range(0) ? static_cast<std::uint32_t>(omp_get_max_threads()) : 1;
  for (auto _ : state) benchmark::DoNotOptimize(dqa::train_sgns(corpus, tc));
  state.SetItemsProcessed(state.iterations() * 2000 * 20);
}

void BM_ScoreBatch(benchmark::State& state) {
  const auto& model = shared_model();
  dqa::PairClassifier clf;
  clf.feature_dim = static_cast<std::uint32_t>(dqa::feature_dim_for(model.dim));
  clf.weights.assign(clf.feature_dim, 0.01);
  clf.embedding_dim = model.dim;
  clf.embedding_fingerprint = dqa::model_fingerprint(model);
  const auto corpus = synthetic_corpus(4000, 5000);
  std::vector<std::string> sentences;
  for (const auto& s : corpus) {
    std::string text;
    for (const auto& w : s) text += w + " ";
    sentences.push_back(text);
  }
  std::vector<dqa::TextPair> pairs;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    pairs.push_back({dqa::tcfd_questions()[i % 14].text, sentences[i]});
  }
  for (auto _ : state) benchmark::DoNotOptimize(dqa::score_batch(clf, model, pairs, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pairs.size()));
}

void BM_NearestNeighbors(benchmark::State& state) {
  const auto& model = shared_model();
  for (auto _ : state) benchmark::DoNotOptimize(dqa::nearest_neighbors(model, "w1", 10, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(model.vocab.size()));
}

void BM_BuildPairs(benchmark::State& state) {
  std::vector<dqa::LabeledDoc> docs(50);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    docs[d].doc.doc_id = "doc" + std::to_string(d);
    docs[d].doc.meta.company = "company" + std::to_string(d);
    for (std::size_t s = 0; s < 400; ++s) {
      docs[d].sentences.push_back({s, docs[d].doc.doc_id, "sentence number " + std::to_string(s), 0, 0});
      if (s % 37 == 0) docs[d].answers.insert({1 + static_cast<int>(s % 14), s});
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(dqa::build_pairs(docs, dqa::tcfd_questions(), exec_of(state)));
  state.SetItemsProcessed(state.iterations() * 50 * 400 * 14);
}

}  // namespace

BENCHMARK(BM_TrainSgns)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NearestNeighbors)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BuildPairs)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
