#include <benchmark/benchmark.h>

#include "qfsum/classifier.hpp"
#include "qfsum/embeddings.hpp"
#include "qfsum/retrieval.hpp"
#include "qfsum/session.hpp"
#include "qfsum/simulation.hpp"

namespace {

qfsum::SyntheticCorpus Corpus(std::size_t sentences_per_document) {
  qfsum::SyntheticCorpusOptions options;
  options.sentences_per_document = sentences_per_document;
  return qfsum::GenerateSyntheticCorpus(options);
}

std::vector<std::string> Texts(const qfsum::SyntheticCorpus& corpus) {
  std::vector<std::string> out;
  for (const auto& d : corpus.documents) {
    for (const auto& s : d.sentences) out.push_back(s.text);
  }
  return out;
}

void BM_FitAndEmbed(benchmark::State& state) {
  const auto texts = Texts(Corpus(state.range(0)));
  const auto kind = state.range(1) ? qfsum::TokenKind::kCharTrigram : qfsum::TokenKind::kWordUnigram;
  for (auto _ : state) {
    const auto vocab = qfsum::Vocabulary::Fit(texts, kind);
    for (const auto& t : texts) benchmark::DoNotOptimize(qfsum::EmbedTfidf(t, vocab));
  }
  state.SetItemsProcessed(state.iterations() * texts.size());
}
BENCHMARK(BM_FitAndEmbed)->ArgsProduct({{100, 1000}, {0, 1}});

void BM_VsmRank(benchmark::State& state) {
  const auto corpus = Corpus(state.range(0));
  const auto texts = Texts(corpus);
  const auto vocab = qfsum::Vocabulary::Fit(texts, qfsum::TokenKind::kWordUnigram);
  std::vector<qfsum::Embedding> vectors;
  for (const auto& t : texts) vectors.emplace_back(qfsum::EmbedTfidf(t, vocab));
  const qfsum::Embedding query = qfsum::EmbedTfidf(corpus.query, vocab);
  for (auto _ : state) benchmark::DoNotOptimize(qfsum::VsmRank(query, vectors, {}));
  state.SetItemsProcessed(state.iterations() * texts.size());
}
BENCHMARK(BM_VsmRank)->Arg(100)->Arg(1000);

void BM_TrainLogistic(benchmark::State& state) {
  const auto corpus = Corpus(100);
  const auto texts = Texts(corpus);
  const auto vocab = qfsum::Vocabulary::Fit(texts, qfsum::TokenKind::kWordUnigram);
  std::vector<qfsum::Embedding> x;
  std::vector<qfsum::Label> y;
  for (std::size_t i = 0; i < static_cast<std::size_t>(state.range(0)); ++i) {
    x.emplace_back(qfsum::EmbedTfidf(texts[i], vocab));
    y.push_back(corpus.relevant[i] || i == 0 ? qfsum::Label::kRelevant : qfsum::Label::kIrrelevant);
  }
  y[1] = qfsum::Label::kIrrelevant;
  for (auto _ : state) benchmark::DoNotOptimize(qfsum::Train(x, y, vocab.size(), {}));
}
BENCHMARK(BM_TrainLogistic)->Arg(20)->Arg(100)->Arg(400);

void BM_Simulation(benchmark::State& state) {
  const auto corpus = Corpus(100);
  qfsum::SimulationOptions options;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        qfsum::RunCalSimulation(corpus.documents, corpus.query, corpus.relevant, options));
  }
}
BENCHMARK(BM_Simulation)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
