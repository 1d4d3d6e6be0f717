#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qfsum/persistence.hpp"
#include "qfsum/session.hpp"

namespace qfsum {

// Documents of background-noise sentences with a planted cluster of
// topic sentences. The query names only a few of the topic terms, so pure
// query matching misses much of the cluster.
struct SyntheticCorpusOptions {
  std::size_t documents = 5;
  std::size_t sentences_per_document = 100;
  double relevant_fraction = 0.10;
  std::size_t topic_terms = 40;
  std::size_t background_terms = 400;
  std::size_t query_topic_terms = 5;
  std::size_t query_background_terms = 4;
  // Probability that a noise sentence borrows one query topic term.
  double distractor_rate = 0.10;
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  std::vector<Document> documents;
  std::string query;
  std::vector<bool> relevant;  // by sentence ordinal
};

SyntheticCorpus GenerateSyntheticCorpus(const SyntheticCorpusOptions& options);

// Gold labels keyed by (filename, sentence index) mapped onto the corpus
// ordinals. Throws InvalidArgument when a sentence has no gold label.
std::vector<bool> AlignGold(const std::vector<Document>& documents,
                            const std::vector<GoldLabel>& gold);
std::vector<GoldLabel> GoldFromFlags(const std::vector<Document>& documents,
                                     const std::vector<bool>& relevant);

struct SimulationPoint {
  std::size_t batch = 0;
  Phase phase = Phase::kSearch;
  std::size_t shown = 0;
  std::size_t found = 0;
  double effort = 0.0;
  double precision = 0.0;
  std::optional<double> recall;  // absent when the gold has no relevant sentence
  std::size_t stop_counter = 0;
};

struct SimulationRun {
  std::vector<SimulationPoint> series;
  std::size_t explore_turns = 0;
  // Explore submissions taken when the stopping rule first fired.
  std::optional<std::size_t> stopped_after_explore_turns;
  bool exhausted = false;
};

struct SimulationOptions {
  SessionSettings settings;
  bool honor_stop_rule = true;
  std::size_t max_explore_turns = 100000;
};

// Scripted reviewer: one Search batch for the query, then Explore batches,
// labeling every shown sentence from the gold, until exhaustion or (when
// honored) the stopping rule.
SimulationRun RunCalSimulation(const std::vector<Document>& documents, const std::string& query,
                               const std::vector<bool>& relevant,
                               const SimulationOptions& options,
                               const ProviderFactory& providers = DefaultProviderFactory());

// Recall of the last point whose effort does not exceed `effort`.
double RecallAtEffort(const SimulationRun& run, double effort);

// Recall of the static query ranking after reviewing floor(effort * n)
// sentences (no classifier).
double StaticVsmRecallAtEffort(const std::vector<Document>& documents, const std::string& query,
                               const std::vector<bool>& relevant, const EmbeddingConfig& config,
                               double effort,
                               const ProviderFactory& providers = DefaultProviderFactory());

nlohmann::json RunToJson(const SimulationRun& run);
std::string RunSeriesCsv(const SimulationRun& run);

}  // namespace qfsum
