#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "qfsum/classifier.hpp"
#include "qfsum/embeddings.hpp"
#include "qfsum/ingestion.hpp"
#include "qfsum/retrieval.hpp"

namespace qfsum {

struct SessionSettings {
  EmbeddingConfig embedding;
  ClassifierConfig classifier;
  std::size_t batch_size = 10;
  std::size_t stop_threshold = 3;
  std::size_t max_documents = 5;

  void Validate() const;
  friend bool operator==(const SessionSettings&, const SessionSettings&) = default;
};

// One user judgment. batch, phase and position describe when the sentence was
// first presented; a relabel repeats them and appends a new event.
struct LabelEvent {
  std::string doc_id;
  std::size_t index = 0;
  Label label = Label::kIrrelevant;
  std::size_t batch = 0;
  Phase phase = Phase::kSearch;
  std::size_t position = 0;

  friend bool operator==(const LabelEvent&, const LabelEvent&) = default;
};

// A sentence shown to the user, labeled or not.
struct Presentation {
  std::string doc_id;
  std::size_t index = 0;
  std::size_t batch = 0;
  Phase phase = Phase::kSearch;
  std::size_t position = 0;  // global 1-based order of presentation

  friend bool operator==(const Presentation&, const Presentation&) = default;
};

struct LabelInput {
  std::string doc_id;
  std::size_t index = 0;
  Label label = Label::kIrrelevant;
};

struct StopState {
  std::size_t consecutive_empty_turns = 0;
  std::size_t threshold = 3;

  bool ShouldStop() const { return consecutive_empty_turns >= threshold; }
};

struct SubmitResult {
  std::size_t stop_counter = 0;
  bool should_stop = false;
  std::size_t accepted = 0;
};

struct ExploreOutcome {
  Batch batch;
  // Recommendation score for every sentence ordinal at the time the batch was
  // built: classifier scores in [0, 1], or query similarity on fallback.
  std::vector<double> scores;
  bool used_classifier = false;
};

// Plain-data image of a session; what the state file stores.
struct SessionSnapshot {
  std::string session_id;
  std::vector<Document> documents;
  std::string query;
  SessionSettings settings;
  std::vector<LabelEvent> history;
  std::vector<Presentation> shown;
  std::size_t stop_counter = 0;
  std::size_t batch_counter = 0;
  std::size_t submitted_batch = 0;
  bool processed = false;

  friend bool operator==(const SessionSnapshot&, const SessionSnapshot&) = default;
};

// The mutable aggregate behind one review: documents, query, settings, the
// label history and the stopping counter. Single-writer; callers serialize
// mutations.
class Session {
 public:
  explicit Session(std::string session_id, SessionSettings settings = {},
                   ProviderFactory providers = DefaultProviderFactory());

  // Validates every invariant (InvariantViolation) and reprocesses when the
  // snapshot was processed.
  static Session FromSnapshot(SessionSnapshot snapshot,
                              ProviderFactory providers = DefaultProviderFactory());
  SessionSnapshot Snapshot() const;

  const std::string& id() const { return id_; }
  const SessionSettings& settings() const { return settings_; }
  const std::string& query() const { return query_; }
  const std::vector<Document>& documents() const { return documents_; }
  const std::vector<LabelEvent>& history() const { return history_; }
  const std::vector<Presentation>& shown() const { return shown_; }
  const StopState& stop_state() const { return stop_; }
  std::size_t batch_counter() const { return batch_counter_; }
  bool processed() const { return space_.has_value(); }
  bool batch_open() const { return submitted_batch_ < batch_counter_; }

  // Ingests and appends a document with the next free "doc-N" id. Throws
  // TooManyDocuments at the cap.
  const Document& Upload(std::string filename, std::span<const std::byte> content,
                         const ExtractorRegistry& extractors,
                         const SegmenterOptions& segmenter = {});
  const Document& AddDocument(Document document);

  // Fits the embedding space over all sentences and embeds them. History is
  // kept. Throws EmptyCorpus with no documents.
  void Process(const SessionSettings& settings);
  void Process() { Process(settings_); }

  // VSM batch for the query over sentences not shown yet.
  Batch Search(const std::string& query);
  // Continuous active learning step: retrain on current labels and rank the
  // unshown sentences, or fall back to the query ranking until both classes
  // have been labeled. Throws Exhausted once everything has been shown.
  ExploreOutcome Explore();

  SubmitResult SubmitLabels(std::span<const LabelInput> inputs);
  bool ShouldStop() const { return stop_.ShouldStop(); }
  // Drops labels, presentations and batch numbering; keeps documents,
  // embeddings and query.
  void ClearLabels();

  std::size_t sentence_count() const { return flat_.size(); }
  const Sentence& SentenceAt(std::size_t ordinal) const;
  std::optional<std::size_t> OrdinalOf(const std::string& doc_id, std::size_t index) const;
  std::optional<Label> CurrentLabel(std::size_t ordinal) const { return current_[ordinal]; }
  bool WasShown(std::size_t ordinal) const { return presented_[ordinal].has_value(); }
  const Document& DocumentOf(std::size_t ordinal) const;

  // Only valid once processed.
  const EmbeddingSpace& space() const;
  const std::vector<Embedding>& sentence_vectors() const { return vectors_; }
  const Embedding& query_vector() const { return query_vector_; }

 private:
  struct Slot {
    std::size_t document;
    std::size_t sentence;
  };

  void RequireProcessed() const;
  void IndexDocument(std::size_t doc_pos);
  void SetQuery(const std::string& query);
  std::vector<bool> ShownMask() const;
  Batch IssueBatch(std::span<const RankedSentence> ranked, Phase phase);
  std::vector<double> QueryScores() const;

  std::string id_;
  SessionSettings settings_;
  ProviderFactory providers_;
  std::vector<Document> documents_;
  std::string query_;
  std::vector<LabelEvent> history_;
  std::vector<Presentation> shown_;
  StopState stop_;
  std::size_t batch_counter_ = 0;
  std::size_t submitted_batch_ = 0;

  std::vector<Slot> flat_;
  std::unordered_map<std::string, std::size_t> ordinal_by_key_;
  std::vector<std::optional<Label>> current_;
  std::vector<std::optional<std::size_t>> presented_;  // index into shown_

  std::optional<EmbeddingSpace> space_;
  std::vector<Embedding> vectors_;
  Embedding query_vector_ = SparseVector{};
};

}  // namespace qfsum
