#include "qfsum/session.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "qfsum/error.hpp"

namespace qfsum {
namespace {

std::string Key(const std::string& doc_id, std::size_t index) {
  return doc_id + '\x1f' + std::to_string(index);
}

[[noreturn]] void Violation(const std::string& what) {
  throw Error(ErrorCode::kInvariantViolation, what);
}

}  // namespace

void SessionSettings::Validate() const {
  embedding.Validate();
  if (batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch_size must be positive");
  if (stop_threshold == 0) {
    throw Error(ErrorCode::kInvalidArgument, "stop_threshold must be positive");
  }
  if (max_documents == 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_documents must be positive");
  }
  if (!(classifier.l2 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "l2 must be positive");
  if (classifier.iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "iterations must be positive");
  }
  if (!(classifier.step_size > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "step_size must be positive");
  }
  if (classifier.kind == ClassifierKind::kRandomForest) {
    throw Error(ErrorCode::kInvalidArgument, "random-forest is not available in this build");
  }
}

Session::Session(std::string session_id, SessionSettings settings, ProviderFactory providers)
    : id_(std::move(session_id)),
      settings_(std::move(settings)),
      providers_(std::move(providers)) {
  settings_.Validate();
  stop_.threshold = settings_.stop_threshold;
}

const Document& Session::Upload(std::string filename, std::span<const std::byte> content,
                                const ExtractorRegistry& extractors,
                                const SegmenterOptions& segmenter) {
  if (documents_.size() >= settings_.max_documents) {
    throw Error(ErrorCode::kTooManyDocuments,
                "document limit reached (" + std::to_string(settings_.max_documents) + ")");
  }
  std::size_t n = documents_.size() + 1;
  auto taken = [&](const std::string& id) {
    return std::any_of(documents_.begin(), documents_.end(),
                       [&](const Document& d) { return d.doc_id == id; });
  };
  while (taken("doc-" + std::to_string(n))) ++n;
  return AddDocument(
      IngestDocument("doc-" + std::to_string(n), std::move(filename), content, extractors,
                     segmenter));
}

const Document& Session::AddDocument(Document document) {
  if (documents_.size() >= settings_.max_documents) {
    throw Error(ErrorCode::kTooManyDocuments,
                "document limit reached (" + std::to_string(settings_.max_documents) + ")");
  }
  for (const auto& d : documents_) {
    if (d.doc_id == document.doc_id) Violation("duplicate doc_id " + d.doc_id);
  }
  for (std::size_t i = 0; i < document.sentences.size(); ++i) {
    const auto& s = document.sentences[i];
    if (s.index != i + 1 || s.doc_id != document.doc_id) {
      Violation("sentences of " + document.doc_id + " are not indexed 1..n");
    }
    if (s.text.find_first_not_of(" \t\r\n\f\v") == std::string::npos) {
      Violation("blank sentence in " + document.doc_id);
    }
  }
  documents_.push_back(std::move(document));
  IndexDocument(documents_.size() - 1);
  // New sentences invalidate the fitted space.
  space_.reset();
  vectors_.clear();
  return documents_.back();
}

void Session::IndexDocument(std::size_t doc_pos) {
  const auto& doc = documents_[doc_pos];
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    ordinal_by_key_.emplace(Key(doc.doc_id, doc.sentences[i].index), flat_.size());
    flat_.push_back({doc_pos, i});
    current_.emplace_back();
    presented_.emplace_back();
  }
}

void Session::Process(const SessionSettings& settings) {
  settings.Validate();
  if (flat_.empty()) throw Error(ErrorCode::kEmptyCorpus, "no documents to process");
  std::vector<std::string> texts;
  texts.reserve(flat_.size());
  for (std::size_t i = 0; i < flat_.size(); ++i) texts.push_back(SentenceAt(i).text);

  auto space = EmbeddingSpace::Fit(texts, settings.embedding, providers_);
  auto vectors = space.EmbedAll(texts);
  Embedding query_vector = space.Embed(query_);

  settings_ = settings;
  stop_.threshold = settings.stop_threshold;
  space_ = std::move(space);
  vectors_ = std::move(vectors);
  query_vector_ = std::move(query_vector);
}

void Session::RequireProcessed() const {
  if (!space_) throw Error(ErrorCode::kNotProcessed, "documents have not been processed");
}

const EmbeddingSpace& Session::space() const {
  RequireProcessed();
  return *space_;
}

const Sentence& Session::SentenceAt(std::size_t ordinal) const {
  const auto& slot = flat_.at(ordinal);
  return documents_[slot.document].sentences[slot.sentence];
}

const Document& Session::DocumentOf(std::size_t ordinal) const {
  return documents_[flat_.at(ordinal).document];
}

std::optional<std::size_t> Session::OrdinalOf(const std::string& doc_id,
                                              std::size_t index) const {
  const auto it = ordinal_by_key_.find(Key(doc_id, index));
  if (it == ordinal_by_key_.end()) return std::nullopt;
  return it->second;
}

void Session::SetQuery(const std::string& query) {
  if (query == query_) return;
  query_vector_ = space_->Embed(query);
  query_ = query;
}

std::vector<bool> Session::ShownMask() const {
  std::vector<bool> mask(flat_.size(), false);
  for (std::size_t i = 0; i < flat_.size(); ++i) mask[i] = presented_[i].has_value();
  return mask;
}

std::vector<double> Session::QueryScores() const {
  std::vector<double> scores(vectors_.size());
  for (std::size_t i = 0; i < vectors_.size(); ++i) {
    scores[i] = Similarity(query_vector_, vectors_[i]);
  }
  return scores;
}

Batch Session::IssueBatch(std::span<const RankedSentence> ranked, Phase phase) {
  if (ranked.empty()) throw Error(ErrorCode::kExhausted, "every sentence has been shown");
  // An unsubmitted batch is closed as shown-and-skipped.
  submitted_batch_ = batch_counter_;
  Batch batch = TakeBatch(ranked, settings_.batch_size, batch_counter_ + 1, phase);
  ++batch_counter_;
  for (const auto& item : batch.items) {
    const auto& s = SentenceAt(item.ordinal);
    presented_[item.ordinal] = shown_.size();
    shown_.push_back({s.doc_id, s.index, batch.batch_number, phase, shown_.size() + 1});
  }
  return batch;
}

Batch Session::Search(const std::string& query) {
  RequireProcessed();
  SetQuery(query);
  const auto scores = QueryScores();
  const auto ranked = RankByScore(scores, ShownMask());
  return IssueBatch(ranked, Phase::kSearch);
}

ExploreOutcome Session::Explore() {
  RequireProcessed();
  std::vector<Embedding> features;
  std::vector<Label> labels;
  for (std::size_t i = 0; i < flat_.size(); ++i) {
    if (current_[i]) {
      features.push_back(vectors_[i]);
      labels.push_back(*current_[i]);
    }
  }
  const bool both = std::find(labels.begin(), labels.end(), Label::kRelevant) != labels.end() &&
                    std::find(labels.begin(), labels.end(), Label::kIrrelevant) != labels.end();

  ExploreOutcome outcome;
  if (both) {
    const auto model = Train(features, labels, space_->dimension(), settings_.classifier);
    outcome.scores.resize(vectors_.size());
    for (std::size_t i = 0; i < vectors_.size(); ++i) {
      outcome.scores[i] = model->Score(vectors_[i]);
    }
    outcome.used_classifier = true;
  } else {
    outcome.scores = QueryScores();
  }
  const auto ranked = RankByScore(outcome.scores, ShownMask());
  outcome.batch = IssueBatch(ranked, Phase::kExplore);
  return outcome;
}

SubmitResult Session::SubmitLabels(std::span<const LabelInput> inputs) {
  std::vector<std::size_t> ordinals;
  ordinals.reserve(inputs.size());
  std::unordered_set<std::size_t> seen;
  for (const auto& in : inputs) {
    const auto ordinal = OrdinalOf(in.doc_id, in.index);
    if (!ordinal || !presented_[*ordinal]) {
      throw Error(ErrorCode::kUnknownSentence, "sentence " + in.doc_id + "#" +
                                                   std::to_string(in.index) +
                                                   " has not been shown");
    }
    if (!seen.insert(*ordinal).second) {
      throw Error(ErrorCode::kDuplicateInBatch, "sentence " + in.doc_id + "#" +
                                                    std::to_string(in.index) +
                                                    " labeled twice in one submission");
    }
    ordinals.push_back(*ordinal);
  }

  const bool closes_batch = batch_open();
  bool relevant_in_batch = false;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto& p = shown_[*presented_[ordinals[k]]];
    history_.push_back({p.doc_id, p.index, inputs[k].label, p.batch, p.phase, p.position});
    current_[ordinals[k]] = inputs[k].label;
    if (p.batch == batch_counter_ && inputs[k].label == Label::kRelevant) {
      relevant_in_batch = true;
    }
  }

  if (closes_batch) {
    submitted_batch_ = batch_counter_;
    const bool explore = !shown_.empty() && shown_.back().phase == Phase::kExplore;
    if (explore) {
      stop_.consecutive_empty_turns =
          relevant_in_batch ? 0 : stop_.consecutive_empty_turns + 1;
    }
  }
  return {stop_.consecutive_empty_turns, stop_.ShouldStop(), inputs.size()};
}

void Session::ClearLabels() {
  history_.clear();
  shown_.clear();
  stop_.consecutive_empty_turns = 0;
  batch_counter_ = 0;
  submitted_batch_ = 0;
  std::fill(current_.begin(), current_.end(), std::nullopt);
  std::fill(presented_.begin(), presented_.end(), std::nullopt);
}

SessionSnapshot Session::Snapshot() const {
  SessionSnapshot s;
  s.session_id = id_;
  s.documents = documents_;
  s.query = query_;
  s.settings = settings_;
  s.history = history_;
  s.shown = shown_;
  s.stop_counter = stop_.consecutive_empty_turns;
  s.batch_counter = batch_counter_;
  s.submitted_batch = submitted_batch_;
  s.processed = processed();
  return s;
}

Session Session::FromSnapshot(SessionSnapshot snap, ProviderFactory providers) {
  try {
    snap.settings.Validate();
  } catch (const Error& e) {
    Violation(std::string("invalid settings: ") + e.what());
  }
  SessionSettings settings = snap.settings;
  // The cap applies to uploads, not to restoring a saved collection.
  settings.max_documents = std::max(settings.max_documents, snap.documents.size());
  Session session(std::move(snap.session_id), settings, std::move(providers));
  for (auto& doc : snap.documents) session.AddDocument(std::move(doc));
  session.settings_.max_documents = snap.settings.max_documents;
  session.query_ = std::move(snap.query);

  if (snap.submitted_batch > snap.batch_counter) {
    Violation("submitted batch exceeds issued batches");
  }
  std::size_t explore_batches = 0;
  std::size_t last_batch = 0;
  for (std::size_t i = 0; i < snap.shown.size(); ++i) {
    const auto& p = snap.shown[i];
    const auto ordinal = session.OrdinalOf(p.doc_id, p.index);
    if (!ordinal) Violation("presentation references missing sentence " + p.doc_id);
    if (session.presented_[*ordinal]) Violation("sentence presented twice: " + p.doc_id);
    if (p.position != i + 1) Violation("presentation positions are not 1..n");
    if (p.batch == 0 || p.batch > snap.batch_counter || p.batch < last_batch) {
      Violation("presentation batch numbers out of order");
    }
    if (p.batch != last_batch && p.phase == Phase::kExplore) ++explore_batches;
    last_batch = p.batch;
    session.presented_[*ordinal] = i;
  }
  if (last_batch != snap.batch_counter) {
    Violation("batch_counter does not match the presentations");
  }
  if (snap.stop_counter > explore_batches) {
    Violation("stop counter exceeds the number of explore turns");
  }
  for (const auto& e : snap.history) {
    const auto ordinal = session.OrdinalOf(e.doc_id, e.index);
    if (!ordinal) Violation("label references missing sentence " + e.doc_id);
    const auto& presented = session.presented_[*ordinal];
    if (!presented) Violation("label on a sentence that was never shown");
    const auto& p = snap.shown[*presented];
    if (p.batch != e.batch || p.phase != e.phase || p.position != e.position) {
      Violation("label event disagrees with its presentation");
    }
    session.current_[*ordinal] = e.label;
  }
  session.shown_ = std::move(snap.shown);
  session.history_ = std::move(snap.history);
  session.stop_.consecutive_empty_turns = snap.stop_counter;
  session.batch_counter_ = snap.batch_counter;
  session.submitted_batch_ = snap.submitted_batch;
  if (snap.processed) session.Process(session.settings_);
  return session;
}

}  // namespace qfsum
