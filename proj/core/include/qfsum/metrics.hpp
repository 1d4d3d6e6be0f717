#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qfsum/embeddings.hpp"
#include "qfsum/session.hpp"

namespace qfsum {

// Relevant-labeled sentences (current labels) over sentences shown.
double Precision(std::span<const LabelEvent> history, std::size_t shown_count);

struct EffortPoint {
  double effort = 0.0;
  double precision = 0.0;
  friend bool operator==(const EffortPoint&, const EffortPoint&) = default;
};

// One point per batch, in batch order: effort = cumulative shown / total,
// precision = relevant (current label) among those shown so far. When
// `shown` is empty the presentations are taken to be the labeled sentences.
std::vector<EffortPoint> PrecisionVsEffort(std::span<const LabelEvent> history,
                                           std::span<const Presentation> shown,
                                           std::size_t total_sentences);
std::vector<EffortPoint> PrecisionVsEffort(std::span<const LabelEvent> history,
                                           std::size_t total_sentences);

using UnigramDistribution = std::map<std::string, double>;

// Additive (alpha = 1) smoothing over the declared support. Word-unigram
// tokens outside the support are ignored.
UnigramDistribution MakeUnigramDistribution(std::span<const std::string> texts,
                                            const std::set<std::string>& support);

// sum_t p(t) ln(p(t) / q(t)); throws SupportMismatch unless the supports are
// identical.
double KlDivergence(const UnigramDistribution& p, const UnigramDistribution& q);

// KL(summary || collection) over the collection's word vocabulary (which
// contains the summary's).
double TopicDivergence(std::span<const std::string> summary_texts,
                       std::span<const std::string> collection_texts);

enum class Polarity { kPositive, kNegative };
enum class QuestionnaireScale { kSus, kRaw };

struct QuestionnaireItem {
  int response = 3;  // 1..5
  Polarity polarity = Polarity::kPositive;
};

// Items score response-1 (positive) or 5-response (negative); raw sums them,
// SUS multiplies the sum of exactly ten items by 2.5.
double QuestionnaireScore(std::span<const QuestionnaireItem> items, QuestionnaireScale scale);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  friend bool operator==(const PrPoint&, const PrPoint&) = default;
};

// Non-interactive baseline: rank every sentence by query similarity and emit
// (recall, precision) at each cutoff 1..n. Throws NoRelevantGold.
std::vector<PrPoint> BaselinePrCurve(const std::string& query,
                                     std::span<const std::string> sentences,
                                     const std::vector<bool>& gold_relevant,
                                     const EmbeddingConfig& config,
                                     const ProviderFactory& providers = DefaultProviderFactory());

// Same sweep over an explicit ranking (ordinals into gold_relevant).
std::vector<PrPoint> PrCurveFromRanking(std::span<const RankedSentence> ranking,
                                        const std::vector<bool>& gold_relevant);

// Interpolated precision (max precision at recall >= r) on a fixed recall
// grid, averaged across curves.
std::vector<PrPoint> AveragePrCurves(std::span<const std::vector<PrPoint>> curves,
                                     std::span<const double> recall_grid);

// Equal-width histogram over [lo, hi]; values outside are clamped into the
// end bins.
std::vector<std::size_t> Histogram(std::span<const double> values, std::size_t bins,
                                   double lo = 0.0, double hi = 1.0);

struct DocumentLabelCounts {
  std::string doc_id;
  std::string filename;
  std::size_t relevant = 0;
  std::size_t irrelevant = 0;
  std::size_t unlabeled = 0;
};

std::vector<DocumentLabelCounts> LabelCountsPerDocument(const Session& session);

struct MetricsReport {
  double precision_overall = 0.0;
  std::vector<EffortPoint> precision_vs_effort;
  double kl_divergence = 0.0;
  std::vector<DocumentLabelCounts> label_counts_per_document;
  std::size_t shown = 0;
  std::size_t relevant = 0;
  std::size_t total_sentences = 0;
};

// Throws NothingShown when no sentence has been presented.
MetricsReport Evaluate(const Session& session);

}  // namespace qfsum
