#include "qfsum/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "qfsum/error.hpp"
#include "qfsum/text.hpp"

namespace qfsum {
namespace {

std::string Key(const std::string& doc_id, std::size_t index) {
  return doc_id + '\x1f' + std::to_string(index);
}

std::unordered_map<std::string, Label> CurrentLabels(std::span<const LabelEvent> history) {
  std::unordered_map<std::string, Label> current;
  for (const auto& e : history) current[Key(e.doc_id, e.index)] = e.label;
  return current;
}

}  // namespace

double Precision(std::span<const LabelEvent> history, std::size_t shown_count) {
  if (shown_count == 0) throw Error(ErrorCode::kNothingShown, "no sentence has been shown");
  const auto current = CurrentLabels(history);
  const auto relevant = std::count_if(current.begin(), current.end(), [](const auto& kv) {
    return kv.second == Label::kRelevant;
  });
  return static_cast<double>(relevant) / static_cast<double>(shown_count);
}

std::vector<EffortPoint> PrecisionVsEffort(std::span<const LabelEvent> history,
                                           std::span<const Presentation> shown,
                                           std::size_t total_sentences) {
  if (total_sentences == 0) {
    throw Error(ErrorCode::kInvalidArgument, "total_sentences must be positive");
  }
  std::vector<Presentation> derived;
  if (shown.empty()) {
    std::unordered_map<std::string, bool> seen;
    for (const auto& e : history) {
      if (seen.emplace(Key(e.doc_id, e.index), true).second) {
        derived.push_back({e.doc_id, e.index, e.batch, e.phase, e.position});
      }
    }
    std::stable_sort(derived.begin(), derived.end(),
                     [](const auto& a, const auto& b) { return a.position < b.position; });
    shown = derived;
  }
  const auto current = CurrentLabels(history);
  std::vector<EffortPoint> series;
  std::size_t cumulative = 0;
  std::size_t relevant = 0;
  for (std::size_t i = 0; i < shown.size(); ++i) {
    ++cumulative;
    const auto it = current.find(Key(shown[i].doc_id, shown[i].index));
    if (it != current.end() && it->second == Label::kRelevant) ++relevant;
    const bool batch_ends = i + 1 == shown.size() || shown[i + 1].batch != shown[i].batch;
    if (batch_ends) {
      series.push_back({static_cast<double>(cumulative) / static_cast<double>(total_sentences),
                        static_cast<double>(relevant) / static_cast<double>(cumulative)});
    }
  }
  return series;
}

std::vector<EffortPoint> PrecisionVsEffort(std::span<const LabelEvent> history,
                                           std::size_t total_sentences) {
  return PrecisionVsEffort(history, {}, total_sentences);
}

UnigramDistribution MakeUnigramDistribution(std::span<const std::string> texts,
                                            const std::set<std::string>& support) {
  if (support.empty()) throw Error(ErrorCode::kInvalidArgument, "empty support");
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& text : texts) {
    for (auto& token : Tokenize(text, TokenKind::kWordUnigram)) {
      if (support.contains(token)) {
        ++counts[token];
        ++total;
      }
    }
  }
  const double denom = static_cast<double>(total + support.size());
  UnigramDistribution dist;
  for (const auto& t : support) {
    const auto it = counts.find(t);
    const double c = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    dist.emplace(t, (c + 1.0) / denom);
  }
  return dist;
}

double KlDivergence(const UnigramDistribution& p, const UnigramDistribution& q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::kSupportMismatch, "distributions have different supports");
  }
  double kl = 0.0;
  auto iq = q.begin();
  for (auto ip = p.begin(); ip != p.end(); ++ip, ++iq) {
    if (ip->first != iq->first) {
      throw Error(ErrorCode::kSupportMismatch, "distributions have different supports");
    }
    if (ip->second > 0.0) kl += ip->second * std::log(ip->second / iq->second);
  }
  return std::max(kl, 0.0);
}

double TopicDivergence(std::span<const std::string> summary_texts,
                       std::span<const std::string> collection_texts) {
  std::set<std::string> support;
  for (const auto* group : {&summary_texts, &collection_texts}) {
    for (const auto& text : *group) {
      for (auto& t : Tokenize(text, TokenKind::kWordUnigram)) support.insert(std::move(t));
    }
  }
  if (support.empty()) return 0.0;
  return KlDivergence(MakeUnigramDistribution(summary_texts, support),
                      MakeUnigramDistribution(collection_texts, support));
}

double QuestionnaireScore(std::span<const QuestionnaireItem> items, QuestionnaireScale scale) {
  if (scale == QuestionnaireScale::kSus && items.size() != 10) {
    throw Error(ErrorCode::kWrongItemCount,
                "SUS needs exactly 10 items, got " + std::to_string(items.size()));
  }
  int sum = 0;
  for (const auto& item : items) {
    if (item.response < 1 || item.response > 5) {
      throw Error(ErrorCode::kResponseOutOfRange,
                  "response " + std::to_string(item.response) + " outside 1..5");
    }
    sum += item.polarity == Polarity::kPositive ? item.response - 1 : 5 - item.response;
  }
  return scale == QuestionnaireScale::kSus ? sum * 2.5 : static_cast<double>(sum);
}

std::vector<PrPoint> PrCurveFromRanking(std::span<const RankedSentence> ranking,
                                        const std::vector<bool>& gold_relevant) {
  const auto total_relevant =
      static_cast<std::size_t>(std::count(gold_relevant.begin(), gold_relevant.end(), true));
  if (total_relevant == 0) {
    throw Error(ErrorCode::kNoRelevantGold, "gold labels contain no relevant sentence");
  }
  std::vector<PrPoint> curve;
  curve.reserve(ranking.size());
  std::size_t hits = 0;
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    if (gold_relevant.at(ranking[k].ordinal)) ++hits;
    curve.push_back({static_cast<double>(hits) / static_cast<double>(total_relevant),
                     static_cast<double>(hits) / static_cast<double>(k + 1)});
  }
  return curve;
}

std::vector<PrPoint> BaselinePrCurve(const std::string& query,
                                     std::span<const std::string> sentences,
                                     const std::vector<bool>& gold_relevant,
                                     const EmbeddingConfig& config,
                                     const ProviderFactory& providers) {
  if (gold_relevant.size() != sentences.size()) {
    throw Error(ErrorCode::kInvalidArgument, "gold labels do not cover the sentences");
  }
  if (std::find(gold_relevant.begin(), gold_relevant.end(), true) == gold_relevant.end()) {
    throw Error(ErrorCode::kNoRelevantGold, "gold labels contain no relevant sentence");
  }
  const auto space = EmbeddingSpace::Fit(sentences, config, providers);
  const auto vectors = space.EmbedAll(sentences);
  const auto ranking = VsmRank(space.Embed(query), vectors, {});
  return PrCurveFromRanking(ranking, gold_relevant);
}

std::vector<PrPoint> AveragePrCurves(std::span<const std::vector<PrPoint>> curves,
                                     std::span<const double> recall_grid) {
  std::vector<PrPoint> out;
  out.reserve(recall_grid.size());
  for (const double r : recall_grid) {
    double sum = 0.0;
    for (const auto& curve : curves) {
      double best = 0.0;
      for (const auto& p : curve) {
        if (p.recall + 1e-12 >= r) best = std::max(best, p.precision);
      }
      sum += best;
    }
    out.push_back({r, curves.empty() ? 0.0 : sum / static_cast<double>(curves.size())});
  }
  return out;
}

std::vector<std::size_t> Histogram(std::span<const double> values, std::size_t bins, double lo,
                                   double hi) {
  std::vector<std::size_t> counts(bins, 0);
  if (bins == 0) return counts;
  const double width = (hi - lo) / static_cast<double>(bins);
  for (const double v : values) {
    auto bin = static_cast<long>(std::floor((v - lo) / width));
    bin = std::clamp(bin, 0L, static_cast<long>(bins) - 1);
    ++counts[static_cast<std::size_t>(bin)];
  }
  return counts;
}

std::vector<DocumentLabelCounts> LabelCountsPerDocument(const Session& session) {
  std::vector<DocumentLabelCounts> out;
  std::unordered_map<std::string, std::size_t> pos;
  for (const auto& d : session.documents()) {
    pos.emplace(d.doc_id, out.size());
    out.push_back({d.doc_id, d.filename, 0, 0, 0});
  }
  for (std::size_t i = 0; i < session.sentence_count(); ++i) {
    auto& row = out[pos.at(session.SentenceAt(i).doc_id)];
    const auto label = session.CurrentLabel(i);
    if (!label) {
      ++row.unlabeled;
    } else if (*label == Label::kRelevant) {
      ++row.relevant;
    } else {
      ++row.irrelevant;
    }
  }
  return out;
}

MetricsReport Evaluate(const Session& session) {
  MetricsReport report;
  report.total_sentences = session.sentence_count();
  report.shown = session.shown().size();
  report.precision_overall = Precision(session.history(), report.shown);
  report.precision_vs_effort =
      PrecisionVsEffort(session.history(), session.shown(), std::max<std::size_t>(1, report.total_sentences));

  std::vector<std::string> summary;
  std::vector<std::string> collection;
  for (std::size_t i = 0; i < session.sentence_count(); ++i) {
    const auto& text = session.SentenceAt(i).text;
    collection.push_back(text);
    if (session.CurrentLabel(i) == Label::kRelevant) {
      summary.push_back(text);
      ++report.relevant;
    }
  }
  report.kl_divergence = TopicDivergence(summary, collection);
  report.label_counts_per_document = LabelCountsPerDocument(session);
  return report;
}

}  // namespace qfsum
