#include "qfsum/retrieval.hpp"

#include <algorithm>
#include <string>

#include "qfsum/error.hpp"

namespace qfsum {

std::string_view ToString(Phase phase) {
  return phase == Phase::kSearch ? "search" : "explore";
}

Phase ParsePhase(std::string_view name) {
  if (name == "search") return Phase::kSearch;
  if (name == "explore") return Phase::kExplore;
  throw Error(ErrorCode::kMalformedInput, "unknown phase: " + std::string(name));
}

std::vector<RankedSentence> RankByScore(std::span<const double> scores,
                                        const std::vector<bool>& excluded) {
  std::vector<RankedSentence> ranked;
  ranked.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i < excluded.size() && excluded[i]) continue;
    ranked.push_back({i, scores[i]});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedSentence& a, const RankedSentence& b) {
                     return a.score > b.score;
                   });
  return ranked;
}

std::vector<RankedSentence> VsmRank(const Embedding& query,
                                    std::span<const Embedding> sentences,
                                    const std::vector<bool>& excluded) {
  std::vector<double> scores(sentences.size(), 0.0);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (i < excluded.size() && excluded[i]) continue;
    scores[i] = Similarity(query, sentences[i]);
  }
  return RankByScore(scores, excluded);
}

Batch TakeBatch(std::span<const RankedSentence> ranked, std::size_t k,
                std::size_t batch_number, Phase phase) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "batch size must be positive");
  Batch batch{batch_number, phase, {}};
  const auto n = std::min(k, ranked.size());
  batch.items.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n));
  return batch;
}

}  // namespace qfsum
