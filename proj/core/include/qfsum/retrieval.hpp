#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "qfsum/embeddings.hpp"

namespace qfsum {

enum class Phase { kSearch, kExplore };

std::string_view ToString(Phase phase);
Phase ParsePhase(std::string_view name);

// Sentences are addressed by their ordinal in the session's flattened corpus,
// which is ordered by (document insertion order, sentence index). Ordinal order
// is therefore the ranking tie-break.
struct RankedSentence {
  std::size_t ordinal = 0;
  double score = 0.0;

  friend bool operator==(const RankedSentence&, const RankedSentence&) = default;
};

struct Batch {
  std::size_t batch_number = 0;
  Phase phase = Phase::kSearch;
  std::vector<RankedSentence> items;

  friend bool operator==(const Batch&, const Batch&) = default;
};

// All ordinals with excluded[ordinal] == false, by score descending then
// ordinal ascending. `excluded` may be empty (nothing excluded).
std::vector<RankedSentence> RankByScore(std::span<const double> scores,
                                        const std::vector<bool>& excluded);

std::vector<RankedSentence> VsmRank(const Embedding& query,
                                    std::span<const Embedding> sentences,
                                    const std::vector<bool>& excluded);

Batch TakeBatch(std::span<const RankedSentence> ranked, std::size_t k,
                std::size_t batch_number, Phase phase);

}  // namespace qfsum
