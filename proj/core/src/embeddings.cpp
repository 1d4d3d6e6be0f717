#include "qfsum/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "qfsum/error.hpp"

namespace qfsum {

std::string_view ToString(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::kWordUnigramTfidf: return "word-unigram-tfidf";
    case EmbeddingKind::kCharTrigramTfidf: return "char-trigram-tfidf";
    case EmbeddingKind::kExternalDense: return "external-dense";
  }
  return "unknown";
}

EmbeddingKind ParseEmbeddingKind(std::string_view name) {
  if (name == "word-unigram-tfidf" || name == "word-unigram") {
    return EmbeddingKind::kWordUnigramTfidf;
  }
  if (name == "char-trigram-tfidf" || name == "char-trigram") {
    return EmbeddingKind::kCharTrigramTfidf;
  }
  if (name == "external-dense") return EmbeddingKind::kExternalDense;
  throw Error(ErrorCode::kInvalidArgument, "unknown embedding kind: " + std::string(name));
}

void EmbeddingConfig::Validate() const {
  const bool dense = kind == EmbeddingKind::kExternalDense;
  if (dense != provider_endpoint.has_value()) {
    throw Error(ErrorCode::kInvalidArgument,
                dense ? "external-dense embedding requires a provider endpoint"
                      : "provider endpoint is only valid for external-dense");
  }
}

double SmoothedIdf(std::size_t document_frequency, std::size_t corpus_size) {
  return std::log((1.0 + static_cast<double>(corpus_size)) /
                  (1.0 + static_cast<double>(document_frequency))) +
         1.0;
}

Vocabulary Vocabulary::Fit(std::span<const std::string> texts, TokenKind kind) {
  if (texts.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "cannot fit a vocabulary on zero sentences");
  }
  Vocabulary v;
  v.kind_ = kind;
  v.corpus_size_ = texts.size();
  for (const auto& text : texts) {
    std::unordered_set<std::uint32_t> seen;
    for (auto& token : Tokenize(text, kind)) {
      auto [it, inserted] =
          v.index_.try_emplace(token, static_cast<std::uint32_t>(v.terms_.size()));
      if (inserted) {
        v.terms_.push_back(std::move(token));
        v.df_.push_back(0);
      }
      if (seen.insert(it->second).second) ++v.df_[it->second];
    }
  }
  v.idf_.reserve(v.df_.size());
  for (auto df : v.df_) v.idf_.push_back(SmoothedIdf(df, v.corpus_size_));
  return v;
}

Vocabulary Vocabulary::Fit(std::span<const Sentence> sentences, TokenKind kind) {
  std::vector<std::string> texts;
  texts.reserve(sentences.size());
  for (const auto& s : sentences) texts.push_back(s.text);
  return Fit(texts, kind);
}

std::optional<std::uint32_t> Vocabulary::IndexOf(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double SparseVector::Norm() const {
  double sum = 0.0;
  for (const auto& e : entries) sum += e.weight * e.weight;
  return std::sqrt(sum);
}

double DenseVector::Norm() const {
  double sum = 0.0;
  for (double x : values) sum += x * x;
  return std::sqrt(sum);
}

SparseVector EmbedTfidf(std::string_view text, const Vocabulary& vocab) {
  std::map<std::uint32_t, double> counts;
  for (const auto& token : Tokenize(text, vocab.kind())) {
    if (auto idx = vocab.IndexOf(token)) counts[*idx] += 1.0;
  }
  SparseVector v;
  v.entries.reserve(counts.size());
  double sum = 0.0;
  for (const auto& [idx, tf] : counts) {
    const double w = tf * vocab.Idf(idx);
    v.entries.push_back({idx, w});
    sum += w * w;
  }
  if (sum > 0.0) {
    const double inv = 1.0 / std::sqrt(sum);
    for (auto& e : v.entries) e.weight *= inv;
  }
  return v;
}

double Similarity(const SparseVector& a, const SparseVector& b) {
  if (a.empty() || b.empty()) return 0.0;
  double dot = 0.0;
  auto ia = a.entries.begin();
  auto ib = b.entries.begin();
  while (ia != a.entries.end() && ib != b.entries.end()) {
    if (ia->index < ib->index) {
      ++ia;
    } else if (ib->index < ia->index) {
      ++ib;
    } else {
      dot += ia->weight * ib->weight;
      ++ia;
      ++ib;
    }
  }
  const double denom = a.Norm() * b.Norm();
  return denom > 0.0 ? std::clamp(dot / denom, -1.0, 1.0) : 0.0;
}

double Similarity(const DenseVector& a, const DenseVector& b) {
  if (a.dimension() != b.dimension()) {
    throw Error(ErrorCode::kDimensionMismatch, "dense vectors differ in dimension");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
  const double denom = a.Norm() * b.Norm();
  return denom > 0.0 ? std::clamp(dot / denom, -1.0, 1.0) : 0.0;
}

double Similarity(const Embedding& a, const Embedding& b) {
  if (a.index() != b.index()) {
    throw Error(ErrorCode::kDimensionMismatch, "cannot compare sparse and dense vectors");
  }
  if (const auto* sa = std::get_if<SparseVector>(&a)) {
    return Similarity(*sa, std::get<SparseVector>(b));
  }
  return Similarity(std::get<DenseVector>(a), std::get<DenseVector>(b));
}

CachingDenseEncoder::CachingDenseEncoder(std::shared_ptr<DenseProvider> provider)
    : provider_(std::move(provider)) {}

std::vector<DenseVector> CachingDenseEncoder::Encode(std::span<const std::string> texts) {
  std::lock_guard lock(mu_);
  std::vector<std::string> missing;
  std::unordered_set<std::string> queued;
  for (const auto& t : texts) {
    if (!cache_.contains(t) && queued.insert(t).second) missing.push_back(t);
  }
  if (!missing.empty()) {
    auto fresh = provider_->Encode(missing);
    if (fresh.size() != missing.size()) {
      throw Error(ErrorCode::kProviderUnavailable,
                  "provider returned " + std::to_string(fresh.size()) + " vectors for " +
                      std::to_string(missing.size()) + " texts");
    }
    auto dim = dimension_;
    for (const auto& v : fresh) {
      if (!dim) dim = v.dimension();
      if (v.dimension() != *dim || v.dimension() == 0) {
        throw Error(ErrorCode::kDimensionMismatch, "provider returned inconsistent dimensions");
      }
      for (double x : v.values) {
        if (!std::isfinite(x)) {
          throw Error(ErrorCode::kProviderUnavailable, "provider returned non-finite values");
        }
      }
    }
    dimension_ = dim;
    for (std::size_t i = 0; i < missing.size(); ++i) {
      cache_.emplace(std::move(missing[i]), std::move(fresh[i]));
    }
  }
  std::vector<DenseVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(cache_.at(t));
  return out;
}

std::optional<std::size_t> CachingDenseEncoder::dimension() const {
  std::lock_guard lock(mu_);
  return dimension_;
}

std::size_t CachingDenseEncoder::cache_size() const {
  std::lock_guard lock(mu_);
  return cache_.size();
}

std::vector<DenseVector> EmbedExternal(std::span<const std::string> texts,
                                       CachingDenseEncoder& encoder) {
  if (texts.empty()) return {};
  return encoder.Encode(texts);
}

ProviderFactory DefaultProviderFactory() {
  return [](const std::string& endpoint) -> std::shared_ptr<DenseProvider> {
    return std::make_shared<HttpDenseProvider>(endpoint);
  };
}

EmbeddingSpace EmbeddingSpace::Fit(std::span<const std::string> corpus,
                                   const EmbeddingConfig& config,
                                   const ProviderFactory& providers) {
  config.Validate();
  if (corpus.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "no sentences to embed");
  }
  EmbeddingSpace space;
  space.config_ = config;
  switch (config.kind) {
    case EmbeddingKind::kWordUnigramTfidf:
      space.vocab_ = Vocabulary::Fit(corpus, TokenKind::kWordUnigram);
      break;
    case EmbeddingKind::kCharTrigramTfidf:
      space.vocab_ = Vocabulary::Fit(corpus, TokenKind::kCharTrigram);
      break;
    case EmbeddingKind::kExternalDense:
      space.encoder_ =
          std::make_shared<CachingDenseEncoder>(providers(*config.provider_endpoint));
      space.encoder_->Encode(corpus);
      break;
  }
  return space;
}

std::size_t EmbeddingSpace::dimension() const {
  if (vocab_) return vocab_->size();
  return encoder_->dimension().value_or(0);
}

Embedding EmbeddingSpace::Embed(const std::string& text) const {
  if (vocab_) return EmbedTfidf(text, *vocab_);
  return encoder_->Encode(std::span<const std::string>(&text, 1)).front();
}

std::vector<Embedding> EmbeddingSpace::EmbedAll(std::span<const std::string> texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  if (vocab_) {
    for (const auto& t : texts) out.emplace_back(EmbedTfidf(t, *vocab_));
  } else {
    for (auto& v : EmbedExternal(texts, *encoder_)) out.emplace_back(std::move(v));
  }
  return out;
}

}  // namespace qfsum
