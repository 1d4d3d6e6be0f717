#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "qfsum/ingestion.hpp"
#include "qfsum/text.hpp"

namespace qfsum {

enum class EmbeddingKind { kWordUnigramTfidf, kCharTrigramTfidf, kExternalDense };

std::string_view ToString(EmbeddingKind kind);
// Accepts the canonical names and the short CLI forms ("word-unigram",
// "char-trigram").
EmbeddingKind ParseEmbeddingKind(std::string_view name);

struct EmbeddingConfig {
  EmbeddingKind kind = EmbeddingKind::kWordUnigramTfidf;
  std::optional<std::string> provider_endpoint;

  // provider_endpoint must be present iff kind is external-dense.
  void Validate() const;

  friend bool operator==(const EmbeddingConfig&, const EmbeddingConfig&) = default;
};

// ln((1 + corpus_size) / (1 + df)) + 1
double SmoothedIdf(std::size_t document_frequency, std::size_t corpus_size);

class Vocabulary {
 public:
  // Indices are assigned in first-occurrence order. Throws EmptyCorpus.
  static Vocabulary Fit(std::span<const std::string> texts, TokenKind kind);
  static Vocabulary Fit(std::span<const Sentence> sentences, TokenKind kind);

  TokenKind kind() const { return kind_; }
  std::size_t size() const { return terms_.size(); }
  std::size_t corpus_size() const { return corpus_size_; }
  std::optional<std::uint32_t> IndexOf(std::string_view token) const;
  const std::string& Term(std::uint32_t index) const { return terms_[index]; }
  std::size_t DocumentFrequency(std::uint32_t index) const { return df_[index]; }
  double Idf(std::uint32_t index) const { return idf_[index]; }

 private:
  TokenKind kind_ = TokenKind::kWordUnigram;
  std::size_t corpus_size_ = 0;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> terms_;
  std::vector<std::size_t> df_;
  std::vector<double> idf_;
};

struct SparseVector {
  struct Entry {
    std::uint32_t index;
    double weight;
    friend bool operator==(const Entry&, const Entry&) = default;
  };
  // Sorted by index, no zero weights.
  std::vector<Entry> entries;

  bool empty() const { return entries.empty(); }
  double Norm() const;
  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

struct DenseVector {
  std::vector<double> values;
  std::size_t dimension() const { return values.size(); }
  double Norm() const;
  friend bool operator==(const DenseVector&, const DenseVector&) = default;
};

using Embedding = std::variant<SparseVector, DenseVector>;

// TFIDF with raw-count tf and smoothed idf, L2-normalized. Out-of-vocabulary
// tokens are dropped; a text with none in the vocabulary maps to the zero
// vector.
SparseVector EmbedTfidf(std::string_view text, const Vocabulary& vocab);

// Cosine similarity; 0 when either side is the zero vector. Throws
// DimensionMismatch for mixed kinds or unequal dense dimensions.
double Similarity(const SparseVector& a, const SparseVector& b);
double Similarity(const DenseVector& a, const DenseVector& b);
double Similarity(const Embedding& a, const Embedding& b);

// Remote sentence encoder. One request carries a batch of texts.
class DenseProvider {
 public:
  virtual ~DenseProvider() = default;
  virtual std::vector<DenseVector> Encode(const std::vector<std::string>& texts) = 0;
};

// POSTs {"texts": [...]} to an http:// endpoint and expects
// {"vectors": [[...], ...]}. Any transport failure or non-200 status raises
// ProviderUnavailable.
class HttpDenseProvider final : public DenseProvider {
 public:
  explicit HttpDenseProvider(std::string endpoint, int timeout_seconds = 30);
  std::vector<DenseVector> Encode(const std::vector<std::string>& texts) override;

 private:
  std::string base_;
  std::string path_;
  int timeout_seconds_;
};

// Per-session cache in front of a provider; requests are serialized.
class CachingDenseEncoder {
 public:
  explicit CachingDenseEncoder(std::shared_ptr<DenseProvider> provider);

  std::vector<DenseVector> Encode(std::span<const std::string> texts);
  std::optional<std::size_t> dimension() const;
  std::size_t cache_size() const;

 private:
  std::shared_ptr<DenseProvider> provider_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, DenseVector> cache_;
  std::optional<std::size_t> dimension_;
};

std::vector<DenseVector> EmbedExternal(std::span<const std::string> texts,
                                       CachingDenseEncoder& encoder);

// Builds a provider for an endpoint. Replaceable so tests and embedders of the
// library can route "external-dense" to an in-process model.
using ProviderFactory =
    std::function<std::shared_ptr<DenseProvider>(const std::string& endpoint)>;
ProviderFactory DefaultProviderFactory();

// The representation a session ranks and trains in: a fitted vocabulary for
// the TFIDF kinds, or a cached external encoder for the dense kind.
class EmbeddingSpace {
 public:
  static EmbeddingSpace Fit(std::span<const std::string> corpus,
                            const EmbeddingConfig& config,
                            const ProviderFactory& providers = DefaultProviderFactory());

  const EmbeddingConfig& config() const { return config_; }
  // Feature dimension: vocabulary size or dense dimension.
  std::size_t dimension() const;
  const Vocabulary* vocabulary() const { return vocab_ ? &*vocab_ : nullptr; }

  Embedding Embed(const std::string& text) const;
  std::vector<Embedding> EmbedAll(std::span<const std::string> texts) const;

 private:
  EmbeddingConfig config_;
  std::optional<Vocabulary> vocab_;
  std::shared_ptr<CachingDenseEncoder> encoder_;
};

}  // namespace qfsum
