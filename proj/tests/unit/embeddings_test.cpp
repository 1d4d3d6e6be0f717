#include "qfsum/embeddings.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qfsum/error.hpp"

namespace qfsum {
namespace {

TEST(Tokenize, WordUnigram) {
  EXPECT_EQ(Tokenize("Deep Learning!", TokenKind::kWordUnigram),
            (std::vector<std::string>{"deep", "learning"}));
  EXPECT_TRUE(Tokenize("", TokenKind::kWordUnigram).empty());
  EXPECT_EQ(Tokenize("GPT-4o, v2", TokenKind::kWordUnigram),
            (std::vector<std::string>{"gpt", "4o", "v2"}));
}

TEST(Tokenize, CharTrigramPadsWholeText) {
  EXPECT_EQ(Tokenize("ab", TokenKind::kCharTrigram), (std::vector<std::string>{"#ab", "ab#"}));
  EXPECT_EQ(Tokenize("a", TokenKind::kCharTrigram), (std::vector<std::string>{"#a#"}));
  EXPECT_TRUE(Tokenize("", TokenKind::kCharTrigram).empty());
  EXPECT_EQ(Tokenize("A b", TokenKind::kCharTrigram),
            (std::vector<std::string>{"#a ", "a b", " b#"}));
}

TEST(Tokenize, CharTrigramCountsCodePoints) {
  // "é" is two bytes but one character.
  EXPECT_EQ(Tokenize("\xC3\xA9t", TokenKind::kCharTrigram),
            (std::vector<std::string>{"#\xC3\xA9t", "\xC3\xA9t#"}));
}

TEST(Vocabulary, CountsSentencesNotOccurrences) {
  const std::vector<std::string> corpus = {"a b", "b c"};
  const auto v = Vocabulary::Fit(corpus, TokenKind::kWordUnigram);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v.corpus_size(), 2u);
  EXPECT_EQ(v.Term(0), "a");
  EXPECT_EQ(v.Term(1), "b");
  EXPECT_EQ(v.Term(2), "c");
  EXPECT_EQ(v.DocumentFrequency(0), 1u);
  EXPECT_EQ(v.DocumentFrequency(1), 2u);
  EXPECT_EQ(v.DocumentFrequency(2), 1u);

  const std::vector<std::string> single = {"x x x"};
  const auto s = Vocabulary::Fit(single, TokenKind::kWordUnigram);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.DocumentFrequency(0), 1u);
}

TEST(Vocabulary, EmptyCorpus) {
  try {
    Vocabulary::Fit(std::vector<std::string>{}, TokenKind::kWordUnigram);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCorpus);
  }
}

TEST(EmbedTfidf, HandComputedWeights) {
  const std::vector<std::string> corpus = {"cat sat", "dog sat"};
  const auto v = Vocabulary::Fit(corpus, TokenKind::kWordUnigram);
  const auto cat = EmbedTfidf("cat sat", v);
  ASSERT_EQ(cat.entries.size(), 2u);
  // idf(cat) = ln(3/2) + 1, idf(sat) = ln(3/3) + 1, then L2-normalized.
  EXPECT_NEAR(cat.entries[0].weight, 0.8148024746671689, 1e-12);
  EXPECT_NEAR(cat.entries[1].weight, 0.5797386715376657, 1e-12);
  EXPECT_GT(cat.entries[0].weight, cat.entries[1].weight);
  const auto dog = EmbedTfidf("dog sat", v);
  EXPECT_NEAR(Similarity(cat, dog), 0.3360969272762574, 1e-9);
}

TEST(EmbedTfidf, OutOfVocabularyIsZeroVector) {
  const std::vector<std::string> corpus = {"cat sat"};
  const auto v = Vocabulary::Fit(corpus, TokenKind::kWordUnigram);
  EXPECT_TRUE(EmbedTfidf("unrelated words", v).empty());
  EXPECT_TRUE(EmbedTfidf("", v).empty());
}

TEST(Similarity, Basics) {
  const std::vector<std::string> corpus = {"cat sat", "dog ran"};
  const auto v = Vocabulary::Fit(corpus, TokenKind::kWordUnigram);
  const auto a = EmbedTfidf("cat sat", v);
  const auto b = EmbedTfidf("dog ran", v);
  EXPECT_NEAR(Similarity(a, a), 1.0, 1e-9);
  EXPECT_EQ(Similarity(a, b), 0.0);
  EXPECT_EQ(Similarity(a, SparseVector{}), 0.0);
}

TEST(Similarity, MixedKindsAndDimensions) {
  const Embedding sparse = SparseVector{{{0, 1.0}}};
  const Embedding dense = DenseVector{{1.0, 0.0}};
  try {
    Similarity(sparse, dense);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  try {
    Similarity(DenseVector{{1.0}}, DenseVector{{1.0, 2.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  EXPECT_NEAR(Similarity(DenseVector{{1.0, 1.0}}, DenseVector{{-1.0, -1.0}}), -1.0, 1e-12);
}

TEST(SmoothedIdf, NonIncreasingInDocumentFrequency) {
  for (std::size_t n = 1; n < 50; ++n) {
    for (std::size_t df = 1; df < n; ++df) {
      EXPECT_GE(SmoothedIdf(df, n), SmoothedIdf(df + 1, n));
    }
  }
}

std::vector<std::string> RandomCorpus(std::mt19937& rng) {
  static const std::vector<std::string> words = {"model", "data", "query", "sentence", "rank",
                                                 "learn", "label", "vector", "space", "cat"};
  std::uniform_int_distribution<std::size_t> n_sentences(1, 20);
  std::uniform_int_distribution<std::size_t> n_words(1, 8);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  std::vector<std::string> out(n_sentences(rng));
  for (auto& s : out) {
    for (std::size_t k = n_words(rng); k > 0; --k) s += words[pick(rng)] + " ";
  }
  return out;
}

TEST(EmbeddingProperties, CorpusSentencesNonZeroUnitNormDeterministic) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto corpus = RandomCorpus(rng);
    for (const auto kind : {TokenKind::kWordUnigram, TokenKind::kCharTrigram}) {
      const auto v = Vocabulary::Fit(corpus, kind);
      for (const auto& s : corpus) {
        const auto e = EmbedTfidf(s, v);
        ASSERT_FALSE(e.empty());
        EXPECT_NEAR(e.Norm(), 1.0, 1e-9);
        for (std::size_t i = 1; i < e.entries.size(); ++i) {
          EXPECT_LT(e.entries[i - 1].index, e.entries[i].index);
        }
        for (const auto& entry : e.entries) EXPECT_NE(entry.weight, 0.0);
        EXPECT_EQ(e, EmbedTfidf(s, v));
        const auto self = Similarity(e, e);
        EXPECT_NEAR(self, 1.0, 1e-9);
      }
      for (std::size_t i = 0; i + 1 < corpus.size(); ++i) {
        const auto a = EmbedTfidf(corpus[i], v);
        const auto b = EmbedTfidf(corpus[i + 1], v);
        EXPECT_DOUBLE_EQ(Similarity(a, b), Similarity(b, a));
      }
    }
  }
}

class FakeProvider : public DenseProvider {
 public:
  std::vector<DenseVector> Encode(const std::vector<std::string>& texts) override {
    ++calls;
    std::vector<DenseVector> out;
    for (const auto& t : texts) {
      if (ragged && !out.empty()) {
        out.push_back(DenseVector{{1.0}});
        continue;
      }
      out.push_back(DenseVector{{static_cast<double>(t.size()), 1.0, t.empty() ? 0.0 : 2.0}});
    }
    return out;
  }
  int calls = 0;
  bool ragged = false;
};

TEST(CachingDenseEncoder, CachesByText) {
  auto provider = std::make_shared<FakeProvider>();
  CachingDenseEncoder encoder(provider);
  EXPECT_TRUE(EmbedExternal(std::vector<std::string>{}, encoder).empty());
  EXPECT_EQ(provider->calls, 0);
  const std::vector<std::string> texts = {"abc", "abc", "de"};
  const auto first = EmbedExternal(texts, encoder);
  ASSERT_EQ(first.size(), 3u);
  EXPECT_EQ(first[0], first[1]);
  EXPECT_EQ(provider->calls, 1);
  EXPECT_EQ(encoder.cache_size(), 2u);
  const auto again = EmbedExternal(texts, encoder);
  EXPECT_EQ(again, first);
  EXPECT_EQ(provider->calls, 1);
  EXPECT_EQ(encoder.dimension(), 3u);
}

TEST(CachingDenseEncoder, InconsistentDimensions) {
  auto provider = std::make_shared<FakeProvider>();
  provider->ragged = true;
  CachingDenseEncoder encoder(provider);
  try {
    EmbedExternal(std::vector<std::string>{"a", "b"}, encoder);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(HttpDenseProvider, UnreachableIsProviderUnavailable) {
  HttpDenseProvider provider("http://127.0.0.1:1/embed", 1);
  try {
    provider.Encode({"hello"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProviderUnavailable);
  }
}

TEST(EmbeddingConfig, EndpointIffDense) {
  EmbeddingConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.provider_endpoint = "http://x";
  EXPECT_THROW(c.Validate(), Error);
  c.kind = EmbeddingKind::kExternalDense;
  EXPECT_NO_THROW(c.Validate());
  c.provider_endpoint.reset();
  EXPECT_THROW(c.Validate(), Error);
}

TEST(EmbeddingSpace, DenseRoutesThroughFactory) {
  auto provider = std::make_shared<FakeProvider>();
  EmbeddingConfig config{EmbeddingKind::kExternalDense, "fake://model"};
  const std::vector<std::string> corpus = {"one", "three"};
  std::string seen_endpoint;
  const auto space = EmbeddingSpace::Fit(corpus, config, [&](const std::string& endpoint) {
    seen_endpoint = endpoint;
    return provider;
  });
  EXPECT_EQ(seen_endpoint, "fake://model");
  EXPECT_EQ(space.dimension(), 3u);
  const auto vectors = space.EmbedAll(corpus);
  ASSERT_EQ(vectors.size(), 2u);
  EXPECT_TRUE(std::holds_alternative<DenseVector>(vectors[0]));
  EXPECT_EQ(provider->calls, 1);
}

}  // namespace
}  // namespace qfsum
