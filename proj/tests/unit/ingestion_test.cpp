#include "qfsum/ingestion.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "qfsum/error.hpp"

namespace qfsum {
namespace {

std::multiset<char> NonSpace(std::string_view s) {
  std::multiset<char> out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.insert(c);
  }
  return out;
}

TEST(ExtractText, PlainTextIsIdentity) {
  const auto registry = ExtractorRegistry::Builtin();
  EXPECT_EQ(ExtractText("a.txt", AsBytes("Hello world."), registry), "Hello world.");
}

TEST(ExtractText, EmptyBytesIsEmptyDocument) {
  const auto registry = ExtractorRegistry::Builtin();
  try {
    ExtractText("a.txt", AsBytes(""), registry);
    FAIL() << "expected EmptyDocument";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDocument);
  }
}

TEST(ExtractText, WhitespaceOnlyIsEmptyDocument) {
  const auto registry = ExtractorRegistry::Builtin();
  try {
    ExtractText("a.md", AsBytes(" \n\t "), registry);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDocument);
  }
}

TEST(ExtractText, UnknownExtensionIsUnsupported) {
  const auto registry = ExtractorRegistry::Builtin();
  try {
    ExtractText("a.pdf", AsBytes("%PDF-1.4"), registry);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedFormat);
  }
}

TEST(ExtractText, ExternalCommandMatchesDirectInvocation) {
  // `tr` stands in for a PDF-to-text tool: the extractor must return exactly
  // what the command prints for the same file.
  const auto registry = ExtractorRegistry::FromConfig("tr a-z A-Z < {input}");
  const std::string bytes = "first sentence here. second one follows.";
  EXPECT_EQ(ExtractText("scan.PDF", AsBytes(bytes), registry),
            "FIRST SENTENCE HERE. SECOND ONE FOLLOWS.");
}

TEST(ExtractText, FailingCommandIsExtractionFailed) {
  const auto registry = ExtractorRegistry::FromConfig("false");
  try {
    ExtractText("x.pdf", AsBytes("data"), registry);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kExtractionFailed);
  }
}

TEST(DecodeUtf8Lossy, ReplacesInvalidBytes) {
  const std::string bad = std::string("ok ") + '\xff' + " \xC3\xA9t\xC3";
  EXPECT_EQ(DecodeUtf8Lossy(AsBytes(bad)), "ok \xEF\xBF\xBD \xC3\xA9t\xEF\xBF\xBD");
}

TEST(DecodeUtf8Lossy, RejectsOverlongAndSurrogates) {
  EXPECT_EQ(DecodeUtf8Lossy(AsBytes("\xC0\xAF")), "\xEF\xBF\xBD\xEF\xBF\xBD");
  EXPECT_EQ(DecodeUtf8Lossy(AsBytes("\xED\xA0\x80")),
            "\xEF\xBF\xBD\xEF\xBF\xBD\xEF\xBF\xBD");
}

TEST(SegmentSentences, TwoDeclaratives) {
  EXPECT_EQ(SegmentSentences("We propose X. It works."),
            (std::vector<std::string>{"We propose X.", "It works."}));
}

TEST(SegmentSentences, Empty) { EXPECT_TRUE(SegmentSentences("").empty()); }

TEST(SegmentSentences, AbbreviationsSuppressSplits) {
  EXPECT_EQ(SegmentSentences("Results (e.g. Fig. 2) improved. See Sec. 3 for details."),
            (std::vector<std::string>{"Results (e.g. Fig. 2) improved.",
                                      "See Sec. 3 for details."}));
}

TEST(SegmentSentences, EtAlAndQuestionMarks) {
  EXPECT_EQ(SegmentSentences("Smith et al. Showed this. Why does it hold? Nobody knows!"),
            (std::vector<std::string>{"Smith et al. Showed this.", "Why does it hold?",
                                      "Nobody knows!"}));
}

TEST(SegmentSentences, DropsShortFragmentsAndNormalizesWhitespace) {
  const auto out = SegmentSentences("Abstract.\n\nThe method\n  is simple. Ok.");
  EXPECT_EQ(out, (std::vector<std::string>{"The method is simple."}));
}

TEST(SegmentSentences, ClosingQuoteStaysWithSentence) {
  EXPECT_EQ(SegmentSentences("He said \"stop here.\" Then we left."),
            (std::vector<std::string>{"He said \"stop here.\"", "Then we left."}));
}

TEST(SegmentSentences, MinWordsConfigurable) {
  EXPECT_EQ(SegmentSentences("It works. We propose X.", {3}),
            (std::vector<std::string>{"We propose X."}));
}

std::string RandomText(std::mt19937& rng) {
  static const std::vector<std::string> pieces = {
      "alpha", "Beta", "gamma.", "Delta!", "e.g.", "Fig.", "2", "et al.", "why?", "(see",
      "Sec.", "3)", "\n", "  ", "Omega.", "x", "No.", "\"quoted.\"", "i.e.", "Zeta"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::uniform_int_distribution<int> len(0, 40);
  std::string out;
  for (int n = len(rng); n > 0; --n) out += pieces[pick(rng)] + " ";
  return out;
}

TEST(SegmentSentencesProperty, IdempotentAndCharacterPreserving) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const auto text = RandomText(rng);
    const auto sentences = SegmentSentences(text);
    std::string joined;
    for (const auto& s : sentences) {
      EXPECT_EQ(SegmentSentences(s), std::vector<std::string>{s}) << "text: " << text;
      EXPECT_EQ(s, std::string(s.data(), s.size()));
      EXPECT_FALSE(s.empty());
      joined += s;
    }
    const auto in = NonSpace(text);
    const auto out = NonSpace(joined);
    EXPECT_TRUE(std::includes(in.begin(), in.end(), out.begin(), out.end()));
    EXPECT_EQ(SegmentSentences(text), sentences);
  }
}

TEST(IngestDocument, IndexesSentencesContiguously) {
  const auto registry = ExtractorRegistry::Builtin();
  const auto doc = IngestDocument("d1", "a.txt", AsBytes("One two three. Four five six."), registry);
  ASSERT_EQ(doc.sentences.size(), 2u);
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    EXPECT_EQ(doc.sentences[i].index, i + 1);
    EXPECT_EQ(doc.sentences[i].doc_id, "d1");
  }
}

TEST(IngestDocument, SameBytesTwiceDifferOnlyInId) {
  const auto registry = ExtractorRegistry::Builtin();
  const std::string text = "Alpha beta gamma. Delta epsilon zeta.";
  auto a = IngestDocument("d1", "a.txt", AsBytes(text), registry);
  auto b = IngestDocument("d2", "a.txt", AsBytes(text), registry);
  EXPECT_NE(a, b);
  b.doc_id = "d1";
  for (auto& s : b.sentences) s.doc_id = "d1";
  EXPECT_EQ(a, b);
}

TEST(IngestDocument, NoSurvivingSentenceIsEmptyDocument) {
  const auto registry = ExtractorRegistry::Builtin();
  try {
    IngestDocument("d1", "a.txt", AsBytes("12"), registry);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDocument);
  }
}

}  // namespace
}  // namespace qfsum
