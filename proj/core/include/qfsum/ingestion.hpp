#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qfsum {

struct Sentence {
  std::string doc_id;
  std::size_t index = 0;  // 1-based position within the document
  std::string text;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Document {
  std::string doc_id;
  std::string filename;
  std::string raw_text;
  std::vector<Sentence> sentences;

  friend bool operator==(const Document&, const Document&) = default;
};

// Pluggable bytes -> text conversion, selected by file extension.
class TextExtractor {
 public:
  virtual ~TextExtractor() = default;
  virtual bool Claims(std::string_view filename) const = 0;
  virtual std::string Extract(std::string_view filename,
                              std::span<const std::byte> content) const = 0;
};

// Handles .txt/.text/.md files: UTF-8 decode with lossy replacement.
class PlainTextExtractor final : public TextExtractor {
 public:
  bool Claims(std::string_view filename) const override;
  std::string Extract(std::string_view filename,
                      std::span<const std::byte> content) const override;
};

// Runs an external command over a temporary copy of the file and captures its
// standard output. The literal "{input}" in the command template is replaced
// by the (shell-quoted) temporary path; if absent, the path is appended.
class CommandExtractor final : public TextExtractor {
 public:
  CommandExtractor(std::string command_template,
                   std::vector<std::string> extensions = {".pdf"});

  bool Claims(std::string_view filename) const override;
  std::string Extract(std::string_view filename,
                      std::span<const std::byte> content) const override;

  const std::string& command_template() const { return command_template_; }

 private:
  std::string command_template_;
  std::vector<std::string> extensions_;
};

// Ordered list of extractors; the first one claiming a filename wins.
class ExtractorRegistry {
 public:
  // Registry with only the plain-text extractor.
  static ExtractorRegistry Builtin();

  // `config` is "builtin-text" or an external command template used for PDFs
  // (the plain-text extractor stays registered in both cases).
  static ExtractorRegistry FromConfig(const std::string& config);

  void Add(std::shared_ptr<const TextExtractor> extractor);
  const TextExtractor* Find(std::string_view filename) const;

 private:
  std::vector<std::shared_ptr<const TextExtractor>> extractors_;
};

struct SegmenterOptions {
  std::size_t min_words = 2;
};

std::string DecodeUtf8Lossy(std::span<const std::byte> bytes);

std::string ExtractText(std::string_view filename,
                        std::span<const std::byte> content,
                        const ExtractorRegistry& registry);

std::vector<std::string> SegmentSentences(std::string_view text,
                                          const SegmenterOptions& options = {});

// Runs extraction and segmentation. Throws EmptyDocument if no sentence
// survives segmentation.
Document IngestDocument(std::string doc_id, std::string filename,
                        std::span<const std::byte> content,
                        const ExtractorRegistry& registry,
                        const SegmenterOptions& options = {});

inline std::span<const std::byte> AsBytes(std::string_view s) {
  return std::as_bytes(std::span<const char>(s.data(), s.size()));
}

}  // namespace qfsum
