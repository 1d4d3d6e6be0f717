#include "qfsum/ingestion.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "qfsum/error.hpp"
#include "qfsum/text.hpp"

namespace qfsum {
namespace {

constexpr std::string_view kReplacement = "\xEF\xBF\xBD";

std::string LowerExtension(std::string_view filename) {
  const auto dot = filename.rfind('.');
  if (dot == std::string_view::npos) return {};
  std::string ext(filename.substr(dot));
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool IsClosing(char c) {
  return c == ')' || c == ']' || c == '"' || c == '\'';
}

bool IsOpening(char c) {
  return c == '(' || c == '[' || c == '"' || c == '\'';
}

// Words whose trailing period never ends a sentence.
constexpr std::array<std::string_view, 9> kAbbreviations = {
    "e.g.", "i.e.", "fig.", "sec.", "eq.", "dr.", "vs.", "no.", "pp."};

std::string LowerAscii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// `dot` indexes a '.'; returns true when the word ending there is a listed
// abbreviation.
bool EndsAbbreviation(std::string_view text, std::size_t dot) {
  std::size_t start = dot;
  while (start > 0 && !IsSpace(text[start - 1]) && !IsOpening(text[start - 1])) {
    --start;
  }
  const std::string word = LowerAscii(text.substr(start, dot - start + 1));
  if (std::find(kAbbreviations.begin(), kAbbreviations.end(), word) !=
      kAbbreviations.end()) {
    return true;
  }
  if (word == "al.") {
    std::size_t end = start;
    while (end > 0 && IsSpace(text[end - 1])) --end;
    std::size_t prev = end;
    while (prev > 0 && !IsSpace(text[prev - 1]) && !IsOpening(text[prev - 1])) {
      --prev;
    }
    return LowerAscii(text.substr(prev, end - prev)) == "et";
  }
  return false;
}

std::string NormalizeWhitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (IsSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string ShellQuote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

class TempFile {
 public:
  explicit TempFile(const std::string& suffix) {
    const auto dir = std::filesystem::temp_directory_path();
    std::string pattern = (dir / "qfsum-XXXXXX").string() + suffix;
    std::vector<char> buf(pattern.begin(), pattern.end());
    buf.push_back('\0');
    fd_ = ::mkstemps(buf.data(), static_cast<int>(suffix.size()));
    if (fd_ < 0) {
      throw Error(ErrorCode::kExtractionFailed, "cannot create temporary file");
    }
    path_ = buf.data();
  }
  ~TempFile() {
    if (fd_ >= 0) ::close(fd_);
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;

  void Write(std::span<const std::byte> bytes) {
    const auto* p = reinterpret_cast<const char*>(bytes.data());
    std::size_t left = bytes.size();
    while (left > 0) {
      const auto n = ::write(fd_, p, left);
      if (n <= 0) {
        throw Error(ErrorCode::kExtractionFailed, "cannot write temporary file");
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
    ::close(fd_);
    fd_ = -1;
  }

  const std::string& path() const { return path_; }

 private:
  int fd_ = -1;
  std::string path_;
};

}  // namespace

std::string DecodeUtf8Lossy(std::span<const std::byte> bytes) {
  std::string out;
  out.reserve(bytes.size());
  const std::size_t n = bytes.size();
  auto at = [&](std::size_t i) { return static_cast<unsigned char>(bytes[i]); };
  std::size_t i = 0;
  while (i < n) {
    const unsigned char lead = at(i);
    if (lead < 0x80) {
      out.push_back(static_cast<char>(lead));
      ++i;
      continue;
    }
    std::size_t len = 0;
    unsigned char lo = 0x80;
    unsigned char hi = 0xBF;
    if (lead >= 0xC2 && lead <= 0xDF) {
      len = 2;
    } else if (lead >= 0xE0 && lead <= 0xEF) {
      len = 3;
      if (lead == 0xE0) lo = 0xA0;
      if (lead == 0xED) hi = 0x9F;
    } else if (lead >= 0xF0 && lead <= 0xF4) {
      len = 4;
      if (lead == 0xF0) lo = 0x90;
      if (lead == 0xF4) hi = 0x8F;
    }
    bool valid = len > 0 && i + len <= n;
    if (valid) {
      for (std::size_t k = 1; k < len; ++k) {
        const unsigned char c = at(i + k);
        const unsigned char min = k == 1 ? lo : 0x80;
        const unsigned char max = k == 1 ? hi : 0xBF;
        if (c < min || c > max) {
          valid = false;
          break;
        }
      }
    }
    if (valid) {
      out.append(reinterpret_cast<const char*>(bytes.data() + i), len);
      i += len;
    } else {
      out.append(kReplacement);
      ++i;
    }
  }
  return out;
}

bool PlainTextExtractor::Claims(std::string_view filename) const {
  const auto ext = LowerExtension(filename);
  return ext == ".txt" || ext == ".text" || ext == ".md";
}

std::string PlainTextExtractor::Extract(std::string_view /*filename*/,
                                        std::span<const std::byte> content) const {
  return DecodeUtf8Lossy(content);
}

CommandExtractor::CommandExtractor(std::string command_template,
                                   std::vector<std::string> extensions)
    : command_template_(std::move(command_template)),
      extensions_(std::move(extensions)) {
  for (auto& ext : extensions_) ext = LowerAscii(ext);
}

bool CommandExtractor::Claims(std::string_view filename) const {
  const auto ext = LowerExtension(filename);
  return std::find(extensions_.begin(), extensions_.end(), ext) != extensions_.end();
}

std::string CommandExtractor::Extract(std::string_view filename,
                                      std::span<const std::byte> content) const {
  TempFile input(LowerExtension(filename));
  input.Write(content);

  std::string command = command_template_;
  const std::string quoted = ShellQuote(input.path());
  if (const auto pos = command.find("{input}"); pos != std::string::npos) {
    command.replace(pos, 7, quoted);
  } else {
    command += " " + quoted;
  }
  command += " 2>/dev/null";

  FILE* pipe = ::popen(command.c_str(), "r");
  if (pipe == nullptr) {
    throw Error(ErrorCode::kExtractionFailed, "cannot start extractor: " + command_template_);
  }
  std::string output;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    output.append(buf.data(), got);
  }
  const int status = ::pclose(pipe);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error(ErrorCode::kExtractionFailed,
                "extractor exited with failure for " + std::string(filename));
  }
  return DecodeUtf8Lossy(AsBytes(output));
}

ExtractorRegistry ExtractorRegistry::Builtin() {
  ExtractorRegistry registry;
  registry.Add(std::make_shared<PlainTextExtractor>());
  return registry;
}

ExtractorRegistry ExtractorRegistry::FromConfig(const std::string& config) {
  ExtractorRegistry registry = Builtin();
  if (!config.empty() && config != "builtin-text") {
    registry.Add(std::make_shared<CommandExtractor>(config));
  }
  return registry;
}

void ExtractorRegistry::Add(std::shared_ptr<const TextExtractor> extractor) {
  extractors_.push_back(std::move(extractor));
}

const TextExtractor* ExtractorRegistry::Find(std::string_view filename) const {
  for (const auto& e : extractors_) {
    if (e->Claims(filename)) return e.get();
  }
  return nullptr;
}

std::string ExtractText(std::string_view filename, std::span<const std::byte> content,
                        const ExtractorRegistry& registry) {
  const TextExtractor* extractor = registry.Find(filename);
  if (extractor == nullptr) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "no extractor for file: " + std::string(filename));
  }
  if (content.empty()) {
    throw Error(ErrorCode::kEmptyDocument, "empty file: " + std::string(filename));
  }
  std::string text;
  try {
    text = extractor->Extract(filename, content);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kExtractionFailed, e.what());
  }
  if (std::all_of(text.begin(), text.end(), IsSpace)) {
    throw Error(ErrorCode::kEmptyDocument,
                "no text extracted from: " + std::string(filename));
  }
  return text;
}

std::vector<std::string> SegmentSentences(std::string_view text,
                                          const SegmenterOptions& options) {
  std::vector<std::string> out;
  auto emit = [&](std::string_view piece) {
    std::string sentence = NormalizeWhitespace(piece);
    if (!sentence.empty() && CountWords(sentence) >= options.min_words) {
      out.push_back(std::move(sentence));
    }
  };

  const std::size_t n = text.size();
  std::size_t start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (j < n && IsClosing(text[j])) ++j;
    if (j >= n || !IsSpace(text[j])) continue;
    std::size_t k = j;
    while (k < n && IsSpace(text[k])) ++k;
    if (k >= n) continue;
    const auto next = static_cast<unsigned char>(text[k]);
    if (!std::isupper(next) && !std::isdigit(next)) continue;
    if (c == '.' && EndsAbbreviation(text, i)) continue;
    emit(text.substr(start, j - start));
    start = k;
    i = k - 1;
  }
  if (start < n) emit(text.substr(start));
  return out;
}

Document IngestDocument(std::string doc_id, std::string filename,
                        std::span<const std::byte> content,
                        const ExtractorRegistry& registry,
                        const SegmenterOptions& options) {
  Document doc;
  doc.raw_text = ExtractText(filename, content, registry);
  const auto pieces = SegmentSentences(doc.raw_text, options);
  if (pieces.empty()) {
    throw Error(ErrorCode::kEmptyDocument, "no sentences found in: " + filename);
  }
  doc.sentences.reserve(pieces.size());
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    doc.sentences.push_back(Sentence{doc_id, i + 1, pieces[i]});
  }
  doc.doc_id = std::move(doc_id);
  doc.filename = std::move(filename);
  return doc;
}

}  // namespace qfsum
