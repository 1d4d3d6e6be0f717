#include "qfsum/text.hpp"

#include <cctype>

namespace qfsum {
namespace {

bool IsWordByte(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

std::size_t CodePointLength(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) return 2;
  if ((lead & 0xF0) == 0xE0) return 3;
  if ((lead & 0xF8) == 0xF0) return 4;
  return 1;
}

std::vector<std::string> WordTokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (IsWordByte(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> CharTrigrams(std::string_view text) {
  std::vector<std::string_view> points;
  std::string padded;
  padded.reserve(text.size() + 2);
  padded.append(kTrigramBoundary);
  for (char ch : text) {
    padded.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  padded.append(kTrigramBoundary);

  std::string_view view = padded;
  for (std::size_t i = 0; i < view.size();) {
    std::size_t len = CodePointLength(static_cast<unsigned char>(view[i]));
    if (i + len > view.size()) len = view.size() - i;
    points.push_back(view.substr(i, len));
    i += len;
  }
  std::vector<std::string> grams;
  if (points.size() < 3) return grams;
  grams.reserve(points.size() - 2);
  for (std::size_t i = 0; i + 2 < points.size(); ++i) {
    std::string g;
    g.append(points[i]).append(points[i + 1]).append(points[i + 2]);
    grams.push_back(std::move(g));
  }
  return grams;
}

}  // namespace

std::vector<std::string> Tokenize(std::string_view text, TokenKind kind) {
  return kind == TokenKind::kWordUnigram ? WordTokens(text) : CharTrigrams(text);
}

std::size_t CountWords(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char ch : text) {
    const bool w = IsWordByte(static_cast<unsigned char>(ch));
    if (w && !in_word) ++count;
    in_word = w;
  }
  return count;
}

std::string_view ToString(TokenKind kind) {
  return kind == TokenKind::kWordUnigram ? "word-unigram" : "char-trigram";
}

}  // namespace qfsum
