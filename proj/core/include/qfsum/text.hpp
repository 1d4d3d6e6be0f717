#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace qfsum {

enum class TokenKind { kWordUnigram, kCharTrigram };

// Boundary marker padded around the whole text before taking trigrams.
inline constexpr std::string_view kTrigramBoundary = "#";

// word-unigram: lowercase maximal alphanumeric runs. Bytes >= 0x80 (UTF-8
// multibyte sequences) count as alphanumeric so non-ASCII words stay whole.
// char-trigram: every run of 3 consecutive code points of "#" + lower(text) + "#".
std::vector<std::string> Tokenize(std::string_view text, TokenKind kind);

std::size_t CountWords(std::string_view text);

std::string_view ToString(TokenKind kind);

}  // namespace qfsum
