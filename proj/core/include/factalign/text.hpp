#pragma once

// Unicode-scalar text helpers shared by every module that works with
// character offsets. Offsets are always counted in scalar values.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace factalign {

/// Half-open character range [start, end) in unicode scalar values.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end > start ? end - start : 0; }
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

namespace utf8 {

/// Decodes UTF-8; malformed sequences decode to U+FFFD one byte at a time.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view scalars);
std::string encode(char32_t scalar);

std::size_t length(std::string_view text);

/// Substring by scalar offsets. Offsets past the end are clamped.
std::string substr(std::string_view text, std::size_t start, std::size_t end);

}  // namespace utf8

bool is_letter(char32_t c);
bool is_digit(char32_t c);
bool is_upper(char32_t c);
bool is_space(char32_t c);

/// Simple one-to-one case folding (Latin, Greek, Cyrillic blocks).
char32_t fold_case(char32_t c);
std::string casefold(std::string_view text);

std::string trim(std::string_view text);

/// Case-fold, trim, and collapse internal whitespace runs to one space.
std::string normalize_label(std::string_view text);

struct WordToken {
  std::string text;    // surface form
  std::string folded;  // case-folded form
  Span span;           // scalar offsets in the tokenized text
};

/// Word tokens: maximal runs of letters and digits, with internal hyphens
/// and apostrophes kept when followed by a letter or digit.
std::vector<WordToken> tokenize_words(std::string_view text);

/// Combined English and German function-word list, case-folded.
bool is_stopword(std::string_view folded);

}  // namespace factalign
