#include "factalign/text.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

namespace factalign {
namespace utf8 {

std::u32string decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      len = 4;
    }
    bool ok = len > 0 && i + len <= text.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
      } else {
        cp = (cp << 6) | (b & 0x3F);
      }
    }
    if (ok) {
      // Reject overlong forms, surrogates and out-of-range values.
      static constexpr std::array<char32_t, 5> kMin = {0, 0, 0x80, 0x800, 0x10000};
      if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) ok = false;
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
    } else {
      out.push_back(cp);
      i += len;
    }
  }
  return out;
}

std::string encode(char32_t c) {
  std::string out;
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
  return out;
}

std::string encode(std::u32string_view scalars) {
  std::string out;
  out.reserve(scalars.size());
  for (char32_t c : scalars) out += encode(c);
  return out;
}

std::size_t length(std::string_view text) { return decode(text).size(); }

std::string substr(std::string_view text, std::size_t start, std::size_t end) {
  const auto scalars = decode(text);
  end = std::min(end, scalars.size());
  if (start >= end) return {};
  return encode(std::u32string_view(scalars).substr(start, end - start));
}

}  // namespace utf8

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
         c == 0xA0 || c == 0x2028 || c == 0x2029 || (c >= 0x2000 && c <= 0x200A) || c == 0x3000;
}

bool is_letter(char32_t c) {
  if ((c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z')) return true;
  if (c < 0xC0) return c == 0xAA || c == 0xB5 || c == 0xBA;
  if (c == 0xD7 || c == 0xF7) return false;
  if (c >= 0x2000 && c <= 0x2BFF) return false;  // punctuation, symbols, arrows
  if (c >= 0x3000 && c <= 0x303F) return false;
  if (c == 0xFFFD) return false;
  return true;
}

bool is_upper(char32_t c) { return fold_case(c) != c; }

char32_t fold_case(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c < 0xC0) return c;
  if (c <= 0xDE && c != 0xD7) return c + 32;
  if (c >= 0x100 && c <= 0x137) return (c % 2 == 0) ? c + 1 : c;
  if (c >= 0x139 && c <= 0x148) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x14A && c <= 0x177) return (c % 2 == 0) ? c + 1 : c;
  if (c == 0x178) return 0xFF;
  if (c >= 0x179 && c <= 0x17E) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c == 0x1E9E) return 0xDF;
  return c;
}

std::string casefold(std::string_view text) {
  auto scalars = utf8::decode(text);
  for (auto& c : scalars) c = fold_case(c);
  return utf8::encode(scalars);
}

std::string trim(std::string_view text) {
  const auto scalars = utf8::decode(text);
  std::size_t b = 0;
  std::size_t e = scalars.size();
  while (b < e && is_space(scalars[b])) ++b;
  while (e > b && is_space(scalars[e - 1])) --e;
  return utf8::encode(std::u32string_view(scalars).substr(b, e - b));
}

std::string normalize_label(std::string_view text) {
  std::u32string out;
  bool pending_space = false;
  for (char32_t c : utf8::decode(text)) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(fold_case(c));
  }
  return utf8::encode(out);
}

std::vector<WordToken> tokenize_words(std::string_view text) {
  const auto s = utf8::decode(text);
  const auto word_char = [](char32_t c) { return is_letter(c) || is_digit(c); };
  std::vector<WordToken> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!word_char(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < s.size()) {
      if (word_char(s[j])) {
        ++j;
      } else if ((s[j] == U'-' || s[j] == U'\'' || s[j] == 0x2019) && j + 1 < s.size() &&
                 word_char(s[j + 1])) {
        j += 2;
      } else {
        break;
      }
    }
    std::u32string_view word(s.data() + i, j - i);
    std::u32string folded(word);
    for (auto& c : folded) c = fold_case(c);
    tokens.push_back({utf8::encode(word), utf8::encode(folded), Span{i, j}});
    i = j;
  }
  return tokens;
}

bool is_stopword(std::string_view folded) {
  static const std::unordered_set<std::string_view> kStopwords = {
      // en
      "a", "an", "the", "and", "or", "but", "if", "when", "unless", "then", "of", "to", "in",
      "on", "at", "by", "for", "with", "from", "as", "is", "are", "was", "were", "be", "been",
      "it", "its", "this", "that", "these", "those", "you", "your", "we", "our", "they", "their",
      "he", "she", "his", "her", "i", "my", "me", "not", "no", "can", "must", "may", "will",
      "shall", "should", "has", "have", "had", "do", "does", "there", "here", "which", "who",
      "also", "all", "any", "each", "such", "into", "about", "than", "so",
      // de
      "der", "die", "das", "den", "dem", "des", "ein", "eine", "einen", "einem", "einer",
      "eines", "und", "oder", "aber", "wenn", "falls", "sofern", "dann", "von", "zu", "zur",
      "zum", "im", "in", "an", "am", "auf", "bei", "mit", "aus", "für", "ist", "sind", "war",
      "wird", "werden", "wurde", "sie", "ihr", "ihre", "ihren", "ihrem", "ihrer", "er", "es",
      "wir", "ich", "nicht", "kein", "keine", "auch", "als", "wie", "nach", "vor", "über",
      "unter", "durch", "sich", "man", "muss", "müssen", "kann", "können", "soll", "sollen",
      "dass", "diese", "dieser", "dieses", "haben", "hat", "sein", "noch", "nur", "bis", "um"};
  return kStopwords.contains(folded);
}

}  // namespace factalign
