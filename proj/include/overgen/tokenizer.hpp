#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "overgen/error.hpp"

namespace overgen {

/// Tokens plus their [start, end) byte offsets into the text they came from.
struct TokenSeq {
  std::vector<std::string> tokens;
  std::vector<std::pair<std::size_t, std::size_t>> offsets;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens[i]; }

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

namespace detail {

struct CodePoint {
  char32_t value;
  std::size_t length;  // bytes consumed
};

// Malformed sequences decode as a single opaque byte so offsets stay exact.
inline CodePoint decode_utf8(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) return {b0, 1};
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {0xFFFD, 1};
  }
  if (pos + len > s.size()) return {0xFFFD, 1};
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[pos + k]);
    if ((b & 0xC0) != 0x80) return {0xFFFD, 1};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, len};
}

inline bool is_space(char32_t c) {
  return c == ' ' || (c >= 0x09 && c <= 0x0D) || c == 0x85 || c == 0xA0 ||
         c == 0x1680 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 ||
         c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

inline bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
           (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
  }
  return (c >= 0xA1 && c <= 0xBF) || c == 0xD7 || c == 0xF7 ||
         (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
         (c >= 0x3001 && c <= 0x303F) || (c >= 0xFF01 && c <= 0xFF0F) ||
         (c >= 0xFF1A && c <= 0xFF20) || (c >= 0xFF3B && c <= 0xFF40) ||
         (c >= 0xFF5B && c <= 0xFF65);
}

// Han ideographs and Japanese kana. Hangul is space-delimited and excluded.
inline bool is_cjk(char32_t c) {
  return (c >= 0x3040 && c <= 0x30FF) || (c >= 0x31F0 && c <= 0x31FF) ||
         (c >= 0x3400 && c <= 0x4DBF) || (c >= 0x4E00 && c <= 0x9FFF) ||
         (c >= 0xF900 && c <= 0xFAFF) || (c >= 0x20000 && c <= 0x2FFFF);
}

}  // namespace detail

/// Splits on whitespace; every punctuation mark and every CJK character
/// becomes a token of its own. Offsets are byte offsets into `text`.
inline TokenSeq tokenize(std::string_view text) {
  TokenSeq seq;
  std::size_t word_start = std::string_view::npos;
  auto flush = [&](std::size_t end) {
    if (word_start == std::string_view::npos) return;
    seq.tokens.emplace_back(text.substr(word_start, end - word_start));
    seq.offsets.emplace_back(word_start, end);
    word_start = std::string_view::npos;
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto cp = detail::decode_utf8(text, pos);
    if (detail::is_space(cp.value)) {
      flush(pos);
    } else if (detail::is_punct(cp.value) || detail::is_cjk(cp.value)) {
      flush(pos);
      seq.tokens.emplace_back(text.substr(pos, cp.length));
      seq.offsets.emplace_back(pos, pos + cp.length);
    } else if (word_start == std::string_view::npos) {
      word_start = pos;
    }
    pos += cp.length;
  }
  flush(text.size());
  return seq;
}

/// Original-text substring covering tokens start..end inclusive.
inline std::string span_text(const TokenSeq& seq, std::size_t start,
                             std::size_t end, std::string_view original) {
  if (start > end || end >= seq.size()) {
    throw BoundsError("span (" + std::to_string(start) + "," +
                      std::to_string(end) + ") outside token sequence of length " +
                      std::to_string(seq.size()));
  }
  const auto from = seq.offsets[start].first;
  const auto to = seq.offsets[end].second;
  if (to > original.size()) {
    throw BoundsError("token offsets exceed the original text");
  }
  return std::string(original.substr(from, to - from));
}

}  // namespace overgen
