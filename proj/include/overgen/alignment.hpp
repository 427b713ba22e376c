#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <span>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "overgen/error.hpp"

namespace overgen {

struct Link {
  std::size_t src = 0;
  std::size_t tgt = 0;
  friend auto operator<=>(const Link&, const Link&) = default;
};

/// A set of (source index, target index) links. Ordered by (src, tgt).
struct Alignment {
  std::set<Link> links;

  Alignment() = default;
  Alignment(std::initializer_list<Link> init) : links(init) {}

  void add(std::size_t src, std::size_t tgt) { links.insert({src, tgt}); }
  bool empty() const noexcept { return links.empty(); }
  std::size_t size() const noexcept { return links.size(); }

  /// Marks every target index that takes part in at least one link.
  std::vector<bool> target_coverage(std::size_t tgt_len) const {
    std::vector<bool> covered(tgt_len, false);
    for (const auto& l : links) {
      if (l.tgt >= tgt_len) {
        throw BoundsError("alignment links target index " +
                          std::to_string(l.tgt) + " but target has " +
                          std::to_string(tgt_len) + " tokens");
      }
      covered[l.tgt] = true;
    }
    return covered;
  }

  /// Throws BoundsError unless every link fits a src_len x tgt_len grid.
  void check_bounds(std::size_t src_len, std::size_t tgt_len) const {
    for (const auto& l : links) {
      if (l.src >= src_len || l.tgt >= tgt_len) {
        throw BoundsError("alignment link " + std::to_string(l.src) + "-" +
                          std::to_string(l.tgt) + " outside " +
                          std::to_string(src_len) + "x" +
                          std::to_string(tgt_len) + " token grid");
      }
    }
  }

  friend bool operator==(const Alignment&, const Alignment&) = default;
};

namespace detail {

inline std::size_t parse_index(std::string_view digits, std::string_view token) {
  std::size_t value = 0;
  const auto* first = digits.data();
  const auto* last = digits.data() + digits.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (digits.empty() || ec != std::errc() || ptr != last) {
    throw ParseError("malformed alignment pair '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace detail

/// Parses whitespace-separated `i-j` pairs. Duplicates collapse.
inline Alignment parse_pharaoh(std::string_view line) {
  Alignment a;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' ||
                                 line[pos] == '\r' || line[pos] == '\n')) {
      ++pos;
    }
    if (pos >= line.size()) break;
    auto end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' &&
           line[end] != '\r' && line[end] != '\n') {
      ++end;
    }
    const auto token = line.substr(pos, end - pos);
    const auto dash = token.find('-');
    if (dash == std::string_view::npos) {
      throw ParseError("malformed alignment pair '" + std::string(token) + "'");
    }
    a.add(detail::parse_index(token.substr(0, dash), token),
          detail::parse_index(token.substr(dash + 1), token));
    pos = end;
  }
  return a;
}

inline std::string serialize_pharaoh(const Alignment& a) {
  std::string out;
  for (const auto& l : a.links) {
    if (!out.empty()) out += ' ';
    out += std::to_string(l.src);
    out += '-';
    out += std::to_string(l.tgt);
  }
  return out;
}

inline void write_pharaoh_file(std::span<const Alignment> alignments, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing", path);
  for (const auto& a : alignments) out << serialize_pharaoh(a) << '\n';
  out.close();
  if (!out) throw IoError("write failure", path);
}

/// One alignment per line, in corpus order. Empty lines are empty alignments.
inline std::vector<Alignment> read_pharaoh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading", path);
  std::vector<Alignment> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    try {
      out.push_back(parse_pharaoh(text));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line);
    }
  }
  if (in.bad()) throw IoError("read failure", path);
  return out;
}

}  // namespace overgen
