#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "overgen/alignment.hpp"
#include "overgen/error.hpp"
#include "overgen/label.hpp"
#include "overgen/tokenizer.hpp"

namespace overgen {

using ordered_json = nlohmann::ordered_json;

inline constexpr double kQeScoreMin = 0.0;
inline constexpr double kQeScoreMax = 2.0;

struct SegmentPair {
  std::string id;
  std::string src;
  std::string tgt;
  std::string lang_pair;
  std::optional<OvergenLabel> gold_label;
  std::optional<double> qe_score;
  std::optional<Alignment> alignment;
  std::optional<double> ext_score;
  /// Keys not understood by the loader, kept in file order for re-emission.
  ordered_json extra = ordered_json::object();

  friend bool operator==(const SegmentPair&, const SegmentPair&) = default;
};

struct Corpus {
  std::string name;
  std::vector<SegmentPair> segments;

  std::size_t size() const noexcept { return segments.size(); }
  bool empty() const noexcept { return segments.empty(); }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Alternate key names accepted when a canonical key is missing, e.g.
/// {"tgt": "mt"} for files that call the target column "mt".
using FieldMapping = std::map<std::string, std::string>;

/// `xx-yy`: two lowercase ASCII codes of 2-3 letters joined by a hyphen.
inline bool valid_lang_pair(std::string_view lp) {
  const auto dash = lp.find('-');
  if (dash == std::string_view::npos) return false;
  auto code_ok = [](std::string_view code) {
    if (code.size() < 2 || code.size() > 3) return false;
    for (char c : code) {
      if (c < 'a' || c > 'z') return false;
    }
    return true;
  };
  return code_ok(lp.substr(0, dash)) && code_ok(lp.substr(dash + 1));
}

/// Checks the per-segment invariants. `line` only decorates messages.
inline void validate_segment(const SegmentPair& seg, std::size_t line = 0) {
  auto where = [&] {
    return line ? " (line " + std::to_string(line) + ")" : std::string();
  };
  if (seg.id.empty()) throw ValidationError("segment with empty id" + where());
  if (!valid_lang_pair(seg.lang_pair)) {
    throw ValidationError("segment '" + seg.id + "': lang_pair '" +
                          seg.lang_pair + "' is not of the form xx-yy" + where());
  }
  if (seg.qe_score &&
      !(*seg.qe_score >= kQeScoreMin && *seg.qe_score <= kQeScoreMax)) {
    throw RangeError("segment '" + seg.id + "': qe_score " +
                     std::to_string(*seg.qe_score) + " outside [0, 2]" + where());
  }
  if (seg.ext_score && !std::isfinite(*seg.ext_score)) {
    throw RangeError("segment '" + seg.id + "': ext_score is not finite" + where());
  }
  if (seg.alignment) {
    try {
      seg.alignment->check_bounds(tokenize(seg.src).size(), tokenize(seg.tgt).size());
    } catch (const BoundsError& e) {
      throw BoundsError("segment '" + seg.id + "': " + e.what() + where());
    }
  }
}

inline ordered_json to_json(const SegmentPair& seg) {
  ordered_json j;
  j["id"] = seg.id;
  j["src"] = seg.src;
  j["tgt"] = seg.tgt;
  j["lang_pair"] = seg.lang_pair;
  if (seg.gold_label) j["gold_label"] = std::string(to_string(*seg.gold_label));
  if (seg.qe_score) j["qe_score"] = *seg.qe_score;
  if (seg.ext_score) j["ext_score"] = *seg.ext_score;
  if (seg.alignment) j["alignment"] = serialize_pharaoh(*seg.alignment);
  for (const auto& [key, value] : seg.extra.items()) j[key] = value;
  return j;
}

/// Builds a SegmentPair from one parsed record. Does not check uniqueness.
inline SegmentPair segment_from_json(const ordered_json& j, std::size_t line = 0,
                                     const FieldMapping& mapping = {}) {
  if (!j.is_object()) throw ParseError("record is not a JSON object", line);

  std::unordered_set<std::string> consumed;
  auto lookup = [&](const std::string& key) -> const ordered_json* {
    if (auto it = j.find(key); it != j.end()) {
      consumed.insert(key);
      return &*it;
    }
    if (auto m = mapping.find(key); m != mapping.end()) {
      if (auto it = j.find(m->second); it != j.end()) {
        consumed.insert(m->second);
        return &*it;
      }
    }
    return nullptr;
  };
  auto required_string = [&](const std::string& key) {
    const auto* v = lookup(key);
    if (!v) throw ParseError("missing required key '" + key + "'", line);
    if (!v->is_string()) throw ParseError("key '" + key + "' must be a string", line);
    return v->get<std::string>();
  };
  auto optional_number = [&](const std::string& key) -> std::optional<double> {
    const auto* v = lookup(key);
    if (!v || v->is_null()) return std::nullopt;
    if (!v->is_number()) throw ParseError("key '" + key + "' must be a number", line);
    return v->get<double>();
  };

  SegmentPair seg;
  seg.id = required_string("id");
  seg.src = required_string("src");
  seg.tgt = required_string("tgt");
  seg.lang_pair = required_string("lang_pair");
  if (const auto* v = lookup("gold_label"); v && !v->is_null()) {
    if (!v->is_string()) throw ParseError("key 'gold_label' must be a string", line);
    auto label = label_from_string(v->get<std::string>());
    if (!label) {
      throw ParseError("unknown gold_label '" + v->get<std::string>() + "'", line);
    }
    seg.gold_label = *label;
  }
  seg.qe_score = optional_number("qe_score");
  seg.ext_score = optional_number("ext_score");
  if (const auto* v = lookup("alignment"); v && !v->is_null()) {
    if (!v->is_string()) throw ParseError("key 'alignment' must be a string", line);
    try {
      seg.alignment = parse_pharaoh(v->get<std::string>());
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line);
    }
  }
  for (const auto& [key, value] : j.items()) {
    if (!consumed.count(key)) seg.extra[key] = value;
  }
  validate_segment(seg, line);
  return seg;
}

/// Streams validated segments from a JSONL file, one record per line.
/// Blank lines are skipped; ids must be unique across the stream.
class JsonlReader {
 public:
  explicit JsonlReader(const std::string& path, FieldMapping mapping = {})
      : path_(path), in_(path), mapping_(std::move(mapping)) {
    if (!in_) throw IoError("cannot open for reading", path);
  }

  std::optional<SegmentPair> next() {
    std::string text;
    while (std::getline(in_, text)) {
      ++line_;
      if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
      ordered_json j;
      try {
        j = ordered_json::parse(text);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), line_);
      }
      auto seg = segment_from_json(j, line_, mapping_);
      if (!seen_.insert(seg.id).second) {
        throw ValidationError("duplicate id '" + seg.id + "' at line " +
                              std::to_string(line_));
      }
      return seg;
    }
    if (in_.bad()) throw IoError("read failure", path_);
    return std::nullopt;
  }

  std::size_t line() const noexcept { return line_; }

 private:
  std::string path_;
  std::ifstream in_;
  FieldMapping mapping_;
  std::size_t line_ = 0;
  std::unordered_set<std::string> seen_;
};

inline Corpus load_jsonl(const std::string& path, const FieldMapping& mapping = {}) {
  Corpus corpus;
  corpus.name = path;
  JsonlReader reader(path, mapping);
  while (auto seg = reader.next()) corpus.segments.push_back(std::move(*seg));
  return corpus;
}

namespace detail {

inline std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    cols.emplace_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cols;
}

inline void ensure_unique_ids(const Corpus& corpus) {
  std::unordered_set<std::string> seen;
  for (const auto& seg : corpus.segments) {
    if (!seen.insert(seg.id).second) {
      throw ValidationError("duplicate id '" + seg.id + "'");
    }
  }
}

}  // namespace detail

/// Columns: id, src, tgt, lang_pair, [gold_label], [qe_score]. An empty
/// optional column means the field is absent.
inline Corpus load_tsv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading", path);
  Corpus corpus;
  corpus.name = path;
  std::unordered_set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (line == 1 && has_header) continue;
    if (text.empty()) continue;
    const auto cols = detail::split_tabs(text);
    if (cols.size() < 4 || cols.size() > 6) {
      throw ParseError("expected 4 to 6 tab-separated columns, found " +
                           std::to_string(cols.size()),
                       line);
    }
    SegmentPair seg;
    seg.id = cols[0];
    seg.src = cols[1];
    seg.tgt = cols[2];
    seg.lang_pair = cols[3];
    if (cols.size() > 4 && !cols[4].empty()) {
      auto label = label_from_string(cols[4]);
      if (!label) throw ParseError("unknown gold_label '" + cols[4] + "'", line);
      seg.gold_label = *label;
    }
    if (cols.size() > 5 && !cols[5].empty()) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(cols[5], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cols[5].size()) {
        throw ParseError("qe_score '" + cols[5] + "' is not a number", line);
      }
      seg.qe_score = v;
    }
    validate_segment(seg, line);
    if (!seen.insert(seg.id).second) {
      throw ValidationError("duplicate id '" + seg.id + "' at line " +
                            std::to_string(line));
    }
    corpus.segments.push_back(std::move(seg));
  }
  if (in.bad()) throw IoError("read failure", path);
  return corpus;
}

/// Segments whose ext_score lies in [lo, hi]; others, and unscored
/// segments, are dropped. Order is preserved.
inline Corpus filter_score_band(const Corpus& corpus, double lo, double hi) {
  if (!(lo <= hi)) throw ValidationError("score band has lo > hi");
  Corpus out;
  out.name = corpus.name;
  for (const auto& seg : corpus.segments) {
    if (seg.ext_score && *seg.ext_score >= lo && *seg.ext_score <= hi) {
      out.segments.push_back(seg);
    }
  }
  return out;
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot open for writing", path);
  }

  template <typename Json>
  void write(const Json& record) {
    out_ << record.dump() << '\n';
    if (!out_) throw IoError("write failure", path_);
  }

  void close() {
    out_.close();
    if (!out_) throw IoError("write failure", path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

inline void write_jsonl(const Corpus& corpus, const std::string& path) {
  detail::ensure_unique_ids(corpus);
  JsonlWriter writer(path);
  for (const auto& seg : corpus.segments) writer.write(to_json(seg));
  writer.close();
}

}  // namespace overgen
