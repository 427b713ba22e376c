#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "overgen/alignment.hpp"
#include "overgen/corpus.hpp"
#include "overgen/error.hpp"
#include "overgen/label.hpp"
#include "overgen/tokenizer.hpp"

namespace overgen {

/// A maximal run of unaligned target tokens, `start..end` inclusive.
struct DetachedSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start + 1; }
  friend auto operator<=>(const DetachedSpan&, const DetachedSpan&) = default;
};

struct DetectorParams {
  std::size_t n = 2;              // minimum run of unaligned target tokens
  double theta_detached = 0.8;    // unaligned share at which a target is Detached
  std::size_t k_partial = 5;      // run length at which a span is PartiallyDetached
  std::size_t ngram_order = 2;
  std::size_t tng_margin = 3;

  void validate() const {
    if (n < 1) throw ValidationError("n must be >= 1");
    if (!(theta_detached > 0.0 && theta_detached <= 1.0)) {
      throw ValidationError("theta_detached must lie in (0, 1]");
    }
    if (k_partial < n) throw ValidationError("k_partial must be >= n");
    if (ngram_order < 1) throw ValidationError("ngram_order must be >= 1");
    if (tng_margin < 1) throw ValidationError("tng_margin must be >= 1");
  }
};

enum class Method { CheckAlign, QE, Ensemble };

constexpr std::string_view to_string(Method m) {
  switch (m) {
    case Method::CheckAlign: return "checkalign";
    case Method::QE: return "qe";
    case Method::Ensemble: return "ensemble";
  }
  return "checkalign";
}

inline std::optional<Method> method_from_string(std::string_view s) {
  for (auto m : {Method::CheckAlign, Method::QE, Method::Ensemble}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

struct Verdict {
  std::string segment_id;
  bool flagged = false;
  OvergenLabel label = OvergenLabel::None;
  std::vector<DetachedSpan> spans;
  double unaligned_fraction = 0.0;
  std::size_t oscillatory_score = 0;
  Method method = Method::CheckAlign;
  /// Flags of the detectors an ensemble verdict was built from.
  std::map<Method, bool> constituents;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// Every maximal run of target indices absent from the alignment's target
/// side whose length is at least `n`, in ascending order.
inline std::vector<DetachedSpan> find_unaligned_spans(std::size_t tgt_len,
                                                      const Alignment& alignment,
                                                      std::size_t n) {
  if (n < 1) throw ValidationError("n must be >= 1");
  const auto covered = alignment.target_coverage(tgt_len);
  std::vector<DetachedSpan> spans;
  std::size_t j = 0;
  while (j < tgt_len) {
    if (covered[j]) {
      ++j;
      continue;
    }
    const auto start = j;
    while (j < tgt_len && !covered[j]) ++j;
    if (j - start >= n) spans.push_back({start, j - 1});
  }
  return spans;
}

struct NgramCount {
  std::vector<std::string> ngram;
  std::size_t count = 0;
};

/// Most frequent n-gram of the given order, overlapping occurrences
/// counted. Ties go to the n-gram that occurs first.
inline NgramCount top_ngram_count(const TokenSeq& tokens, std::size_t order) {
  if (order < 1) throw ValidationError("n-gram order must be >= 1");
  if (tokens.size() < order) return {};
  std::map<std::vector<std::string>, std::pair<std::size_t, std::size_t>> seen;  // count, first pos
  for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
    const auto first = tokens.tokens.begin() + static_cast<std::ptrdiff_t>(i);
    std::vector<std::string> key(first, first + static_cast<std::ptrdiff_t>(order));
    auto [it, inserted] = seen.try_emplace(std::move(key), 0, i);
    ++it->second.first;
  }
  std::size_t best_count = 0;
  std::size_t best_pos = 0;
  for (const auto& [key, stat] : seen) {
    if (stat.first > best_count || (stat.first == best_count && stat.second < best_pos)) {
      best_count = stat.first;
      best_pos = stat.second;
    }
  }
  NgramCount out;
  out.count = best_count;
  out.ngram.assign(tokens.tokens.begin() + static_cast<std::ptrdiff_t>(best_pos),
                   tokens.tokens.begin() + static_cast<std::ptrdiff_t>(best_pos + order));
  return out;
}

struct OscillationResult {
  bool flagged = false;
  std::size_t score = 0;
};

/// Repetition in the target measured against repetition already in the
/// source: score = max(0, TNG(tgt) - TNG(src)).
inline OscillationResult detect_oscillatory(const TokenSeq& src, const TokenSeq& tgt,
                                            const DetectorParams& params) {
  const auto t = top_ngram_count(tgt, params.ngram_order).count;
  const auto s = top_ngram_count(src, params.ngram_order).count;
  OscillationResult r;
  r.score = t > s ? t - s : 0;
  r.flagged = r.score >= params.tng_margin;
  return r;
}

inline std::size_t total_span_length(const std::vector<DetachedSpan>& spans) {
  std::size_t total = 0;
  for (const auto& s : spans) total += s.length();
  return total;
}

/// Priority: oscillatory, then Detached by unaligned share, then
/// PartiallyDetached by longest span, then MinimallyDetached.
inline OvergenLabel classify(std::size_t tgt_len, const std::vector<DetachedSpan>& spans,
                             bool oscillatory, const DetectorParams& params) {
  if (tgt_len == 0 && !spans.empty()) {
    throw ValidationError("spans reported for an empty target");
  }
  for (const auto& s : spans) {
    if (s.start > s.end || s.end >= tgt_len) {
      throw BoundsError("span (" + std::to_string(s.start) + "," + std::to_string(s.end) +
                        ") outside target of length " + std::to_string(tgt_len));
    }
  }
  if (oscillatory) return OvergenLabel::Oscillatory;
  if (spans.empty()) return OvergenLabel::None;
  const double share =
      static_cast<double>(total_span_length(spans)) / static_cast<double>(tgt_len);
  if (share >= params.theta_detached) return OvergenLabel::Detached;
  for (const auto& s : spans) {
    if (s.length() >= params.k_partial) return OvergenLabel::PartiallyDetached;
  }
  return OvergenLabel::MinimallyDetached;
}

/// Alignment-gap detection on one segment. `alignment` indexes the
/// tokenizations of `pair.src` and `pair.tgt`.
inline Verdict checkalign_detect(const SegmentPair& pair, const Alignment& alignment,
                                 const DetectorParams& params) {
  params.validate();
  const auto src = tokenize(pair.src);
  const auto tgt = tokenize(pair.tgt);
  alignment.check_bounds(src.size(), tgt.size());

  Verdict v;
  v.segment_id = pair.id;
  v.method = Method::CheckAlign;
  v.spans = find_unaligned_spans(tgt.size(), alignment, params.n);
  const auto osc = detect_oscillatory(src, tgt, params);
  v.oscillatory_score = osc.score;
  if (!tgt.empty()) {
    const auto covered = alignment.target_coverage(tgt.size());
    const auto unaligned = static_cast<std::size_t>(std::count(covered.begin(), covered.end(), false));
    v.unaligned_fraction = static_cast<double>(unaligned) / static_cast<double>(tgt.size());
  }
  v.label = classify(tgt.size(), v.spans, osc.flagged, params);
  v.flagged = is_overgeneration(v.label);
  return v;
}

inline nlohmann::ordered_json to_json(const Verdict& v) {
  nlohmann::ordered_json j;
  j["id"] = v.segment_id;
  j["flagged"] = v.flagged;
  j["label"] = std::string(to_string(v.label));
  j["spans"] = nlohmann::ordered_json::array();
  for (const auto& s : v.spans) j["spans"].push_back({{"start", s.start}, {"end", s.end}});
  j["unaligned_fraction"] = v.unaligned_fraction;
  j["oscillatory_score"] = v.oscillatory_score;
  j["method"] = std::string(to_string(v.method));
  if (!v.constituents.empty()) {
    nlohmann::ordered_json c = nlohmann::ordered_json::object();
    for (const auto& [m, f] : v.constituents) c[std::string(to_string(m))] = f;
    j["constituents"] = c;
  }
  return j;
}

inline Verdict verdict_from_json(const nlohmann::ordered_json& j, std::size_t line = 0) {
  try {
    Verdict v;
    v.segment_id = j.at("id").get<std::string>();
    v.flagged = j.at("flagged").get<bool>();
    const auto label = label_from_string(j.at("label").get<std::string>());
    if (!label) throw ParseError("unknown label '" + j.at("label").get<std::string>() + "'", line);
    v.label = *label;
    for (const auto& s : j.at("spans")) {
      v.spans.push_back({s.at("start").get<std::size_t>(), s.at("end").get<std::size_t>()});
    }
    v.unaligned_fraction = j.at("unaligned_fraction").get<double>();
    v.oscillatory_score = j.at("oscillatory_score").get<std::size_t>();
    const auto method = method_from_string(j.at("method").get<std::string>());
    if (!method) throw ParseError("unknown method", line);
    v.method = *method;
    if (auto it = j.find("constituents"); it != j.end()) {
      for (const auto& [k, f] : it->items()) {
        const auto m = method_from_string(k);
        if (!m) throw ParseError("unknown constituent method '" + k + "'", line);
        v.constituents[*m] = f.get<bool>();
      }
    }
    if (v.flagged != is_overgeneration(v.label)) {
      throw ParseError("flagged disagrees with label", line);
    }
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed verdict: ") + e.what(), line);
  }
}

}  // namespace overgen
