#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "overgen/corpus.hpp"
#include "overgen/detector.hpp"
#include "overgen/error.hpp"
#include "overgen/evalkit.hpp"

namespace overgen {

/// Which end of the [0, 2] QE scale indicates an overgeneration.
enum class ScoreDirection { LowScoreIsOvergen, HighScoreIsOvergen };

constexpr std::string_view to_string(ScoreDirection d) {
  return d == ScoreDirection::LowScoreIsOvergen ? "low" : "high";
}

inline std::optional<ScoreDirection> direction_from_string(std::string_view s) {
  if (s == "low") return ScoreDirection::LowScoreIsOvergen;
  if (s == "high") return ScoreDirection::HighScoreIsOvergen;
  return std::nullopt;
}

inline void check_qe_score(double score) {
  if (!(score >= kQeScoreMin && score <= kQeScoreMax)) {
    throw RangeError("QE score " + std::to_string(score) + " outside [0, 2]");
  }
}

/// Inclusive at the threshold in both directions.
inline bool flag_from_score(double score, double threshold, ScoreDirection direction) {
  check_qe_score(score);
  return direction == ScoreDirection::LowScoreIsOvergen ? score <= threshold
                                                        : score >= threshold;
}

struct DevPoint {
  double score = 0.0;
  bool is_overgen = false;
};

struct CalibrationResult {
  double threshold = 0.0;
  double f1_at_threshold = 0.0;
  ScoreDirection direction = ScoreDirection::LowScoreIsOvergen;
  std::size_t support = 0;

  friend bool operator==(const CalibrationResult&, const CalibrationResult&) = default;
};

/// Picks the threshold maximizing positive-class F1 on `dev`. Candidates
/// are the midpoints between consecutive distinct scores plus the lowest
/// and highest score. Equal F1 goes to the candidate flagging fewer items.
inline CalibrationResult calibrate_threshold(std::span<const DevPoint> dev,
                                             ScoreDirection direction) {
  std::size_t positives = 0;
  for (const auto& p : dev) {
    check_qe_score(p.score);
    if (p.is_overgen) ++positives;
  }
  if (positives == 0 || positives == dev.size()) {
    throw ValidationError("calibration needs both overgeneration and clean examples");
  }

  // Sorted so that the flagged set is always a prefix.
  std::vector<DevPoint> sorted(dev.begin(), dev.end());
  const bool low = direction == ScoreDirection::LowScoreIsOvergen;
  std::sort(sorted.begin(), sorted.end(), [low](const DevPoint& a, const DevPoint& b) {
    return low ? a.score < b.score : a.score > b.score;
  });
  std::vector<std::size_t> prefix_pos(sorted.size() + 1, 0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    prefix_pos[i + 1] = prefix_pos[i] + (sorted[i].is_overgen ? 1 : 0);
  }

  std::vector<double> candidates;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].score != sorted[i - 1].score) {
      candidates.push_back(sorted[i - 1].score + (sorted[i].score - sorted[i - 1].score) / 2.0);
    }
  }
  candidates.push_back(sorted.front().score);
  candidates.push_back(sorted.back().score);

  std::optional<CalibrationResult> best;
  std::size_t best_flagged = 0;
  for (double t : candidates) {
    // Number flagged is the length of the prefix that passes the threshold.
    const auto it = std::partition_point(sorted.begin(), sorted.end(), [&](const DevPoint& p) {
      return flag_from_score(p.score, t, direction);
    });
    const auto flagged = static_cast<std::size_t>(it - sorted.begin());
    const auto tp = prefix_pos[flagged];
    const auto f1 = prf(tp, flagged - tp, positives - tp).f1;
    if (!best || f1 > best->f1_at_threshold ||
        (f1 == best->f1_at_threshold && flagged < best_flagged)) {
      best = CalibrationResult{t, f1, direction, dev.size()};
      best_flagged = flagged;
    }
  }
  return *best;
}

inline nlohmann::ordered_json to_json(const CalibrationResult& c) {
  return {{"threshold", c.threshold},
          {"direction", std::string(to_string(c.direction))},
          {"f1", c.f1_at_threshold},
          {"support", c.support}};
}

inline CalibrationResult calibration_from_json(const nlohmann::ordered_json& j) {
  try {
    CalibrationResult c;
    c.threshold = j.at("threshold").get<double>();
    const auto d = direction_from_string(j.at("direction").get<std::string>());
    if (!d) throw ParseError("direction must be 'low' or 'high'");
    c.direction = *d;
    c.f1_at_threshold = j.at("f1").get<double>();
    c.support = j.at("support").get<std::size_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed calibration: ") + e.what());
  }
}

/// QE carries no category information; a flagged verdict is labelled
/// Detached and has no spans.
inline Verdict qe_detect(std::string segment_id, double score, double threshold,
                         ScoreDirection direction) {
  Verdict v;
  v.segment_id = std::move(segment_id);
  v.method = Method::QE;
  v.flagged = flag_from_score(score, threshold, direction);
  v.label = v.flagged ? OvergenLabel::Detached : OvergenLabel::None;
  return v;
}

namespace detail {

inline void record_constituents(const Verdict& v, std::map<Method, bool>& out) {
  if (v.method == Method::Ensemble) {
    for (const auto& [m, f] : v.constituents) out[m] = out[m] || f;
  } else {
    out[v.method] = out[v.method] || v.flagged;
  }
}

}  // namespace detail

/// Flags when either verdict flags. Label, fraction and span detail come
/// from the CheckAlign verdict whenever it flags.
inline Verdict ensemble_or(const Verdict& a, const Verdict& b) {
  if (a.segment_id != b.segment_id) {
    throw ValidationError("cannot combine verdicts for '" + a.segment_id + "' and '" +
                          b.segment_id + "'");
  }
  const bool b_preferred = b.method == Method::CheckAlign && a.method != Method::CheckAlign;
  const Verdict& first = b_preferred ? b : a;
  const Verdict& second = b_preferred ? a : b;
  const Verdict& source = first.flagged || !second.flagged ? first : second;

  Verdict v;
  v.segment_id = a.segment_id;
  v.method = Method::Ensemble;
  v.flagged = a.flagged || b.flagged;
  v.label = source.label;
  v.spans = a.spans;
  v.spans.insert(v.spans.end(), b.spans.begin(), b.spans.end());
  std::sort(v.spans.begin(), v.spans.end());
  v.spans.erase(std::unique(v.spans.begin(), v.spans.end()), v.spans.end());
  const Verdict& detail_source = a.method == Method::CheckAlign ? a
                                 : b.method == Method::CheckAlign ? b
                                                                  : source;
  v.unaligned_fraction = detail_source.unaligned_fraction;
  v.oscillatory_score = std::max(a.oscillatory_score, b.oscillatory_score);
  detail::record_constituents(a, v.constituents);
  detail::record_constituents(b, v.constituents);
  return v;
}

/// Reads `id,score` lines. A first line whose score column is not numeric
/// is treated as a header.
inline std::vector<std::pair<std::string, double>> load_qe_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading", path);
  std::vector<std::pair<std::string, double>> rows;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    const auto comma = text.rfind(',');
    if (comma == std::string::npos) throw ParseError("expected 'id,score'", line);
    const auto id = text.substr(0, comma);
    const auto field = text.substr(comma + 1);
    std::size_t used = 0;
    double score = 0.0;
    try {
      score = std::stod(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != field.size() || field.empty()) {
      if (line == 1) continue;
      throw ParseError("score '" + field + "' is not a number", line);
    }
    if (id.empty()) throw ParseError("empty id", line);
    if (!(score >= kQeScoreMin && score <= kQeScoreMax)) {
      throw RangeError("segment '" + id + "': qe_score " + field + " outside [0, 2]");
    }
    rows.emplace_back(id, score);
  }
  return rows;
}

}  // namespace overgen
