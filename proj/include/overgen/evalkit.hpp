#pragma once

#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "overgen/corpus.hpp"
#include "overgen/detector.hpp"
#include "overgen/error.hpp"
#include "overgen/label.hpp"

namespace overgen {

inline constexpr std::string_view kPositiveRow = "OG";
inline constexpr std::string_view kNegativeRow = "No error";

/// Precision/recall/F1. A zero denominator yields 0 with its flag set.
struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;

  friend bool operator==(const PRF&, const PRF&) = default;
};

inline PRF prf(std::size_t tp, std::size_t fp, std::size_t fn) {
  PRF r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  if (tp + fp == 0) {
    r.precision_undefined = true;
  } else {
    r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    r.recall_undefined = true;
  } else {
    r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  if (r.precision + r.recall == 0.0) {
    r.f1_undefined = true;
  } else {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

/// counts[gold][predicted].
struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const {
    std::size_t sum = 0;
    for (const auto& row : counts) {
      for (auto c : row) sum += c;
    }
    return sum;
  }

  std::size_t at(std::size_t gold, std::size_t pred) const { return counts.at(gold).at(pred); }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion_matrix(std::span<const OvergenLabel> gold,
                                        std::span<const OvergenLabel> pred) {
  if (gold.size() != pred.size()) {
    throw ValidationError("gold and predicted label lists differ in length (" +
                          std::to_string(gold.size()) + " vs " +
                          std::to_string(pred.size()) + ")");
  }
  if (gold.empty()) throw ValidationError("cannot build a confusion matrix from no items");
  ConfusionMatrix m;
  for (auto l : kAllLabels) m.labels.emplace_back(to_string(l));
  m.counts.assign(kAllLabels.size(), std::vector<std::size_t>(kAllLabels.size(), 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++m.counts[static_cast<std::size_t>(gold[i])][static_cast<std::size_t>(pred[i])];
  }
  return m;
}

/// Two-by-two matrix with rows/columns {"No error", "OG"}.
inline ConfusionMatrix binary_confusion(const std::vector<bool>& gold,
                                        const std::vector<bool>& pred) {
  if (gold.size() != pred.size()) {
    throw ValidationError("gold and predicted flag lists differ in length");
  }
  if (gold.empty()) throw ValidationError("cannot build a confusion matrix from no items");
  ConfusionMatrix m;
  m.labels = {std::string(kNegativeRow), std::string(kPositiveRow)};
  m.counts.assign(2, std::vector<std::size_t>(2, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) ++m.counts[gold[i] ? 1 : 0][pred[i] ? 1 : 0];
  return m;
}

struct BinaryCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  friend bool operator==(const BinaryCounts&, const BinaryCounts&) = default;
};

/// Pools every label except the first ("none" / "No error") into the
/// positive class.
inline BinaryCounts pool_binary(const ConfusionMatrix& m) {
  BinaryCounts c;
  for (std::size_t g = 0; g < m.counts.size(); ++g) {
    for (std::size_t p = 0; p < m.counts[g].size(); ++p) {
      const auto n = m.counts[g][p];
      if (g == 0 && p == 0) c.tn += n;
      else if (g == 0) c.fp += n;
      else if (p == 0) c.fn += n;
      else c.tp += n;
    }
  }
  return c;
}

enum class EvalMode { Binary, PerLabel };

constexpr std::string_view to_string(EvalMode m) {
  return m == EvalMode::Binary ? "binary" : "per_label";
}

struct EvalReport {
  std::string method;  // empty when verdicts mix methods
  EvalMode mode = EvalMode::Binary;
  std::size_t n_segments = 0;
  std::size_t excluded = 0;  // verdicts whose segment has no gold label
  PRF binary;
  std::vector<std::pair<std::string, PRF>> per_label;
  ConfusionMatrix matrix;

  const PRF* row(std::string_view name) const {
    for (const auto& [k, v] : per_label) {
      if (k == name) return &v;
    }
    return nullptr;
  }

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Scores verdicts against the gold labels of `gold_corpus`. Counts are
/// micro-pooled over all evaluated segments.
inline EvalReport evaluate_run(const Corpus& gold_corpus, std::span<const Verdict> verdicts,
                               EvalMode mode) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < gold_corpus.segments.size(); ++i) {
    index.emplace(gold_corpus.segments[i].id, i);
  }
  // Pair up in corpus order so the result cannot depend on verdict order.
  std::vector<std::optional<OvergenLabel>> pred_by_segment(gold_corpus.size());
  std::unordered_set<std::string> seen;
  std::optional<Method> method;
  bool mixed = false;
  EvalReport report;
  report.mode = mode;
  for (const auto& v : verdicts) {
    auto it = index.find(v.segment_id);
    if (it == index.end()) throw ValidationError("verdict for unknown id '" + v.segment_id + "'");
    if (!seen.insert(v.segment_id).second) {
      throw ValidationError("duplicate verdict for id '" + v.segment_id + "'");
    }
    if (method && *method != v.method) mixed = true;
    method = v.method;
    if (!gold_corpus.segments[it->second].gold_label) {
      ++report.excluded;
      continue;
    }
    pred_by_segment[it->second] = v.flagged ? v.label : OvergenLabel::None;
  }
  if (method && !mixed) report.method = std::string(to_string(*method));

  std::vector<OvergenLabel> gold, pred;
  for (std::size_t i = 0; i < gold_corpus.size(); ++i) {
    if (!pred_by_segment[i]) continue;
    gold.push_back(*gold_corpus.segments[i].gold_label);
    pred.push_back(*pred_by_segment[i]);
  }
  report.n_segments = gold.size();
  if (gold.empty()) {
    report.binary = prf(0, 0, 0);
    return report;
  }

  const auto full = confusion_matrix(gold, pred);
  const auto pooled = pool_binary(full);
  report.binary = prf(pooled.tp, pooled.fp, pooled.fn);

  if (mode == EvalMode::Binary) {
    std::vector<bool> g, p;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      g.push_back(is_overgeneration(gold[i]));
      p.push_back(is_overgeneration(pred[i]));
    }
    report.matrix = binary_confusion(g, p);
    report.per_label.emplace_back(std::string(kPositiveRow), report.binary);
    report.per_label.emplace_back(std::string(kNegativeRow),
                                  prf(pooled.tn, pooled.fn, pooled.fp));
  } else {
    report.matrix = full;
    for (std::size_t k = 0; k < kAllLabels.size(); ++k) {
      std::size_t tp = full.counts[k][k], fp = 0, fn = 0;
      for (std::size_t o = 0; o < kAllLabels.size(); ++o) {
        if (o == k) continue;
        fp += full.counts[o][k];
        fn += full.counts[k][o];
      }
      report.per_label.emplace_back(std::string(to_string(kAllLabels[k])), prf(tp, fp, fn));
    }
  }
  return report;
}

inline nlohmann::ordered_json to_json(const PRF& r) {
  return {{"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"tp", r.tp},
          {"fp", r.fp},
          {"fn", r.fn},
          {"precision_undefined", r.precision_undefined},
          {"recall_undefined", r.recall_undefined},
          {"f1_undefined", r.f1_undefined}};
}

inline PRF prf_from_json(const nlohmann::ordered_json& j) {
  PRF r;
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.tp = j.value("tp", std::size_t{0});
  r.fp = j.value("fp", std::size_t{0});
  r.fn = j.value("fn", std::size_t{0});
  r.precision_undefined = j.value("precision_undefined", false);
  r.recall_undefined = j.value("recall_undefined", false);
  r.f1_undefined = j.value("f1_undefined", false);
  return r;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["mode"] = std::string(to_string(r.mode));
  j["n_segments"] = r.n_segments;
  j["binary"] = to_json(r.binary);
  j["per_label"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.per_label) j["per_label"][k] = to_json(v);
  j["matrix"] = {{"labels", r.matrix.labels}, {"counts", r.matrix.counts}};
  j["excluded"] = r.excluded;
  return j;
}

inline EvalReport report_from_json(const nlohmann::ordered_json& j) {
  try {
    EvalReport r;
    r.method = j.value("method", std::string());
    const auto mode = j.value("mode", std::string("binary"));
    if (mode == "binary") r.mode = EvalMode::Binary;
    else if (mode == "per_label") r.mode = EvalMode::PerLabel;
    else throw ParseError("unknown report mode '" + mode + "'");
    r.n_segments = j.at("n_segments").get<std::size_t>();
    r.excluded = j.at("excluded").get<std::size_t>();
    r.binary = prf_from_json(j.at("binary"));
    for (const auto& [k, v] : j.at("per_label").items()) r.per_label.emplace_back(k, prf_from_json(v));
    r.matrix.labels = j.at("matrix").at("labels").get<std::vector<std::string>>();
    r.matrix.counts = j.at("matrix").at("counts").get<std::vector<std::vector<std::size_t>>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
}

enum class ReportFormat { JSON, PlainTable };

namespace detail {

inline std::string fmt2(double v, bool undefined) {
  if (undefined) return "--";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace detail

inline std::string render_report(const EvalReport& r, ReportFormat format) {
  if (format == ReportFormat::JSON) return to_json(r).dump(2) + "\n";

  std::ostringstream out;
  const std::string method = r.method.empty() ? "mixed" : r.method;
  out << detail::pad("Method", 12) << detail::pad("Label", 20) << "Pr / Rec / F1\n";
  bool first = true;
  for (const auto& [label, v] : r.per_label) {
    out << detail::pad(first ? method : "", 12) << detail::pad(label, 20)
        << detail::fmt2(v.precision, v.precision_undefined) << " / "
        << detail::fmt2(v.recall, v.recall_undefined) << " / "
        << detail::fmt2(v.f1, v.f1_undefined) << '\n';
    first = false;
  }
  out << "\nsegments: " << r.n_segments << "  excluded: " << r.excluded << "\n";
  if (!r.matrix.labels.empty()) {
    out << "\nconfusion (rows gold, columns predicted)\n" << detail::pad("", 20);
    for (const auto& l : r.matrix.labels) out << detail::pad(l, 20);
    out << '\n';
    for (std::size_t g = 0; g < r.matrix.labels.size(); ++g) {
      out << detail::pad(r.matrix.labels[g], 20);
      for (auto c : r.matrix.counts[g]) out << detail::pad(std::to_string(c), 20);
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace overgen
