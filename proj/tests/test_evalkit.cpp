#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "overgen/evalkit.hpp"

namespace overgen {
namespace {

using L = OvergenLabel;

TEST(ConfusionMatrixTest, IdentityIsDiagonal) {
  const std::vector<L> labels = {L::None, L::Detached, L::Oscillatory, L::None};
  const auto m = confusion_matrix(labels, labels);
  EXPECT_EQ(m.total(), 4u);
  EXPECT_EQ(m.labels.size(), 5u);
  for (std::size_t g = 0; g < 5; ++g) {
    for (std::size_t p = 0; p < 5; ++p) {
      if (g != p) { EXPECT_EQ(m.at(g, p), 0u); }
    }
  }
  EXPECT_EQ(m.at(0, 0), 2u);
}

TEST(ConfusionMatrixTest, AllWrongSingleCell) {
  const std::vector<L> gold(7, L::None), pred(7, L::Detached);
  const auto m = confusion_matrix(gold, pred);
  EXPECT_EQ(m.at(0, static_cast<std::size_t>(L::Detached)), 7u);
  EXPECT_EQ(m.total(), 7u);
}

TEST(ConfusionMatrixTest, BinaryCollapseOfReportedCounts) {
  // 197 segments, 22 gold overgenerations, 17 caught, 59 false alarms.
  std::vector<bool> gold, pred;
  auto add = [&](bool g, bool p, int times) {
    for (int i = 0; i < times; ++i) gold.push_back(g), pred.push_back(p);
  };
  add(true, true, 17);
  add(false, true, 59);
  add(true, false, 5);
  add(false, false, 116);
  const auto m = binary_confusion(gold, pred);
  EXPECT_EQ(m.labels, (std::vector<std::string>{"No error", "OG"}));
  EXPECT_EQ(m.at(1, 1), 17u);
  EXPECT_EQ(m.at(0, 1), 59u);
  EXPECT_EQ(m.at(1, 0), 5u);
  EXPECT_EQ(m.at(0, 0), 116u);
  EXPECT_EQ(m.total(), 197u);
  EXPECT_EQ(pool_binary(m), (BinaryCounts{17, 59, 5, 116}));
}

TEST(ConfusionMatrixTest, Errors) {
  const std::vector<L> a = {L::None}, b = {L::None, L::None}, none;
  EXPECT_THROW(confusion_matrix(a, b), ValidationError);
  EXPECT_THROW(confusion_matrix(none, none), ValidationError);
}

TEST(PrfTest, ReportedMinimallyDetachedRow) {
  const auto r = prf(17, 59, 5);
  EXPECT_NEAR(r.precision, 17.0 / 76.0, 1e-15);
  EXPECT_NEAR(r.recall, 17.0 / 22.0, 1e-15);
  EXPECT_NEAR(r.f1, 34.0 / 98.0, 1e-15);
  EXPECT_NEAR(r.precision, 0.224, 5e-4);
  EXPECT_NEAR(r.recall, 0.773, 5e-4);
  EXPECT_NEAR(r.f1, 0.347, 5e-4);
}

TEST(PrfTest, Perfect) {
  const auto r = prf(10, 0, 0);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.f1, 1.0);
}

TEST(PrfTest, Degenerate) {
  const auto r = prf(0, 0, 7);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_TRUE(r.precision_undefined);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_FALSE(r.recall_undefined);
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_TRUE(r.f1_undefined);
}

TEST(PrfPropertyTest, MatchesReimplementation) {
  std::mt19937_64 rng(21);
  for (int iter = 0; iter < 10000; ++iter) {
    const std::size_t tp = rng() % 1000, fp = rng() % 1000, fn = rng() % 1000;
    const auto r = prf(tp, fp, fn);
    const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    const double rc = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    const double f = tp ? 2.0 * double(tp) / double(2 * tp + fp + fn) : 0.0;
    ASSERT_NEAR(r.precision, p, 1e-12);
    ASSERT_NEAR(r.recall, rc, 1e-12);
    ASSERT_NEAR(r.f1, f, 1e-12);
    if (r.precision + r.recall > 0) {
      ASSERT_NEAR(r.f1, 2 * r.precision * r.recall / (r.precision + r.recall), 1e-12);
    }
  }
}

Corpus gold_corpus(const std::vector<std::optional<L>>& labels) {
  Corpus c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    SegmentPair s;
    s.id = "s" + std::to_string(i);
    s.src = "a";
    s.tgt = "b";
    s.lang_pair = "en-it";
    s.gold_label = labels[i];
    c.segments.push_back(s);
  }
  return c;
}

Verdict verdict(std::string id, L label) {
  Verdict v;
  v.segment_id = std::move(id);
  v.label = label;
  v.flagged = label != L::None;
  return v;
}

TEST(EvaluateRunTest, PerfectVerdicts) {
  const std::vector<std::optional<L>> labels = {L::None, L::Detached, L::Oscillatory,
                                                L::PartiallyDetached, L::MinimallyDetached};
  const auto corpus = gold_corpus(labels);
  std::vector<Verdict> vs;
  for (std::size_t i = 0; i < labels.size(); ++i) vs.push_back(verdict("s" + std::to_string(i), *labels[i]));
  for (auto mode : {EvalMode::Binary, EvalMode::PerLabel}) {
    const auto r = evaluate_run(corpus, vs, mode);
    EXPECT_EQ(r.binary.f1, 1.0);
    for (const auto& [k, v] : r.per_label) EXPECT_EQ(v.f1, 1.0) << k;
  }
}

TEST(EvaluateRunTest, ReportedCountsReconstructed) {
  std::vector<std::optional<L>> labels;
  std::vector<L> preds;
  auto add = [&](L g, L p, int times) {
    for (int i = 0; i < times; ++i) labels.push_back(g), preds.push_back(p);
  };
  add(L::MinimallyDetached, L::MinimallyDetached, 17);
  add(L::None, L::MinimallyDetached, 59);
  add(L::MinimallyDetached, L::None, 5);
  add(L::None, L::None, 116);
  const auto corpus = gold_corpus(labels);
  std::vector<Verdict> vs;
  for (std::size_t i = 0; i < preds.size(); ++i) vs.push_back(verdict("s" + std::to_string(i), preds[i]));
  vs.front().method = Method::CheckAlign;
  const auto r = evaluate_run(corpus, vs, EvalMode::Binary);
  EXPECT_EQ(r.n_segments, 197u);
  EXPECT_EQ(r.method, "checkalign");
  EXPECT_NEAR(r.binary.precision, 0.224, 5e-4);
  EXPECT_NEAR(r.binary.recall, 0.773, 5e-4);
  EXPECT_NEAR(r.binary.f1, 0.347, 5e-4);
  ASSERT_NE(r.row("OG"), nullptr);
  ASSERT_NE(r.row("No error"), nullptr);
  EXPECT_EQ(*r.row("OG"), r.binary);
  // Negative class: tp=116 (tn), fp=5 (fn), fn=59 (fp).
  EXPECT_EQ(*r.row("No error"), prf(116, 5, 59));
}

// Hand count for the fixture below (gold / pred):
//  s0 none/none s1 none/det s2 det/det s3 det/none s4 osc/osc s5 osc/det
//  s6 min/min s7 min/none s8 part/part s9 part/min s10 none/none s11 unlabelled
// Binary: tp = s2 s4 s5 s6 s8 s9 = 6, fp = s1 = 1, fn = s3 s7 = 2, tn = 2.
// detached one-vs-rest: tp 1 (s2), fp 2 (s1, s5), fn 1 (s3).
// minimally: tp 1 (s6), fp 1 (s9), fn 1 (s7).
TEST(EvaluateRunTest, HandCountedFixture) {
  const std::vector<std::optional<L>> gold = {
      L::None, L::None, L::Detached, L::Detached, L::Oscillatory, L::Oscillatory,
      L::MinimallyDetached, L::MinimallyDetached, L::PartiallyDetached, L::PartiallyDetached,
      L::None, std::nullopt};
  const std::vector<L> pred = {L::None, L::Detached, L::Detached, L::None, L::Oscillatory,
                               L::Detached, L::MinimallyDetached, L::None, L::PartiallyDetached,
                               L::MinimallyDetached, L::None, L::Detached};
  const auto corpus = gold_corpus(gold);
  std::vector<Verdict> vs;
  for (std::size_t i = 0; i < pred.size(); ++i) vs.push_back(verdict("s" + std::to_string(i), pred[i]));

  const auto bin = evaluate_run(corpus, vs, EvalMode::Binary);
  EXPECT_EQ(bin.n_segments, 11u);
  EXPECT_EQ(bin.excluded, 1u);
  EXPECT_EQ(bin.binary, prf(6, 1, 2));
  EXPECT_EQ(pool_binary(bin.matrix), (BinaryCounts{6, 1, 2, 2}));

  const auto per = evaluate_run(corpus, vs, EvalMode::PerLabel);
  EXPECT_EQ(*per.row("detached"), prf(1, 2, 1));
  EXPECT_EQ(*per.row("minimally_detached"), prf(1, 1, 1));
  EXPECT_EQ(*per.row("oscillatory"), prf(1, 0, 1));
  EXPECT_EQ(*per.row("partially_detached"), prf(1, 0, 1));
  EXPECT_EQ(*per.row("none"), prf(2, 2, 1));
  EXPECT_EQ(per.matrix.total(), 11u);
  EXPECT_EQ(pool_binary(per.matrix), (BinaryCounts{6, 1, 2, 2}));
}

TEST(EvaluateRunTest, Errors) {
  const auto corpus = gold_corpus({L::None});
  std::vector<Verdict> unknown = {verdict("zzz", L::None)};
  EXPECT_THROW(evaluate_run(corpus, unknown, EvalMode::Binary), ValidationError);
  std::vector<Verdict> dup = {verdict("s0", L::None), verdict("s0", L::None)};
  EXPECT_THROW(evaluate_run(corpus, dup, EvalMode::Binary), ValidationError);
}

TEST(EvaluateRunPropertyTest, PermutationInvariantAndConsistent) {
  std::mt19937_64 rng(31);
  for (int iter = 0; iter < 300; ++iter) {
    const auto n = 1 + rng() % 40;
    std::vector<std::optional<L>> gold;
    std::vector<Verdict> vs;
    for (std::size_t i = 0; i < n; ++i) {
      gold.push_back(rng() % 6 ? std::optional<L>(kAllLabels[rng() % 5]) : std::nullopt);
      vs.push_back(verdict("s" + std::to_string(i), kAllLabels[rng() % 5]));
    }
    const auto corpus = gold_corpus(gold);
    for (auto mode : {EvalMode::Binary, EvalMode::PerLabel}) {
      const auto r = evaluate_run(corpus, vs, mode);
      auto shuffled = vs;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      ASSERT_EQ(evaluate_run(corpus, shuffled, mode), r);
      if (r.n_segments) {
        ASSERT_EQ(r.matrix.total(), r.n_segments);
        const auto c = pool_binary(r.matrix);
        ASSERT_EQ(c.tp, r.binary.tp);
        ASSERT_EQ(c.fp, r.binary.fp);
        ASSERT_EQ(c.fn, r.binary.fn);
      }
      ASSERT_EQ(r.n_segments + r.excluded, n);
    }
  }
}

TEST(RenderReportTest, EmptyReportIsValidJson) {
  EvalReport r;
  const auto j = nlohmann::ordered_json::parse(render_report(r, ReportFormat::JSON));
  EXPECT_TRUE(j.at("per_label").empty());
  for (const char* key : {"n_segments", "binary", "per_label", "matrix", "excluded"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(report_from_json(j), r);
}

TEST(RenderReportTest, TableHasOgAndNoErrorRows) {
  std::vector<std::optional<L>> gold = {L::Detached, L::None, L::None};
  const auto corpus = gold_corpus(gold);
  std::vector<Verdict> vs = {verdict("s0", L::Detached), verdict("s1", L::Detached),
                             verdict("s2", L::None)};
  const auto table = render_report(evaluate_run(corpus, vs, EvalMode::Binary), ReportFormat::PlainTable);
  EXPECT_NE(table.find("Pr / Rec / F1"), std::string::npos);
  EXPECT_NE(table.find("checkalign  OG                  0.50 / 1.00 / 0.67"), std::string::npos) << table;
  EXPECT_NE(table.find("No error            1.00 / 0.50 / 0.67"), std::string::npos) << table;
}

TEST(RenderReportTest, UndefinedRendersAsDashes) {
  const auto corpus = gold_corpus({L::Detached, L::Detached});
  std::vector<Verdict> vs = {verdict("s0", L::Detached), verdict("s1", L::Detached)};
  const auto table = render_report(evaluate_run(corpus, vs, EvalMode::Binary), ReportFormat::PlainTable);
  EXPECT_NE(table.find("No error            -- / -- / --"), std::string::npos) << table;
}

TEST(RenderReportPropertyTest, JsonRoundTrip) {
  std::mt19937_64 rng(41);
  for (int iter = 0; iter < 200; ++iter) {
    const auto n = 1 + rng() % 30;
    std::vector<std::optional<L>> gold;
    std::vector<Verdict> vs;
    for (std::size_t i = 0; i < n; ++i) {
      gold.push_back(rng() % 5 ? std::optional<L>(kAllLabels[rng() % 5]) : std::nullopt);
      vs.push_back(verdict("s" + std::to_string(i), kAllLabels[rng() % 5]));
    }
    const auto r = evaluate_run(gold_corpus(gold), vs, iter % 2 ? EvalMode::Binary : EvalMode::PerLabel);
    const auto parsed = nlohmann::ordered_json::parse(render_report(r, ReportFormat::JSON));
    ASSERT_EQ(report_from_json(parsed), r);
  }
}

}  // namespace
}  // namespace overgen
