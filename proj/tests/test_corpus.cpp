#include <gtest/gtest.h>

#include <random>
#include <string>

#include "overgen/corpus.hpp"
#include "support/temp_dir.hpp"

namespace overgen {
namespace {

using testing::TempDir;

TEST(LoadJsonlTest, EmptyFile) {
  TempDir dir;
  EXPECT_TRUE(load_jsonl(dir.write("c.jsonl", "")).empty());
}

TEST(LoadJsonlTest, MinimalRecord) {
  TempDir dir;
  const auto c = load_jsonl(
      dir.write("c.jsonl", R"({"id":"s1","src":"Hello","tgt":"Ciao","lang_pair":"en-it"})" "\n"));
  ASSERT_EQ(c.size(), 1u);
  const auto& s = c.segments[0];
  EXPECT_EQ(s.id, "s1");
  EXPECT_EQ(s.src, "Hello");
  EXPECT_EQ(s.tgt, "Ciao");
  EXPECT_EQ(s.lang_pair, "en-it");
  EXPECT_FALSE(s.gold_label);
  EXPECT_FALSE(s.qe_score);
  EXPECT_FALSE(s.alignment);
  EXPECT_FALSE(s.ext_score);
  EXPECT_TRUE(s.extra.empty());
}

TEST(LoadJsonlTest, OptionalFields) {
  TempDir dir;
  const auto c = load_jsonl(dir.write(
      "c.jsonl",
      R"({"id":"s1","src":"a b","tgt":"x y","lang_pair":"en-it","gold_label":"minimally_detached","qe_score":1,"ext_score":87.5,"alignment":"0-0 1-1","annotator":"t3"})"
      "\n"));
  const auto& s = c.segments.at(0);
  EXPECT_EQ(s.gold_label, OvergenLabel::MinimallyDetached);
  EXPECT_EQ(s.qe_score, 1.0);
  EXPECT_EQ(s.ext_score, 87.5);
  EXPECT_EQ(s.alignment, (Alignment{{0, 0}, {1, 1}}));
  EXPECT_EQ(s.extra.at("annotator"), "t3");
}

TEST(LoadJsonlTest, QeScoreOutOfRangeNamesIdAndValue) {
  TempDir dir;
  const auto path = dir.write(
      "c.jsonl", R"({"id":"s1","src":"a","tgt":"b","lang_pair":"en-it","qe_score":2.5})" "\n");
  try {
    load_jsonl(path);
    FAIL() << "expected RangeError";
  } catch (const RangeError& e) {
    EXPECT_NE(std::string(e.what()).find("s1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("2.5"), std::string::npos);
  }
}

TEST(LoadJsonlTest, MalformedLineCarriesLineNumber) {
  TempDir dir;
  const auto path = dir.write("c.jsonl",
                              R"({"id":"s1","src":"a","tgt":"b","lang_pair":"en-it"})"
                              "\n{not json\n");
  try {
    load_jsonl(path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadJsonlTest, MissingRequiredKey) {
  TempDir dir;
  EXPECT_THROW(load_jsonl(dir.write("c.jsonl", R"({"id":"s1","src":"a","lang_pair":"en-it"})")),
               ParseError);
}

TEST(LoadJsonlTest, DuplicateIdNamed) {
  TempDir dir;
  const auto path = dir.write("c.jsonl",
                              R"({"id":"dup","src":"a","tgt":"b","lang_pair":"en-it"})"
                              "\n"
                              R"({"id":"dup","src":"c","tgt":"d","lang_pair":"en-it"})"
                              "\n");
  try {
    load_jsonl(path);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("dup"), std::string::npos);
  }
}

TEST(LoadJsonlTest, RejectsBadLangPairLabelAndAlignment) {
  TempDir dir;
  EXPECT_THROW(load_jsonl(dir.write("a.jsonl", R"({"id":"s","src":"a","tgt":"b","lang_pair":"EN-it"})")),
               ValidationError);
  EXPECT_THROW(load_jsonl(dir.write("b.jsonl",
                                    R"({"id":"s","src":"a","tgt":"b","lang_pair":"en-it","gold_label":"bogus"})")),
               ParseError);
  EXPECT_THROW(load_jsonl(dir.write("c.jsonl",
                                    R"({"id":"s","src":"a","tgt":"b","lang_pair":"en-it","alignment":"0-3"})")),
               BoundsError);
  EXPECT_THROW(load_jsonl(dir.write("d.jsonl",
                                    R"({"id":"","src":"a","tgt":"b","lang_pair":"en-it"})")),
               ValidationError);
}

TEST(LoadJsonlTest, FieldMappingResolvesAliases) {
  TempDir dir;
  const auto path = dir.write("c.jsonl", R"({"id":"s1","src":"a","mt":"b","lang_pair":"en-it"})");
  EXPECT_THROW(load_jsonl(path), ParseError);
  const auto c = load_jsonl(path, {{"tgt", "mt"}});
  EXPECT_EQ(c.segments.at(0).tgt, "b");
  EXPECT_TRUE(c.segments.at(0).extra.empty());
}

TEST(LoadJsonlTest, MissingFileIsIoError) {
  EXPECT_THROW(load_jsonl("/nonexistent/x.jsonl"), IoError);
}

TEST(LoadTsvTest, HeaderOnly) {
  TempDir dir;
  EXPECT_TRUE(load_tsv(dir.write("c.tsv", "id\tsrc\ttgt\tlang_pair\n"), true).empty());
}

TEST(LoadTsvTest, MinimalRow) {
  TempDir dir;
  const auto c = load_tsv(dir.write("c.tsv", "s1\tHello\tCiao\ten-it\n"), false);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.segments[0].tgt, "Ciao");
  EXPECT_FALSE(c.segments[0].gold_label);
}

TEST(LoadTsvTest, OptionalColumns) {
  TempDir dir;
  const auto c = load_tsv(dir.write("c.tsv", "s1\ta\tb\ten-it\tdetached\t0.25\ns2\ta\tb\ten-it\t\t1.5\n"),
                          false);
  EXPECT_EQ(c.segments[0].gold_label, OvergenLabel::Detached);
  EXPECT_EQ(c.segments[0].qe_score, 0.25);
  EXPECT_FALSE(c.segments[1].gold_label);
  EXPECT_EQ(c.segments[1].qe_score, 1.5);
}

TEST(LoadTsvTest, ColumnCountErrorAtLine) {
  TempDir dir;
  try {
    load_tsv(dir.write("c.tsv", "id\tsrc\ttgt\tlang_pair\ns1\tHello\tCiao\n"), true);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadTsvTest, UnknownLabelNamed) {
  TempDir dir;
  try {
    load_tsv(dir.write("c.tsv", "s1\ta\tb\ten-it\tweird\n"), false);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("weird"), std::string::npos);
  }
}

Corpus scored(std::initializer_list<double> scores) {
  Corpus c;
  int i = 0;
  for (double s : scores) {
    SegmentPair p;
    p.id = "s" + std::to_string(i++);
    p.src = "a";
    p.tgt = "b";
    p.lang_pair = "en-it";
    p.ext_score = s;
    c.segments.push_back(p);
  }
  return c;
}

TEST(FilterScoreBandTest, LowBandKeepsLowScores) {
  const auto out = filter_score_band(scored({5, 50, 100}), 0, 10);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.segments[0].ext_score, 5.0);
}

TEST(FilterScoreBandTest, FullBandIsIdentity) {
  const auto in = scored({0, 5, 50, 100});
  EXPECT_EQ(filter_score_band(in, 0, 100), in);
}

TEST(FilterScoreBandTest, PointBandKeepsExactScore) {
  const auto out = filter_score_band(scored({100, 99}), 100, 100);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.segments[0].ext_score, 100.0);
}

TEST(FilterScoreBandTest, UnscoredSegmentsExcluded) {
  auto in = scored({5});
  in.segments.push_back(in.segments[0]);
  in.segments.back().id = "unscored";
  in.segments.back().ext_score.reset();
  EXPECT_EQ(filter_score_band(in, 0, 100).size(), 1u);
  EXPECT_THROW(filter_score_band(in, 10, 0), ValidationError);
}

TEST(WriteJsonlTest, EmptyCorpusWritesNothing) {
  TempDir dir;
  write_jsonl({}, dir.file("c.jsonl"));
  EXPECT_EQ(testing::read_file(dir.file("c.jsonl")), "");
}

TEST(WriteJsonlTest, OrderAndEscapedNewlines) {
  TempDir dir;
  Corpus c = scored({1, 2, 3});
  c.segments[1].tgt = "line one\nline two";
  write_jsonl(c, dir.file("c.jsonl"));
  const auto text = testing::read_file(dir.file("c.jsonl"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  auto back = load_jsonl(dir.file("c.jsonl"));
  back.name = c.name;
  EXPECT_EQ(back, c);
}

TEST(WriteJsonlTest, UnwritablePathIsIoError) {
  EXPECT_THROW(write_jsonl(scored({1}), "/nonexistent/dir/c.jsonl"), IoError);
}

// Randomized corpora survive write then load unchanged, including extra keys.
TEST(CorpusPropertyTest, RoundTrip) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> words = {"ciao", "mondo", "東京", "a\"b", "tab\tx", "nl\nx", "é", ","};
  TempDir dir;
  for (int iter = 0; iter < 100; ++iter) {
    Corpus c;
    const auto n = rng() % 8;
    for (std::size_t i = 0; i < n; ++i) {
      SegmentPair p;
      p.id = "id" + std::to_string(i) + "-" + std::to_string(rng() % 1000);
      for (int k = 0; k < 4; ++k) p.src += words[rng() % words.size()] + " ";
      for (int k = 0; k < 5; ++k) p.tgt += words[rng() % words.size()] + " ";
      p.lang_pair = "en-it";
      if (rng() % 2) p.gold_label = kAllLabels[rng() % kAllLabels.size()];
      if (rng() % 2) p.qe_score = static_cast<double>(rng() % 1000001) / 500000.0;
      if (rng() % 2) p.ext_score = static_cast<double>(rng()) / 3.0e16;
      if (rng() % 2) {
        Alignment a;
        const auto s = tokenize(p.src).size(), t = tokenize(p.tgt).size();
        for (int k = 0; k < 3; ++k) a.add(rng() % s, rng() % t);
        p.alignment = a;
      }
      if (rng() % 3 == 0) p.extra["note"] = {{"k", static_cast<int>(rng() % 10)}, {"arr", {1, 2}}};
      c.segments.push_back(p);
    }
    const auto path = dir.file("rt" + std::to_string(iter) + ".jsonl");
    write_jsonl(c, path);
    auto back = load_jsonl(path);
    back.name = c.name;
    ASSERT_EQ(back, c);
  }
}

}  // namespace
}  // namespace overgen
