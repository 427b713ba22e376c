#include <gtest/gtest.h>

#include <random>
#include <set>

#include "overgen/alignment.hpp"
#include "support/temp_dir.hpp"

namespace overgen {
namespace {

TEST(PharaohTest, ParseEmpty) {
  EXPECT_TRUE(parse_pharaoh("").empty());
  EXPECT_TRUE(parse_pharaoh("   ").empty());
}

TEST(PharaohTest, ParsePairs) {
  EXPECT_EQ(parse_pharaoh("0-0 1-2"), (Alignment{{0, 0}, {1, 2}}));
  EXPECT_EQ(parse_pharaoh("12-3\r"), (Alignment{{12, 3}}));
}

TEST(PharaohTest, DuplicatesCollapse) {
  EXPECT_EQ(parse_pharaoh("0-0 0-0"), (Alignment{{0, 0}}));
}

TEST(PharaohTest, MalformedPairNamesToken) {
  for (const char* bad : {"0-0 12", "a-1", "1-", "-1", "1-2-3", "1--2", "+1-2"}) {
    try {
      parse_pharaoh(bad);
      FAIL() << bad;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find("'"), std::string::npos) << bad;
    }
  }
}

TEST(PharaohTest, SerializeSorts) {
  EXPECT_EQ(serialize_pharaoh({}), "");
  EXPECT_EQ(serialize_pharaoh(Alignment{{1, 2}, {0, 0}}), "0-0 1-2");
}

TEST(PharaohPropertyTest, RoundTripRandomAlignments) {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 2000; ++iter) {
    Alignment a;
    for (int k = 0; k < 50; ++k) a.add(rng() % 40, rng() % 40);
    const auto text = serialize_pharaoh(a);
    ASSERT_EQ(parse_pharaoh(text), a);
    ASSERT_EQ(serialize_pharaoh(parse_pharaoh(text)), text);
  }
}

TEST(PharaohFileTest, LineOrderPreserved) {
  testing::TempDir dir;
  const std::vector<Alignment> in = {Alignment{{0, 0}}, Alignment{}, Alignment{{2, 1}, {0, 3}}};
  write_pharaoh_file(in, dir.file("a.align"));
  EXPECT_EQ(testing::read_file(dir.file("a.align")), "0-0\n\n0-3 2-1\n");
  EXPECT_EQ(read_pharaoh_file(dir.file("a.align")), in);
}

TEST(AlignmentTest, BoundsChecks) {
  const Alignment a{{0, 4}};
  EXPECT_THROW(a.target_coverage(4), BoundsError);
  EXPECT_NO_THROW(a.target_coverage(5));
  EXPECT_THROW(a.check_bounds(0, 5), BoundsError);
}

}  // namespace
}  // namespace overgen
