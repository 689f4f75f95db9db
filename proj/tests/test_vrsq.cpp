#include <gtest/gtest.h>

#include <sstream>

#include "cybersick/error.hpp"
#include "cybersick/rng.hpp"
#include "cybersick/vrsq.hpp"

using namespace cybersick;

namespace {

VrsqResponse filled(int value) {
  VrsqResponse r;
  r.items.fill(value);
  return r;
}

}  // namespace

TEST(VrsqScore, Floor) {
  const VrsqScore s = score(filled(0));
  EXPECT_EQ(s.oculomotor, 0.0);
  EXPECT_EQ(s.disorientation, 0.0);
  EXPECT_EQ(s.total, 0.0);
}

TEST(VrsqScore, Ceiling) {
  const VrsqScore s = score(filled(3));
  EXPECT_DOUBLE_EQ(s.oculomotor, 100.0);
  EXPECT_DOUBLE_EQ(s.disorientation, 100.0);
  EXPECT_DOUBLE_EQ(s.total, 100.0);
}

TEST(VrsqScore, OculomotorOnly) {
  VrsqResponse r;
  for (int i = 0; i < 4; ++i) r.items[i] = 1;
  const VrsqScore s = score(r);
  // Four oculomotor items at 1 of a possible 12 points, none of 15 disorientation points.
  EXPECT_NEAR(s.oculomotor, 100.0 * 4 / 12, 1e-12);
  EXPECT_EQ(s.disorientation, 0.0);
  EXPECT_NEAR(s.total, 100.0 * 4 / 24, 1e-12);
}

TEST(VrsqScore, MonotoneInEveryItem) {
  Rng rng(9);
  for (int trial = 0; trial < 2000; ++trial) {
    VrsqResponse r;
    for (int& v : r.items) v = static_cast<int>(rng.below(4));
    const std::size_t i = rng.below(9);
    if (r.items[i] == 3) continue;
    VrsqResponse up = r;
    ++up.items[i];
    const VrsqScore a = score(r), b = score(up);
    EXPECT_GE(b.oculomotor, a.oculomotor);
    EXPECT_GE(b.disorientation, a.disorientation);
    EXPECT_GT(b.total, a.total);
    EXPECT_EQ(a.total, (a.oculomotor + a.disorientation) / 2);
  }
}

TEST(VrsqScore, OutOfRangeItemIsNamed) {
  VrsqResponse r;
  r.items[6] = 4;
  try {
    score(r);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("blurred_vision"), std::string::npos);
  }
  r.items[6] = -1;
  EXPECT_THROW(score(r), ValidationError);
}

TEST(VrsqCsv, ReadsWhatItWrites) {
  std::map<std::string, VrsqResponse> in{{"P01", filled(1)}, {"P02", filled(2)}};
  in["P02"].items[8] = 0;
  std::stringstream ss;
  write_vrsq_csv(ss, in);
  const auto back = read_vrsq_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.at("P02").items, in["P02"].items);
}

TEST(VrsqCsv, ScoredOutputHasTwoDecimals) {
  VrsqResponse r;
  for (int i = 0; i < 4; ++i) r.items[i] = 1;
  std::stringstream ss;
  write_scored_vrsq_csv(ss, {{"P01", r}});
  EXPECT_NE(ss.str().find("33.33"), std::string::npos);
  EXPECT_NE(ss.str().find("16.67"), std::string::npos);
}

TEST(ScoreCsv, RoundTripAndDuplicates) {
  std::stringstream ss;
  write_score_csv(ss, {{"A", 12.5}, {"B", 0.1}});
  const auto back = read_score_csv(ss);
  EXPECT_EQ(back.at("B"), 0.1);
  std::stringstream dup("participant_id,vrsq_total\nA,1\nA,2\n");
  EXPECT_THROW(read_score_csv(dup), ValidationError);
}
