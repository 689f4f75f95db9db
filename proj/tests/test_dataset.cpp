#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "cybersick/dataset.hpp"
#include "cybersick/error.hpp"
#include "cybersick/motion.hpp"
#include "cybersick/rng.hpp"

using namespace cybersick;

namespace {

Capture capture(double duration, std::uint64_t seed, double amp = 1.0) {
  MotionProfile p;
  p.kind = MotionKind::Stress;
  p.duration = duration;
  p.angular_amplitude = amp;
  return generate_motion(p, seed);
}

Dataset random_dataset(std::size_t n, std::size_t participants, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledWindow w;
    w.participant_id = "P" + std::to_string(i % participants);
    for (double& f : w.features) f = rng.normal() * 3.0 + 1.0;
    w.target = rng.uniform(0, 100);
    d.push_back(w);
  }
  return d;
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  double d2 = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  const double n = static_cast<double>(a.size());
  return 1.0 - 6.0 * d2 / (n * (n * n - 1));
}

}  // namespace

TEST(Align, FourteenParticipantsSixtySeconds) {
  CaptureSet caps;
  std::map<std::string, double> scores;
  for (int i = 0; i < 14; ++i) {
    const std::string id = "S" + std::to_string(i);
    caps[id] = capture(60.0, 100 + i);
    scores[id] = i * 5.0;
  }
  // Enumerate window starts directly: [s, s + 3] must fit inside [0, 60].
  std::size_t per_participant = 0;
  for (int s = 0; s + 3 <= 60; ++s) ++per_participant;
  ASSERT_EQ(per_participant, 58u);
  EXPECT_EQ(window_count(60.0, {}), per_participant);

  const AlignResult r = align(caps, scores);
  EXPECT_EQ(r.windows.size(), 14 * per_participant);
  EXPECT_TRUE(r.warnings.empty());
  for (const auto& w : r.windows) EXPECT_EQ(w.target, scores[w.participant_id]);
}

TEST(Align, ShortCaptureWarns) {
  CaptureSet caps{{"A", capture(2.0, 1)}, {"B", capture(10.0, 2)}};
  const AlignResult r = align(caps, {{"A", 10.0}, {"B", 20.0}});
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("A"), std::string::npos);
  for (const auto& w : r.windows) EXPECT_EQ(w.participant_id, "B");
  EXPECT_EQ(r.windows.size(), 8u);
}

TEST(Align, MissingScoreNamesParticipant) {
  CaptureSet caps{{"A", capture(5.0, 1)}, {"ghost", capture(5.0, 2)}};
  try {
    align(caps, {{"A", 1.0}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(Align, OrderInsensitive) {
  // CaptureSet is keyed, so permuted insertion order must produce the same windows.
  std::vector<std::pair<std::string, Capture>> items;
  std::map<std::string, double> scores;
  for (int i = 0; i < 5; ++i) {
    items.emplace_back("Q" + std::to_string(i), capture(8.0, 40 + i));
    scores["Q" + std::to_string(i)] = i;
  }
  CaptureSet forward(items.begin(), items.end());
  CaptureSet backward(items.rbegin(), items.rend());
  const auto a = align(forward, scores).windows;
  auto b = align(backward, scores).windows;
  EXPECT_EQ(a, b);
}

TEST(Standardize, ZeroMeanUnitStd) {
  const Dataset d = random_dataset(300, 10, 1);
  const Standardized s = standardize(d);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    double mean = 0, ss = 0;
    for (const auto& w : s.data) mean += w.features[f];
    mean /= s.data.size();
    for (const auto& w : s.data) ss += (w.features[f] - mean) * (w.features[f] - mean);
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt(ss / s.data.size()), 1.0, 1e-9);
  }
}

TEST(Standardize, ConstantColumnPassesThrough) {
  Dataset d = random_dataset(50, 5, 2);
  for (auto& w : d) w.features[4] = 7.25;
  const Standardized s = standardize(d);
  EXPECT_TRUE(s.scaler.passthrough[4]);
  EXPECT_FALSE(s.scaler.passthrough[3]);
  for (const auto& w : s.data) EXPECT_EQ(w.features[4], 7.25);
}

TEST(Standardize, ScalerReproducesTrainingSet) {
  const Dataset d = random_dataset(120, 6, 3);
  const Standardized s = standardize(d);
  const Dataset again = apply_scaler(d, s.scaler);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      EXPECT_NEAR(again[i].features[f], s.data[i].features[f], 1e-12);
    }
  }
  // Re-standardizing an already standardized set changes nothing.
  const Dataset twice = apply_scaler(s.data, fit_scaler(s.data));
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      EXPECT_NEAR(twice[i].features[f], s.data[i].features[f], 1e-9);
    }
  }
  EXPECT_THROW(standardize(Dataset{}), ValidationError);
}

TEST(Split, RowSplitEightyTwenty) {
  const Dataset d = random_dataset(100, 10, 4);
  const Split a = split(d, 0.2, 7, false);
  const Split b = split(d, 0.2, 7, false);
  EXPECT_EQ(a.train.size(), 80u);
  EXPECT_EQ(a.test.size(), 20u);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  // Rows are distinct (random features), so disjointness is checked by value.
  for (const auto& t : a.test) EXPECT_EQ(std::count(a.train.begin(), a.train.end(), t), 0);
}

TEST(Split, GroupedSplitNeverLeaks) {
  const Dataset d = random_dataset(14 * 20, 14, 5);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Split s = split(d, 0.2, seed, true);
    std::set<std::string> train_ids, test_ids;
    for (const auto& w : s.train) train_ids.insert(w.participant_id);
    for (const auto& w : s.test) test_ids.insert(w.participant_id);
    for (const auto& id : test_ids) ASSERT_EQ(train_ids.count(id), 0u) << id;
    ASSERT_EQ(test_ids.size(), 3u);  // round(14 * 0.2)
    ASSERT_EQ(s.train.size() + s.test.size(), d.size());
  }
}

TEST(Split, FractionOutOfRange) {
  const Dataset d = random_dataset(10, 2, 6);
  EXPECT_THROW(split(d, 1.0, 1, false), ParameterError);
  EXPECT_THROW(split(d, 0.0, 1, true), ParameterError);
  EXPECT_THROW(split(d, -0.5, 1, false), ParameterError);
}

TEST(Synth, SameSeedIsBitIdentical) {
  SynthConfig c;
  c.participants = 4;
  c.duration = 10;
  const SynthData a = synth_dataset(c, 99), b = synth_dataset(c, 99);
  EXPECT_EQ(a.scores, b.scores);
  for (const auto& [id, cap] : a.captures) {
    const auto& other = b.captures.at(id);
    ASSERT_EQ(cap.size(), other.size());
    for (std::size_t k = 0; k < cap.size(); ++k) {
      ASSERT_EQ(cap[k].pos, other[k].pos);
      ASSERT_EQ(cap[k].quat, other[k].quat);
    }
  }
  EXPECT_NE(synth_dataset(c, 100).scores, a.scores);
}

TEST(Synth, ZeroIntensityIsQuietAndLow) {
  SynthConfig c;
  c.participants = 5;
  c.duration = 10;
  c.intensity_max = 0.0;
  const SynthData s = synth_dataset(c, 3);
  const double plateau = 100.0 / (1.0 + std::exp(-c.logit_offset));
  for (const auto& [id, score] : s.scores) EXPECT_NEAR(score, plateau, 3.0) << id;
  const auto windows = align(s.captures, s.scores).windows;
  for (const auto& w : windows) {
    for (double f : w.features) EXPECT_NEAR(f, 0.0, 1e-9);
  }
}

TEST(Synth, IntensityRankMatchesAngularVelocity) {
  SynthConfig c;
  c.participants = 20;
  c.duration = 20;
  const SynthData s = synth_dataset(c, 11);
  const auto windows = align(s.captures, s.scores).windows;
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& w : windows) {
    acc[w.participant_id].first += w.features[9];  // ang_vel_mean
    acc[w.participant_id].second += 1;
  }
  std::vector<double> lambda, omega;
  for (const auto& [id, v] : acc) {
    lambda.push_back(s.intensity.at(id));
    omega.push_back(v.first / v.second);
  }
  EXPECT_GE(spearman(lambda, omega), 0.9);
}

TEST(Synth, InvalidConfig) {
  SynthConfig c;
  c.participants = 0;
  EXPECT_THROW(synth_dataset(c, 1), ParameterError);
  SynthConfig d;
  d.intensity_min = 0.8;
  d.intensity_max = 0.2;
  EXPECT_THROW(synth_dataset(d, 1), ParameterError);
}

TEST(DatasetCsv, RoundTripIsExact) {
  const Dataset d = random_dataset(30, 3, 8);
  std::stringstream ss;
  write_dataset_csv(ss, d);
  EXPECT_EQ(read_dataset_csv(ss), d);
  std::stringstream bad("participant_id,foo,target\nA,1,2\n");
  EXPECT_THROW(read_dataset_csv(bad), ValidationError);
}
