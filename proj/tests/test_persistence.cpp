#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cybersick/error.hpp"
#include "cybersick/forest.hpp"

using namespace cybersick;

namespace {

ForestModel trained_model(std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  for (int i = 0; i < 200; ++i) {
    LabeledWindow w;
    w.participant_id = "P" + std::to_string(i % 5);
    for (double& f : w.features) f = rng.normal() * 4 + 2;
    w.features[17] = 1.0;  // constant column exercises the passthrough flag
    w.target = 20 + 5 * w.features[2] + rng.normal();
    d.push_back(w);
  }
  HyperParams hp;
  hp.n_trees = 15;
  return train(d, hp, seed);
}

const char* kOneLeaf =
    "cfmodel 1.0\n"
    "n_features 2\n"
    "feature_names a b\n"
    "seed 0\n"
    "n_trees 1\n"
    "max_depth 1\n"
    "min_samples_leaf 1\n"
    "m_try 1\n"
    "bootstrap 0\n"
    "scaler_mean 0 0\n"
    "scaler_std 1 1\n"
    "scaler_passthrough 0 0\n"
    "trees 1\n"
    "tree 0\n"
    "leaf 37.5\n"
    "end\n";

}  // namespace

TEST(Persistence, SaveLoadPreservesPredictions) {
  const ForestModel m = trained_model(1);
  const ForestModel back = parse_model(serialize_model(m));
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x(kFeatureCount);
    for (double& v : x) v = rng.normal() * 6;
    EXPECT_NEAR(predict(back, x), predict(m, x), 1e-12);
  }
  EXPECT_EQ(back.scaler, m.scaler);
  EXPECT_EQ(back.params, m.params);
  EXPECT_EQ(back.feature_names, m.feature_names);
}

TEST(Persistence, SaveLoadSaveIsByteIdentical) {
  const ForestModel m = trained_model(3);
  const std::string once = serialize_model(m);
  EXPECT_EQ(serialize_model(parse_model(once)), once);
}

TEST(Persistence, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "cybersick_persistence_test.cfmodel";
  const ForestModel m = trained_model(4);
  save_model(m, path.string());
  EXPECT_EQ(serialize_model(load_model(path.string())), serialize_model(m));
  std::filesystem::remove(path);
  EXPECT_THROW(load_model(path.string()), Error);
}

TEST(Persistence, HandWrittenSingleLeaf) {
  const ForestModel m = parse_model(kOneLeaf);
  EXPECT_EQ(predict(m, std::vector<double>{-3.0, 1e6}), 37.5);
  EXPECT_EQ(serialize_model(m), kOneLeaf);
}

TEST(Persistence, TruncatedFileIsParseError) {
  const std::string text = serialize_model(trained_model(5));
  for (std::size_t cut : {std::size_t{0}, std::size_t{8}, text.size() / 3, text.size() / 2, text.size() - 5}) {
    try {
      parse_model(text.substr(0, cut));
      ADD_FAILURE() << "cut at " << cut << " parsed";
    } catch (const ParseError& e) {
      EXPECT_LE(e.offset(), cut);
    }
  }
}

TEST(Persistence, CorruptionReportsOffset) {
  std::string text = kOneLeaf;
  const auto at = text.find("37.5");
  text.replace(at, 4, "x7.5");
  try {
    parse_model(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), at);
  }
  std::string bad_feature = kOneLeaf;
  bad_feature.replace(bad_feature.find("leaf 37.5"), 9, "split 5 0\n leaf 1\n leaf 2");
  EXPECT_THROW(parse_model(bad_feature), ParseError);
  EXPECT_THROW(parse_model(std::string(kOneLeaf) + "junk\n"), ParseError);
}

TEST(Persistence, UnknownMajorVersionIsRejected) {
  std::string text = kOneLeaf;
  text.replace(0, 11, "cfmodel 2.0");
  EXPECT_THROW(parse_model(text), VersionError);
  // Minor revisions within the major version load.
  std::string minor = kOneLeaf;
  minor.replace(0, 11, "cfmodel 1.3");
  EXPECT_NO_THROW(parse_model(minor));
}
