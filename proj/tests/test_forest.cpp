#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "cybersick/error.hpp"
#include "cybersick/forest.hpp"
#include "oracles/cart_oracle.hpp"

using namespace cybersick;

namespace {

TrainingData one_dim(const std::vector<std::pair<double, double>>& points) {
  TrainingData d;
  d.n_features = 1;
  for (auto [x, y] : points) d.add(std::vector<double>{x}, y);
  return d;
}

HyperParams single(std::size_t depth = 12, std::size_t msl = 1, std::size_t m_try = 1) {
  HyperParams hp;
  hp.n_trees = 1;
  hp.max_depth = depth;
  hp.min_samples_leaf = msl;
  hp.m_try = m_try;
  hp.bootstrap = false;
  return hp;
}

// Planted target depending on a few features.
Dataset planted(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledWindow w;
    w.participant_id = "P" + std::to_string(i % 7);
    for (double& f : w.features) f = rng.uniform(-1, 1);
    w.target = 50 + 30 * w.features[0] - 10 * w.features[3] * w.features[5] + rng.normal();
    d.push_back(w);
  }
  return d;
}

TrainingData random_training(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  TrainingData t;
  t.n_features = d;
  std::vector<double> x(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : x) v = rng.normal();
    t.add(x, x[0] * 3 + std::sin(x[1]) + 0.1 * rng.normal());
  }
  return t;
}

}  // namespace

TEST(FitTree, ConstantTargetIsSingleLeaf) {
  const TrainingData d = one_dim({{0, 4.5}, {1, 4.5}, {2, 4.5}, {7, 4.5}});
  Rng rng(1);
  const Tree t = fit_tree(d, single(), rng);
  ASSERT_EQ(t.nodes.size(), 1u);
  EXPECT_EQ(t.nodes[0].value, 4.5);
}

TEST(FitTree, StepFunctionSplitsAtMidpoint) {
  const TrainingData d = one_dim({{0, 0}, {1, 0}, {2, 10}, {3, 10}});
  Rng rng(1);
  const Tree t = fit_tree(d, single(1), rng);
  ASSERT_EQ(t.nodes.size(), 3u);
  EXPECT_EQ(t.nodes[0].feature, 0);
  EXPECT_EQ(t.nodes[0].threshold, 1.5);
  EXPECT_EQ(t.nodes[static_cast<std::size_t>(t.nodes[0].left)].value, 0.0);
  EXPECT_EQ(t.nodes[static_cast<std::size_t>(t.nodes[0].right)].value, 10.0);
}

TEST(FitTree, MinSamplesLeafEqualToNGivesRootLeaf) {
  const TrainingData d = one_dim({{0, 1}, {1, 2}, {2, 3}, {3, 10}, {4, 4}});
  Rng rng(1);
  const Tree t = fit_tree(d, single(12, 5), rng);
  ASSERT_EQ(t.nodes.size(), 1u);
  EXPECT_DOUBLE_EQ(t.nodes[0].value, 4.0);
}

TEST(FitTree, EmptyDataAndBadParams) {
  TrainingData empty;
  empty.n_features = 1;
  Rng rng(1);
  EXPECT_THROW(fit_tree(empty, single(), rng), ValidationError);
  const TrainingData d = one_dim({{0, 1}, {1, 2}});
  EXPECT_THROW(fit_tree(d, single(12, 1, 2), rng), ParameterError);
}

TEST(FitTree, MatchesBruteForceOracleOnEnumeratedDatasets) {
  // Smaller enumeration than the acceptance run, same oracle.
  const auto r = oracle::run_enumerated_suite(6, 4);
  EXPECT_GT(r.datasets, 10000u);
  EXPECT_EQ(r.mismatches, 0u) << r.first_mismatch;
}

TEST(FitTree, StructuralInvariants) {
  const TrainingData d = random_training(300, 4, 2);
  Rng rng(3);
  HyperParams hp = single(6, 3, 2);
  const Tree t = fit_tree(d, hp, rng);
  EXPECT_LE(t.depth(), 6u);
  for (const TreeNode& n : t.nodes) {
    if (n.is_leaf()) {
      EXPECT_TRUE(std::isfinite(n.value));
    } else {
      EXPECT_LT(static_cast<std::size_t>(n.feature), d.n_features);
      EXPECT_GE(n.left, 0);
      EXPECT_GE(n.right, 0);
    }
  }
  EXPECT_EQ(t.leaf_count(), (t.nodes.size() + 1) / 2);
}

TEST(FitForest, SingleTreeWithoutBootstrapEqualsFitTree) {
  const TrainingData d = random_training(100, 5, 4);
  HyperParams hp = single(8, 2, 2);
  const ForestModel m = fit_forest(d, hp, 77);
  Rng rng = tree_rng(77, 0);
  const Tree t = fit_tree(d, hp, rng);
  ASSERT_EQ(m.trees.size(), 1u);
  ASSERT_EQ(m.trees[0].nodes.size(), t.nodes.size());
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    EXPECT_EQ(m.trees[0].nodes[i].feature, t.nodes[i].feature);
    EXPECT_EQ(m.trees[0].nodes[i].threshold, t.nodes[i].threshold);
    EXPECT_EQ(m.trees[0].nodes[i].value, t.nodes[i].value);
  }
}

TEST(FitForest, SameSeedIsBitEqual) {
  const TrainingData d = random_training(200, 6, 5);
  HyperParams hp;
  hp.n_trees = 20;
  hp.m_try = 2;
  const ForestModel a = fit_forest(d, hp, 9), b = fit_forest(d, hp, 9);
  EXPECT_EQ(serialize_model(a), serialize_model(b));
  Rng rng(10);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(6);
    for (double& v : x) v = rng.normal() * 2;
    EXPECT_EQ(predict(a, x), predict(b, x));
  }
  EXPECT_NE(serialize_model(fit_forest(d, hp, 10)), serialize_model(a));
}

TEST(FitForest, ConstantTargetPredictsConstant) {
  TrainingData d = random_training(50, 3, 6);
  std::fill(d.y.begin(), d.y.end(), 42.0);
  HyperParams hp;
  hp.n_trees = 10;
  hp.m_try = 3;
  const ForestModel m = fit_forest(d, hp, 1);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(predict(m, std::vector<double>{rng.normal() * 100, rng.normal(), -5.0}), 42.0);
  }
}

TEST(Predict, MeanOfTrees) {
  ForestModel m;
  m.n_features = 1;
  m.scaler = Scaler::identity(1);
  m.params.n_trees = 2;
  m.trees.resize(2);
  m.trees[0].nodes.push_back({-1, 0, -1, -1, 10.0});
  m.trees[1].nodes.push_back({-1, 0, -1, -1, 20.0});
  EXPECT_EQ(predict(m, std::vector<double>{3.0}), 15.0);
  EXPECT_THROW(predict(m, std::vector<double>{1.0, 2.0}), ParameterError);
}

TEST(Predict, TreeOrderDoesNotMatter) {
  const TrainingData d = random_training(150, 4, 7);
  HyperParams hp;
  hp.n_trees = 25;
  hp.m_try = 2;
  ForestModel m = fit_forest(d, hp, 3);
  ForestModel r = m;
  std::reverse(r.trees.begin(), r.trees.end());
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.normal();
    EXPECT_NEAR(predict(m, x), predict(r, x), 1e-12);
  }
}

TEST(Predict, DefaultModelLatencyUnderOneMillisecond) {
  const Dataset d = planted(1000, 8);
  const ForestModel m = train(d, HyperParams{}, 1);
  const auto start = std::chrono::steady_clock::now();
  double sink = 0;
  for (int rep = 0; rep < 10; ++rep) {
    for (int i = 0; i < 100; ++i) sink += predict(m, d[static_cast<std::size_t>(i)].features);
  }
  const double per_call =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 1000;
  EXPECT_TRUE(std::isfinite(sink));
  EXPECT_LT(per_call, 1e-3);
}

TEST(Metrics, ReportedPairIsConsistent) {
  // MSE 5.0277 and RMSE 2.2422 as reported for the original study.
  EXPECT_NEAR(std::sqrt(5.0277), 2.2422, 1e-3);
  std::vector<double> truth{0, 0}, pred{std::sqrt(5.0277), -std::sqrt(5.0277)};
  const Metrics m = compute_metrics(truth, pred);
  EXPECT_NEAR(m.mse, 5.0277, 1e-12);
  EXPECT_NEAR(m.rmse, 2.2422, 1e-3);
}

TEST(Metrics, IdentitiesHoldOnRandomData) {
  Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(50);
    std::vector<double> t(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = rng.uniform(0, 100);
      p[i] = t[i] + rng.normal() * 10;
    }
    const Metrics m = compute_metrics(t, p);
    EXPECT_NEAR(m.rmse, std::sqrt(m.mse), 1e-12);
    EXPECT_NEAR(m.rmse * m.rmse, m.mse, 1e-9 * std::max(1.0, m.mse));
    EXPECT_LE(m.mae, m.rmse + 1e-12);
    EXPECT_GE(m.mse, 0.0);
    if (m.r2_defined) {
      EXPECT_LE(m.r2, 1.0);
    }
  }
}

TEST(Metrics, PerfectAndMeanPredictors) {
  std::vector<double> t{1, 4, 9, 16, 25};
  const Metrics perfect = compute_metrics(t, t);
  EXPECT_EQ(perfect.mse, 0.0);
  EXPECT_EQ(perfect.r2, 1.0);
  std::vector<double> mean(5, 11.0);
  EXPECT_NEAR(compute_metrics(t, mean).r2, 0.0, 1e-12);
}

TEST(Metrics, ConstantTruthFlagsR2) {
  std::vector<double> t{3, 3, 3}, p{3, 4, 2};
  const Metrics m = compute_metrics(t, p);
  EXPECT_FALSE(m.r2_defined);
  EXPECT_TRUE(std::isnan(m.r2));
  EXPECT_NE(format_metrics(m).find("r2_defined=false"), std::string::npos);
}

TEST(GridSearch, SingleCellReturnsIt) {
  const Dataset d = planted(40, 1);
  const auto grid = make_grid({5}, {4}, {2}, {6});
  const GridSearchResult r = grid_search(d, grid, 3, 5);
  EXPECT_EQ(r.best_index, 0u);
  EXPECT_EQ(r.best, grid[0]);
  ASSERT_EQ(r.cell_mse.size(), 1u);
}

TEST(GridSearch, TwoCellsMatchManualCrossValidation) {
  const Dataset d = planted(60, 2);
  const auto grid = make_grid({5}, {1, 6}, {2}, {6});
  const std::size_t k = 3;
  const std::uint64_t seed = 21;
  const GridSearchResult r = grid_search(d, grid, k, seed);

  const auto fold = kfold_assignment(d.size(), k, seed);
  std::vector<double> manual;
  for (const HyperParams& cell : grid) {
    double total = 0;
    for (std::size_t f = 0; f < k; ++f) {
      Dataset tr, va;
      for (std::size_t i = 0; i < d.size(); ++i) (fold[i] == f ? va : tr).push_back(d[i]);
      const ForestModel m = train(tr, cell, seed);
      double se = 0;
      for (const auto& w : va) {
        const double e = predict(m, w.features) - w.target;
        se += e * e;
      }
      total += se / static_cast<double>(va.size());
    }
    manual.push_back(total / k);
  }
  ASSERT_EQ(r.cell_mse.size(), 2u);
  for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(r.cell_mse[c], manual[c], 1e-9);
  const std::size_t want = manual[1] < manual[0] ? 1 : 0;
  EXPECT_EQ(r.best_index, want);
  // The stump underfits the planted signal.
  EXPECT_EQ(r.best_index, 1u);
}

TEST(GridSearch, TiesGoToFirstCell) {
  Dataset d = planted(30, 3);
  for (auto& w : d) w.target = 5.0;
  const auto grid = make_grid({3}, {2, 4}, {1}, {6});
  EXPECT_EQ(grid_search(d, grid, 3, 1).best_index, 0u);
}

TEST(KFold, DeterministicAndBalanced) {
  const auto a = kfold_assignment(101, 2, 8), b = kfold_assignment(101, 2, 8);
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::count(a.begin(), a.end(), 0u), 51);
  EXPECT_THROW(kfold_assignment(3, 4, 1), ParameterError);
  EXPECT_THROW(kfold_assignment(10, 1, 1), ParameterError);
}

TEST(HyperParams, Validation) {
  HyperParams hp;
  EXPECT_NO_THROW(hp.validate(18));
  hp.m_try = 19;
  EXPECT_THROW(hp.validate(18), ParameterError);
  hp = {};
  hp.n_trees = 0;
  EXPECT_THROW(hp.validate(18), ParameterError);
  EXPECT_EQ(default_grid().size(), 27u);
}
