#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cybersick/dataset.hpp"
#include "cybersick/rng.hpp"

namespace cybersick {

/// Row-major feature matrix plus regression targets.
struct TrainingData {
  std::size_t n_features = 0;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t rows() const { return y.size(); }
  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * n_features, n_features};
  }
  void add(std::span<const double> features, double target);

  static TrainingData from(const Dataset& data);
};

struct HyperParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 12;
  std::size_t min_samples_leaf = 2;
  std::size_t m_try = 6;  ///< features sampled per split
  bool bootstrap = true;

  void validate(std::size_t n_features) const;
  std::string describe() const;
  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

struct TreeNode {
  int feature = -1;  ///< -1 marks a leaf
  double threshold = 0.0;
  int left = -1;   ///< taken when x[feature] <= threshold
  int right = -1;
  double value = 0.0;  ///< leaf output

  bool is_leaf() const { return feature < 0; }
};

/// Flat pre-order node array; node 0 is the root.
struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  std::size_t depth() const;
  std::size_t leaf_count() const;
};

/// Greedy CART regression tree on all rows of `data`. At each node m_try
/// features are drawn without replacement (all of them when m_try covers the
/// feature count); candidate thresholds are midpoints between consecutive
/// distinct values; the split minimizing the summed child squared error wins,
/// ties going to the lower feature index and then the lower threshold. A node
/// becomes a leaf at max_depth, when a child would drop below
/// min_samples_leaf, or when its targets are all equal.
Tree fit_tree(const TrainingData& data, const HyperParams& params, Rng& rng);
Tree fit_tree(const TrainingData& data, std::span<const std::size_t> rows,
              const HyperParams& params, Rng& rng);

/// Generator used for tree `index` of a forest trained with `seed`.
Rng tree_rng(std::uint64_t seed, std::size_t index);

inline constexpr int kModelFormatMajor = 1;
inline constexpr int kModelFormatMinor = 0;

struct ForestModel {
  std::vector<Tree> trees;
  std::size_t n_features = 0;
  Scaler scaler;
  HyperParams params;
  std::uint64_t seed = 0;
  std::vector<std::string> feature_names;
};

/// Trains on already-scaled data; the returned model carries an identity scaler.
ForestModel fit_forest(const TrainingData& data, const HyperParams& params, std::uint64_t seed);

/// standardize + fit_forest on the 18 kinematic features; stores the scaler
/// and feature names in the model.
ForestModel train(const Dataset& data, const HyperParams& params, std::uint64_t seed);

/// Mean tree output for raw (unscaled) features.
double predict(const ForestModel& model, std::span<const double> features);
std::vector<double> predict(const ForestModel& model, const Dataset& data);

struct Metrics {
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;  ///< NaN when r2_defined is false
  bool r2_defined = true;
  std::size_t n = 0;
};

Metrics compute_metrics(std::span<const double> truth, std::span<const double> predicted);
Metrics evaluate(const ForestModel& model, const Dataset& test);
/// Fixed-key `key=value` lines: n, mse, rmse, mae, r2, r2_defined.
std::string format_metrics(const Metrics& m, const std::string& prefix = "");

/// Fold index of each of `n` rows: a seeded shuffle dealt round-robin into k folds.
std::vector<std::size_t> kfold_assignment(std::size_t n, std::size_t k, std::uint64_t seed);

struct GridSearchResult {
  HyperParams best;
  std::size_t best_index = 0;
  std::vector<double> cell_mse;  ///< mean validation MSE per grid cell
};

/// Cross-product grid over the listed values, in declaration order
/// (n_trees outermost, m_try innermost).
std::vector<HyperParams> make_grid(const std::vector<std::size_t>& n_trees,
                                   const std::vector<std::size_t>& max_depth,
                                   const std::vector<std::size_t>& min_samples_leaf,
                                   const std::vector<std::size_t>& m_try, bool bootstrap = true);
/// n_trees {50,100,200} x max_depth {8,12,16} x min_samples_leaf {1,2,5}.
std::vector<HyperParams> default_grid();

/// k-fold CV of every grid cell with `train`; argmin of mean validation MSE,
/// ties resolved by grid order.
GridSearchResult grid_search(const Dataset& data, const std::vector<HyperParams>& grid,
                             std::size_t k_folds, std::uint64_t seed);

/// Versioned text format (.cfmodel). Doubles are written in shortest
/// round-trip form so save -> load -> save is byte-identical.
void save_model(const ForestModel& model, std::ostream& out);
void save_model(const ForestModel& model, const std::string& path);
std::string serialize_model(const ForestModel& model);
/// Throws ParseError (with byte offset) on malformed input and VersionError
/// on an unsupported major version.
ForestModel parse_model(const std::string& text);
ForestModel load_model(std::istream& in);
ForestModel load_model(const std::string& path);

}  // namespace cybersick
