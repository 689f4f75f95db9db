#include "cybersick/forest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "cybersick/csv.hpp"
#include "cybersick/error.hpp"
#include "cybersick/parallel.hpp"

namespace cybersick {

void TrainingData::add(std::span<const double> features, double target) {
  if (n_features == 0 && y.empty()) n_features = features.size();
  if (features.size() != n_features) throw ParameterError("inconsistent feature count");
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(target);
}

TrainingData TrainingData::from(const Dataset& data) {
  TrainingData d;
  d.n_features = kFeatureCount;
  d.x.reserve(data.size() * kFeatureCount);
  d.y.reserve(data.size());
  for (const auto& row : data) d.add(row.features, row.target);
  return d;
}

void HyperParams::validate(std::size_t n_features) const {
  if (n_trees == 0 || max_depth == 0 || min_samples_leaf == 0 || m_try == 0) {
    throw ParameterError("hyperparameters must be positive: " + describe());
  }
  if (m_try > n_features) {
    throw ParameterError("m_try " + std::to_string(m_try) + " exceeds feature count " +
                         std::to_string(n_features));
  }
}

std::string HyperParams::describe() const {
  return "n_trees=" + std::to_string(n_trees) + " max_depth=" + std::to_string(max_depth) +
         " min_samples_leaf=" + std::to_string(min_samples_leaf) +
         " m_try=" + std::to_string(m_try) + " bootstrap=" + (bootstrap ? "1" : "0");
}

double Tree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                       : n.right);
  }
  return nodes[i].value;
}

namespace {

std::size_t subtree_depth(const Tree& t, int i) {
  const TreeNode& n = t.nodes[static_cast<std::size_t>(i)];
  if (n.is_leaf()) return 0;
  return 1 + std::max(subtree_depth(t, n.left), subtree_depth(t, n.right));
}

class TreeBuilder {
 public:
  TreeBuilder(const TrainingData& data, const HyperParams& params, Rng& rng)
      : data_(data), params_(params), rng_(rng) {}

  Tree build(std::vector<std::size_t> rows) {
    if (rows.empty()) throw ValidationError("cannot fit a tree on empty data");
    grow(rows.begin(), rows.end(), 0);
    return std::move(tree_);
  }

 private:
  using Iter = std::vector<std::size_t>::iterator;

  struct Candidate {
    int feature = -1;
    double threshold = 0.0;
    double sse = std::numeric_limits<double>::infinity();
  };

  std::vector<std::size_t> sample_features() {
    std::vector<std::size_t> all(data_.n_features);
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    if (params_.m_try >= all.size()) return all;
    for (std::size_t i = 0; i < params_.m_try; ++i) {
      std::swap(all[i], all[i + rng_.below(all.size() - i)]);
    }
    all.resize(params_.m_try);
    std::sort(all.begin(), all.end());
    return all;
  }

  int grow(Iter begin, Iter end, std::size_t depth) {
    const auto n = static_cast<std::size_t>(end - begin);
    const int index = static_cast<int>(tree_.nodes.size());
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (auto it = begin; it != end; ++it) {
      const double y = data_.y[*it];
      sum += y;
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
    const double mean = sum / static_cast<double>(n);
    TreeNode leaf;
    leaf.value = mean;
    tree_.nodes.push_back(leaf);
    if (depth >= params_.max_depth || n < 2 * params_.min_samples_leaf || lo == hi) return index;

    const Candidate best = find_split(begin, end, mean);
    if (best.feature < 0) return index;

    const auto f = static_cast<std::size_t>(best.feature);
    auto mid = std::stable_partition(begin, end, [&](std::size_t r) {
      return data_.x[r * data_.n_features + f] <= best.threshold;
    });
    const int left = grow(begin, mid, depth + 1);
    const int right = grow(mid, end, depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(index)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    node.value = 0.0;
    return index;
  }

  Candidate find_split(Iter begin, Iter end, double mean) {
    const auto n = static_cast<std::size_t>(end - begin);
    const std::size_t msl = params_.min_samples_leaf;
    // Centered targets keep the prefix-sum SSE free of cancellation.
    double total = 0.0;
    double total_sq = 0.0;
    for (auto it = begin; it != end; ++it) {
      const double c = data_.y[*it] - mean;
      total += c;
      total_sq += c * c;
    }
    const double tol = 1e-12 * total_sq;

    Candidate best;
    pairs_.resize(n);
    for (std::size_t f : sample_features()) {
      std::size_t j = 0;
      for (auto it = begin; it != end; ++it, ++j) {
        pairs_[j] = {data_.x[*it * data_.n_features + f], data_.y[*it] - mean};
      }
      std::stable_sort(pairs_.begin(), pairs_.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      double sl = 0.0;
      double sl2 = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        sl += pairs_[i].second;
        sl2 += pairs_[i].second * pairs_[i].second;
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (pairs_[i].first == pairs_[i + 1].first || nl < msl || nr < msl) continue;
        const double sr = total - sl;
        const double sr2 = total_sq - sl2;
        const double sse = (sl2 - sl * sl / static_cast<double>(nl)) +
                           (sr2 - sr * sr / static_cast<double>(nr));
        if (sse < best.sse - tol) {
          const double a = pairs_[i].first;
          const double b = pairs_[i + 1].first;
          double threshold = 0.5 * (a + b);
          if (!(threshold < b)) threshold = a;
          best = {static_cast<int>(f), threshold, sse};
        }
      }
    }
    return best;
  }

  const TrainingData& data_;
  const HyperParams& params_;
  Rng& rng_;
  Tree tree_;
  std::vector<std::pair<double, double>> pairs_;
};

}  // namespace

std::size_t Tree::depth() const { return nodes.empty() ? 0 : subtree_depth(*this, 0); }

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

Tree fit_tree(const TrainingData& data, std::span<const std::size_t> rows,
              const HyperParams& params, Rng& rng) {
  if (data.rows() == 0 || rows.empty()) throw ValidationError("cannot fit a tree on empty data");
  if (params.max_depth == 0 || params.min_samples_leaf == 0 || params.m_try == 0 ||
      params.m_try > data.n_features) {
    throw ParameterError("invalid tree parameters: " + params.describe());
  }
  return TreeBuilder(data, params, rng).build({rows.begin(), rows.end()});
}

Tree fit_tree(const TrainingData& data, const HyperParams& params, Rng& rng) {
  std::vector<std::size_t> rows(data.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return fit_tree(data, rows, params, rng);
}

Rng tree_rng(std::uint64_t seed, std::size_t index) { return Rng(derive_seed(seed, index)); }

ForestModel fit_forest(const TrainingData& data, const HyperParams& params, std::uint64_t seed) {
  if (data.rows() == 0) throw ValidationError("cannot fit a forest on empty data");
  params.validate(data.n_features);
  ForestModel model;
  model.n_features = data.n_features;
  model.scaler = Scaler::identity(data.n_features);
  model.params = params;
  model.seed = seed;
  for (std::size_t i = 0; i < data.n_features; ++i) {
    model.feature_names.push_back("f" + std::to_string(i));
  }
  model.trees.resize(params.n_trees);
  const std::size_t n = data.rows();
  parallel_for(params.n_trees, [&](std::size_t t) {
    Rng rng = tree_rng(seed, t);
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = params.bootstrap ? rng.below(n) : i;
    model.trees[t] = fit_tree(data, rows, params, rng);
  });
  return model;
}

ForestModel train(const Dataset& data, const HyperParams& params, std::uint64_t seed) {
  Standardized s = standardize(data);
  ForestModel model = fit_forest(TrainingData::from(s.data), params, seed);
  model.scaler = std::move(s.scaler);
  model.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());
  return model;
}

double predict(const ForestModel& model, std::span<const double> features) {
  if (features.size() != model.n_features) {
    throw ParameterError("model expects " + std::to_string(model.n_features) +
                         " features, got " + std::to_string(features.size()));
  }
  const std::vector<double> scaled = model.scaler.apply(features);
  double sum = 0.0;
  for (const Tree& t : model.trees) sum += t.predict(scaled);
  return sum / static_cast<double>(model.trees.size());
}

std::vector<double> predict(const ForestModel& model, const Dataset& data) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& row : data) out.push_back(predict(model, row.features));
  return out;
}

Metrics compute_metrics(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.empty()) throw ValidationError("cannot evaluate on an empty set");
  if (truth.size() != predicted.size()) throw ParameterError("truth/prediction length mismatch");
  const auto n = static_cast<double>(truth.size());
  double mean = 0.0;
  for (double y : truth) mean += y;
  mean /= n;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = truth[i] - predicted[i];
    ss_res += e * e;
    abs_sum += std::abs(e);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  Metrics m;
  m.n = truth.size();
  m.mse = ss_res / n;
  m.rmse = std::sqrt(m.mse);
  m.mae = abs_sum / n;
  if (ss_tot > 0.0) {
    m.r2 = 1.0 - ss_res / ss_tot;
  } else {
    m.r2 = std::numeric_limits<double>::quiet_NaN();
    m.r2_defined = false;
  }
  return m;
}

Metrics evaluate(const ForestModel& model, const Dataset& test) {
  if (test.empty()) throw ValidationError("cannot evaluate on an empty set");
  std::vector<double> truth;
  truth.reserve(test.size());
  for (const auto& row : test) truth.push_back(row.target);
  return compute_metrics(truth, predict(model, test));
}

std::string format_metrics(const Metrics& m, const std::string& prefix) {
  std::ostringstream out;
  out << prefix << "n=" << m.n << '\n';
  out << prefix << "mse=" << csv::format_double(m.mse) << '\n';
  out << prefix << "rmse=" << csv::format_double(m.rmse) << '\n';
  out << prefix << "mae=" << csv::format_double(m.mae) << '\n';
  out << prefix << "r2=" << (m.r2_defined ? csv::format_double(m.r2) : "nan") << '\n';
  out << prefix << "r2_defined=" << (m.r2_defined ? "true" : "false") << '\n';
  return out.str();
}

std::vector<std::size_t> kfold_assignment(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ParameterError("k-fold needs at least 2 folds");
  if (k > n) {
    throw ParameterError("cannot split " + std::to_string(n) + " rows into " +
                         std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::size_t> fold(n);
  for (std::size_t p = 0; p < n; ++p) fold[order[p]] = p % k;
  return fold;
}

std::vector<HyperParams> make_grid(const std::vector<std::size_t>& n_trees,
                                   const std::vector<std::size_t>& max_depth,
                                   const std::vector<std::size_t>& min_samples_leaf,
                                   const std::vector<std::size_t>& m_try, bool bootstrap) {
  std::vector<HyperParams> grid;
  for (auto t : n_trees)
    for (auto d : max_depth)
      for (auto l : min_samples_leaf)
        for (auto m : m_try) grid.push_back({t, d, l, m, bootstrap});
  return grid;
}

std::vector<HyperParams> default_grid() {
  return make_grid({50, 100, 200}, {8, 12, 16}, {1, 2, 5}, {6});
}

GridSearchResult grid_search(const Dataset& data, const std::vector<HyperParams>& grid,
                             std::size_t k_folds, std::uint64_t seed) {
  if (grid.empty()) throw ParameterError("grid search needs at least one cell");
  const std::vector<std::size_t> fold = kfold_assignment(data.size(), k_folds, seed);
  std::vector<Dataset> train_parts(k_folds);
  std::vector<Dataset> val_parts(k_folds);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t f = 0; f < k_folds; ++f) {
      (fold[i] == f ? val_parts[f] : train_parts[f]).push_back(data[i]);
    }
  }
  GridSearchResult result;
  result.cell_mse.reserve(grid.size());
  for (const HyperParams& cell : grid) {
    double total = 0.0;
    for (std::size_t f = 0; f < k_folds; ++f) {
      const ForestModel model = train(train_parts[f], cell, seed);
      total += evaluate(model, val_parts[f]).mse;
    }
    result.cell_mse.push_back(total / static_cast<double>(k_folds));
  }
  result.best_index = static_cast<std::size_t>(
      std::min_element(result.cell_mse.begin(), result.cell_mse.end()) - result.cell_mse.begin());
  result.best = grid[result.best_index];
  return result;
}

// ---------------------------------------------------------------------------
// .cfmodel text format

namespace {

void write_subtree(std::ostream& out, const Tree& tree, int i, std::size_t depth) {
  const TreeNode& n = tree.nodes[static_cast<std::size_t>(i)];
  out << std::string(2 * depth, ' ');
  if (n.is_leaf()) {
    out << "leaf " << csv::format_double(n.value) << '\n';
    return;
  }
  out << "split " << n.feature << ' ' << csv::format_double(n.threshold) << '\n';
  write_subtree(out, tree, n.left, depth + 1);
  write_subtree(out, tree, n.right, depth + 1);
}

template <typename T, typename Fn>
void write_list(std::ostream& out, const char* key, const std::vector<T>& values, Fn fmt) {
  out << key;
  for (const auto& v : values) out << ' ' << fmt(v);
  out << '\n';
}

class Tokenizer {
 public:
  explicit Tokenizer(const std::string& text) : text_(text) {}

  std::size_t offset() const { return pos_; }

  std::string_view next(const char* what) {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ >= text_.size()) {
      throw ParseError(std::string("unexpected end of file, expected ") + what, text_.size());
    }
    start_ = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return std::string_view(text_).substr(start_, pos_ - start_);
  }

  void expect(std::string_view keyword) {
    const auto tok = next(std::string(keyword).c_str());
    if (tok != keyword) fail("expected '" + std::string(keyword) + "', found '" + std::string(tok) + "'");
  }

  std::size_t next_uint(const char* what) {
    const auto tok = next(what);
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
      fail(std::string("expected unsigned integer for ") + what);
    }
    return v;
  }

  double next_double(const char* what) {
    const auto tok = next(what);
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v)) {
      fail(std::string("expected finite number for ") + what);
    }
    return v;
  }

  bool at_end() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return pos_ >= text_.size();
  }

  [[noreturn]] void fail(const std::string& message) const { throw ParseError(message, start_); }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
  std::size_t start_ = 0;
};

constexpr std::size_t kMaxParseDepth = 1024;

int read_subtree(Tokenizer& tok, Tree& tree, std::size_t n_features, std::size_t depth) {
  if (depth > kMaxParseDepth) tok.fail("tree nesting too deep");
  const auto kind = tok.next("node");
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (kind == "leaf") {
    tree.nodes.back().value = tok.next_double("leaf value");
    return index;
  }
  if (kind != "split") tok.fail("expected 'leaf' or 'split', found '" + std::string(kind) + "'");
  const std::size_t feature = tok.next_uint("split feature");
  if (feature >= n_features) tok.fail("split feature index out of range");
  const double threshold = tok.next_double("split threshold");
  const int left = read_subtree(tok, tree, n_features, depth + 1);
  const int right = read_subtree(tok, tree, n_features, depth + 1);
  TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
  node.feature = static_cast<int>(feature);
  node.threshold = threshold;
  node.left = left;
  node.right = right;
  return index;
}

}  // namespace

void save_model(const ForestModel& model, std::ostream& out) {
  if (model.feature_names.size() != model.n_features || model.scaler.size() != model.n_features) {
    throw ParameterError("model metadata does not match its feature count");
  }
  for (const auto& name : model.feature_names) {
    if (name.empty() || name.find_first_of(" \t\r\n") != std::string::npos) {
      throw ParameterError("feature names must be non-empty and whitespace-free");
    }
  }
  auto num = [](double v) { return csv::format_double(v); };
  out << "cfmodel " << kModelFormatMajor << '.' << kModelFormatMinor << '\n';
  out << "n_features " << model.n_features << '\n';
  write_list(out, "feature_names", model.feature_names, [](const std::string& s) { return s; });
  out << "seed " << model.seed << '\n';
  out << "n_trees " << model.params.n_trees << '\n';
  out << "max_depth " << model.params.max_depth << '\n';
  out << "min_samples_leaf " << model.params.min_samples_leaf << '\n';
  out << "m_try " << model.params.m_try << '\n';
  out << "bootstrap " << (model.params.bootstrap ? 1 : 0) << '\n';
  write_list(out, "scaler_mean", model.scaler.mean, num);
  write_list(out, "scaler_std", model.scaler.std, num);
  std::vector<int> pass(model.scaler.passthrough.begin(), model.scaler.passthrough.end());
  write_list(out, "scaler_passthrough", pass, [](int v) { return std::to_string(v); });
  out << "trees " << model.trees.size() << '\n';
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    out << "tree " << t << '\n';
    write_subtree(out, model.trees[t], 0, 0);
  }
  out << "end\n";
}

std::string serialize_model(const ForestModel& model) {
  std::ostringstream out;
  save_model(model, out);
  return out.str();
}

void save_model(const ForestModel& model, const std::string& path) {
  const std::string text = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model '" + path + "'");
  out << text;
  if (!out) throw Error("failed writing model '" + path + "'");
}

ForestModel parse_model(const std::string& text) {
  Tokenizer tok(text);
  const auto magic = tok.next("format tag");
  if (magic != "cfmodel") tok.fail("not a cfmodel file");
  const auto version = tok.next("format version");
  int major = 0;
  int minor = 0;
  {
    const auto dot = version.find('.');
    auto [p1, e1] = std::from_chars(version.data(), version.data() + dot, major);
    auto [p2, e2] = dot == std::string_view::npos
                        ? std::from_chars_result{nullptr, std::errc::invalid_argument}
                        : std::from_chars(version.data() + dot + 1,
                                          version.data() + version.size(), minor);
    if (e1 != std::errc() || e2 != std::errc() || p1 != version.data() + dot ||
        p2 != version.data() + version.size()) {
      tok.fail("malformed format version '" + std::string(version) + "'");
    }
  }
  if (major != kModelFormatMajor) {
    throw VersionError("unsupported cfmodel major version " + std::to_string(major) +
                       " (this build reads " + std::to_string(kModelFormatMajor) + ".x)");
  }

  ForestModel m;
  tok.expect("n_features");
  m.n_features = tok.next_uint("n_features");
  if (m.n_features == 0) tok.fail("n_features must be positive");
  tok.expect("feature_names");
  for (std::size_t i = 0; i < m.n_features; ++i) {
    m.feature_names.emplace_back(tok.next("feature name"));
  }
  tok.expect("seed");
  m.seed = tok.next_uint("seed");
  tok.expect("n_trees");
  m.params.n_trees = tok.next_uint("n_trees");
  tok.expect("max_depth");
  m.params.max_depth = tok.next_uint("max_depth");
  tok.expect("min_samples_leaf");
  m.params.min_samples_leaf = tok.next_uint("min_samples_leaf");
  tok.expect("m_try");
  m.params.m_try = tok.next_uint("m_try");
  tok.expect("bootstrap");
  const std::size_t bootstrap = tok.next_uint("bootstrap");
  if (bootstrap > 1) tok.fail("bootstrap must be 0 or 1");
  m.params.bootstrap = bootstrap == 1;

  m.scaler = Scaler::identity(m.n_features);
  tok.expect("scaler_mean");
  for (auto& v : m.scaler.mean) v = tok.next_double("scaler mean");
  tok.expect("scaler_std");
  for (auto& v : m.scaler.std) v = tok.next_double("scaler std");
  tok.expect("scaler_passthrough");
  for (std::size_t i = 0; i < m.n_features; ++i) {
    const std::size_t p = tok.next_uint("scaler passthrough flag");
    if (p > 1) tok.fail("passthrough flag must be 0 or 1");
    m.scaler.passthrough[i] = p == 1;
    if (!m.scaler.passthrough[i] && !(m.scaler.std[i] > 0.0)) {
      tok.fail("non-positive scaler std for a scaled feature");
    }
  }

  tok.expect("trees");
  const std::size_t n_trees = tok.next_uint("tree count");
  if (n_trees != m.params.n_trees) tok.fail("tree count does not match n_trees");
  if (n_trees == 0) tok.fail("model has no trees");
  m.trees.resize(n_trees);
  for (std::size_t t = 0; t < n_trees; ++t) {
    tok.expect("tree");
    if (tok.next_uint("tree index") != t) tok.fail("trees out of order");
    read_subtree(tok, m.trees[t], m.n_features, 0);
  }
  tok.expect("end");
  if (!tok.at_end()) throw ParseError("trailing content after 'end'", tok.offset());
  return m;
}

ForestModel load_model(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

ForestModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model '" + path + "'");
  return load_model(in);
}

}  // namespace cybersick
