#pragma once

// CART classification trees and a bagged random forest with Gini splits and
// mean-decrease-in-impurity feature importance.
//
// Every tree draws from its own generator seeded by derive_seed(seed, tree
// index), so a forest is the same whether its trees are grown serially or on
// several threads.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "swallow/dataset.hpp"
#include "swallow/error.hpp"
#include "swallow/random.hpp"

namespace swallow {

using ClassCounts = std::array<std::int64_t, 2>;

/// 1 - sum of squared class proportions.
inline double gini_impurity(const ClassCounts& counts) {
  const auto n = counts[0] + counts[1];
  if (counts[0] < 0 || counts[1] < 0) throw Error(Errc::domain, "negative class count");
  if (n == 0) throw Error(Errc::empty_node, "impurity of a node with no samples");
  const double p0 = static_cast<double>(counts[0]) / static_cast<double>(n);
  const double p1 = static_cast<double>(counts[1]) / static_cast<double>(n);
  return 1.0 - (p0 * p0 + p1 * p1);
}

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity_decrease = 0.0;  ///< G(parent) - n_L/n G(L) - n_R/n G(R)
};

/// Gains at or below this are treated as zero (float noise from splits whose
/// children keep the parent's class mix).
inline constexpr double kMinImpurityDecrease = 1e-12;

/// Exhaustive threshold search over `candidate_features` for the rows in
/// `rows` (duplicates allowed, as in a bootstrap sample). Thresholds are
/// midpoints between consecutive distinct values; the left child takes
/// values <= threshold. Equal gains keep the lower feature, then the lower
/// threshold. Returns nothing when no split improves impurity.
inline std::optional<Split> best_split(const Eigen::MatrixXd& X, std::span<const Label> y,
                                       std::span<const std::size_t> rows,
                                       std::span<const std::size_t> candidate_features, int min_samples_leaf = 1) {
  if (rows.size() < 2 || candidate_features.empty()) return std::nullopt;
  ClassCounts parent{0, 0};
  for (std::size_t r : rows) ++parent[static_cast<int>(y[r])];
  const double parent_gini = gini_impurity(parent);
  if (parent_gini <= 0.0) return std::nullopt;

  std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
  std::sort(features.begin(), features.end());

  const auto n = static_cast<double>(rows.size());
  const auto min_leaf = static_cast<std::size_t>(std::max(min_samples_leaf, 1));
  std::optional<Split> best;
  std::vector<std::pair<double, int>> column(rows.size());
  for (std::size_t f : features) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      column[i] = {X(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(f)), static_cast<int>(y[rows[i]])};
    }
    std::sort(column.begin(), column.end());
    ClassCounts left{0, 0};
    for (std::size_t i = 1; i < column.size(); ++i) {
      ++left[column[i - 1].second];
      if (column[i].first == column[i - 1].first) continue;
      if (i < min_leaf || column.size() - i < min_leaf) continue;
      const ClassCounts right{parent[0] - left[0], parent[1] - left[1]};
      const double n_left = static_cast<double>(i);
      const double decrease =
          parent_gini - n_left / n * gini_impurity(left) - (n - n_left) / n * gini_impurity(right);
      if (decrease <= kMinImpurityDecrease) continue;
      if (!best || decrease > best->impurity_decrease) {
        double threshold = 0.5 * (column[i - 1].first + column[i].first);
        if (threshold >= column[i].first) threshold = column[i - 1].first;
        best = Split{f, threshold, decrease};
      }
    }
  }
  return best;
}

struct ForestParams {
  int n_trees = 100;
  /// 0 selects floor(sqrt(feature count)).
  int max_features = 0;
  int min_samples_leaf = 1;
  /// 0 means unlimited.
  int max_depth = 0;
  bool bootstrap = true;
  std::uint64_t seed = 42;
  /// Worker threads for training; does not affect the result.
  int threads = 1;

  int resolved_max_features(std::size_t n_features) const {
    const int all = static_cast<int>(n_features);
    if (max_features > 0) return std::min(max_features, all);
    return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_features)))));
  }
};

struct TreeNode {
  int feature = -1;  ///< -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  ClassCounts counts{0, 0};
  std::int64_t n_samples = 0;
  double impurity_decrease = 0.0;

  bool is_leaf() const { return feature < 0; }
};

inline Label majority(const ClassCounts& counts) {
  return counts[1] >= counts[0] ? Label::dysphagic : Label::normal;
}

struct DecisionTree {
  std::vector<TreeNode> nodes;  ///< nodes[0] is the root
  std::size_t n_features = 0;
  /// Bootstrap multiplicity of each training row; empty for loaded models.
  std::vector<std::uint32_t> in_bag;

  template <typename Row>
  const TreeNode& leaf_for(const Row& x) const {
    const TreeNode* node = &nodes.front();
    while (!node->is_leaf()) {
      node = &nodes[static_cast<std::size_t>(x[node->feature] <= node->threshold ? node->left : node->right)];
    }
    return *node;
  }

  template <typename Row>
  Label predict(const Row& x) const {
    return majority(leaf_for(x).counts);
  }

  int depth() const { return depth_from(0); }

 private:
  int depth_from(int index) const {
    const auto& node = nodes[static_cast<std::size_t>(index)];
    if (node.is_leaf()) return 0;
    return 1 + std::max(depth_from(node.left), depth_from(node.right));
  }
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const LabeledDataset& data, const ForestParams& params, Rng& rng)
      : data_(data), params_(params), rng_(rng), n_features_(data.n_features()),
        max_features_(static_cast<std::size_t>(params.resolved_max_features(data.n_features()))) {}

  DecisionTree build(std::vector<std::size_t> rows, std::vector<std::uint32_t> in_bag) {
    tree_.n_features = n_features_;
    tree_.in_bag = std::move(in_bag);
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t>& rows, int depth) {
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    TreeNode node;
    for (std::size_t r : rows) ++node.counts[static_cast<int>(data_.y[r])];
    node.n_samples = static_cast<std::int64_t>(rows.size());

    const bool pure = node.counts[0] == 0 || node.counts[1] == 0;
    const bool too_small = rows.size() < 2 * static_cast<std::size_t>(std::max(params_.min_samples_leaf, 1));
    const bool too_deep = params_.max_depth > 0 && depth >= params_.max_depth;
    std::optional<Split> split;
    if (!pure && !too_small && !too_deep) {
      split = best_split(data_.X, data_.y, rows, draw_features(), params_.min_samples_leaf);
    }
    if (!split) {
      tree_.nodes[static_cast<std::size_t>(index)] = node;
      return index;
    }

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (std::size_t r : rows) {
      const double v = data_.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(split->feature));
      (v <= split->threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    node.feature = static_cast<int>(split->feature);
    node.threshold = split->threshold;
    node.impurity_decrease = split->impurity_decrease;
    node.left = grow(left_rows, depth + 1);
    node.right = grow(right_rows, depth + 1);
    tree_.nodes[static_cast<std::size_t>(index)] = node;
    return index;
  }

  std::vector<std::size_t> draw_features() {
    std::vector<std::size_t> pool(n_features_);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < max_features_; ++i) {
      const std::size_t j = i + rng_.below(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(max_features_);
    return pool;
  }

  const LabeledDataset& data_;
  const ForestParams& params_;
  Rng& rng_;
  std::size_t n_features_;
  std::size_t max_features_;
  DecisionTree tree_;
};

}  // namespace detail

/// Grows one tree. With params.bootstrap the tree sees n rows drawn with
/// replacement from `rng`; candidate features at each node are drawn without
/// replacement from the same generator.
inline DecisionTree train_tree(const LabeledDataset& data, Rng& rng, const ForestParams& params) {
  data.validate();
  if (data.size() == 0) throw Error(Errc::training, "cannot train a tree on an empty dataset");
  if (data.n_features() == 0) throw Error(Errc::training, "dataset has no features");
  const std::size_t n = data.size();
  std::vector<std::size_t> rows(n);
  std::vector<std::uint32_t> in_bag(n, 0);
  if (params.bootstrap) {
    for (auto& r : rows) {
      r = rng.below(n);
      ++in_bag[r];
    }
    std::sort(rows.begin(), rows.end());
  } else {
    std::iota(rows.begin(), rows.end(), 0);
    std::fill(in_bag.begin(), in_bag.end(), 1u);
  }
  return detail::TreeBuilder(data, params, rng).build(std::move(rows), std::move(in_bag));
}

struct RandomForest {
  std::vector<DecisionTree> trees;
  ForestParams params;
  std::size_t n_features = 0;
};

inline RandomForest train_forest(const LabeledDataset& data, const ForestParams& params = {}) {
  data.validate();
  if (params.n_trees < 1) throw Error(Errc::parameter, "forest needs at least one tree");
  if (params.min_samples_leaf < 1 || params.max_depth < 0) throw Error(Errc::parameter, "invalid tree limits");
  if (data.size() < 2 || data.count(Label::normal) == 0 || data.count(Label::dysphagic) == 0) {
    throw Error(Errc::training, "training data must contain both classes");
  }
  RandomForest forest;
  forest.params = params;
  forest.n_features = data.n_features();
  forest.trees.resize(static_cast<std::size_t>(params.n_trees));

  auto grow = [&](std::size_t i) {
    Rng rng(derive_seed(params.seed, i));
    forest.trees[i] = train_tree(data, rng, params);
  };
  const auto workers = static_cast<std::size_t>(std::clamp(params.threads, 1, params.n_trees));
  if (workers == 1) {
    for (std::size_t i = 0; i < forest.trees.size(); ++i) grow(i);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < forest.trees.size(); i += workers) grow(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return forest;
}

struct Prediction {
  Label label = Label::dysphagic;
  double vote_fraction = 0.0;  ///< share of trees voting dysphagic
};

/// Majority vote over trees; an even split goes to dysphagic.
template <typename Row>
Prediction predict(const RandomForest& forest, const Row& x) {
  std::size_t dysphagic = 0;
  for (const auto& tree : forest.trees) dysphagic += tree.predict(x) == Label::dysphagic;
  Prediction p;
  const std::size_t total = forest.trees.size();
  p.vote_fraction = total ? static_cast<double>(dysphagic) / static_cast<double>(total) : 0.0;
  p.label = 2 * dysphagic >= total ? Label::dysphagic : Label::normal;
  return p;
}

inline std::vector<Prediction> predict_all(const RandomForest& forest, const Eigen::MatrixXd& X) {
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::RowVectorXd row = X.row(i);
    out.push_back(predict(forest, row));
  }
  return out;
}

/// Accuracy of votes restricted to trees that did not see each row. Rows that
/// every tree saw are skipped. Requires in-bag bookkeeping from training.
inline double out_of_bag_accuracy(const RandomForest& forest, const LabeledDataset& data) {
  std::size_t correct = 0;
  std::size_t scored = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::size_t votes = 0;
    std::size_t dysphagic = 0;
    const Eigen::RowVectorXd row = data.X.row(static_cast<Eigen::Index>(i));
    for (const auto& tree : forest.trees) {
      if (tree.in_bag.size() != data.size()) throw Error(Errc::shape, "tree lacks in-bag data for this dataset");
      if (tree.in_bag[i] != 0) continue;
      ++votes;
      dysphagic += tree.predict(row) == Label::dysphagic;
    }
    if (votes == 0) continue;
    const Label label = 2 * dysphagic >= votes ? Label::dysphagic : Label::normal;
    correct += label == data.y[i];
    ++scored;
  }
  return scored ? static_cast<double>(correct) / static_cast<double>(scored) : 0.0;
}

/// Mean decrease in impurity. Each split adds (node samples / root samples) x
/// its impurity decrease to its feature; tree vectors are normalized to sum 1
/// (single-leaf trees add zeros) and averaged, then renormalized.
inline std::vector<double> feature_importance(const RandomForest& forest) {
  std::vector<double> total(forest.n_features, 0.0);
  bool any_split = false;
  for (const auto& tree : forest.trees) {
    std::vector<double> local(forest.n_features, 0.0);
    const auto root = static_cast<double>(tree.nodes.front().n_samples);
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      local[static_cast<std::size_t>(node.feature)] += static_cast<double>(node.n_samples) / root * node.impurity_decrease;
    }
    const double sum = std::accumulate(local.begin(), local.end(), 0.0);
    if (sum <= 0.0) continue;
    any_split = true;
    for (std::size_t f = 0; f < local.size(); ++f) total[f] += local[f] / sum;
  }
  if (!any_split) throw Error(Errc::undefined_importance, "every tree is a single leaf");
  const double sum = std::accumulate(total.begin(), total.end(), 0.0);
  for (auto& v : total) v /= sum;
  return total;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr int kForestFormatVersion = 1;

inline nlohmann::json forest_to_json(const RandomForest& forest) {
  using nlohmann::json;
  json trees = json::array();
  for (const auto& tree : forest.trees) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         counts = json::array(), samples = json::array(), decrease = json::array();
    for (const auto& n : tree.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      counts.push_back({n.counts[0], n.counts[1]});
      samples.push_back(n.n_samples);
      decrease.push_back(n.impurity_decrease);
    }
    trees.push_back({{"feature", feature},
                     {"threshold", threshold},
                     {"left", left},
                     {"right", right},
                     {"class_counts", counts},
                     {"n_samples", samples},
                     {"impurity_decrease", decrease}});
  }
  const auto& p = forest.params;
  return {{"format", "swallow-random-forest"},
          {"version", kForestFormatVersion},
          {"n_features", forest.n_features},
          {"params",
           {{"n_trees", p.n_trees},
            {"max_features", p.max_features},
            {"min_samples_leaf", p.min_samples_leaf},
            {"max_depth", p.max_depth},
            {"bootstrap", p.bootstrap},
            {"seed", p.seed}}},
          {"trees", trees}};
}

inline RandomForest forest_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "swallow-random-forest") {
      throw Error(Errc::format, "not a random forest model");
    }
    if (j.at("version").get<int>() != kForestFormatVersion) {
      throw Error(Errc::format, "unsupported model version " + j.at("version").dump());
    }
    RandomForest forest;
    forest.n_features = j.at("n_features").get<std::size_t>();
    const auto& p = j.at("params");
    forest.params.n_trees = p.at("n_trees").get<int>();
    forest.params.max_features = p.at("max_features").get<int>();
    forest.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
    forest.params.max_depth = p.at("max_depth").get<int>();
    forest.params.bootstrap = p.at("bootstrap").get<bool>();
    forest.params.seed = p.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("trees")) {
      DecisionTree tree;
      tree.n_features = forest.n_features;
      const auto& feature = t.at("feature");
      const std::size_t count = feature.size();
      for (const char* key : {"threshold", "left", "right", "class_counts", "n_samples", "impurity_decrease"}) {
        if (t.at(key).size() != count) throw Error(Errc::format, std::string("node array '") + key + "' length mismatch");
      }
      if (count == 0) throw Error(Errc::format, "tree without nodes");
      for (std::size_t i = 0; i < count; ++i) {
        TreeNode n;
        n.feature = feature[i].get<int>();
        n.threshold = t["threshold"][i].get<double>();
        n.left = t["left"][i].get<int>();
        n.right = t["right"][i].get<int>();
        n.counts = {t["class_counts"][i].at(0).get<std::int64_t>(), t["class_counts"][i].at(1).get<std::int64_t>()};
        n.n_samples = t["n_samples"][i].get<std::int64_t>();
        n.impurity_decrease = t["impurity_decrease"][i].get<double>();
        if (!n.is_leaf()) {
          const auto in_range = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(count); };
          if (static_cast<std::size_t>(n.feature) >= forest.n_features || !in_range(n.left) || !in_range(n.right)) {
            throw Error(Errc::format, "node " + std::to_string(i) + " has invalid feature or child index");
          }
        }
        tree.nodes.push_back(n);
      }
      forest.trees.push_back(std::move(tree));
    }
    if (forest.trees.size() != static_cast<std::size_t>(forest.params.n_trees)) {
      throw Error(Errc::format, "tree count does not match params.n_trees");
    }
    return forest;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format, std::string("model JSON: ") + e.what());
  }
}

}  // namespace swallow
