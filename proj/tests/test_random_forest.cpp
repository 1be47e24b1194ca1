#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "swallow/evaluation.hpp"
#include "swallow/random_forest.hpp"
#include "swallow/synth.hpp"

using namespace swallow;

namespace {

LabeledDataset tiny(std::vector<std::vector<double>> rows, std::vector<int> labels) {
  LabeledDataset d;
  d.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    d.y.push_back(labels[i] ? Label::dysphagic : Label::normal);
    d.ids.push_back("r" + std::to_string(i));
  }
  return d;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

LabeledDataset shifted(std::vector<std::size_t> features, double gap, int per_class, std::uint64_t seed) {
  ClusterConfig c;
  c.n_per_class = per_class;
  c.seed = seed;
  for (auto f : features) c.shift[f] = gap;
  return generate_feature_clusters(c);
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Exhaustive root split: every feature and midpoint, no shortcuts.
Split brute_force_root(const LabeledDataset& d) {
  Split best;
  best.impurity_decrease = -1.0;
  const auto n = static_cast<double>(d.size());
  ClassCounts parent{0, 0};
  for (auto l : d.y) ++parent[static_cast<int>(l)];
  for (std::size_t f = 0; f < d.n_features(); ++f) {
    std::set<double> values;
    for (std::size_t i = 0; i < d.size(); ++i) values.insert(d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)));
    for (auto it = values.begin(); std::next(it) != values.end(); ++it) {
      const double t = 0.5 * (*it + *std::next(it));
      ClassCounts l{0, 0}, r{0, 0};
      for (std::size_t i = 0; i < d.size(); ++i) {
        auto& side = d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) <= t ? l : r;
        ++side[static_cast<int>(d.y[i])];
      }
      const double g = gini_impurity(parent) - (l[0] + l[1]) / n * gini_impurity(l) - (r[0] + r[1]) / n * gini_impurity(r);
      if (g > best.impurity_decrease + 1e-12) best = {f, t, g};
    }
  }
  return best;
}

}  // namespace

TEST(Gini, Examples) {
  EXPECT_EQ(gini_impurity({10, 0}), 0.0);
  EXPECT_EQ(gini_impurity({5, 5}), 0.5);
  EXPECT_EQ(gini_impurity({3, 1}), 0.375);
  try {
    gini_impurity({0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_node);
  }
}

TEST(BestSplit, Examples) {
  const auto d = tiny({{1}, {2}, {3}, {4}}, {0, 0, 1, 1});
  const std::vector<std::size_t> f0{0};
  const auto s = best_split(d.X, d.y, all_rows(4), f0);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->feature, 0u);
  EXPECT_EQ(s->threshold, 2.5);
  EXPECT_DOUBLE_EQ(s->impurity_decrease, 0.5);

  const auto pure = tiny({{1}, {2}, {3}}, {1, 1, 1});
  EXPECT_FALSE(best_split(pure.X, pure.y, all_rows(3), f0));

  const auto twin = tiny({{1, 10}, {2, 20}, {3, 30}, {4, 40}}, {0, 0, 1, 1});
  const std::vector<std::size_t> both{1, 0};
  const auto t = best_split(twin.X, twin.y, all_rows(4), both);
  ASSERT_TRUE(t);
  EXPECT_EQ(t->feature, 0u);
}

TEST(BestSplit, MatchesExhaustiveEnumeration) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const int n = 4 + static_cast<int>(rng.below(9));
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(n), std::vector<double>(25));
    std::vector<int> labels;
    for (auto& r : rows)
      for (auto& v : r) v = static_cast<double>(rng.below(6));
    for (int i = 0; i < n; ++i) labels.push_back(static_cast<int>(rng.below(2)));
    const auto d = tiny(rows, labels);
    ForestParams p;
    p.max_features = 25;
    p.bootstrap = false;
    p.n_trees = 1;
    Rng tree_rng(seed);
    const auto tree = train_tree(d, tree_rng, p);
    const auto ref = brute_force_root(d);
    if (ref.impurity_decrease <= 1e-12) {
      EXPECT_TRUE(tree.nodes[0].is_leaf());
      continue;
    }
    ASSERT_FALSE(tree.nodes[0].is_leaf());
    EXPECT_EQ(static_cast<std::size_t>(tree.nodes[0].feature), ref.feature) << seed;
    EXPECT_EQ(tree.nodes[0].threshold, ref.threshold) << seed;
  }
}

TEST(Tree, SingleClassAndSeparable) {
  ForestParams p;
  p.max_features = 1;
  Rng rng(1);
  const auto single = tiny({{1}, {2}, {3}}, {0, 0, 0});
  EXPECT_TRUE(train_tree(single, rng, p).nodes[0].is_leaf());

  p.bootstrap = false;
  const auto d = tiny({{1}, {2}, {3}, {4}}, {0, 0, 1, 1});
  const auto tree = train_tree(d, rng, p);
  EXPECT_EQ(tree.depth(), 1);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_EQ(tree.predict(d.X.row(i)), d.y[static_cast<std::size_t>(i)]);
}

TEST(Tree, StructuralInvariants) {
  const auto d = shifted({3}, 1.0, 60, 2);
  Rng rng(3);
  const auto tree = train_tree(d, rng, ForestParams{});
  for (const auto& node : tree.nodes) {
    EXPECT_EQ(node.counts[0] + node.counts[1], node.n_samples);
    if (!node.is_leaf()) {
      const auto& l = tree.nodes[static_cast<std::size_t>(node.left)];
      const auto& r = tree.nodes[static_cast<std::size_t>(node.right)];
      EXPECT_EQ(l.n_samples + r.n_samples, node.n_samples);
      EXPECT_EQ(l.counts[0] + r.counts[0], node.counts[0]);
    }
  }
  std::int64_t bag = 0;
  for (auto m : tree.in_bag) bag += m;
  EXPECT_EQ(bag, static_cast<std::int64_t>(d.size()));
  EXPECT_EQ(tree.nodes[0].n_samples, static_cast<std::int64_t>(d.size()));
}

TEST(Forest, ArityDeterminismAndErrors) {
  const auto d = shifted({0, 1}, 2.0, 50, 4);
  ForestParams p;
  const auto a = train_forest(d, p);
  EXPECT_EQ(a.trees.size(), 100u);
  const auto b = train_forest(d, p);
  const auto probe = shifted({}, 0.0, 40, 99);
  const auto pa = predict_all(a, probe.X);
  const auto pb = predict_all(b, probe.X);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].label, pb[i].label);
    EXPECT_EQ(pa[i].vote_fraction, pb[i].vote_fraction);
  }
  auto single = d.subset(std::vector<std::size_t>{0, 1, 2});
  try {
    train_forest(single, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::training);
  }
}

TEST(Forest, SerialEqualsParallel) {
  const auto d = shifted({5}, 1.0, 80, 6);
  ForestParams serial;
  ForestParams parallel = serial;
  parallel.threads = 4;
  EXPECT_EQ(forest_to_json(train_forest(d, serial)), forest_to_json(train_forest(d, parallel)));
}

TEST(Forest, OutOfBagOnSeparatedClusters) {
  const auto d = shifted({2, 9, 17}, 5.0, 100, 8);
  const auto forest = train_forest(d, ForestParams{});
  EXPECT_GE(out_of_bag_accuracy(forest, d), 0.95);
}

TEST(Forest, BootstrapUniqueFraction) {
  const auto d = shifted({0}, 1.0, 100, 10);
  const auto forest = train_forest(d, ForestParams{});
  double sum = 0.0;
  for (const auto& t : forest.trees) {
    std::size_t unique = 0;
    for (auto m : t.in_bag) unique += m > 0;
    sum += static_cast<double>(unique) / static_cast<double>(d.size());
  }
  const double mean = sum / static_cast<double>(forest.trees.size());
  EXPECT_GE(mean, 0.55);
  EXPECT_LE(mean, 0.70);
}

TEST(Forest, VotingRules) {
  DecisionTree yes;
  yes.n_features = 1;
  yes.nodes.push_back(TreeNode{});
  yes.nodes[0].counts = {0, 3};
  DecisionTree no = yes;
  no.nodes[0].counts = {3, 0};
  DecisionTree tie = yes;
  tie.nodes[0].counts = {2, 2};
  RandomForest f;
  f.n_features = 1;
  const Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(1);

  f.trees.assign(7, yes);
  auto p = predict(f, x);
  EXPECT_EQ(p.label, Label::dysphagic);
  EXPECT_EQ(p.vote_fraction, 1.0);

  f.trees.assign(50, yes);
  f.trees.insert(f.trees.end(), 50, no);
  p = predict(f, x);
  EXPECT_EQ(p.label, Label::dysphagic);
  EXPECT_EQ(p.vote_fraction, 0.5);
  std::reverse(f.trees.begin(), f.trees.end());
  EXPECT_EQ(predict(f, x).vote_fraction, 0.5);

  f.trees.assign(1, tie);
  EXPECT_EQ(predict(f, x).label, Label::dysphagic);
  f.trees.assign(1, no);
  EXPECT_EQ(predict(f, x).label, Label::normal);
}

TEST(Importance, SumsToOneAndSingleSplit) {
  const auto d = shifted({4, 11}, 1.5, 60, 12);
  const auto imp = feature_importance(train_forest(d, ForestParams{}));
  EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), 1.0, 1e-9);

  ForestParams stump;
  stump.n_trees = 1;
  stump.max_depth = 1;
  stump.max_features = 25;
  const auto only24 = shifted({feature::zcr}, 8.0, 40, 13);
  const auto single = feature_importance(train_forest(only24, stump));
  for (std::size_t f = 0; f < 25; ++f) EXPECT_EQ(single[f], f == feature::zcr ? 1.0 : 0.0);

  RandomForest leaves;
  leaves.n_features = 25;
  leaves.trees.resize(3);
  for (auto& t : leaves.trees) {
    t.nodes.push_back(TreeNode{});
    t.nodes[0].counts = {1, 1};
    t.nodes[0].n_samples = 2;
  }
  try {
    feature_importance(leaves);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::undefined_importance);
  }
}

TEST(Importance, ConstructedCrestSeparation) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto d = shifted({feature::crest}, 5.0, 100, 500 + seed);
    ForestParams p;
    p.seed = seed;
    wins += argmax(feature_importance(train_forest(d, p))) == feature::crest;
  }
  EXPECT_GE(wins, 95);
}

TEST(Forest, MonotoneTransformKeepsTrainingPredictions) {
  const auto d = shifted({1, 2}, 1.0, 50, 14);
  auto t = d;
  for (Eigen::Index i = 0; i < t.X.rows(); ++i) t.X(i, 1) = std::exp(t.X(i, 1)) * 3.0 - 1.0;
  ForestParams p;
  const auto a = predict_all(train_forest(d, p), d.X);
  const auto b = predict_all(train_forest(t, p), t.X);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].label, b[i].label);
}

TEST(Serialization, RoundTripPreservesPredictions) {
  const auto d = shifted({0, 3}, 1.0, 60, 15);
  const auto forest = train_forest(d, ForestParams{});
  const auto text = forest_to_json(forest).dump();
  const auto back = forest_from_json(nlohmann::json::parse(text));
  const auto probe = shifted({}, 0.0, 50, 16);
  const auto a = predict_all(forest, probe.X);
  const auto b = predict_all(back, probe.X);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].label, b[i].label);
    EXPECT_EQ(a[i].vote_fraction, b[i].vote_fraction);
  }
  EXPECT_EQ(forest_to_json(back).dump(), text);
  EXPECT_EQ(feature_importance(back), feature_importance(forest));

  auto bad = nlohmann::json::parse(text);
  bad["version"] = 99;
  EXPECT_THROW(forest_from_json(bad), Error);
  auto dangling = nlohmann::json::parse(text);
  dangling["trees"][0]["left"][0] = 100000;
  EXPECT_THROW(forest_from_json(dangling), Error);
}
