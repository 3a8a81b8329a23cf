#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "patchguard/error.hpp"
#include "patchguard/learner.hpp"

using namespace patchguard;

namespace {

Dataset make_dataset(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
  Dataset ds;
  ds.schema_version = "test";
  for (std::size_t c = 0; c < rows.at(0).size(); ++c) ds.columns.push_back("f" + std::to_string(c));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ds.rows.push_back({"r" + std::to_string(i), "p", "t", labels[i] ? Label::kOverfitting : Label::kCorrect, rows[i], {}});
  }
  return ds;
}

Hyperparams stump_params() {
  Hyperparams hp;
  hp.max_depth = 1;
  hp.rounds = 1;
  hp.min_split_gain = 0;
  return hp;
}

// Exhaustive search over every midpoint between distinct sorted values,
// evaluating the regularized gain directly from the label sums.
struct OracleSplit {
  double gain = -std::numeric_limits<double>::infinity();
  std::size_t feature = 0;
  double threshold = 0;
};

OracleSplit oracle_stump(const Dataset& ds, double base, double lambda) {
  const double p = 1.0 / (1.0 + std::exp(-base));
  std::vector<OracleSplit> all;
  for (std::size_t f = 0; f < ds.width(); ++f) {
    std::vector<double> vals;
    for (const auto& r : ds.rows) vals.push_back(r.values[f]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
      double t = (vals[i] + vals[i + 1]) / 2;
      double gl = 0, hl = 0, gr = 0, hr = 0;
      for (const auto& r : ds.rows) {
        double g = p - (r.label == Label::kOverfitting ? 1 : 0);
        double h = p * (1 - p);
        if (r.values[f] < t) {
          gl += g;
          hl += h;
        } else {
          gr += g;
          hr += h;
        }
      }
      double gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                           (gl + gr) * (gl + gr) / (hl + hr + lambda));
      all.push_back({gain, f, t});
    }
  }
  OracleSplit best;
  for (const auto& c : all) best.gain = std::max(best.gain, c.gain);
  for (const auto& c : all) {
    if (c.gain >= best.gain * (1 - 1e-9)) return c;
  }
  return best;
}

Dataset blobs(std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    int y = i % 2;
    double cx = y ? 4.0 : -4.0;
    rows.push_back({cx + (rng.uniform() - 0.5) * 4, (rng.uniform() - 0.5) * 6, rng.uniform()});
    labels.push_back(y);
  }
  return make_dataset(rows, labels);
}

}  // namespace

TEST(Hyperparams, Defaults) {
  Hyperparams hp;
  EXPECT_DOUBLE_EQ(hp.learning_rate, 0.3);
  EXPECT_EQ(hp.max_depth, 6);
  EXPECT_DOUBLE_EQ(hp.min_split_gain, 0.5);
  EXPECT_EQ(hp.rounds, 100);
  EXPECT_EQ(hp.seed, 42u);
  Hyperparams bad;
  bad.max_depth = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Train, SingleClassGivesDegenerateModel) {
  auto ds = make_dataset({{1}, {2}, {3}}, {1, 1, 1});
  auto m = train(ds);
  EXPECT_TRUE(m.trees.empty());
  EXPECT_GT(predict_proba(m, ds.rows[0].values), 0.99);
  for (const auto& [name, count] : feature_importance(m)) EXPECT_EQ(count, 0u);
}

TEST(Train, OneDimensionalStump) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (double v : {1.0, 2.0, 3.0, 4.5, 5.0, 6.0, 7.0, 9.0}) {
    rows.push_back({v});
    labels.push_back(v > 5 ? 1 : 0);
  }
  auto m = train(make_dataset(rows, labels), stump_params());
  ASSERT_EQ(m.trees.size(), 1u);
  const auto& root = m.trees[0].nodes[0];
  ASSERT_FALSE(root.leaf);
  EXPECT_GT(root.threshold, 5.0);
  EXPECT_LE(root.threshold, 6.0);
}

TEST(Train, StumpMatchesExhaustiveOracle) {
  Rng rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 2 + rng.below(29);
    std::size_t width = 1 + rng.below(3);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> r(width);
      for (auto& v : r) v = static_cast<double>(rng.below(12));
      rows.push_back(r);
      labels.push_back(static_cast<int>(rng.below(2)));
    }
    labels[0] = 0;
    labels[1] = 1;
    auto ds = make_dataset(rows, labels);
    auto m = train(ds, stump_params());
    auto oracle = oracle_stump(ds, m.base_score, m.hyperparams.reg_lambda);
    if (oracle.gain <= 1e-12) {
      EXPECT_TRUE(m.trees.empty()) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(m.trees.size(), 1u) << "trial " << trial;
    const auto& root = m.trees[0].nodes[0];
    ASSERT_FALSE(root.leaf);
    EXPECT_NEAR(root.gain, oracle.gain, 1e-9) << "trial " << trial;
    EXPECT_EQ(root.feature, oracle.feature) << "trial " << trial;
    EXPECT_DOUBLE_EQ(root.threshold, oracle.threshold) << "trial " << trial;
  }
}

TEST(Train, StumpLeafWeightsByHand) {
  auto ds = make_dataset({{0}, {0}, {1}, {1}}, {0, 0, 1, 1});
  auto m = train(ds, stump_params());
  ASSERT_EQ(m.trees.size(), 1u);
  EXPECT_DOUBLE_EQ(m.base_score, 0.0);
  const auto& t = m.trees[0];
  double left = t.nodes[t.nodes[0].left].weight;
  EXPECT_NEAR(left, -(2 * 0.5) / (2 * 0.25 + 1) * 0.3, 1e-12);
  double expected = 1.0 / (1.0 + std::exp(-(m.base_score + left)));
  EXPECT_NEAR(predict_proba(m, std::vector<double>{0}), expected, 1e-12);
}

TEST(Train, LossNonIncreasing) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 60; ++i) {
      rows.push_back({rng.uniform(), rng.uniform(), static_cast<double>(rng.below(3))});
      labels.push_back(rng.uniform() < 0.3 + 0.4 * rows.back()[0] ? 1 : 0);
    }
    Hyperparams hp;
    hp.rounds = 30;
    auto m = train(make_dataset(rows, labels), hp);
    for (std::size_t i = 1; i < m.training_loss.size(); ++i) {
      EXPECT_LE(m.training_loss[i], m.training_loss[i - 1] + 1e-12) << "trial " << trial << " round " << i;
    }
  }
}

TEST(Train, SeparableBlobsWithDefaults) {
  auto ds = blobs(100, 11);
  auto m = train(ds);
  std::size_t right = 0;
  for (const auto& r : ds.rows) right += classify(m, r.values) == *r.label;
  EXPECT_GE(static_cast<double>(right) / static_cast<double>(ds.rows.size()), 0.99);
}

TEST(Train, GainGateAndDepth) {
  auto ds = blobs(80, 3);
  for (double gamma : {0.0, 0.5, 2.0}) {
    Hyperparams hp;
    hp.min_split_gain = gamma;
    hp.max_depth = 3;
    hp.rounds = 20;
    auto m = train(ds, hp);
    for (const auto& t : m.trees) {
      EXPECT_LE(t.depth(), 3);
      for (const auto& n : t.nodes) {
        if (!n.leaf) {
          EXPECT_GE(n.gain, gamma);
          EXPECT_LT(n.feature, ds.width());
        }
      }
    }
  }
}

TEST(Train, DeterministicSerialization) {
  auto ds = blobs(50, 8);
  EXPECT_EQ(train(ds).to_json(), train(ds).to_json());
}

TEST(Train, Errors) {
  EXPECT_THROW(train(Dataset{}), EmptyDataset);
  auto ds = make_dataset({{1}, {2}}, {0, 1});
  ds.rows[0].values.push_back(3);
  EXPECT_THROW(train(ds), SchemaMismatch);
  auto unl = make_dataset({{1}, {2}}, {0, 1});
  unl.rows[0].label.reset();
  EXPECT_THROW(train(unl), SchemaMismatch);
}

TEST(Predict, ZeroTreeModelAtZeroIsHalf) {
  Model m;
  m.columns = {"a"};
  EXPECT_DOUBLE_EQ(predict_proba(m, std::vector<double>{3}), 0.5);
  EXPECT_EQ(classify(m, {3}), Label::kOverfitting);
  EXPECT_THROW(predict_proba(m, std::vector<double>{1, 2}), SchemaMismatch);
  FeatureVector v{"other", {1}};
  EXPECT_THROW(predict_proba(m, v), SchemaMismatch);
}

TEST(Classify, ThresholdBoundaries) {
  EXPECT_EQ(classify_proba(0.5, 0.5), Label::kOverfitting);
  EXPECT_EQ(classify_proba(0.49, 0.5), Label::kCorrect);
  EXPECT_EQ(classify_proba(0.999, 1.0), Label::kCorrect);
  EXPECT_EQ(classify_proba(1.0, 1.0), Label::kOverfitting);
}

TEST(Importance, CountsSplitsAcrossTrees) {
  Model m;
  m.columns = {"a", "b", "c"};
  auto stump = [](std::size_t f) {
    Tree t;
    t.nodes = {TreeNode{false, f, 0.5, 1.0, 1, 2, 0}, TreeNode{}, TreeNode{}};
    return t;
  };
  m.trees = {stump(1)};
  auto imp = feature_importance(m);
  EXPECT_EQ(imp[0].second, 0u);
  EXPECT_EQ(imp[1].second, 1u);
  EXPECT_EQ(imp[2].second, 0u);
  m.trees = {stump(2), stump(0), stump(2)};
  imp = feature_importance(m);
  EXPECT_EQ(imp[2].first, "c");
  EXPECT_EQ(imp[2].second, 2u);
  auto back = Model::from_json(m.to_json());
  EXPECT_EQ(feature_importance(back), imp);
}

TEST(ModelFile, RoundTripPreservesPredictions) {
  auto ds = blobs(40, 2);
  auto m = train(ds);
  auto back = Model::from_json(m.to_json());
  EXPECT_EQ(back.to_json(), m.to_json());
  for (const auto& r : ds.rows) EXPECT_DOUBLE_EQ(predict_proba(back, r.values), predict_proba(m, r.values));
  EXPECT_THROW(Model::from_json("{}"), SchemaMismatch);
  EXPECT_THROW(Model::from_json("not json"), SchemaMismatch);
}
