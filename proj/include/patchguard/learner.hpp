#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "patchguard/corpus.hpp"

namespace patchguard {

struct Hyperparams {
  double learning_rate = 0.3;
  int max_depth = 6;
  double min_split_gain = 0.5;  // gamma
  int rounds = 100;
  std::uint64_t seed = 42;
  double reg_lambda = 1.0;

  void validate() const;  // throws Error on out-of-range values
};

// Flat regression tree. Node 0 is the root; a row goes left iff
// value < threshold.
struct TreeNode {
  bool leaf = true;
  std::size_t feature = 0;
  double threshold = 0;
  double gain = 0;
  std::size_t left = 0;
  std::size_t right = 0;
  double weight = 0;  // leaves only, already scaled by the learning rate
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(const std::vector<double>& values) const;
  int depth() const;
};

struct Model {
  std::string schema_version;
  std::vector<std::string> columns;
  Hyperparams hyperparams;
  double base_score = 0;
  std::vector<Tree> trees;
  std::vector<double> training_loss;  // mean logistic loss before round 1 and after each round

  std::vector<std::size_t> split_counts() const;
  std::string to_json() const;
  static Model from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);
};

inline constexpr int kModelFormatVersion = 1;

// Exact greedy gradient boosting on the logistic loss. A single-class dataset
// yields a model with no trees.
Model train(const Dataset& ds, const Hyperparams& hp = {});

double logistic(double x);
double predict_margin(const Model& m, const std::vector<double>& values);
double predict_proba(const Model& m, const std::vector<double>& values);
double predict_proba(const Model& m, const FeatureVector& v);
Label classify(const Model& m, const std::vector<double>& values, double threshold = 0.5);
Label classify_proba(double proba, double threshold = 0.5);

// Split occurrences per column across all trees, in column order.
std::vector<std::pair<std::string, std::size_t>> feature_importance(const Model& m);

// Mean logistic loss of the model on a labeled dataset.
double log_loss(const Model& m, const Dataset& ds);

}  // namespace patchguard
