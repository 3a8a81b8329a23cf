#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "patchguard/corpus.hpp"
#include "patchguard/learner.hpp"

namespace patchguard {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  Confusion& operator+=(const Confusion& o);
  bool operator==(const Confusion&) const = default;
};

// Positive class is overfitting.
Confusion confusion(const std::vector<Label>& preds, const std::vector<Label>& truth);

// Ratios in [0, 1]; nullopt when the denominator is zero.
struct Metrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> accuracy;
};

Metrics metrics(const Confusion& c);
std::optional<double> cpr(const Confusion& c);
std::optional<double> cpr_orig(std::size_t num_correct, std::size_t num_patches);

enum class GroupKey { kFold, kTool, kProject };
std::string_view group_key_name(GroupKey k);
GroupKey parse_group_key(std::string_view text);

struct Outcome {
  std::string patch_id;
  std::string split;
  Label truth = Label::kCorrect;
  double proba = 0;
  Label pred = Label::kCorrect;
};

// A split whose test rows hold no overfitting patch reports precision and
// recall as absent, whatever the false positive count.
struct SplitResult {
  std::string name;
  Confusion confusion;
  Metrics metrics;
  std::optional<double> cpr;
  std::size_t train_rows = 0;  // after pruning and resampling
};

struct EvalReport {
  GroupKey grouping_key = GroupKey::kFold;
  std::vector<SplitResult> splits;
  SplitResult aggregate;
  std::vector<Outcome> outcomes;

  std::string to_json() const;
  std::string to_csv() const;            // one row per split plus the aggregate, '-' for absent values
  std::string outcomes_csv() const;      // patch_id, truth, proba, pred
};

// Per-split view handed to the trace hook after preprocessing and before
// training.
struct SplitTrace {
  std::string name;
  std::vector<std::string> train_ids;        // includes synthetic ids
  std::vector<std::vector<std::string>> train_sources;  // derived_from of each training row
  std::vector<std::string> test_ids;
};

struct EvalOptions {
  Hyperparams hp;
  std::uint64_t seed = 42;
  double threshold = 0.5;
  std::size_t min_outlied = 15;
  std::size_t smote_k = 5;
  std::function<void(const SplitTrace&)> trace;
};

// Stratified assignment of row indices into k folds.
std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds, std::size_t k, std::uint64_t seed);

EvalReport kfold_cv(const Dataset& ds, std::size_t k = 10, const EvalOptions& opt = {});
EvalReport leave_one_group_out(const Dataset& ds, GroupKey key, const EvalOptions& opt = {});

// Train-side preprocessing shared by every protocol: pruning, then SMOTE when
// both classes are present with at least two minority rows.
Dataset prepare_training(const Dataset& train, const EvalOptions& opt);

// Between-class over within-class scatter per column.
std::vector<double> fisher_scores(const Dataset& ds);
// The k best columns by Fisher score (ties broken by index), returned in
// column order.
std::vector<std::size_t> top_k_features(const Dataset& ds, std::size_t k);

std::string format_percent(const std::optional<double>& v);  // "90.38" or "-"

}  // namespace patchguard
