#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "patchguard/corpus.hpp"
#include "patchguard/eval.hpp"
#include "patchguard/features.hpp"
#include "patchguard/learner.hpp"

namespace patchguard {

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path matrix;
  std::filesystem::path model;
  std::filesystem::path out;
  std::string schema_version = "1";
  Hyperparams hp;
  double threshold = 0.5;
  std::string protocol = "kfold";
  GroupKey key = GroupKey::kProject;
  std::size_t k = 10;
  std::size_t min_outlied = 15;
  std::size_t smote_k = 5;
  unsigned threads = 0;
};

// Throws SchemaMismatch for versions this build does not ship.
const FeatureSchema& schema_for(const std::string& version);

struct ExtractSummary {
  std::size_t patches = 0;     // directories with readable metadata
  std::size_t duplicates = 0;
  std::size_t skipped = 0;     // ingest and extraction failures
  std::vector<std::string> warnings;
};

// ingest, deduplicate, then extract every surviving patch.
Dataset extract_corpus(const std::filesystem::path& corpus_root, const FeatureSchema& schema, unsigned threads,
                       ExtractSummary& summary);

// Matrix file when config.matrix is set, otherwise a fresh extraction of
// config.corpus. Checks the schema version either way.
Dataset load_dataset(const RunConfig& config, ExtractSummary& summary);

// Pruning, SMOTE, then boosting.
Model fit(const Dataset& ds, const RunConfig& config);

std::vector<Outcome> predict_rows(const Model& m, const Dataset& ds, double threshold);
std::string predictions_csv(const std::vector<Outcome>& outcomes);  // patch_id, proba, label

EvalReport evaluate(const Dataset& ds, const RunConfig& config);

struct ImportanceEntry {
  std::string column;
  double value = 0;
};

// Columns ordered by split count, highest first, ties by column order.
std::vector<ImportanceEntry> split_count_ranking(const Model& m);
// Columns ordered by Fisher score, highest first, ties by column order.
std::vector<ImportanceEntry> fisher_score_ranking(const Dataset& ds);
std::string ranking_csv(const std::string& statistic, const std::vector<ImportanceEntry>& ranking);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace patchguard
