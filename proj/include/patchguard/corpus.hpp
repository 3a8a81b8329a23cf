#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "patchguard/features.hpp"

namespace patchguard {

enum class Label : std::uint8_t { kCorrect = 0, kOverfitting = 1 };

std::string_view label_name(Label l);
Label parse_label(std::string_view text);  // "correct" / "overfitting" / "0" / "1"

struct FilePair {
  std::string buggy;    // relative to <patch>/buggy
  std::string patched;  // relative to <patch>/patched
};

struct PatchRecord {
  std::string patch_id;
  std::string project;
  std::string tool;
  std::optional<Label> label;
  std::vector<FilePair> file_pairs;
  std::filesystem::path directory;

  std::filesystem::path buggy_path(const FilePair& f) const { return directory / "buggy" / f.buggy; }
  std::filesystem::path patched_path(const FilePair& f) const { return directory / "patched" / f.patched; }
};

using WarningSink = std::function<void(const std::string&)>;

// Parses <patch_dir>/metadata.json. Throws MalformedMetadata.
PatchRecord read_metadata(const std::filesystem::path& patch_dir);

// One record per patch directory, sorted by patch_id. Patches with missing or
// malformed metadata, or with unreadable files, are skipped and reported.
std::vector<PatchRecord> ingest(const std::filesystem::path& corpus_root, const WarningSink& warn = {});

// Token-level fingerprint of every file pair, comments and layout ignored.
std::string patch_fingerprint(const PatchRecord& record);

// Keeps the first record of each group of token-identical patches.
std::vector<PatchRecord> deduplicate(const std::vector<PatchRecord>& records, const WarningSink& warn = {});

struct Provenance {
  bool raw = true;
  bool deduplicated = false;
  bool outlier_pruned = false;
  bool resampled = false;
};

struct DatasetRow {
  std::string patch_id;
  std::string project;
  std::string tool;
  std::optional<Label> label;
  std::vector<double> values;
  // Original rows a synthetic row was interpolated from; empty for real rows.
  std::vector<std::string> derived_from;
};

struct Dataset {
  std::string schema_version;
  std::vector<std::string> columns;
  std::vector<DatasetRow> rows;
  Provenance provenance;

  std::size_t width() const noexcept { return columns.size(); }
  std::size_t count(Label l) const;
  // Throws SchemaMismatch if a row's width differs from the column count.
  void validate() const;
};

// Diff, extract and encode every file pair of one patch.
FeatureVector extract_patch(const PatchRecord& record, const FeatureSchema& schema);

// Extracts every record on `threads` workers. A patch that fails to read,
// parse or diff is dropped and reported; rows keep input order.
Dataset build_dataset(const std::vector<PatchRecord>& records, const FeatureSchema& schema, const WarningSink& warn = {},
                      unsigned threads = 0);

Dataset select_rows(const Dataset& ds, const std::vector<std::size_t>& indices);
Dataset select_columns(const Dataset& ds, const std::vector<std::size_t>& columns);

// Linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

// Removes rows with at least `min_outlied` values outside the per-column Tukey
// fences. min_outlied = 0 disables pruning.
Dataset prune_outliers(const Dataset& ds, std::size_t min_outlied = 15, std::vector<std::string>* removed = nullptr);

// Oversamples the minority class until both classes have equal counts.
Dataset smote_minority(const Dataset& ds, std::size_t k = 5, std::uint64_t seed = 42);

// Deterministic generator shared by resampling and fold assignment.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  double uniform();                        // [0, 1)
  std::size_t below(std::size_t n);        // [0, n)
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

// Matrix CSV: patch_id, project, tool, label, then one column per feature.
void write_matrix(const Dataset& ds, const std::filesystem::path& path);
Dataset read_matrix(const std::filesystem::path& path);
std::string matrix_to_csv(const Dataset& ds);
Dataset matrix_from_csv(std::string_view text);

// Sidecar written next to the matrix as <matrix>.provenance.json.
std::filesystem::path provenance_path(const std::filesystem::path& matrix_path);

}  // namespace patchguard
