#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "patchguard/ast.hpp"
#include "patchguard/diff.hpp"

namespace patchguard {

enum class FeatureKind : std::uint8_t { kBinary, kString };

enum class FeatureGroup : std::uint8_t {
  kCodeDescriptionSrc,
  kCodeDescriptionFormer,
  kCodeDescriptionLatter,
  kRepairPattern,
  kContextual,
};

std::string_view group_name(FeatureGroup g);

struct FeatureEntry {
  std::string name;
  FeatureKind kind = FeatureKind::kBinary;
  FeatureGroup group = FeatureGroup::kCodeDescriptionSrc;
  std::vector<std::string> vocab;  // string features only, one-hot column order
  std::string description;
};

// Immutable ordered feature list. Expanded columns follow entry order; a
// string entry contributes one column per vocab value named `<name>_<value>`.
class FeatureSchema {
 public:
  FeatureSchema(std::string version, std::vector<FeatureEntry> entries);

  // The shipped schema (version "1").
  static const FeatureSchema& standard();

  const std::string& version() const noexcept { return version_; }
  const std::vector<FeatureEntry>& entries() const noexcept { return entries_; }
  std::size_t raw_size() const noexcept { return entries_.size(); }
  std::size_t string_feature_count() const noexcept { return string_count_; }

  std::optional<std::size_t> index_of(std::string_view name) const;
  const FeatureEntry& entry(std::string_view name) const;  // throws SchemaMismatch

  std::size_t expanded_size() const noexcept { return columns_.size(); }
  const std::vector<std::string>& column_names() const noexcept { return columns_; }
  std::optional<std::size_t> column_index(std::string_view column) const;
  // First expanded column of the entry at position i.
  std::size_t column_offset(std::size_t i) const { return offsets_.at(i); }

  // Versioned catalog document: every feature with its detector definition.
  std::string catalog_json() const;

 private:
  std::string version_;
  std::vector<FeatureEntry> entries_;
  std::vector<std::size_t> offsets_;
  std::vector<std::string> columns_;
  std::map<std::string, std::size_t, std::less<>> by_name_;
  std::map<std::string, std::size_t, std::less<>> by_column_;
  std::size_t string_count_ = 0;
};

using FeatureValue = std::variant<int, std::string>;

// Values extracted from one file-pair diff, keyed by schema entry name.
struct RawFeatures {
  std::map<std::string, FeatureValue, std::less<>> values;

  void set(std::string_view name, FeatureValue v) { values.insert_or_assign(std::string(name), std::move(v)); }
  int flag(std::string_view name) const;
  const std::string& text(std::string_view name) const;
  void merge(const RawFeatures& other);
};

struct FeatureVector {
  std::string schema_version;
  std::vector<std::int64_t> values;
};

inline constexpr std::string_view kNoneValue = "none";
inline constexpr std::string_view kOtherValue = "other";

// SRC/FORMER/LATTER code description flags (150 entries).
RawFeatures extract_code_description(const NormalizedAst& buggy, const NormalizedAst& patched,
                                     const EditScript& script);
// The 26 repair pattern flags.
RawFeatures extract_repair_patterns(const NormalizedAst& buggy, const NormalizedAst& patched,
                                    const EditScript& script);
// 9 string and 17 binary contextual features around the faulty statement.
RawFeatures extract_contextual(const NormalizedAst& buggy, const NormalizedAst& patched, const EditScript& script);

// All 202 raw features of one diff.
RawFeatures extract_features(const NormalizedAst& buggy, const NormalizedAst& patched, const EditScript& script);

// One-hot encodes each diff and sums them. Throws SchemaMismatch on an empty
// list or on values outside the schema.
FeatureVector encode(const std::vector<RawFeatures>& per_diff, const FeatureSchema& schema);

// Name lists per group, in schema order.
const std::vector<std::string>& operator_flag_names();
const std::vector<std::string>& variable_flag_names();
const std::vector<std::string>& statement_flag_names();
const std::vector<std::string>& ast_operation_flag_names();
const std::vector<std::string>& repair_pattern_names();
const std::vector<std::string>& contextual_string_names();
const std::vector<std::string>& contextual_binary_names();

// Window prefixes of the code description block.
inline constexpr std::string_view kSrcPrefix = "SRC_";
inline constexpr std::string_view kFormerPrefix = "FORMER_";
inline constexpr std::string_view kLatterPrefix = "LATTER_";

}  // namespace patchguard
