#include "patchguard/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>

#include "patchguard/error.hpp"

namespace patchguard {

namespace fs = std::filesystem;

const FeatureSchema& schema_for(const std::string& version) {
  const auto& standard = FeatureSchema::standard();
  if (version != standard.version()) {
    throw SchemaMismatch("unsupported schema version '" + version + "' (this build ships '" + standard.version() +
                         "')");
  }
  return standard;
}

Dataset extract_corpus(const fs::path& corpus_root, const FeatureSchema& schema, unsigned threads,
                       ExtractSummary& summary) {
  std::size_t ingest_warnings = 0;
  auto records = ingest(corpus_root, [&](const std::string& w) {
    summary.warnings.push_back(w);
    ++ingest_warnings;
  });
  summary.patches = records.size();
  summary.skipped += ingest_warnings;

  auto unique = deduplicate(records, [&](const std::string& w) { summary.warnings.push_back(w); });
  summary.duplicates = records.size() - unique.size();

  std::size_t failed = 0;
  Dataset ds = build_dataset(
      unique, schema,
      [&](const std::string& w) {
        summary.warnings.push_back(w);
        ++failed;
      },
      threads);
  summary.skipped += failed;
  ds.provenance.deduplicated = true;
  return ds;
}

Dataset load_dataset(const RunConfig& config, ExtractSummary& summary) {
  const FeatureSchema& schema = schema_for(config.schema_version);
  if (!config.matrix.empty()) {
    Dataset ds = read_matrix(config.matrix);
    if (!ds.schema_version.empty() && ds.schema_version != schema.version()) {
      throw SchemaMismatch("matrix schema " + ds.schema_version + " does not match requested " + schema.version());
    }
    if (ds.schema_version.empty()) ds.schema_version = schema.version();
    return ds;
  }
  if (config.corpus.empty()) throw Error("either a corpus or a matrix is required");
  return extract_corpus(config.corpus, schema, config.threads, summary);
}

Model fit(const Dataset& ds, const RunConfig& config) {
  EvalOptions opt;
  opt.seed = config.hp.seed;
  opt.min_outlied = config.min_outlied;
  opt.smote_k = config.smote_k;
  return train(prepare_training(ds, opt), config.hp);
}

std::vector<Outcome> predict_rows(const Model& m, const Dataset& ds, double threshold) {
  if (ds.schema_version != m.schema_version) {
    throw SchemaMismatch("dataset schema " + ds.schema_version + " does not match model schema " + m.schema_version);
  }
  if (ds.columns != m.columns) throw SchemaMismatch("dataset columns do not match the model");
  std::vector<Outcome> out;
  out.reserve(ds.rows.size());
  for (const auto& r : ds.rows) {
    double p = predict_proba(m, r.values);
    Outcome o;
    o.patch_id = r.patch_id;
    o.split = "predict";
    o.truth = r.label.value_or(Label::kCorrect);
    o.proba = p;
    o.pred = classify_proba(p, threshold);
    out.push_back(std::move(o));
  }
  return out;
}

std::string predictions_csv(const std::vector<Outcome>& outcomes) {
  std::string out = "patch_id,proba,label\n";
  for (const auto& o : outcomes) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, o.proba);
    out += o.patch_id + "," + std::string(buf, res.ptr) + "," + std::string(label_name(o.pred)) + "\n";
  }
  return out;
}

EvalReport evaluate(const Dataset& ds, const RunConfig& config) {
  EvalOptions opt;
  opt.hp = config.hp;
  opt.seed = config.hp.seed;
  opt.threshold = config.threshold;
  opt.min_outlied = config.min_outlied;
  opt.smote_k = config.smote_k;
  if (config.protocol == "kfold") return kfold_cv(ds, config.k, opt);
  if (config.protocol == "group") return leave_one_group_out(ds, config.key, opt);
  throw Error("unknown protocol: " + config.protocol);
}

namespace {

std::vector<ImportanceEntry> rank(const std::vector<std::string>& columns, const std::vector<double>& values) {
  std::vector<std::size_t> idx(columns.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<ImportanceEntry> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back({columns[i], values[i]});
  return out;
}

}  // namespace

std::vector<ImportanceEntry> split_count_ranking(const Model& m) {
  auto counts = m.split_counts();
  return rank(m.columns, std::vector<double>(counts.begin(), counts.end()));
}

std::vector<ImportanceEntry> fisher_score_ranking(const Dataset& ds) { return rank(ds.columns, fisher_scores(ds)); }

std::string ranking_csv(const std::string& statistic, const std::vector<ImportanceEntry>& ranking) {
  std::string out = "rank,column," + statistic + "\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, ranking[i].value);
    out += std::to_string(i + 1) + "," + ranking[i].column + "," + std::string(buf, res.ptr) + "\n";
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace patchguard
