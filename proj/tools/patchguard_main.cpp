#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "patchguard/diff.hpp"
#include "patchguard/error.hpp"
#include "patchguard/pipeline.hpp"

namespace fs = std::filesystem;
using namespace patchguard;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void report_warnings(const ExtractSummary& s) {
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
}

double accuracy_of(const std::vector<Outcome>& outcomes, const Dataset& ds) {
  std::size_t right = 0, labeled = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!ds.rows[i].label) continue;
    ++labeled;
    right += outcomes[i].pred == *ds.rows[i].label;
  }
  return labeled ? static_cast<double>(right) / static_cast<double>(labeled) : -1;
}

int cmd_extract(const RunConfig& cfg) {
  if (cfg.corpus.empty()) throw Error("extract needs --corpus");
  ExtractSummary summary;
  Dataset ds = extract_corpus(cfg.corpus, schema_for(cfg.schema_version), cfg.threads, summary);
  report_warnings(summary);
  fs::path out = cfg.out.empty() ? fs::path("matrix.csv") : cfg.out;
  write_matrix(ds, out);
  std::cerr << "extracted " << ds.rows.size() << " rows (" << summary.duplicates << " duplicates removed, "
            << summary.skipped << " patches skipped) -> " << out.string() << "\n";
  bool all_failed = ds.rows.empty() && summary.skipped > 0;
  return all_failed ? 2 : 0;
}

int cmd_train(const RunConfig& cfg) {
  ExtractSummary summary;
  Dataset ds = load_dataset(cfg, summary);
  report_warnings(summary);
  Model m = fit(ds, cfg);
  fs::path out = cfg.out.empty() ? fs::path("model.json") : cfg.out;
  m.save(out);
  double acc = accuracy_of(predict_rows(m, ds, cfg.threshold), ds);
  std::cerr << "trained " << m.trees.size() << " trees on " << ds.rows.size() << " rows";
  if (acc >= 0) std::cerr << ", training accuracy " << format_percent(acc) << "%";
  std::cerr << " -> " << out.string() << "\n";
  return 0;
}

int cmd_predict(const RunConfig& cfg) {
  if (cfg.model.empty()) throw Error("predict needs --model");
  Model m = Model::load(cfg.model);
  ExtractSummary summary;
  Dataset ds = load_dataset(cfg, summary);
  report_warnings(summary);
  auto outcomes = predict_rows(m, ds, cfg.threshold);
  std::string csv = predictions_csv(outcomes);
  if (cfg.out.empty()) {
    std::cout << csv;
  } else {
    write_text(cfg.out, csv);
  }
  double acc = accuracy_of(outcomes, ds);
  if (acc >= 0) std::cerr << "accuracy on labeled rows " << format_percent(acc) << "%\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  ExtractSummary summary;
  Dataset ds = load_dataset(cfg, summary);
  report_warnings(summary);
  EvalReport report = evaluate(ds, cfg);
  fs::path dir = cfg.out.empty() ? fs::path("report") : cfg.out;
  write_text(dir / "report.json", report.to_json());
  write_text(dir / "report.csv", report.to_csv());
  write_text(dir / "outcomes.csv", report.outcomes_csv());
  std::cout << report.to_csv();
  return 0;
}

int cmd_importance(const RunConfig& cfg) {
  if (cfg.model.empty()) throw Error("importance needs --model");
  Model m = Model::load(cfg.model);
  ExtractSummary summary;
  Dataset ds = load_dataset(cfg, summary);
  report_warnings(summary);
  if (ds.columns != m.columns) throw SchemaMismatch("dataset columns do not match the model");
  fs::path dir = cfg.out.empty() ? fs::path("importance") : cfg.out;
  auto splits = split_count_ranking(m);
  write_text(dir / "split_count.csv", ranking_csv("split_count", splits));
  write_text(dir / "fisher_score.csv", ranking_csv("fisher_score", fisher_score_ranking(ds)));
  std::size_t shown = std::min<std::size_t>(cfg.k, splits.size());
  for (std::size_t i = 0; i < shown && splits[i].value > 0; ++i) {
    std::cout << splits[i].column << " " << splits[i].value << "\n";
  }
  return 0;
}

int cmd_select(const RunConfig& cfg) {
  ExtractSummary summary;
  Dataset ds = load_dataset(cfg, summary);
  report_warnings(summary);
  Dataset reduced = select_columns(ds, top_k_features(ds, cfg.k));
  write_matrix(reduced, cfg.out.empty() ? fs::path("selected.csv") : cfg.out);
  for (const auto& c : reduced.columns) std::cout << c << "\n";
  return 0;
}

int cmd_schema(const RunConfig& cfg) {
  std::string text = schema_for(cfg.schema_version).catalog_json();
  if (cfg.out.empty()) {
    std::cout << text;
  } else {
    write_text(cfg.out, text);
  }
  return 0;
}

int cmd_diff(const std::string& buggy_path, const std::string& patched_path) {
  NormalizedAst buggy = parse_source(slurp(buggy_path), "java");
  NormalizedAst patched = parse_source(slurp(patched_path), "java");
  std::cout << to_text(diff(buggy, patched), buggy, patched);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Static patch assessment: extract AST features and classify overfitting patches"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string key = "project";
  std::string corpus, matrix, model, out;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--schema", cfg.schema_version, "Feature schema version")->capture_default_str();
    sub->add_option("--out", out, "Output file or directory");
  };
  auto add_input = [&](CLI::App* sub) {
    sub->add_option("--corpus", corpus, "Corpus root (<root>/<patch_id>/metadata.json)");
    sub->add_option("--matrix", matrix, "Feature matrix produced by extract");
    sub->add_option("--threads", cfg.threads, "Extraction workers (0 = hardware)");
  };
  auto add_learning = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.hp.seed, "Random seed")->capture_default_str();
    sub->add_option("--rounds", cfg.hp.rounds, "Boosting rounds")->capture_default_str();
    sub->add_option("--learning-rate", cfg.hp.learning_rate, "Shrinkage")->capture_default_str();
    sub->add_option("--max-depth", cfg.hp.max_depth, "Maximum tree depth")->capture_default_str();
    sub->add_option("--gamma", cfg.hp.min_split_gain, "Minimum split gain")->capture_default_str();
    sub->add_option("--min-outlied", cfg.min_outlied, "Outlying values needed to prune a row (0 disables)")
        ->capture_default_str();
    sub->add_option("--threshold", cfg.threshold, "Overfitting probability cut point")->capture_default_str();
  };

  auto* extract = app.add_subcommand("extract", "Extract the feature matrix of a corpus");
  add_common(extract);
  extract->add_option("--corpus", corpus, "Corpus root")->required();
  extract->add_option("--threads", cfg.threads, "Extraction workers (0 = hardware)");

  auto* train_cmd = app.add_subcommand("train", "Prune, resample and train a model");
  add_common(train_cmd);
  add_input(train_cmd);
  add_learning(train_cmd);

  auto* predict = app.add_subcommand("predict", "Score patches with a trained model");
  add_common(predict);
  add_input(predict);
  predict->add_option("--model", model, "Model file")->required();
  predict->add_option("--threshold", cfg.threshold, "Overfitting probability cut point")->capture_default_str();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Cross-validate or leave one group out");
  add_common(evaluate_cmd);
  add_input(evaluate_cmd);
  add_learning(evaluate_cmd);
  evaluate_cmd->add_option("--protocol", cfg.protocol, "Evaluation protocol")
      ->check(CLI::IsMember({"kfold", "group"}))
      ->capture_default_str();
  evaluate_cmd->add_option("--key", key, "Grouping key for --protocol group")
      ->check(CLI::IsMember({"tool", "project"}))
      ->capture_default_str();
  evaluate_cmd->add_option("--k", cfg.k, "Number of folds")->capture_default_str();

  auto* importance = app.add_subcommand("importance", "Rank features by split count and Fisher score");
  add_common(importance);
  add_input(importance);
  importance->add_option("--model", model, "Model file")->required();
  importance->add_option("--k", cfg.k, "Number of top features printed")->capture_default_str();

  auto* select = app.add_subcommand("select", "Keep the top-K columns by Fisher score");
  add_common(select);
  add_input(select);
  select->add_option("--k", cfg.k, "Number of columns kept")->required();

  auto* schema = app.add_subcommand("schema", "Print the feature catalog");
  add_common(schema);

  std::string diff_buggy, diff_patched;
  auto* diff_cmd = app.add_subcommand("diff", "Print the edit script between two Java files");
  diff_cmd->add_option("buggy", diff_buggy, "Buggy file")->required()->check(CLI::ExistingFile);
  diff_cmd->add_option("patched", diff_patched, "Patched file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  cfg.corpus = corpus;
  cfg.matrix = matrix;
  cfg.model = model;
  cfg.out = out;
  try {
    cfg.key = parse_group_key(key);
    if (*extract) return cmd_extract(cfg);
    if (*train_cmd) return cmd_train(cfg);
    if (*predict) return cmd_predict(cfg);
    if (*evaluate_cmd) return cmd_evaluate(cfg);
    if (*importance) return cmd_importance(cfg);
    if (*select) return cmd_select(cfg);
    if (*schema) return cmd_schema(cfg);
    if (*diff_cmd) return cmd_diff(diff_buggy, diff_patched);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
