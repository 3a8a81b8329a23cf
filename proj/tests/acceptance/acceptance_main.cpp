// Acceptance runner. Each criterion prints one PASS/FAIL line with its
// runtime and budget. With no argument every criterion runs; with a name
// only that one runs. Exit status is non-zero when any selected criterion
// fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "patchguard/corpus.hpp"
#include "patchguard/diff.hpp"
#include "patchguard/eval.hpp"
#include "patchguard/features.hpp"
#include "patchguard/learner.hpp"
#include "patchguard/pipeline.hpp"
#include "support/random_java.hpp"
#include "support/random_tree.hpp"
#include "support/reference_confusions.hpp"
#include "support/tree_edit_distance.hpp"

using namespace patchguard;
namespace fs = std::filesystem;

namespace {

class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (!ok) failures_.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream ss;
    ss << what << ": got " << got << ", printed " << want;
    expect(std::fabs(got - want) <= tol, ss.str());
  }
  bool ok() const { return failures_.empty(); }
  std::size_t checks() const { return checks_; }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::size_t checks_ = 0;
  std::vector<std::string> failures_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Printed percentages against the formulas. An absent value never matches a
// printed number.
void compare_cell(Checker& c, const std::string& row, const char* cell, std::optional<double> got, double printed) {
  if (!got) {
    c.expect(false, row + " " + cell + ": undefined, printed " + std::to_string(printed));
    return;
  }
  c.near(*got * 100.0, printed, 0.01, row + " " + cell);
}

void metric_oracle(Checker& c) {
  auto check_row = [&](const pgtest::ReferenceRow& row) {
    Confusion conf{static_cast<std::size_t>(row.tp), static_cast<std::size_t>(row.fp),
                   static_cast<std::size_t>(row.tn), static_cast<std::size_t>(row.fn)};
    auto m = metrics(conf);
    compare_cell(c, row.name, "precision", m.precision, row.precision);
    compare_cell(c, row.name, "recall", m.recall, row.recall);
    compare_cell(c, row.name, "accuracy", m.accuracy, row.accuracy);
    compare_cell(c, row.name, "cpr", cpr(conf), row.cpr);
    if (row.cpr_orig) {
      auto n_correct = static_cast<std::size_t>(row.num_correct);
      auto n_all = static_cast<std::size_t>(row.num_correct + row.num_overfitting);
      compare_cell(c, row.name, "cpr_orig", cpr_orig(n_correct, n_all), *row.cpr_orig);
    }
  };
  for (const auto& row : pgtest::comparison_rows()) check_row(row);
  c.expect(pgtest::per_tool_rows().size() == 19, "per-tool table has 19 rows");
  for (const auto& row : pgtest::per_tool_rows()) check_row(row);
}

void wrap_if_golden(Checker& c) {
  const fs::path dir = fs::path(PATCHGUARD_SOURCE_DIR) / "data/fixtures/wrap_if";
  auto buggy = parse_source(read_file(dir / "buggy/Range.java"), "java");
  auto patched = parse_source(read_file(dir / "patched/Range.java"), "java");
  auto raw = extract_features(buggy, patched, diff(buggy, patched));
  const auto& schema = FeatureSchema::standard();
  auto v = encode({raw}, schema);
  auto col = [&](const std::string& name) -> double {
    auto idx = schema.column_index(name);
    c.expect(idx.has_value(), "column exists: " + name);
    return idx ? v.values[*idx] : std::numeric_limits<double>::quiet_NaN();
  };
  const std::vector<std::pair<std::string, double>> expected = {
      {"wrapsIf", 1},      {"condBlockOthersAdd", 1}, {"condBlockRetAdd", 0},
      {"SRC_opEqual", 1},  {"SRC_uopDec", 1},         {"SRC_localVar", 1},
      {"SRC_opAdd", 0},    {"SRC_assignZero", 0},     {"typeOfFaultyStatementParent_method", 1},
  };
  for (const auto& [name, want] : expected) c.near(col(name), want, 0, name);
}

void diff_roundtrip(Checker& c) {
  pgtest::ProgramGen gen(20240601);
  int pairs = 0;
  for (; pairs < 500; ++pairs) {
    auto body = gen.program();
    auto mutated = body;
    int edits = 1 + gen.pick(3);
    for (int e = 0; e < edits; ++e) gen.mutate(mutated);
    auto a = parse_source(pgtest::ProgramGen::render_program(body), "java");
    auto b = parse_source(pgtest::ProgramGen::render_program(mutated), "java");
    c.expect(isomorphic(apply(a, diff(a, b)), b), "round trip failed on pair " + std::to_string(pairs));
  }
  c.expect(pairs >= 500, "at least 500 program pairs");

  std::mt19937_64 rng(99);
  for (int iter = 0; iter < 500; ++iter) {
    auto a = pgtest::random_tree(rng, 20);
    std::vector<NodeId> leaves;
    for (NodeId n : a.preorder()) {
      if (a.children(n).empty()) leaves.push_back(n);
    }
    // Exhaustive over every leaf of the tree.
    for (NodeId leaf : leaves) {
      auto b = pgtest::relabel_leaf(a, leaf, a.label(leaf) + "'");
      std::string where = "tree " + std::to_string(iter) + " leaf " + std::to_string(leaf);
      c.expect(pgtest::TreeEditDistance::compute(a, b) == 1, where + ": oracle distance is 1");
      auto s = diff(a, b);
      bool one_update = s.actions.size() == 1 && s.actions[0].op == EditOp::kUpdate && s.actions[0].src == leaf;
      c.expect(one_update, where + ": exactly one UPD of the changed leaf");
    }
  }
}

Dataset numeric_dataset(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
  Dataset ds;
  ds.schema_version = "acceptance";
  for (std::size_t col = 0; col < rows.at(0).size(); ++col) ds.columns.push_back("f" + std::to_string(col));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    DatasetRow r;
    r.patch_id = "r" + std::to_string(i);
    r.project = "p";
    r.tool = "t";
    if (!labels.empty()) r.label = labels[i] ? Label::kOverfitting : Label::kCorrect;
    r.values = rows[i];
    ds.rows.push_back(std::move(r));
  }
  return ds;
}

struct Candidate {
  double gain;
  std::size_t feature;
  double threshold;
};

std::optional<Candidate> exhaustive_stump(const Dataset& ds, double base, double lambda) {
  const double p = 1.0 / (1.0 + std::exp(-base));
  std::vector<Candidate> all;
  for (std::size_t f = 0; f < ds.width(); ++f) {
    std::vector<double> vals;
    for (const auto& r : ds.rows) vals.push_back(r.values[f]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
      double t = (vals[i] + vals[i + 1]) / 2;
      double gl = 0, hl = 0, gr = 0, hr = 0;
      for (const auto& r : ds.rows) {
        double g = p - (r.label == Label::kOverfitting ? 1.0 : 0.0);
        double h = p * (1 - p);
        (r.values[f] < t ? gl : gr) += g;
        (r.values[f] < t ? hl : hr) += h;
      }
      double g = gl + gr, h = hl + hr;
      all.push_back({0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda)), f, t});
    }
  }
  if (all.empty()) return std::nullopt;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& cand : all) best = std::max(best, cand.gain);
  for (const auto& cand : all) {
    if (cand.gain >= best * (1 - 1e-9)) return cand;
  }
  return std::nullopt;
}

void learner_oracle(Checker& c) {
  Hyperparams stump;
  stump.max_depth = 1;
  stump.rounds = 1;
  stump.min_split_gain = 0;

  Rng rng(123);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t n = 2 + rng.below(29);
    std::size_t width = 1 + rng.below(4);
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
    auto ds = numeric_dataset(rows, labels);
    auto m = train(ds, stump);
    auto best = exhaustive_stump(ds, m.base_score, m.hyperparams.reg_lambda);
    std::string where = "stump trial " + std::to_string(trial);
    if (!best || best->gain <= 1e-12) {
      c.expect(m.trees.empty(), where + ": no gainful split, no tree");
      continue;
    }
    if (m.trees.size() != 1 || m.trees[0].nodes[0].leaf) {
      c.expect(false, where + ": expected one split");
      continue;
    }
    const auto& root = m.trees[0].nodes[0];
    c.near(root.gain, best->gain, 1e-9, where + " gain");
    c.expect(root.feature == best->feature, where + ": feature");
    c.expect(root.threshold == best->threshold, where + ": threshold");
  }

  Rng blob_rng(11);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 200; ++i) {
    int y = i % 2;
    rows.push_back({(y ? 4.0 : -4.0) + (blob_rng.uniform() - 0.5) * 4, (blob_rng.uniform() - 0.5) * 6,
                    blob_rng.uniform()});
    labels.push_back(y);
  }
  auto blobs = numeric_dataset(rows, labels);
  auto m = train(blobs);
  std::size_t right = 0;
  for (const auto& r : blobs.rows) right += classify(m, r.values) == *r.label;
  double acc = static_cast<double>(right) / static_cast<double>(blobs.rows.size());
  c.expect(acc >= 0.99, "separable blobs train accuracy " + std::to_string(acc));

  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    Rng noisy(seed);
    std::vector<std::vector<double>> nrows;
    std::vector<int> nlabels;
    for (int i = 0; i < 120; ++i) {
      nrows.push_back({noisy.uniform(), noisy.uniform(), static_cast<double>(noisy.below(4))});
      nlabels.push_back(noisy.uniform() < 0.3 + 0.4 * nrows.back()[0] ? 1 : 0);
    }
    Hyperparams hp;
    hp.rounds = 40;
    auto nm = train(numeric_dataset(nrows, nlabels), hp);
    c.expect(nm.training_loss.size() == nm.trees.size() + 1, "one loss value per round plus the initial one");
    for (std::size_t i = 1; i < nm.training_loss.size(); ++i) {
      c.expect(nm.training_loss[i] <= nm.training_loss[i - 1] + 1e-12,
               "loss non-increasing at round " + std::to_string(i) + " seed " + std::to_string(seed));
    }
  }
}

void preprocessing(Checker& c) {
  auto planted = [](std::size_t outlied) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 100; ++i) {
      std::vector<double> r(20);
      for (int col = 0; col < 20; ++col) r[col] = (i * 7 + col * 3) % 10;
      rows.push_back(r);
    }
    for (std::size_t col = 0; col < outlied; ++col) rows[42][col] = 1000;
    return numeric_dataset(rows, {});
  };
  std::vector<std::string> removed;
  auto pruned = prune_outliers(planted(15), 15, &removed);
  c.expect(removed == std::vector<std::string>{"r42"}, "15 outlying columns: exactly the planted row removed");
  c.expect(pruned.rows.size() == 99, "15 outlying columns: 99 rows kept");
  removed.clear();
  auto kept = prune_outliers(planted(14), 15, &removed);
  c.expect(removed.empty() && kept.rows.size() == 100, "14 outlying columns: nothing removed");

  Rng rng(3);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    std::vector<double> r(6);
    for (auto& v : r) v = static_cast<double>(rng.below(10)) + rng.uniform();
    rows.push_back(r);
    labels.push_back(i % 5 == 0 ? 0 : 1);
  }
  auto ds = numeric_dataset(rows, labels);
  auto out = smote_minority(ds, 5, 42);
  c.expect(out.count(Label::kCorrect) == out.count(Label::kOverfitting), "SMOTE output is balanced");
  c.expect(out.count(Label::kOverfitting) == ds.count(Label::kOverfitting), "majority rows untouched");
  c.expect(matrix_to_csv(out) == matrix_to_csv(smote_minority(ds, 5, 42)), "SMOTE deterministic under seed 42");

  std::map<std::string, const DatasetRow*> by_id;
  for (const auto& r : ds.rows) by_id[r.patch_id] = &r;
  for (std::size_t i = ds.rows.size(); i < out.rows.size(); ++i) {
    const auto& s = out.rows[i];
    std::string where = "synthetic " + s.patch_id;
    if (s.derived_from.size() != 2 || !by_id.count(s.derived_from[0]) || !by_id.count(s.derived_from[1])) {
      c.expect(false, where + ": derived from two original rows");
      continue;
    }
    const auto& a = *by_id.at(s.derived_from[0]);
    const auto& b = *by_id.at(s.derived_from[1]);
    c.expect(a.label == Label::kCorrect && b.label == Label::kCorrect && s.label == Label::kCorrect,
             where + ": minority parents and label");
    std::optional<double> u;
    for (std::size_t col = 0; col < s.values.size(); ++col) {
      double lo = a.values[col], hi = b.values[col];
      if (lo == hi) {
        c.expect(s.values[col] == lo, where + ": equal coordinates preserved");
        continue;
      }
      double uc = (s.values[col] - lo) / (hi - lo);
      c.expect(uc >= -1e-12 && uc <= 1 + 1e-12, where + ": coefficient in [0,1]");
      if (u) c.near(uc, *u, 1e-9, where + ": single coefficient");
      u = uc;
    }
  }
}

// Trace callback verifying that no test row, nor any synthetic row derived
// from it, reaches training.
std::function<void(const SplitTrace&)> leakage_audit(Checker& c, const std::string& run) {
  return [&c, run](const SplitTrace& t) {
    std::set<std::string> test(t.test_ids.begin(), t.test_ids.end());
    for (std::size_t i = 0; i < t.train_ids.size(); ++i) {
      c.expect(!test.count(t.train_ids[i]), run + " " + t.name + ": test row " + t.train_ids[i] + " in training");
      for (const auto& src : t.train_sources[i]) {
        c.expect(!test.count(src), run + " " + t.name + ": synthetic row derived from test row " + src);
      }
    }
  };
}

void check_report(Checker& c, const Dataset& ds, const EvalReport& report, const std::string& run) {
  Confusion sum;
  for (const auto& s : report.splits) sum += s.confusion;
  c.expect(sum == report.aggregate.confusion, run + ": pooled confusion equals sum of splits");
  c.expect(report.aggregate.confusion.total() == ds.rows.size(), run + ": every row tested once");

  std::map<std::string, std::set<Label>> classes;
  std::map<std::string, std::string> split_of;
  for (const auto& o : report.outcomes) split_of[o.patch_id] = o.split;
  for (const auto& r : ds.rows) classes[split_of[r.patch_id]].insert(*r.label);
  for (const auto& s : report.splits) {
    bool has_overfitting = classes[s.name].count(Label::kOverfitting) > 0;
    if (!has_overfitting) {
      c.expect(!s.metrics.precision && !s.metrics.recall, run + " " + s.name + ": correct-only split shows '-'");
      c.expect(s.metrics.accuracy.has_value(), run + " " + s.name + ": accuracy still reported");
    } else {
      c.expect(s.metrics.recall.has_value(), run + " " + s.name + ": recall defined");
    }
  }
}

Dataset toy_dataset() {
  ExtractSummary summary;
  return extract_corpus(fs::path(PATCHGUARD_SOURCE_DIR) / "data/toy_corpus", FeatureSchema::standard(), 0, summary);
}

Dataset grouped_synthetic() {
  // Eight mixed projects and four correct-only projects.
  Rng rng(17);
  Dataset ds;
  ds.schema_version = "acceptance";
  ds.columns = {"signal", "noise"};
  for (int p = 0; p < 12; ++p) {
    for (int i = 0; i < 8; ++i) {
      bool pos = p < 8 && i % 3 != 0;
      DatasetRow r;
      r.patch_id = "g" + std::to_string(p) + "_" + std::to_string(i);
      r.project = "project" + std::to_string(p < 10 ? 0 : 1) + std::to_string(p);
      r.tool = "tool" + std::to_string(i % 3);
      r.label = pos ? Label::kOverfitting : Label::kCorrect;
      r.values = {(pos ? 3.0 : -3.0) + rng.uniform(), rng.uniform()};
      ds.rows.push_back(std::move(r));
    }
  }
  return ds;
}

void leakage(Checker& c) {
  EvalOptions opt;
  opt.hp.rounds = 20;
  opt.min_outlied = 15;

  Dataset toy = toy_dataset();
  c.expect(toy.rows.size() >= 20, "toy corpus extracts at least 20 rows");
  opt.trace = leakage_audit(c, "toy kfold");
  check_report(c, toy, kfold_cv(toy, 5, opt), "toy kfold");
  opt.trace = leakage_audit(c, "toy by project");
  check_report(c, toy, leave_one_group_out(toy, GroupKey::kProject, opt), "toy by project");
  opt.trace = leakage_audit(c, "toy by tool");
  check_report(c, toy, leave_one_group_out(toy, GroupKey::kTool, opt), "toy by tool");

  Dataset grouped = grouped_synthetic();
  std::map<std::string, std::string> project_of;
  for (const auto& r : grouped.rows) project_of[r.patch_id] = r.project;
  auto audit = leakage_audit(c, "synthetic by project");
  opt.trace = [&](const SplitTrace& t) {
    audit(t);
    for (std::size_t i = 0; i < t.train_ids.size(); ++i) {
      const std::string& origin = t.train_sources[i].empty() ? t.train_ids[i] : t.train_sources[i][0];
      c.expect(project_of.at(origin) != t.name, "synthetic by project " + t.name + ": held-out group in training");
    }
  };
  auto report = leave_one_group_out(grouped, GroupKey::kProject, opt);
  check_report(c, grouped, report, "synthetic by project");
  std::size_t dashes = 0;
  for (const auto& s : report.splits) dashes += !s.metrics.precision;
  c.expect(dashes == 4, "four correct-only projects report absent precision");
  c.expect(report.aggregate.metrics.precision.has_value(), "pooled precision defined");

  opt.trace = leakage_audit(c, "synthetic kfold");
  check_report(c, grouped, kfold_cv(grouped, 10, opt), "synthetic kfold");
}

int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = std::string("\"") + PATCHGUARD_CLI + "\" " + args + " >>\"" + log.string() + "\" 2>&1";
  return std::system(cmd.c_str());
}

void e2e_determinism(Checker& c) {
  const fs::path corpus = fs::path(PATCHGUARD_SOURCE_DIR) / "data/toy_corpus";
  const fs::path base = fs::temp_directory_path() / ("patchguard_e2e_" + std::to_string(::getpid()));
  fs::remove_all(base);
  const std::vector<std::string> outputs = {
      "matrix.csv",          "matrix.csv.provenance.json", "model.json",
      "kfold/report.json",   "kfold/report.csv",           "kfold/outcomes.csv",
      "group/report.json",   "group/report.csv",           "group/outcomes.csv",
      "predictions.csv",
  };
  for (const char* run : {"a", "b"}) {
    fs::path dir = base / run;
    fs::create_directories(dir);
    fs::path log = dir / "log.txt";
    std::string m = "\"" + (dir / "matrix.csv").string() + "\"";
    c.expect(run_cli("extract --corpus \"" + corpus.string() + "\" --out " + m, log) == 0, "extract exits 0");
    c.expect(run_cli("train --matrix " + m + " --out \"" + (dir / "model.json").string() + "\"", log) == 0,
             "train exits 0");
    c.expect(run_cli("evaluate --matrix " + m + " --k 5 --out \"" + (dir / "kfold").string() + "\"", log) == 0,
             "kfold evaluate exits 0");
    c.expect(run_cli("evaluate --matrix " + m + " --protocol group --key project --out \"" + (dir / "group").string() +
                         "\"",
                     log) == 0,
             "group evaluate exits 0");
    c.expect(run_cli("predict --matrix " + m + " --model \"" + (dir / "model.json").string() + "\" --out \"" +
                         (dir / "predictions.csv").string() + "\"",
                     log) == 0,
             "predict exits 0");
  }
  Dataset ds = read_matrix(base / "a/matrix.csv");
  c.expect(ds.rows.size() >= 20, "toy matrix has at least 20 rows");
  c.expect(ds.count(Label::kCorrect) > 0 && ds.count(Label::kOverfitting) > 0, "toy matrix has both labels");
  for (const auto& name : outputs) {
    fs::path a = base / "a" / name, b = base / "b" / name;
    bool both = fs::exists(a) && fs::exists(b);
    c.expect(both, name + " written by both runs");
    if (both) c.expect(read_file(a) == read_file(b), name + " byte-identical across runs");
  }
  if (c.ok()) fs::remove_all(base);
}

void schema_arithmetic(Checker& c) {
  const auto& schema = FeatureSchema::standard();
  std::size_t code_description = 0, patterns = 0, contextual = 0, strings = 0, vocab = 0;
  for (const auto& e : schema.entries()) {
    switch (e.group) {
      case FeatureGroup::kCodeDescriptionSrc:
      case FeatureGroup::kCodeDescriptionFormer:
      case FeatureGroup::kCodeDescriptionLatter:
        ++code_description;
        break;
      case FeatureGroup::kRepairPattern:
        ++patterns;
        break;
      case FeatureGroup::kContextual:
        ++contextual;
        break;
    }
    if (e.kind == FeatureKind::kString) {
      ++strings;
      vocab += e.vocab.size();
    }
  }
  c.expect(schema.raw_size() == 202, "202 raw features");
  c.expect(code_description == 150, "150 code description features");
  c.expect(patterns == 26, "26 repair pattern features");
  c.expect(contextual == 26, "26 contextual features");
  c.expect(schema.expanded_size() == schema.raw_size() - strings + vocab,
           "expanded length = raw - string features + vocabulary sizes");

  pgtest::ProgramGen gen(4242);
  for (int i = 0; i < 200; ++i) {
    auto body = gen.program();
    auto mutated = body;
    for (int e = 0, n = 1 + gen.pick(2); e < n; ++e) gen.mutate(mutated);
    auto b = parse_source(pgtest::ProgramGen::render_program(body), "java");
    auto p = parse_source(pgtest::ProgramGen::render_program(mutated), "java");
    auto v = encode({extract_features(b, p, diff(b, p))}, schema);
    c.expect(v.values.size() == schema.expanded_size(), "encoded length");
    for (std::size_t e = 0; e < schema.raw_size(); ++e) {
      const auto& entry = schema.entries()[e];
      if (entry.kind != FeatureKind::kString) continue;
      std::size_t off = schema.column_offset(e);
      double active = 0;
      for (std::size_t k = 0; k < entry.vocab.size(); ++k) active += v.values[off + k] != 0;
      c.expect(active <= 1, "patch " + std::to_string(i) + " " + entry.name + ": at most one active column");
    }
  }
}

struct Criterion {
  const char* name;
  double budget_seconds;  // 0 when no budget applies
  void (*run)(Checker&);
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {"metric_oracle", 1, metric_oracle},     {"wrap_if_golden", 1, wrap_if_golden},
      {"diff_roundtrip", 30, diff_roundtrip},  {"learner_oracle", 30, learner_oracle},
      {"preprocessing", 10, preprocessing},    {"leakage", 0, leakage},
      {"e2e_determinism", 120, e2e_determinism}, {"schema_arithmetic", 0, schema_arithmetic},
  };
  return all;
}

bool run_one(const Criterion& crit) {
  Checker c;
  auto start = std::chrono::steady_clock::now();
  try {
    crit.run(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (crit.budget_seconds > 0) {
    c.expect(secs < crit.budget_seconds, "runtime " + std::to_string(secs) + " s over budget");
  }
  char timing[96];
  if (crit.budget_seconds > 0) {
    std::snprintf(timing, sizeof timing, "%.3fs / %.0fs", secs, crit.budget_seconds);
  } else {
    std::snprintf(timing, sizeof timing, "%.3fs", secs);
  }
  std::cout << (c.ok() ? "PASS " : "FAIL ") << crit.name << " (" << c.checks() << " checks, " << timing << ")\n";
  std::size_t shown = 0;
  for (const auto& f : c.failures()) {
    if (++shown > 20) {
      std::cout << "    ... " << c.failures().size() - 20 << " more\n";
      break;
    }
    std::cout << "    " << f << "\n";
  }
  return c.ok();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 2) {
    std::cerr << "usage: acceptance [criterion]\n";
    return 2;
  }
  bool all_ok = true;
  bool matched = false;
  for (const auto& crit : criteria()) {
    if (argc == 2 && argv[1] != std::string(crit.name)) continue;
    matched = true;
    all_ok = run_one(crit) && all_ok;
  }
  if (!matched) {
    std::cerr << "unknown criterion: " << argv[1] << "\n";
    return 2;
  }
  return all_ok ? 0 : 1;
}
