#include "patchguard/eval.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <limits>
#include <map>
#include <numeric>

#include "patchguard/error.hpp"

namespace patchguard {

using nlohmann::ordered_json;

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

Confusion confusion(const std::vector<Label>& preds, const std::vector<Label>& truth) {
  if (preds.size() != truth.size()) {
    throw LengthMismatch("predictions and truth differ in length: " + std::to_string(preds.size()) + " vs " +
                         std::to_string(truth.size()));
  }
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    bool p = preds[i] == Label::kOverfitting;
    bool t = truth[i] == Label::kOverfitting;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Metrics metrics(const Confusion& c) {
  return {ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn), ratio(c.tp + c.tn, c.total())};
}

std::optional<double> cpr(const Confusion& c) { return ratio(c.tn, c.tn + c.fn); }

std::optional<double> cpr_orig(std::size_t num_correct, std::size_t num_patches) {
  return ratio(num_correct, num_patches);
}

std::string_view group_key_name(GroupKey k) {
  switch (k) {
    case GroupKey::kFold: return "fold";
    case GroupKey::kTool: return "tool";
    case GroupKey::kProject: return "project";
  }
  return "fold";
}

GroupKey parse_group_key(std::string_view text) {
  if (text == "tool") return GroupKey::kTool;
  if (text == "project") return GroupKey::kProject;
  if (text == "fold") return GroupKey::kFold;
  throw Error("unknown group key: " + std::string(text));
}

std::string format_percent(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v * 100.0);
  return buf;
}

namespace {

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json split_json(const SplitResult& s) {
  ordered_json j;
  j["name"] = s.name;
  j["tp"] = s.confusion.tp;
  j["fp"] = s.confusion.fp;
  j["tn"] = s.confusion.tn;
  j["fn"] = s.confusion.fn;
  j["precision"] = optional_json(s.metrics.precision);
  j["recall"] = optional_json(s.metrics.recall);
  j["accuracy"] = optional_json(s.metrics.accuracy);
  j["cpr"] = optional_json(s.cpr);
  j["train_rows"] = s.train_rows;
  return j;
}

void finish(SplitResult& s) {
  s.metrics = metrics(s.confusion);
  s.cpr = cpr(s.confusion);
}

}  // namespace

std::string EvalReport::to_json() const {
  ordered_json doc;
  doc["grouping_key"] = group_key_name(grouping_key);
  doc["splits"] = ordered_json::array();
  for (const auto& s : splits) doc["splits"].push_back(split_json(s));
  doc["aggregate"] = split_json(aggregate);
  return doc.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
  std::string out = "split,tp,fp,tn,fn,precision,recall,accuracy,cpr\n";
  auto line = [&out](const SplitResult& s) {
    out += s.name + "," + std::to_string(s.confusion.tp) + "," + std::to_string(s.confusion.fp) + "," +
           std::to_string(s.confusion.tn) + "," + std::to_string(s.confusion.fn) + "," +
           format_percent(s.metrics.precision) + "," + format_percent(s.metrics.recall) + "," +
           format_percent(s.metrics.accuracy) + "," + format_percent(s.cpr) + "\n";
  };
  for (const auto& s : splits) line(s);
  line(aggregate);
  return out;
}

std::string EvalReport::outcomes_csv() const {
  std::string out = "patch_id,truth,proba,pred\n";
  for (const auto& o : outcomes) {
    out += o.patch_id + "," + std::string(label_name(o.truth)) + "," + format_real(o.proba) + "," +
           std::string(label_name(o.pred)) + "\n";
  }
  return out;
}

Dataset prepare_training(const Dataset& train, const EvalOptions& opt) {
  Dataset out = train.rows.empty() ? train : prune_outliers(train, opt.min_outlied);
  std::size_t pos = out.count(Label::kOverfitting);
  std::size_t neg = out.count(Label::kCorrect);
  if (pos > 0 && neg > 0 && std::min(pos, neg) >= 2) out = smote_minority(out, opt.smote_k, opt.seed);
  return out;
}

namespace {

void require_labels(const Dataset& ds) {
  ds.validate();
  for (const auto& r : ds.rows) {
    if (!r.label) throw SchemaMismatch("evaluation needs labeled rows; " + r.patch_id + " is unlabeled");
  }
}

SplitResult run_split(const Dataset& ds, const std::string& name, const std::vector<std::size_t>& test,
                      const EvalOptions& opt, std::vector<Outcome>& outcomes) {
  std::vector<char> in_test(ds.rows.size(), 0);
  for (auto i : test) in_test[i] = 1;
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    if (!in_test[i]) train_idx.push_back(i);
  }
  if (train_idx.empty()) throw TooFewRows("split " + name + " leaves no training rows");

  Dataset train_set = prepare_training(select_rows(ds, train_idx), opt);
  if (opt.trace) {
    SplitTrace t;
    t.name = name;
    for (const auto& r : train_set.rows) {
      t.train_ids.push_back(r.patch_id);
      t.train_sources.push_back(r.derived_from);
    }
    for (auto i : test) t.test_ids.push_back(ds.rows[i].patch_id);
    opt.trace(t);
  }
  Model model = train(train_set, opt.hp);

  SplitResult s;
  s.name = name;
  s.train_rows = train_set.rows.size();
  std::vector<Label> preds, truth;
  for (auto i : test) {
    const auto& row = ds.rows[i];
    double p = predict_proba(model, row.values);
    Label pred = classify_proba(p, opt.threshold);
    preds.push_back(pred);
    truth.push_back(*row.label);
    outcomes.push_back({row.patch_id, name, *row.label, p, pred});
  }
  s.confusion = confusion(preds, truth);
  finish(s);
  if (s.confusion.tp + s.confusion.fn == 0) {
    s.metrics.precision.reset();
    s.metrics.recall.reset();
  }
  return s;
}

}  // namespace

std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw TooFewRows("k-fold needs k >= 2");
  if (k > ds.rows.size()) {
    throw TooFewRows("k = " + std::to_string(k) + " exceeds " + std::to_string(ds.rows.size()) + " rows");
  }
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    (ds.rows[i].label == Label::kOverfitting ? pos : neg).push_back(i);
  }
  Rng rng(seed);
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t slot = 0;
  for (const auto* cls : {&pos, &neg}) {
    for (auto i : *cls) folds[slot++ % k].push_back(i);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

EvalReport kfold_cv(const Dataset& ds, std::size_t k, const EvalOptions& opt) {
  require_labels(ds);
  if (ds.count(Label::kOverfitting) == 0 || ds.count(Label::kCorrect) == 0) {
    throw SingleClass("k-fold evaluation needs both classes");
  }
  auto folds = stratified_folds(ds, k, opt.seed);
  EvalReport report;
  report.grouping_key = GroupKey::kFold;
  report.aggregate.name = "aggregate";
  for (std::size_t f = 0; f < folds.size(); ++f) {
    auto s = run_split(ds, "fold" + std::to_string(f + 1), folds[f], opt, report.outcomes);
    report.aggregate.confusion += s.confusion;
    report.splits.push_back(std::move(s));
  }
  finish(report.aggregate);
  return report;
}

EvalReport leave_one_group_out(const Dataset& ds, GroupKey key, const EvalOptions& opt) {
  if (key == GroupKey::kFold) throw Error("leave-one-group-out needs the tool or project key");
  require_labels(ds);
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const auto& r = ds.rows[i];
    groups[key == GroupKey::kTool ? r.tool : r.project].push_back(i);
  }
  if (groups.size() < 2) throw SingleGroup("leave-one-group-out needs at least two groups");

  EvalReport report;
  report.grouping_key = key;
  report.aggregate.name = "aggregate";
  for (const auto& [name, rows] : groups) {
    auto s = run_split(ds, name, rows, opt, report.outcomes);
    report.aggregate.confusion += s.confusion;
    report.splits.push_back(std::move(s));
  }
  finish(report.aggregate);
  return report;
}

std::vector<double> fisher_scores(const Dataset& ds) {
  require_labels(ds);
  const std::size_t w = ds.width();
  std::vector<double> out(w, 0.0);
  std::array<std::size_t, 2> n{0, 0};
  for (const auto& r : ds.rows) ++n[static_cast<std::size_t>(*r.label)];
  const double total = static_cast<double>(ds.rows.size());
  for (std::size_t c = 0; c < w; ++c) {
    std::array<double, 2> sum{0, 0};
    for (const auto& r : ds.rows) sum[static_cast<std::size_t>(*r.label)] += r.values[c];
    double mean = (sum[0] + sum[1]) / total;
    std::array<double, 2> mu{n[0] ? sum[0] / static_cast<double>(n[0]) : 0.0,
                             n[1] ? sum[1] / static_cast<double>(n[1]) : 0.0};
    std::array<double, 2> ss{0, 0};
    for (const auto& r : ds.rows) {
      auto cls = static_cast<std::size_t>(*r.label);
      double d = r.values[c] - mu[cls];
      ss[cls] += d * d;
    }
    double between = 0;
    for (std::size_t cls = 0; cls < 2; ++cls) between += static_cast<double>(n[cls]) * (mu[cls] - mean) * (mu[cls] - mean);
    double within = ss[0] + ss[1];
    if (within == 0) {
      out[c] = between == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
      out[c] = between / within;
    }
  }
  return out;
}

std::vector<std::size_t> top_k_features(const Dataset& ds, std::size_t k) {
  if (k == 0 || k > ds.width()) {
    throw KOutOfRange("k = " + std::to_string(k) + " outside [1, " + std::to_string(ds.width()) + "]");
  }
  auto scores = fisher_scores(ds);
  std::vector<std::size_t> idx(ds.width());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace patchguard
