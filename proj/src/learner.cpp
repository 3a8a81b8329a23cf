#include "patchguard/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "patchguard/error.hpp"

namespace patchguard {

using nlohmann::ordered_json;

void Hyperparams::validate() const {
  if (!(learning_rate > 0)) throw Error("learning_rate must be positive");
  if (max_depth < 1) throw Error("max_depth must be positive");
  if (!(min_split_gain >= 0)) throw Error("gamma must be non-negative");
  if (rounds < 1) throw Error("rounds must be positive");
  if (!(reg_lambda >= 0)) throw Error("lambda must be non-negative");
}

double Tree::predict(const std::vector<double>& values) const {
  std::size_t i = 0;
  while (!nodes[i].leaf) i = values[nodes[i].feature] < nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].weight;
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].leaf) d[nodes[i].left] = d[nodes[i].right] = d[i] + 1;
  }
  return best;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

constexpr double kProbClip = 1e-7;
// Gains within this relative distance count as ties and keep the earlier split.
constexpr double kTieTolerance = 1e-9;

struct Candidate {
  double gain = 0;
  std::size_t feature = 0;
  double threshold = 0;
  bool found = false;
};

double score(double g, double h, double lambda) { return g * g / (h + lambda); }

double midpoint(double a, double b) {
  double m = a + (b - a) / 2;
  return m > a ? m : b;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& ds, const std::vector<std::vector<std::size_t>>& order, const Hyperparams& hp)
      : ds_(ds), order_(order), hp_(hp) {}

  Tree build(const std::vector<double>& grad, const std::vector<double>& hess) {
    const std::size_t n = ds_.rows.size();
    Tree tree;
    tree.nodes.push_back({});
    std::vector<std::size_t> node_of(n, 0);
    std::vector<std::size_t> level = {0};
    std::vector<double> G(1, 0), H(1, 0);
    for (std::size_t r = 0; r < n; ++r) {
      G[0] += grad[r];
      H[0] += hess[r];
    }

    for (int depth = 0; !level.empty(); ++depth) {
      std::vector<Candidate> best(tree.nodes.size());
      if (depth < hp_.max_depth) search(level, node_of, grad, hess, G, H, best);

      std::vector<std::size_t> next;
      for (auto id : level) {
        const Candidate& c = best[id];
        if (!c.found) {
          tree.nodes[id].leaf = true;
          tree.nodes[id].weight = -G[id] / (H[id] + hp_.reg_lambda) * hp_.learning_rate;
          continue;
        }
        std::size_t l = tree.nodes.size();
        tree.nodes.push_back({});
        tree.nodes.push_back({});
        auto& node = tree.nodes[id];
        node.leaf = false;
        node.feature = c.feature;
        node.threshold = c.threshold;
        node.gain = c.gain;
        node.left = l;
        node.right = l + 1;
        next.push_back(l);
        next.push_back(l + 1);
      }
      if (next.empty()) break;

      G.assign(tree.nodes.size(), 0);
      H.assign(tree.nodes.size(), 0);
      for (std::size_t r = 0; r < n; ++r) {
        const auto& node = tree.nodes[node_of[r]];
        if (node.leaf) continue;
        std::size_t child = ds_.rows[r].values[node.feature] < node.threshold ? node.left : node.right;
        node_of[r] = child;
        G[child] += grad[r];
        H[child] += hess[r];
      }
      level = std::move(next);
    }
    return tree;
  }

 private:
  void search(const std::vector<std::size_t>& level, const std::vector<std::size_t>& node_of,
              const std::vector<double>& grad, const std::vector<double>& hess, const std::vector<double>& G,
              const std::vector<double>& H, std::vector<Candidate>& best) const {
    const std::size_t slots = best.size();
    std::vector<char> active(slots, 0);
    for (auto id : level) active[id] = 1;
    std::vector<double> gl(slots), hl(slots), last(slots);
    std::vector<char> seen(slots);
    const double lambda = hp_.reg_lambda;

    for (std::size_t f = 0; f < ds_.width(); ++f) {
      std::fill(gl.begin(), gl.end(), 0.0);
      std::fill(hl.begin(), hl.end(), 0.0);
      std::fill(seen.begin(), seen.end(), 0);
      for (auto r : order_[f]) {
        std::size_t id = node_of[r];
        if (!active[id]) continue;
        double v = ds_.rows[r].values[f];
        if (seen[id] && v > last[id]) {
          double gr = G[id] - gl[id];
          double hr = H[id] - hl[id];
          double gain = 0.5 * (score(gl[id], hl[id], lambda) + score(gr, hr, lambda) - score(G[id], H[id], lambda));
          if (gain > 0 && gain >= hp_.min_split_gain && (!best[id].found || gain > best[id].gain * (1 + kTieTolerance))) {
            best[id] = {gain, f, midpoint(last[id], v), true};
          }
        }
        gl[id] += grad[r];
        hl[id] += hess[r];
        last[id] = v;
        seen[id] = 1;
      }
    }
  }

  const Dataset& ds_;
  const std::vector<std::vector<std::size_t>>& order_;
  const Hyperparams& hp_;
};

double row_loss(double margin, Label y) {
  double p = std::clamp(logistic(margin), kProbClip, 1 - kProbClip);
  return y == Label::kOverfitting ? -std::log(p) : -std::log(1 - p);
}

double mean_loss(const std::vector<double>& margin, const Dataset& ds) {
  double total = 0;
  for (std::size_t r = 0; r < margin.size(); ++r) total += row_loss(margin[r], *ds.rows[r].label);
  return margin.empty() ? 0 : total / static_cast<double>(margin.size());
}

}  // namespace

Model train(const Dataset& ds, const Hyperparams& hp) {
  hp.validate();
  if (ds.rows.empty()) throw EmptyDataset("cannot train on an empty dataset");
  ds.validate();
  std::size_t positives = 0;
  for (const auto& r : ds.rows) {
    if (!r.label) throw SchemaMismatch("training row " + r.patch_id + " is unlabeled");
    positives += *r.label == Label::kOverfitting;
  }
  const std::size_t n = ds.rows.size();

  Model m;
  m.schema_version = ds.schema_version;
  m.columns = ds.columns;
  m.hyperparams = hp;
  double prior = std::clamp(static_cast<double>(positives) / static_cast<double>(n), kProbClip, 1 - kProbClip);
  m.base_score = std::log(prior / (1 - prior));

  std::vector<double> margin(n, m.base_score);
  m.training_loss.push_back(mean_loss(margin, ds));
  if (positives == 0 || positives == n) return m;

  std::vector<std::vector<std::size_t>> order(ds.width());
  for (std::size_t f = 0; f < ds.width(); ++f) {
    order[f].resize(n);
    std::iota(order[f].begin(), order[f].end(), 0);
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](std::size_t a, std::size_t b) { return ds.rows[a].values[f] < ds.rows[b].values[f]; });
  }

  TreeBuilder builder(ds, order, hp);
  std::vector<double> grad(n), hess(n);
  for (int round = 0; round < hp.rounds; ++round) {
    for (std::size_t r = 0; r < n; ++r) {
      double p = logistic(margin[r]);
      grad[r] = p - (*ds.rows[r].label == Label::kOverfitting ? 1.0 : 0.0);
      hess[r] = std::max(p * (1 - p), 1e-16);
    }
    Tree tree = builder.build(grad, hess);
    if (tree.nodes.front().leaf) break;
    for (std::size_t r = 0; r < n; ++r) margin[r] += tree.predict(ds.rows[r].values);
    m.trees.push_back(std::move(tree));
    m.training_loss.push_back(mean_loss(margin, ds));
  }
  return m;
}

double predict_margin(const Model& m, const std::vector<double>& values) {
  if (values.size() != m.columns.size()) {
    throw SchemaMismatch("vector has " + std::to_string(values.size()) + " values, model expects " +
                         std::to_string(m.columns.size()));
  }
  double margin = m.base_score;
  for (const auto& t : m.trees) margin += t.predict(values);
  return margin;
}

double predict_proba(const Model& m, const std::vector<double>& values) { return logistic(predict_margin(m, values)); }

double predict_proba(const Model& m, const FeatureVector& v) {
  if (v.schema_version != m.schema_version) {
    throw SchemaMismatch("vector schema " + v.schema_version + " does not match model schema " + m.schema_version);
  }
  return predict_proba(m, std::vector<double>(v.values.begin(), v.values.end()));
}

Label classify_proba(double proba, double threshold) {
  return proba >= threshold ? Label::kOverfitting : Label::kCorrect;
}

Label classify(const Model& m, const std::vector<double>& values, double threshold) {
  return classify_proba(predict_proba(m, values), threshold);
}

std::vector<std::size_t> Model::split_counts() const {
  std::vector<std::size_t> counts(columns.size(), 0);
  for (const auto& t : trees) {
    for (const auto& n : t.nodes) {
      if (!n.leaf) ++counts.at(n.feature);
    }
  }
  return counts;
}

std::vector<std::pair<std::string, std::size_t>> feature_importance(const Model& m) {
  auto counts = m.split_counts();
  std::vector<std::pair<std::string, std::size_t>> out;
  out.reserve(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) out.emplace_back(m.columns[i], counts[i]);
  return out;
}

double log_loss(const Model& m, const Dataset& ds) {
  double total = 0;
  for (const auto& r : ds.rows) {
    if (!r.label) throw SchemaMismatch("row " + r.patch_id + " is unlabeled");
    total += row_loss(predict_margin(m, r.values), *r.label);
  }
  return ds.rows.empty() ? 0 : total / static_cast<double>(ds.rows.size());
}

namespace {

ordered_json node_json(const Tree& t, std::size_t i) {
  const auto& n = t.nodes[i];
  ordered_json j;
  if (n.leaf) {
    j["leaf"] = n.weight;
    return j;
  }
  j["feature"] = n.feature;
  j["threshold"] = n.threshold;
  j["gain"] = n.gain;
  j["left"] = node_json(t, n.left);
  j["right"] = node_json(t, n.right);
  return j;
}

std::size_t read_node(const ordered_json& j, Tree& t, std::size_t width, int depth) {
  if (depth > 64) throw SchemaMismatch("model tree too deep");
  std::size_t id = t.nodes.size();
  t.nodes.push_back({});
  if (j.contains("leaf")) {
    t.nodes[id].weight = j.at("leaf").get<double>();
    return id;
  }
  TreeNode n;
  n.leaf = false;
  n.feature = j.at("feature").get<std::size_t>();
  if (n.feature >= width) throw SchemaMismatch("split feature index out of range");
  n.threshold = j.at("threshold").get<double>();
  n.gain = j.at("gain").get<double>();
  n.left = read_node(j.at("left"), t, width, depth + 1);
  n.right = read_node(j.at("right"), t, width, depth + 1);
  t.nodes[id] = n;
  return id;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read model " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string Model::to_json() const {
  ordered_json doc;
  doc["format"] = "patchguard-model";
  doc["format_version"] = kModelFormatVersion;
  doc["schema_version"] = schema_version;
  doc["hyperparams"] = {{"learning_rate", hyperparams.learning_rate}, {"max_depth", hyperparams.max_depth},
                        {"gamma", hyperparams.min_split_gain},        {"rounds", hyperparams.rounds},
                        {"seed", hyperparams.seed},                   {"lambda", hyperparams.reg_lambda}};
  doc["base_score"] = base_score;
  doc["columns"] = columns;
  doc["training_loss"] = training_loss;
  auto counts = split_counts();
  ordered_json sc = ordered_json::object();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i]) sc[columns[i]] = counts[i];
  }
  doc["split_counts"] = sc;
  doc["trees"] = ordered_json::array();
  for (const auto& t : trees) doc["trees"].push_back(node_json(t, 0));
  return doc.dump(2) + "\n";
}

Model Model::from_json(const std::string& text) {
  Model m;
  try {
    auto doc = ordered_json::parse(text);
    if (doc.at("format") != "patchguard-model") throw SchemaMismatch("not a patchguard model");
    if (doc.at("format_version").get<int>() > kModelFormatVersion) {
      throw SchemaMismatch("model format version is newer than this build");
    }
    m.schema_version = doc.at("schema_version").get<std::string>();
    const auto& hp = doc.at("hyperparams");
    m.hyperparams.learning_rate = hp.at("learning_rate").get<double>();
    m.hyperparams.max_depth = hp.at("max_depth").get<int>();
    m.hyperparams.min_split_gain = hp.at("gamma").get<double>();
    m.hyperparams.rounds = hp.at("rounds").get<int>();
    m.hyperparams.seed = hp.at("seed").get<std::uint64_t>();
    m.hyperparams.reg_lambda = hp.value("lambda", 1.0);
    m.base_score = doc.at("base_score").get<double>();
    m.columns = doc.at("columns").get<std::vector<std::string>>();
    m.training_loss = doc.value("training_loss", std::vector<double>{});
    for (const auto& tj : doc.at("trees")) {
      Tree t;
      read_node(tj, t, m.columns.size(), 0);
      m.trees.push_back(std::move(t));
    }
  } catch (const ordered_json::exception& e) {
    throw SchemaMismatch(std::string("malformed model: ") + e.what());
  }
  return m;
}

void Model::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model " + path.string());
  out << to_json();
}

Model Model::load(const std::filesystem::path& path) { return from_json(slurp(path)); }

}  // namespace patchguard
