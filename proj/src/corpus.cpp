#include "patchguard/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "patchguard/diff.hpp"
#include "patchguard/error.hpp"
#include "patchguard/java.hpp"

namespace patchguard {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view label_name(Label l) { return l == Label::kOverfitting ? "overfitting" : "correct"; }

Label parse_label(std::string_view text) {
  if (text == "overfitting" || text == "1") return Label::kOverfitting;
  if (text == "correct" || text == "0") return Label::kCorrect;
  throw Error("unknown label: " + std::string(text));
}

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const WarningSink& warn, const std::string& message) {
  if (warn) warn(message);
}

std::string required_string(const json& doc, const char* key, const std::string& patch_id) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw MalformedMetadata(patch_id, std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

bool safe_relative(const std::string& p) {
  fs::path rel(p);
  if (p.empty() || rel.is_absolute()) return false;
  return std::none_of(rel.begin(), rel.end(), [](const fs::path& part) { return part == ".."; });
}

}  // namespace

PatchRecord read_metadata(const fs::path& patch_dir) {
  PatchRecord rec;
  rec.patch_id = patch_dir.filename().string();
  rec.directory = patch_dir;
  fs::path meta = patch_dir / "metadata.json";
  if (!fs::is_regular_file(meta)) throw MalformedMetadata(rec.patch_id, "metadata.json not found");

  json doc;
  try {
    doc = json::parse(read_text(meta));
  } catch (const json::exception& e) {
    throw MalformedMetadata(rec.patch_id, e.what());
  }
  if (!doc.is_object()) throw MalformedMetadata(rec.patch_id, "top level is not an object");

  rec.project = required_string(doc, "project", rec.patch_id);
  rec.tool = required_string(doc, "tool", rec.patch_id);
  if (auto it = doc.find("label"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) throw MalformedMetadata(rec.patch_id, "label must be a string");
    try {
      rec.label = parse_label(it->get<std::string>());
    } catch (const Error&) {
      throw MalformedMetadata(rec.patch_id, "label must be 'correct' or 'overfitting'");
    }
  }

  auto files = doc.find("files");
  if (files == doc.end() || !files->is_array() || files->empty()) {
    throw MalformedMetadata(rec.patch_id, "'files' must be a non-empty list");
  }
  for (const auto& f : *files) {
    FilePair pair;
    if (f.is_string()) {
      pair.buggy = pair.patched = f.get<std::string>();
    } else if (f.is_object() && f.contains("buggy") && f.contains("patched") && f["buggy"].is_string() &&
               f["patched"].is_string()) {
      pair.buggy = f["buggy"].get<std::string>();
      pair.patched = f["patched"].get<std::string>();
    } else {
      throw MalformedMetadata(rec.patch_id, "file entries are paths or {buggy, patched} objects");
    }
    if (!safe_relative(pair.buggy) || !safe_relative(pair.patched)) {
      throw MalformedMetadata(rec.patch_id, "file paths must be relative and stay inside the patch");
    }
    rec.file_pairs.push_back(std::move(pair));
  }
  return rec;
}

std::vector<PatchRecord> ingest(const fs::path& corpus_root, const WarningSink& warn) {
  if (!fs::is_directory(corpus_root)) throw CorpusNotFound("corpus not found: " + corpus_root.string());

  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(corpus_root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  std::vector<PatchRecord> out;
  for (const auto& dir : dirs) {
    try {
      PatchRecord rec = read_metadata(dir);
      for (const auto& f : rec.file_pairs) {
        for (const auto& p : {rec.buggy_path(f), rec.patched_path(f)}) {
          if (!fs::is_regular_file(p)) throw Error("missing file " + p.string());
        }
      }
      out.push_back(std::move(rec));
    } catch (const Error& e) {
      emit(warn, "skipping patch " + dir.filename().string() + ": " + e.what());
    }
  }
  return out;
}

std::string patch_fingerprint(const PatchRecord& record) {
  std::string key;
  auto append = [&key](const fs::path& p) {
    std::string text = read_text(p);
    for (const auto& tok : java::tokenize(text)) {
      key.append(tok.text);
      key.push_back('\x1f');
    }
    key.push_back('\x1e');
  };
  for (const auto& f : record.file_pairs) {
    append(record.buggy_path(f));
    append(record.patched_path(f));
    key.push_back('\x1d');
  }
  return key;
}

std::vector<PatchRecord> deduplicate(const std::vector<PatchRecord>& records, const WarningSink& warn) {
  std::map<std::string, std::string> seen;
  std::vector<PatchRecord> out;
  for (const auto& rec : records) {
    std::string key;
    try {
      key = patch_fingerprint(rec);
    } catch (const Error& e) {
      emit(warn, "cannot fingerprint patch " + rec.patch_id + ": " + e.what());
      out.push_back(rec);
      continue;
    }
    auto [it, inserted] = seen.emplace(std::move(key), rec.patch_id);
    if (inserted) {
      out.push_back(rec);
    } else {
      emit(warn, "patch " + rec.patch_id + " duplicates " + it->second);
    }
  }
  return out;
}

std::size_t Dataset::count(Label l) const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [l](const DatasetRow& r) { return r.label == l; }));
}

void Dataset::validate() const {
  for (const auto& r : rows) {
    if (r.values.size() != columns.size()) {
      throw SchemaMismatch("row " + r.patch_id + " has " + std::to_string(r.values.size()) + " values, expected " +
                           std::to_string(columns.size()));
    }
  }
}

FeatureVector extract_patch(const PatchRecord& record, const FeatureSchema& schema) {
  std::vector<RawFeatures> per_diff;
  per_diff.reserve(record.file_pairs.size());
  for (const auto& f : record.file_pairs) {
    NormalizedAst buggy = parse_source(read_text(record.buggy_path(f)), "java");
    NormalizedAst patched = parse_source(read_text(record.patched_path(f)), "java");
    EditScript script = diff(buggy, patched);
    per_diff.push_back(extract_features(buggy, patched, script));
  }
  return encode(per_diff, schema);
}

Dataset build_dataset(const std::vector<PatchRecord>& records, const FeatureSchema& schema, const WarningSink& warn,
                      unsigned threads) {
  std::vector<std::optional<FeatureVector>> vectors(records.size());
  std::vector<std::string> errors(records.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      try {
        vectors[i] = extract_patch(records[i], schema);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(records.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  Dataset ds;
  ds.schema_version = schema.version();
  ds.columns = schema.column_names();
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!vectors[i]) {
      emit(warn, "skipping patch " + records[i].patch_id + ": " + errors[i]);
      continue;
    }
    DatasetRow row{records[i].patch_id, records[i].project, records[i].tool, records[i].label, {}, {}};
    row.values.assign(vectors[i]->values.begin(), vectors[i]->values.end());
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

Dataset select_rows(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.schema_version = ds.schema_version;
  out.columns = ds.columns;
  out.provenance = ds.provenance;
  out.rows.reserve(indices.size());
  for (auto i : indices) out.rows.push_back(ds.rows.at(i));
  return out;
}

Dataset select_columns(const Dataset& ds, const std::vector<std::size_t>& columns) {
  Dataset out;
  out.schema_version = ds.schema_version;
  out.provenance = ds.provenance;
  for (auto c : columns) out.columns.push_back(ds.columns.at(c));
  out.rows.reserve(ds.rows.size());
  for (const auto& r : ds.rows) {
    DatasetRow row{r.patch_id, r.project, r.tool, r.label, {}, r.derived_from};
    row.values.reserve(columns.size());
    for (auto c : columns) row.values.push_back(r.values.at(c));
    out.rows.push_back(std::move(row));
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw EmptyDataset("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  double pos = q * static_cast<double>(values.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = std::min(lo + 1, values.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Dataset prune_outliers(const Dataset& ds, std::size_t min_outlied, std::vector<std::string>* removed) {
  if (ds.rows.empty()) throw EmptyDataset("cannot prune an empty dataset");
  if (ds.provenance.resampled) throw Error("outlier pruning must run before resampling");
  ds.validate();
  Dataset out = ds;
  out.provenance.outlier_pruned = true;
  if (min_outlied == 0) return out;

  const std::size_t n = ds.rows.size();
  std::vector<std::size_t> outlied(n, 0);
  std::vector<double> column(n);
  for (std::size_t c = 0; c < ds.width(); ++c) {
    for (std::size_t r = 0; r < n; ++r) column[r] = ds.rows[r].values[c];
    double q1 = quantile(column, 0.25);
    double q3 = quantile(column, 0.75);
    double iqr = q3 - q1;
    double lo = q1 - 1.5 * iqr;
    double hi = q3 + 1.5 * iqr;
    for (std::size_t r = 0; r < n; ++r) {
      if (column[r] < lo || column[r] > hi) ++outlied[r];
    }
  }

  out.rows.clear();
  for (std::size_t r = 0; r < n; ++r) {
    if (outlied[r] >= min_outlied) {
      if (removed) removed->push_back(ds.rows[r].patch_id);
    } else {
      out.rows.push_back(ds.rows[r]);
    }
  }
  return out;
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next() { return engine_(); }

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw Error("Rng::below(0)");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

Dataset smote_minority(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  ds.validate();
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const auto& label = ds.rows[i].label;
    if (!label) throw SchemaMismatch("resampling needs labeled rows; " + ds.rows[i].patch_id + " is unlabeled");
    (*label == Label::kOverfitting ? pos : neg).push_back(i);
  }
  if (pos.empty() || neg.empty()) throw SingleClass("resampling needs both classes");
  if (k == 0) throw Error("SMOTE needs k >= 1");

  Dataset out = ds;
  out.provenance.resampled = true;
  if (pos.size() == neg.size()) return out;

  const auto& minority = pos.size() < neg.size() ? pos : neg;
  const std::size_t needed = (pos.size() < neg.size() ? neg.size() : pos.size()) - minority.size();
  if (minority.size() < 2) throw TooFewMinority("SMOTE needs at least 2 minority rows");
  const Label minority_label = *ds.rows[minority.front()].label;

  const std::size_t m = minority.size();
  const std::size_t kk = std::min(k, m - 1);
  std::vector<std::vector<std::size_t>> neighbors(m);
  for (std::size_t a = 0; a < m; ++a) {
    std::vector<std::pair<double, std::size_t>> dist;
    const auto& va = ds.rows[minority[a]].values;
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      const auto& vb = ds.rows[minority[b]].values;
      double d = 0;
      for (std::size_t c = 0; c < va.size(); ++c) d += (va[c] - vb[c]) * (va[c] - vb[c]);
      dist.emplace_back(d, b);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    for (std::size_t j = 0; j < kk; ++j) neighbors[a].push_back(dist[j].second);
  }

  Rng rng(seed);
  for (std::size_t s = 0; s < needed; ++s) {
    std::size_t a = rng.below(m);
    std::size_t b = neighbors[a][rng.below(kk)];
    double u = rng.uniform();
    const auto& base = ds.rows[minority[a]];
    const auto& other = ds.rows[minority[b]];
    DatasetRow row;
    row.patch_id = "smote:" + std::to_string(s) + ":" + base.patch_id;
    row.project = base.project;
    row.tool = base.tool;
    row.label = minority_label;
    row.values.resize(base.values.size());
    for (std::size_t c = 0; c < base.values.size(); ++c) {
      row.values[c] = base.values[c] + u * (other.values[c] - base.values[c]);
    }
    row.derived_from = {base.patch_id, other.patch_id};
    out.rows.push_back(std::move(row));
  }
  return out;
}

namespace {

std::string format_number(double v) {
  if (v == 0) return "0";
  if (std::nearbyint(v) == v && std::fabs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
      any = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += ch;
      any = true;
    }
  }
  if (quoted) throw SchemaMismatch("unterminated quoted field in matrix");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

const std::vector<std::string> kMatrixPrefix = {"patch_id", "project", "tool", "label"};

json provenance_json(const Dataset& ds) {
  json doc = json::object();
  doc["schema_version"] = ds.schema_version;
  doc["rows"] = ds.rows.size();
  doc["columns"] = ds.columns.size();
  doc["provenance"] = {{"raw", ds.provenance.raw},
                       {"deduplicated", ds.provenance.deduplicated},
                       {"outlier_pruned", ds.provenance.outlier_pruned},
                       {"resampled", ds.provenance.resampled}};
  json derived = json::object();
  for (const auto& r : ds.rows) {
    if (!r.derived_from.empty()) derived[r.patch_id] = r.derived_from;
  }
  doc["derived_from"] = derived;
  return doc;
}

}  // namespace

std::string matrix_to_csv(const Dataset& ds) {
  ds.validate();
  std::string out;
  for (std::size_t i = 0; i < kMatrixPrefix.size(); ++i) out += (i ? "," : "") + kMatrixPrefix[i];
  for (const auto& c : ds.columns) out += "," + csv_field(c);
  out += '\n';
  for (const auto& r : ds.rows) {
    out += csv_field(r.patch_id) + "," + csv_field(r.project) + "," + csv_field(r.tool) + ",";
    if (r.label) out += *r.label == Label::kOverfitting ? "1" : "0";
    for (double v : r.values) out += "," + format_number(v);
    out += '\n';
  }
  return out;
}

Dataset matrix_from_csv(std::string_view text) {
  auto rows = parse_csv(text);
  if (rows.empty()) throw SchemaMismatch("matrix has no header");
  const auto& header = rows.front();
  if (header.size() < kMatrixPrefix.size() ||
      !std::equal(kMatrixPrefix.begin(), kMatrixPrefix.end(), header.begin())) {
    throw SchemaMismatch("matrix header must start with patch_id,project,tool,label");
  }
  Dataset ds;
  ds.columns.assign(header.begin() + 4, header.end());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& fields = rows[i];
    if (fields.size() != header.size()) {
      throw SchemaMismatch("matrix line " + std::to_string(i + 1) + " has " + std::to_string(fields.size()) +
                           " fields, header has " + std::to_string(header.size()));
    }
    DatasetRow row{fields[0], fields[1], fields[2], std::nullopt, {}, {}};
    if (!fields[3].empty()) {
      if (fields[3] != "0" && fields[3] != "1") throw SchemaMismatch("label must be 0, 1 or empty");
      row.label = parse_label(fields[3]);
    }
    row.values.reserve(ds.columns.size());
    for (std::size_t c = 4; c < fields.size(); ++c) {
      double v = 0;
      const auto& f = fields[c];
      auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw SchemaMismatch("bad number '" + f + "' on matrix line " + std::to_string(i + 1));
      }
      row.values.push_back(v);
    }
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

fs::path provenance_path(const fs::path& matrix_path) {
  fs::path p = matrix_path;
  p += ".provenance.json";
  return p;
}

void write_matrix(const Dataset& ds, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << matrix_to_csv(ds);
  }
  std::ofstream side(provenance_path(path), std::ios::binary);
  if (!side) throw Error("cannot write " + provenance_path(path).string());
  side << provenance_json(ds).dump(2) << '\n';
}

Dataset read_matrix(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error("matrix not found: " + path.string());
  Dataset ds = matrix_from_csv(read_text(path));
  fs::path side = provenance_path(path);
  if (!fs::is_regular_file(side)) return ds;
  json doc;
  try {
    doc = json::parse(read_text(side));
    ds.schema_version = doc.at("schema_version").get<std::string>();
    const auto& p = doc.at("provenance");
    ds.provenance.raw = p.at("raw").get<bool>();
    ds.provenance.deduplicated = p.at("deduplicated").get<bool>();
    ds.provenance.outlier_pruned = p.at("outlier_pruned").get<bool>();
    ds.provenance.resampled = p.at("resampled").get<bool>();
    if (doc.contains("derived_from")) {
      const auto& derived = doc["derived_from"];
      for (auto& r : ds.rows) {
        if (auto it = derived.find(r.patch_id); it != derived.end()) r.derived_from = it->get<std::vector<std::string>>();
      }
    }
  } catch (const json::exception& e) {
    throw SchemaMismatch("bad provenance sidecar " + side.string() + ": " + e.what());
  }
  return ds;
}

}  // namespace patchguard
