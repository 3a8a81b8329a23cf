#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "patchguard/ast.hpp"
#include "patchguard/corpus.hpp"
#include "patchguard/diff.hpp"
#include "patchguard/error.hpp"
#include "patchguard/eval.hpp"
#include "patchguard/features.hpp"
#include "patchguard/learner.hpp"
#include "patchguard/pipeline.hpp"

namespace py = pybind11;
using namespace patchguard;

namespace {

py::dict raw_to_dict(const RawFeatures& raw) {
  py::dict out;
  for (const auto& [name, value] : raw.values) {
    if (const int* i = std::get_if<int>(&value)) {
      out[py::str(name)] = *i;
    } else {
      out[py::str(name)] = std::get<std::string>(value);
    }
  }
  return out;
}

py::object optional_float(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

py::dict split_to_dict(const SplitResult& s) {
  py::dict d;
  d["name"] = s.name;
  d["tp"] = s.confusion.tp;
  d["fp"] = s.confusion.fp;
  d["tn"] = s.confusion.tn;
  d["fn"] = s.confusion.fn;
  d["precision"] = optional_float(s.metrics.precision);
  d["recall"] = optional_float(s.metrics.recall);
  d["accuracy"] = optional_float(s.metrics.accuracy);
  d["cpr"] = optional_float(s.cpr);
  d["train_rows"] = s.train_rows;
  return d;
}

Hyperparams make_hp(double learning_rate, int max_depth, double gamma, int rounds, std::uint64_t seed) {
  Hyperparams hp;
  hp.learning_rate = learning_rate;
  hp.max_depth = max_depth;
  hp.min_split_gain = gamma;
  hp.rounds = rounds;
  hp.seed = seed;
  hp.validate();
  return hp;
}

EvalOptions make_options(double learning_rate, int max_depth, double gamma, int rounds, std::uint64_t seed,
                         double threshold, std::size_t min_outlied) {
  EvalOptions opt;
  opt.hp = make_hp(learning_rate, max_depth, gamma, rounds, seed);
  opt.seed = seed;
  opt.threshold = threshold;
  opt.min_outlied = min_outlied;
  return opt;
}

}  // namespace

PYBIND11_MODULE(_patchguard, m) {
  m.doc() = "AST feature extraction, edit scripts and boosted overfitting classification";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<SyntaxError>(m, "ParseError", error.ptr());
  py::register_exception<UnknownGrammar>(m, "UnknownGrammar", error.ptr());
  py::register_exception<SchemaMismatch>(m, "SchemaMismatch", error.ptr());
  py::register_exception<CorpusNotFound>(m, "CorpusNotFound", error.ptr());
  py::register_exception<SingleClass>(m, "SingleClass", error.ptr());
  py::register_exception<TooFewMinority>(m, "TooFewMinority", error.ptr());
  py::register_exception<EmptyDataset>(m, "EmptyDataset", error.ptr());

  py::class_<NormalizedAst>(m, "Ast")
      .def("__len__", &NormalizedAst::size)
      .def_property_readonly("grammar", &NormalizedAst::grammar_id)
      .def("sexpr", [](const NormalizedAst& a) { return a.root() == kNoNode ? std::string() : to_sexpr(a, a.root()); })
      .def("isomorphic", [](const NormalizedAst& a, const NormalizedAst& b) { return isomorphic(a, b); });

  m.def("parse", &parse_source, py::arg("source"), py::arg("grammar") = "java",
        "Parse source text into a normalized AST.");

  py::class_<EditScript>(m, "EditScript")
      .def("__len__", [](const EditScript& s) { return s.actions.size(); })
      .def_property_readonly("ops", [](const EditScript& s) {
        std::vector<std::string> ops;
        for (const auto& a : s.actions) ops.emplace_back(op_name(a.op));
        return ops;
      });

  m.def("diff", &diff, py::arg("buggy"), py::arg("patched"));
  m.def("apply", &apply, py::arg("buggy"), py::arg("script"));
  m.def("diff_text", [](const std::string& buggy, const std::string& patched) {
    auto a = parse_source(buggy, "java");
    auto b = parse_source(patched, "java");
    return to_text(diff(a, b), a, b);
  }, py::arg("buggy"), py::arg("patched"), "Edit script between two Java sources, one action per line.");

  m.def("extract_features", [](const std::string& buggy, const std::string& patched) {
    auto a = parse_source(buggy, "java");
    auto b = parse_source(patched, "java");
    return raw_to_dict(extract_features(a, b, diff(a, b)));
  }, py::arg("buggy"), py::arg("patched"), "Raw feature values of one Java file pair.");

  m.def("encode_features", [](const std::string& buggy, const std::string& patched) {
    auto a = parse_source(buggy, "java");
    auto b = parse_source(patched, "java");
    return encode({extract_features(a, b, diff(a, b))}, FeatureSchema::standard()).values;
  }, py::arg("buggy"), py::arg("patched"), "Expanded feature vector of one Java file pair.");

  m.def("schema_columns", [] { return FeatureSchema::standard().column_names(); });
  m.def("raw_feature_count", [] { return FeatureSchema::standard().raw_size(); });
  m.def("catalog_json", [] { return FeatureSchema::standard().catalog_json(); });

  py::class_<Dataset>(m, "Dataset")
      .def("__len__", [](const Dataset& d) { return d.rows.size(); })
      .def_readonly("columns", &Dataset::columns)
      .def_readonly("schema_version", &Dataset::schema_version)
      .def_property_readonly("patch_ids", [](const Dataset& d) {
        std::vector<std::string> ids;
        for (const auto& r : d.rows) ids.push_back(r.patch_id);
        return ids;
      })
      .def_property_readonly("labels", [](const Dataset& d) {
        std::vector<std::optional<int>> out;
        for (const auto& r : d.rows) out.push_back(r.label ? std::optional<int>(static_cast<int>(*r.label)) : std::nullopt);
        return out;
      })
      .def_property_readonly("values", [](const Dataset& d) {
        std::vector<std::vector<double>> out;
        for (const auto& r : d.rows) out.push_back(r.values);
        return out;
      })
      .def("to_csv", &matrix_to_csv)
      .def_static("from_csv", [](const std::string& text) { return matrix_from_csv(text); })
      .def("save", [](const Dataset& d, const std::filesystem::path& p) { write_matrix(d, p); })
      .def_static("load", &read_matrix);

  m.def("extract_corpus", [](const std::filesystem::path& root, unsigned threads) {
    ExtractSummary summary;
    Dataset ds = extract_corpus(root, FeatureSchema::standard(), threads, summary);
    return py::make_tuple(ds, summary.warnings);
  }, py::arg("root"), py::arg("threads") = 0,
        "Ingest, deduplicate and extract a corpus. Returns (dataset, warnings).");

  m.def("prune_outliers", [](const Dataset& d, std::size_t min_outlied) { return prune_outliers(d, min_outlied); },
        py::arg("dataset"), py::arg("min_outlied") = 15);
  m.def("smote", &smote_minority, py::arg("dataset"), py::arg("k") = 5, py::arg("seed") = 42);

  py::class_<Model>(m, "Model")
      .def_property_readonly("tree_count", [](const Model& mm) { return mm.trees.size(); })
      .def_readonly("columns", &Model::columns)
      .def_readonly("training_loss", &Model::training_loss)
      .def_readonly("base_score", &Model::base_score)
      .def("split_counts", &Model::split_counts)
      .def("predict_proba", [](const Model& mm, const std::vector<double>& v) { return predict_proba(mm, v); })
      .def("classify", [](const Model& mm, const std::vector<double>& v, double threshold) {
        return static_cast<int>(classify(mm, v, threshold));
      }, py::arg("values"), py::arg("threshold") = 0.5)
      .def("to_json", &Model::to_json)
      .def_static("from_json", &Model::from_json)
      .def("save", &Model::save)
      .def_static("load", &Model::load);

  m.def("train", [](const Dataset& d, double learning_rate, int max_depth, double gamma, int rounds,
                    std::uint64_t seed) { return train(d, make_hp(learning_rate, max_depth, gamma, rounds, seed)); },
        py::arg("dataset"), py::arg("learning_rate") = 0.3, py::arg("max_depth") = 6, py::arg("gamma") = 0.5,
        py::arg("rounds") = 100, py::arg("seed") = 42);

  m.def("metrics", [](std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
    Confusion c{tp, fp, tn, fn};
    auto mm = metrics(c);
    py::dict d;
    d["precision"] = optional_float(mm.precision);
    d["recall"] = optional_float(mm.recall);
    d["accuracy"] = optional_float(mm.accuracy);
    d["cpr"] = optional_float(cpr(c));
    return d;
  }, py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"));

  py::class_<EvalReport>(m, "EvalReport")
      .def_property_readonly("splits", [](const EvalReport& r) {
        py::list out;
        for (const auto& s : r.splits) out.append(split_to_dict(s));
        return out;
      })
      .def_property_readonly("aggregate", [](const EvalReport& r) { return split_to_dict(r.aggregate); })
      .def("to_json", &EvalReport::to_json)
      .def("to_csv", &EvalReport::to_csv)
      .def("outcomes_csv", &EvalReport::outcomes_csv);

  m.def("kfold", [](const Dataset& d, std::size_t k, double learning_rate, int max_depth, double gamma, int rounds,
                    std::uint64_t seed, double threshold, std::size_t min_outlied) {
    return kfold_cv(d, k, make_options(learning_rate, max_depth, gamma, rounds, seed, threshold, min_outlied));
  }, py::arg("dataset"), py::arg("k") = 10, py::arg("learning_rate") = 0.3, py::arg("max_depth") = 6,
        py::arg("gamma") = 0.5, py::arg("rounds") = 100, py::arg("seed") = 42, py::arg("threshold") = 0.5,
        py::arg("min_outlied") = 15);

  m.def("leave_one_group_out", [](const Dataset& d, const std::string& key, double learning_rate, int max_depth,
                                  double gamma, int rounds, std::uint64_t seed, double threshold,
                                  std::size_t min_outlied) {
    return leave_one_group_out(d, parse_group_key(key),
                               make_options(learning_rate, max_depth, gamma, rounds, seed, threshold, min_outlied));
  }, py::arg("dataset"), py::arg("key") = "project", py::arg("learning_rate") = 0.3, py::arg("max_depth") = 6,
        py::arg("gamma") = 0.5, py::arg("rounds") = 100, py::arg("seed") = 42, py::arg("threshold") = 0.5,
        py::arg("min_outlied") = 15);

  m.attr("__version__") = "1.0.0";
}
