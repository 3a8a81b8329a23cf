#pragma once

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "patchguard/ast.hpp"

namespace patchguard {

// Tree produced by a concrete parser, before kind normalization.
struct ConcreteNode {
  std::string kind;
  std::string label;
  Span span;
  std::vector<std::size_t> children;
};

struct ConcreteTree {
  std::vector<ConcreteNode> nodes;
  std::size_t root = 0;
};

class GrammarAdapter {
 public:
  virtual ~GrammarAdapter() = default;
  // Throws SyntaxError when no tree can be produced.
  virtual ConcreteTree parse(std::string_view source_text) const = 0;
};

// Concrete kind -> normalized kind table, loaded from a versioned mapping file.
struct KindMapping {
  std::string grammar_id;
  std::string version;
  std::vector<std::string> extensions;
  std::map<std::string, NodeKind, std::less<>> kinds;

  static KindMapping from_json(std::string_view json_text);
  NodeKind map(std::string_view concrete_kind) const;
};

class GrammarRegistry {
 public:
  // Process-wide registry with the Java adapter preinstalled.
  static GrammarRegistry& global();

  void add(KindMapping mapping, std::shared_ptr<const GrammarAdapter> adapter);
  bool has(std::string_view grammar_id) const;
  const KindMapping& mapping(std::string_view grammar_id) const;
  std::optional<std::string> grammar_for_extension(std::string_view extension) const;

  NormalizedAst parse(std::string_view source_text, std::string_view grammar_id) const;

 private:
  struct Entry {
    KindMapping mapping;
    std::shared_ptr<const GrammarAdapter> adapter;
  };
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry, std::less<>> entries_;
};

// Converts a concrete tree into a NormalizedAst, validating the tree invariants.
NormalizedAst normalize(const ConcreteTree& tree, const KindMapping& mapping,
                        std::string_view source_text);

// The mapping file shipped for Java, embedded at build time.
std::string_view builtin_java_mapping();

}  // namespace patchguard
