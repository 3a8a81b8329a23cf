#include "patchguard/grammar.hpp"

#include <mutex>

#include <json.hpp>

#include "java_mapping_embed.hpp"
#include "patchguard/error.hpp"
#include "patchguard/java.hpp"

namespace patchguard {

KindMapping KindMapping::from_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("grammar mapping is not valid JSON: ") + e.what());
  }
  KindMapping out;
  try {
    out.grammar_id = doc.at("grammar_id").get<std::string>();
    out.version = doc.at("version").get<std::string>();
    out.extensions = doc.value("extensions", std::vector<std::string>{});
    for (const auto& [concrete, normalized] : doc.at("kinds").items()) {
      auto kind = kind_from_name(normalized.get<std::string>());
      if (!kind) throw Error("grammar mapping: unknown normalized kind '" + normalized.get<std::string>() + "'");
      out.kinds.emplace(concrete, *kind);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("grammar mapping is malformed: ") + e.what());
  }
  return out;
}

NodeKind KindMapping::map(std::string_view concrete_kind) const {
  auto it = kinds.find(concrete_kind);
  if (it == kinds.end()) {
    throw Error("grammar '" + grammar_id + "' has no mapping for concrete kind '" + std::string(concrete_kind) + "'");
  }
  return it->second;
}

std::string_view builtin_java_mapping() { return kJavaMappingJson; }

GrammarRegistry& GrammarRegistry::global() {
  static GrammarRegistry* registry = [] {
    auto* r = new GrammarRegistry();
    r->add(KindMapping::from_json(builtin_java_mapping()), std::make_shared<java::Adapter>());
    return r;
  }();
  return *registry;
}

void GrammarRegistry::add(KindMapping mapping, std::shared_ptr<const GrammarAdapter> adapter) {
  std::unique_lock lock(mutex_);
  std::string id = mapping.grammar_id;
  entries_.insert_or_assign(std::move(id), Entry{std::move(mapping), std::move(adapter)});
}

bool GrammarRegistry::has(std::string_view grammar_id) const {
  std::shared_lock lock(mutex_);
  return entries_.find(grammar_id) != entries_.end();
}

const KindMapping& GrammarRegistry::mapping(std::string_view grammar_id) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(grammar_id);
  if (it == entries_.end()) throw UnknownGrammar(std::string(grammar_id));
  return it->second.mapping;
}

std::optional<std::string> GrammarRegistry::grammar_for_extension(std::string_view extension) const {
  std::shared_lock lock(mutex_);
  for (const auto& [id, entry] : entries_) {
    for (const auto& ext : entry.mapping.extensions) {
      if (ext == extension) return id;
    }
  }
  return std::nullopt;
}

NormalizedAst GrammarRegistry::parse(std::string_view source_text, std::string_view grammar_id) const {
  std::shared_ptr<const GrammarAdapter> adapter;
  const KindMapping* mapping = nullptr;
  {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(grammar_id);
    if (it == entries_.end()) throw UnknownGrammar(std::string(grammar_id));
    adapter = it->second.adapter;
    mapping = &it->second.mapping;
  }
  ConcreteTree tree = adapter->parse(source_text);
  return normalize(tree, *mapping, source_text);
}

NormalizedAst normalize(const ConcreteTree& tree, const KindMapping& mapping, std::string_view source_text) {
  std::vector<AstNode> nodes;
  nodes.reserve(tree.nodes.size());
  // Pre-order renumbering; nodes unreachable from the root are dropped.
  struct Frame {
    std::size_t concrete;
    NodeId parent;
  };
  std::vector<Frame> stack{{tree.root, kNoNode}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    const ConcreteNode& cn = tree.nodes.at(f.concrete);
    AstNode n;
    n.id = static_cast<NodeId>(nodes.size());
    n.kind = mapping.map(cn.kind);
    n.label = cn.label;
    n.parent = f.parent;
    n.span = cn.span;
    if (f.parent != kNoNode) nodes[static_cast<std::size_t>(f.parent)].children.push_back(n.id);
    nodes.push_back(std::move(n));
    for (auto it = cn.children.rbegin(); it != cn.children.rend(); ++it) {
      stack.push_back({*it, static_cast<NodeId>(nodes.size() - 1)});
    }
  }
  // The stack visits children in order, but a child's id is only assigned
  // when popped, so children lists are already in source order.
  for (const AstNode& n : nodes) {
    std::size_t cursor = n.span.begin;
    for (NodeId c : n.children) {
      const Span& cs = nodes[static_cast<std::size_t>(c)].span;
      if (cs.begin < cursor || cs.end > n.span.end || cs.begin > cs.end) {
        throw Error("grammar adapter produced overlapping or escaping spans under node " +
                    std::to_string(n.id));
      }
      cursor = cs.end;
    }
  }
  std::vector<std::size_t> line_starts{0};
  for (std::size_t i = 0; i < source_text.size(); ++i) {
    if (source_text[i] == '\n') line_starts.push_back(i + 1);
  }
  return NormalizedAst(std::move(nodes), 0, mapping.grammar_id, {}, std::move(line_starts));
}

}  // namespace patchguard
