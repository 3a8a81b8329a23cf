#include "patchguard/ast.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>

#include "patchguard/error.hpp"
#include "patchguard/grammar.hpp"

namespace patchguard {
namespace {

constexpr std::array<std::string_view, kNodeKindCount> kKindNames = {
    "assignment",        "conditional",       "loop",
    "try",               "catch",             "return",
    "invocation-statement", "branch-case",    "break",
    "continue",          "throw",             "variable-declaration",
    "block",             "method",            "class",
    "constructor",       "synchronized-block", "other",
    "compilation-unit",  "package",           "import",
    "modifier",          "annotation",        "declaration-keyword",
    "extends",           "implements",        "type-ref",
    "type-parameters",   "name",              "parameter-list",
    "parameter",         "throws-list",       "variable-declarator",
    "condition",         "for-init",          "for-update",
    "case-group",        "case-label",        "label",
    "finally",           "resources",         "class-body",
    "enum-constant",     "identifier",        "method-name",
    "field-name",        "number-literal",    "string-literal",
    "char-literal",      "boolean-literal",   "null-literal",
    "this",              "super",             "operator",
    "binary-operation",  "unary-operation",   "postfix-operation",
    "assignment-expression", "conditional-expression", "instance-of",
    "cast",              "method-invocation", "arguments",
    "field-access",      "array-access",      "object-creation",
    "array-creation",    "array-initializer", "lambda",
    "method-reference",  "class-literal",     "parenthesized",
};

constexpr std::array<NodeKind, 18> kStatementKinds = {
    NodeKind::kAssignment,          NodeKind::kConditional,       NodeKind::kLoop,
    NodeKind::kTry,                 NodeKind::kCatch,             NodeKind::kReturn,
    NodeKind::kInvocationStatement, NodeKind::kBranchCase,        NodeKind::kBreak,
    NodeKind::kContinue,            NodeKind::kThrow,             NodeKind::kVariableDeclaration,
    NodeKind::kBlock,               NodeKind::kMethodDeclaration, NodeKind::kClassDeclaration,
    NodeKind::kConstructorDeclaration, NodeKind::kSynchronizedBlock, NodeKind::kOther,
};

bool is_type_scope(NodeKind k) { return k == NodeKind::kClassDeclaration || k == NodeKind::kClassBody; }

std::string base_type_name(std::string_view type) {
  std::size_t cut = type.find_first_of("<[");
  std::string_view base = type.substr(0, cut);
  std::size_t dot = base.rfind('.');
  if (dot != std::string_view::npos) base = base.substr(dot + 1);
  return std::string(base);
}

// Declared type label of a VariableDeclaration or Parameter owner.
std::string declared_type_of(const NormalizedAst& ast, NodeId owner) {
  NodeId t = ast.child_of_kind(owner, NodeKind::kTypeRef);
  return t == kNoNode ? std::string("var") : ast.label(t);
}

struct Found {
  NodeId decl = kNoNode;
  std::string type;
  bool global = false;
  bool enum_constant = false;
};

// Declarators named `name` directly inside a VariableDeclaration node.
NodeId declarator_named(const NormalizedAst& ast, NodeId decl, std::string_view name) {
  for (NodeId c : ast.children(decl)) {
    if (ast.kind(c) != NodeKind::kVariableDeclarator) continue;
    NodeId n = ast.child_of_kind(c, NodeKind::kName);
    if (n != kNoNode && ast.label(n) == name) return c;
  }
  return kNoNode;
}

NodeId parameter_named(const NormalizedAst& ast, NodeId param, std::string_view name) {
  if (ast.kind(param) == NodeKind::kName) return ast.label(param) == name ? param : kNoNode;
  if (ast.kind(param) != NodeKind::kParameter) return kNoNode;
  NodeId n = ast.child_of_kind(param, NodeKind::kName);
  return n != kNoNode && ast.label(n) == name ? param : kNoNode;
}

std::optional<Found> find_field(const NormalizedAst& ast, NodeId type_scope, std::string_view name) {
  for (NodeId c : ast.children(type_scope)) {
    NodeKind k = ast.kind(c);
    if (k == NodeKind::kVariableDeclaration) {
      NodeId d = declarator_named(ast, c, name);
      if (d != kNoNode) return Found{d, declared_type_of(ast, c), true, false};
    } else if (k == NodeKind::kEnumConstant) {
      NodeId n = ast.child_of_kind(c, NodeKind::kName);
      if (n != kNoNode && ast.label(n) == name) {
        NodeId nm = ast.child_of_kind(type_scope, NodeKind::kName);
        return Found{c, nm == kNoNode ? std::string() : ast.label(nm), true, true};
      }
    } else if (k == NodeKind::kParameterList && ast.kind(type_scope) == NodeKind::kClassDeclaration) {
      for (NodeId p : ast.children(c)) {
        if (parameter_named(ast, p, name) != kNoNode) return Found{p, declared_type_of(ast, p), true, false};
      }
    }
  }
  return std::nullopt;
}

std::optional<Found> lookup(const NormalizedAst& ast, NodeId from, std::string_view name) {
  NodeId child = from;
  NodeId scope = ast.parent(from);
  bool crossed_callable = false;
  while (scope != kNoNode) {
    NodeKind k = ast.kind(scope);
    if (k == NodeKind::kBlock || k == NodeKind::kCaseGroup) {
      for (NodeId c : ast.children(scope)) {
        if (c == child) break;
        if (ast.kind(c) == NodeKind::kVariableDeclaration) {
          NodeId d = declarator_named(ast, c, name);
          if (d != kNoNode) return Found{d, declared_type_of(ast, c), crossed_callable, false};
        }
      }
    } else if (k == NodeKind::kLoop) {
      for (NodeId c : ast.children(scope)) {
        if (c == child) break;
        if (ast.kind(c) == NodeKind::kForInit) {
          for (NodeId d : ast.children(c)) {
            if (ast.kind(d) != NodeKind::kVariableDeclaration) continue;
            NodeId hit = declarator_named(ast, d, name);
            if (hit != kNoNode) return Found{hit, declared_type_of(ast, d), crossed_callable, false};
          }
        } else if (ast.kind(c) == NodeKind::kParameter && parameter_named(ast, c, name) != kNoNode) {
          return Found{c, declared_type_of(ast, c), crossed_callable, false};
        }
      }
    } else if (k == NodeKind::kCatch || k == NodeKind::kLambda) {
      for (NodeId c : ast.children(scope)) {
        if (c == child) break;
        if (parameter_named(ast, c, name) != kNoNode) return Found{c, declared_type_of(ast, c), crossed_callable, false};
      }
    } else if (k == NodeKind::kTry) {
      NodeId res = ast.child_of_kind(scope, NodeKind::kResources);
      if (res != kNoNode && res != child) {
        for (NodeId d : ast.children(res)) {
          if (ast.kind(d) != NodeKind::kVariableDeclaration) continue;
          NodeId hit = declarator_named(ast, d, name);
          if (hit != kNoNode) return Found{hit, declared_type_of(ast, d), crossed_callable, false};
        }
      }
    } else if (k == NodeKind::kMethodDeclaration || k == NodeKind::kConstructorDeclaration) {
      NodeId params = ast.child_of_kind(scope, NodeKind::kParameterList);
      if (params != kNoNode) {
        for (NodeId p : ast.children(params)) {
          if (parameter_named(ast, p, name) != kNoNode) {
            return Found{p, declared_type_of(ast, p), crossed_callable, false};
          }
        }
      }
      crossed_callable = true;
    } else if (is_type_scope(k)) {
      if (auto f = find_field(ast, scope, name)) return f;
      crossed_callable = true;
    }
    child = scope;
    scope = ast.parent(scope);
  }
  return std::nullopt;
}

VariableInfo make_info(const NormalizedAst& ast, std::string name, const Found& f) {
  VariableInfo info;
  info.name = std::move(name);
  info.scope = f.global ? VariableScope::kGlobal : VariableScope::kLocal;
  info.category = f.enum_constant ? VariableCategory::kEnumeration : categorize_type(ast, f.type);
  info.declared_in = f.decl;
  info.declared_type = f.type;
  return info;
}

}  // namespace

std::string_view kind_name(NodeKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<NodeKind> kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<NodeKind>(i);
  }
  return std::nullopt;
}

std::span<const NodeKind> statement_kinds() { return kStatementKinds; }

NormalizedAst::NormalizedAst(std::vector<AstNode> nodes, NodeId root, std::string grammar_id,
                             std::string source_path, std::vector<std::size_t> line_starts)
    : nodes_(std::move(nodes)),
      root_(root),
      grammar_id_(std::move(grammar_id)),
      source_path_(std::move(source_path)),
      line_starts_(std::move(line_starts)) {
  if (nodes_.empty()) root_ = kNoNode;
  if (line_starts_.empty()) line_starts_.push_back(0);
}

std::size_t NormalizedAst::line_of(std::size_t offset) const {
  auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), offset);
  return static_cast<std::size_t>(it - line_starts_.begin()) - 1;
}

std::vector<NodeId> NormalizedAst::preorder(NodeId id) const {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{id};
  while (!stack.empty()) {
    NodeId n = stack.back();
    stack.pop_back();
    out.push_back(n);
    const auto& ch = node(n).children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

std::vector<NodeId> NormalizedAst::postorder() const {
  std::vector<NodeId> out;
  if (root_ == kNoNode) return out;
  std::vector<std::pair<NodeId, std::size_t>> stack{{root_, 0}};
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    const auto& ch = node(n).children;
    if (next < ch.size()) {
      NodeId c = ch[next++];
      stack.emplace_back(c, 0);
    } else {
      out.push_back(n);
      stack.pop_back();
    }
  }
  return out;
}

bool NormalizedAst::is_ancestor(NodeId ancestor, NodeId n) const {
  for (NodeId p = parent(n); p != kNoNode; p = parent(p)) {
    if (p == ancestor) return true;
  }
  return false;
}

std::size_t NormalizedAst::depth(NodeId id) const {
  std::size_t d = 0;
  for (NodeId p = parent(id); p != kNoNode; p = parent(p)) ++d;
  return d;
}

std::size_t NormalizedAst::index_in_parent(NodeId id) const {
  NodeId p = parent(id);
  if (p == kNoNode) return 0;
  const auto& ch = node(p).children;
  return static_cast<std::size_t>(std::find(ch.begin(), ch.end(), id) - ch.begin());
}

NodeId NormalizedAst::enclosing(NodeId id, NodeKind k) const {
  for (NodeId n = id; n != kNoNode; n = parent(n)) {
    if (kind(n) == k) return n;
  }
  return kNoNode;
}

NodeId NormalizedAst::nearest_statement(NodeId id) const {
  for (NodeId n = id; n != kNoNode; n = parent(n)) {
    if (is_statement_kind(kind(n)) && kind(n) != NodeKind::kBlock) return n;
  }
  return kNoNode;
}

NodeId NormalizedAst::parent_statement(NodeId id) const {
  if (id == kNoNode) return kNoNode;
  return nearest_statement(parent(id));
}

NodeId NormalizedAst::enclosing_callable(NodeId id) const {
  for (NodeId n = id; n != kNoNode; n = parent(n)) {
    NodeKind k = kind(n);
    if (k == NodeKind::kMethodDeclaration || k == NodeKind::kConstructorDeclaration) return n;
    if (is_type_scope(k)) return kNoNode;
  }
  return kNoNode;
}

NodeId NormalizedAst::child_of_kind(NodeId id, NodeKind k) const {
  for (NodeId c : children(id)) {
    if (kind(c) == k) return c;
  }
  return kNoNode;
}

bool isomorphic(const NormalizedAst& a, NodeId ar, const NormalizedAst& b, NodeId br) {
  std::vector<std::pair<NodeId, NodeId>> stack{{ar, br}};
  while (!stack.empty()) {
    auto [x, y] = stack.back();
    stack.pop_back();
    const AstNode& nx = a.node(x);
    const AstNode& ny = b.node(y);
    if (nx.kind != ny.kind || nx.label != ny.label || nx.children.size() != ny.children.size()) return false;
    for (std::size_t i = 0; i < nx.children.size(); ++i) stack.emplace_back(nx.children[i], ny.children[i]);
  }
  return true;
}

std::string to_sexpr(const NormalizedAst& ast, NodeId id) {
  std::ostringstream out;
  std::vector<std::pair<NodeId, std::size_t>> stack{{id, 0}};
  while (!stack.empty()) {
    auto [n, indent] = stack.back();
    stack.pop_back();
    out << std::string(indent * 2, ' ') << kind_name(ast.kind(n));
    if (!ast.label(n).empty()) out << " \"" << ast.label(n) << '"';
    out << '\n';
    auto ch = ast.children(n);
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.emplace_back(*it, indent + 1);
  }
  return out.str();
}

NormalizedAst parse_source(std::string_view source_text, std::string_view grammar_id) {
  return GrammarRegistry::global().parse(source_text, grammar_id);
}

StatementContext statement_context(const NormalizedAst& ast, NodeId stmt, std::size_t k) {
  if (!ast.contains(stmt) || !is_statement_kind(ast.kind(stmt))) {
    throw NotAStatement("node " + std::to_string(stmt) + " is not a statement");
  }
  StatementContext ctx;
  NodeId p = ast.parent(stmt);
  if (p == kNoNode) return ctx;
  NodeKind pk = ast.kind(p);
  if (pk != NodeKind::kBlock && pk != NodeKind::kCaseGroup) return ctx;
  std::vector<NodeId> siblings;
  for (NodeId c : ast.children(p)) {
    if (is_statement_kind(ast.kind(c))) siblings.push_back(c);
  }
  auto it = std::find(siblings.begin(), siblings.end(), stmt);
  std::size_t idx = static_cast<std::size_t>(it - siblings.begin());
  std::size_t from = idx >= k ? idx - k : 0;
  ctx.former.assign(siblings.begin() + static_cast<std::ptrdiff_t>(from), it);
  std::size_t to = std::min(siblings.size(), idx + 1 + k);
  ctx.latter.assign(it + 1, siblings.begin() + static_cast<std::ptrdiff_t>(to));
  return ctx;
}

bool is_primitive_type(std::string_view t) {
  return t == "int" || t == "long" || t == "short" || t == "byte" || t == "char" || t == "boolean" ||
         t == "float" || t == "double";
}

VariableCategory categorize_type(const NormalizedAst& ast, std::string_view type_name) {
  if (is_primitive_type(type_name)) return VariableCategory::kPrimitive;
  if (type_name.find('[') != std::string_view::npos || type_name.empty() || type_name == "var") {
    return VariableCategory::kObject;
  }
  std::string base = base_type_name(type_name);
  for (const AstNode& n : ast.nodes()) {
    if (n.kind != NodeKind::kClassDeclaration) continue;
    NodeId nm = ast.child_of_kind(n.id, NodeKind::kName);
    if (nm == kNoNode || ast.label(nm) != base) continue;
    bool is_abstract = false;
    for (NodeId c : n.children) {
      if (ast.kind(c) == NodeKind::kDeclarationKeyword) {
        const std::string& kw = ast.label(c);
        if (kw == "enum") return VariableCategory::kEnumeration;
        if (kw == "interface" || kw == "@interface") is_abstract = true;
      } else if (ast.kind(c) == NodeKind::kModifier && ast.label(c) == "abstract") {
        is_abstract = true;
      }
    }
    return is_abstract ? VariableCategory::kAbstract : VariableCategory::kObject;
  }
  return VariableCategory::kObject;
}

VariableInfo resolve_variable(const NormalizedAst& ast, NodeId ident) {
  VariableInfo unresolved;
  if (!ast.contains(ident)) return unresolved;
  const std::string& name = ast.label(ident);
  unresolved.name = name;
  NodeKind k = ast.kind(ident);
  if (k == NodeKind::kIdentifier) {
    if (auto f = lookup(ast, ident, name)) return make_info(ast, name, *f);
    return unresolved;
  }
  if (k == NodeKind::kFieldName) {
    NodeId access = ast.parent(ident);
    if (access == kNoNode || ast.children(access).empty()) return unresolved;
    NodeId receiver = ast.children(access).front();
    if (ast.kind(receiver) != NodeKind::kThis) return unresolved;
    for (NodeId s = access; s != kNoNode; s = ast.parent(s)) {
      if (is_type_scope(ast.kind(s))) {
        if (auto f = find_field(ast, s, name)) return make_info(ast, name, *f);
        return unresolved;
      }
    }
    return unresolved;
  }
  if (k == NodeKind::kName) {
    NodeId owner = ast.parent(ident);
    if (owner == kNoNode) return unresolved;
    if (ast.kind(owner) == NodeKind::kVariableDeclarator) {
      NodeId decl = ast.parent(owner);
      Found f{owner, declared_type_of(ast, decl), false, false};
      NodeId holder = ast.parent(decl);
      f.global = holder != kNoNode && is_type_scope(ast.kind(holder));
      return make_info(ast, name, f);
    }
    if (ast.kind(owner) == NodeKind::kParameter) {
      NodeId holder = ast.parent(owner);
      bool record_component = holder != kNoNode && ast.kind(holder) == NodeKind::kParameterList &&
                              ast.parent(holder) != kNoNode &&
                              ast.kind(ast.parent(holder)) == NodeKind::kClassDeclaration;
      return make_info(ast, name, Found{owner, declared_type_of(ast, owner), record_component, false});
    }
    if (ast.kind(owner) == NodeKind::kLambda) {
      return make_info(ast, name, Found{ident, "var", false, false});
    }
    if (ast.kind(owner) == NodeKind::kEnumConstant) {
      NodeId en = ast.parent(owner);
      NodeId nm = en == kNoNode ? kNoNode : ast.child_of_kind(en, NodeKind::kName);
      return make_info(ast, name, Found{owner, nm == kNoNode ? std::string() : ast.label(nm), true, true});
    }
  }
  return unresolved;
}

bool is_probable_type_reference(const NormalizedAst& ast, NodeId ident) {
  if (ast.kind(ident) != NodeKind::kIdentifier) return false;
  const std::string& name = ast.label(ident);
  if (name.empty() || !std::isupper(static_cast<unsigned char>(name.front()))) return false;
  bool has_lower = std::any_of(name.begin(), name.end(), [](char c) { return std::islower(static_cast<unsigned char>(c)); });
  if (!has_lower) return false;
  NodeId p = ast.parent(ident);
  if (p == kNoNode) return false;
  NodeKind pk = ast.kind(p);
  if (pk != NodeKind::kFieldAccess && pk != NodeKind::kMethodInvocation && pk != NodeKind::kMethodReference) {
    return false;
  }
  if (ast.children(p).front() != ident) return false;
  return resolve_variable(ast, ident).declared_in == kNoNode;
}

}  // namespace patchguard
