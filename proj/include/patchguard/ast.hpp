#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace patchguard {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

// Normalized node kinds. The first block is the closed set of statement
// categories; everything after kOther is expression or structural.
enum class NodeKind : std::uint8_t {
  // statement-level
  kAssignment,
  kConditional,
  kLoop,
  kTry,
  kCatch,
  kReturn,
  kInvocationStatement,
  kBranchCase,
  kBreak,
  kContinue,
  kThrow,
  kVariableDeclaration,
  kBlock,
  kMethodDeclaration,
  kClassDeclaration,
  kConstructorDeclaration,
  kSynchronizedBlock,
  kOther,
  // structural
  kCompilationUnit,
  kPackage,
  kImport,
  kModifier,
  kAnnotation,
  kDeclarationKeyword,
  kExtends,
  kImplements,
  kTypeRef,
  kTypeParameters,
  kName,
  kParameterList,
  kParameter,
  kThrowsList,
  kVariableDeclarator,
  kCondition,
  kForInit,
  kForUpdate,
  kCaseGroup,
  kCaseLabel,
  kLabel,
  kFinally,
  kResources,
  kClassBody,
  kEnumConstant,
  // expressions
  kIdentifier,
  kMethodName,
  kFieldName,
  kNumberLiteral,
  kStringLiteral,
  kCharLiteral,
  kBooleanLiteral,
  kNullLiteral,
  kThis,
  kSuper,
  kOperator,
  kBinaryOperation,
  kUnaryOperation,
  kPostfixOperation,
  kAssignmentExpression,
  kConditionalExpression,
  kInstanceOf,
  kCast,
  kMethodInvocation,
  kArguments,
  kFieldAccess,
  kArrayAccess,
  kObjectCreation,
  kArrayCreation,
  kArrayInitializer,
  kLambda,
  kMethodReference,
  kClassLiteral,
  kParenthesized,
};

inline constexpr std::size_t kNodeKindCount = static_cast<std::size_t>(NodeKind::kParenthesized) + 1;

// Canonical kebab-case name used by grammar mapping files and by the
// string-valued features ("assignment", "method", ...).
std::string_view kind_name(NodeKind kind);
std::optional<NodeKind> kind_from_name(std::string_view name);

inline constexpr bool is_statement_kind(NodeKind kind) {
  return static_cast<std::uint8_t>(kind) <= static_cast<std::uint8_t>(NodeKind::kOther);
}
inline constexpr bool is_literal_kind(NodeKind kind) {
  return kind == NodeKind::kNumberLiteral || kind == NodeKind::kStringLiteral ||
         kind == NodeKind::kCharLiteral || kind == NodeKind::kBooleanLiteral ||
         kind == NodeKind::kNullLiteral;
}

// The 18 statement categories in vocabulary order.
std::span<const NodeKind> statement_kinds();

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

struct AstNode {
  NodeId id = kNoNode;
  NodeKind kind = NodeKind::kOther;
  std::string label;
  std::vector<NodeId> children;
  NodeId parent = kNoNode;
  Span span;
};

// Immutable after construction; safe to share across threads.
class NormalizedAst {
 public:
  NormalizedAst() = default;
  NormalizedAst(std::vector<AstNode> nodes, NodeId root, std::string grammar_id,
                std::string source_path, std::vector<std::size_t> line_starts);

  NodeId root() const noexcept { return root_; }
  const AstNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::span<const AstNode> nodes() const noexcept { return nodes_; }
  const std::string& grammar_id() const noexcept { return grammar_id_; }
  const std::string& source_path() const noexcept { return source_path_; }
  void set_source_path(std::string path) { source_path_ = std::move(path); }

  bool contains(NodeId id) const noexcept {
    return id >= 0 && static_cast<std::size_t>(id) < nodes_.size();
  }
  NodeId parent(NodeId id) const { return node(id).parent; }
  std::span<const NodeId> children(NodeId id) const { return node(id).children; }
  NodeKind kind(NodeId id) const { return node(id).kind; }
  const std::string& label(NodeId id) const { return node(id).label; }

  // 0-based line of a byte offset.
  std::size_t line_of(std::size_t offset) const;

  // Pre-order over the subtree rooted at id (inclusive).
  std::vector<NodeId> preorder(NodeId id) const;
  std::vector<NodeId> preorder() const { return root_ == kNoNode ? std::vector<NodeId>{} : preorder(root_); }
  std::vector<NodeId> postorder() const;

  bool is_ancestor(NodeId ancestor, NodeId node) const;  // strict
  std::size_t depth(NodeId id) const;
  std::size_t index_in_parent(NodeId id) const;

  // Nearest ancestor-or-self of the given kind.
  NodeId enclosing(NodeId id, NodeKind kind) const;
  // Nearest ancestor-or-self that is statement-level and not a block.
  NodeId nearest_statement(NodeId id) const;
  // Nearest proper ancestor that is statement-level and not a block.
  NodeId parent_statement(NodeId id) const;
  // Enclosing method, constructor or lambda (the variable scope boundary).
  NodeId enclosing_callable(NodeId id) const;

  // First direct child of the given kind, or kNoNode.
  NodeId child_of_kind(NodeId id, NodeKind kind) const;

 private:
  std::vector<AstNode> nodes_;
  NodeId root_ = kNoNode;
  std::string grammar_id_;
  std::string source_path_;
  std::vector<std::size_t> line_starts_;
};

// Structural equality: kinds, labels and child order. Spans are ignored.
bool isomorphic(const NormalizedAst& a, NodeId a_root, const NormalizedAst& b, NodeId b_root);
inline bool isomorphic(const NormalizedAst& a, const NormalizedAst& b) {
  if (a.root() == kNoNode || b.root() == kNoNode) return a.root() == b.root();
  return isomorphic(a, a.root(), b, b.root());
}

// Indented dump for debugging and golden files.
std::string to_sexpr(const NormalizedAst& ast, NodeId id);

NormalizedAst parse_source(std::string_view source_text, std::string_view grammar_id);

struct StatementContext {
  std::vector<NodeId> former;  // nearest last
  std::vector<NodeId> latter;  // nearest first
};

// Up to k sibling statements before/after stmt in its enclosing block.
StatementContext statement_context(const NormalizedAst& ast, NodeId stmt, std::size_t k = 3);

enum class VariableScope : std::uint8_t { kLocal, kGlobal };
enum class VariableCategory : std::uint8_t { kPrimitive, kObject, kAbstract, kEnumeration };

struct VariableInfo {
  std::string name;
  VariableScope scope = VariableScope::kGlobal;
  VariableCategory category = VariableCategory::kObject;
  NodeId declared_in = kNoNode;  // the declarator/parameter, absent when unresolved
  std::string declared_type;
  friend bool operator==(const VariableInfo&, const VariableInfo&) = default;
};

// Resolve an Identifier, FieldName (with `this` receiver) or declared Name.
// Unresolvable identifiers are (global, object).
VariableInfo resolve_variable(const NormalizedAst& ast, NodeId ident);

// Category of a declared type name given the declarations visible in ast.
VariableCategory categorize_type(const NormalizedAst& ast, std::string_view type_name);

bool is_primitive_type(std::string_view type_name);

// Heuristic used by the feature collectors: an unresolved capitalized
// receiver such as `Math` in `Math.abs(x)` names a type, not a variable.
bool is_probable_type_reference(const NormalizedAst& ast, NodeId ident);

}  // namespace patchguard
