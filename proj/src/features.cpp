#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "patchguard/features.hpp"

namespace patchguard {
namespace {

using FlagSet = std::set<std::string, std::less<>>;

bool is_stmt(const NormalizedAst& ast, NodeId n) {
  return is_statement_kind(ast.kind(n)) && ast.kind(n) != NodeKind::kBlock;
}

bool inside(const NormalizedAst& ast, NodeId root, NodeId n) { return n == root || ast.is_ancestor(root, n); }

std::string_view operator_of(const NormalizedAst& ast, NodeId n) {
  for (NodeId c : ast.children(n)) {
    if (ast.kind(c) == NodeKind::kOperator) return ast.label(c);
  }
  return {};
}

bool is_logical(std::string_view op) { return op == "&&" || op == "||"; }
bool is_relational(std::string_view op) {
  return op == "==" || op == "!=" || op == "<" || op == "<=" || op == ">" || op == ">=";
}
bool is_arithmetic(std::string_view op) { return op == "+" || op == "-" || op == "*" || op == "/" || op == "%"; }

bool is_zero_literal(const NormalizedAst& ast, NodeId n) {
  if (ast.kind(n) == NodeKind::kNullLiteral) return true;
  if (ast.kind(n) != NodeKind::kNumberLiteral) return false;
  const std::string& t = ast.label(n);
  bool seen_digit = false;
  for (std::size_t i = 0; i < t.size(); ++i) {
    char c = t[i];
    if (i == 1 && (c == 'x' || c == 'X' || c == 'b' || c == 'B') && t[0] == '0') continue;
    if (c == '0' || c == '_' || c == '.') {
      seen_digit = seen_digit || c == '0';
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return false;
    if (c == 'e' || c == 'E' || c == 'p' || c == 'P') break;
    if (std::string_view("lLfFdD").find(c) != std::string_view::npos) continue;
    return false;
  }
  return seen_digit;
}

bool is_constant_expr(const NormalizedAst& ast, NodeId n) {
  if (is_literal_kind(ast.kind(n))) return true;
  if (ast.kind(n) == NodeKind::kUnaryOperation && ast.children(n).size() == 2) {
    std::string_view op = operator_of(ast, n);
    return (op == "-" || op == "+") && is_literal_kind(ast.kind(ast.children(n)[1]));
  }
  return false;
}

bool is_variable_reference(const NormalizedAst& ast, NodeId n) {
  NodeKind k = ast.kind(n);
  if (k == NodeKind::kIdentifier) return !is_probable_type_reference(ast, n);
  if (k == NodeKind::kFieldName) return true;
  if (k == NodeKind::kName) {
    NodeId p = ast.parent(n);
    return p != kNoNode && (ast.kind(p) == NodeKind::kVariableDeclarator || ast.kind(p) == NodeKind::kParameter);
  }
  return false;
}

bool is_method_parameter(const NormalizedAst& ast, NodeId decl) {
  if (decl == kNoNode || ast.kind(decl) != NodeKind::kParameter) return false;
  NodeId list = ast.parent(decl);
  if (list == kNoNode || ast.kind(list) != NodeKind::kParameterList) return false;
  NodeId owner = ast.parent(list);
  return owner != kNoNode && (ast.kind(owner) == NodeKind::kMethodDeclaration ||
                              ast.kind(owner) == NodeKind::kConstructorDeclaration);
}

bool has_null_compare(const NormalizedAst& ast, NodeId root, std::string_view which = {}) {
  for (NodeId n : ast.preorder(root)) {
    if (ast.kind(n) != NodeKind::kBinaryOperation) continue;
    std::string_view op = operator_of(ast, n);
    if (op != "==" && op != "!=") continue;
    if (!which.empty() && op != which) continue;
    for (NodeId c : ast.children(n)) {
      if (ast.kind(c) == NodeKind::kNullLiteral) return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Code description windows

void operator_flags(const NormalizedAst& ast, NodeId n, FlagSet& on) {
  if (ast.kind(n) != NodeKind::kOperator) return;
  const std::string& op = ast.label(n);
  NodeId p = ast.parent(n);
  NodeKind pk = p == kNoNode ? NodeKind::kOther : ast.kind(p);
  bool unary = pk == NodeKind::kUnaryOperation || pk == NodeKind::kPostfixOperation;
  static const std::unordered_map<std::string, std::string> kBinary = {
      {"+", "opAdd"},       {"+=", "opAdd"},           {"-", "opSub"},       {"-=", "opSub"},
      {"*", "opMul"},       {"*=", "opMul"},           {"/", "opDiv"},       {"/=", "opDiv"},
      {"%", "opMod"},       {"%=", "opMod"},           {"==", "opEqual"},    {"!=", "opNotEqual"},
      {"<", "opLessThan"},  {"<=", "opLessEqual"},     {">", "opGreaterThan"}, {">=", "opGreaterEqual"},
      {"&", "opBitwise"},   {"|", "opBitwise"},        {"^", "opBitwise"},   {"<<", "opBitwise"},
      {">>", "opBitwise"},  {">>>", "opBitwise"},      {"&=", "opBitwise"},  {"|=", "opBitwise"},
      {"^=", "opBitwise"},  {"<<=", "opBitwise"},      {">>=", "opBitwise"}, {">>>=", "opBitwise"},
  };
  if (op == "++") {
    on.insert("uopInc");
  } else if (op == "--") {
    on.insert("uopDec");
  } else if (unary) {
    if (op == "-") on.insert("uopDec");
    if (op == "~") on.insert("opBitwise");
  } else if (auto it = kBinary.find(op); it != kBinary.end()) {
    on.insert(it->second);
  }
}

void variable_flags(const NormalizedAst& ast, NodeId n, FlagSet& on) {
  if (!is_variable_reference(ast, n)) return;
  VariableInfo info = resolve_variable(ast, n);
  on.insert(info.scope == VariableScope::kLocal ? "localVar" : "globalVar");
  switch (info.category) {
    case VariableCategory::kPrimitive:
      on.insert("primVar");
      break;
    case VariableCategory::kAbstract:
      on.insert("abstVar");
      break;
    case VariableCategory::kEnumeration:
      on.insert("enum");
      break;
    case VariableCategory::kObject:
      break;
  }
  if (ast.kind(n) == NodeKind::kIdentifier && is_method_parameter(ast, info.declared_in)) on.insert("funcArgument");
}

void assignment_flags(const NormalizedAst& ast, NodeId target, NodeId value, FlagSet& on) {
  if (value != kNoNode) {
    if (is_constant_expr(ast, value)) on.insert("assignConst");
    if (is_zero_literal(ast, value)) on.insert("assignZero");
  }
  if (target != kNoNode && (ast.kind(target) == NodeKind::kFieldAccess || ast.kind(target) == NodeKind::kArrayAccess)) {
    on.insert("assignLhs");
  }
}

void statement_flags(const NormalizedAst& ast, NodeId n, FlagSet& on) {
  auto ch = ast.children(n);
  switch (ast.kind(n)) {
    case NodeKind::kAssignmentExpression:
      on.insert("stmtAssign");
      if (ch.size() == 3) assignment_flags(ast, ch[0], ch[2], on);
      break;
    case NodeKind::kVariableDeclarator:
      if (ch.size() >= 2) assignment_flags(ast, kNoNode, ch.back(), on);
      break;
    case NodeKind::kAssignment:
      on.insert("stmtAssign");
      break;
    case NodeKind::kMethodInvocation:
      on.insert("stmtCall");
      if (!ch.empty() && ast.kind(ch[0]) != NodeKind::kMethodName && ast.kind(ch[0]) != NodeKind::kArguments) {
        on.insert("callee");
      }
      [[fallthrough]];
    case NodeKind::kObjectCreation: {
      if (ast.kind(n) == NodeKind::kObjectCreation) on.insert("stmtNew");
      NodeId args = ast.child_of_kind(n, NodeKind::kArguments);
      if (args != kNoNode) {
        for (NodeId a : ast.children(args)) {
          if (is_variable_reference(ast, a) || ast.kind(a) == NodeKind::kFieldAccess) on.insert("callArgument");
        }
      }
      break;
    }
    case NodeKind::kInvocationStatement:
      on.insert("stmtCall");
      break;
    case NodeKind::kConditional:
    case NodeKind::kConditionalExpression:
      on.insert("stmtCond");
      break;
    case NodeKind::kLoop:
      on.insert("stmtLoop");
      break;
    case NodeKind::kFieldAccess:
      on.insert("memberAccess");
      break;
    case NodeKind::kReturn:
      on.insert("stmtReturn");
      break;
    case NodeKind::kTry:
    case NodeKind::kCatch:
      on.insert("stmtTry");
      break;
    case NodeKind::kCaseGroup:
    case NodeKind::kBranchCase:
      on.insert("stmtBranch");
      break;
    case NodeKind::kBreak:
      on.insert("stmtBreak");
      break;
    case NodeKind::kContinue:
      on.insert("stmtContinue");
      break;
    case NodeKind::kThrow:
      on.insert("stmtThrow");
      break;
    case NodeKind::kArrayCreation:
      on.insert("stmtNew");
      break;
    case NodeKind::kCast:
      on.insert("stmtCast");
      break;
    case NodeKind::kVariableDeclaration:
      on.insert("stmtDecl");
      break;
    default:
      if (is_literal_kind(ast.kind(n))) on.insert("constant");
      break;
  }
}

void window_flags(const NormalizedAst& ast, const std::vector<NodeId>& roots, FlagSet& on) {
  for (NodeId r : roots) {
    for (NodeId n : ast.preorder(r)) {
      operator_flags(ast, n, on);
      variable_flags(ast, n, on);
      statement_flags(ast, n, on);
    }
  }
}

// Lookup tables over the script shared by the AST-operation flags and the
// repair pattern detectors.
struct ScriptIndex {
  const NormalizedAst& buggy;
  const NormalizedAst& patched;
  const EditScript& script;
  std::vector<char> added;        // patched ids
  std::vector<char> moved_dst;    // patched ids
  std::vector<char> deleted;      // buggy ids
  std::vector<char> moved_src;    // buggy ids
  std::vector<NodeId> src_to_dst;
  std::vector<NodeId> dst_to_src;

  ScriptIndex(const NormalizedAst& b, const NormalizedAst& p, const EditScript& s)
      : buggy(b),
        patched(p),
        script(s),
        added(p.size(), 0),
        moved_dst(p.size(), 0),
        deleted(b.size(), 0),
        moved_src(b.size(), 0),
        src_to_dst(b.size(), kNoNode),
        dst_to_src(p.size(), kNoNode) {
    for (auto [x, y] : s.mapping) link(x, y);
    for (const auto& a : s.actions) {
      switch (a.op) {
        case EditOp::kAdd:
          if (p.contains(a.dst)) added[static_cast<std::size_t>(a.dst)] = 1;
          break;
        case EditOp::kDelete:
          if (b.contains(a.src)) deleted[static_cast<std::size_t>(a.src)] = 1;
          break;
        case EditOp::kMove:
          if (b.contains(a.src)) moved_src[static_cast<std::size_t>(a.src)] = 1;
          if (p.contains(a.dst)) moved_dst[static_cast<std::size_t>(a.dst)] = 1;
          link(a.src, a.dst);
          break;
        case EditOp::kUpdate:
          link(a.src, a.dst);
          break;
      }
    }
  }

  void link(NodeId x, NodeId y) {
    if (buggy.contains(x) && patched.contains(y)) {
      src_to_dst[static_cast<std::size_t>(x)] = y;
      dst_to_src[static_cast<std::size_t>(y)] = x;
    }
  }

  bool is_added(NodeId d) const { return d != kNoNode && added[static_cast<std::size_t>(d)]; }
  bool is_deleted(NodeId s) const { return s != kNoNode && deleted[static_cast<std::size_t>(s)]; }

  bool holds_moved_statement_dst(NodeId root) const {
    if (root == kNoNode) return false;
    for (NodeId n : patched.preorder(root)) {
      if (n != root && moved_dst[static_cast<std::size_t>(n)] && is_statement_kind(patched.kind(n))) return true;
    }
    return moved_dst[static_cast<std::size_t>(root)] && is_statement_kind(patched.kind(root));
  }
  bool holds_moved_src(NodeId root, bool statements_only) const {
    if (root == kNoNode) return false;
    for (NodeId n : buggy.preorder(root)) {
      if (moved_src[static_cast<std::size_t>(n)] && (!statements_only || is_statement_kind(buggy.kind(n)))) return true;
    }
    return false;
  }
  bool holds_moved_dst(NodeId root) const {
    if (root == kNoNode) return false;
    for (NodeId n : patched.preorder(root)) {
      if (moved_dst[static_cast<std::size_t>(n)]) return true;
    }
    return false;
  }
};

// Nearest Condition ancestor whose owner (if or loop) satisfies keep.
template <typename Keep>
bool in_condition_of_retained(const NormalizedAst& ast, NodeId n, Keep keep) {
  for (NodeId a = n; a != kNoNode; a = ast.parent(a)) {
    if (ast.kind(a) == NodeKind::kCondition) {
      NodeId owner = ast.parent(a);
      return owner != kNoNode && keep(owner);
    }
    if (is_stmt(ast, a)) return false;
  }
  return false;
}

bool in_condition(const NormalizedAst& ast, NodeId n) {
  for (NodeId a = n; a != kNoNode; a = ast.parent(a)) {
    if (ast.kind(a) == NodeKind::kCondition) return true;
    if (is_stmt(ast, a)) return false;
  }
  return false;
}

void ast_operation_flags(const ScriptIndex& ix, FlagSet& on) {
  const NormalizedAst& b = ix.buggy;
  const NormalizedAst& p = ix.patched;
  auto retained_src = [&](NodeId owner) { return !ix.is_deleted(owner); };
  auto retained_dst = [&](NodeId owner) { return !ix.is_added(owner); };
  std::vector<NodeId> deleted_stmts;
  std::vector<NodeId> added_stmts;
  for (const auto& a : ix.script.actions) {
    switch (a.op) {
      case EditOp::kAdd: {
        NodeId d = a.dst;
        if (is_stmt(p, d)) {
          on.insert("insertStmt");
          added_stmts.push_back(d);
        }
        if (p.kind(d) == NodeKind::kConditional || p.kind(d) == NodeKind::kConditionalExpression || in_condition(p, d)) {
          on.insert("insertCond");
        }
        if (in_condition_of_retained(p, d, retained_dst)) on.insert("replaceCond");
        break;
      }
      case EditOp::kDelete: {
        NodeId s = a.src;
        if (is_stmt(b, s)) {
          on.insert("removeStmt");
          deleted_stmts.push_back(s);
        }
        if (b.kind(s) == NodeKind::kBlock) on.insert("removeWholeBlock");
        if (in_condition_of_retained(b, s, retained_src)) on.insert("replaceCond");
        for (NodeId c = b.parent(s); c != kNoNode; c = b.parent(c)) {
          if (b.kind(c) == NodeKind::kConditional) {
            if (!ix.is_deleted(c) && (b.parent(s) == c || in_condition(b, s))) on.insert("removePartialIf");
            break;
          }
          if (is_stmt(b, c)) break;
        }
        break;
      }
      case EditOp::kUpdate: {
        NodeId s = a.src;
        if (is_literal_kind(b.kind(s))) on.insert("updateLiteral");
        NodeId st = b.nearest_statement(s);
        if (st != kNoNode && !ix.is_deleted(st)) on.insert("updateStmt");
        if (in_condition_of_retained(b, s, retained_src)) on.insert("replaceCond");
        break;
      }
      case EditOp::kMove: {
        if (is_stmt(b, a.src)) on.insert("moveStmt");
        if (in_condition_of_retained(b, a.src, retained_src) || in_condition_of_retained(p, a.dst, retained_dst)) {
          on.insert("replaceCond");
        }
        break;
      }
    }
  }
  for (NodeId s : deleted_stmts) {
    NodeId sp = b.parent(s);
    NodeId partner = sp == kNoNode ? kNoNode : ix.src_to_dst[static_cast<std::size_t>(sp)];
    if (partner == kNoNode) continue;
    for (NodeId t : added_stmts) {
      if (p.parent(t) == partner) on.insert("replaceStmt");
    }
  }
}

void emit_window(RawFeatures& out, std::string_view prefix, const FlagSet& on, bool with_ast_ops) {
  for (const auto* group : {&operator_flag_names(), &variable_flag_names(), &statement_flag_names()}) {
    for (const auto& name : *group) out.set(std::string(prefix) + name, on.count(name) ? 1 : 0);
  }
  for (const auto& name : ast_operation_flag_names()) {
    out.set(std::string(prefix) + name, with_ast_ops && on.count(name) ? 1 : 0);
  }
}

std::vector<NodeId> context_window(const NormalizedAst& ast, const std::vector<NodeId>& changed, bool former) {
  std::set<NodeId> picked;
  for (NodeId s : changed) {
    StatementContext ctx = statement_context(ast, s, 3);
    for (NodeId n : former ? ctx.former : ctx.latter) picked.insert(n);
  }
  std::vector<NodeId> out;
  for (NodeId n : picked) {
    bool overlaps_changed = std::any_of(changed.begin(), changed.end(), [&](NodeId c) { return inside(ast, n, c) || inside(ast, c, n); });
    if (!overlaps_changed) out.push_back(n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Repair patterns

void repair_patterns(const ScriptIndex& ix, FlagSet& on) {
  const NormalizedAst& b = ix.buggy;
  const NormalizedAst& p = ix.patched;

  for (NodeId d = 0; d < static_cast<NodeId>(p.size()); ++d) {
    NodeKind k = p.kind(d);
    auto ch = p.children(d);
    if (ix.is_added(d)) {
      if (k == NodeKind::kConditional && ch.size() >= 2) {
        bool has_else = ch.size() >= 3;
        bool wraps_then = ix.holds_moved_statement_dst(ch[1]);
        bool wraps_else = has_else && ix.holds_moved_statement_dst(ch[2]);
        if (!has_else && wraps_then) on.insert("wrapsIf");
        if (has_else && (wraps_then || wraps_else)) on.insert("wrapsIfElse");
        for (std::size_t i = 1; i < ch.size(); ++i) {
          for (NodeId n : p.preorder(ch[i])) {
            NodeKind nk = p.kind(n);
            if (nk == NodeKind::kReturn) {
              on.insert("condBlockRetAdd");
            } else if (nk == NodeKind::kThrow) {
              on.insert("condBlockExcAdd");
            } else if (is_stmt(p, n)) {
              on.insert("condBlockOthersAdd");
            }
          }
        }
      } else if (k == NodeKind::kLoop && !ch.empty()) {
        if (ix.holds_moved_statement_dst(ch.back())) on.insert("wrapsLoop");
      } else if (k == NodeKind::kTry) {
        if (ix.holds_moved_statement_dst(p.child_of_kind(d, NodeKind::kBlock))) on.insert("wrapsTryCatch");
      } else if (k == NodeKind::kMethodInvocation) {
        if (ix.holds_moved_dst(p.child_of_kind(d, NodeKind::kArguments))) on.insert("wrapsMethod");
      } else if (k == NodeKind::kBinaryOperation && ch.size() == 3) {
        std::string_view op = operator_of(p, d);
        if (is_logical(op) && (ix.moved_dst[static_cast<std::size_t>(ch[0])] || ix.moved_dst[static_cast<std::size_t>(ch[2])])) {
          on.insert("expLogicExpand");
        }
        if (is_arithmetic(op)) on.insert("expArithMod");
        if ((op == "==" || op == "!=") && in_condition(p, d) &&
            (p.kind(ch[0]) == NodeKind::kNullLiteral || p.kind(ch[2]) == NodeKind::kNullLiteral)) {
          on.insert(op == "==" ? "missNullCheckP" : "missNullCheckN");
        }
      }
    } else if (k == NodeKind::kConditional && ch.size() >= 3 && ix.is_added(ch[2]) &&
               ix.holds_moved_statement_dst(ch[2])) {
      on.insert("wrapsElse");
    }
  }

  for (NodeId s = 0; s < static_cast<NodeId>(b.size()); ++s) {
    if (!ix.is_deleted(s)) continue;
    NodeKind k = b.kind(s);
    auto ch = b.children(s);
    if (k == NodeKind::kTry) {
      if (ix.holds_moved_src(b.child_of_kind(s, NodeKind::kBlock), true)) on.insert("unwrapTryCatch");
    } else if (k == NodeKind::kConditional) {
      on.insert("condBlockRem");
      for (std::size_t i = 1; i < ch.size(); ++i) {
        if (ix.holds_moved_src(ch[i], true)) on.insert("unwrapIfElse");
      }
    } else if (k == NodeKind::kMethodInvocation) {
      if (ix.holds_moved_src(b.child_of_kind(s, NodeKind::kArguments), false)) on.insert("unwrapMethod");
    } else if (k == NodeKind::kBinaryOperation && ch.size() == 3) {
      std::string_view op = operator_of(b, s);
      if (is_logical(op) && (ix.moved_src[static_cast<std::size_t>(ch[0])] || ix.moved_src[static_cast<std::size_t>(ch[2])])) {
        on.insert("expLogicReduce");
      }
      if (is_arithmetic(op)) on.insert("expArithMod");
    }
  }

  std::vector<NodeId> added_roots;
  for (const auto& a : ix.script.actions) {
    if (a.op == EditOp::kUpdate) {
      NodeKind k = b.kind(a.src);
      const std::string& old_label = b.label(a.src);
      if (k == NodeKind::kOperator) {
        if (is_arithmetic(old_label) || is_arithmetic(a.label)) on.insert("expArithMod");
        if (is_logical(old_label) || is_logical(a.label) || is_relational(old_label) || is_relational(a.label)) {
          on.insert("expLogicMod");
        }
      } else if (is_literal_kind(k)) {
        on.insert("constChange");
      } else if (k == NodeKind::kMethodName) {
        on.insert("wrongMethodRef");
      } else if (k == NodeKind::kFieldName || (k == NodeKind::kIdentifier && !is_probable_type_reference(b, a.src))) {
        on.insert("wrongVarRef");
      }
    } else if (a.op == EditOp::kMove) {
      if (is_stmt(b, a.src) && !ix.is_added(p.parent(a.dst))) on.insert("codeMove");
    } else if (a.op == EditOp::kAdd) {
      if (is_stmt(p, a.dst) && !ix.is_added(p.parent(a.dst))) added_roots.push_back(a.dst);
    }
  }
  for (std::size_t i = 0; i < added_roots.size() && !on.count("copyPaste"); ++i) {
    for (std::size_t j = i + 1; j < added_roots.size(); ++j) {
      if (isomorphic(p, added_roots[i], p, added_roots[j])) {
        on.insert("copyPaste");
        break;
      }
    }
  }

  if (!ix.script.actions.empty()) {
    std::set<std::size_t> lines_b;
    std::set<std::size_t> lines_p;
    auto add_lines = [](const NormalizedAst& ast, NodeId n, std::set<std::size_t>& lines) {
      const Span& sp = ast.node(n).span;
      lines.insert(ast.line_of(sp.begin));
      lines.insert(ast.line_of(sp.end > sp.begin ? sp.end - 1 : sp.begin));
    };
    for (const auto& a : ix.script.actions) {
      if (a.src != kNoNode && b.contains(a.src)) add_lines(b, a.src, lines_b);
      if (a.dst != kNoNode && p.contains(a.dst)) add_lines(p, a.dst, lines_p);
    }
    if (lines_b.size() <= 1 && lines_p.size() <= 1) on.insert("singleLine");
  }

  bool any = false;
  for (const auto& name : repair_pattern_names()) {
    if (name != "notClassified" && on.count(name)) any = true;
  }
  if (!any) on.insert("notClassified");
}

// ---------------------------------------------------------------------------
// Contextual features

std::string base_name(std::string_view type) {
  std::size_t lt = type.find('<');
  if (lt != std::string_view::npos) type = type.substr(0, lt);
  std::size_t dot = type.rfind('.');
  if (dot != std::string_view::npos) type = type.substr(dot + 1);
  return std::string(type);
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string exception_category(const NormalizedAst& ast, NodeId cls) {
  static const std::unordered_set<std::string> kRuntime = {
      "RuntimeException",          "IllegalArgumentException",       "IllegalStateException",
      "NullPointerException",      "IndexOutOfBoundsException",      "ArrayIndexOutOfBoundsException",
      "StringIndexOutOfBoundsException", "ArithmeticException",      "ClassCastException",
      "UnsupportedOperationException", "ConcurrentModificationException", "NumberFormatException",
      "NoSuchElementException",    "ArrayStoreException",            "NegativeArraySizeException",
  };
  std::set<std::string> seen;
  for (int hop = 0; hop < 16 && cls != kNoNode; ++hop) {
    NodeId ext = ast.child_of_kind(cls, NodeKind::kExtends);
    if (ext == kNoNode || ast.children(ext).empty()) return hop == 0 ? std::string(kNoneValue) : std::string(kOtherValue);
    std::string super = base_name(ast.label(ast.children(ext)[0]));
    if (kRuntime.count(super) || ends_with(super, "RuntimeException")) return "runtime";
    if (ends_with(super, "Error")) return "error";
    if (super == "Exception" || super == "Throwable" || ends_with(super, "Exception")) {
      // A locally declared exception may itself extend a runtime exception.
      NodeId local = kNoNode;
      for (NodeId n : ast.preorder()) {
        NodeId nm = ast.kind(n) == NodeKind::kClassDeclaration ? ast.child_of_kind(n, NodeKind::kName) : kNoNode;
        if (nm != kNoNode && ast.label(nm) == super && n != cls) {
          local = n;
          break;
        }
      }
      if (local == kNoNode || !seen.insert(super).second) return "checked";
      cls = local;
      continue;
    }
    NodeId local = kNoNode;
    for (NodeId n : ast.preorder()) {
      NodeId nm = ast.kind(n) == NodeKind::kClassDeclaration ? ast.child_of_kind(n, NodeKind::kName) : kNoNode;
      if (nm != kNoNode && ast.label(nm) == super && n != cls) {
        local = n;
        break;
      }
    }
    if (local == kNoNode || !seen.insert(super).second) return std::string(kOtherValue);
    cls = local;
  }
  return std::string(kOtherValue);
}

std::vector<NodeId> nodes_of_kind(const NormalizedAst& ast, NodeId root, NodeKind k) {
  std::vector<NodeId> out;
  for (NodeId n : ast.preorder(root)) {
    if (ast.kind(n) == k) out.push_back(n);
  }
  return out;
}

// Condition subtrees of the ifs and loops guarding n, up to the callable.
std::vector<NodeId> guards_of(const NormalizedAst& ast, NodeId n, NodeId callable) {
  std::vector<NodeId> out;
  NodeId child = n;
  for (NodeId a = ast.parent(n); a != kNoNode; child = a, a = ast.parent(a)) {
    NodeKind k = ast.kind(a);
    if (k == NodeKind::kConditional || k == NodeKind::kLoop || k == NodeKind::kConditionalExpression) {
      NodeId cond = k == NodeKind::kConditionalExpression ? ast.children(a)[0] : ast.child_of_kind(a, NodeKind::kCondition);
      if (cond != kNoNode && cond != child && !ast.children(cond).empty()) out.push_back(cond);
    }
    if (a == callable) break;
  }
  return out;
}

struct Usage {
  bool initialized = false;
  bool written = false;
  bool read = false;
};

// Reads and writes of every declarator under scope, by declarator id.
std::unordered_map<NodeId, Usage> usage_in(const NormalizedAst& ast, NodeId scope, const std::vector<NodeId>& declarators) {
  std::unordered_map<NodeId, Usage> out;
  for (NodeId d : declarators) out[d].initialized = ast.children(d).size() >= 2;
  for (NodeId n : ast.preorder(scope)) {
    NodeKind k = ast.kind(n);
    if (k != NodeKind::kIdentifier && k != NodeKind::kFieldName) continue;
    NodeId decl = resolve_variable(ast, n).declared_in;
    auto it = out.find(decl);
    if (it == out.end()) continue;
    NodeId ref = k == NodeKind::kFieldName ? ast.parent(n) : n;
    NodeId p = ast.parent(ref);
    NodeKind pk = p == kNoNode ? NodeKind::kOther : ast.kind(p);
    bool lhs = p != kNoNode && !ast.children(p).empty() && ast.children(p)[0] == ref;
    if (pk == NodeKind::kAssignmentExpression && lhs) {
      it->second.written = true;
      if (operator_of(ast, p) != "=") it->second.read = true;
    } else if ((pk == NodeKind::kPostfixOperation || pk == NodeKind::kUnaryOperation) &&
               (operator_of(ast, p) == "++" || operator_of(ast, p) == "--")) {
      it->second.written = true;
      it->second.read = true;
    } else {
      it->second.read = true;
    }
  }
  return out;
}

std::vector<NodeId> declarators_of(const NormalizedAst& ast, NodeId decl) {
  std::vector<NodeId> out;
  for (NodeId c : ast.children(decl)) {
    if (ast.kind(c) == NodeKind::kVariableDeclarator) out.push_back(c);
  }
  return out;
}

void contextual_features(const NormalizedAst& ast, NodeId faulty, RawFeatures& out, FlagSet& on) {
  out.set("typeOfFaultyStatement", std::string(kind_name(ast.kind(faulty))));
  NodeId parent = ast.parent_statement(faulty);
  out.set("typeOfFaultyStatementParent", parent == kNoNode ? std::string(kNoneValue) : std::string(kind_name(ast.kind(parent))));
  StatementContext ctx = statement_context(ast, faulty, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    std::string before(kNoneValue);
    std::string after(kNoneValue);
    if (i < ctx.former.size()) before = kind_name(ast.kind(ctx.former[ctx.former.size() - 1 - i]));
    if (i < ctx.latter.size()) after = kind_name(ast.kind(ctx.latter[i]));
    out.set("typeOfFaultyStatementBefore" + std::to_string(i + 1), before);
    out.set("typeOfFaultyStatementAfter" + std::to_string(i + 1), after);
  }
  NodeId cls = ast.enclosing(faulty, NodeKind::kClassDeclaration);
  out.set("faultyClassExceptionType", cls == kNoNode ? std::string(kNoneValue) : exception_category(ast, cls));

  NodeId callable = ast.enclosing_callable(faulty);
  auto calls = nodes_of_kind(ast, faulty, NodeKind::kMethodInvocation);
  std::set<std::string> prone;
  for (NodeId m : nodes_of_kind(ast, ast.root(), NodeKind::kMethodDeclaration)) {
    NodeId nm = ast.child_of_kind(m, NodeKind::kName);
    if (nm == kNoNode) continue;
    if (ast.child_of_kind(m, NodeKind::kThrowsList) != kNoNode || !nodes_of_kind(ast, m, NodeKind::kThrow).empty()) {
      prone.insert(ast.label(nm));
    }
  }
  for (NodeId c : calls) {
    for (NodeId g : guards_of(ast, c, callable == kNoNode ? ast.root() : callable)) {
      on.insert(has_null_compare(ast, g) ? "methodCallWithNullGuard" : "methodCallWithNormalGuard");
    }
    NodeId child = c;
    for (NodeId a = ast.parent(c); a != kNoNode && child != callable; child = a, a = ast.parent(a)) {
      if (ast.kind(a) == NodeKind::kTry && ast.kind(child) == NodeKind::kBlock) on.insert("methodCallWithTryCatch");
    }
    auto ch = ast.children(c);
    if (!ch.empty()) {
      NodeId recv = ch[0];
      NodeKind rk = ast.kind(recv);
      bool objective = (rk == NodeKind::kIdentifier && !is_probable_type_reference(ast, recv)) ||
                       rk == NodeKind::kFieldAccess || rk == NodeKind::kMethodInvocation ||
                       rk == NodeKind::kObjectCreation || rk == NodeKind::kArrayAccess || rk == NodeKind::kParenthesized;
      if (objective) on.insert("hasObjectiveMethodCall");
    }
    NodeId name = ast.child_of_kind(c, NodeKind::kMethodName);
    if (name != kNoNode && prone.count(ast.label(name))) on.insert("hasInvocationsProneException");
  }
  if (callable != kNoNode) {
    for (NodeId c : ast.children(callable)) {
      if (ast.kind(c) == NodeKind::kModifier && ast.label(c) == "synchronized") on.insert("inSynchronizedMethod");
    }
    if (ast.child_of_kind(callable, NodeKind::kThrowsList) != kNoNode) on.insert("methodThrowsException");
  }
  if (ast.enclosing(faulty, NodeKind::kSynchronizedBlock) != kNoNode) on.insert("inSynchronizedMethod");

  // Similarity: variables of F's types guarded elsewhere in the method.
  std::map<std::string, VariableCategory> faulty_types;
  std::set<NodeId> faulty_decls;
  for (NodeId n : ast.preorder(faulty)) {
    if (!is_variable_reference(ast, n)) continue;
    VariableInfo info = resolve_variable(ast, n);
    if (info.declared_in == kNoNode || info.declared_type.empty()) continue;
    faulty_types.emplace(info.declared_type, info.category);
    faulty_decls.insert(info.declared_in);
  }
  if (callable != kNoNode && !faulty_types.empty()) {
    for (NodeId cond : nodes_of_kind(ast, callable, NodeKind::kCondition)) {
      if (inside(ast, faulty, cond)) continue;
      bool null_guard = has_null_compare(ast, cond);
      for (NodeId n : ast.preorder(cond)) {
        if (!is_variable_reference(ast, n)) continue;
        VariableInfo info = resolve_variable(ast, n);
        if (info.declared_in == kNoNode || faulty_decls.count(info.declared_in)) continue;
        auto it = faulty_types.find(info.declared_type);
        if (it == faulty_types.end()) continue;
        bool primitive = it->second == VariableCategory::kPrimitive;
        if (primitive) {
          on.insert(null_guard ? "similarPrimitiveTypeWithNullGuard" : "similarPrimitiveTypeWithNormalGuard");
        } else {
          on.insert(null_guard ? "similarObjectTypeWithNullGuard" : "similarObjectTypeWithNormalGuard");
        }
      }
    }
  }

  // Usage
  if (cls != kNoNode) {
    std::vector<NodeId> fields;
    for (NodeId c : ast.children(cls)) {
      if (ast.kind(c) == NodeKind::kVariableDeclaration) {
        for (NodeId d : declarators_of(ast, c)) fields.push_back(d);
      }
    }
    for (const auto& [d, u] : usage_in(ast, cls, fields)) {
      if (!u.initialized && !u.written) on.insert("fieldNotAssigned");
      if (!u.read) on.insert("fieldNotUsed");
    }
  }
  if (callable != kNoNode) {
    std::vector<NodeId> locals;
    for (NodeId decl : nodes_of_kind(ast, callable, NodeKind::kVariableDeclaration)) {
      for (NodeId d : declarators_of(ast, decl)) locals.push_back(d);
    }
    for (const auto& [d, u] : usage_in(ast, callable, locals)) {
      if (!u.initialized && !u.written) on.insert("localVarNotAssigned");
      if (!u.read) on.insert("localVarNotUsed");
    }
  }
  auto note_assignment_vars = [&](NodeId root) {
    for (NodeId n : ast.preorder(root)) {
      if (!is_variable_reference(ast, n)) continue;
      VariableCategory cat = resolve_variable(ast, n).category;
      on.insert(cat == VariableCategory::kPrimitive ? "primitiveUsedInAssignment" : "objectUsedInAssignment");
    }
  };
  for (NodeId n : ast.preorder(faulty)) {
    NodeKind k = ast.kind(n);
    if (k == NodeKind::kAssignmentExpression ||
        (k == NodeKind::kVariableDeclarator && ast.children(n).size() >= 2)) {
      note_assignment_vars(n);
    }
  }
}

}  // namespace

RawFeatures extract_code_description(const NormalizedAst& buggy, const NormalizedAst& patched,
                                     const EditScript& script) {
  ChangedStatements changed = changed_statements(script, buggy, patched);
  ScriptIndex ix(buggy, patched, script);
  FlagSet src;
  window_flags(buggy, changed.src, src);
  window_flags(patched, changed.dst, src);
  ast_operation_flags(ix, src);
  FlagSet former;
  window_flags(buggy, context_window(buggy, changed.src, true), former);
  window_flags(patched, context_window(patched, changed.dst, true), former);
  FlagSet latter;
  window_flags(buggy, context_window(buggy, changed.src, false), latter);
  window_flags(patched, context_window(patched, changed.dst, false), latter);
  RawFeatures out;
  emit_window(out, kSrcPrefix, src, true);
  emit_window(out, kFormerPrefix, former, false);
  emit_window(out, kLatterPrefix, latter, false);
  return out;
}

RawFeatures extract_repair_patterns(const NormalizedAst& buggy, const NormalizedAst& patched,
                                    const EditScript& script) {
  ScriptIndex ix(buggy, patched, script);
  FlagSet on;
  repair_patterns(ix, on);
  RawFeatures out;
  for (const auto& name : repair_pattern_names()) out.set(name, on.count(name) ? 1 : 0);
  return out;
}

RawFeatures extract_contextual(const NormalizedAst& buggy, const NormalizedAst& patched, const EditScript& script) {
  ChangedStatements changed = changed_statements(script, buggy, patched);
  RawFeatures out;
  FlagSet on;
  if (!changed.src.empty()) {
    contextual_features(buggy, changed.src.front(), out, on);
  } else if (!changed.dst.empty()) {
    contextual_features(patched, changed.dst.front(), out, on);
  } else {
    for (const auto& name : contextual_string_names()) out.set(name, std::string(kNoneValue));
  }
  for (const auto& name : contextual_binary_names()) out.set(name, on.count(name) ? 1 : 0);
  return out;
}

RawFeatures extract_features(const NormalizedAst& buggy, const NormalizedAst& patched, const EditScript& script) {
  RawFeatures out = extract_code_description(buggy, patched, script);
  out.merge(extract_repair_patterns(buggy, patched, script));
  out.merge(extract_contextual(buggy, patched, script));
  return out;
}

}  // namespace patchguard
