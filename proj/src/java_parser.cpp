// Recursive-descent parser for the Java subset seen in repair corpora:
// classes, interfaces, enums, records, the full statement set (minus switch
// expressions) and the full expression grammar including lambdas, method
// references and generics.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "patchguard/error.hpp"
#include "patchguard/java.hpp"

namespace patchguard::java {
namespace {

using Index = std::size_t;

bool is_primitive(std::string_view word) {
  return word == "int" || word == "long" || word == "short" || word == "byte" || word == "char" ||
         word == "boolean" || word == "float" || word == "double" || word == "void";
}

bool is_modifier_keyword(std::string_view word) {
  return word == "public" || word == "protected" || word == "private" || word == "static" ||
         word == "abstract" || word == "final" || word == "native" || word == "synchronized" ||
         word == "transient" || word == "volatile" || word == "strictfp" || word == "default";
}

bool is_assignment_op(std::string_view op) {
  return op == "=" || op == "+=" || op == "-=" || op == "*=" || op == "/=" || op == "%=" ||
         op == "&=" || op == "|=" || op == "^=" || op == "<<=" || op == ">>=" || op == ">>>=";
}

int binary_precedence(std::string_view op) {
  if (op == "||") return 1;
  if (op == "&&") return 2;
  if (op == "|") return 3;
  if (op == "^") return 4;
  if (op == "&") return 5;
  if (op == "==" || op == "!=") return 6;
  if (op == "<" || op == ">" || op == "<=" || op == ">=" || op == "instanceof") return 7;
  if (op == "<<" || op == ">>" || op == ">>>") return 8;
  if (op == "+" || op == "-") return 9;
  if (op == "*" || op == "/" || op == "%") return 10;
  return 0;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src), toks_(tokenize(src)) {}

  ConcreteTree run() {
    Index root = compilation_unit();
    tree_.root = root;
    return std::move(tree_);
  }

 private:
  // ---- token helpers ----
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t k = pos_ + ahead;
    return k < toks_.size() ? toks_[k] : toks_.back();
  }
  bool at_end() const { return peek().type == TokenType::kEnd; }
  bool is(std::string_view text, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.type != TokenType::kEnd && t.type != TokenType::kString && t.type != TokenType::kChar &&
           t.text == text;
  }
  bool is_ident(std::size_t ahead = 0) const { return peek(ahead).type == TokenType::kIdentifier; }
  const Token& advance() {
    const Token& t = toks_[pos_];
    prev_end_ = t.end;
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool accept(std::string_view text) {
    if (!is(text)) return false;
    advance();
    return true;
  }
  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = peek();
    std::string found = t.type == TokenType::kEnd ? "end of input" : "'" + std::string(t.text) + "'";
    throw SyntaxError("expected " + what + ", found " + found, t.begin);
  }
  const Token& expect(std::string_view text) {
    if (!is(text)) fail("'" + std::string(text) + "'");
    return advance();
  }
  const Token& expect_ident() {
    if (!is_ident()) fail("identifier");
    return advance();
  }
  // Splits a '>>' or '>>>' token so generic closers can be consumed one at a time.
  void split_angle() {
    Token& t = toks_[pos_];
    if (t.type != TokenType::kOperator || t.text.size() < 2 || t.text[0] != '>') return;
    if (t.text != ">>" && t.text != ">>>" && t.text != ">=" && t.text != ">>=" && t.text != ">>>=") return;
    Token rest{TokenType::kOperator, t.text.substr(1), t.begin + 1, t.end};
    t.text = t.text.substr(0, 1);
    t.end = t.begin + 1;
    toks_.insert(toks_.begin() + static_cast<std::ptrdiff_t>(pos_) + 1, rest);
  }

  struct Mark {
    std::size_t pos;
    std::size_t prev_end;
    std::size_t nodes;
    std::vector<Token> toks;
  };
  Mark mark() const { return {pos_, prev_end_, tree_.nodes.size(), {}}; }
  void reset(const Mark& m) {
    pos_ = m.pos;
    prev_end_ = m.prev_end;
    tree_.nodes.resize(m.nodes);
  }

  // ---- node helpers ----
  Index make(std::string_view kind, std::size_t begin, std::vector<Index> children = {}, std::string label = {}) {
    ConcreteNode n;
    n.kind = std::string(kind);
    n.label = std::move(label);
    n.span = {begin, std::max(begin, prev_end_)};
    n.children = std::move(children);
    tree_.nodes.push_back(std::move(n));
    return tree_.nodes.size() - 1;
  }
  Index leaf(std::string_view kind, const Token& t) {
    ConcreteNode n;
    n.kind = std::string(kind);
    n.label = std::string(t.text);
    n.span = {t.begin, t.end};
    tree_.nodes.push_back(std::move(n));
    return tree_.nodes.size() - 1;
  }
  Index placeholder(std::string_view kind, std::size_t at) {
    ConcreteNode n;
    n.kind = std::string(kind);
    n.span = {at, at};
    tree_.nodes.push_back(std::move(n));
    return tree_.nodes.size() - 1;
  }
  std::string text_between(std::size_t first_tok, std::size_t last_tok_exclusive) const {
    std::string out;
    bool prev_word = false;
    for (std::size_t k = first_tok; k < last_tok_exclusive; ++k) {
      const Token& t = toks_[k];
      bool word = t.type == TokenType::kIdentifier || t.type == TokenType::kKeyword ||
                  t.type == TokenType::kNumber;
      if (word && prev_word) out.push_back(' ');
      out.append(t.text);
      prev_word = word;
    }
    return out;
  }

  // ---- compilation unit ----
  Index compilation_unit() {
    std::vector<Index> kids;
    std::size_t begin = peek().begin;
    // package annotations are rare; tolerate them
    {
      Mark m = mark();
      std::vector<Index> annos;
      while (is("@") && !is("interface", 1)) annos.push_back(annotation());
      if (is("package")) {
        std::size_t b = peek().begin;
        advance();
        std::size_t first = pos_;
        qualified_name();
        std::string name = text_between(first, pos_);
        expect(";");
        kids.insert(kids.end(), annos.begin(), annos.end());
        kids.push_back(make("PackageDeclaration", b, {}, name));
      } else {
        reset(m);
      }
    }
    while (is("import")) {
      std::size_t b = peek().begin;
      advance();
      bool is_static = accept("static");
      std::size_t first = pos_;
      qualified_name();
      if (accept(".")) expect("*");
      std::string name = (is_static ? "static " : "") + text_between(first, pos_);
      expect(";");
      kids.push_back(make("ImportDeclaration", b, {}, name));
    }
    while (!at_end()) {
      if (accept(";")) continue;
      kids.push_back(type_declaration_or_member(true));
    }
    ConcreteNode root;
    root.kind = "CompilationUnit";
    root.span = {0, src_.size()};
    (void)begin;
    root.children = std::move(kids);
    tree_.nodes.push_back(std::move(root));
    return tree_.nodes.size() - 1;
  }

  void qualified_name() {
    expect_ident();
    while (is(".") && is_ident(1)) {
      advance();
      advance();
    }
  }

  Index annotation() {
    std::size_t b = peek().begin;
    std::size_t first = pos_;
    expect("@");
    qualified_name();
    if (is("(")) skip_balanced("(", ")");
    return make("Annotation", b, {}, text_between(first, pos_));
  }

  void skip_balanced(std::string_view open, std::string_view close) {
    expect(open);
    int depth = 1;
    while (depth > 0) {
      if (at_end()) fail("'" + std::string(close) + "'");
      if (is(open)) ++depth;
      if (is(close)) --depth;
      advance();
    }
  }

  std::vector<Index> modifiers() {
    std::vector<Index> out;
    while (true) {
      if (is("@") && !is("interface", 1)) {
        out.push_back(annotation());
      } else if (peek().type == TokenType::kKeyword && is_modifier_keyword(peek().text) &&
                 !(peek().text == "default" && (is(":", 1) || is("->", 1)))) {
        out.push_back(leaf("Modifier", advance()));
      } else if (is_ident() && (peek().text == "sealed" || peek().text == "non") &&
                 (peek(1).type == TokenType::kKeyword || is_ident(1) || is("-", 1))) {
        if (peek().text == "non" && is("-", 1) && peek(2).text == "sealed") {
          std::size_t b = peek().begin;
          advance();
          advance();
          advance();
          out.push_back(make("Modifier", b, {}, "non-sealed"));
        } else if (peek().text == "sealed" && (is("class", 1) || is("interface", 1) || is("abstract", 1) ||
                                               is("public", 1) || is("static", 1))) {
          out.push_back(leaf("Modifier", advance()));
        } else {
          break;
        }
      } else {
        break;
      }
    }
    return out;
  }

  bool at_type_declaration_keyword() const {
    return is("class") || is("interface") || is("enum") || (is("@") && is("interface", 1)) ||
           (is_ident() && peek().text == "record" && is_ident(1) && (is("(", 2) || is("<", 2)));
  }

  // Class-body member or top-level type.
  Index type_declaration_or_member(bool top_level) {
    std::size_t b = peek().begin;
    if (!top_level && is("{")) return initializer_block(b, {});
    if (!top_level && is("static") && is("{", 1)) {
      std::vector<Index> mods{leaf("Modifier", advance())};
      return initializer_block(b, std::move(mods));
    }
    std::vector<Index> mods = modifiers();
    if (at_type_declaration_keyword()) return type_declaration(b, std::move(mods));
    if (top_level) fail("type declaration");
    return member_declaration(b, std::move(mods));
  }

  Index initializer_block(std::size_t b, std::vector<Index> kids) {
    expect("{");
    while (!is("}")) {
      if (at_end()) fail("'}'");
      kids.push_back(block_statement());
    }
    expect("}");
    return make("InitializerBlock", b, std::move(kids));
  }

  Index type_parameters() {
    std::size_t b = peek().begin;
    std::size_t first = pos_;
    skip_type_arguments();
    return make("TypeParameters", b, {}, text_between(first, pos_));
  }

  Index type_declaration(std::size_t b, std::vector<Index> kids) {
    std::string keyword;
    if (is("@")) {
      std::size_t kb = peek().begin;
      advance();
      advance();
      kids.push_back(make("TypeKeyword", kb, {}, "@interface"));
      keyword = "@interface";
    } else {
      keyword = std::string(peek().text);
      kids.push_back(leaf("TypeKeyword", advance()));
    }
    kids.push_back(leaf("SimpleName", expect_ident()));
    if (is("<")) kids.push_back(type_parameters());
    if (keyword == "record") {
      kids.push_back(formal_parameters());
    }
    if (is("extends")) {
      std::size_t eb = peek().begin;
      advance();
      std::vector<Index> types{type()};
      while (accept(",")) types.push_back(type());
      kids.push_back(make("ExtendsClause", eb, std::move(types)));
    }
    if (is("implements")) {
      std::size_t ib = peek().begin;
      advance();
      std::vector<Index> types{type()};
      while (accept(",")) types.push_back(type());
      kids.push_back(make("ImplementsClause", ib, std::move(types)));
    }
    if (is_ident() && peek().text == "permits") {
      advance();
      type();
      while (accept(",")) type();
    }
    expect("{");
    if (keyword == "enum") {
      while (!is(";") && !is("}")) {
        kids.push_back(enum_constant());
        if (!accept(",")) break;
      }
      accept(";");
    }
    while (!is("}")) {
      if (at_end()) fail("'}'");
      if (accept(";")) continue;
      kids.push_back(type_declaration_or_member(false));
    }
    expect("}");
    std::string_view kind = keyword == "interface" || keyword == "@interface" ? "InterfaceDeclaration"
                            : keyword == "enum"                               ? "EnumDeclaration"
                            : keyword == "record"                             ? "RecordDeclaration"
                                                                              : "ClassDeclaration";
    return make(kind, b, std::move(kids));
  }

  Index enum_constant() {
    std::size_t b = peek().begin;
    std::vector<Index> kids;
    while (is("@")) kids.push_back(annotation());
    kids.push_back(leaf("SimpleName", expect_ident()));
    if (is("(")) kids.push_back(arguments());
    if (is("{")) kids.push_back(class_body("AnonymousClassBody"));
    return make("EnumConstant", b, std::move(kids));
  }

  Index class_body(std::string_view kind) {
    std::size_t b = peek().begin;
    expect("{");
    std::vector<Index> kids;
    while (!is("}")) {
      if (at_end()) fail("'}'");
      if (accept(";")) continue;
      kids.push_back(type_declaration_or_member(false));
    }
    expect("}");
    return make(kind, b, std::move(kids));
  }

  Index member_declaration(std::size_t b, std::vector<Index> kids) {
    if (is("<")) kids.push_back(type_parameters());
    if (is_ident() && is("(", 1)) {
      // constructor
      kids.push_back(leaf("SimpleName", advance()));
      kids.push_back(formal_parameters());
      if (is("throws")) kids.push_back(throws_clause());
      kids.push_back(block());
      return make("ConstructorDeclaration", b, std::move(kids));
    }
    if (is_ident() && is("{", 1)) {
      // compact record constructor
      kids.push_back(leaf("SimpleName", advance()));
      kids.push_back(block());
      return make("ConstructorDeclaration", b, std::move(kids));
    }
    kids.push_back(type());
    if (is_ident() && is("(", 1)) {
      kids.push_back(leaf("SimpleName", advance()));
      kids.push_back(formal_parameters());
      while (is("[") && is("]", 1)) {
        advance();
        advance();
      }
      if (is("throws")) kids.push_back(throws_clause());
      if (accept("default")) {
        element_value();
      }
      if (is("{")) {
        kids.push_back(block());
      } else {
        expect(";");
      }
      return make("MethodDeclaration", b, std::move(kids));
    }
    variable_declarators(kids);
    expect(";");
    return make("FieldDeclaration", b, std::move(kids));
  }

  void element_value() {
    if (is("{")) {
      skip_balanced("{", "}");
    } else if (is("@")) {
      annotation();
    } else {
      expression();
    }
  }

  Index throws_clause() {
    std::size_t b = peek().begin;
    expect("throws");
    std::vector<Index> types{type()};
    while (accept(",")) types.push_back(type());
    return make("ThrowsClause", b, std::move(types));
  }

  Index formal_parameters() {
    std::size_t b = peek().begin;
    expect("(");
    std::vector<Index> params;
    if (!is(")")) {
      params.push_back(formal_parameter());
      while (accept(",")) params.push_back(formal_parameter());
    }
    expect(")");
    return make("FormalParameters", b, std::move(params));
  }

  Index formal_parameter() {
    std::size_t b = peek().begin;
    std::vector<Index> kids = modifiers();
    Index t = type(/*allow_varargs=*/true);
    kids.push_back(t);
    if (is("this")) {
      kids.push_back(leaf("SimpleName", advance()));
    } else {
      kids.push_back(leaf("SimpleName", expect_ident()));
    }
    std::string dims;
    while (is("[") && is("]", 1)) {
      advance();
      advance();
      dims += "[]";
    }
    if (!dims.empty()) tree_.nodes[t].label += dims;
    return make("FormalParameter", b, std::move(kids));
  }

  // ---- types ----
  void skip_type_arguments() {
    expect("<");
    int depth = 1;
    while (depth > 0) {
      if (at_end()) fail("'>'");
      split_angle();
      if (is("<")) ++depth;
      if (is(">")) --depth;
      if (is(";") || is("{") || is("}") || is("=")) fail("'>'");
      advance();
    }
  }

  // Parses a type into a single leaf whose label is the normalized text.
  Index type(bool allow_varargs = false) {
    std::size_t b = peek().begin;
    std::size_t first = pos_;
    while (is("@")) annotation();
    std::size_t text_first = pos_;
    if (peek().type == TokenType::kKeyword && is_primitive(peek().text)) {
      advance();
    } else if (is_ident() || is("?")) {
      if (accept("?")) {
        if (accept("extends") || accept("super")) type();
      } else {
        advance();
        if (is("<")) skip_type_arguments();
        while (is(".") && is_ident(1)) {
          advance();
          advance();
          if (is("<")) skip_type_arguments();
        }
      }
    } else {
      fail("type");
    }
    while (is("[") && is("]", 1)) {
      advance();
      advance();
    }
    while (is("&") && (is_ident(1))) {
      advance();
      type();
    }
    if (allow_varargs && is("...")) advance();
    (void)first;
    ConcreteNode n;
    n.kind = "Type";
    n.label = text_between(text_first, pos_);
    n.span = {b, prev_end_};
    tree_.nodes.push_back(std::move(n));
    return tree_.nodes.size() - 1;
  }

  std::optional<Index> try_type() {
    Mark m = mark();
    try {
      return type();
    } catch (const SyntaxError&) {
      reset(m);
      return std::nullopt;
    }
  }

  // ---- statements ----
  Index block() {
    std::size_t b = peek().begin;
    expect("{");
    std::vector<Index> kids;
    while (!is("}")) {
      if (at_end()) fail("'}'");
      kids.push_back(block_statement());
    }
    expect("}");
    return make("Block", b, std::move(kids));
  }

  // Tries `modifiers Type name (=|;|,|[|:)` and returns true with position
  // restored when it looks like a local variable declaration.
  bool looks_like_local_declaration() {
    Mark m = mark();
    bool ok = false;
    try {
      modifiers();
      if (is_ident() && peek().text == "var" && is_ident(1)) {
        ok = true;
      } else {
        type();
        if (is_ident() && (is("=", 1) || is(";", 1) || is(",", 1) || is("[", 1) || is(":", 1))) ok = true;
      }
    } catch (const SyntaxError&) {
      ok = false;
    }
    reset(m);
    return ok;
  }

  Index local_variable_declaration(bool require_semicolon) {
    std::size_t b = peek().begin;
    std::vector<Index> kids = modifiers();
    kids.push_back(type());
    variable_declarators(kids);
    if (require_semicolon) expect(";");
    return make("LocalVariableDeclaration", b, std::move(kids));
  }

  void variable_declarators(std::vector<Index>& kids) {
    do {
      std::size_t b = peek().begin;
      std::vector<Index> parts{leaf("SimpleName", expect_ident())};
      while (is("[") && is("]", 1)) {
        advance();
        advance();
      }
      if (accept("=")) parts.push_back(is("{") ? array_initializer() : expression());
      kids.push_back(make("VariableDeclarator", b, std::move(parts)));
    } while (accept(","));
  }

  Index block_statement() {
    std::size_t b = peek().begin;
    // local class
    {
      Mark m = mark();
      std::vector<Index> mods = modifiers();
      if (at_type_declaration_keyword()) {
        Index decl = type_declaration(b, std::move(mods));
        tree_.nodes[decl].kind = "LocalClassDeclaration";
        return decl;
      }
      reset(m);
    }
    if (looks_like_local_declaration()) return local_variable_declaration(true);
    return statement();
  }

  Index condition_in_parens() {
    expect("(");
    std::size_t b = peek().begin;
    Index e = expression();
    Index c = make("ConditionExpression", b, {e});
    expect(")");
    return c;
  }

  Index statement() {
    std::size_t b = peek().begin;
    if (is("{")) return block();
    if (is(";")) {
      advance();
      return make("EmptyStatement", b);
    }
    if (is_ident() && is(":", 1)) {
      Index label = leaf("StatementLabel", advance());
      advance();
      Index body = statement();
      return make("LabeledStatement", b, {label, body});
    }
    if (peek().type == TokenType::kKeyword) {
      std::string_view kw = peek().text;
      if (kw == "if") {
        advance();
        std::vector<Index> kids{condition_in_parens()};
        kids.push_back(statement());
        if (accept("else")) kids.push_back(statement());
        return make("IfStatement", b, std::move(kids));
      }
      if (kw == "while") {
        advance();
        Index c = condition_in_parens();
        Index body = statement();
        return make("WhileStatement", b, {c, body});
      }
      if (kw == "do") {
        advance();
        Index body = statement();
        expect("while");
        Index c = condition_in_parens();
        expect(";");
        return make("DoStatement", b, {body, c});
      }
      if (kw == "for") return for_statement();
      if (kw == "try") return try_statement();
      if (kw == "switch") return switch_statement();
      if (kw == "return") {
        advance();
        std::vector<Index> kids;
        if (!is(";")) kids.push_back(expression());
        expect(";");
        return make("ReturnStatement", b, std::move(kids));
      }
      if (kw == "break" || kw == "continue") {
        advance();
        std::vector<Index> kids;
        if (is_ident()) kids.push_back(leaf("StatementLabel", advance()));
        expect(";");
        return make(kw == "break" ? "BreakStatement" : "ContinueStatement", b, std::move(kids));
      }
      if (kw == "throw") {
        advance();
        Index e = expression();
        expect(";");
        return make("ThrowStatement", b, {e});
      }
      if (kw == "synchronized") {
        advance();
        expect("(");
        Index e = expression();
        expect(")");
        Index body = block();
        return make("SynchronizedStatement", b, {e, body});
      }
      if (kw == "assert") {
        advance();
        std::vector<Index> kids{expression()};
        if (accept(":")) kids.push_back(expression());
        expect(";");
        return make("AssertStatement", b, std::move(kids));
      }
    }
    if (is_ident() && peek().text == "yield" && !is("=", 1) && !is("(", 1) && !is(".", 1)) {
      advance();
      Index e = expression();
      expect(";");
      return make("YieldStatement", b, {e});
    }
    Index e = expression();
    expect(";");
    return make(expression_statement_kind(e), b, {e});
  }

  std::string_view expression_statement_kind(Index e) const {
    const ConcreteNode& n = tree_.nodes[e];
    if (n.kind == "AssignmentExpression" || n.kind == "PostfixExpression") return "AssignmentStatement";
    if (n.kind == "UnaryExpression" && !n.children.empty()) {
      const std::string& op = tree_.nodes[n.children.front()].label;
      if (op == "++" || op == "--") return "AssignmentStatement";
    }
    if (n.kind == "MethodInvocation" || n.kind == "ExplicitConstructorInvocation") return "InvocationStatement";
    return "ExpressionStatement";
  }

  Index for_statement() {
    std::size_t b = peek().begin;
    expect("for");
    expect("(");
    // enhanced for
    {
      Mark m = mark();
      bool enhanced = false;
      try {
        modifiers();
        type();
        expect_ident();
        enhanced = is(":");
      } catch (const SyntaxError&) {
        enhanced = false;
      }
      reset(m);
      if (enhanced) {
        std::size_t pb = peek().begin;
        std::vector<Index> pk = modifiers();
        pk.push_back(type());
        pk.push_back(leaf("SimpleName", expect_ident()));
        Index param = make("FormalParameter", pb, std::move(pk));
        expect(":");
        Index iterable = expression();
        expect(")");
        Index body = statement();
        return make("EnhancedForStatement", b, {param, iterable, body});
      }
    }
    std::size_t ib = peek().begin;
    std::vector<Index> init;
    if (!is(";")) {
      if (looks_like_local_declaration()) {
        init.push_back(local_variable_declaration(false));
      } else {
        init.push_back(expression());
        while (accept(",")) init.push_back(expression());
      }
    }
    Index init_node = init.empty() ? placeholder("ForInit", ib) : make("ForInit", ib, std::move(init));
    expect(";");
    Index cond;
    if (is(";")) {
      cond = placeholder("ConditionExpression", peek().begin);
    } else {
      std::size_t cb = peek().begin;
      Index e = expression();
      cond = make("ConditionExpression", cb, {e});
    }
    expect(";");
    std::size_t ub = peek().begin;
    std::vector<Index> update;
    if (!is(")")) {
      update.push_back(expression());
      while (accept(",")) update.push_back(expression());
    }
    Index update_node = update.empty() ? placeholder("ForUpdate", ub) : make("ForUpdate", ub, std::move(update));
    expect(")");
    Index body = statement();
    return make("ForStatement", b, {init_node, cond, update_node, body});
  }

  Index try_statement() {
    std::size_t b = peek().begin;
    expect("try");
    std::vector<Index> kids;
    bool has_resources = is("(");
    if (has_resources) {
      std::size_t rb = peek().begin;
      advance();
      std::vector<Index> resources;
      while (!is(")")) {
        if (looks_like_local_declaration()) {
          resources.push_back(local_variable_declaration(false));
        } else {
          resources.push_back(expression());
        }
        if (!accept(";")) break;
      }
      expect(")");
      kids.push_back(make("TryResources", rb, std::move(resources)));
    }
    kids.push_back(block());
    while (is("catch")) {
      std::size_t cb = peek().begin;
      advance();
      expect("(");
      std::size_t pb = peek().begin;
      std::vector<Index> pk = modifiers();
      std::size_t tb = peek().begin;
      std::size_t first = pos_;
      type();
      while (accept("|")) type();
      ConcreteNode t;
      t.kind = "Type";
      t.label = text_between(first, pos_);
      t.span = {tb, prev_end_};
      tree_.nodes.push_back(std::move(t));
      pk.push_back(tree_.nodes.size() - 1);
      pk.push_back(leaf("SimpleName", expect_ident()));
      Index param = make("FormalParameter", pb, std::move(pk));
      expect(")");
      Index body = block();
      kids.push_back(make("CatchClause", cb, {param, body}));
    }
    if (is("finally")) {
      std::size_t fb = peek().begin;
      advance();
      Index body = block();
      kids.push_back(make("FinallyClause", fb, {body}));
    }
    std::size_t handlers = kids.size() - (has_resources ? 2 : 1);
    if (handlers == 0 && !has_resources) fail("'catch' or 'finally'");
    return make("TryStatement", b, std::move(kids));
  }

  Index switch_statement() {
    std::size_t b = peek().begin;
    expect("switch");
    expect("(");
    Index selector = expression();
    expect(")");
    expect("{");
    std::vector<Index> kids{selector};
    while (!is("}")) {
      if (at_end()) fail("'}'");
      std::size_t gb = peek().begin;
      std::vector<Index> group;
      bool arrow = false;
      while (is("case") || is("default")) {
        std::size_t lb = peek().begin;
        if (accept("default")) {
          Index lbl = make("SwitchLabel", lb, {}, "default");
          group.push_back(lbl);
        } else {
          advance();
          std::vector<Index> values;
          no_lambda_ = true;
          values.push_back(ternary());
          while (accept(",")) values.push_back(ternary());
          no_lambda_ = false;
          group.push_back(make("SwitchLabel", lb, std::move(values)));
        }
        if (accept("->")) {
          arrow = true;
          break;
        }
        expect(":");
      }
      if (group.empty()) fail("'case' or 'default'");
      if (arrow) {
        if (is("{")) {
          group.push_back(block());
        } else if (is("throw")) {
          group.push_back(statement());
        } else {
          std::size_t sb = peek().begin;
          Index e = expression();
          expect(";");
          group.push_back(make(expression_statement_kind(e), sb, {e}));
        }
      } else {
        while (!is("case") && !is("default") && !is("}")) {
          if (at_end()) fail("'}'");
          group.push_back(block_statement());
        }
      }
      kids.push_back(make("SwitchCaseGroup", gb, std::move(group)));
    }
    expect("}");
    return make("SwitchStatement", b, std::move(kids));
  }

  // ---- expressions ----
  bool lambda_ahead() const {
    if (no_lambda_) return false;
    if (is_ident() && is("->", 1)) return true;
    if (!is("(")) return false;
    int depth = 0;
    for (std::size_t k = pos_; k < toks_.size(); ++k) {
      const Token& t = toks_[k];
      if (t.type == TokenType::kEnd) return false;
      if (t.type == TokenType::kOperator) {
        if (t.text == "(") ++depth;
        if (t.text == ")") {
          --depth;
          if (depth == 0) return k + 1 < toks_.size() && toks_[k + 1].text == "->" &&
                                 toks_[k + 1].type == TokenType::kOperator;
        }
      }
    }
    return false;
  }

  Index lambda() {
    std::size_t b = peek().begin;
    std::vector<Index> kids;
    if (is_ident()) {
      kids.push_back(leaf("SimpleName", advance()));
    } else {
      expect("(");
      while (!is(")")) {
        if (is_ident() && (is(",", 1) || is(")", 1))) {
          kids.push_back(leaf("SimpleName", advance()));
        } else {
          kids.push_back(formal_parameter());
        }
        if (!accept(",")) break;
      }
      expect(")");
    }
    expect("->");
    bool saved = no_lambda_;
    no_lambda_ = false;
    kids.push_back(is("{") ? block() : expression());
    no_lambda_ = saved;
    return make("LambdaExpression", b, std::move(kids));
  }

  Index expression() {
    if (lambda_ahead()) return lambda();
    std::size_t b = peek().begin;
    Index lhs = ternary();
    if (peek().type == TokenType::kOperator) {
      if (is_assignment_op(peek().text)) {
        Index op = leaf("Operator", advance());
        Index rhs = is("{") ? array_initializer() : expression();
        return make("AssignmentExpression", b, {lhs, op, rhs});
      }
    }
    return lhs;
  }

  Index ternary() {
    std::size_t b = peek().begin;
    Index cond = binary(1);
    if (accept("?")) {
      Index a = lambda_ahead() ? lambda() : ternary();
      expect(":");
      Index c = lambda_ahead() ? lambda() : ternary();
      return make("TernaryExpression", b, {cond, a, c});
    }
    return cond;
  }

  Index binary(int min_prec) {
    std::size_t b = peek().begin;
    Index lhs = unary();
    while (true) {
      const Token& t = peek();
      if (t.type != TokenType::kOperator && !(t.type == TokenType::kKeyword && t.text == "instanceof")) break;
      int prec = binary_precedence(t.text);
      if (prec == 0 || prec < min_prec) break;
      if (t.text == "instanceof") {
        advance();
        accept("final");
        std::vector<Index> kids{lhs, type()};
        if (is_ident() && !is("(", 1)) kids.push_back(leaf("SimpleName", advance()));
        lhs = make("InstanceOfExpression", b, std::move(kids));
        continue;
      }
      Index op = leaf("Operator", advance());
      Index rhs = binary(prec + 1);
      lhs = make("BinaryExpression", b, {lhs, op, rhs});
    }
    return lhs;
  }

  bool cast_ahead() {
    if (!is("(")) return false;
    Mark m = mark();
    bool ok = false;
    try {
      advance();
      bool primitive = peek().type == TokenType::kKeyword && is_primitive(peek().text);
      type();
      if (is(")")) {
        const Token& next = peek(1);
        if (primitive) {
          ok = true;
        } else {
          ok = next.type == TokenType::kIdentifier || next.type == TokenType::kNumber ||
               next.type == TokenType::kString || next.type == TokenType::kChar ||
               next.type == TokenType::kTextBlock ||
               (next.type == TokenType::kKeyword &&
                (next.text == "this" || next.text == "super" || next.text == "new" || next.text == "true" ||
                 next.text == "false" || next.text == "null" || is_primitive(next.text))) ||
               (next.type == TokenType::kOperator && (next.text == "(" || next.text == "!" || next.text == "~"));
        }
      }
    } catch (const SyntaxError&) {
      ok = false;
    }
    reset(m);
    return ok;
  }

  Index unary() {
    std::size_t b = peek().begin;
    if (is("+") || is("-") || is("++") || is("--") || is("!") || is("~")) {
      Index op = leaf("Operator", advance());
      Index operand = unary();
      return make("UnaryExpression", b, {op, operand});
    }
    if (cast_ahead()) {
      advance();
      Index t = type();
      expect(")");
      Index operand = lambda_ahead() ? lambda() : unary();
      return make("CastExpression", b, {t, operand});
    }
    return postfix();
  }

  Index postfix() {
    std::size_t b = peek().begin;
    Index e = primary();
    while (true) {
      if (is(".")) {
        advance();
        if (is("<")) skip_type_arguments();
        if (is("new")) {
          e = creator(b, e);
          continue;
        }
        if (is("class")) {
          advance();
          ConcreteNode& target = tree_.nodes[e];
          std::string label = std::string(src_.substr(target.span.begin, target.span.end - target.span.begin));
          Index t = make("Type", target.span.begin, {}, strip_spaces(label));
          tree_.nodes[t].span = target.span;
          e = make("ClassLiteral", b, {t});
          continue;
        }
        if (is("this") || is("super")) {
          Index kw = leaf(is("this") ? "ThisExpression" : "SuperExpression", advance());
          e = make("FieldAccess", b, {e, kw});
          continue;
        }
        const Token& name = expect_ident();
        if (is("(")) {
          Index m = leaf("MethodIdentifier", name);
          Index args = arguments();
          e = make("MethodInvocation", b, {e, m, args});
        } else {
          Index f = leaf("FieldIdentifier", name);
          e = make("FieldAccess", b, {e, f});
        }
        continue;
      }
      if (is("[")) {
        advance();
        Index idx = expression();
        expect("]");
        e = make("ArrayAccess", b, {e, idx});
        continue;
      }
      if (is("::")) {
        advance();
        if (is("<")) skip_type_arguments();
        Index name = is("new") ? leaf("MethodIdentifier", advance()) : leaf("MethodIdentifier", expect_ident());
        e = make("MethodReference", b, {e, name});
        continue;
      }
      if (is("++") || is("--")) {
        Index op = leaf("Operator", advance());
        e = make("PostfixExpression", b, {e, op});
        continue;
      }
      break;
    }
    return e;
  }

  static std::string strip_spaces(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c != ' ' && c != '\n' && c != '\t' && c != '\r') out.push_back(c);
    }
    return out;
  }

  Index arguments() {
    std::size_t b = peek().begin;
    expect("(");
    std::vector<Index> args;
    if (!is(")")) {
      args.push_back(expression());
      while (accept(",")) args.push_back(expression());
    }
    expect(")");
    return make("Arguments", b, std::move(args));
  }

  Index array_initializer() {
    std::size_t b = peek().begin;
    expect("{");
    std::vector<Index> items;
    while (!is("}")) {
      items.push_back(is("{") ? array_initializer() : expression());
      if (!accept(",")) break;
    }
    expect("}");
    return make("ArrayInitializer", b, std::move(items));
  }

  // `new ...`, optionally qualified by an outer instance.
  Index creator(std::size_t b, std::optional<Index> outer) {
    expect("new");
    if (is("<")) skip_type_arguments();
    std::size_t tb = peek().begin;
    std::size_t first = pos_;
    while (is("@")) annotation();
    std::size_t text_first = pos_;
    if (peek().type == TokenType::kKeyword && is_primitive(peek().text)) {
      advance();
    } else {
      expect_ident();
      if (is("<")) skip_type_arguments();
      while (is(".") && is_ident(1)) {
        advance();
        advance();
        if (is("<")) skip_type_arguments();
      }
    }
    (void)first;
    if (is("[")) {
      std::vector<Index> dims;
      std::string suffix;
      std::size_t type_end = prev_end_;
      std::string base = text_between(text_first, pos_);
      while (is("[")) {
        advance();
        if (is("]")) {
          advance();
        } else {
          dims.push_back(expression());
          expect("]");
        }
        suffix += "[]";
      }
      ConcreteNode t;
      t.kind = "Type";
      t.label = base + suffix;
      t.span = {tb, type_end};
      tree_.nodes.push_back(std::move(t));
      std::vector<Index> kids{tree_.nodes.size() - 1};
      kids.insert(kids.end(), dims.begin(), dims.end());
      if (is("{")) kids.push_back(array_initializer());
      return make("ArrayCreation", b, std::move(kids));
    }
    ConcreteNode t;
    t.kind = "Type";
    t.label = text_between(text_first, pos_);
    t.span = {tb, prev_end_};
    tree_.nodes.push_back(std::move(t));
    std::vector<Index> kids;
    if (outer) kids.push_back(*outer);
    kids.push_back(tree_.nodes.size() - 1);
    kids.push_back(arguments());
    if (is("{")) kids.push_back(class_body("AnonymousClassBody"));
    return make("ObjectCreation", b, std::move(kids));
  }

  Index primary() {
    std::size_t b = peek().begin;
    const Token& t = peek();
    switch (t.type) {
      case TokenType::kNumber: {
        bool floating = t.text.find_first_of(".eEpP") != std::string_view::npos &&
                        !(t.text.size() > 1 && (t.text[1] == 'x' || t.text[1] == 'X') &&
                          t.text.find_first_of("pP") == std::string_view::npos);
        char last = t.text.back();
        if (last == 'f' || last == 'F' || last == 'd' || last == 'D') {
          if (!(t.text.size() > 1 && (t.text[1] == 'x' || t.text[1] == 'X'))) floating = true;
        }
        return leaf(floating ? "FloatingLiteral" : "IntegerLiteral", advance());
      }
      case TokenType::kString:
        return leaf("StringLiteral", advance());
      case TokenType::kTextBlock:
        return leaf("TextBlock", advance());
      case TokenType::kChar:
        return leaf("CharacterLiteral", advance());
      case TokenType::kIdentifier: {
        if (is("(", 1)) {
          Index m = leaf("MethodIdentifier", advance());
          Index args = arguments();
          return make("MethodInvocation", b, {m, args});
        }
        if (is("[", 1) && is("]", 2)) {
          Index ty = type();
          return type_suffix(b, ty);
        }
        if (is("<", 1) && generic_type_ahead()) {
          Index ty = type();
          return type_suffix(b, ty);
        }
        return leaf("Identifier", advance());
      }
      case TokenType::kKeyword: {
        if (t.text == "true" || t.text == "false") return leaf("BooleanLiteral", advance());
        if (t.text == "null") return leaf("NullLiteral", advance());
        if (t.text == "this" || t.text == "super") {
          bool is_this = t.text == "this";
          if (is("(", 1)) {
            Index m = leaf("MethodIdentifier", advance());
            Index args = arguments();
            return make("ExplicitConstructorInvocation", b, {m, args});
          }
          return leaf(is_this ? "ThisExpression" : "SuperExpression", advance());
        }
        if (t.text == "new") return creator(b, std::nullopt);
        if (is_primitive(t.text)) {
          Index ty = type();
          return type_suffix(b, ty);
        }
        if (t.text == "switch") fail("expression (switch expressions are not supported)");
        break;
      }
      case TokenType::kOperator: {
        if (t.text == "(") {
          advance();
          Index e = expression();
          expect(")");
          return make("ParenthesizedExpression", b, {e});
        }
        break;
      }
      case TokenType::kEnd:
        break;
    }
    fail("expression");
  }

  // Distinguishes `List<String>::new` / `Foo<T>.class` from `a < b`.
  bool generic_type_ahead() {
    Mark m = mark();
    bool ok = false;
    try {
      type();
      ok = is("::") || (is(".") && is("class", 1));
    } catch (const SyntaxError&) {
      ok = false;
    }
    reset(m);
    return ok;
  }

  Index type_suffix(std::size_t b, Index ty) {
    if (is(".") && is("class", 1)) {
      advance();
      advance();
      return make("ClassLiteral", b, {ty});
    }
    if (is("::")) {
      advance();
      Index name = is("new") ? leaf("MethodIdentifier", advance()) : leaf("MethodIdentifier", expect_ident());
      return make("MethodReference", b, {ty, name});
    }
    fail("'.class' or '::'");
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t prev_end_ = 0;
  bool no_lambda_ = false;
  ConcreteTree tree_;
};

}  // namespace

ConcreteTree Adapter::parse(std::string_view source_text) const {
  Parser parser(source_text);
  return parser.run();
}

}  // namespace patchguard::java
