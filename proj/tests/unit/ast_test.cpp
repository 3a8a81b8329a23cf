#include <gtest/gtest.h>

#include <algorithm>
#include <thread>

#include "patchguard/ast.hpp"
#include "patchguard/error.hpp"
#include "patchguard/grammar.hpp"
#include "patchguard/java.hpp"
#include "support/random_java.hpp"

using namespace patchguard;

namespace {

NodeId find_first(const NormalizedAst& ast, NodeKind kind, std::string_view label = {}) {
  for (NodeId n : ast.preorder()) {
    if (ast.kind(n) == kind && (label.empty() || ast.label(n) == label)) return n;
  }
  return kNoNode;
}

std::vector<NodeId> find_all(const NormalizedAst& ast, NodeKind kind, std::string_view label = {}) {
  std::vector<NodeId> out;
  for (NodeId n : ast.preorder()) {
    if (ast.kind(n) == kind && (label.empty() || ast.label(n) == label)) out.push_back(n);
  }
  return out;
}

void expect_tree_invariants(const NormalizedAst& ast) {
  ASSERT_NE(ast.root(), kNoNode);
  EXPECT_EQ(ast.parent(ast.root()), kNoNode);
  std::vector<int> parent_count(ast.size(), 0);
  for (const AstNode& n : ast.nodes()) {
    std::size_t cursor = n.span.begin;
    for (NodeId c : n.children) {
      ++parent_count[static_cast<std::size_t>(c)];
      EXPECT_EQ(ast.parent(c), n.id);
      const Span& cs = ast.node(c).span;
      EXPECT_LE(cursor, cs.begin);
      EXPECT_LE(cs.end, n.span.end);
      cursor = cs.end;
    }
    if (n.children.empty() && !is_statement_kind(n.kind)) {
      bool placeholder = n.kind == NodeKind::kCompilationUnit || n.kind == NodeKind::kParameterList ||
                         n.kind == NodeKind::kArguments || n.kind == NodeKind::kCondition ||
                         n.kind == NodeKind::kForInit || n.kind == NodeKind::kForUpdate ||
                         n.kind == NodeKind::kClassBody || n.kind == NodeKind::kArrayInitializer ||
                         n.kind == NodeKind::kTypeParameters;
      EXPECT_TRUE(!n.label.empty() || placeholder) << kind_name(n.kind);
    }
  }
  for (std::size_t i = 0; i < ast.size(); ++i) {
    EXPECT_EQ(parent_count[i], static_cast<NodeId>(i) == ast.root() ? 0 : 1);
  }
}

}  // namespace

TEST(ParseSource, EmptyFileYieldsEmptyCompilationUnit) {
  auto ast = parse_source("", "java");
  ASSERT_EQ(ast.size(), 1u);
  EXPECT_EQ(ast.kind(ast.root()), NodeKind::kCompilationUnit);
  EXPECT_TRUE(ast.children(ast.root()).empty());
  EXPECT_EQ(ast.grammar_id(), "java");
}

TEST(ParseSource, OneMethodClassNestsStatementsUnderBlock) {
  const std::string src =
      "class A {\n"
      "  void m() {\n"
      "    int x = 1;\n"
      "    x = x + 2;\n"
      "    System.out.println(x);\n"
      "  }\n"
      "}\n";
  auto ast = parse_source(src, "java");
  expect_tree_invariants(ast);
  NodeId cls = find_first(ast, NodeKind::kClassDeclaration);
  ASSERT_NE(cls, kNoNode);
  EXPECT_EQ(ast.parent(cls), ast.root());
  NodeId method = find_first(ast, NodeKind::kMethodDeclaration);
  ASSERT_NE(method, kNoNode);
  EXPECT_EQ(ast.parent(method), cls);
  NodeId block = ast.child_of_kind(method, NodeKind::kBlock);
  ASSERT_NE(block, kNoNode);
  auto stmts = ast.children(block);
  ASSERT_EQ(stmts.size(), 3u);
  EXPECT_EQ(ast.kind(stmts[0]), NodeKind::kVariableDeclaration);
  EXPECT_EQ(ast.kind(stmts[1]), NodeKind::kAssignment);
  EXPECT_EQ(ast.kind(stmts[2]), NodeKind::kInvocationStatement);

  // Statement spans run from the first token of the statement to its ';'.
  auto tokens = java::tokenize(src);
  std::vector<std::size_t> semis;
  for (const auto& t : tokens) {
    if (t.text == ";") semis.push_back(t.end);
  }
  ASSERT_EQ(semis.size(), 3u);
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].text == "{" && i > 0 && tokens[i - 1].text == ")") starts.push_back(tokens[i + 1].begin);
  }
  ASSERT_EQ(starts.size(), 1u);
  EXPECT_EQ(ast.node(stmts[0]).span.begin, starts[0]);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(ast.node(stmts[i]).span.end, semis[i]);
  for (std::size_t i = 1; i < 3; ++i) {
    auto it = std::find_if(tokens.begin(), tokens.end(), [&](const java::Token& t) { return t.end == semis[i - 1]; });
    ASSERT_NE(it + 1, tokens.end());
    EXPECT_EQ(ast.node(stmts[i]).span.begin, (it + 1)->begin);
  }
  EXPECT_EQ(ast.line_of(ast.node(stmts[1]).span.begin), 3u);
}

TEST(ParseSource, UnbalancedBraceIsSyntaxError) {
  const std::string src = "class A {\n  void m() {\n    x = 1;\n  \n}\n";
  try {
    parse_source(src, "java");
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_LE(e.offset(), src.size());
  }
}

TEST(ParseSource, UnknownGrammarIsRejected) {
  EXPECT_THROW(parse_source("x", "cobol"), UnknownGrammar);
}

TEST(ParseSource, StrayCharacterIsSyntaxError) {
  EXPECT_THROW(parse_source("class A { int x = 1 # 2; }", "java"), SyntaxError);
}

TEST(ParseSource, BroadJavaSyntaxParses) {
  const std::string src = R"(
package org.example.util;

import java.util.*;
import static java.lang.Math.max;

@SuppressWarnings("unchecked")
public abstract class Box<T extends Comparable<T>> extends Base implements Runnable, java.io.Serializable {
  private static final long serialVersionUID = 1L;
  protected List<Map<String, int[]>> items = new ArrayList<>();
  private final T[] store;
  static { init(); }

  enum Mode { ON, OFF; Mode flip() { return this == ON ? OFF : ON; } }
  interface Visitor<R> { R visit(Box<?> b) throws Exception; default void noop() {} }
  record Pair(int a, String b) {}

  public Box(T[] store) { super(); this.store = store; }

  @Override
  public synchronized void run() {
    outer:
    for (int i = 0, j = 10; i < j; i++, j--) {
      if (i % 2 == 0) continue outer; else if (i > 5) break;
    }
    for (T t : store) { System.out.println(t); }
    do { counter >>>= 1; } while (counter > 0);
    try (var r = open(); Reader q = other()) {
      r.read();
    } catch (IOException | RuntimeException e) {
      throw new IllegalStateException("bad", e);
    } finally {
      close();
    }
    switch (mode) {
      case ON:
      case OFF: { x = 1; break; }
      default: x = 2;
    }
    synchronized (this) { counter += (int) 3.5e2; }
    Runnable r = () -> { counter++; };
    java.util.function.Function<Integer, Integer> f = v -> v * 2;
    int[][] grid = new int[3][];
    int[] vals = {1, 2, 3};
    String s = 'c' + "text" + null;
    boolean ok = store instanceof Object[] && !(counter <= 0) || true;
    Object o = Box.class;
    Comparator<String> cmp = String::compareTo;
    x = ok ? ~counter : -counter << 2;
    assert x > 0 : "positive";
    ;
  }

  abstract <U> U convert(T value) throws Exception;
}
)";
  auto ast = parse_source(src, "java");
  expect_tree_invariants(ast);
  EXPECT_NE(find_first(ast, NodeKind::kLambda), kNoNode);
  EXPECT_NE(find_first(ast, NodeKind::kMethodReference), kNoNode);
  EXPECT_NE(find_first(ast, NodeKind::kSynchronizedBlock), kNoNode);
  EXPECT_NE(find_first(ast, NodeKind::kBranchCase), kNoNode);
  EXPECT_NE(find_first(ast, NodeKind::kCatch), kNoNode);
  EXPECT_NE(find_first(ast, NodeKind::kConstructorDeclaration), kNoNode);
  EXPECT_EQ(find_all(ast, NodeKind::kLoop).size(), 3u);
}

TEST(ParseSource, DeterministicAcrossThreads) {
  pgtest::ProgramGen gen(7);
  auto text = pgtest::ProgramGen::render_program(gen.program());
  auto reference = parse_source(text, "java");
  std::vector<std::thread> workers;
  std::vector<int> same(8, 0);
  for (int t = 0; t < 8; ++t) {
    workers.emplace_back([&, t] {
      auto again = parse_source(text, "java");
      same[static_cast<std::size_t>(t)] = isomorphic(reference, again) && again.size() == reference.size();
    });
  }
  for (auto& w : workers) w.join();
  for (int s : same) EXPECT_TRUE(s);
}

TEST(ParseSource, SpanNestingHoldsOnRandomPrograms) {
  pgtest::ProgramGen gen(2024);
  for (int i = 0; i < 200; ++i) {
    auto text = pgtest::ProgramGen::render_program(gen.program());
    auto ast = parse_source(text, "java");
    expect_tree_invariants(ast);
    auto pre = ast.preorder();
    for (std::size_t k = 0; k < pre.size(); ++k) ASSERT_EQ(pre[k], static_cast<NodeId>(k));
  }
}

TEST(KindMapping, ShippedMappingIsVersioned) {
  auto m = KindMapping::from_json(builtin_java_mapping());
  EXPECT_EQ(m.grammar_id, "java");
  EXPECT_FALSE(m.version.empty());
  EXPECT_EQ(GrammarRegistry::global().grammar_for_extension(".java"), std::optional<std::string>("java"));
  EXPECT_THROW(m.map("no-such-kind"), Error);
  EXPECT_THROW(KindMapping::from_json("{\"grammar_id\":\"x\",\"version\":\"1\",\"kinds\":{\"a\":\"bogus\"}}"), Error);
}

TEST(KindMapping, EveryStatementKindHasAName) {
  ASSERT_EQ(statement_kinds().size(), 18u);
  for (NodeKind k : statement_kinds()) {
    EXPECT_TRUE(is_statement_kind(k));
    EXPECT_EQ(kind_from_name(kind_name(k)), std::optional<NodeKind>(k));
  }
  EXPECT_EQ(kind_name(NodeKind::kMethodDeclaration), "method");
}

class StatementContextTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ast_ = parse_source(
        "class A {\n"
        "  void m() {\n"
        "    s1(); s2(); s3(); s4(); s5(); s6(); s7();\n"
        "    if (c) { inner(); }\n"
        "  }\n"
        "}\n",
        "java");
    NodeId method = find_first(ast_, NodeKind::kMethodDeclaration);
    block_ = ast_.child_of_kind(method, NodeKind::kBlock);
  }
  NormalizedAst ast_;
  NodeId block_ = kNoNode;
};

TEST_F(StatementContextTest, MiddleStatementSeesThreeEachSide) {
  auto stmts = ast_.children(block_);
  auto ctx = statement_context(ast_, stmts[3]);
  EXPECT_EQ(ctx.former, (std::vector<NodeId>{stmts[0], stmts[1], stmts[2]}));
  EXPECT_EQ(ctx.latter, (std::vector<NodeId>{stmts[4], stmts[5], stmts[6]}));
}

TEST_F(StatementContextTest, FirstStatementHasNoFormer) {
  auto stmts = ast_.children(block_);
  auto ctx = statement_context(ast_, stmts[0]);
  EXPECT_TRUE(ctx.former.empty());
  EXPECT_EQ(ctx.latter, (std::vector<NodeId>{stmts[1], stmts[2], stmts[3]}));
}

TEST_F(StatementContextTest, NeverCrossesBlockBoundary) {
  NodeId inner = find_first(ast_, NodeKind::kInvocationStatement);
  for (NodeId n : find_all(ast_, NodeKind::kInvocationStatement)) {
    if (ast_.parent(n) != block_) inner = n;
  }
  ASSERT_NE(ast_.parent(inner), block_);
  auto ctx = statement_context(ast_, inner);
  EXPECT_TRUE(ctx.former.empty());
  EXPECT_TRUE(ctx.latter.empty());
}

TEST_F(StatementContextTest, KBoundsBothSides) {
  auto stmts = ast_.children(block_);
  auto ctx = statement_context(ast_, stmts[4], 1);
  EXPECT_EQ(ctx.former, (std::vector<NodeId>{stmts[3]}));
  EXPECT_EQ(ctx.latter, (std::vector<NodeId>{stmts[5]}));
}

TEST_F(StatementContextTest, RejectsNonStatements) {
  NodeId ident = find_first(ast_, NodeKind::kMethodName);
  ASSERT_NE(ident, kNoNode);
  EXPECT_THROW(statement_context(ast_, ident), NotAStatement);
}

class ResolveVariableTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ast_ = parse_source(
        "import static java.lang.Math.PI;\n"
        "interface Shape {}\n"
        "abstract class Base {}\n"
        "enum Color { RED, GREEN }\n"
        "class Range {\n"
        "  private double[] data;\n"
        "  private Shape shape;\n"
        "  private Color color;\n"
        "  private Base base;\n"
        "  int count;\n"
        "  double f(int x, String name) {\n"
        "    Color c = Color.RED;\n"
        "    double local = x + PI;\n"
        "    this.data = null;\n"
        "    shape = null; base = null; color = c;\n"
        "    for (int i = 0; i < x; i++) { count += i; }\n"
        "    return local + name.length();\n"
        "  }\n"
        "}\n",
        "java");
  }
  NodeId ident(std::string_view name, int occurrence = 0) {
    auto all = find_all(ast_, NodeKind::kIdentifier, name);
    return all.at(static_cast<std::size_t>(occurrence));
  }
  NormalizedAst ast_;
};

TEST_F(ResolveVariableTest, ParameterIsLocalPrimitive) {
  auto info = resolve_variable(ast_, ident("x"));
  EXPECT_EQ(info.scope, VariableScope::kLocal);
  EXPECT_EQ(info.category, VariableCategory::kPrimitive);
  EXPECT_NE(info.declared_in, kNoNode);
}

TEST_F(ResolveVariableTest, ThisFieldIsGlobalObject) {
  NodeId field = find_first(ast_, NodeKind::kFieldName, "data");
  ASSERT_NE(field, kNoNode);
  auto info = resolve_variable(ast_, field);
  EXPECT_EQ(info.scope, VariableScope::kGlobal);
  EXPECT_EQ(info.category, VariableCategory::kObject);
}

TEST_F(ResolveVariableTest, UnresolvedImportedConstantIsGlobalObject) {
  auto info = resolve_variable(ast_, ident("PI"));
  EXPECT_EQ(info.scope, VariableScope::kGlobal);
  EXPECT_EQ(info.category, VariableCategory::kObject);
  EXPECT_EQ(info.declared_in, kNoNode);
}

TEST_F(ResolveVariableTest, CategoriesFollowVisibleDeclarations) {
  EXPECT_EQ(resolve_variable(ast_, ident("shape")).category, VariableCategory::kAbstract);
  EXPECT_EQ(resolve_variable(ast_, ident("base")).category, VariableCategory::kAbstract);
  EXPECT_EQ(resolve_variable(ast_, ident("color")).category, VariableCategory::kEnumeration);
  EXPECT_EQ(resolve_variable(ast_, ident("c")).scope, VariableScope::kLocal);
  EXPECT_EQ(resolve_variable(ast_, ident("c")).category, VariableCategory::kEnumeration);
  EXPECT_EQ(resolve_variable(ast_, ident("count")).scope, VariableScope::kGlobal);
  EXPECT_EQ(resolve_variable(ast_, ident("count")).category, VariableCategory::kPrimitive);
  EXPECT_EQ(resolve_variable(ast_, ident("i", 1)).scope, VariableScope::kLocal);
  EXPECT_EQ(resolve_variable(ast_, ident("name")).category, VariableCategory::kObject);
  EXPECT_EQ(resolve_variable(ast_, ident("local")).scope, VariableScope::kLocal);
}

TEST_F(ResolveVariableTest, TypeReceiverIsNotAVariable) {
  EXPECT_TRUE(is_probable_type_reference(ast_, ident("Color")));
  EXPECT_FALSE(is_probable_type_reference(ast_, ident("name")));
}

TEST(TypeHelpers, PrimitiveNames) {
  EXPECT_TRUE(is_primitive_type("int"));
  EXPECT_TRUE(is_primitive_type("boolean"));
  EXPECT_FALSE(is_primitive_type("Integer"));
  EXPECT_FALSE(is_primitive_type("int[]"));
}
