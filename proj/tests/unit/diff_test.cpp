#include <gtest/gtest.h>

#include <random>
#include <set>

#include "patchguard/ast.hpp"
#include "patchguard/diff.hpp"
#include "patchguard/error.hpp"
#include "support/random_java.hpp"
#include "support/random_tree.hpp"
#include "support/tree_edit_distance.hpp"

using namespace patchguard;

namespace {

const char* kWrapIfBuggy =
    "public class Range {\n"
    "  private double lower;\n"
    "  private double upper;\n"
    "  public void scale(double factor) {\n"
    "    double tmp = lower * factor;\n"
    "    lower = upper * factor;\n"
    "    upper = -tmp;\n"
    "    log(lower, upper);\n"
    "  }\n"
    "}\n";

const char* kWrapIfPatched =
    "public class Range {\n"
    "  private double lower;\n"
    "  private double upper;\n"
    "  public void scale(double factor) {\n"
    "    double tmp = lower * factor;\n"
    "    lower = upper * factor;\n"
    "    if (tmp == lower) {\n"
    "      upper = -tmp;\n"
    "    }\n"
    "    log(lower, upper);\n"
    "  }\n"
    "}\n";

void expect_mapping_disjoint(const EditScript& s) {
  std::set<NodeId> mapped;
  for (auto [a, b] : s.mapping) mapped.insert(a);
  for (const auto& a : s.actions) {
    if (a.op == EditOp::kDelete || a.op == EditOp::kUpdate) EXPECT_EQ(mapped.count(a.src), 0u);
  }
}

void expect_action_shapes(const EditScript& s) {
  for (const auto& a : s.actions) {
    switch (a.op) {
      case EditOp::kUpdate:
      case EditOp::kMove:
        EXPECT_NE(a.src, kNoNode);
        EXPECT_NE(a.dst, kNoNode);
        break;
      case EditOp::kAdd:
        EXPECT_EQ(a.src, kNoNode);
        EXPECT_NE(a.dst, kNoNode);
        break;
      case EditOp::kDelete:
        EXPECT_NE(a.src, kNoNode);
        EXPECT_EQ(a.dst, kNoNode);
        break;
    }
  }
}

}  // namespace

TEST(Diff, IdenticalTreesGiveEmptyScriptAndTotalMapping) {
  auto a = parse_source(kWrapIfBuggy, "java");
  auto b = parse_source(kWrapIfBuggy, "java");
  auto s = diff(a, b);
  EXPECT_TRUE(s.actions.empty());
  ASSERT_EQ(s.mapping.size(), a.size());
  for (auto [x, y] : s.mapping) EXPECT_EQ(x, y);
}

TEST(Diff, SingleLiteralChangeIsOneUpdate) {
  auto a = parse_source("class A { void m() { int x = 0; y = x; } }", "java");
  auto b = parse_source("class A { void m() { int x = 1; y = x; } }", "java");
  ASSERT_EQ(pgtest::TreeEditDistance::compute(a, b), 1);
  auto s = diff(a, b);
  ASSERT_EQ(s.actions.size(), 1u);
  EXPECT_EQ(s.actions[0].op, EditOp::kUpdate);
  EXPECT_EQ(a.kind(s.actions[0].src), NodeKind::kNumberLiteral);
  EXPECT_EQ(a.label(s.actions[0].src), "0");
  EXPECT_EQ(s.actions[0].label, "1");
  auto cs = changed_statements(s, a, b);
  ASSERT_EQ(cs.src.size(), 1u);
  ASSERT_EQ(cs.dst.size(), 1u);
  EXPECT_EQ(a.kind(cs.src[0]), NodeKind::kVariableDeclaration);
  EXPECT_EQ(b.kind(cs.dst[0]), NodeKind::kVariableDeclaration);
}

TEST(Diff, SingleLeafChangeMatchesExhaustiveOracleOnSmallTrees) {
  std::mt19937_64 rng(99);
  int checked = 0;
  for (int iter = 0; iter < 400; ++iter) {
    auto a = pgtest::random_tree(rng, 20);
    std::vector<NodeId> leaves;
    for (NodeId n : a.preorder()) {
      if (a.children(n).empty()) leaves.push_back(n);
    }
    NodeId leaf = leaves[rng() % leaves.size()];
    auto b = pgtest::relabel_leaf(a, leaf, a.label(leaf) + "'");
    ASSERT_EQ(pgtest::TreeEditDistance::compute(a, b), 1);
    auto s = diff(a, b);
    ASSERT_EQ(s.actions.size(), 1u) << to_sexpr(a, a.root());
    EXPECT_EQ(s.actions[0].op, EditOp::kUpdate);
    EXPECT_EQ(s.actions[0].src, leaf);
    EXPECT_TRUE(isomorphic(apply(a, s), b));
    ++checked;
  }
  EXPECT_EQ(checked, 400);
}

TEST(Diff, SingleLeafChangeOnParsedSmallPrograms) {
  const char* programs[] = {
      "class A { void m() { x = 0; } }",
      "class A { int f() { return a + 1; } }",
      "class A { void m() { foo(a, 2); } }",
      "class A { void m() { if (a < 3) b = 1; } }",
  };
  for (const char* text : programs) {
    auto a = parse_source(text, "java");
    ASSERT_LE(a.size(), 20u) << text;
    for (NodeId n : a.preorder()) {
      if (!a.children(n).empty() || a.label(n).empty()) continue;
      auto b = pgtest::relabel_leaf(a, n, a.label(n) + "z");
      ASSERT_EQ(pgtest::TreeEditDistance::compute(a, b), 1);
      auto s = diff(a, b);
      ASSERT_EQ(s.actions.size(), 1u) << text << " leaf " << n;
      EXPECT_EQ(s.actions[0].op, EditOp::kUpdate);
      EXPECT_EQ(s.actions[0].src, n);
    }
  }
}

TEST(Diff, WrapInIfAddsConditionalAndMovesAssignment) {
  auto a = parse_source(kWrapIfBuggy, "java");
  auto b = parse_source(kWrapIfPatched, "java");
  auto s = diff(a, b);
  bool added_if = false;
  bool moved_assignment = false;
  for (const auto& act : s.actions) {
    if (act.op == EditOp::kAdd && act.kind == NodeKind::kConditional) added_if = true;
    if (act.op == EditOp::kMove && a.kind(act.src) == NodeKind::kAssignment) {
      moved_assignment = true;
      NodeId then_block = b.parent(act.dst);
      EXPECT_EQ(b.kind(then_block), NodeKind::kBlock);
      EXPECT_EQ(b.kind(b.parent(then_block)), NodeKind::kConditional);
    }
    EXPECT_NE(act.op, EditOp::kDelete);
  }
  EXPECT_TRUE(added_if);
  EXPECT_TRUE(moved_assignment);
  EXPECT_TRUE(isomorphic(apply(a, s), b));

  auto cs = changed_statements(s, a, b);
  ASSERT_EQ(cs.src.size(), 1u);
  EXPECT_EQ(a.kind(cs.src[0]), NodeKind::kAssignment);
  EXPECT_EQ(a.label(a.children(a.children(cs.src[0])[0])[0]), "upper");
  ASSERT_EQ(cs.dst.size(), 1u);
  EXPECT_EQ(b.kind(cs.dst[0]), NodeKind::kConditional);
}

TEST(Diff, GrammarMismatchIsRejected) {
  auto a = parse_source("class A {}", "java");
  NormalizedAst other(std::vector<AstNode>(a.nodes().begin(), a.nodes().end()), a.root(), "kotlin", "", {0});
  EXPECT_THROW(diff(a, other), GrammarMismatch);
}

TEST(Diff, RoundTripOnRandomProgramPairs) {
  pgtest::ProgramGen gen(20240601);
  int pairs = 0;
  int nontrivial = 0;
  while (pairs < 600) {
    auto body = gen.program();
    auto mutated = body;
    int edits = 1 + gen.pick(3);
    for (int e = 0; e < edits; ++e) gen.mutate(mutated);
    auto a = parse_source(pgtest::ProgramGen::render_program(body), "java");
    auto b = parse_source(pgtest::ProgramGen::render_program(mutated), "java");
    auto s = diff(a, b);
    expect_action_shapes(s);
    expect_mapping_disjoint(s);
    for (auto [x, y] : s.mapping) ASSERT_EQ(a.kind(x), b.kind(y));
    auto r = apply(a, s);
    ASSERT_TRUE(isomorphic(r, b)) << pgtest::ProgramGen::render_program(body) << "\n----\n"
                                  << pgtest::ProgramGen::render_program(mutated);
    if (!s.actions.empty()) ++nontrivial;
    ++pairs;
  }
  EXPECT_GT(nontrivial, 400);
}

TEST(Diff, RoundTripOnArbitraryTreePairs) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    auto a = pgtest::random_tree(rng, 25);
    auto b = pgtest::random_tree(rng, 25);
    auto s = diff(a, b);
    expect_action_shapes(s);
    expect_mapping_disjoint(s);
    ASSERT_TRUE(isomorphic(apply(a, s), b));
  }
}

TEST(Apply, EmptyScriptReproducesInput) {
  auto a = parse_source(kWrapIfBuggy, "java");
  EditScript s;
  s.grammar_id = "java";
  auto r = apply(a, s);
  EXPECT_TRUE(isomorphic(r, a));
  EXPECT_EQ(r.size(), a.size());
}

TEST(Apply, StaleNodeIdIsInvalidScript) {
  auto a = parse_source("class A { void m() { x = 0; } }", "java");
  EditScript s;
  EditAction del;
  del.op = EditOp::kDelete;
  del.src = static_cast<NodeId>(a.size() + 10);
  s.actions.push_back(del);
  EXPECT_THROW(apply(a, s), InvalidScript);

  EditScript twice;
  NodeId leaf = kNoNode;
  for (NodeId n : a.preorder()) {
    if (a.children(n).empty()) leaf = n;
  }
  del.src = leaf;
  twice.actions = {del, del};
  EXPECT_THROW(apply(a, twice), InvalidScript);

  EditScript orphan;
  EditAction add;
  add.op = EditOp::kAdd;
  add.dst = 1;
  add.dst_parent = 12345;
  add.kind = NodeKind::kIdentifier;
  add.label = "q";
  orphan.actions.push_back(add);
  EXPECT_THROW(apply(a, orphan), InvalidScript);
}

TEST(ChangedStatements, EmptyScriptHasNoStatements) {
  auto a = parse_source(kWrapIfBuggy, "java");
  auto cs = changed_statements(EditScript{}, a, a);
  EXPECT_TRUE(cs.src.empty());
  EXPECT_TRUE(cs.dst.empty());
}

TEST(ChangedStatements, ResultsAreInSourceOrderAndUnique) {
  auto a = parse_source("class A { void m() { a = 1; b = 2; c = 3; } }", "java");
  auto b = parse_source("class A { void m() { a = 7; b = 2; c = 9; } }", "java");
  auto s = diff(a, b);
  auto cs = changed_statements(s, a, b);
  ASSERT_EQ(cs.src.size(), 2u);
  EXPECT_LT(cs.src[0], cs.src[1]);
  ASSERT_EQ(cs.dst.size(), 2u);
}

TEST(TextFormat, OneLinePerActionWithPaths) {
  auto a = parse_source("class A { void m() { int x = 0; } }", "java");
  auto b = parse_source("class A { void m() { int x = 1; } }", "java");
  auto s = diff(a, b);
  auto text = to_text(s, a, b);
  EXPECT_EQ(text, "UPD " + node_path(a, s.actions[0].src) + " " + node_path(b, s.actions[0].dst) + " -\n");
  EXPECT_EQ(node_path(a, a.root()), "/");
  EXPECT_EQ(node_path(a, a.children(a.root())[0]), "/0");
}
