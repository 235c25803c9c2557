#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "nbdoc/ast/graph.hpp"
#include "nbdoc/util/rng.hpp"

using namespace nbdoc;
using nbdoc::ast::AstGraph;

namespace {

nlohmann::json load_json(const std::string& name) {
  std::ifstream in(std::string(NBDOC_TEST_DATA) + "/" + name);
  return nlohmann::json::parse(in);
}

}  // namespace

// Every snippet's graph must equal the one CPython's own parser yields
// (tests/oracle/py_ast_graph.py, frozen into ast_expected.json).
TEST(ParseCellToAst, MatchesReferenceParser) {
  const auto cases = load_json("ast_expected.json");
  ASSERT_GT(cases.size(), 100u);
  for (const auto& c : cases) {
    const std::string src = c["source"];
    SCOPED_TRACE(src);
    const auto result = ast::parse_cell_to_ast(src);
    EXPECT_EQ(!result.warning.has_value(), c["ok"].get<bool>()) << result.warning.value_or("");
    EXPECT_EQ(result.graph.node_tokens, c["nodes"].get<std::vector<std::string>>());
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : c["edges"]) edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    EXPECT_EQ(result.graph.edges, edges);
  }
}

TEST(ParseCellToAst, AssignmentExample) {
  const auto r = ast::parse_cell_to_ast("x = 1");
  EXPECT_FALSE(r.warning);
  EXPECT_EQ(r.graph.node_tokens, (std::vector<std::string>{"module", "assign", "name", "x", "num"}));
  EXPECT_TRUE(ast::is_tree(r.graph));
}

TEST(ParseCellToAst, EmptySourceGivesEmptyGraph) {
  const auto r = ast::parse_cell_to_ast("");
  EXPECT_FALSE(r.warning);
  EXPECT_TRUE(r.graph.is_empty());
  EXPECT_TRUE(r.graph.edges.empty());
}

TEST(ParseCellToAst, SyntaxErrorFallsBackWithWarning) {
  const auto r = ast::parse_cell_to_ast("def f(:");
  ASSERT_TRUE(r.warning.has_value());
  EXPECT_NE(r.warning->find("unparseable"), std::string::npos);
  EXPECT_TRUE(r.graph.is_empty());
}

TEST(ParseCellToAst, MagicLinesAreIgnored) {
  const auto with_magic = ast::parse_cell_to_ast("%matplotlib inline\n!ls\nx = 1");
  const auto plain = ast::parse_cell_to_ast("x = 1");
  EXPECT_FALSE(with_magic.warning);
  EXPECT_EQ(with_magic.graph, plain.graph);
}

TEST(ParseCellToAst, NodeCapKeepsPreorderPrefixTree) {
  std::string src;
  for (int i = 0; i < 300; ++i) src += "value_" + std::to_string(i) + " = f(a, b)\n";
  const auto r = ast::parse_cell_to_ast(src);
  EXPECT_EQ(r.graph.size(), ast::kMaxAstNodes);
  EXPECT_TRUE(ast::is_tree(r.graph));
  const auto small = ast::parse_cell_to_ast(src, 7);
  EXPECT_EQ(small.graph.size(), 7u);
  EXPECT_TRUE(ast::is_tree(small.graph));
}

namespace {

// Random expression programs for the structural properties.
std::string random_expr(util::Rng& rng, int depth) {
  static const char* names[] = {"df", "x_train", "plotData", "np", "model", "i"};
  static const char* ops[] = {"+", "-", "*", "/", "**", "//", "%", "==", "<", "and", "or", "|"};
  const auto pick = rng.below(depth > 3 ? 3 : 9);
  switch (pick) {
    case 0: return names[rng.below(6)];
    case 1: return std::to_string(rng.below(100));
    case 2: return "'s'";
    case 3: return random_expr(rng, depth + 1) + " " + ops[rng.below(12)] + " " + random_expr(rng, depth + 1);
    case 4: return "(" + random_expr(rng, depth + 1) + ")." + names[rng.below(6)];
    case 5: return names[rng.below(6)] + std::string("(") + random_expr(rng, depth + 1) + ", k=" +
                   random_expr(rng, depth + 1) + ")";
    case 6: return "[" + random_expr(rng, depth + 1) + " for i in " + random_expr(rng, depth + 1) + "]";
    case 7: return "(" + random_expr(rng, depth + 1) + ")[" + random_expr(rng, depth + 1) + ":]";
    default: return "(lambda i: " + random_expr(rng, depth + 1) + ")";
  }
}

}  // namespace

TEST(ParseCellToAst, RandomProgramsAreDeterministicTrees) {
  util::Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    std::string src;
    const auto lines = 1 + rng.below(5);
    for (std::size_t l = 0; l < lines; ++l) src += "v" + std::to_string(l) + " = " + random_expr(rng, 0) + "\n";
    SCOPED_TRACE(src);
    const auto a = ast::parse_cell_to_ast(src);
    const auto b = ast::parse_cell_to_ast(src);
    ASSERT_FALSE(a.warning) << *a.warning;
    EXPECT_TRUE(ast::is_tree(a.graph));
    EXPECT_LE(a.graph.size(), ast::kMaxAstNodes);
    EXPECT_EQ(a.graph, b.graph);
  }
}

TEST(IsTree, RejectsBrokenGraphs) {
  AstGraph g{{"a", "b", "c"}, {{0, 1}, {1, 2}}};
  EXPECT_TRUE(ast::is_tree(g));
  EXPECT_FALSE(ast::is_tree(AstGraph{{"a", "b", "c"}, {{0, 1}}}));           // disconnected
  EXPECT_FALSE(ast::is_tree(AstGraph{{"a", "b", "c"}, {{0, 1}, {0, 5}}}));   // out of range
  EXPECT_FALSE(ast::is_tree(AstGraph{{"a", "b", "c"}, {{0, 1}, {2, 1}}}));   // two parents
  EXPECT_TRUE(ast::is_tree(AstGraph{}));
}

TEST(BundleGraphs, PadsAndMasks) {
  AstGraph g = ast::parse_cell_to_ast("x = 1").graph;
  const auto two = ast::bundle_graphs({g, g});
  EXPECT_EQ(two.cell_mask, (std::array<bool, 4>{true, true, false, false}));
  EXPECT_TRUE(two.graphs[2].is_empty());
  EXPECT_TRUE(two.graphs[3].is_empty());
  const auto four = ast::bundle_graphs({g, g, g, g});
  EXPECT_EQ(four.cell_mask, (std::array<bool, 4>{true, true, true, true}));
  EXPECT_EQ(four.real_cells(), 4u);
  EXPECT_THROW(ast::bundle_graphs({}), InvalidInput);
  EXPECT_THROW(ast::bundle_graphs({g, g, g, g, g}), InvalidInput);
}

TEST(BundleGraphs, UnparseableCellIsMasked) {
  AstGraph g = ast::parse_cell_to_ast("x = 1").graph;
  AstGraph bad = ast::parse_cell_to_ast("def f(:").graph;
  const auto b = ast::bundle_graphs({g, bad});
  EXPECT_EQ(b.cell_mask, (std::array<bool, 4>{true, false, false, false}));
}

TEST(NormalizedAdjacency, SingleNode) {
  const auto a = ast::normalized_adjacency(AstGraph{{"module"}, {}});
  ASSERT_EQ(a.shape(), (num::Shape{1, 1}));
  EXPECT_DOUBLE_EQ(a(0, 0), 1.0);
}

TEST(NormalizedAdjacency, TwoNodeChain) {
  // degrees (2, 2): every entry 1/sqrt(2*2)
  const auto a = ast::normalized_adjacency(AstGraph{{"a", "b"}, {{0, 1}}});
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(a(i, j), 0.5, 1e-15);
  }
}

TEST(NormalizedAdjacency, EmptyGraph) {
  const auto a = ast::normalized_adjacency(AstGraph{});
  EXPECT_EQ(a.size(), 0u);
  EXPECT_EQ(a.rows(), 0u);
}

TEST(NormalizedAdjacency, SymmetricBoundedOnRealTrees) {
  const auto cases = load_json("ast_expected.json");
  for (const auto& c : cases) {
    const auto g = ast::parse_cell_to_ast(c["source"].get<std::string>()).graph;
    const auto a = ast::normalized_adjacency(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        EXPECT_EQ(a(i, j), a(j, i));
        EXPECT_GE(a(i, j), 0.0);
        EXPECT_LE(a(i, j), 1.0);
      }
    }
  }
}
