#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nbdoc/ast/python_parser.hpp"
#include "nbdoc/corpus/tokenize.hpp"
#include "nbdoc/errors.hpp"
#include "nbdoc/numerics/tensor.hpp"

namespace nbdoc::ast {

inline constexpr std::size_t kMaxAstNodes = 500;
inline constexpr std::size_t kCellsPerPair = 4;

// Syntax tree of one code cell: node labels in pre-order (root first) and
// (parent, child) edges.
struct AstGraph {
  std::vector<std::string> node_tokens;
  std::vector<std::pair<int, int>> edges;

  bool is_empty() const { return node_tokens.empty(); }
  std::size_t size() const { return node_tokens.size(); }

  friend bool operator==(const AstGraph&, const AstGraph&) = default;
};

struct AstParseResult {
  AstGraph graph;
  std::optional<std::string> warning;  // set when the source failed to parse
};

namespace detail {

inline void flatten(const PyNode& node, int parent, AstGraph& g, std::size_t cap) {
  if (g.node_tokens.size() >= cap) return;
  const int me = static_cast<int>(g.node_tokens.size());
  g.node_tokens.push_back(node.label);
  if (parent >= 0) g.edges.emplace_back(parent, me);
  for (const auto& c : node.children) flatten(c, me, g, cap);
}

}  // namespace detail

// Converts a syntax tree into pre-order graph form, keeping the first
// `cap` nodes. A pre-order prefix is always a connected subtree.
inline AstGraph to_graph(const PyNode& root, std::size_t cap = kMaxAstNodes) {
  AstGraph g;
  if (root.children.empty() && root.label == "module") return g;
  detail::flatten(root, -1, g, cap);
  return g;
}

// Parses one code cell (magic lines removed first). Invalid source yields
// the empty graph plus a warning instead of an exception.
inline AstParseResult parse_cell_to_ast(std::string_view source, std::size_t cap = kMaxAstNodes) {
  const std::string clean = corpus::strip_magic(source);
  try {
    return {to_graph(parse_python(clean), cap), std::nullopt};
  } catch (const SyntaxError& e) {
    return {AstGraph{}, std::string("unparseable code cell, using empty graph: ") + e.what()};
  }
}

// True when the graph is a tree: |E| = |V| - 1, every edge in range, each
// non-root node has exactly one parent and everything is reachable from 0.
inline bool is_tree(const AstGraph& g) {
  const std::size_t n = g.size();
  if (n == 0) return g.edges.empty();
  if (g.edges.size() != n - 1) return false;
  std::vector<int> parent(n, -1);
  std::vector<std::vector<int>> kids(n);
  for (auto [p, c] : g.edges) {
    if (p < 0 || c < 0 || static_cast<std::size_t>(p) >= n || static_cast<std::size_t>(c) >= n) {
      return false;
    }
    if (c == 0 || parent[c] != -1) return false;
    parent[c] = p;
    kids[p].push_back(c);
  }
  std::vector<bool> seen(n, false);
  std::vector<int> stack{0};
  std::size_t visited = 0;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (seen[v]) return false;
    seen[v] = true;
    ++visited;
    for (int k : kids[v]) stack.push_back(k);
  }
  return visited == n;
}

// Four graph slots plus a mask of which slots hold a real (non-empty) graph.
struct GraphBundle {
  std::array<AstGraph, kCellsPerPair> graphs;
  std::array<bool, kCellsPerPair> cell_mask{};

  std::size_t real_cells() const {
    std::size_t n = 0;
    for (bool m : cell_mask) n += m;
    return n;
  }
};

// Pads 1..4 graphs to four slots. A slot is unmasked exactly when its graph
// is non-empty, so a cell whose source failed to parse is masked.
inline GraphBundle bundle_graphs(std::vector<AstGraph> graphs) {
  if (graphs.empty()) throw InvalidInput("bundle_graphs needs at least one graph");
  if (graphs.size() > kCellsPerPair) {
    throw InvalidInput("bundle_graphs accepts at most 4 graphs, got " + std::to_string(graphs.size()));
  }
  GraphBundle b;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    b.cell_mask[i] = !graphs[i].is_empty();
    b.graphs[i] = std::move(graphs[i]);
  }
  return b;
}

// Symmetric normalized adjacency with self loops:
//   D^-1/2 (A + A^T + I) D^-1/2, D = row degrees of (A + A^T + I).
inline num::Tensor normalized_adjacency(const AstGraph& g) {
  const std::size_t m = g.size();
  num::Tensor a(m, m);
  if (m == 0) return a;
  for (std::size_t i = 0; i < m; ++i) a(i, i) = 1.0;
  for (auto [p, c] : g.edges) {
    a(p, c) = 1.0;
    a(c, p) = 1.0;
  }
  std::vector<double> inv_sqrt(m);
  for (std::size_t i = 0; i < m; ++i) {
    double deg = 0;
    for (std::size_t j = 0; j < m; ++j) deg += a(i, j);
    inv_sqrt[i] = 1.0 / std::sqrt(deg);
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) a(i, j) *= inv_sqrt[i] * inv_sqrt[j];
  }
  return a;
}

}  // namespace nbdoc::ast
