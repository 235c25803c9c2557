#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "nbdoc/ast/graph.hpp"
#include "nbdoc/corpus/markdown.hpp"
#include "nbdoc/corpus/notebook.hpp"
#include "nbdoc/corpus/tokenize.hpp"

namespace nbdoc::corpus {

inline constexpr std::size_t kCellsPerPair = ast::kCellsPerPair;

// One documentation text with the (up to four) code cells beneath it.
struct CodeDocPair {
  std::string id;
  Tokens doc_tokens;
  std::array<Tokens, kCellsPerPair> code_cells;
  std::size_t n_real_cells = 0;
  std::array<ast::AstGraph, kCellsPerPair> graphs;

  friend bool operator==(const CodeDocPair&, const CodeDocPair&) = default;
};

struct ExtractOptions {
  std::string id_prefix;  // pair id = "<prefix>#<markdown cell index>"
  MarkdownRules rules;
  std::size_t max_code_tokens = kMaxCodeTokens;
  std::size_t max_doc_tokens = kMaxDocTokens;
  std::size_t max_ast_nodes = ast::kMaxAstNodes;
};

// Builds a pair from documentation text and 1..4 code cell sources.
inline CodeDocPair make_pair(std::string id, Tokens doc_tokens, const std::vector<std::string>& sources,
                             const ExtractOptions& opt = {}, std::vector<std::string>* warnings = nullptr) {
  CodeDocPair pair;
  pair.id = std::move(id);
  pair.doc_tokens = std::move(doc_tokens);
  pair.n_real_cells = std::min(sources.size(), kCellsPerPair);
  for (std::size_t i = 0; i < pair.n_real_cells; ++i) {
    pair.code_cells[i] = tokenize_code(sources[i], opt.max_code_tokens);
    auto parsed = ast::parse_cell_to_ast(sources[i], opt.max_ast_nodes);
    if (parsed.warning && warnings) warnings->push_back(pair.id + ": " + *parsed.warning);
    pair.graphs[i] = std::move(parsed.graph);
  }
  return pair;
}

// Pairs every markdown cell with the run of code cells directly below it
// (up to the next markdown cell, first four kept). Code cells that are
// blank once magics are removed do not count towards the run.
inline std::vector<CodeDocPair> extract_pairs(const std::vector<NotebookCell>& cells,
                                              const ExtractOptions& opt = {},
                                              std::vector<std::string>* warnings = nullptr) {
  std::vector<CodeDocPair> out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].kind != CellKind::markdown) continue;
    std::vector<std::string> run;
    for (std::size_t j = i + 1; j < cells.size() && cells[j].kind == CellKind::code; ++j) {
      const std::string clean = strip_magic(cells[j].source);
      if (detail::trim(clean).empty()) continue;
      if (run.size() < kCellsPerPair) run.push_back(cells[j].source);
    }
    if (run.empty()) continue;
    if (detail::trim(cells[i].source).empty()) continue;
    const auto doc = classify_markdown(cells[i].source, opt.rules);
    Tokens doc_tokens = tokenize_doc(doc.doc_text, opt.max_doc_tokens);
    if (doc_tokens.empty()) continue;
    out.push_back(make_pair(opt.id_prefix + "#" + std::to_string(cells[i].index), std::move(doc_tokens),
                            run, opt, warnings));
  }
  return out;
}

inline ast::GraphBundle graph_bundle(const CodeDocPair& pair) {
  ast::GraphBundle b;
  for (std::size_t i = 0; i < kCellsPerPair; ++i) {
    b.graphs[i] = pair.graphs[i];
    b.cell_mask[i] = !pair.graphs[i].is_empty();
  }
  return b;
}

}  // namespace nbdoc::corpus
