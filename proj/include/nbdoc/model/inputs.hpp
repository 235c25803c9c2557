#pragma once

#include <array>
#include <vector>

#include "nbdoc/ast/graph.hpp"
#include "nbdoc/corpus/pairs.hpp"
#include "nbdoc/corpus/vocab.hpp"
#include "nbdoc/model/config.hpp"
#include "nbdoc/numerics/tensor.hpp"

namespace nbdoc::model {

inline constexpr std::size_t kCells = ast::kCellsPerPair;

// Encoder-side inputs of one pair, as ids.
struct ModelInputs {
  // Real code tokens of all cells, concatenated and cut to code_len.
  std::vector<int> code_ids;
  std::vector<int> code_cell;            // source cell of each position
  std::vector<std::size_t> code_offset;  // position within that cell
  // Per cell: node ids (pre-order, cut to ast_len) and normalized adjacency.
  std::array<std::vector<int>, kCells> node_ids;
  std::array<num::Tensor, kCells> a_hat;
  // A masked cell is ignored by the graph encoders and attention.
  std::array<bool, kCells> cell_mask{};

  std::size_t real_cells() const {
    std::size_t n = 0;
    for (bool m : cell_mask) n += m;
    return n;
  }
};

// Keeps the first `cap` pre-order nodes of a graph.
inline ast::AstGraph truncate_graph(const ast::AstGraph& g, std::size_t cap) {
  if (g.size() <= cap) return g;
  ast::AstGraph out;
  out.node_tokens.assign(g.node_tokens.begin(), g.node_tokens.begin() + static_cast<std::ptrdiff_t>(cap));
  for (auto [p, c] : g.edges) {
    if (static_cast<std::size_t>(p) < cap && static_cast<std::size_t>(c) < cap) out.edges.emplace_back(p, c);
  }
  return out;
}

inline ModelInputs make_inputs(const std::array<corpus::Tokens, kCells>& code_cells,
                               const std::array<ast::AstGraph, kCells>& graphs, const corpus::Vocabulary& code_vocab,
                               const corpus::Vocabulary& ast_vocab, const ModelConfig& cfg) {
  ModelInputs in;
  for (std::size_t i = 0; i < kCells; ++i) {
    for (std::size_t k = 0; k < code_cells[i].size() && in.code_ids.size() < cfg.code_len; ++k) {
      in.code_ids.push_back(code_vocab.id(code_cells[i][k]));
      in.code_cell.push_back(static_cast<int>(i));
      in.code_offset.push_back(k);
    }
    const auto g = truncate_graph(graphs[i], cfg.ast_len);
    in.cell_mask[i] = !g.is_empty();
    for (const auto& t : g.node_tokens) in.node_ids[i].push_back(ast_vocab.id(t));
    in.a_hat[i] = ast::normalized_adjacency(g);
  }
  return in;
}

inline ModelInputs make_inputs(const corpus::CodeDocPair& pair, const corpus::Vocabulary& code_vocab,
                               const corpus::Vocabulary& ast_vocab, const ModelConfig& cfg) {
  return make_inputs(pair.code_cells, pair.graphs, code_vocab, ast_vocab, cfg);
}

// Decoder input for predicting position p: [START, t_1 .. t_{p-1}] padded
// with PAD to doc_len.
inline std::vector<int> make_prefix(const std::vector<int>& generated, std::size_t doc_len) {
  if (generated.size() + 1 > doc_len) throw InvalidInput("prefix longer than doc_len");
  std::vector<int> p(doc_len, corpus::Vocabulary::kPad);
  p[0] = corpus::Vocabulary::kStart;
  for (std::size_t i = 0; i < generated.size(); ++i) p[i + 1] = generated[i];
  return p;
}

}  // namespace nbdoc::model
