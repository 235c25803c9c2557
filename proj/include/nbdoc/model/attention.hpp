#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "nbdoc/numerics/autodiff.hpp"

namespace nbdoc::model {

// D K^T / sqrt(d)
inline num::Var scaled_scores(num::Var d, num::Var keys) {
  if (d.cols() != keys.cols()) throw ShapeError("attention: query and key widths differ");
  return num::scale(num::matmul_nt(d, keys), 1.0 / std::sqrt(static_cast<double>(d.cols())));
}

// Per decoder row, softmax over the four cell summaries; masked cells get 0.
inline num::Var high_level_attention(num::Var d, num::Var summaries, const num::Mask& cell_mask) {
  return num::masked_softmax_rows(scaled_scores(d, summaries), &cell_mask);
}

// Same computation over the node states of one cell.
inline num::Var low_level_attention(num::Var d, num::Var nodes, const num::Mask& node_mask) {
  return num::masked_softmax_rows(scaled_scores(d, nodes), &node_mask);
}

// O = sum_i alpha[:, i] * (beta_i G_i). Cells whose beta is absent (masked)
// are skipped.
inline num::Var fuse(num::Var alpha, const std::vector<num::Var>& betas, const std::vector<num::Var>& nodes,
                     const std::vector<std::size_t>& cells) {
  if (betas.size() != nodes.size() || betas.size() != cells.size()) throw ShapeError("fuse: argument counts differ");
  const std::size_t width = nodes.empty() ? 0 : nodes.front().cols();
  if (betas.empty()) throw ShapeError("fuse needs at least one cell");
  num::Var out;
  for (std::size_t k = 0; k < betas.size(); ++k) {
    if (nodes[k].cols() != width) throw ShapeError("fuse: node widths differ");
    const auto ctx = num::matmul(betas[k], nodes[k]);
    const auto term = num::scale_rows_by_col(ctx, num::slice_cols(alpha, cells[k], cells[k] + 1));
    out = k == 0 ? term : num::add(out, term);
  }
  return out;
}

struct CodeAttention {
  num::Var weights;  // [rows x positions]
  num::Var context;  // [rows x hidden]
};

// Unscaled dot-product attention over the code positions.
inline CodeAttention uniform_code_attention(num::Var d, num::Var code_states, const num::Mask& mask) {
  auto w = num::masked_softmax_rows(num::matmul_nt(d, code_states), &mask);
  return {w, num::matmul(w, code_states)};
}

}  // namespace nbdoc::model
