#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nbdoc/corpus/vocab.hpp"
#include "nbdoc/model/attention.hpp"
#include "nbdoc/model/config.hpp"
#include "nbdoc/model/inputs.hpp"
#include "nbdoc/model/parameters.hpp"
#include "nbdoc/numerics/gru.hpp"

namespace nbdoc::model {

// Encoder outputs for one pair.
struct Encoded {
  num::Var code_states;  // [code_len x hidden], rows past the real tokens are zero
  num::Mask code_mask;
  // Graph encodings, one per real cell in cell order (flat_gnn: a single
  // entry for the union graph).
  std::vector<std::size_t> cells;
  std::vector<num::Var> node_states;  // [ast_len x hidden] each (flat: [4*ast_len x hidden])
  std::vector<num::Mask> node_masks;
  std::vector<std::size_t> node_counts;  // real nodes per entry
  num::Var summaries;                    // [4 x hidden], full wiring only
  num::Mask cell_mask;
};

// Decoder outputs for a stack of S prefixes; attention rows are ordered
// prefix-major (row s*doc_len + p).
struct DecodeOutputs {
  num::Var logits;  // [S x doc_vocab]
  num::Var alpha;   // [S*doc_len x 4]; absent for flat_gnn
  std::vector<num::Var> betas;
  num::Var code_weights;  // absent when the code path is disabled
};

class Model {
 public:
  Model(ModelConfig cfg, ModelParameters params) : cfg_(std::move(cfg)), params_(std::move(params)) {
    cfg_.validate();
    const auto layout = parameter_layout(cfg_);
    if (layout.size() != params_.size()) {
      throw IncompatibleCheckpoint("expected " + std::to_string(layout.size()) + " parameters, got " +
                                   std::to_string(params_.size()));
    }
    for (const auto& [name, shape] : layout) {
      if (!params_.contains(name)) throw IncompatibleCheckpoint("missing parameter '" + name + "'");
      if (params_.at(name).value.shape() != shape) {
        throw IncompatibleCheckpoint("parameter '" + name + "' has shape " +
                                     num::shape_string(params_.at(name).value.shape()) + ", expected " +
                                     num::shape_string(shape));
      }
    }
    resolve();
  }

  static Model init(const ModelConfig& cfg, std::uint64_t seed) { return Model(cfg, init_parameters(cfg, seed)); }

  Model(const Model& o) : Model(o.cfg_, o.params_.clone()) {}
  Model& operator=(const Model& o) {
    if (this != &o) *this = Model(o);
    return *this;
  }
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return cfg_; }
  ModelParameters& params() { return params_; }
  const ModelParameters& params() const { return params_; }

  // Parameter handles on one tape.
  struct Bound {
    num::Tape* tape;
    std::vector<num::Var> v;
    num::Var operator[](std::size_t i) const { return v[i]; }
  };

  Bound bind(num::Tape& t) {
    Bound b{&t, {}};
    for (std::size_t i = 0; i < params_.size(); ++i) b.v.push_back(t.param(params_[i]));
    return b;
  }
  Bound bind(num::Tape& t) const {
    Bound b{&t, {}};
    for (std::size_t i = 0; i < params_.size(); ++i) b.v.push_back(t.param(params_[i]));
    return b;
  }

  Encoded encode(const Bound& b, const ModelInputs& in) const {
    num::Tape& t = *b.tape;
    const std::size_t h = cfg_.hidden;
    Encoded e;

    // code sequence
    const std::size_t n = std::min(in.code_ids.size(), cfg_.code_len);
    e.code_mask.assign(cfg_.code_len, 0);
    if (n > 0) {
      std::vector<int> ids(in.code_ids.begin(), in.code_ids.begin() + static_cast<std::ptrdiff_t>(n));
      const auto x = num::gather_rows(b[idx_.emb_code], ids);
      const auto states = num::gru_sequence(x, num::zeros(t, 1, h), gru(b, idx_.code_gru));
      e.code_states = pad_rows(states, cfg_.code_len);
      std::fill(e.code_mask.begin(), e.code_mask.begin() + static_cast<std::ptrdiff_t>(n), 1);
    } else {
      e.code_states = num::zeros(t, cfg_.code_len, h);
    }

    e.cell_mask.assign(kCells, 0);
    for (std::size_t i = 0; i < kCells; ++i) e.cell_mask[i] = in.cell_mask[i] && !in.node_ids[i].empty();

    if (cfg_.flat()) {
      encode_flat(b, in, e);
      return e;
    }

    std::vector<num::Var> finals;
    for (std::size_t i = 0; i < kCells; ++i) {
      if (!e.cell_mask[i]) continue;
      const auto& st = idx_.ast[cfg_.share_ast_encoders ? 0 : i];
      auto hcur = num::gather_rows(b[idx_.emb_ast], in.node_ids[i]);
      const auto a = t.constant(in.a_hat[i]);
      for (std::size_t hop = 0; hop < cfg_.hops; ++hop) hcur = num::gcn_hop(hcur, a, b[st.gcn[hop]]);
      const auto g = num::gru_sequence(hcur, num::zeros(t, 1, h), gru(b, st.gru));
      const std::size_t m = in.node_ids[i].size();
      finals.push_back(num::slice_rows(g, m - 1, m));
      e.cells.push_back(i);
      e.node_states.push_back(pad_rows(g, cfg_.ast_len));
      num::Mask mask(cfg_.ast_len, 0);
      std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(m), 1);
      e.node_masks.push_back(std::move(mask));
      e.node_counts.push_back(m);
    }

    if (cfg_.uses_high_level()) {
      std::vector<num::Var> rows;
      if (!finals.empty()) {
        const auto s = num::gru_sequence(num::concat_rows(finals), num::zeros(t, 1, h), gru(b, idx_.high_gru));
        std::size_t k = 0;
        for (std::size_t i = 0; i < kCells; ++i) {
          rows.push_back(e.cell_mask[i] ? num::slice_rows(s, k, k + 1) : num::zeros(t, 1, h));
          k += e.cell_mask[i];
        }
        e.summaries = num::concat_rows(rows);
      } else {
        e.summaries = num::zeros(t, kCells, h);
      }
    }
    return e;
  }

  DecodeOutputs decode(const Bound& b, const Encoded& e, const std::vector<std::vector<int>>& prefixes,
                       bool training = false, util::Rng* rng = nullptr) const {
    num::Tape& t = *b.tape;
    const std::size_t L = cfg_.doc_len, h = cfg_.hidden, S = prefixes.size();
    if (S == 0) throw InvalidInput("decode needs at least one prefix");
    if (training && cfg_.dropout > 0 && !rng) throw InvalidInput("training decode needs an rng for dropout");
    std::vector<int> ids;
    for (const auto& p : prefixes) {
      if (p.size() != L) throw ShapeError("prefix length must equal doc_len");
      ids.insert(ids.end(), p.begin(), p.end());
    }
    const auto emb = num::gather_rows(b[idx_.emb_doc], ids);
    std::vector<num::Var> ds;
    for (std::size_t s = 0; s < S; ++s) {
      ds.push_back(num::gru_sequence(num::slice_rows(emb, s * L, (s + 1) * L), num::zeros(t, 1, h),
                                     gru(b, idx_.dec_gru)));
    }
    const auto d = S == 1 ? ds.front() : num::concat_rows(ds);

    DecodeOutputs out;
    num::Var o;
    if (e.node_states.empty()) {
      o = num::zeros(t, S * L, h);
      if (!cfg_.flat()) out.alpha = num::zeros(t, S * L, kCells);
    } else if (cfg_.flat()) {
      const auto beta = low_level_attention(d, e.node_states[0], e.node_masks[0]);
      out.betas.push_back(beta);
      o = num::matmul(beta, e.node_states[0]);
    } else {
      if (cfg_.uses_high_level()) {
        out.alpha = high_level_attention(d, e.summaries, e.cell_mask);
      } else {
        num::Tensor uniform(S * L, kCells);
        const double w = 1.0 / static_cast<double>(e.cells.size());
        for (std::size_t r = 0; r < S * L; ++r) {
          for (std::size_t i : e.cells) uniform(r, i) = w;
        }
        out.alpha = t.constant(std::move(uniform));
      }
      for (std::size_t k = 0; k < e.cells.size(); ++k) {
        out.betas.push_back(low_level_attention(d, e.node_states[k], e.node_masks[k]));
      }
      o = fuse(out.alpha, out.betas, e.node_states, e.cells);
    }

    std::vector<num::Var> parts{d};
    if (cfg_.uses_code_attention()) {
      const auto ca = uniform_code_attention(d, e.code_states, e.code_mask);
      out.code_weights = ca.weights;
      parts.push_back(maybe_dropout(ca.context, training, rng));
    }
    parts.push_back(maybe_dropout(o, training, rng));
    const auto merged = num::concat_cols(parts);
    const auto proj = num::add_row(num::matmul(merged, b[idx_.proj_w]), b[idx_.proj_b]);
    const auto flat = num::reshape(proj, S, L * cfg_.proj_dim);
    out.logits = num::add_row(num::matmul(flat, b[idx_.out_w]), b[idx_.out_b]);
    return out;
  }

 private:
  struct GruIdx {
    std::size_t w, u, b;
  };
  struct StackIdx {
    std::vector<std::size_t> gcn;
    GruIdx gru;
  };
  struct Indices {
    std::size_t emb_code, emb_ast, emb_doc;
    GruIdx code_gru, high_gru, dec_gru;
    std::vector<StackIdx> ast;
    std::size_t proj_w, proj_b, out_w, out_b;
  };

  GruIdx gru_idx(const std::string& prefix) const {
    return {params_.index_of(prefix + ".W"), params_.index_of(prefix + ".U"), params_.index_of(prefix + ".b")};
  }

  void resolve() {
    idx_.emb_code = params_.index_of("emb.code");
    idx_.emb_ast = params_.index_of("emb.ast");
    idx_.emb_doc = params_.index_of("emb.doc");
    idx_.code_gru = gru_idx("code_gru");
    idx_.dec_gru = gru_idx("dec_gru");
    if (cfg_.uses_high_level()) idx_.high_gru = gru_idx("high_gru");
    idx_.ast.clear();
    for (std::size_t k = 0; k < cfg_.n_ast_stacks(); ++k) {
      StackIdx s;
      for (std::size_t hop = 0; hop < cfg_.hops; ++hop) {
        s.gcn.push_back(params_.index_of(ast_stack_name(k) + ".gcn" + std::to_string(hop)));
      }
      s.gru = gru_idx(ast_stack_name(k) + ".gru");
      idx_.ast.push_back(std::move(s));
    }
    idx_.proj_w = params_.index_of("proj.W");
    idx_.proj_b = params_.index_of("proj.b");
    idx_.out_w = params_.index_of("out.W");
    idx_.out_b = params_.index_of("out.b");
  }

  static num::GruWeights gru(const Bound& b, const GruIdx& g) { return {b[g.w], b[g.u], b[g.b]}; }

  static num::Var pad_rows(num::Var x, std::size_t rows) {
    if (x.rows() >= rows) return x;
    return num::concat_rows({x, num::zeros(*x.tape, rows - x.rows(), x.cols())});
  }

  num::Var maybe_dropout(num::Var x, bool training, util::Rng* rng) const {
    if (!training || cfg_.dropout == 0.0) return x;
    return num::dropout(x, cfg_.dropout, true, *rng);
  }

  // Disjoint union of the real cells' graphs through one GCN + GRU stack.
  // The adjacency is block diagonal, so each hop is applied per block.
  void encode_flat(const Bound& b, const ModelInputs& in, Encoded& e) const {
    num::Tape& t = *b.tape;
    const auto& st = idx_.ast[0];
    std::vector<num::Var> blocks;
    std::vector<num::Var> adj;
    std::size_t total = 0;
    for (std::size_t i = 0; i < kCells; ++i) {
      if (!e.cell_mask[i]) continue;
      blocks.push_back(num::gather_rows(b[idx_.emb_ast], in.node_ids[i]));
      adj.push_back(t.constant(in.a_hat[i]));
      total += in.node_ids[i].size();
      e.node_counts.push_back(in.node_ids[i].size());
    }
    if (blocks.empty()) return;
    for (std::size_t hop = 0; hop < cfg_.hops; ++hop) {
      for (std::size_t k = 0; k < blocks.size(); ++k) blocks[k] = num::gcn_hop(blocks[k], adj[k], b[st.gcn[hop]]);
    }
    const auto seq = blocks.size() == 1 ? blocks[0] : num::concat_rows(blocks);
    const auto g = num::gru_sequence(seq, num::zeros(t, 1, cfg_.hidden), gru(b, st.gru));
    e.cells.push_back(0);
    e.node_states.push_back(pad_rows(g, kCells * cfg_.ast_len));
    num::Mask mask(kCells * cfg_.ast_len, 0);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(total), 1);
    e.node_masks.push_back(std::move(mask));
  }

  ModelConfig cfg_;
  ModelParameters params_;
  Indices idx_{};
};

// Logits for the next token after `prefix` (START first, PAD-padded).
inline num::Tensor predict_next(const Model& m, const ModelInputs& in, const std::vector<int>& prefix) {
  num::Tape t(false);
  const auto b = m.bind(t);
  const auto e = m.encode(b, in);
  auto out = m.decode(b, e, {prefix});
  return out.logits.value();
}

struct StepTrace {
  int token = 0;
  double prob = 0;                          // softmax probability of the chosen token
  std::array<double, kCells> alpha{};       // per-cell weight
  std::array<std::vector<double>, kCells> beta;  // per-cell weights over its real nodes
  std::vector<double> token_alignment;      // weights over the real code positions
};

struct AttentionTrace {
  std::vector<StepTrace> steps;
};

struct DecodeResult {
  std::vector<int> ids;  // generated tokens, END excluded
  AttentionTrace trace;

  double mean_prob() const {
    if (trace.steps.empty()) return 0;
    double s = 0;
    for (const auto& st : trace.steps) s += st.prob;
    return s / static_cast<double>(trace.steps.size());
  }
};

// Index of the largest logit, skipping PAD and START; ties go to the
// lowest id.
inline int argmax_token(const num::Tensor& logits, std::size_t row = 0) {
  int best = -1;
  for (std::size_t j = 0; j < logits.cols(); ++j) {
    if (j == static_cast<std::size_t>(corpus::Vocabulary::kPad) ||
        j == static_cast<std::size_t>(corpus::Vocabulary::kStart)) {
      continue;
    }
    if (best < 0 || logits(row, j) > logits(row, static_cast<std::size_t>(best))) best = static_cast<int>(j);
  }
  return best;
}

// Greedy decoding from [START]. Stops at END or after max_tokens generated
// tokens (default and upper bound doc_len - 1, the longest sequence a
// doc_len prefix window can be trained on).
inline DecodeResult greedy_decode(const Model& m, const ModelInputs& in, std::size_t max_tokens = 0) {
  const auto& cfg = m.config();
  const std::size_t cap = cfg.doc_len - 1;
  if (max_tokens == 0 || max_tokens > cap) max_tokens = cap;

  num::Tape t(false);
  const auto b = m.bind(t);
  const auto e = m.encode(b, in);
  const std::size_t n_code = std::min(in.code_ids.size(), cfg.code_len);

  DecodeResult res;
  while (true) {
    const auto out = m.decode(b, e, {make_prefix(res.ids, cfg.doc_len)});
    const auto& logits = out.logits.value();
    StepTrace st;
    st.token = argmax_token(logits);
    st.prob = num::softmax_rows(logits)[static_cast<std::size_t>(st.token)];
    const std::size_t row = res.ids.size();  // last real prefix position

    for (std::size_t k = 0; k < e.cells.size(); ++k) {
      const auto& beta = out.betas[k].value();
      const std::size_t n_nodes = e.node_counts.size() > k && !cfg.flat() ? e.node_counts[k] : 0;
      if (cfg.flat()) {
        std::size_t off = 0, j = 0;
        for (std::size_t i = 0; i < kCells; ++i) {
          if (!e.cell_mask[i]) continue;
          const std::size_t cnt = e.node_counts[j++];
          double mass = 0;
          for (std::size_t q = 0; q < cnt; ++q) {
            st.beta[i].push_back(beta(row, off + q));
            mass += beta(row, off + q);
          }
          st.alpha[i] = mass;
          off += cnt;
        }
      } else {
        const std::size_t i = e.cells[k];
        for (std::size_t q = 0; q < n_nodes; ++q) st.beta[i].push_back(beta(row, q));
      }
    }
    if (!cfg.flat()) {
      for (std::size_t i = 0; i < kCells; ++i) st.alpha[i] = out.alpha.value()(row, i);
    }
    if (out.code_weights.tape) {
      for (std::size_t q = 0; q < n_code; ++q) st.token_alignment.push_back(out.code_weights.value()(row, q));
    }
    res.trace.steps.push_back(std::move(st));
    const int tok = res.trace.steps.back().token;
    if (tok == corpus::Vocabulary::kEnd) break;
    res.ids.push_back(tok);
    if (res.ids.size() >= max_tokens) break;
  }
  return res;
}

}  // namespace nbdoc::model
