#pragma once

#include <array>
#include <string>
#include <vector>

#include "nbdoc/corpus/pairs.hpp"
#include "nbdoc/model/checkpoint.hpp"
#include "nbdoc/model/inputs.hpp"

namespace nbdoc::model {

// A pair encoded against a model's vocabularies and length limits.
struct PreparedPair {
  std::string id;
  ModelInputs inputs;
  std::vector<int> doc_ids;     // target ids, cut to doc_len - 1
  corpus::Tokens reference;     // documentation tokens as extracted
  std::array<corpus::Tokens, kCells> code_cells;
};

inline PreparedPair prepare_pair(const corpus::CodeDocPair& p, const Vocabularies& v, const ModelConfig& cfg) {
  PreparedPair out;
  out.id = p.id;
  out.inputs = make_inputs(p, v.code, v.ast, cfg);
  out.doc_ids = v.doc.encode(p.doc_tokens);
  if (out.doc_ids.size() > cfg.doc_len - 1) out.doc_ids.resize(cfg.doc_len - 1);
  out.reference = p.doc_tokens;
  out.code_cells = p.code_cells;
  return out;
}

inline std::vector<PreparedPair> prepare_pairs(const std::vector<corpus::CodeDocPair>& pairs, const Vocabularies& v,
                                               const ModelConfig& cfg) {
  std::vector<PreparedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(prepare_pair(p, v, cfg));
  return out;
}

struct VocabSizes {
  std::size_t code = 20000, ast = 20000, doc = 13000;
};

// Builds the three vocabularies from a (training) corpus. Code tokens of all
// cells form one sequence per pair, as do AST node tokens.
inline Vocabularies build_vocabularies(const std::vector<corpus::CodeDocPair>& pairs, const VocabSizes& sizes) {
  std::vector<corpus::Tokens> code, ast, doc;
  for (const auto& p : pairs) {
    corpus::Tokens c, a;
    for (std::size_t i = 0; i < kCells; ++i) {
      c.insert(c.end(), p.code_cells[i].begin(), p.code_cells[i].end());
      a.insert(a.end(), p.graphs[i].node_tokens.begin(), p.graphs[i].node_tokens.end());
    }
    code.push_back(std::move(c));
    ast.push_back(std::move(a));
    doc.push_back(p.doc_tokens);
  }
  return {corpus::build_vocab(code, sizes.code), corpus::build_vocab(ast, sizes.ast),
          corpus::build_vocab(doc, sizes.doc)};
}

// Copy of `cfg` with vocabulary sizes taken from `v`.
inline ModelConfig with_vocab_sizes(ModelConfig cfg, const Vocabularies& v) {
  cfg.code_vocab = v.code.size();
  cfg.ast_vocab = v.ast.size();
  cfg.doc_vocab = v.doc.size();
  return cfg;
}

// Maps ids back to tokens, dropping specials.
inline corpus::Tokens detokenize(const std::vector<int>& ids, const corpus::Vocabulary& doc) {
  corpus::Tokens out;
  for (int id : ids) {
    if (id < static_cast<int>(corpus::Vocabulary::kNumSpecials) && id != corpus::Vocabulary::kUnk) continue;
    out.push_back(doc.token(id));
  }
  return out;
}

}  // namespace nbdoc::model
