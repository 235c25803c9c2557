#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "nbdoc/errors.hpp"

namespace nbdoc::model {

enum class Ablation { full, no_high_with_uniform, no_high_no_uniform, flat_gnn };

inline std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::no_high_with_uniform: return "no_high_with_uniform";
    case Ablation::no_high_no_uniform: return "no_high_no_uniform";
    case Ablation::flat_gnn: return "flat_gnn";
  }
  return "full";
}

inline Ablation ablation_from_string(std::string_view s) {
  for (auto a : {Ablation::full, Ablation::no_high_with_uniform, Ablation::no_high_no_uniform, Ablation::flat_gnn}) {
    if (to_string(a) == s) return a;
  }
  throw InvalidInput("unknown ablation '" + std::string(s) + "'");
}

struct ModelConfig {
  std::size_t emb_dim = 100;
  std::size_t hidden = 256;
  std::size_t proj_dim = 256;
  std::size_t hops = 2;
  std::size_t code_len = 400;
  std::size_t doc_len = 50;
  std::size_t ast_len = 500;
  std::size_t n_cells = 4;
  std::size_t code_vocab = 0;
  std::size_t ast_vocab = 0;
  std::size_t doc_vocab = 0;
  double dropout = 0.5;
  Ablation ablation = Ablation::full;
  bool share_ast_encoders = false;

  bool uses_high_level() const { return ablation == Ablation::full; }
  bool uses_code_attention() const { return ablation != Ablation::no_high_no_uniform; }
  bool flat() const { return ablation == Ablation::flat_gnn; }
  std::size_t n_ast_stacks() const { return flat() || share_ast_encoders ? 1 : n_cells; }
  std::size_t context_width() const { return (uses_code_attention() ? 3 : 2) * hidden; }

  void validate() const {
    auto positive = [](std::size_t v, const char* name) {
      if (v == 0) throw InvalidInput(std::string("model config: ") + name + " must be positive");
    };
    positive(emb_dim, "emb_dim");
    positive(hidden, "hidden");
    positive(proj_dim, "proj_dim");
    positive(hops, "hops");
    positive(code_len, "code_len");
    positive(ast_len, "ast_len");
    positive(code_vocab, "code_vocab");
    positive(ast_vocab, "ast_vocab");
    if (doc_len < 2) throw InvalidInput("model config: doc_len must be at least 2");
    if (doc_vocab < 5) throw InvalidInput("model config: doc_vocab must be at least 5");
    if (n_cells != 4) throw InvalidInput("model config: n_cells must be 4");
    if (dropout < 0.0 || dropout >= 1.0) throw InvalidInput("model config: dropout must be in [0, 1)");
  }

  nlohmann::ordered_json to_json() const {
    return {{"emb_dim", emb_dim},       {"hidden", hidden},       {"proj_dim", proj_dim},
            {"hops", hops},             {"code_len", code_len},   {"doc_len", doc_len},
            {"ast_len", ast_len},       {"n_cells", n_cells},     {"code_vocab", code_vocab},
            {"ast_vocab", ast_vocab},   {"doc_vocab", doc_vocab}, {"dropout", dropout},
            {"ablation", to_string(ablation)}, {"share_ast_encoders", share_ast_encoders}};
  }

  // Missing keys keep their current value; unknown keys are rejected.
  void update_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidInput("model config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& k = it.key();
      const auto& v = it.value();
      try {
        if (k == "emb_dim") emb_dim = v.get<std::size_t>();
        else if (k == "hidden") hidden = v.get<std::size_t>();
        else if (k == "proj_dim") proj_dim = v.get<std::size_t>();
        else if (k == "hops") hops = v.get<std::size_t>();
        else if (k == "code_len") code_len = v.get<std::size_t>();
        else if (k == "doc_len") doc_len = v.get<std::size_t>();
        else if (k == "ast_len") ast_len = v.get<std::size_t>();
        else if (k == "n_cells") n_cells = v.get<std::size_t>();
        else if (k == "code_vocab") code_vocab = v.get<std::size_t>();
        else if (k == "ast_vocab") ast_vocab = v.get<std::size_t>();
        else if (k == "doc_vocab") doc_vocab = v.get<std::size_t>();
        else if (k == "dropout") dropout = v.get<double>();
        else if (k == "ablation") ablation = ablation_from_string(v.get<std::string>());
        else if (k == "share_ast_encoders") share_ast_encoders = v.get<bool>();
        else throw InvalidInput("unknown model config key '" + k + "'");
      } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("model config key '" + k + "': " + e.what());
      }
    }
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.update_from_json(j);
    return c;
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace nbdoc::model
