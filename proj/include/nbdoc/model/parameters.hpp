#pragma once

#include <cmath>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "nbdoc/errors.hpp"
#include "nbdoc/model/config.hpp"
#include "nbdoc/numerics/autodiff.hpp"
#include "nbdoc/util/rng.hpp"

namespace nbdoc::model {

// Named tensors in creation order. Addresses are stable.
class ModelParameters {
 public:
  num::Parameter& add(const std::string& name, num::Tensor value) {
    if (index_.count(name)) throw InvalidInput("duplicate parameter name '" + name + "'");
    index_.emplace(name, params_.size());
    params_.emplace_back(name, std::move(value));
    return params_.back();
  }

  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  std::size_t index_of(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw InvalidInput("no parameter named '" + name + "'");
    return it->second;
  }
  num::Parameter& at(const std::string& name) { return params_[index_of(name)]; }
  const num::Parameter& at(const std::string& name) const { return params_[index_of(name)]; }
  num::Parameter& operator[](std::size_t i) { return params_[i]; }
  const num::Parameter& operator[](std::size_t i) const { return params_[i]; }

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  std::vector<num::Parameter*> pointers() {
    std::vector<num::Parameter*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  // Rounds every value to the nearest float, matching what a checkpoint
  // stores.
  void round_to_float() {
    for (auto& p : params_) {
      for (auto& v : p.value.values()) v = static_cast<double>(static_cast<float>(v));
    }
  }

  bool all_finite() const {
    for (const auto& p : params_) {
      if (!p.value.all_finite()) return false;
    }
    return true;
  }

  // Copy with the same names and values (gradients reset).
  ModelParameters clone() const {
    ModelParameters c;
    for (const auto& p : params_) c.add(p.name, p.value);
    return c;
  }

 private:
  std::deque<num::Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline std::string ast_stack_name(std::size_t k) { return "ast" + std::to_string(k); }

// Expected (name, shape) list for a configuration, in creation order.
inline std::vector<std::pair<std::string, num::Shape>> parameter_layout(const ModelConfig& c) {
  std::vector<std::pair<std::string, num::Shape>> out;
  auto gru = [&](const std::string& prefix, std::size_t din) {
    out.push_back({prefix + ".W", {din, 3 * c.hidden}});
    out.push_back({prefix + ".U", {c.hidden, 3 * c.hidden}});
    out.push_back({prefix + ".b", {1, 3 * c.hidden}});
  };
  out.push_back({"emb.code", {c.code_vocab, c.emb_dim}});
  out.push_back({"emb.ast", {c.ast_vocab, c.emb_dim}});
  out.push_back({"emb.doc", {c.doc_vocab, c.emb_dim}});
  gru("code_gru", c.emb_dim);
  for (std::size_t k = 0; k < c.n_ast_stacks(); ++k) {
    const auto s = ast_stack_name(k);
    for (std::size_t hop = 0; hop < c.hops; ++hop) {
      out.push_back({s + ".gcn" + std::to_string(hop), {hop == 0 ? c.emb_dim : c.hidden, c.hidden}});
    }
    gru(s + ".gru", c.hidden);
  }
  if (c.uses_high_level()) gru("high_gru", c.hidden);
  gru("dec_gru", c.emb_dim);
  out.push_back({"proj.W", {c.context_width(), c.proj_dim}});
  out.push_back({"proj.b", {1, c.proj_dim}});
  out.push_back({"out.W", {c.doc_len * c.proj_dim, c.doc_vocab}});
  out.push_back({"out.b", {1, c.doc_vocab}});
  return out;
}

// Glorot-uniform matrices, small uniform embeddings, zero biases.
inline ModelParameters init_parameters(const ModelConfig& c, std::uint64_t seed) {
  c.validate();
  util::Rng rng(seed);
  ModelParameters p;
  for (const auto& [name, shape] : parameter_layout(c)) {
    num::Tensor t(shape);
    const bool bias = name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0;
    if (!bias) {
      const double limit = name.rfind("emb.", 0) == 0 ? 0.1 : std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
      for (auto& v : t.values()) v = rng.uniform(-limit, limit);
    }
    p.add(name, std::move(t));
  }
  return p;
}

}  // namespace nbdoc::model
