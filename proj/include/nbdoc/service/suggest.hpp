#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nbdoc/corpus/pairs.hpp"
#include "nbdoc/errors.hpp"
#include "nbdoc/eval/evaluate.hpp"
#include "nbdoc/model/checkpoint.hpp"
#include "nbdoc/model/prepared.hpp"

namespace nbdoc::service {

inline constexpr std::size_t kMaxCells = 4;
inline constexpr std::size_t kMaxCellBytes = 20000;
inline constexpr std::size_t kDefaultCandidates = 3;

// A rejected request and the HTTP status to answer with.
class RequestError : public InvalidInput {
 public:
  RequestError(int s, const std::string& what) : InvalidInput(what), status(s) {}
  int status;
};

struct SuggestRequest {
  std::vector<std::string> cells;
  std::size_t max_candidates = kDefaultCandidates;
};

inline SuggestRequest parse_suggest_request(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw RequestError(400, std::string("request is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw RequestError(400, "request must be a JSON object");
  SuggestRequest r;
  if (!j.contains("cells") || !j["cells"].is_array()) throw RequestError(400, "'cells' must be a list of strings");
  for (const auto& c : j["cells"]) {
    if (!c.is_string()) throw RequestError(400, "'cells' must be a list of strings");
    r.cells.push_back(c.get<std::string>());
  }
  if (j.contains("max_candidates")) {
    const auto& m = j["max_candidates"];
    if (!m.is_number_integer() || m.get<long long>() < 1) {
      throw RequestError(400, "'max_candidates' must be a positive integer");
    }
    r.max_candidates = m.get<std::size_t>();
  }
  if (r.cells.size() > kMaxCells) throw RequestError(400, "at most 4 cells are accepted");
  bool any = false;
  for (const auto& c : r.cells) {
    if (c.size() > kMaxCellBytes) throw RequestError(400, "a cell exceeds 20000 bytes");
    any = any || !corpus::detail::trim(c).empty();
  }
  if (!any) throw RequestError(400, "request has no non-empty cell");
  return r;
}

// JSON schema of a /suggest response.
inline const nlohmann::json& suggest_response_schema() {
  static const nlohmann::json s = nlohmann::json::parse(R"({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "SuggestResponse",
  "type": "object",
  "required": ["candidates", "model_version"],
  "additionalProperties": false,
  "properties": {
    "model_version": {"type": "string", "pattern": "^[0-9a-f]{16}$"},
    "candidates": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["text", "kind", "score"],
        "additionalProperties": false,
        "properties": {
          "text": {"type": "string"},
          "kind": {"enum": ["generated", "retrieved_stub", "prompt_stub"]},
          "score": {"type": "number", "minimum": 0, "maximum": 1},
          "attention": {
            "type": "object",
            "required": ["cells", "steps", "matrix"],
            "properties": {
              "cells": {"type": "array", "minItems": 4, "maxItems": 4,
                        "items": {"type": "array", "items": {"type": "string"}}},
              "steps": {"type": "integer", "minimum": 0},
              "matrix": {"type": "array", "minItems": 4, "maxItems": 4,
                         "items": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}}},
              "alpha": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
            }
          }
        }
      }
    }
  }
})");
  return s;
}

// Read-only inference over one checkpoint; safe to share across threads.
class SuggestEngine {
 public:
  explicit SuggestEngine(model::Checkpoint ck) : ck_(std::move(ck)) {}

  const std::string& model_version() const { return ck_.version; }
  const model::Checkpoint& checkpoint() const { return ck_; }

  nlohmann::ordered_json suggest(const SuggestRequest& req) const {
    const auto pair = corpus::make_pair("request", {}, req.cells);
    const auto prepared = model::prepare_pair(pair, ck_.vocabs, ck_.model.config());
    const auto dec = model::greedy_decode(ck_.model, prepared.inputs);
    std::string text;
    for (const auto& t : model::detokenize(dec.ids, ck_.vocabs.doc)) text += (text.empty() ? "" : " ") + t;

    auto cands = nlohmann::ordered_json::array();
    nlohmann::ordered_json gen{{"text", text}, {"kind", "generated"}, {"score", dec.mean_prob()}};
    gen["attention"] = eval::export_attention(dec.trace, prepared.inputs, pair.code_cells);
    cands.push_back(std::move(gen));
    cands.push_back({{"text", "Similar documentation from other notebooks is not available."},
                     {"kind", "retrieved_stub"},
                     {"score", 0.0}});
    cands.push_back({{"text", "Describe what this code does."}, {"kind", "prompt_stub"}, {"score", 0.0}});
    std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
      return a["score"].template get<double>() > b["score"].template get<double>();
    });
    return {{"candidates", std::move(cands)}, {"model_version", ck_.version}};
  }

 private:
  model::Checkpoint ck_;
};

}  // namespace nbdoc::service
