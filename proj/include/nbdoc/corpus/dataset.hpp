#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nbdoc/corpus/pairs.hpp"
#include "nbdoc/errors.hpp"

namespace nbdoc::corpus {

inline nlohmann::ordered_json pair_to_json(const CodeDocPair& p) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  j["doc_tokens"] = p.doc_tokens;
  j["code_cells"] = nlohmann::ordered_json::array();
  for (const auto& c : p.code_cells) j["code_cells"].push_back(c);
  j["n_real_cells"] = p.n_real_cells;
  j["ast_nodes"] = nlohmann::ordered_json::array();
  j["ast_edges"] = nlohmann::ordered_json::array();
  for (const auto& g : p.graphs) {
    j["ast_nodes"].push_back(g.node_tokens);
    auto edges = nlohmann::ordered_json::array();
    for (auto [a, b] : g.edges) edges.push_back({a, b});
    j["ast_edges"].push_back(std::move(edges));
  }
  return j;
}

inline CodeDocPair pair_from_json(const nlohmann::json& j) {
  try {
    CodeDocPair p;
    p.id = j.at("id").get<std::string>();
    p.doc_tokens = j.at("doc_tokens").get<Tokens>();
    const auto& cells = j.at("code_cells");
    const auto& nodes = j.at("ast_nodes");
    const auto& edges = j.at("ast_edges");
    if (cells.size() != kCellsPerPair || nodes.size() != kCellsPerPair || edges.size() != kCellsPerPair) {
      throw ParseError("pair '" + p.id + "' must have exactly 4 cell slots");
    }
    p.n_real_cells = j.at("n_real_cells").get<std::size_t>();
    if (p.n_real_cells < 1 || p.n_real_cells > kCellsPerPair) {
      throw ParseError("pair '" + p.id + "' has n_real_cells outside 1..4");
    }
    for (std::size_t i = 0; i < kCellsPerPair; ++i) {
      p.code_cells[i] = cells[i].get<Tokens>();
      p.graphs[i].node_tokens = nodes[i].get<std::vector<std::string>>();
      for (const auto& e : edges[i]) p.graphs[i].edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
      if (!ast::is_tree(p.graphs[i])) throw ParseError("pair '" + p.id + "' has a malformed AST graph");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed pair record: ") + e.what());
  }
}

inline void write_jsonl(std::ostream& os, const std::vector<CodeDocPair>& pairs) {
  for (const auto& p : pairs) os << pair_to_json(p).dump() << '\n';
}

inline std::vector<CodeDocPair> read_jsonl(std::istream& is) {
  std::vector<CodeDocPair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(pair_from_json(j));
  }
  return out;
}

}  // namespace nbdoc::corpus
