#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nbdoc/eval/rouge.hpp"
#include "nbdoc/model/model.hpp"
#include "nbdoc/model/prepared.hpp"

namespace nbdoc::eval {

struct CorpusScores {
  RougeScore rouge1, rouge2, rougeL;
  std::size_t pairs = 0;
};

struct PairResult {
  std::string id;
  corpus::Tokens hypothesis;
  RougeScore rouge1, rouge2, rougeL;
};

struct CorpusReport {
  CorpusScores mean;
  std::vector<PairResult> pairs;
};

// Macro average over per-pair scores.
inline CorpusScores average(const std::vector<PairResult>& rs) {
  CorpusScores m;
  m.pairs = rs.size();
  if (rs.empty()) return m;
  auto acc = [](RougeScore& a, const RougeScore& b) {
    a.p += b.p;
    a.r += b.r;
    a.f1 += b.f1;
  };
  for (const auto& r : rs) {
    acc(m.rouge1, r.rouge1);
    acc(m.rouge2, r.rouge2);
    acc(m.rougeL, r.rougeL);
  }
  const double n = static_cast<double>(rs.size());
  for (auto* s : {&m.rouge1, &m.rouge2, &m.rougeL}) {
    s->p /= n;
    s->r /= n;
    s->f1 /= n;
  }
  return m;
}

inline PairResult score_pair(std::string id, corpus::Tokens hyp, const corpus::Tokens& ref) {
  PairResult r;
  r.id = std::move(id);
  r.rouge1 = rouge_n(hyp, ref, 1);
  r.rouge2 = rouge_n(hyp, ref, 2);
  r.rougeL = rouge_l(hyp, ref);
  r.hypothesis = std::move(hyp);
  return r;
}

// Greedy-decodes every pair and scores it against its reference.
inline CorpusReport evaluate_corpus(const model::Model& m, const corpus::Vocabulary& doc_vocab,
                                    const std::vector<model::PreparedPair>& pairs) {
  CorpusReport rep;
  rep.pairs.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto hyp = model::detokenize(model::greedy_decode(m, p.inputs).ids, doc_vocab);
    rep.pairs.push_back(score_pair(p.id, std::move(hyp), p.reference));
  }
  rep.mean = average(rep.pairs);
  return rep;
}

inline nlohmann::ordered_json score_json(const RougeScore& s) {
  return {{"p", s.p * 100}, {"r", s.r * 100}, {"f1", s.f1 * 100}};
}

inline nlohmann::ordered_json scores_json(const CorpusScores& s) {
  return {{"pairs", s.pairs},
          {"rouge1", score_json(s.rouge1)},
          {"rouge2", score_json(s.rouge2)},
          {"rougeL", score_json(s.rougeL)}};
}

// One row per named model; values scaled to percent.
using ReportRows = std::vector<std::pair<std::string, CorpusScores>>;

inline nlohmann::ordered_json report_json(const ReportRows& rows) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& [name, s] : rows) {
    auto j = scores_json(s);
    j["model"] = name;
    out.push_back(std::move(j));
  }
  return out;
}

inline std::string report_table(const ReportRows& rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s | %6s %6s %6s | %6s %6s %6s | %6s %6s %6s\n", "Model", "R1-P", "R1-R",
                "R1-F1", "R2-P", "R2-R", "R2-F1", "RL-P", "RL-R", "RL-F1");
  out += buf;
  out += std::string(std::string(buf).size() - 1, '-') + "\n";
  for (const auto& [name, s] : rows) {
    std::snprintf(buf, sizeof buf, "%-22s | %6.2f %6.2f %6.2f | %6.2f %6.2f %6.2f | %6.2f %6.2f %6.2f\n",
                  name.c_str(), s.rouge1.p * 100, s.rouge1.r * 100, s.rouge1.f1 * 100, s.rouge2.p * 100,
                  s.rouge2.r * 100, s.rouge2.f1 * 100, s.rougeL.p * 100, s.rougeL.r * 100, s.rougeL.f1 * 100);
    out += buf;
  }
  return out;
}

// Heatmap of one decode: rows are cells, columns are that cell's code
// tokens inside the model's code window. Each value is the step average of
// alpha_i times the token alignment renormalized within cell i, so a row
// sums to at most the mean alpha_i. Without code attention the alignment
// is uniform.
inline nlohmann::ordered_json export_attention(const model::AttentionTrace& trace, const model::ModelInputs& in,
                                               const std::array<corpus::Tokens, model::kCells>& code_cells) {
  constexpr std::size_t C = model::kCells;
  std::array<corpus::Tokens, C> labels;
  for (std::size_t q = 0; q < in.code_ids.size(); ++q) {
    const auto i = static_cast<std::size_t>(in.code_cell[q]);
    labels[i].push_back(code_cells[i][in.code_offset[q]]);
  }
  std::size_t k = 0;
  for (const auto& l : labels) k = std::max(k, l.size());
  std::vector<std::vector<double>> matrix(C, std::vector<double>(k, 0.0));
  const std::size_t steps = trace.steps.size();
  for (const auto& st : trace.steps) {
    std::array<double, C> mass{};
    std::vector<double> a(in.code_ids.size(), 1.0);
    if (st.token_alignment.size() == in.code_ids.size()) a = st.token_alignment;
    for (std::size_t q = 0; q < a.size(); ++q) mass[static_cast<std::size_t>(in.code_cell[q])] += a[q];
    for (std::size_t q = 0; q < a.size(); ++q) {
      const auto i = static_cast<std::size_t>(in.code_cell[q]);
      if (!in.cell_mask[i] || mass[i] <= 0) continue;
      matrix[i][in.code_offset[q]] += st.alpha[i] * a[q] / mass[i] / static_cast<double>(steps);
    }
  }
  nlohmann::ordered_json alpha = nlohmann::ordered_json::array();
  for (const auto& st : trace.steps) alpha.push_back(st.alpha);
  return {{"cells", labels}, {"steps", steps}, {"matrix", matrix}, {"alpha", alpha}};
}

}  // namespace nbdoc::eval
