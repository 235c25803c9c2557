#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "nbdoc/corpus/tokenize.hpp"
#include "nbdoc/errors.hpp"

namespace nbdoc::eval {

struct RougeScore {
  double p = 0, r = 0, f1 = 0;
};

inline RougeScore make_score(double overlap, double hyp_count, double ref_count) {
  RougeScore s;
  if (hyp_count <= 0 || ref_count <= 0) return s;
  s.p = overlap / hyp_count;
  s.r = overlap / ref_count;
  s.f1 = s.p + s.r > 0 ? 2 * s.p * s.r / (s.p + s.r) : 0.0;
  return s;
}

inline std::map<std::vector<std::string>, std::size_t> ngram_counts(const corpus::Tokens& t, std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> c;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++c[std::vector<std::string>(t.begin() + i, t.begin() + i + n)];
  return c;
}

// Clipped n-gram overlap.
inline RougeScore rouge_n(const corpus::Tokens& hyp, const corpus::Tokens& ref, std::size_t n) {
  if (n < 1) throw InvalidInput("rouge_n needs n >= 1");
  const auto h = ngram_counts(hyp, n), r = ngram_counts(ref, n);
  std::size_t overlap = 0, nh = 0, nr = 0;
  for (const auto& [g, c] : h) {
    nh += c;
    const auto it = r.find(g);
    if (it != r.end()) overlap += std::min(c, it->second);
  }
  for (const auto& [g, c] : r) nr += c;
  return make_score(static_cast<double>(overlap), static_cast<double>(nh), static_cast<double>(nr));
}

inline std::size_t lcs_length(const corpus::Tokens& a, const corpus::Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline RougeScore rouge_l(const corpus::Tokens& hyp, const corpus::Tokens& ref) {
  return make_score(static_cast<double>(lcs_length(hyp, ref)), static_cast<double>(hyp.size()),
                    static_cast<double>(ref.size()));
}

}  // namespace nbdoc::eval
