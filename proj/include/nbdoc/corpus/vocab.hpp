#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "nbdoc/corpus/tokenize.hpp"
#include "nbdoc/errors.hpp"
#include "nbdoc/util/hash.hpp"

namespace nbdoc::corpus {

// Token <-> id mapping with four reserved ids.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kStart = 2;
  static constexpr int kEnd = 3;
  static constexpr std::size_t kNumSpecials = 4;

  Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

  // Builds from the non-special tokens in id order (ids 4, 5, ...).
  explicit Vocabulary(const std::vector<std::string>& regular_tokens) {
    id_to_token_ = {"<pad>", "<unk>", "<s>", "</s>"};
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
      token_to_id_.emplace(id_to_token_[i], static_cast<int>(i));
    }
    for (const auto& t : regular_tokens) {
      if (!token_to_id_.emplace(t, static_cast<int>(id_to_token_.size())).second) {
        throw InvalidInput("duplicate vocabulary token '" + t + "'");
      }
      id_to_token_.push_back(t);
    }
  }

  std::size_t size() const { return id_to_token_.size(); }

  int id(std::string_view token) const {
    const auto it = token_to_id_.find(std::string(token));
    return it == token_to_id_.end() ? kUnk : it->second;
  }
  bool contains(std::string_view token) const { return token_to_id_.count(std::string(token)) > 0; }

  const std::string& token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
      throw OutOfRange("token id " + std::to_string(id) + " outside vocabulary of size " +
                       std::to_string(size()));
    }
    return id_to_token_[static_cast<std::size_t>(id)];
  }

  std::vector<int> encode(const Tokens& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
  }

  const std::vector<std::string>& tokens() const { return id_to_token_; }

  // FNV-1a over "id\ttoken\n" lines; identifies the mapping, not the file.
  std::string content_hash() const {
    util::Fnv1a64 h;
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
      h.update(std::to_string(i));
      h.update("\t");
      h.update(id_to_token_[i]);
      h.update("\n");
    }
    return util::to_hex(h.digest());
  }

  nlohmann::ordered_json to_json(std::string_view kind, std::size_t max_size) const {
    nlohmann::ordered_json j;
    j["meta"] = {{"kind", kind}, {"size", size()}, {"max_size", max_size}, {"hash", content_hash()},
                 {"specials", {{"pad", kPad}, {"unk", kUnk}, {"start", kStart}, {"end", kEnd}}}};
    nlohmann::ordered_json toks = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) toks[id_to_token_[i]] = i;
    j["tokens"] = std::move(toks);
    return j;
  }

  static Vocabulary from_json(const nlohmann::json& j) {
    if (!j.contains("tokens") || !j["tokens"].is_object()) throw ParseError("vocabulary has no tokens map");
    std::vector<std::string> by_id(j["tokens"].size());
    for (auto it = j["tokens"].begin(); it != j["tokens"].end(); ++it) {
      const auto id = it.value().get<long long>();
      if (id < 0 || static_cast<std::size_t>(id) >= by_id.size() || !by_id[id].empty()) {
        throw ParseError("vocabulary ids are not a dense permutation");
      }
      by_id[static_cast<std::size_t>(id)] = it.key();
    }
    if (by_id.size() < kNumSpecials || by_id[kPad] != "<pad>" || by_id[kUnk] != "<unk>" ||
        by_id[kStart] != "<s>" || by_id[kEnd] != "</s>") {
      throw ParseError("vocabulary special tokens are missing or misplaced");
    }
    Vocabulary v(std::vector<std::string>(by_id.begin() + kNumSpecials, by_id.end()));
    if (j.contains("meta") && j["meta"].contains("hash") &&
        j["meta"]["hash"].get<std::string>() != v.content_hash()) {
      throw ParseError("vocabulary hash does not match its tokens");
    }
    return v;
  }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

// Keeps the (max_size - 4) most frequent tokens; ties broken
// lexicographically so the result is independent of input order.
inline Vocabulary build_vocab(const std::vector<Tokens>& corpus, std::size_t max_size) {
  if (max_size < Vocabulary::kNumSpecials + 1) {
    throw InvalidInput("vocabulary max_size must be at least 5");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& seq : corpus) {
    for (const auto& t : seq) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = std::min(ranked.size(), max_size - Vocabulary::kNumSpecials);
  std::vector<std::string> tokens;
  tokens.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(ranked[i].first);
  return Vocabulary(tokens);
}

}  // namespace nbdoc::corpus
