#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "nbdoc/corpus/vocab.hpp"
#include "nbdoc/errors.hpp"
#include "nbdoc/model/model.hpp"
#include "nbdoc/util/hash.hpp"

namespace nbdoc::model {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

// File layout (all integers little-endian):
//   "NBDOCCK1" | u64 header_len | header JSON | u64 n_tensors |
//   n x (u32 name_len | name | u32 rank | rank x u64 dim | float32 data) |
//   u64 FNV-1a of every preceding byte
inline constexpr std::string_view kCheckpointMagic = "NBDOCCK1";
inline constexpr int kCheckpointFormat = 1;

struct Vocabularies {
  corpus::Vocabulary code, ast, doc;
};

struct Checkpoint {
  Model model;
  Vocabularies vocabs;
  nlohmann::json metadata;  // free-form (training settings, epoch, ...)
  std::string version;      // hex FNV-1a of the file bytes
};

namespace detail {

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw IncompatibleCheckpoint("checkpoint is truncated");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_checkpoint(const Model& m, const Vocabularies& v,
                                        const nlohmann::json& metadata = nlohmann::json::object()) {
  nlohmann::ordered_json header;
  header["format_version"] = kCheckpointFormat;
  header["config"] = m.config().to_json();
  header["vocab_hashes"] = {
      {"code", v.code.content_hash()}, {"ast", v.ast.content_hash()}, {"doc", v.doc.content_hash()}};
  header["vocabs"] = {{"code", v.code.tokens()}, {"ast", v.ast.tokens()}, {"doc", v.doc.tokens()}};
  header["metadata"] = metadata;
  const std::string hjson = header.dump();

  std::string out(kCheckpointMagic);
  detail::put<std::uint64_t>(out, hjson.size());
  out += hjson;
  const auto& ps = m.params();
  detail::put<std::uint64_t>(out, ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& p = ps[i];
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape()) detail::put<std::uint64_t>(out, d);
    for (double x : p.value.values()) detail::put<float>(out, static_cast<float>(x));
  }
  detail::put<std::uint64_t>(out, util::fnv1a64(out));
  return out;
}

inline corpus::Vocabulary vocab_from_list(const nlohmann::json& list) {
  const auto toks = list.get<std::vector<std::string>>();
  if (toks.size() < corpus::Vocabulary::kNumSpecials) throw IncompatibleCheckpoint("vocabulary lacks special tokens");
  return corpus::Vocabulary(std::vector<std::string>(toks.begin() + corpus::Vocabulary::kNumSpecials, toks.end()));
}

// Parses and validates a checkpoint. When `expected` is given, its
// vocabulary hashes must match the stored ones.
inline Checkpoint deserialize_checkpoint(std::string_view data, const Vocabularies* expected = nullptr) {
  if (data.size() < kCheckpointMagic.size() + 16 || data.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
    throw IncompatibleCheckpoint("not a checkpoint file (bad magic)");
  }
  std::uint64_t trailer;
  std::memcpy(&trailer, data.data() + data.size() - 8, 8);
  if (util::fnv1a64(data.substr(0, data.size() - 8)) != trailer) {
    throw IncompatibleCheckpoint("checkpoint checksum mismatch (file corrupted)");
  }
  detail::Reader r(data.substr(0, data.size() - 8));
  r.bytes(kCheckpointMagic.size());
  const auto hlen = r.get<std::uint64_t>();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.bytes(hlen));
  } catch (const nlohmann::json::exception& e) {
    throw IncompatibleCheckpoint(std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  ModelConfig cfg;
  Vocabularies vocabs;
  try {
    if (header.at("format_version").get<int>() != kCheckpointFormat) {
      throw IncompatibleCheckpoint("unsupported checkpoint format version");
    }
    cfg = ModelConfig::from_json(header.at("config"));
    vocabs.code = vocab_from_list(header.at("vocabs").at("code"));
    vocabs.ast = vocab_from_list(header.at("vocabs").at("ast"));
    vocabs.doc = vocab_from_list(header.at("vocabs").at("doc"));
    const auto& hashes = header.at("vocab_hashes");
    if (hashes.at("code").get<std::string>() != vocabs.code.content_hash() ||
        hashes.at("ast").get<std::string>() != vocabs.ast.content_hash() ||
        hashes.at("doc").get<std::string>() != vocabs.doc.content_hash()) {
      throw IncompatibleCheckpoint("stored vocabulary hashes do not match stored vocabularies");
    }
  } catch (const nlohmann::json::exception& e) {
    throw IncompatibleCheckpoint(std::string("checkpoint header: ") + e.what());
  } catch (const InvalidInput& e) {
    throw IncompatibleCheckpoint(std::string("checkpoint config: ") + e.what());
  }
  if (expected) {
    if (expected->code.content_hash() != vocabs.code.content_hash() ||
        expected->ast.content_hash() != vocabs.ast.content_hash() ||
        expected->doc.content_hash() != vocabs.doc.content_hash()) {
      throw IncompatibleCheckpoint("checkpoint vocabularies differ from the expected ones");
    }
  }
  if (cfg.code_vocab != vocabs.code.size() || cfg.ast_vocab != vocabs.ast.size() ||
      cfg.doc_vocab != vocabs.doc.size()) {
    throw IncompatibleCheckpoint("config vocabulary sizes disagree with stored vocabularies");
  }

  ModelParameters params;
  const auto n = r.get<std::uint64_t>();
  for (std::uint64_t k = 0; k < n; ++k) {
    const auto name_len = r.get<std::uint32_t>();
    const std::string name(r.bytes(name_len));
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw IncompatibleCheckpoint("tensor '" + name + "' has implausible rank");
    num::Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(r.get<std::uint64_t>());
    const std::size_t count = num::shape_size(shape);
    const auto raw = r.bytes(count * sizeof(float));
    std::vector<double> vals(count);
    for (std::size_t i = 0; i < count; ++i) {
      float f;
      std::memcpy(&f, raw.data() + i * sizeof(float), sizeof(float));
      vals[i] = f;
    }
    try {
      params.add(name, num::Tensor(shape, std::move(vals)));
    } catch (const InvalidInput& e) {
      throw IncompatibleCheckpoint(e.what());
    }
  }
  if (r.pos() != data.size() - 8) throw IncompatibleCheckpoint("trailing bytes after tensors");
  if (!params.all_finite()) throw IncompatibleCheckpoint("checkpoint contains non-finite values");

  Checkpoint ck{Model(cfg, std::move(params)), std::move(vocabs),
                header.contains("metadata") ? header["metadata"] : nlohmann::json::object(),
                util::to_hex(trailer)};
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Model& m, const Vocabularies& v,
                            const nlohmann::json& metadata = nlohmann::json::object()) {
  const std::string bytes = serialize_checkpoint(m, v, metadata);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidInput("failed writing checkpoint " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path, const Vocabularies* expected = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IncompatibleCheckpoint("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str(), expected);
}

}  // namespace nbdoc::model
