#include <gtest/gtest.h>

#include <cmath>

#include "nbdoc/corpus/pairs.hpp"
#include "nbdoc/model/checkpoint.hpp"
#include "nbdoc/model/model.hpp"
#include "support/grad_cases.hpp"
#include "support/tiny.hpp"

using namespace nbdoc;
using namespace nbdoc::model;
using nbdoc::testing::random_inputs;
using nbdoc::testing::random_prefix;
using nbdoc::testing::random_tensor;
using nbdoc::testing::tiny_config;

namespace {

const Ablation kAll[] = {Ablation::full, Ablation::no_high_with_uniform, Ablation::no_high_no_uniform,
                         Ablation::flat_gnn};

num::Tensor logits_of(const Model& m, const ModelInputs& in, const std::vector<int>& prefix) {
  return predict_next(m, in, prefix);
}

Vocabularies tiny_vocabs(std::size_t n = 10) {
  std::vector<std::string> toks;
  for (std::size_t i = 4; i < n; ++i) toks.push_back("w" + std::to_string(i));
  return {corpus::Vocabulary(toks), corpus::Vocabulary(toks), corpus::Vocabulary(toks)};
}

}  // namespace

TEST(Config, JsonRoundTripAndValidation) {
  auto c = tiny_config(Ablation::flat_gnn);
  c.share_ast_encoders = true;
  EXPECT_EQ(ModelConfig::from_json(c.to_json()), c);
  EXPECT_THROW(ModelConfig::from_json({{"nope", 1}}), InvalidInput);
  EXPECT_THROW(ModelConfig::from_json({{"ablation", "weird"}}), InvalidInput);
  auto bad = c;
  bad.hidden = 0;
  EXPECT_THROW(bad.validate(), InvalidInput);
  bad = c;
  bad.n_cells = 3;
  EXPECT_THROW(bad.validate(), InvalidInput);
}

TEST(Parameters, LayoutPerAblation) {
  const auto full = Model::init(tiny_config(Ablation::full), 1);
  const auto flat = Model::init(tiny_config(Ablation::flat_gnn), 1);
  const auto nouni = Model::init(tiny_config(Ablation::no_high_no_uniform), 1);
  EXPECT_NE(full.params().scalar_count(), flat.params().scalar_count());
  EXPECT_LT(flat.params().scalar_count(), full.params().scalar_count());
  EXPECT_EQ(nouni.params().at("proj.W").value.shape(), (num::Shape{16, 6}));
  EXPECT_EQ(full.params().at("proj.W").value.shape(), (num::Shape{24, 6}));
  EXPECT_EQ(full.params().at("out.W").value.shape(), (num::Shape{24, 10}));
  auto shared = tiny_config();
  shared.share_ast_encoders = true;
  EXPECT_FALSE(Model::init(shared, 1).params().contains("ast1.gru.W"));
  EXPECT_TRUE(full.params().contains("ast3.gcn1"));
  EXPECT_TRUE(full.params().all_finite());
}

TEST(Parameters, InitDeterministic) {
  const auto a = Model::init(tiny_config(), 5), b = Model::init(tiny_config(), 5), c = Model::init(tiny_config(), 6);
  for (std::size_t i = 0; i < a.params().size(); ++i) EXPECT_EQ(a.params()[i].value, b.params()[i].value);
  EXPECT_NE(a.params().at("out.W").value, c.params().at("out.W").value);
}

TEST(Encoder, ShapesAtFullScale) {
  ModelConfig c;
  c.code_vocab = c.ast_vocab = c.doc_vocab = 12;
  const auto m = Model::init(c, 0);
  util::Rng rng(1);
  ModelInputs in;
  in.code_ids = {4, 5, 6};
  in.code_cell = {0, 0, 0};
  in.code_offset = {0, 1, 2};
  const auto g = nbdoc::testing::random_tree(rng, 5, 12);
  in.node_ids[0] = {4, 5, 6, 7, 8};
  in.a_hat[0] = ast::normalized_adjacency(g);
  in.cell_mask[0] = true;
  num::Tape t(false);
  const auto b = m.bind(t);
  const auto e = m.encode(b, in);
  EXPECT_EQ(e.code_states.value().shape(), (num::Shape{400, 256}));
  ASSERT_EQ(e.node_states.size(), 1u);
  EXPECT_EQ(e.node_states[0].value().shape(), (num::Shape{500, 256}));
  EXPECT_EQ(e.summaries.value().shape(), (num::Shape{4, 256}));
  EXPECT_EQ(e.cell_mask, (num::Mask{1, 0, 0, 0}));
  EXPECT_EQ(m.decode(b, e, {make_prefix({}, c.doc_len)}).logits.value().shape(), (num::Shape{1, 12}));
}

TEST(Encoder, EmptyCodeIsFullyMasked) {
  const auto c = tiny_config();
  const auto m = Model::init(c, 0);
  ModelInputs in;
  in.node_ids[1] = {4};
  in.a_hat[1] = num::Tensor::matrix({{1.0}});
  in.cell_mask[1] = true;
  num::Tape t(false);
  const auto b = m.bind(t);
  const auto e = m.encode(b, in);
  for (auto v : e.code_mask) EXPECT_EQ(v, 0);
  for (double v : e.code_states.value().values()) EXPECT_EQ(v, 0.0);
  const auto out = m.decode(b, e, {make_prefix({}, c.doc_len)});
  for (double v : out.code_weights.value().values()) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(out.logits.value().all_finite());
}

TEST(Encoder, ZeroWeightsGiveZeroStates) {
  auto c = tiny_config();
  auto m = Model::init(c, 0);
  for (auto* p : m.params().pointers()) p->value.fill(0.0);
  ModelInputs in;
  in.node_ids[0] = {5};
  in.a_hat[0] = num::Tensor::matrix({{1.0}});
  in.cell_mask[0] = true;
  num::Tape t(false);
  const auto e = m.encode(m.bind(t), in);
  for (double v : e.node_states[0].value().values()) EXPECT_EQ(v, 0.0);
}

TEST(Encoder, Deterministic) {
  util::Rng rng(3);
  const auto c = tiny_config();
  const auto m = Model::init(c, 2);
  const auto in = random_inputs(rng, c, 3);
  const auto p = random_prefix(rng, c);
  EXPECT_EQ(logits_of(m, in, p), logits_of(m, in, p));
}

TEST(Attention, HighLevelScaledScores) {
  num::Tape t;
  const auto d = t.constant(num::Tensor::matrix({{1, 0}, {0, 1}}));
  const auto s = t.constant(num::Tensor::matrix({{2, 0}, {0, 2}}));
  const auto raw = scaled_scores(d, s).value();
  EXPECT_NEAR(raw(0, 0), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(raw(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(raw(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(raw(1, 1), std::sqrt(2.0), 1e-12);
}

TEST(Attention, HighLevelSymmetryAndMask) {
  util::Rng rng(4);
  num::Tape t;
  const auto d = t.constant(random_tensor(rng, 3, 5));
  const auto row = random_tensor(rng, 1, 5);
  num::Tensor same(4, 5);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 5; ++j) same(i, j) = row[j];
  }
  const auto a = high_level_attention(d, t.constant(same), {1, 1, 1, 1}).value();
  for (double v : a.values()) EXPECT_NEAR(v, 0.25, 1e-12);
  const auto one = high_level_attention(d, t.constant(random_tensor(rng, 4, 5)), {1, 0, 0, 0}).value();
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(one(r, 0), 1.0);
    for (std::size_t i = 1; i < 4; ++i) EXPECT_EQ(one(r, i), 0.0);
  }
}

TEST(Attention, LowLevelCases) {
  util::Rng rng(5);
  num::Tape t;
  const auto d = t.constant(random_tensor(rng, 2, 3));
  const auto b1 = low_level_attention(d, t.constant(random_tensor(rng, 4, 3)), {0, 0, 1, 0}).value();
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(b1(r, 2), 1.0);
    EXPECT_EQ(b1(r, 0) + b1(r, 1) + b1(r, 3), 0.0);
  }
  num::Tensor uniform(4, 3, 0.3);
  const auto b2 = low_level_attention(d, t.constant(uniform), {1, 1, 1, 0}).value();
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(b2(r, j), 1.0 / 3.0, 1e-12);
    EXPECT_EQ(b2(r, 3), 0.0);
  }
}

TEST(Attention, FuseDeltaAndConvexity) {
  util::Rng rng(6);
  num::Tape t;
  const auto g1 = random_tensor(rng, 3, 4);
  const auto alpha = t.constant(num::Tensor::matrix({{1, 0, 0, 0}}));
  const auto beta = t.constant(num::Tensor::matrix({{0, 1, 0}}));
  const auto beta2 = t.constant(num::Tensor::matrix({{0.5, 0.5, 0}}));
  const auto o = fuse(alpha, {beta, beta2}, {t.constant(g1), t.constant(random_tensor(rng, 3, 4))}, {0, 1}).value();
  for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(o(0, j), g1(1, j));

  num::Tensor v(3, 4, 0.7);
  const auto au = t.constant(num::Tensor::matrix({{0.25, 0.25, 0.25, 0.25}}));
  std::vector<num::Var> betas, nodes;
  for (int i = 0; i < 4; ++i) {
    auto bt = random_tensor(rng, 1, 3, 0, 1);
    const double s = bt[0] + bt[1] + bt[2];
    for (auto& x : bt.values()) x /= s;
    betas.push_back(t.constant(bt));
    nodes.push_back(t.constant(v));
  }
  for (double x : fuse(au, betas, nodes, {0, 1, 2, 3}).value().values()) EXPECT_NEAR(x, 0.7, 1e-12);
}

TEST(Attention, FuseMatchesDoubleSum) {
  util::Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    num::Tape t;
    const std::size_t rows = 1 + rng.below(3), m = 1 + rng.below(5), h = 1 + rng.below(4);
    const auto a = random_tensor(rng, rows, 4, 0, 1);
    std::vector<num::Tensor> bs, gs;
    std::vector<num::Var> bv, gv;
    for (int i = 0; i < 4; ++i) {
      bs.push_back(random_tensor(rng, rows, m, 0, 1));
      gs.push_back(random_tensor(rng, m, h));
      bv.push_back(t.constant(bs.back()));
      gv.push_back(t.constant(gs.back()));
    }
    const auto o = fuse(t.constant(a), bv, gv, {0, 1, 2, 3}).value();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < h; ++c) {
        double s = 0;
        for (std::size_t i = 0; i < 4; ++i) {
          for (std::size_t j = 0; j < m; ++j) s += a(r, i) * bs[i](r, j) * gs[i](j, c);
        }
        EXPECT_NEAR(o(r, c), s, 1e-9);
      }
    }
  }
}

TEST(Attention, UniformCodeAttention) {
  util::Rng rng(8);
  num::Tape t;
  const auto d = random_tensor(rng, 3, 4);
  const auto states = random_tensor(rng, 5, 4);
  const auto one = uniform_code_attention(t.constant(d), t.constant(states), {0, 0, 1, 0, 0});
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(one.context.value()(r, j), states(2, j));
  }
  const num::Mask mask{1, 1, 0, 1, 1};
  const auto ca = uniform_code_attention(t.constant(d), t.constant(states), mask);
  for (std::size_t r = 0; r < 3; ++r) {
    std::vector<double> e(5, 0.0);
    double z = 0;
    for (std::size_t p = 0; p < 5; ++p) {
      if (!mask[p]) continue;
      double s = 0;
      for (std::size_t k = 0; k < 4; ++k) s += d(r, k) * states(p, k);
      e[p] = std::exp(s);
      z += e[p];
    }
    double rowsum = 0;
    for (std::size_t p = 0; p < 5; ++p) {
      EXPECT_NEAR(ca.weights.value()(r, p), e[p] / z, 1e-9);
      rowsum += ca.weights.value()(r, p);
    }
    EXPECT_NEAR(rowsum, 1.0, 1e-12);
    for (std::size_t k = 0; k < 4; ++k) {
      double s = 0;
      for (std::size_t p = 0; p < 5; ++p) s += e[p] / z * states(p, k);
      EXPECT_NEAR(ca.context.value()(r, k), s, 1e-9);
    }
  }
}

TEST(Predict, LogitsShapeAndZeroParams) {
  for (auto a : kAll) {
    const auto c = tiny_config(a);
    auto m = Model::init(c, 1);
    util::Rng rng(9);
    const auto in = random_inputs(rng, c);
    EXPECT_EQ(logits_of(m, in, make_prefix({}, c.doc_len)).size(), c.doc_vocab);
    for (auto* p : m.params().pointers()) p->value.fill(0.0);
    const auto l = logits_of(m, in, make_prefix({5}, c.doc_len));
    for (double v : l.values()) EXPECT_EQ(v, l[0]);
    EXPECT_EQ(argmax_token(l), corpus::Vocabulary::kUnk);
  }
}

TEST(Predict, MaskedCellContentIgnored) {
  for (auto a : kAll) {
    const auto c = tiny_config(a);
    const auto m = Model::init(c, 3);
    util::Rng rng(10);
    auto in = random_inputs(rng, c, 4);
    in.cell_mask[0] = true;
    in.node_ids[0] = {4, 5};
    in.a_hat[0] = num::Tensor::matrix({{0.5, 0.5}, {0.5, 0.5}});
    in.cell_mask[3] = false;
    in.node_ids[3] = {4, 5, 6};
    in.a_hat[3] = ast::normalized_adjacency(nbdoc::testing::random_tree(rng, 3, 4));
    const auto p = random_prefix(rng, c);
    const auto before = logits_of(m, in, p);
    in.node_ids[3] = {9, 8, 7};
    EXPECT_EQ(logits_of(m, in, p), before) << to_string(a);
  }
}

TEST(Decode, EndAlwaysWins) {
  const auto c = tiny_config();
  auto m = Model::init(c, 1);
  m.params().at("out.W").value.fill(0.0);
  m.params().at("out.b").value[corpus::Vocabulary::kEnd] = 50.0;
  util::Rng rng(11);
  const auto r = greedy_decode(m, random_inputs(rng, c));
  EXPECT_TRUE(r.ids.empty());
  ASSERT_EQ(r.trace.steps.size(), 1u);
  EXPECT_GT(r.trace.steps[0].prob, 0.99);
}

TEST(Decode, LengthCapAndNoSpecials) {
  util::Rng rng(12);
  for (auto a : kAll) {
    const auto c = tiny_config(a);
    for (int s = 0; s < 10; ++s) {
      auto m = Model::init(c, static_cast<std::uint64_t>(s));
      m.params().at("out.b").value[corpus::Vocabulary::kEnd] = -50.0;
      const auto r = greedy_decode(m, random_inputs(rng, c));
      EXPECT_EQ(r.ids.size(), c.doc_len - 1);
      EXPECT_LE(greedy_decode(m, random_inputs(rng, c), 2).ids.size(), 2u);
      for (int id : r.ids) {
        EXPECT_NE(id, corpus::Vocabulary::kPad);
        EXPECT_NE(id, corpus::Vocabulary::kStart);
      }
    }
  }
}

TEST(Decode, ArgmaxScaleInvariance) {
  util::Rng rng(13);
  const auto c = tiny_config();
  for (int s = 0; s < 5; ++s) {
    auto m = Model::init(c, static_cast<std::uint64_t>(s));
    const auto in = random_inputs(rng, c);
    const auto base = greedy_decode(m, in).ids;
    for (auto* p : {&m.params().at("out.W"), &m.params().at("out.b")}) {
      for (auto& v : p->value.values()) v *= 3.5;
    }
    EXPECT_EQ(greedy_decode(m, in).ids, base);
  }
}

TEST(Decode, ArgmaxTieBreak) {
  EXPECT_EQ(argmax_token(num::Tensor::row({9, 1, 9, 3, 3})), 3);
  EXPECT_EQ(argmax_token(num::Tensor::row({0, 0, 0, 0, 0})), 1);
}

TEST(Decode, TraceNormalization) {
  util::Rng rng(14);
  for (auto a : kAll) {
    const auto c = tiny_config(a);
    for (int s = 0; s < 20; ++s) {
      const auto m = Model::init(c, static_cast<std::uint64_t>(s));
      const auto in = random_inputs(rng, c);
      const auto r = greedy_decode(m, in);
      for (const auto& st : r.trace.steps) {
        double asum = 0;
        for (std::size_t i = 0; i < kCells; ++i) {
          if (!in.cell_mask[i]) {
            EXPECT_EQ(st.alpha[i], 0.0);
            EXPECT_TRUE(st.beta[i].empty());
            continue;
          }
          asum += st.alpha[i];
          double bsum = 0;
          for (double v : st.beta[i]) bsum += v;
          EXPECT_NEAR(bsum, a == Ablation::flat_gnn ? st.alpha[i] : 1.0, 1e-9);
        }
        if (in.real_cells() > 0) {
          EXPECT_NEAR(asum, 1.0, 1e-9);
        }
        if (!st.token_alignment.empty()) {
          double tsum = 0;
          for (double v : st.token_alignment) tsum += v;
          EXPECT_NEAR(tsum, 1.0, 1e-9);
        }
      }
    }
  }
}

class EndToEndGrad : public ::testing::TestWithParam<int> {};

TEST_P(EndToEndGrad, MatchesFiniteDifferences) {
  for (auto a : kAll) {
    const auto res = nbdoc::testing::end_to_end_grad_check(a, GetParam());
    EXPECT_LT(res.max_rel, 1e-3) << to_string(a) << " " << res.worst;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, EndToEndGrad, ::testing::Range(0, 10));

TEST(Checkpoint, RoundTripIsExactAtFloat) {
  const auto c = tiny_config();
  auto m = Model::init(c, 21);
  const auto v = tiny_vocabs();
  const auto bytes = serialize_checkpoint(m, v, {{"epoch", 3}});
  const auto ck = deserialize_checkpoint(bytes, &v);
  EXPECT_EQ(ck.model.config(), c);
  EXPECT_EQ(ck.metadata["epoch"], 3);
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    EXPECT_EQ(ck.model.params()[i].value.cast<float>(), m.params()[i].value.cast<float>());
  }
  m.params().round_to_float();
  util::Rng rng(22);
  for (int k = 0; k < 5; ++k) {
    const auto in = random_inputs(rng, c);
    EXPECT_EQ(greedy_decode(ck.model, in).ids, greedy_decode(m, in).ids);
    EXPECT_EQ(predict_next(ck.model, in, make_prefix({}, c.doc_len)), predict_next(m, in, make_prefix({}, c.doc_len)));
  }
  EXPECT_EQ(serialize_checkpoint(ck.model, ck.vocabs, ck.metadata), bytes);
  EXPECT_EQ(ck.version.size(), 16u);
}

TEST(Checkpoint, RejectsCorruption) {
  const auto c = tiny_config();
  const auto m = Model::init(c, 1);
  const auto v = tiny_vocabs();
  const auto bytes = serialize_checkpoint(m, v);
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x5a;
  EXPECT_THROW(deserialize_checkpoint(flipped), IncompatibleCheckpoint);
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, bytes.size() - 20)), IncompatibleCheckpoint);
  EXPECT_THROW(deserialize_checkpoint("garbage"), IncompatibleCheckpoint);
  EXPECT_THROW(deserialize_checkpoint(""), IncompatibleCheckpoint);
}

TEST(Checkpoint, RejectsVocabMismatch) {
  const auto c = tiny_config();
  const auto v = tiny_vocabs();
  const auto bytes = serialize_checkpoint(Model::init(c, 1), v);
  auto other = tiny_vocabs();
  other.doc = corpus::Vocabulary({"a", "b", "c", "d", "e", "f"});
  EXPECT_THROW(deserialize_checkpoint(bytes, &other), IncompatibleCheckpoint);

  // Tampered stored hash with a re-sealed trailer.
  const std::string needle = v.doc.content_hash();
  auto tampered = bytes.substr(0, bytes.size() - 8);
  const auto pos = tampered.find(needle);
  ASSERT_NE(pos, std::string::npos);
  tampered.replace(pos, needle.size(), std::string(needle.size(), '0'));
  nbdoc::model::detail::put<std::uint64_t>(tampered, util::fnv1a64(tampered));
  EXPECT_THROW(deserialize_checkpoint(tampered), IncompatibleCheckpoint);
}

TEST(Checkpoint, RejectsMissingExtraAndMisshapenTensors) {
  const auto c = tiny_config();
  const auto v = tiny_vocabs();
  const auto m = Model::init(c, 1);
  const auto bytes = serialize_checkpoint(m, v);
  // Locate the tensor table and rewrite it with one tensor removed / added /
  // reshaped, keeping the header.
  std::uint64_t hlen;
  std::memcpy(&hlen, bytes.data() + 8, 8);
  const std::string head = bytes.substr(0, 16 + hlen);
  auto write = [&](const std::vector<std::pair<std::string, num::Tensor>>& tensors) {
    std::string out = head;
    nbdoc::model::detail::put<std::uint64_t>(out, tensors.size());
    for (const auto& [name, t] : tensors) {
      nbdoc::model::detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
      out += name;
      nbdoc::model::detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
      for (auto d : t.shape()) nbdoc::model::detail::put<std::uint64_t>(out, d);
      for (double x : t.values()) nbdoc::model::detail::put<float>(out, static_cast<float>(x));
    }
    nbdoc::model::detail::put<std::uint64_t>(out, util::fnv1a64(out));
    return out;
  };
  std::vector<std::pair<std::string, num::Tensor>> all;
  for (std::size_t i = 0; i < m.params().size(); ++i) all.emplace_back(m.params()[i].name, m.params()[i].value);
  EXPECT_NO_THROW(deserialize_checkpoint(write(all)));

  auto missing = all;
  missing.erase(missing.begin() + 3);
  EXPECT_THROW(deserialize_checkpoint(write(missing)), IncompatibleCheckpoint);

  auto extra = all;
  extra.emplace_back("bonus", num::Tensor(1, 1));
  EXPECT_THROW(deserialize_checkpoint(write(extra)), IncompatibleCheckpoint);

  auto reshaped = all;
  reshaped[0].second = num::Tensor(c.code_vocab + 1, c.emb_dim);
  EXPECT_THROW(deserialize_checkpoint(write(reshaped)), IncompatibleCheckpoint);

  auto dup = all;
  dup.push_back(dup.front());
  EXPECT_THROW(deserialize_checkpoint(write(dup)), IncompatibleCheckpoint);
}
