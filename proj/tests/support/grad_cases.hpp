#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nbdoc/model/model.hpp"
#include "nbdoc/numerics/gru.hpp"
#include "support/gradcheck.hpp"
#include "support/tiny.hpp"

namespace nbdoc::testing {

inline num::Parameter rand_param(util::Rng& rng, const std::string& name, std::size_t r, std::size_t c,
                                 double scale = 1.0) {
  return num::Parameter(name, random_tensor(rng, r, c, -scale, scale));
}

struct NamedCheck {
  std::string name;
  GradCheckResult result;
};

// Finite-difference checks of every differentiable op for one seed.
inline std::vector<NamedCheck> op_grad_checks(int seed) {
  using namespace num;
  std::vector<NamedCheck> out;
  auto record = [&out](std::string name, GradCheckResult r) { out.push_back({std::move(name), std::move(r)}); };
  {
    util::Rng rng(static_cast<std::uint64_t>(seed));
    auto a = rand_param(rng, "a", 3, 4), b = rand_param(rng, "b", 4, 2), c = rand_param(rng, "c", 5, 4);
    record("matmul", grad_check({&a, &b}, [](Tape&, const std::vector<Var>& v) { return weighted_sum(matmul(v[0], v[1]), 1); }));
    record("matmul_nt", grad_check({&a, &c}, [](Tape&, const std::vector<Var>& v) { return weighted_sum(matmul_nt(v[0], v[1]), 2); }));
  }
  {
    util::Rng rng(static_cast<std::uint64_t>(seed));
    auto a = rand_param(rng, "a", 3, 4, 3), b = rand_param(rng, "b", 3, 4, 3), r = rand_param(rng, "r", 1, 4);
    auto w = rand_param(rng, "w", 3, 1);
    record("add", grad_check({&a, &b}, [](Tape&, const std::vector<Var>& v) { return weighted_sum(add(v[0], v[1]), 3); }));
    record("mul", grad_check({&a, &b}, [](Tape&, const std::vector<Var>& v) { return weighted_sum(mul(v[0], v[1]), 4); }));
    record("add_row", grad_check({&a, &r}, [](Tape&, const std::vector<Var>& v) { return weighted_sum(add_row(v[0], v[1]), 5); }));
    record("scale_rows_by_col", grad_check({&a, &w}, [](Tape&, const std::vector<Var>& v) {
      return weighted_sum(scale_rows_by_col(v[0], v[1]), 6);
    }));
    record("scale", grad_check({&a}, [](Tape&, const std::vector<Var>& v) { return weighted_sum(scale(v[0], -1.7), 7); }));
    record("tanh", grad_check({&a}, [](Tape&, const std::vector<Var>& v) { return weighted_sum(tanh(v[0]), 8); }));
    record("sigmoid", grad_check({&a}, [](Tape&, const std::vector<Var>& v) { return weighted_sum(sigmoid(v[0]), 9); }));
  }
  {
    util::Rng rng(static_cast<std::uint64_t>(seed));
    auto a = rand_param(rng, "a", 3, 2), b = rand_param(rng, "b", 3, 3), c = rand_param(rng, "c", 2, 2);
    record("concat_cols", grad_check({&a, &b}, [](Tape&, const std::vector<Var>& v) {
      return weighted_sum(concat_cols({v[0], v[1], v[0]}), 10);
    }));
    record("concat_rows", grad_check({&a, &c}, [](Tape&, const std::vector<Var>& v) {
      return weighted_sum(concat_rows({v[0], v[1]}), 11);
    }));
    record("slice_rows+slice_cols", grad_check({&b}, [](Tape&, const std::vector<Var>& v) {
      return add(weighted_sum(slice_rows(v[0], 1, 3), 12), weighted_sum(slice_cols(v[0], 0, 2), 13));
    }));
    record("flatten", grad_check({&b}, [](Tape&, const std::vector<Var>& v) { return weighted_sum(flatten(v[0]), 14); }));
    record("gather_rows", grad_check({&b}, [](Tape&, const std::vector<Var>& v) {
      return weighted_sum(gather_rows(v[0], {2, 0, 2, 1}), 15);
    }));
  }
  {
    util::Rng rng(static_cast<std::uint64_t>(seed));
    auto x = rand_param(rng, "x", 3, 5, 3);
    const Mask m{1, 0, 1, 1, 0};
    record("masked_softmax_rows", grad_check({&x}, [](Tape&, const std::vector<Var>& v) { return weighted_sum(masked_softmax_rows(v[0]), 16); }));
    record("masked_softmax_rows(mask)", grad_check({&x}, [&m](Tape&, const std::vector<Var>& v) {
      return weighted_sum(masked_softmax_rows(v[0], &m), 17);
    }));
    record("cross_entropy", grad_check({&x}, [](Tape&, const std::vector<Var>& v) { return cross_entropy(v[0], {4, 0, 2}); }));
    record("cross_entropy(pad)", grad_check({&x}, [](Tape&, const std::vector<Var>& v) { return cross_entropy(v[0], {1, 3, 2}, 0); }));
      record("dropout", grad_check({&x}, [u = static_cast<std::uint64_t>(seed)](Tape&, const std::vector<Var>& v) {
      util::Rng r(u);
      return weighted_sum(dropout(v[0], 0.5, true, r), 18);
    }));
  }
  {
    util::Rng rng(static_cast<std::uint64_t>(seed));
    auto x = rand_param(rng, "x", 4, 3), h0 = rand_param(rng, "h0", 1, 4), w = rand_param(rng, "W", 3, 12),
         u = rand_param(rng, "U", 4, 12), b = rand_param(rng, "b", 1, 12);
    record("gru_sequence", grad_check({&x, &h0, &w, &u, &b}, [](Tape&, const std::vector<Var>& v) {
      return weighted_sum(gru_sequence(v[0], v[1], {v[2], v[3], v[4]}), 19);
    }));
  }
  {
    util::Rng rng(static_cast<std::uint64_t>(seed));
    auto h = rand_param(rng, "H", 4, 3), w = rand_param(rng, "W", 3, 3);
    const Tensor a_hat = [] {
      // normalized adjacency of the tree 0-1, 1-2, 0-3
      Tensor a = Tensor::matrix({{1, 1, 0, 1}, {1, 1, 1, 0}, {0, 1, 1, 0}, {1, 0, 0, 1}});
      const double d[] = {3, 3, 2, 2};
      for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) a(i, j) /= std::sqrt(d[i] * d[j]);
      }
      return a;
    }();
    record("gcn_hop", grad_check({&h, &w}, [&a_hat](Tape& t, const std::vector<Var>& v) {
      return weighted_sum(gcn_hop(v[0], t.constant(a_hat), v[1]), 20);
    }));
  }
  return out;
}

// Cross-entropy through encode and decode of the tiny model, dropout on.
inline GradCheckResult end_to_end_grad_check(model::Ablation a, int seed) {
  const auto c = tiny_config(a);
  auto m = model::Model::init(c, static_cast<std::uint64_t>(seed));
  util::Rng rng(static_cast<std::uint64_t>(100 + seed));
  const auto in = random_inputs(rng, c, 3);
  std::vector<std::vector<int>> prefixes{random_prefix(rng, c), random_prefix(rng, c)};
  const std::vector<int> targets{static_cast<int>(rng.below(c.doc_vocab)), corpus::Vocabulary::kEnd};
  return grad_check(m.params().pointers(), [&](num::Tape& t, const std::vector<num::Var>& vars) {
    model::Model::Bound b{&t, vars};
    util::Rng drop(static_cast<std::uint64_t>(seed));
    const auto e = m.encode(b, in);
    return num::cross_entropy(m.decode(b, e, prefixes, true, &drop).logits, targets);
  });
}

}  // namespace nbdoc::testing
