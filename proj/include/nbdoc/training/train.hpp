#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nbdoc/errors.hpp"
#include "nbdoc/model/model.hpp"
#include "nbdoc/model/prepared.hpp"
#include "nbdoc/numerics/optim.hpp"

namespace nbdoc::training {

struct TrainConfig {
  std::size_t batch_size = 20;
  double lr = 1e-3;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  std::size_t patience = 2;
  double clip_norm = 5.0;

  void validate() const {
    if (batch_size < 1) throw InvalidInput("train config: batch_size must be at least 1");
    if (!(lr > 0)) throw InvalidInput("train config: lr must be positive");
    if (!(clip_norm > 0)) throw InvalidInput("train config: clip_norm must be positive");
  }

  nlohmann::ordered_json to_json() const {
    return {{"batch_size", batch_size}, {"lr", lr},         {"epochs", epochs},
            {"seed", seed},             {"patience", patience}, {"clip_norm", clip_norm}};
  }

  void update_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidInput("train config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& k = it.key();
      try {
        if (k == "batch_size") batch_size = it->get<std::size_t>();
        else if (k == "lr") lr = it->get<double>();
        else if (k == "epochs") epochs = it->get<std::size_t>();
        else if (k == "seed") seed = it->get<std::uint64_t>();
        else if (k == "patience") patience = it->get<std::size_t>();
        else if (k == "clip_norm") clip_norm = it->get<double>();
        else throw InvalidInput("unknown train config key '" + k + "'");
      } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("train config key '" + k + "': " + e.what());
      }
    }
  }
};

struct Sample {
  std::size_t pair = 0;  // index into the prepared pair list
  std::vector<int> prefix;
  int target = 0;
};

// Teacher forcing over [START, t_1 .. t_T, END]: one sample per position
// p >= 1 with prefix = tokens before p (PAD-padded) and target = token p.
inline std::vector<Sample> expand_samples(const std::vector<int>& doc_ids, std::size_t doc_len,
                                          std::size_t pair_index = 0) {
  std::vector<int> seq;
  seq.push_back(corpus::Vocabulary::kStart);
  for (std::size_t i = 0; i < doc_ids.size() && i + 1 < doc_len; ++i) seq.push_back(doc_ids[i]);
  seq.push_back(corpus::Vocabulary::kEnd);
  std::vector<Sample> out;
  for (std::size_t p = 1; p < seq.size(); ++p) {
    Sample s;
    s.pair = pair_index;
    s.prefix.assign(doc_len, corpus::Vocabulary::kPad);
    std::copy(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(p), s.prefix.begin());
    s.target = seq[p];
    out.push_back(std::move(s));
  }
  return out;
}

// Mean cross-entropy over `samples`. Each distinct pair is encoded once and
// its prefixes decoded as one stack.
inline num::Var samples_loss(const model::Model& m, const model::Model::Bound& b,
                             const std::vector<model::PreparedPair>& pairs, const std::vector<Sample>& samples,
                             bool training, util::Rng* rng) {
  std::vector<num::Var> logits;
  std::vector<int> targets;
  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t j = i;
    std::vector<std::vector<int>> prefixes;
    while (j < samples.size() && samples[j].pair == samples[i].pair) {
      prefixes.push_back(samples[j].prefix);
      targets.push_back(samples[j].target);
      ++j;
    }
    const auto e = m.encode(b, pairs[samples[i].pair].inputs);
    logits.push_back(m.decode(b, e, prefixes, training, rng).logits);
    i = j;
  }
  const auto all = logits.size() == 1 ? logits.front() : num::concat_rows(logits);
  return num::cross_entropy(all, targets, corpus::Vocabulary::kPad);
}

// Mean per-sample loss over a data set without dropout or gradients.
inline double dataset_loss(const model::Model& m, const std::vector<model::PreparedPair>& pairs) {
  double total = 0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto samples = expand_samples(pairs[k].doc_ids, m.config().doc_len, k);
    num::Tape t(false);
    const auto b = m.bind(t);
    total += samples_loss(m, b, pairs, samples, false, nullptr).value()[0] * static_cast<double>(samples.size());
    count += samples.size();
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

// Fraction of samples whose argmax prediction equals the target.
inline double next_token_accuracy(const model::Model& m, const std::vector<model::PreparedPair>& pairs) {
  std::size_t right = 0, total = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto samples = expand_samples(pairs[k].doc_ids, m.config().doc_len, k);
    num::Tape t(false);
    const auto b = m.bind(t);
    const auto e = m.encode(b, pairs[k].inputs);
    std::vector<std::vector<int>> prefixes;
    for (const auto& s : samples) prefixes.push_back(s.prefix);
    const auto logits = m.decode(b, e, prefixes).logits.value();
    for (std::size_t r = 0; r < samples.size(); ++r) right += model::argmax_token(logits, r) == samples[r].target;
    total += samples.size();
  }
  return total ? static_cast<double>(right) / static_cast<double>(total) : 0.0;
}

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0;
  double dev_loss = 0;
  double seconds = 0;

  nlohmann::ordered_json to_json() const {
    return {{"epoch", epoch}, {"train_loss", train_loss}, {"dev_loss", dev_loss}, {"seconds", seconds}};
  }
};

struct TrainResult {
  model::Model best;
  std::vector<EpochMetrics> history;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

// Shuffles pairs, expands them into samples and cuts consecutive batches.
inline std::vector<std::vector<Sample>> make_batches(const std::vector<model::PreparedPair>& pairs,
                                                     std::size_t doc_len, std::size_t batch_size, util::Rng& rng) {
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<Sample>> batches(1);
  for (std::size_t k : order) {
    for (auto& s : expand_samples(pairs[k].doc_ids, doc_len, k)) {
      if (batches.back().size() == batch_size) batches.emplace_back();
      batches.back().push_back(std::move(s));
    }
  }
  if (batches.back().empty()) batches.pop_back();
  return batches;
}

// One optimizer step on a batch. Returns the batch loss.
inline double train_step(model::Model& m, num::Adam& opt, const std::vector<model::PreparedPair>& pairs,
                         const std::vector<Sample>& batch, double clip_norm, util::Rng& rng,
                         const std::string& batch_label) {
  m.params().zero_grad();
  double loss = 0;
  try {
    num::Tape t;
    const auto b = m.bind(t);
    const auto l = samples_loss(m, b, pairs, batch, true, &rng);
    loss = l.value()[0];
    if (!std::isfinite(loss)) throw TrainingError("loss is not finite");
    t.backward(l);
  } catch (const TrainingError& e) {
    throw TrainingError("batch " + batch_label + ": " + e.what());
  }
  const double norm = num::clip_grad_norm(m.params().pointers(), clip_norm);
  if (!std::isfinite(norm)) throw TrainingError("batch " + batch_label + ": gradient is not finite");
  opt.step();
  return loss;
}

// Tracks the best dev loss. update() returns true once `patience`
// consecutive epochs failed to improve on it, i.e. on the (patience + 1)-th.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  bool update(double dev_loss) {
    improved_ = dev_loss < best_;
    if (improved_) {
      best_ = dev_loss;
      bad_ = 0;
      return false;
    }
    return ++bad_ > patience_;
  }
  bool improved() const { return improved_; }
  double best() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t bad_ = 0;
  bool improved_ = false;
  double best_ = std::numeric_limits<double>::infinity();
};

using EpochCallback = std::function<void(const EpochMetrics&, const model::Model& best, bool improved)>;

// Teacher-forced training with Adam and early stopping on dev loss, starting
// from `m`. The best model is returned with its values rounded to float, so
// it equals what a checkpoint of it holds.
inline TrainResult train(model::Model m, const std::vector<model::PreparedPair>& train_set,
                         const std::vector<model::PreparedPair>& dev_set, const TrainConfig& tc,
                         const EpochCallback& on_epoch = {}) {
  tc.validate();
  if (train_set.empty()) throw InvalidInput("training set is empty");
  if (dev_set.empty()) throw InvalidInput("dev set is empty");
  const auto& mc = m.config();
  num::Adam opt(m.params().pointers(), {tc.lr});
  util::Rng rng(tc.seed ^ 0x9e3779b97f4a7c15ULL);

  TrainResult res{m, {}, 0, false};
  res.best.params().round_to_float();
  EarlyStopping stop(tc.patience);
  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto batches = make_batches(train_set, mc.doc_len, tc.batch_size, rng);
    double total = 0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < batches.size(); ++k) {
      const double l =
          train_step(m, opt, train_set, batches[k], tc.clip_norm, rng, std::to_string(epoch) + ":" + std::to_string(k));
      total += l * static_cast<double>(batches[k].size());
      count += batches[k].size();
    }
    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = total / static_cast<double>(count);
    em.dev_loss = dataset_loss(m, dev_set);
    em.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.history.push_back(em);
    const bool done = stop.update(em.dev_loss);
    if (stop.improved()) {
      res.best = m;
      res.best.params().round_to_float();
      res.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(em, res.best, stop.improved());
    if (done) {
      res.stopped_early = true;
      break;
    }
  }
  return res;
}

inline TrainResult train(const std::vector<model::PreparedPair>& train_set,
                         const std::vector<model::PreparedPair>& dev_set, const TrainConfig& tc,
                         const model::ModelConfig& mc, const EpochCallback& on_epoch = {}) {
  return train(model::Model::init(mc, tc.seed), train_set, dev_set, tc, on_epoch);
}

}  // namespace nbdoc::training
