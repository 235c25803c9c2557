#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nbdoc/corpus/dataset.hpp"
#include "nbdoc/corpus/ingest.hpp"
#include "nbdoc/corpus/split.hpp"
#include "nbdoc/corpus/synthetic.hpp"
#include "nbdoc/eval/evaluate.hpp"
#include "nbdoc/model/checkpoint.hpp"
#include "nbdoc/model/prepared.hpp"
#include "nbdoc/service/server.hpp"
#include "nbdoc/training/train.hpp"

namespace nbdoc::cli {

namespace fs = std::filesystem;

enum class LogLevel { error = 0, info = 1, debug = 2 };

// Reads NBDOC_LOG (error, info, debug); anything else means info.
inline LogLevel log_level_from_env() {
  const char* v = std::getenv("NBDOC_LOG");
  if (!v) return LogLevel::info;
  const std::string s(v);
  if (s == "error") return LogLevel::error;
  if (s == "debug") return LogLevel::debug;
  return LogLevel::info;
}

class Log {
 public:
  Log(std::ostream& os, LogLevel level) : os_(os), level_(level) {}
  void error(const std::string& m) const { write(LogLevel::error, "error", m); }
  void info(const std::string& m) const { write(LogLevel::info, "info", m); }
  void debug(const std::string& m) const { write(LogLevel::debug, "debug", m); }

 private:
  void write(LogLevel l, const char* tag, const std::string& m) const {
    if (static_cast<int>(l) <= static_cast<int>(level_)) os_ << "[" << tag << "] " << m << '\n';
  }
  std::ostream& os_;
  LogLevel level_;
};

// Data, model or I/O failure; maps to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<corpus::CodeDocPair> read_pairs(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  return corpus::read_jsonl(in);
}

inline void write_pairs(const fs::path& p, const std::vector<corpus::CodeDocPair>& pairs) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  corpus::write_jsonl(out, pairs);
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
}

inline nlohmann::json read_json_file(const fs::path& p) {
  try {
    return nlohmann::json::parse(corpus::read_file(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(p.string() + ": " + e.what());
  }
}

inline fs::path split_path(const std::string& prefix, const char* part) { return prefix + "." + part + ".jsonl"; }

// Options of `train` that override the config file when given.
struct TrainOverrides {
  std::optional<std::size_t> epochs, batch_size, patience, hidden, emb_dim, proj_dim;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr, dropout;
  std::optional<std::string> ablation;
};

// Config file {"model": {...}, "train": {...}} with flag overrides on top.
// Nonzero vocabulary sizes in "model" cap the vocabularies built from the
// training split.
inline std::pair<model::ModelConfig, training::TrainConfig> effective_config(const std::string& path,
                                                                              const TrainOverrides& o) {
  model::ModelConfig mc;
  training::TrainConfig tc;
  if (!path.empty()) {
    const auto j = read_json_file(path);
    if (!j.is_object()) throw InvalidInput("config file must hold a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() == "model") mc.update_from_json(*it);
      else if (it.key() == "train") tc.update_from_json(*it);
      else throw InvalidInput("unknown config section '" + it.key() + "'");
    }
  }
  if (o.epochs) tc.epochs = *o.epochs;
  if (o.batch_size) tc.batch_size = *o.batch_size;
  if (o.patience) tc.patience = *o.patience;
  if (o.seed) tc.seed = *o.seed;
  if (o.lr) tc.lr = *o.lr;
  if (o.hidden) mc.hidden = *o.hidden;
  if (o.emb_dim) mc.emb_dim = *o.emb_dim;
  if (o.proj_dim) mc.proj_dim = *o.proj_dim;
  if (o.dropout) mc.dropout = *o.dropout;
  if (o.ablation) mc.ablation = model::ablation_from_string(*o.ablation);
  return {mc, tc};
}

struct IngestArgs {
  std::string in, out;
};

inline int cmd_ingest(const IngestArgs& a, std::ostream& out, const Log& log) {
  std::vector<std::string> warnings;
  corpus::IngestStats st;
  const auto pairs = corpus::ingest_directory(a.in, {}, &warnings, &st);
  for (const auto& w : warnings) log.info(w);
  write_pairs(a.out, pairs);
  out << "notebooks " << st.notebooks << ", skipped malformed " << st.skipped_malformed << ", skipped non-English "
      << st.skipped_non_english << ", pairs " << st.pairs << '\n';
  return 0;
}

struct SplitArgs {
  std::string in, prefix;
  std::uint64_t seed = 1;
};

inline int cmd_split(const SplitArgs& a, std::ostream& out, const Log&) {
  const auto pairs = read_pairs(a.in);
  const auto sp = corpus::split_dataset(pairs, a.seed);
  write_pairs(split_path(a.prefix, "train"), sp.train);
  write_pairs(split_path(a.prefix, "dev"), sp.dev);
  write_pairs(split_path(a.prefix, "test"), sp.test);
  out << "train " << sp.train.size() << ", dev " << sp.dev.size() << ", test " << sp.test.size() << '\n';
  return 0;
}

struct TrainArgs {
  std::string config, data, out, metrics;
  TrainOverrides over;
};

inline int cmd_train(const TrainArgs& a, std::ostream& out, const Log& log) {
  auto [mc, tc] = effective_config(a.config, a.over);
  const auto train_pairs = read_pairs(split_path(a.data, "train"));
  const auto dev_pairs = read_pairs(split_path(a.data, "dev"));
  model::VocabSizes caps;
  if (mc.code_vocab) caps.code = mc.code_vocab;
  if (mc.ast_vocab) caps.ast = mc.ast_vocab;
  if (mc.doc_vocab) caps.doc = mc.doc_vocab;
  const auto vocabs = model::build_vocabularies(train_pairs, caps);
  mc = model::with_vocab_sizes(mc, vocabs);
  mc.validate();
  tc.validate();
  log.info("effective config " + nlohmann::ordered_json{{"model", mc.to_json()}, {"train", tc.to_json()}}.dump());

  const fs::path ckpt = a.out;
  const std::string stem = ckpt.string();
  write_text(stem + ".vocab.code.json", vocabs.code.to_json("code", caps.code).dump(1) + "\n");
  write_text(stem + ".vocab.ast.json", vocabs.ast.to_json("ast", caps.ast).dump(1) + "\n");
  write_text(stem + ".vocab.doc.json", vocabs.doc.to_json("doc", caps.doc).dump(1) + "\n");

  const auto tr = model::prepare_pairs(train_pairs, vocabs, mc);
  const auto dev = model::prepare_pairs(dev_pairs, vocabs, mc);
  const fs::path metrics = a.metrics.empty() ? fs::path(stem + ".metrics.jsonl") : fs::path(a.metrics);
  std::ofstream mlog(metrics, std::ios::binary);
  if (!mlog) throw DataError("cannot write " + metrics.string());
  auto metadata = [&](std::size_t epoch) {
    return nlohmann::json{{"train", tc.to_json()}, {"best_epoch", epoch}, {"train_pairs", tr.size()}};
  };
  const auto res = training::train(tr, dev, tc, mc, [&](const training::EpochMetrics& em, const model::Model& best,
                                                        bool improved) {
    mlog << em.to_json().dump() << '\n' << std::flush;
    log.info("epoch " + std::to_string(em.epoch) + " train_loss " + std::to_string(em.train_loss) + " dev_loss " +
             std::to_string(em.dev_loss));
    if (improved) model::save_checkpoint(ckpt, best, vocabs, metadata(em.epoch));
  });
  if (res.best_epoch == 0) model::save_checkpoint(ckpt, res.best, vocabs, metadata(0));
  out << "best epoch " << res.best_epoch << " of " << res.history.size() << (res.stopped_early ? " (stopped early)" : "")
      << ", checkpoint " << ckpt.string() << '\n';
  return 0;
}

struct EvalArgs {
  std::vector<std::string> ckpts;
  std::string test, ablation, format = "table", report, predictions;
};

inline int cmd_eval(const EvalArgs& a, std::ostream& out, const Log& log) {
  const auto test_pairs = read_pairs(a.test);
  eval::ReportRows rows;
  std::ofstream preds;
  if (!a.predictions.empty()) {
    preds.open(a.predictions, std::ios::binary);
    if (!preds) throw DataError("cannot write " + a.predictions);
  }
  for (const auto& path : a.ckpts) {
    const auto ck = model::load_checkpoint(path);
    const std::string name(model::to_string(ck.model.config().ablation));
    if (!a.ablation.empty() && name != a.ablation) {
      log.debug(path + ": ablation " + name + " not selected");
      continue;
    }
    const auto prepared = model::prepare_pairs(test_pairs, ck.vocabs, ck.model.config());
    const auto rep = eval::evaluate_corpus(ck.model, ck.vocabs.doc, prepared);
    log.info(path + ": " + std::to_string(rep.pairs.size()) + " pairs decoded");
    for (std::size_t i = 0; preds && i < rep.pairs.size(); ++i) {
      const auto& p = rep.pairs[i];
      preds << nlohmann::ordered_json{{"model", name},
                                      {"id", p.id},
                                      {"hypothesis", p.hypothesis},
                                      {"reference", prepared[i].reference},
                                      {"rouge1_f1", p.rouge1.f1}}
                   .dump()
            << '\n';
    }
    rows.emplace_back(name, rep.mean);
  }
  if (rows.empty()) throw DataError("no checkpoint with ablation '" + a.ablation + "'");
  const auto j = eval::report_json(rows);
  if (!a.report.empty()) write_text(a.report, j.dump(2) + "\n");
  if (a.format == "json") out << j.dump(2) << '\n';
  else out << eval::report_table(rows);
  return 0;
}

struct InferArgs {
  std::string ckpt, cells;
  bool json = false;
};

inline int cmd_infer(const InferArgs& a, std::ostream& out, const Log&) {
  const auto cells = read_json_file(a.cells);
  if (!cells.is_array()) throw DataError(a.cells + ": expected a JSON list of code strings");
  service::SuggestRequest req;
  try {
    req = service::parse_suggest_request(nlohmann::json{{"cells", cells}}.dump());
  } catch (const service::RequestError& e) {
    throw DataError(a.cells + ": " + e.what());
  }
  const service::SuggestEngine engine(model::load_checkpoint(a.ckpt));
  const auto res = engine.suggest(req);
  if (a.json) {
    out << res.dump(2) << '\n';
  } else {
    for (const auto& c : res["candidates"]) {
      if (c["kind"] == "generated") out << c["text"].get<std::string>() << '\n';
    }
  }
  return 0;
}

struct AttnArgs {
  std::string ckpt, data, pair_id, out;
};

inline int cmd_attn(const AttnArgs& a, std::ostream& out, const Log&) {
  const auto pairs = read_pairs(a.data);
  const auto it = std::find_if(pairs.begin(), pairs.end(), [&](const auto& p) { return p.id == a.pair_id; });
  if (it == pairs.end()) throw DataError("pair '" + a.pair_id + "' not found in " + a.data);
  const auto ck = model::load_checkpoint(a.ckpt);
  const auto prepared = model::prepare_pair(*it, ck.vocabs, ck.model.config());
  const auto dec = model::greedy_decode(ck.model, prepared.inputs);
  auto j = eval::export_attention(dec.trace, prepared.inputs, it->code_cells);
  j["pair_id"] = a.pair_id;
  j["generated"] = model::detokenize(dec.ids, ck.vocabs.doc);
  j["reference"] = it->doc_tokens;
  write_text(a.out, j.dump() + "\n");
  out << "wrote " << a.out << '\n';
  return 0;
}

struct ServeArgs {
  std::string ckpt, host = "127.0.0.1";
  int port = 8080;
};

inline int cmd_serve(const ServeArgs& a, std::ostream& out, const Log& log) {
  std::shared_ptr<const service::SuggestEngine> engine;
  if (!a.ckpt.empty()) engine = std::make_shared<const service::SuggestEngine>(model::load_checkpoint(a.ckpt));
  else log.info("no checkpoint given; model routes answer 503");
  service::SuggestServer server(engine);
  const int port = server.bind(a.host, a.port);
  if (port < 0) throw DataError("cannot bind " + a.host + ":" + std::to_string(a.port));
  out << "serving on http://" << a.host << ":" << port << '\n' << std::flush;
  return server.listen() ? 0 : 2;
}

struct FixtureArgs {
  std::string out;
  std::size_t notebooks = 125, sections = 4;
  std::uint64_t seed = 1;
};

// Writes synthetic notebooks for desk-scale runs.
inline int cmd_fixture(const FixtureArgs& a, std::ostream& out, const Log&) {
  fs::create_directories(a.out);
  const auto books = corpus::generate_synthetic_notebooks(a.notebooks, a.sections, a.seed);
  for (std::size_t i = 0; i < books.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "nb_%05zu.ipynb", i);
    write_text(fs::path(a.out) / name, corpus::to_notebook_json(books[i]).dump(1) + "\n");
  }
  out << "wrote " << books.size() << " notebooks to " << a.out << '\n';
  return 0;
}

// Runs the command line; returns the process exit code (0 success, 1 usage
// error, 2 data or model error).
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const Log log(err, log_level_from_env());
  CLI::App app{"Documentation generation for notebook code cells"};
  app.name("nbdoc");
  app.require_subcommand(1);

  IngestArgs ia;
  auto* ingest = app.add_subcommand("ingest", "Extract documentation/code pairs from notebooks");
  ingest->add_option("--in", ia.in, "Directory searched recursively for .ipynb files")->required();
  ingest->add_option("--out", ia.out, "Output JSON-lines corpus")->required();

  SplitArgs sa;
  auto* split = app.add_subcommand("split", "Shuffle a corpus into train/dev/test files");
  split->add_option("--in", sa.in, "JSON-lines corpus")->required();
  split->add_option("--seed", sa.seed, "Shuffle seed")->required();
  split->add_option("--out-prefix", sa.prefix, "Writes PREFIX.{train,dev,test}.jsonl")->required();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a model and keep the checkpoint with the best dev loss");
  train->add_option("--config", ta.config, "JSON config {\"model\": {...}, \"train\": {...}}");
  train->add_option("--data", ta.data, "Split prefix given to `split`")->required();
  train->add_option("--out", ta.out, "Checkpoint path")->required();
  train->add_option("--metrics", ta.metrics, "Metrics JSON-lines (default CKPT.metrics.jsonl)");
  train->add_option("--epochs", ta.over.epochs);
  train->add_option("--seed", ta.over.seed);
  train->add_option("--lr", ta.over.lr);
  train->add_option("--batch-size", ta.over.batch_size);
  train->add_option("--patience", ta.over.patience);
  train->add_option("--hidden", ta.over.hidden);
  train->add_option("--emb-dim", ta.over.emb_dim);
  train->add_option("--proj-dim", ta.over.proj_dim);
  train->add_option("--dropout", ta.over.dropout);
  train->add_option("--ablation", ta.over.ablation, "full, no_high_with_uniform, no_high_no_uniform or flat_gnn");

  EvalArgs ea;
  auto* evalc = app.add_subcommand("eval", "Greedy-decode a test file and report ROUGE");
  evalc->add_option("--ckpt", ea.ckpts, "Checkpoint (repeat for one table row per model)")->required();
  evalc->add_option("--test", ea.test, "JSON-lines test pairs")->required();
  evalc->add_option("--ablation", ea.ablation, "Only report checkpoints of this ablation");
  evalc->add_option("--format", ea.format, "table or json")->check(CLI::IsMember({"table", "json"}));
  evalc->add_option("--report", ea.report, "Also write the JSON report here");
  evalc->add_option("--predictions", ea.predictions, "Write per-pair hypotheses as JSON lines");

  InferArgs na;
  auto* infer = app.add_subcommand("infer", "Suggest documentation for up to four code cells");
  infer->add_option("--ckpt", na.ckpt)->required();
  infer->add_option("--cells", na.cells, "JSON list of up to 4 code strings")->required();
  infer->add_flag("--json", na.json, "Print the full suggestion response");

  AttnArgs aa;
  auto* attn = app.add_subcommand("attn", "Export the attention heatmap of one pair");
  attn->add_option("--ckpt", aa.ckpt)->required();
  attn->add_option("--data", aa.data, "JSON-lines file holding the pair")->required();
  attn->add_option("--pair-id", aa.pair_id)->required();
  attn->add_option("--out", aa.out, "Heatmap JSON")->required();

  ServeArgs va;
  auto* serve = app.add_subcommand("serve", "Serve /suggest and /health over HTTP");
  serve->add_option("--ckpt", va.ckpt, "Checkpoint; without one the model routes answer 503");
  serve->add_option("--port", va.port, "Port (0 picks a free one)");
  serve->add_option("--host", va.host);

  FixtureArgs fa;
  auto* fixture = app.add_subcommand("fixture", "Write synthetic notebooks");
  fixture->add_option("--out", fa.out, "Output directory")->required();
  fixture->add_option("--notebooks", fa.notebooks);
  fixture->add_option("--sections", fa.sections, "Markdown/code sections per notebook");
  fixture->add_option("--seed", fa.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*ingest) return cmd_ingest(ia, out, log);
    if (*split) return cmd_split(sa, out, log);
    if (*train) return cmd_train(ta, out, log);
    if (*evalc) return cmd_eval(ea, out, log);
    if (*infer) return cmd_infer(na, out, log);
    if (*attn) return cmd_attn(aa, out, log);
    if (*serve) return cmd_serve(va, out, log);
    if (*fixture) return cmd_fixture(fa, out, log);
  } catch (const std::exception& e) {
    log.error(e.what());
    return 2;
  }
  return 1;
}

}  // namespace nbdoc::cli
