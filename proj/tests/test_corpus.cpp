#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "nbdoc/corpus/dataset.hpp"
#include "nbdoc/corpus/ingest.hpp"
#include "nbdoc/corpus/markdown.hpp"
#include "nbdoc/corpus/notebook.hpp"
#include "nbdoc/corpus/pairs.hpp"
#include "nbdoc/corpus/split.hpp"
#include "nbdoc/corpus/synthetic.hpp"
#include "nbdoc/corpus/tokenize.hpp"
#include "nbdoc/corpus/vocab.hpp"
#include "support/fixture_expect.hpp"

using namespace nbdoc;
using namespace nbdoc::corpus;

namespace {

std::vector<NotebookCell> cells_of(std::initializer_list<std::pair<CellKind, std::string>> spec) {
  std::vector<NotebookCell> out;
  for (const auto& [k, s] : spec) out.push_back({k, s, out.size()});
  return out;
}

constexpr auto md = CellKind::markdown;
constexpr auto code = CellKind::code;

}  // namespace

TEST(Tokenize, CodeExamples) {
  EXPECT_EQ(tokenize_code("nn_model(X_train)"), (Tokens{"nn", "model", "x", "train"}));
  EXPECT_EQ(tokenize_code("%matplotlib inline\nx=1"), (Tokens{"x", "NUM"}));
  EXPECT_TRUE(tokenize_code("").empty());
}

TEST(Tokenize, CodeDetails) {
  EXPECT_EQ(tokenize_code("getHTTPResponse"), (Tokens{"get", "httpresponse"}));
  EXPECT_EQ(tokenize_code("s = 'hi there' + \"x\""), (Tokens{"s", "STR", "STR"}));
  EXPECT_EQ(tokenize_code("y = 3.5e-2 + 0x1F"), (Tokens{"y", "NUM", "NUM"}));
  EXPECT_EQ(tokenize_code("  !pip install x\nprint(1)  # show it"),
            (Tokens{"print", "NUM", "show", "it"}));
}

TEST(Tokenize, CodeCap) {
  std::string src;
  for (int i = 0; i < 600; ++i) src += "a ";
  EXPECT_EQ(tokenize_code(src).size(), kMaxCodeTokens);
}

TEST(Tokenize, DocExamples) {
  EXPECT_EQ(tokenize_doc("Implementing Neural Network"), (Tokens{"implementing", "neural", "network"}));
  EXPECT_EQ(tokenize_doc("Plot the model s performance"),
            (Tokens{"plot", "the", "model", "s", "performance"}));
  EXPECT_TRUE(tokenize_doc("").empty());
  EXPECT_EQ(tokenize_doc("Don't split_snake, please!"), (Tokens{"don", "t", "split", "snake", "please"}));
}

TEST(Tokenize, DocCap) {
  std::string text;
  for (int i = 0; i < 80; ++i) text += "word ";
  EXPECT_EQ(tokenize_doc(text).size(), kMaxDocTokens);
}

TEST(Markdown, Headline) {
  const auto c = classify_markdown("# Implementing Neural Network");
  EXPECT_EQ(c.category, MarkdownCategory::Headline);
  EXPECT_EQ(c.doc_text, "Implementing Neural Network");
}

TEST(Markdown, Result) {
  const auto c = classify_markdown("The table shows survival correlates with class. More text. Even more.");
  EXPECT_EQ(c.category, MarkdownCategory::Result);
  EXPECT_EQ(c.doc_text, "The table shows survival correlates with class.");
}

TEST(Markdown, ResultKeepsOnlyKeywordSentences) {
  const auto c = classify_markdown("Intro. We see that it works! Unrelated? The plot above is nice.");
  EXPECT_EQ(c.category, MarkdownCategory::Result);
  EXPECT_EQ(c.doc_text, "We see that it works! The plot above is nice.");
}

TEST(Markdown, KeywordsAreWholeWords) {
  const auto c = classify_markdown("Showcase the resultant data.");
  EXPECT_EQ(c.category, MarkdownCategory::Process);
}

TEST(Markdown, Reason) {
  const auto c = classify_markdown("We do X because Y. Background on Y. History of Y.");
  EXPECT_EQ(c.category, MarkdownCategory::Reason);
  EXPECT_EQ(c.doc_text, "We do X because Y.");
}

TEST(Markdown, ProcessStripsMarkup) {
  const auto c = classify_markdown("Use **bold** and [a link](http://x.org) <b>here</b>.\nSecond line.");
  EXPECT_EQ(c.category, MarkdownCategory::Process);
  EXPECT_EQ(c.doc_text, "Use bold and a link here. Second line.");
}

TEST(Markdown, CustomKeywords) {
  MarkdownRules rules;
  rules.result_keywords = {"reveals"};
  EXPECT_EQ(classify_markdown("This reveals a trend. A. B.", rules).category, MarkdownCategory::Result);
  EXPECT_EQ(classify_markdown("This shows a trend.", rules).category, MarkdownCategory::Process);
}

TEST(Markdown, OtherWhenNothingLeft) {
  EXPECT_EQ(classify_markdown("<br>").category, MarkdownCategory::Other);
}

TEST(Notebook, ParsesCellsInOrder) {
  const auto nb = parse_notebook(R"({"cells":[
    {"cell_type":"markdown","source":["# Title\n","more"]},
    {"cell_type":"raw","source":"r"},
    {"cell_type":"code","source":"x = 1"}]})");
  ASSERT_EQ(nb.cells.size(), 2u);
  EXPECT_EQ(nb.cells[0].kind, CellKind::markdown);
  EXPECT_EQ(nb.cells[0].source, "# Title\nmore");
  EXPECT_EQ(nb.cells[1].kind, CellKind::code);
  EXPECT_EQ(nb.cells[1].index, 2u);
  EXPECT_TRUE(nb.english);
}

TEST(Notebook, EmptyAndErrors) {
  EXPECT_TRUE(parse_notebook(R"({"cells":[]})").cells.empty());
  EXPECT_THROW(parse_notebook(R"({"cells":[)"), ParseError);
  EXPECT_THROW(parse_notebook(R"({"metadata":{}})"), ParseError);
  EXPECT_THROW(parse_notebook("[]"), ParseError);
}

TEST(Notebook, NonEnglishFlag) {
  const auto nb = parse_notebook(R"({"cells":[{"cell_type":"markdown","source":"数据分析和可视化 ok"}]})");
  EXPECT_FALSE(nb.english);
}

TEST(Notebook, ExportRoundTrip) {
  const auto cells = cells_of({{md, "# T\nline two"}, {code, "x = 1\n"}, {md, ""}});
  const auto back = parse_notebook(to_notebook_json(cells).dump());
  EXPECT_EQ(back.cells.size(), cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    EXPECT_EQ(back.cells[i].kind, cells[i].kind);
    EXPECT_EQ(back.cells[i].source, cells[i].source);
    EXPECT_EQ(back.cells[i].index, i);
  }
  EXPECT_TRUE(parse_notebook(to_notebook_json({}).dump()).cells.empty());
}

TEST(Pairs, RunsAndCap) {
  auto p = extract_pairs(cells_of({{md, "First"}, {code, "a = 1"}, {code, "b = 2"}, {md, "Second"}, {code, "c"}}));
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].n_real_cells, 2u);
  EXPECT_EQ(p[1].n_real_cells, 1u);
  EXPECT_EQ(p[0].id, "#0");
  EXPECT_EQ(p[1].id, "#3");

  p = extract_pairs(cells_of({{md, "Doc"}, {code, "a"}, {code, "b"}, {code, "c"}, {code, "d"}, {code, "e"}}));
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].n_real_cells, 4u);
  EXPECT_EQ(p[0].code_cells[3], Tokens{"d"});

  EXPECT_TRUE(extract_pairs(cells_of({{code, "a"}, {code, "b"}})).empty());
  EXPECT_TRUE(extract_pairs({}).empty());
}

TEST(Pairs, PaddingAndGraphs) {
  const auto p = extract_pairs(cells_of({{md, "Doc"}, {code, "x = 1"}}));
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].code_cells[0], (Tokens{"x", "NUM"}));
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_TRUE(p[0].code_cells[i].empty());
    EXPECT_TRUE(p[0].graphs[i].is_empty());
  }
  EXPECT_EQ(p[0].graphs[0].node_tokens, (std::vector<std::string>{"module", "assign", "name", "x", "num"}));
  const auto b = graph_bundle(p[0]);
  EXPECT_EQ(b.cell_mask, (std::array<bool, 4>{true, false, false, false}));
}

TEST(Pairs, DropsEmptyDocsAndMagicOnlyCells) {
  std::vector<std::string> warnings;
  const auto p = extract_pairs(
      cells_of({{md, "!!!"}, {code, "x"}, {md, "Doc"}, {code, "%time"}, {code, "def f(:"}, {md, "Tail"}, {code, "!ls"}}),
      {}, &warnings);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].id, "#2");
  EXPECT_EQ(p[0].n_real_cells, 1u);
  EXPECT_EQ(p[0].code_cells[0], (Tokens{"def", "f"}));
  EXPECT_TRUE(p[0].graphs[0].is_empty());
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("#2"), std::string::npos);
}

TEST(Pairs, InvariantsOnSyntheticCorpus) {
  for (const auto& nb : generate_synthetic_notebooks(30, 6, 11)) {
    for (const auto& p : extract_pairs(nb)) {
      EXPECT_GE(p.n_real_cells, 1u);
      EXPECT_LE(p.n_real_cells, 4u);
      EXPECT_FALSE(p.doc_tokens.empty());
      EXPECT_LE(p.doc_tokens.size(), kMaxDocTokens);
      for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_LE(p.code_cells[i].size(), kMaxCodeTokens);
        if (i >= p.n_real_cells) {
          EXPECT_TRUE(p.code_cells[i].empty());
          EXPECT_TRUE(p.graphs[i].is_empty());
        }
        EXPECT_TRUE(ast::is_tree(p.graphs[i]));
      }
    }
  }
}

TEST(Pairs, Deterministic) {
  const auto nbs = generate_synthetic_notebooks(10, 5, 3);
  std::ostringstream a, b;
  for (const auto& nb : nbs) write_jsonl(a, extract_pairs(nb));
  for (const auto& nb : generate_synthetic_notebooks(10, 5, 3)) write_jsonl(b, extract_pairs(nb));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Vocab, Examples) {
  const auto v = build_vocab({{"a", "b", "a"}}, 10);
  ASSERT_EQ(v.size(), 6u);
  EXPECT_EQ(v.id("<pad>"), 0);
  EXPECT_EQ(v.id("<unk>"), 1);
  EXPECT_EQ(v.id("<s>"), 2);
  EXPECT_EQ(v.id("</s>"), 3);
  EXPECT_EQ(v.id("a"), 4);
  EXPECT_EQ(v.id("b"), 5);
  EXPECT_EQ(build_vocab({}, 10).size(), 4u);
  const auto t = build_vocab({{"y", "x"}}, 10);
  EXPECT_EQ(t.id("x"), 4);
  EXPECT_EQ(t.id("y"), 5);
}

TEST(Vocab, CapAndUnknown) {
  const auto v = build_vocab({{"a", "a", "a", "b", "b", "c"}}, 6);
  EXPECT_EQ(v.size(), 6u);
  EXPECT_EQ(v.id("c"), Vocabulary::kUnk);
  EXPECT_EQ(v.encode({"a", "zzz", "b"}), (std::vector<int>{4, 1, 5}));
  EXPECT_THROW(build_vocab({}, 4), InvalidInput);
  EXPECT_THROW(v.token(6), OutOfRange);
  EXPECT_THROW(v.token(-1), OutOfRange);
}

TEST(Vocab, RoundTripAndJson) {
  std::vector<Tokens> corpus;
  util::Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    Tokens t;
    for (int j = 0; j < 20; ++j) t.push_back("t" + std::to_string(rng.below(40)));
    corpus.push_back(t);
  }
  const auto v = build_vocab(corpus, 30);
  EXPECT_LE(v.size(), 30u);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(v.id(v.token(static_cast<int>(i))), static_cast<int>(i));
  }
  const auto back = Vocabulary::from_json(nlohmann::json::parse(v.to_json("doc", 30).dump()));
  EXPECT_EQ(back.tokens(), v.tokens());
  EXPECT_EQ(back.content_hash(), v.content_hash());

  auto j = nlohmann::json::parse(v.to_json("doc", 30).dump());
  j["meta"]["hash"] = "0000000000000000";
  EXPECT_THROW(Vocabulary::from_json(j), ParseError);
}

TEST(Split, Sizes) {
  std::vector<int> ten(10);
  std::iota(ten.begin(), ten.end(), 0);
  const auto s = split_dataset(ten, 1);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.dev.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);

  const auto big = split_dataset(std::vector<int>(28625), 1);
  EXPECT_EQ(big.train.size(), 22901u);
  EXPECT_EQ(big.dev.size(), 2862u);
  EXPECT_EQ(big.test.size(), 2862u);
}

TEST(Split, PartitionAndDeterminism) {
  for (std::size_t n : {0u, 1u, 9u, 10u, 37u, 101u}) {
    std::vector<int> items(n);
    std::iota(items.begin(), items.end(), 0);
    const auto a = split_dataset(items, 42);
    const auto b = split_dataset(items, 42);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.dev, b.dev);
    EXPECT_EQ(a.test, b.test);
    std::multiset<int> all(a.train.begin(), a.train.end());
    all.insert(a.dev.begin(), a.dev.end());
    all.insert(a.test.begin(), a.test.end());
    EXPECT_EQ(all, std::multiset<int>(items.begin(), items.end()));
    EXPECT_EQ(a.dev.size(), n / 10);
    EXPECT_EQ(a.test.size(), n / 10);
  }
  std::vector<int> items(100);
  std::iota(items.begin(), items.end(), 0);
  EXPECT_NE(split_dataset(items, 1).train, split_dataset(items, 2).train);
}

TEST(Dataset, JsonlRoundTrip) {
  std::vector<CodeDocPair> pairs;
  for (const auto& nb : generate_synthetic_notebooks(5, 4, 9)) {
    for (auto& p : extract_pairs(nb)) pairs.push_back(std::move(p));
  }
  std::stringstream ss;
  write_jsonl(ss, pairs);
  EXPECT_EQ(read_jsonl(ss), pairs);
}

TEST(Dataset, RecordFields) {
  const auto p = extract_pairs(cells_of({{md, "Doc"}, {code, "x = 1"}}));
  const auto j = pair_to_json(p.at(0));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"id", "doc_tokens", "code_cells", "n_real_cells", "ast_nodes",
                                            "ast_edges"}));
  EXPECT_EQ(j["ast_edges"][0].dump(), "[[0,1],[1,2],[2,3],[1,4]]");
}

TEST(Dataset, RejectsMalformed) {
  std::stringstream bad("{\"id\": 1}\n");
  EXPECT_THROW(read_jsonl(bad), ParseError);
  std::stringstream junk("not json\n");
  EXPECT_THROW(read_jsonl(junk), ParseError);
}

// Hand-derived expectations for the fixture notebooks under data/notebooks.
TEST(Fixture, IngestDirectory) {
  for (const auto& m : nbdoc::testing::check_fixture_ingest(std::string(NBDOC_TEST_DATA) + "/notebooks")) {
    ADD_FAILURE() << m;
  }
}
