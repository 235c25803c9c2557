#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nbdoc/corpus/notebook.hpp"
#include "nbdoc/corpus/pairs.hpp"
#include "nbdoc/util/rng.hpp"

namespace nbdoc::corpus {

// Generator for templated data-analysis notebooks. The documentation of each
// section is a function of identifiers in one of the code cells beneath it,
// so a model has something learnable; distractor cells and magics vary the
// position of that cell.
namespace synthetic {

struct Model {
  const char* cls;
  const char* words;
};

inline constexpr std::array kDatasets = {"titanic", "housing", "iris",  "sales",
                                         "weather", "credit",  "churn", "movies"};
inline constexpr std::array kColumns = {"age",   "price",  "income", "rating", "length",
                                        "width", "score",  "salary", "height", "weight"};
inline constexpr std::array kModels = {
    Model{"LogisticRegression", "logistic regression"}, Model{"RandomForestClassifier", "random forest"},
    Model{"LinearRegression", "linear regression"}, Model{"DecisionTreeClassifier", "decision tree"},
    Model{"GradientBoostingClassifier", "gradient boosting"}};

struct Section {
  std::string doc;
  std::vector<std::string> code;  // main cells, in order
};

template <class A>
const auto& pick(util::Rng& rng, const A& a) {
  return a[rng.below(a.size())];
}

inline Section make_section(util::Rng& rng, const std::string& ds) {
  const std::string df = std::string(ds) + "_df";
  const std::string c1 = pick(rng, kColumns);
  std::string c2 = pick(rng, kColumns);
  while (c2 == c1) c2 = pick(rng, kColumns);
  switch (rng.below(8)) {
    case 0:
      return {"# Load the " + ds + " dataset", {df + " = pd.read_csv(path)\n" + df + ".head()"}};
    case 1:
      return {"Plot the distribution of " + c1, {"plt.hist(" + df + "." + c1 + ", bins=20)\nplt.show()"}};
    case 2: {
      const auto& m = pick(rng, kModels);
      return {std::string("Train a ") + m.words + " model",
              {std::string("model = ") + m.cls + "()", "model.fit(X_train, y_train)"}};
    }
    case 3:
      return {"Compute the correlation between " + c1 + " and " + c2,
              {df + "." + c1 + ".corr(" + df + "." + c2 + ")"}};
    case 4:
      return {"Fill missing " + c1 + " values with zero", {df + "." + c1 + " = " + df + "." + c1 + ".fillna(0)"}};
    case 5:
      return {"## Scatter plot of " + c1 + " against " + c2,
              {"plt.scatter(" + df + "." + c1 + ", " + df + "." + c2 + ")", "plt.show()"}};
    case 6:
      return {"The plot above shows that " + c1 + " is skewed. We will fix it later.",
              {df + "." + c1 + ".skew()"}};
    default:
      return {"Average " + c1 + " for each " + c2 + ". This groups rows first. Then it takes means.",
              {df + ".groupby(" + df + "." + c2 + ")." + c1 + ".mean()"}};
  }
}

inline std::string distractor(util::Rng& rng, const std::string& df) {
  switch (rng.below(5)) {
    case 0: return "%matplotlib inline";
    case 1: return "print(" + df + ".shape)";
    case 2: return "import numpy as np";
    case 3: return df + ".info()";
    default: return "n_rows = len(" + df + ")";
  }
}

}  // namespace synthetic

// Returns `n` notebooks, each with `sections` markdown/code sections.
inline std::vector<std::vector<NotebookCell>> generate_synthetic_notebooks(std::size_t n, std::size_t sections,
                                                                           std::uint64_t seed) {
  util::Rng rng(seed);
  std::vector<std::vector<NotebookCell>> out;
  for (std::size_t k = 0; k < n; ++k) {
    const std::string ds = synthetic::pick(rng, synthetic::kDatasets);
    std::vector<NotebookCell> cells;
    auto add = [&](CellKind kind, std::string src) {
      cells.push_back({kind, std::move(src), cells.size()});
    };
    for (std::size_t s = 0; s < sections; ++s) {
      auto sec = synthetic::make_section(rng, ds);
      std::vector<std::string> code = sec.code;
      const std::size_t extra = rng.below(4 - code.size() + 1);
      for (std::size_t e = 0; e < extra; ++e) {
        const std::size_t at = rng.below(code.size() + 1);
        code.insert(code.begin() + static_cast<std::ptrdiff_t>(at), synthetic::distractor(rng, ds + "_df"));
      }
      add(CellKind::markdown, sec.doc);
      for (auto& c : code) add(CellKind::code, std::move(c));
    }
    out.push_back(std::move(cells));
  }
  return out;
}

// First `n` pairs extracted from generated notebooks of four sections.
inline std::vector<CodeDocPair> synthetic_pairs(std::size_t n, std::uint64_t seed) {
  std::vector<CodeDocPair> out;
  std::size_t nb = 0;
  const std::size_t batch = n / 4 + 1;
  while (out.size() < n) {
    const auto books = generate_synthetic_notebooks(batch, 4, seed + nb);
    for (const auto& cells : books) {
      ExtractOptions opt;
      opt.id_prefix = "synthetic/" + std::to_string(nb++) + ".ipynb";
      for (auto& p : extract_pairs(cells, opt)) {
        if (out.size() < n) out.push_back(std::move(p));
      }
    }
  }
  return out;
}

}  // namespace nbdoc::corpus
