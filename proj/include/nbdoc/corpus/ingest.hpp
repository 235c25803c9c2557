#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nbdoc/corpus/notebook.hpp"
#include "nbdoc/corpus/pairs.hpp"
#include "nbdoc/errors.hpp"

namespace nbdoc::corpus {

struct IngestStats {
  std::size_t notebooks = 0;
  std::size_t skipped_non_english = 0;
  std::size_t skipped_malformed = 0;
  std::size_t pairs = 0;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ParseError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Extracts pairs from every *.ipynb below `root`, visiting files in sorted
// relative-path order. Pair ids are prefixed with the relative path.
// Malformed and non-English notebooks are skipped with a warning.
inline std::vector<CodeDocPair> ingest_directory(const std::filesystem::path& root, ExtractOptions opt = {},
                                                 std::vector<std::string>* warnings = nullptr,
                                                 IngestStats* stats = nullptr) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw ParseError(root.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ".ipynb") files.push_back(e.path());
  }
  std::vector<std::string> rel;
  for (const auto& f : files) rel.push_back(fs::relative(f, root).generic_string());
  std::sort(rel.begin(), rel.end());

  IngestStats st;
  std::vector<CodeDocPair> out;
  for (const auto& r : rel) {
    ++st.notebooks;
    ParsedNotebook nb;
    try {
      nb = parse_notebook(read_file(root / r));
    } catch (const ParseError& e) {
      ++st.skipped_malformed;
      if (warnings) warnings->push_back(r + ": skipped: " + e.what());
      continue;
    }
    if (!nb.english) {
      ++st.skipped_non_english;
      if (warnings) warnings->push_back(r + ": skipped: not English");
      continue;
    }
    opt.id_prefix = r;
    auto pairs = extract_pairs(nb.cells, opt, warnings);
    for (auto& p : pairs) out.push_back(std::move(p));
  }
  st.pairs = out.size();
  if (stats) *stats = st;
  return out;
}

}  // namespace nbdoc::corpus
