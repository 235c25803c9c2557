#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nbdoc/errors.hpp"

namespace nbdoc::corpus {

enum class CellKind { markdown, code };

struct NotebookCell {
  CellKind kind = CellKind::code;
  std::string source;
  std::size_t index = 0;  // position in the notebook's cell array

  friend bool operator==(const NotebookCell&, const NotebookCell&) = default;
};

struct ParsedNotebook {
  std::vector<NotebookCell> cells;
  // False when the markdown text looks non-English (ASCII letters make up
  // less than half of all letters). Callers decide whether to drop it.
  bool english = true;
};

namespace detail {

inline std::string cell_source(const nlohmann::json& cell) {
  const auto it = cell.find("source");
  if (it == cell.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_array()) {
    std::string out;
    for (const auto& line : *it) {
      if (!line.is_string()) throw ParseError("cell source array holds a non-string entry");
      out += line.get_ref<const std::string&>();
    }
    return out;
  }
  throw ParseError("cell source is neither a string nor an array");
}

}  // namespace detail

// Fraction of ASCII letters among letter-like code points (ASCII letters
// plus every non-ASCII code point). Returns 1 for text without letters.
inline double ascii_letter_fraction(std::string_view text) {
  std::size_t ascii = 0, other = 0;
  for (unsigned char c : text) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
      ++ascii;
    } else if (c >= 0xC0) {  // UTF-8 lead byte
      ++other;
    }
  }
  if (ascii + other == 0) return 1.0;
  return static_cast<double>(ascii) / static_cast<double>(ascii + other);
}

// Reads an nbformat-4 notebook. Raw cells are skipped; markdown and code
// cells keep their position in the original cell array.
inline ParsedNotebook parse_notebook(std::string_view bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("notebook is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("notebook root is not an object");
  const auto cells = doc.find("cells");
  if (cells == doc.end() || !cells->is_array()) throw ParseError("notebook has no cells array");

  ParsedNotebook nb;
  std::string markdown_text;
  for (std::size_t i = 0; i < cells->size(); ++i) {
    const auto& cell = (*cells)[i];
    if (!cell.is_object()) throw ParseError("cell " + std::to_string(i) + " is not an object");
    const std::string type = cell.value("cell_type", "");
    NotebookCell out;
    if (type == "markdown") {
      out.kind = CellKind::markdown;
    } else if (type == "code") {
      out.kind = CellKind::code;
    } else {
      continue;
    }
    out.source = detail::cell_source(cell);
    out.index = i;
    if (out.kind == CellKind::markdown) {
      markdown_text += out.source;
      markdown_text += '\n';
    }
    nb.cells.push_back(std::move(out));
  }
  nb.english = ascii_letter_fraction(markdown_text) >= 0.5;
  return nb;
}

// Inverse of parse_notebook for the fields it keeps.
inline nlohmann::json to_notebook_json(const std::vector<NotebookCell>& cells) {
  nlohmann::json out;
  out["nbformat"] = 4;
  out["nbformat_minor"] = 5;
  out["metadata"] = nlohmann::json::object();
  out["cells"] = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json j;
    j["cell_type"] = c.kind == CellKind::markdown ? "markdown" : "code";
    j["metadata"] = nlohmann::json::object();
    j["source"] = c.source;
    if (c.kind == CellKind::code) {
      j["outputs"] = nlohmann::json::array();
      j["execution_count"] = nullptr;
    }
    out["cells"].push_back(std::move(j));
  }
  return out;
}

}  // namespace nbdoc::corpus
