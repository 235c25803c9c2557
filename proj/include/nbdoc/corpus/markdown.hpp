#pragma once

#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nbdoc/corpus/tokenize.hpp"

namespace nbdoc::corpus {

enum class MarkdownCategory { Process, Headline, Result, Reason, Education, Other };

inline std::string_view to_string(MarkdownCategory c) {
  switch (c) {
    case MarkdownCategory::Process: return "Process";
    case MarkdownCategory::Headline: return "Headline";
    case MarkdownCategory::Result: return "Result";
    case MarkdownCategory::Reason: return "Reason";
    case MarkdownCategory::Education: return "Education";
    case MarkdownCategory::Other: return "Other";
  }
  return "Other";
}

struct MarkdownRules {
  // Phrases marking a sentence that interprets a rendered result. Matched
  // as whole-word sequences, case-insensitively.
  std::vector<std::string> result_keywords = {"shows", "show", "indicates", "see that", "result",
                                              "plot above"};
  // A non-result cell with more than this many sentences keeps only its
  // first sentence.
  std::size_t long_cell_sentences = 2;
};

struct ClassifiedMarkdown {
  MarkdownCategory category = MarkdownCategory::Other;
  std::string doc_text;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = s.find('\n', pos);
    if (end == std::string_view::npos) {
      lines.emplace_back(s.substr(pos));
      break;
    }
    lines.emplace_back(s.substr(pos, end - pos));
    pos = end + 1;
  }
  return lines;
}

inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending = false;
  for (unsigned char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

inline std::string strip_line_markup(std::string line) {
  static const std::regex heading(R"(^\s{0,3}#{1,6}\s*)");
  static const std::regex quote(R"(^\s*>+\s?)");
  static const std::regex bullet(R"(^\s*(?:[-*+]|\d+[.)])\s+)");
  static const std::regex rule(R"(^\s*(?:[-*_]\s*){3,}$)");
  if (std::regex_match(line, rule)) return {};
  line = std::regex_replace(line, heading, "", std::regex_constants::format_first_only);
  line = std::regex_replace(line, quote, "", std::regex_constants::format_first_only);
  line = std::regex_replace(line, bullet, "", std::regex_constants::format_first_only);
  return line;
}

}  // namespace detail

// Removes markdown and inline HTML syntax, keeping the visible text on a
// single whitespace-collapsed line.
inline std::string strip_markdown(std::string_view text) {
  static const std::regex image(R"(!\[([^\]]*)\]\([^)]*\))");
  static const std::regex link(R"(\[([^\]]*)\]\([^)]*\))");
  static const std::regex ref_link(R"(\[([^\]]*)\]\[[^\]]*\])");
  static const std::regex inline_tag(
      R"(</?(?:b|i|em|strong|span|a|code|font|u|sup|sub|mark|small)\b[^>]*>)",
      std::regex::icase);
  static const std::regex any_tag(R"(<[^>]+>)");
  static const std::regex emphasis(R"(\*+|`+|~~)");
  static const std::regex lead_underscore(R"((^|[\s(\[])_+)");
  static const std::regex trail_underscore(R"(_+($|[\s)\].,:;!?]))");

  std::string joined;
  bool in_fence = false;
  for (auto& raw : detail::split_lines(text)) {
    const std::string t = detail::trim(raw);
    if (t.rfind("```", 0) == 0 || t.rfind("~~~", 0) == 0) {
      in_fence = !in_fence;
      continue;
    }
    joined += in_fence ? raw : detail::strip_line_markup(raw);
    joined += '\n';
  }
  std::string s = std::regex_replace(joined, image, "$1");
  s = std::regex_replace(s, link, "$1");
  s = std::regex_replace(s, ref_link, "$1");
  s = std::regex_replace(s, inline_tag, "");
  s = std::regex_replace(s, any_tag, " ");
  s = std::regex_replace(s, emphasis, "");
  s = std::regex_replace(s, lead_underscore, "$1");
  s = std::regex_replace(s, trail_underscore, "$1");
  for (auto [from, to] : {std::pair{"&nbsp;", " "}, std::pair{"&amp;", "&"},
                          std::pair{"&lt;", "<"}, std::pair{"&gt;", ">"},
                          std::pair{"&quot;", "\""}, std::pair{"&#39;", "'"}}) {
    std::size_t pos = 0;
    const std::string_view f(from);
    while ((pos = s.find(f, pos)) != std::string::npos) {
      s.replace(pos, f.size(), to);
      pos += std::string_view(to).size();
    }
  }
  return detail::collapse_whitespace(s);
}

// Splits on '.', '!' or '?' followed by whitespace; the terminator stays
// with its sentence.
inline std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') && i + 1 < text.size() && detail::is_space(text[i + 1])) {
      auto s = detail::trim(text.substr(start, i + 1 - start));
      if (!s.empty()) out.push_back(std::move(s));
      start = i + 1;
    }
  }
  auto tail = detail::trim(text.substr(start));
  if (!tail.empty()) out.push_back(std::move(tail));
  return out;
}

namespace detail {

inline bool contains_phrase(const Tokens& words, const Tokens& phrase) {
  if (phrase.empty() || phrase.size() > words.size()) return false;
  for (std::size_t i = 0; i + phrase.size() <= words.size(); ++i) {
    bool hit = true;
    for (std::size_t k = 0; k < phrase.size() && hit; ++k) hit = words[i + k] == phrase[k];
    if (hit) return true;
  }
  return false;
}

}  // namespace detail

// Decides which documentation text a markdown cell contributes:
//   Headline  single heading line -> heading text
//   Result    sentences with a result keyword -> only those sentences
//   Reason    more than `long_cell_sentences` sentences -> first sentence
//   Process   anything else -> whole text
// Text that is empty once markup is removed is classified Other.
inline ClassifiedMarkdown classify_markdown(std::string_view text, const MarkdownRules& rules = {}) {
  std::vector<std::string> nonblank;
  for (auto& line : detail::split_lines(text)) {
    auto t = detail::trim(line);
    if (!t.empty()) nonblank.push_back(std::move(t));
  }
  if (nonblank.size() == 1 && nonblank.front().front() == '#') {
    auto heading = strip_markdown(nonblank.front());
    if (!heading.empty()) return {MarkdownCategory::Headline, std::move(heading)};
  }

  const std::string plain = strip_markdown(text);
  if (plain.empty()) return {MarkdownCategory::Other, {}};
  const auto sentences = split_sentences(plain);

  std::vector<Tokens> phrases;
  for (const auto& k : rules.result_keywords) phrases.push_back(tokenize_doc(k, SIZE_MAX));
  std::string result;
  for (const auto& s : sentences) {
    const Tokens words = tokenize_doc(s, SIZE_MAX);
    for (const auto& p : phrases) {
      if (detail::contains_phrase(words, p)) {
        if (!result.empty()) result.push_back(' ');
        result += s;
        break;
      }
    }
  }
  if (!result.empty()) return {MarkdownCategory::Result, std::move(result)};
  if (sentences.size() > rules.long_cell_sentences) {
    return {MarkdownCategory::Reason, sentences.front()};
  }
  return {MarkdownCategory::Process, plain};
}

}  // namespace nbdoc::corpus
