#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace nbdoc::corpus {

using Tokens = std::vector<std::string>;

inline constexpr std::size_t kMaxCodeTokens = 400;
inline constexpr std::size_t kMaxDocTokens = 50;
inline constexpr std::string_view kStringSentinel = "STR";
inline constexpr std::string_view kNumberSentinel = "NUM";

namespace detail {

inline bool is_ascii_alpha(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
inline bool is_lower(unsigned char c) { return c >= 'a' && c <= 'z'; }
inline bool is_upper(unsigned char c) { return c >= 'A' && c <= 'Z'; }
// Bytes of multi-byte UTF-8 sequences count as word characters.
inline bool is_word_byte(unsigned char c) {
  return is_ascii_alpha(c) || is_digit(c) || c >= 0x80;
}
inline char to_lower(char c) {
  return is_upper(static_cast<unsigned char>(c)) ? static_cast<char>(c - 'A' + 'a') : c;
}
inline bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (unsigned char c : s) {
    if (!is_digit(c)) return false;
  }
  return true;
}

}  // namespace detail

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = detail::to_lower(c);
  return out;
}

// Splits an identifier-like string into lowercase subtokens: breaks on any
// non-word byte (so '_' and '.' separate), then at lower->upper camelCase
// boundaries.
inline Tokens split_identifier(std::string_view text) {
  Tokens out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  unsigned char prev = 0;
  for (unsigned char c : text) {
    if (!detail::is_word_byte(c)) {
      flush();
      prev = 0;
      continue;
    }
    if (detail::is_upper(c) && detail::is_lower(prev)) flush();
    cur.push_back(detail::to_lower(static_cast<char>(c)));
    prev = c;
  }
  flush();
  return out;
}

// Removes notebook magics and shell escapes: every line whose first
// non-blank character is '%' or '!'.
inline std::string strip_magic(std::string_view source) {
  std::string out;
  out.reserve(source.size());
  std::size_t pos = 0;
  while (pos <= source.size()) {
    std::size_t end = source.find('\n', pos);
    const bool last = end == std::string_view::npos;
    if (last) end = source.size();
    std::string_view line = source.substr(pos, end - pos);
    std::size_t first = 0;
    while (first < line.size() && (line[first] == ' ' || line[first] == '\t')) ++first;
    const bool magic = first < line.size() && (line[first] == '%' || line[first] == '!');
    if (!magic) out.append(line);
    if (!last) out.push_back('\n');
    if (last) break;
    pos = end + 1;
  }
  return out;
}

namespace detail {

inline bool is_string_prefix(std::string_view p) {
  if (p.empty() || p.size() > 2) return false;
  std::string l = ::nbdoc::corpus::to_lower(p);
  return l == "r" || l == "u" || l == "b" || l == "f" || l == "br" || l == "rb" ||
         l == "fr" || l == "rf";
}

// Returns the index one past the end of the string literal whose opening
// quote is at `q`. Unterminated single-quoted strings end at the newline.
inline std::size_t skip_string_literal(std::string_view s, std::size_t q) {
  const char quote = s[q];
  const bool triple = q + 2 < s.size() && s[q + 1] == quote && s[q + 2] == quote;
  std::size_t i = q + (triple ? 3 : 1);
  while (i < s.size()) {
    const char c = s[i];
    if (c == '\\') {
      i += 2;
      continue;
    }
    if (triple) {
      if (c == quote && i + 2 < s.size() && s[i + 1] == quote && s[i + 2] == quote) {
        return i + 3;
      }
    } else {
      if (c == quote) return i + 1;
      if (c == '\n') return i;
    }
    ++i;
  }
  return s.size();
}

}  // namespace detail

// Code subtokenization: magic lines stripped, string and number literals
// replaced by STR / NUM, identifiers split on '_' and camelCase, everything
// lowercased, punctuation dropped, result capped at `max_tokens`.
inline Tokens tokenize_code(std::string_view source, std::size_t max_tokens = kMaxCodeTokens) {
  using namespace detail;
  const std::string text = strip_magic(source);
  const std::string_view s(text);
  Tokens out;
  auto push = [&](std::string tok) {
    if (out.size() < max_tokens) out.push_back(std::move(tok));
  };
  std::size_t i = 0;
  while (i < s.size() && out.size() < max_tokens) {
    const unsigned char c = s[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == '#') {
      std::size_t end = s.find('\n', i);
      if (end == std::string_view::npos) end = s.size();
      for (auto& t : split_identifier(s.substr(i + 1, end - i - 1))) {
        push(is_all_digits(t) ? std::string(kNumberSentinel) : std::move(t));
      }
      i = end;
      continue;
    }
    if (c == '"' || c == '\'') {
      i = skip_string_literal(s, i);
      push(std::string(kStringSentinel));
      continue;
    }
    if (is_digit(c) || (c == '.' && i + 1 < s.size() && is_digit(s[i + 1]))) {
      std::size_t j = i + 1;
      while (j < s.size()) {
        const unsigned char d = s[j];
        if (is_ascii_alpha(d) || is_digit(d) || d == '_' || d == '.') {
          ++j;
        } else if ((d == '+' || d == '-') && (s[j - 1] == 'e' || s[j - 1] == 'E') &&
                   !(s[i] == '0' && j > i + 1 && (s[i + 1] == 'x' || s[i + 1] == 'X'))) {
          ++j;
        } else {
          break;
        }
      }
      push(std::string(kNumberSentinel));
      i = j;
      continue;
    }
    if (is_ascii_alpha(c) || c == '_' || c >= 0x80) {
      std::size_t j = i + 1;
      while (j < s.size() && (is_word_byte(s[j]) || s[j] == '_')) ++j;
      const std::string_view word = s.substr(i, j - i);
      if (j < s.size() && (s[j] == '"' || s[j] == '\'') && is_string_prefix(word)) {
        i = skip_string_literal(s, j);
        push(std::string(kStringSentinel));
        continue;
      }
      for (auto& t : split_identifier(word)) push(std::move(t));
      i = j;
      continue;
    }
    ++i;  // punctuation
  }
  return out;
}

// Documentation tokenization: lowercase, punctuation becomes a separator,
// whitespace split, capped at `max_tokens`. No subtoken splitting.
inline Tokens tokenize_doc(std::string_view text, std::size_t max_tokens = kMaxDocTokens) {
  Tokens out;
  std::string cur;
  for (unsigned char c : text) {
    if (detail::is_word_byte(c)) {
      cur.push_back(detail::to_lower(static_cast<char>(c)));
    } else if (!cur.empty()) {
      if (out.size() < max_tokens) out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty() && out.size() < max_tokens) out.push_back(std::move(cur));
  return out;
}

inline std::string join(const Tokens& tokens, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.append(sep);
    out.append(tokens[i]);
  }
  return out;
}

}  // namespace nbdoc::corpus
