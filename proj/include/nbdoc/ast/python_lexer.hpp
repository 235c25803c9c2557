#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nbdoc::ast {

// Raised for any source the Python grammar rejects.
class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class TokKind { Name, Number, String, Op, Newline, Indent, Dedent, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;    // Name/Number/Op text; for strings the body between quotes
  std::string prefix;  // string prefix, lowercased (r, b, f, rb, ...)
  std::size_t line = 0;

  bool is_op(std::string_view op) const { return kind == TokKind::Op && text == op; }
  bool is_name(std::string_view n) const { return kind == TokKind::Name && text == n; }
  bool is_fstring() const { return kind == TokKind::String && prefix.find('f') != std::string::npos; }
};

// Tokenizer following CPython's rules for logical lines: INDENT/DEDENT from
// leading whitespace (tabs to the next multiple of 8), implicit joining
// inside brackets, backslash continuation, blank and comment-only lines
// ignored.
class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    indents_.assign(1, 0);
    bool line_start = true;
    while (pos_ < src_.size()) {
      if (line_start && depth_ == 0) {
        if (!handle_indentation()) continue;  // blank/comment line consumed
        line_start = false;
      }
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '\\') {
        std::size_t j = pos_ + 1;
        if (j < src_.size() && src_[j] == '\r') ++j;
        if (j >= src_.size() || src_[j] != '\n') fail("unexpected character after line continuation");
        pos_ = j + 1;
        ++line_;
      } else if (c == '\n') {
        ++pos_;
        ++line_;
        if (depth_ == 0) {
          if (!out_.empty() && out_.back().kind != TokKind::Newline) emit(TokKind::Newline, "");
          line_start = true;
        }
      } else {
        lex_token();
      }
    }
    if (depth_ > 0) fail("unexpected EOF in multi-line statement");
    if (!out_.empty() && out_.back().kind != TokKind::Newline && out_.back().kind != TokKind::Dedent) {
      emit(TokKind::Newline, "");
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(TokKind::Dedent, "");
    }
    emit(TokKind::End, "");
    return std::move(out_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(what, line_); }

  void emit(TokKind k, std::string text, std::string prefix = {}) {
    out_.push_back(Token{k, std::move(text), std::move(prefix), line_});
  }

  // Returns false when the whole line was blank or a comment.
  bool handle_indentation() {
    std::size_t col = 0;
    std::size_t i = pos_;
    for (; i < src_.size(); ++i) {
      const char c = src_[i];
      if (c == ' ') {
        ++col;
      } else if (c == '\t') {
        col = (col / 8 + 1) * 8;
      } else if (c == '\f') {
        col = 0;
      } else {
        break;
      }
    }
    if (i >= src_.size()) {
      pos_ = i;
      return false;
    }
    const char c = src_[i];
    if (c == '\n' || c == '#' || (c == '\r' && i + 1 < src_.size() && src_[i + 1] == '\n')) {
      while (i < src_.size() && src_[i] != '\n') ++i;
      if (i < src_.size()) {
        ++i;
        ++line_;
      }
      pos_ = i;
      return false;
    }
    pos_ = i;
    if (col > indents_.back()) {
      indents_.push_back(col);
      emit(TokKind::Indent, "");
    } else {
      while (col < indents_.back()) {
        indents_.pop_back();
        emit(TokKind::Dedent, "");
      }
      if (col != indents_.back()) fail("unindent does not match any outer indentation level");
    }
    return true;
  }

  static bool is_ident_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
  }
  static bool is_ident_char(unsigned char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
  static bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

  static bool valid_prefix(std::string_view p) {
    std::string l;
    for (char ch : p) l.push_back(static_cast<char>(ch >= 'A' && ch <= 'Z' ? ch - 'A' + 'a' : ch));
    return l == "r" || l == "u" || l == "b" || l == "f" || l == "br" || l == "rb" || l == "fr" ||
           l == "rf";
  }

  void lex_token() {
    const unsigned char c = src_[pos_];
    if (is_ident_start(c)) {
      std::size_t j = pos_ + 1;
      while (j < src_.size() && is_ident_char(src_[j])) ++j;
      const std::string_view word = src_.substr(pos_, j - pos_);
      if (j < src_.size() && (src_[j] == '"' || src_[j] == '\'') && valid_prefix(word)) {
        std::string prefix;
        for (char ch : word) prefix.push_back(static_cast<char>(ch >= 'A' && ch <= 'Z' ? ch - 'A' + 'a' : ch));
        pos_ = j;
        lex_string(std::move(prefix));
        return;
      }
      emit(TokKind::Name, std::string(word));
      pos_ = j;
      return;
    }
    if (c == '"' || c == '\'') {
      lex_string({});
      return;
    }
    if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
      lex_number();
      return;
    }
    lex_operator();
  }

  void lex_string(std::string prefix) {
    const char quote = src_[pos_];
    const bool triple =
        pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote;
    const std::size_t open = triple ? 3 : 1;
    const std::size_t start_line = line_;
    std::size_t i = pos_ + open;
    const std::size_t body_start = i;
    while (true) {
      if (i >= src_.size()) {
        line_ = start_line;
        fail("unterminated string literal");
      }
      const char ch = src_[i];
      if (ch == '\\') {
        if (i + 1 < src_.size() && src_[i + 1] == '\n') ++line_;
        i += 2;
        continue;
      }
      if (ch == '\n') {
        if (!triple) {
          line_ = start_line;
          fail("unterminated string literal");
        }
        ++line_;
      }
      if (ch == quote) {
        if (!triple) break;
        if (i + 2 < src_.size() && src_[i + 1] == quote && src_[i + 2] == quote) break;
      }
      ++i;
    }
    Token t{TokKind::String, std::string(src_.substr(body_start, i - body_start)), std::move(prefix),
            start_line};
    out_.push_back(std::move(t));
    pos_ = i + open;
  }

  void lex_number() {
    std::size_t j = pos_;
    auto digits = [&](auto pred) {
      while (j < src_.size() && (pred(static_cast<unsigned char>(src_[j])) || src_[j] == '_')) ++j;
    };
    const auto dec = [](unsigned char d) { return d >= '0' && d <= '9'; };
    if (src_[j] == '0' && j + 1 < src_.size() &&
        std::string_view("xXoObB").find(src_[j + 1]) != std::string_view::npos) {
      j += 2;
      digits([](unsigned char d) {
        return (d >= '0' && d <= '9') || (d >= 'a' && d <= 'f') || (d >= 'A' && d <= 'F');
      });
    } else {
      digits(dec);
      if (j < src_.size() && src_[j] == '.') {
        ++j;
        digits(dec);
      }
      if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
        if (k < src_.size() && is_digit(src_[k])) {
          j = k;
          digits(dec);
        }
      }
      if (j < src_.size() && (src_[j] == 'j' || src_[j] == 'J')) ++j;
    }
    if (j < src_.size() && is_ident_start(src_[j])) fail("invalid decimal literal");
    emit(TokKind::Number, std::string(src_.substr(pos_, j - pos_)));
    pos_ = j;
  }

  void lex_operator() {
    static constexpr std::string_view three[] = {"**=", "//=", ">>=", "<<=", "..."};
    static constexpr std::string_view two[] = {"->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==",
                                               "!=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
                                               "@="};
    static constexpr std::string_view one = "+-*/%@&|^~<>()[]{},:.;=";
    const std::string_view rest = src_.substr(pos_);
    for (auto op : three) {
      if (rest.substr(0, 3) == op) {
        emit(TokKind::Op, std::string(op));
        pos_ += 3;
        return;
      }
    }
    for (auto op : two) {
      if (rest.substr(0, 2) == op) {
        emit(TokKind::Op, std::string(op));
        pos_ += 2;
        return;
      }
    }
    const char c = src_[pos_];
    if (one.find(c) == std::string_view::npos) fail(std::string("invalid character '") + c + "'");
    if (c == '(' || c == '[' || c == '{') ++depth_;
    if (c == ')' || c == ']' || c == '}') {
      if (depth_ == 0) fail(std::string("unmatched '") + c + "'");
      --depth_;
    }
    emit(TokKind::Op, std::string(1, c));
    ++pos_;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  int depth_ = 0;
  std::vector<std::size_t> indents_;
  std::vector<Token> out_;
};

inline std::vector<Token> lex_python(std::string_view src) { return Lexer(src).run(); }

}  // namespace nbdoc::ast
