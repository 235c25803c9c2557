#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nbdoc/ast/python_lexer.hpp"
#include "nbdoc/corpus/tokenize.hpp"

namespace nbdoc::ast {

// Syntax tree in graph-label form: interior nodes carry the lowercased
// node-kind name (module, assign, call, ...), leaves carry identifier
// subtokens or literal sentinels (num, str, true, false, none, ellipsis).
// Expression contexts (load/store/del) are not represented.
struct PyNode {
  std::string label;
  std::vector<PyNode> children;

  PyNode() = default;
  explicit PyNode(std::string l) : label(std::move(l)) {}

  PyNode& add(PyNode child) {
    children.push_back(std::move(child));
    return *this;
  }
  PyNode& add_identifier(std::string_view name) {
    for (auto& t : corpus::split_identifier(name)) children.emplace_back(std::move(t));
    return *this;
  }
  template <class Range>
  PyNode& add_all(Range&& nodes) {
    for (auto& n : nodes) children.push_back(std::move(n));
    return *this;
  }
};

namespace detail {

inline bool is_keyword(std::string_view s) {
  static constexpr std::array<std::string_view, 35> kw = {
      "False", "None",   "True",    "and",      "as",     "assert", "async", "await", "break",
      "class", "continue", "def",   "del",      "elif",   "else",   "except", "finally", "for",
      "from",  "global", "if",      "import",   "in",     "is",     "lambda", "nonlocal", "not",
      "or",    "pass",   "raise",   "return",   "try",    "while",  "with",  "yield"};
  return std::find(kw.begin(), kw.end(), s) != kw.end();
}

inline const char* binop_label(std::string_view op) {
  if (op == "+") return "add";
  if (op == "-") return "sub";
  if (op == "*") return "mult";
  if (op == "@") return "matmult";
  if (op == "/") return "div";
  if (op == "%") return "mod";
  if (op == "**") return "pow";
  if (op == "<<") return "lshift";
  if (op == ">>") return "rshift";
  if (op == "|") return "bitor";
  if (op == "^") return "bitxor";
  if (op == "&") return "bitand";
  if (op == "//") return "floordiv";
  return nullptr;
}

}  // namespace detail

// Recursive-descent parser for the Python 3.10 grammar. Produces the same tree shape CPython's ast module yields,
// walked field by field.
class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  PyNode parse_module() {
    PyNode mod("module");
    while (!at(TokKind::End)) mod.add_all(statement());
    return mod;
  }

  // Parses a stand-alone expression (used for f-string replacement fields).
  PyNode parse_expression_list() {
    PyNode e = star_expressions();
    while (at(TokKind::Newline)) ++pos_;
    if (!at(TokKind::End)) fail("unexpected token in expression");
    return e;
  }

 private:
  // --- token helpers -----------------------------------------------------
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  bool at(TokKind k) const { return peek().kind == k; }
  bool at_op(std::string_view op) const { return peek().is_op(op); }
  bool at_kw(std::string_view kw) const { return peek().is_name(kw); }
  bool accept_op(std::string_view op) {
    if (!at_op(op)) return false;
    ++pos_;
    return true;
  }
  bool accept_kw(std::string_view kw) {
    if (!at_kw(kw)) return false;
    ++pos_;
    return true;
  }
  void expect_op(std::string_view op) {
    if (!accept_op(op)) fail("expected '" + std::string(op) + "'");
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail("expected '" + std::string(kw) + "'");
  }
  std::string expect_name() {
    const Token& t = peek();
    if (t.kind != TokKind::Name || detail::is_keyword(t.text)) fail("expected identifier");
    ++pos_;
    return t.text;
  }
  bool at_plain_name() const {
    return peek().kind == TokKind::Name && !detail::is_keyword(peek().text);
  }
  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(what, peek().line); }

  // --- statements ----------------------------------------------------------
  std::vector<PyNode> statement() {
    if (at_kw("if")) return one(if_stmt());
    if (at_kw("while")) return one(while_stmt());
    if (at_kw("for")) return one(for_stmt(false));
    if (at_kw("try")) return one(try_stmt());
    if (at_kw("with")) return one(with_stmt(false));
    if (at_kw("def")) return one(funcdef({}, false));
    if (at_kw("class")) return one(classdef({}));
    if (at_op("@")) return one(decorated());
    if (at_kw("async")) {
      ++pos_;
      if (at_kw("def")) return one(funcdef({}, true));
      if (at_kw("for")) return one(for_stmt(true));
      if (at_kw("with")) return one(with_stmt(true));
      fail("expected def, for or with after async");
    }
    if (at(TokKind::Indent)) fail("unexpected indent");
    if (at_kw("match")) {
      const std::size_t save = pos_;
      try {
        return one(match_stmt());
      } catch (const SyntaxError&) {
        pos_ = save;  // soft keyword: fall back to an ordinary statement
      }
    }
    return simple_stmts();
  }

  static std::vector<PyNode> one(PyNode n) {
    std::vector<PyNode> v;
    v.push_back(std::move(n));
    return v;
  }

  std::vector<PyNode> simple_stmts() {
    std::vector<PyNode> out;
    out.push_back(simple_stmt());
    while (accept_op(";")) {
      if (at(TokKind::Newline)) break;
      out.push_back(simple_stmt());
    }
    if (!at(TokKind::Newline)) fail("invalid syntax");
    ++pos_;
    return out;
  }

  PyNode simple_stmt() {
    if (accept_kw("pass")) return PyNode("pass");
    if (accept_kw("break")) return PyNode("break");
    if (accept_kw("continue")) return PyNode("continue");
    if (accept_kw("return")) {
      PyNode n("return");
      if (!at_stmt_end()) n.add(star_expressions());
      return n;
    }
    if (accept_kw("raise")) {
      PyNode n("raise");
      if (!at_stmt_end()) {
        n.add(expression());
        if (accept_kw("from")) n.add(expression());
      }
      return n;
    }
    if (at_kw("global") || at_kw("nonlocal")) {
      PyNode n(peek().text);
      ++pos_;
      n.add_identifier(expect_name());
      while (accept_op(",")) n.add_identifier(expect_name());
      return n;
    }
    if (accept_kw("del")) {
      PyNode n("delete");
      do {
        if (at_stmt_end()) break;
        PyNode t = bitwise_or();
        check_target(t, TargetKind::del);
        n.add(std::move(t));
      } while (accept_op(","));
      if (n.children.empty()) fail("invalid del");
      return n;
    }
    if (accept_kw("assert")) {
      PyNode n("assert");
      n.add(expression());
      if (accept_op(",")) n.add(expression());
      return n;
    }
    if (accept_kw("import")) {
      PyNode n("import");
      do {
        PyNode alias("alias");
        alias.add_identifier(dotted_name());
        if (accept_kw("as")) alias.add_identifier(expect_name());
        n.add(std::move(alias));
      } while (accept_op(","));
      return n;
    }
    if (accept_kw("from")) return import_from();
    return expression_statement();
  }

  bool at_stmt_end() const { return at(TokKind::Newline) || at_op(";") || at(TokKind::End); }

  std::string dotted_name() {
    std::string name = expect_name();
    while (accept_op(".")) name += "." + expect_name();
    return name;
  }

  PyNode import_from() {
    PyNode n("importfrom");
    bool has_dots = false;
    while (at_op(".") || at_op("...")) {
      has_dots = true;
      ++pos_;
    }
    if (!at_kw("import")) {
      n.add_identifier(dotted_name());
    } else if (!has_dots) {
      fail("expected module name");
    }
    expect_kw("import");
    if (accept_op("*")) {
      n.add(PyNode("alias"));
      return n;
    }
    const bool paren = accept_op("(");
    do {
      if (paren && at_op(")")) break;
      PyNode alias("alias");
      alias.add_identifier(expect_name());
      if (accept_kw("as")) alias.add_identifier(expect_name());
      n.add(std::move(alias));
    } while (accept_op(","));
    if (paren) expect_op(")");
    return n;
  }

  enum class TargetKind { assign, aug, ann, del };

  void check_target(const PyNode& t, TargetKind kind) const {
    const std::string& l = t.label;
    if (l == "name" || l == "attribute" || l == "subscript") return;
    if ((l == "tuple" || l == "list") && kind != TargetKind::aug && kind != TargetKind::ann) {
      for (const auto& c : t.children) check_target(c, kind);
      return;
    }
    if (l == "starred" && kind == TargetKind::assign) {
      check_target(t.children.front(), kind);
      return;
    }
    fail("cannot assign to " + l);
  }

  static bool is_augassign(const Token& t) {
    if (t.kind != TokKind::Op) return false;
    const std::string& s = t.text;
    return s.size() >= 2 && s.back() == '=' && s != "==" && s != "<=" && s != ">=" && s != "!=" &&
           s != ":=";
  }

  PyNode expression_statement() {
    PyNode first = at_kw("yield") ? yield_expr() : star_expressions();
    if (at_op(":")) {
      ++pos_;
      check_target(first, TargetKind::ann);
      PyNode n("annassign");
      n.add(std::move(first));
      n.add(expression());
      if (accept_op("=")) n.add(at_kw("yield") ? yield_expr() : star_expressions());
      return n;
    }
    if (is_augassign(peek())) {
      const std::string op = peek().text.substr(0, peek().text.size() - 1);
      ++pos_;
      check_target(first, TargetKind::aug);
      PyNode n("augassign");
      n.add(std::move(first));
      n.add(PyNode(detail::binop_label(op)));
      n.add(at_kw("yield") ? yield_expr() : star_expressions());
      return n;
    }
    if (at_op("=")) {
      std::vector<PyNode> chain;
      chain.push_back(std::move(first));
      while (accept_op("=")) chain.push_back(at_kw("yield") ? yield_expr() : star_expressions());
      PyNode n("assign");
      for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        check_target(chain[i], TargetKind::assign);
        n.add(std::move(chain[i]));
      }
      n.add(std::move(chain.back()));
      return n;
    }
    PyNode n("expr");
    n.add(std::move(first));
    return n;
  }

  std::vector<PyNode> block() {
    expect_op(":");
    if (!at(TokKind::Newline)) return simple_stmts();
    ++pos_;
    if (!at(TokKind::Indent)) fail("expected an indented block");
    ++pos_;
    std::vector<PyNode> body;
    while (!at(TokKind::Dedent) && !at(TokKind::End)) {
      auto s = statement();
      for (auto& x : s) body.push_back(std::move(x));
    }
    if (at(TokKind::Dedent)) ++pos_;
    return body;
  }

  PyNode if_stmt() {
    ++pos_;  // 'if' or 'elif'
    PyNode n("if");
    n.add(named_expression());
    n.add_all(block());
    if (at_kw("elif")) {
      n.add(if_stmt());
    } else if (accept_kw("else")) {
      n.add_all(block());
    }
    return n;
  }

  PyNode while_stmt() {
    expect_kw("while");
    PyNode n("while");
    n.add(named_expression());
    n.add_all(block());
    if (accept_kw("else")) n.add_all(block());
    return n;
  }

  PyNode for_stmt(bool async) {
    expect_kw("for");
    PyNode n(async ? "asyncfor" : "for");
    n.add(target_list());
    expect_kw("in");
    n.add(star_expressions());
    n.add_all(block());
    if (accept_kw("else")) n.add_all(block());
    return n;
  }

  PyNode try_stmt() {
    expect_kw("try");
    PyNode n("try");
    n.add_all(block());
    bool handled = false;
    while (at_kw("except")) {
      ++pos_;
      handled = true;
      PyNode h("excepthandler");
      if (!at_op(":")) {
        h.add(expression());
        if (accept_kw("as")) {
          h.add_identifier(expect_name());
        } else if (accept_op(",")) {
          fail("multiple exception types must be parenthesized");
        }
      }
      h.add_all(block());
      n.add(std::move(h));
    }
    if (accept_kw("else")) {
      if (!handled) fail("else without except");
      n.add_all(block());
    }
    if (accept_kw("finally")) {
      n.add_all(block());
    } else if (!handled) {
      fail("expected except or finally");
    }
    return n;
  }

  PyNode with_stmt(bool async) {
    expect_kw("with");
    PyNode n(async ? "asyncwith" : "with");
    if (at_op("(")) {
      const std::size_t save = pos_;
      try {
        ++pos_;
        std::vector<PyNode> items;
        do {
          if (at_op(")")) break;
          items.push_back(with_item());
        } while (accept_op(","));
        expect_op(")");
        if (!at_op(":")) fail("not a parenthesized with");
        n.add_all(items);
        n.add_all(block());
        return n;
      } catch (const SyntaxError&) {
        pos_ = save;
      }
    }
    do {
      n.add(with_item());
    } while (accept_op(","));
    n.add_all(block());
    return n;
  }

  PyNode with_item() {
    PyNode item("withitem");
    item.add(expression());
    if (accept_kw("as")) {
      PyNode t = star_target();
      check_target(t, TargetKind::assign);
      item.add(std::move(t));
    }
    return item;
  }

  // --- match statement -------------------------------------------------------
  PyNode match_stmt() {
    ++pos_;  // 'match'
    PyNode n("match");
    PyNode first = star_named_expression();
    if (at_op(",")) {
      PyNode t("tuple");
      t.add(std::move(first));
      while (accept_op(",")) {
        if (at_op(":")) break;
        t.add(star_named_expression());
      }
      first = std::move(t);
    } else if (first.label == "starred") {
      fail("invalid match subject");
    }
    n.add(std::move(first));
    expect_op(":");
    if (!at(TokKind::Newline)) fail("expected newline after match");
    ++pos_;
    if (!at(TokKind::Indent)) fail("expected an indented block");
    ++pos_;
    while (at_kw("case")) {
      ++pos_;
      PyNode c("match_case");
      c.add(open_sequence_pattern());
      if (accept_kw("if")) c.add(named_expression());
      c.add_all(block());
      n.add(std::move(c));
    }
    if (n.children.size() < 2) fail("match needs at least one case");
    if (!at(TokKind::Dedent)) fail("expected case");
    ++pos_;
    return n;
  }

  PyNode open_sequence_pattern() {
    PyNode first = maybe_star_pattern();
    if (!at_op(",")) {
      if (first.label == "matchstar") fail("star pattern outside sequence");
      return first;
    }
    PyNode seq("matchsequence");
    seq.add(std::move(first));
    while (accept_op(",")) {
      if (at_op(":") || at_kw("if")) break;
      seq.add(maybe_star_pattern());
    }
    return seq;
  }

  PyNode maybe_star_pattern() {
    if (accept_op("*")) {
      PyNode s("matchstar");
      const std::string name = expect_name();
      if (name != "_") s.add_identifier(name);
      return s;
    }
    return as_pattern();
  }

  PyNode as_pattern() {
    PyNode p = or_pattern();
    if (accept_kw("as")) {
      const std::string name = expect_name();
      if (name == "_") fail("cannot use '_' as a target");
      PyNode a("matchas");
      a.add(std::move(p));
      a.add_identifier(name);
      return a;
    }
    return p;
  }

  PyNode or_pattern() {
    PyNode first = closed_pattern();
    if (!at_op("|")) return first;
    PyNode o("matchor");
    o.add(std::move(first));
    while (accept_op("|")) o.add(closed_pattern());
    return o;
  }

  // Signed number, optionally followed by +/- imaginary part.
  PyNode number_pattern_value() {
    PyNode v;
    if (accept_op("-")) {
      if (!at(TokKind::Number)) fail("expected number");
      ++pos_;
      v = PyNode("unaryop");
      v.add(PyNode("usub"));
      v.add(PyNode("num"));
    } else {
      if (!at(TokKind::Number)) fail("expected number");
      ++pos_;
      v = PyNode("num");
    }
    if (at_op("+") || at_op("-")) {
      const char* op = at_op("+") ? "add" : "sub";
      ++pos_;
      if (!at(TokKind::Number)) fail("expected imaginary number");
      ++pos_;
      PyNode b("binop");
      b.add(std::move(v));
      b.add(PyNode(op));
      b.add(PyNode("num"));
      v = std::move(b);
    }
    return v;
  }

  PyNode name_or_attr() {
    PyNode v("name");
    v.add_identifier(expect_name());
    while (accept_op(".")) {
      PyNode a("attribute");
      a.add(std::move(v));
      a.add_identifier(expect_name());
      v = std::move(a);
    }
    return v;
  }

  PyNode closed_pattern() {
    const Token& t = peek();
    if (t.kind == TokKind::Number || t.is_op("-")) {
      PyNode m("matchvalue");
      m.add(number_pattern_value());
      return m;
    }
    if (t.kind == TokKind::String) {
      if (t.is_fstring()) fail("f-string patterns are not allowed");
      PyNode m("matchvalue");
      m.add(strings());
      return m;
    }
    if (t.is_name("None") || t.is_name("True") || t.is_name("False")) {
      ++pos_;
      return PyNode("matchsingleton");
    }
    if (at_plain_name()) {
      const bool dotted = peek(1).is_op(".");
      if (!dotted && !peek(1).is_op("(")) {
        const std::string name = expect_name();
        PyNode a("matchas");
        if (name != "_") a.add_identifier(name);
        return a;
      }
      PyNode target = name_or_attr();
      if (accept_op("(")) return class_pattern(std::move(target));
      PyNode m("matchvalue");
      m.add(std::move(target));
      return m;
    }
    if (accept_op("(")) {
      if (accept_op(")")) return PyNode("matchsequence");
      PyNode first = maybe_star_pattern();
      if (accept_op(")")) {
        if (first.label == "matchstar") {
          PyNode seq("matchsequence");
          seq.add(std::move(first));
          return seq;
        }
        return first;
      }
      PyNode seq("matchsequence");
      seq.add(std::move(first));
      while (accept_op(",")) {
        if (at_op(")")) break;
        seq.add(maybe_star_pattern());
      }
      expect_op(")");
      return seq;
    }
    if (accept_op("[")) {
      PyNode seq("matchsequence");
      while (!at_op("]")) {
        seq.add(maybe_star_pattern());
        if (!accept_op(",")) break;
      }
      expect_op("]");
      return seq;
    }
    if (accept_op("{")) return mapping_pattern();
    fail("invalid pattern");
  }

  PyNode mapping_pattern() {
    std::vector<PyNode> keys, patterns;
    std::string rest;
    while (!at_op("}")) {
      if (accept_op("**")) {
        rest = expect_name();
        accept_op(",");
        break;
      }
      const Token& t = peek();
      if (t.kind == TokKind::Number || t.is_op("-")) {
        keys.push_back(number_pattern_value());
      } else if (t.kind == TokKind::String) {
        keys.push_back(strings());
      } else if (t.is_name("None") || t.is_name("True") || t.is_name("False")) {
        keys.push_back(atom());
      } else if (at_plain_name() && peek(1).is_op(".")) {
        keys.push_back(name_or_attr());
      } else {
        fail("invalid mapping key");
      }
      expect_op(":");
      patterns.push_back(as_pattern());
      if (!accept_op(",")) break;
    }
    expect_op("}");
    PyNode m("matchmapping");
    m.add_all(keys);
    m.add_all(patterns);
    m.add_identifier(rest);
    return m;
  }

  PyNode class_pattern(PyNode cls) {
    std::vector<PyNode> positional, kw_patterns;
    std::vector<std::string> kw_names;
    while (!at_op(")")) {
      if (at_plain_name() && peek(1).is_op("=")) {
        kw_names.push_back(expect_name());
        ++pos_;
        kw_patterns.push_back(as_pattern());
      } else {
        if (!kw_names.empty()) fail("positional patterns follow keyword patterns");
        positional.push_back(as_pattern());
      }
      if (!accept_op(",")) break;
    }
    expect_op(")");
    PyNode c("matchclass");
    c.add(std::move(cls));
    c.add_all(positional);
    for (const auto& k : kw_names) c.add_identifier(k);
    c.add_all(kw_patterns);
    return c;
  }

  PyNode decorated() {
    std::vector<PyNode> decorators;
    while (accept_op("@")) {
      decorators.push_back(named_expression());
      if (!at(TokKind::Newline)) fail("expected newline after decorator");
      ++pos_;
    }
    if (at_kw("def")) return funcdef(std::move(decorators), false);
    if (at_kw("class")) return classdef(std::move(decorators));
    if (accept_kw("async") && at_kw("def")) return funcdef(std::move(decorators), true);
    fail("expected function or class after decorator");
  }

  PyNode funcdef(std::vector<PyNode> decorators, bool async) {
    expect_kw("def");
    PyNode n(async ? "asyncfunctiondef" : "functiondef");
    n.add_identifier(expect_name());
    expect_op("(");
    n.add(parameters(")", true));
    expect_op(")");
    PyNode returns;
    const bool has_returns = accept_op("->");
    if (has_returns) returns = expression();
    n.add_all(block());
    n.add_all(decorators);
    if (has_returns) n.add(std::move(returns));
    return n;
  }

  PyNode classdef(std::vector<PyNode> decorators) {
    expect_kw("class");
    PyNode n("classdef");
    n.add_identifier(expect_name());
    if (accept_op("(")) {
      auto [args, keywords] = call_arguments();
      expect_op(")");
      n.add_all(args);
      n.add_all(keywords);
    }
    n.add_all(block());
    n.add_all(decorators);
    return n;
  }

  // Parameter list up to (not including) `close`. Children follow the field
  // order of the arguments node: posonlyargs, args, vararg, kwonlyargs,
  // kw_defaults, kwarg, defaults.
  PyNode parameters(std::string_view close, bool annotations) {
    std::vector<PyNode> posonly, args, kwonly, kw_defaults, defaults;
    PyNode vararg, kwarg;
    bool has_vararg = false, has_kwarg = false, star_seen = false, slash_seen = false;
    auto param = [&] {
      PyNode a("arg");
      a.add_identifier(expect_name());
      if (annotations && accept_op(":")) a.add(expression());
      return a;
    };
    while (!at_op(close)) {
      if (has_kwarg) fail("arguments cannot follow var-keyword argument");
      if (accept_op("/")) {
        if (slash_seen || star_seen || args.empty()) fail("invalid '/' in parameters");
        slash_seen = true;
        posonly = std::move(args);
        args.clear();
      } else if (accept_op("**")) {
        kwarg = param();
        has_kwarg = true;
      } else if (accept_op("*")) {
        if (star_seen) fail("* argument may appear only once");
        star_seen = true;
        if (!at_op(",") && !at_op(close)) {
          vararg = param();
          has_vararg = true;
        }
      } else {
        PyNode a = param();
        if (star_seen) {
          kwonly.push_back(std::move(a));
          if (accept_op("=")) kw_defaults.push_back(expression());
        } else {
          args.push_back(std::move(a));
          if (accept_op("=")) {
            defaults.push_back(expression());
          } else if (!defaults.empty()) {
            fail("non-default argument follows default argument");
          }
        }
      }
      if (!accept_op(",")) break;
    }
    if (star_seen && !has_vararg && kwonly.empty()) fail("named arguments must follow bare *");
    PyNode n("arguments");
    n.add_all(posonly);
    n.add_all(args);
    if (has_vararg) n.add(std::move(vararg));
    n.add_all(kwonly);
    n.add_all(kw_defaults);
    if (has_kwarg) n.add(std::move(kwarg));
    n.add_all(defaults);
    return n;
  }

  // --- targets -------------------------------------------------------------
  PyNode star_target() {
    if (accept_op("*")) {
      PyNode s("starred");
      s.add(star_target());
      return s;
    }
    return bitwise_or();
  }

  // Comma-separated targets for `for` loops and comprehensions.
  PyNode target_list() {
    PyNode first = star_target();
    if (!at_op(",")) {
      check_target(first, TargetKind::assign);
      return first;
    }
    PyNode t("tuple");
    t.add(std::move(first));
    while (accept_op(",")) {
      if (at_kw("in") || at_op("=")) break;
      t.add(star_target());
    }
    check_target(t, TargetKind::assign);
    return t;
  }

  // --- expressions ---------------------------------------------------------
  PyNode star_expressions() {
    PyNode first = star_expression();
    if (!at_op(",")) return first;
    PyNode t("tuple");
    t.add(std::move(first));
    while (accept_op(",")) {
      if (!starts_expression()) break;
      t.add(star_expression());
    }
    return t;
  }

  bool starts_expression() const {
    const Token& t = peek();
    switch (t.kind) {
      case TokKind::Name:
        return !detail::is_keyword(t.text) || t.text == "not" || t.text == "lambda" ||
               t.text == "await" || t.text == "None" || t.text == "True" || t.text == "False" ||
               t.text == "yield";
      case TokKind::Number:
      case TokKind::String:
        return true;
      case TokKind::Op:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" || t.text == "+" ||
               t.text == "~" || t.text == "*" || t.text == "..." || t.text == "**";
      default:
        return false;
    }
  }

  PyNode star_expression() {
    if (accept_op("*")) {
      PyNode s("starred");
      s.add(bitwise_or());
      return s;
    }
    return expression();
  }

  PyNode star_named_expression() {
    if (accept_op("*")) {
      PyNode s("starred");
      s.add(bitwise_or());
      return s;
    }
    return named_expression();
  }

  PyNode named_expression() {
    if (at_plain_name() && peek(1).is_op(":=")) {
      PyNode n("namedexpr");
      PyNode target("name");
      target.add_identifier(expect_name());
      ++pos_;
      n.add(std::move(target));
      n.add(expression());
      return n;
    }
    return expression();
  }

  PyNode expression() {
    if (at_kw("lambda")) return lambdef();
    PyNode body = disjunction();
    if (accept_kw("if")) {
      PyNode test = disjunction();
      expect_kw("else");
      PyNode orelse = expression();
      PyNode n("ifexp");
      n.add(std::move(test));
      n.add(std::move(body));
      n.add(std::move(orelse));
      return n;
    }
    return body;
  }

  PyNode lambdef() {
    expect_kw("lambda");
    PyNode n("lambda");
    n.add(parameters(":", false));
    expect_op(":");
    n.add(expression());
    return n;
  }

  PyNode bool_chain(const char* kw, const char* label, PyNode (Parser::*next)()) {
    PyNode first = (this->*next)();
    if (!at_kw(kw)) return first;
    PyNode n("boolop");
    n.add(PyNode(label));
    n.add(std::move(first));
    while (accept_kw(kw)) n.add((this->*next)());
    return n;
  }
  PyNode disjunction() { return bool_chain("or", "or", &Parser::conjunction); }
  PyNode conjunction() { return bool_chain("and", "and", &Parser::inversion); }

  PyNode inversion() {
    if (accept_kw("not")) {
      PyNode n("unaryop");
      n.add(PyNode("not"));
      n.add(inversion());
      return n;
    }
    return comparison();
  }

  const char* comparison_op() {
    const Token& t = peek();
    if (t.kind == TokKind::Op) {
      const char* l = nullptr;
      if (t.text == "==") l = "eq";
      else if (t.text == "!=") l = "noteq";
      else if (t.text == "<") l = "lt";
      else if (t.text == "<=") l = "lte";
      else if (t.text == ">") l = "gt";
      else if (t.text == ">=") l = "gte";
      if (l) ++pos_;
      return l;
    }
    if (t.is_name("in")) {
      ++pos_;
      return "in";
    }
    if (t.is_name("not") && peek(1).is_name("in")) {
      pos_ += 2;
      return "notin";
    }
    if (t.is_name("is")) {
      ++pos_;
      if (accept_kw("not")) return "isnot";
      return "is";
    }
    return nullptr;
  }

  PyNode comparison() {
    PyNode left = bitwise_or();
    std::vector<PyNode> ops, rhs;
    while (const char* op = comparison_op()) {
      ops.emplace_back(op);
      rhs.push_back(bitwise_or());
    }
    if (ops.empty()) return left;
    PyNode n("compare");
    n.add(std::move(left));
    n.add_all(ops);
    n.add_all(rhs);
    return n;
  }

  PyNode binary_level(std::initializer_list<std::string_view> ops, PyNode (Parser::*next)()) {
    PyNode left = (this->*next)();
    while (true) {
      const Token& t = peek();
      if (t.kind != TokKind::Op || std::find(ops.begin(), ops.end(), t.text) == ops.end()) break;
      const std::string op = t.text;
      ++pos_;
      PyNode n("binop");
      n.add(std::move(left));
      n.add(PyNode(detail::binop_label(op)));
      n.add((this->*next)());
      left = std::move(n);
    }
    return left;
  }
  PyNode bitwise_or() { return binary_level({"|"}, &Parser::bitwise_xor); }
  PyNode bitwise_xor() { return binary_level({"^"}, &Parser::bitwise_and); }
  PyNode bitwise_and() { return binary_level({"&"}, &Parser::shift_expr); }
  PyNode shift_expr() { return binary_level({"<<", ">>"}, &Parser::sum); }
  PyNode sum() { return binary_level({"+", "-"}, &Parser::term); }
  PyNode term() { return binary_level({"*", "/", "//", "%", "@"}, &Parser::factor); }

  PyNode factor() {
    const char* label = nullptr;
    if (at_op("+")) label = "uadd";
    else if (at_op("-")) label = "usub";
    else if (at_op("~")) label = "invert";
    if (label) {
      ++pos_;
      PyNode n("unaryop");
      n.add(PyNode(label));
      n.add(factor());
      return n;
    }
    return power();
  }

  PyNode power() {
    PyNode base = await_primary();
    if (accept_op("**")) {
      PyNode n("binop");
      n.add(std::move(base));
      n.add(PyNode("pow"));
      n.add(factor());
      return n;
    }
    return base;
  }

  PyNode await_primary() {
    if (accept_kw("await")) {
      PyNode n("await");
      n.add(primary());
      return n;
    }
    return primary();
  }

  PyNode primary() {
    PyNode value = atom();
    while (true) {
      if (accept_op(".")) {
        PyNode n("attribute");
        n.add(std::move(value));
        n.add_identifier(expect_name());
        value = std::move(n);
      } else if (accept_op("(")) {
        PyNode n("call");
        n.add(std::move(value));
        auto [args, keywords] = call_arguments();
        expect_op(")");
        n.add_all(args);
        n.add_all(keywords);
        value = std::move(n);
      } else if (accept_op("[")) {
        PyNode n("subscript");
        n.add(std::move(value));
        n.add(slices());
        expect_op("]");
        value = std::move(n);
      } else {
        return value;
      }
    }
  }

  std::pair<std::vector<PyNode>, std::vector<PyNode>> call_arguments() {
    std::vector<PyNode> args, keywords;
    bool seen_keyword = false, seen_double_star = false;
    while (!at_op(")")) {
      if (accept_op("**")) {
        PyNode k("keyword");
        k.add(expression());
        keywords.push_back(std::move(k));
        seen_double_star = true;
      } else if (accept_op("*")) {
        if (seen_double_star) fail("iterable unpacking follows keyword argument unpacking");
        PyNode s("starred");
        s.add(expression());
        args.push_back(std::move(s));
      } else if (at_plain_name() && peek(1).is_op("=")) {
        PyNode k("keyword");
        k.add_identifier(expect_name());
        ++pos_;
        k.add(expression());
        keywords.push_back(std::move(k));
        seen_keyword = true;
      } else {
        PyNode e = named_expression();
        if (at_kw("for") || (at_kw("async") && peek(1).is_name("for"))) {
          PyNode g("generatorexp");
          g.add(std::move(e));
          g.add_all(comprehension_clauses());
          e = std::move(g);
          if (!args.empty() || !keywords.empty() || !at_op(")")) {
            fail("generator expression must be parenthesized");
          }
        }
        if (seen_double_star) fail("positional argument follows keyword argument unpacking");
        if (seen_keyword) fail("positional argument follows keyword argument");
        args.push_back(std::move(e));
      }
      if (!accept_op(",")) break;
    }
    return {std::move(args), std::move(keywords)};
  }

  PyNode slice_item() {
    PyNode lower, upper, step;
    bool has_lower = false, has_upper = false, has_step = false;
    if (!at_op(":")) {
      PyNode e = named_expression();
      if (!at_op(":")) return e;
      lower = std::move(e);
      has_lower = true;
    }
    expect_op(":");
    if (!at_op(":") && !at_op(",") && !at_op("]")) {
      upper = expression();
      has_upper = true;
    }
    if (accept_op(":")) {
      if (!at_op(",") && !at_op("]")) {
        step = expression();
        has_step = true;
      }
    }
    PyNode n("slice");
    if (has_lower) n.add(std::move(lower));
    if (has_upper) n.add(std::move(upper));
    if (has_step) n.add(std::move(step));
    return n;
  }

  PyNode slices() {
    PyNode first = slice_item();
    if (!at_op(",")) return first;
    PyNode t("tuple");
    t.add(std::move(first));
    while (accept_op(",")) {
      if (at_op("]")) break;
      t.add(slice_item());
    }
    return t;
  }

  std::vector<PyNode> comprehension_clauses() {
    std::vector<PyNode> gens;
    while (at_kw("for") || (at_kw("async") && peek(1).is_name("for"))) {
      accept_kw("async");
      expect_kw("for");
      PyNode c("comprehension");
      c.add(target_list());
      expect_kw("in");
      c.add(disjunction());
      while (accept_kw("if")) c.add(disjunction());
      gens.push_back(std::move(c));
    }
    return gens;
  }

  bool at_comprehension() const {
    return at_kw("for") || (at_kw("async") && peek(1).is_name("for"));
  }

  PyNode yield_expr() {
    expect_kw("yield");
    if (accept_kw("from")) {
      PyNode n("yieldfrom");
      n.add(expression());
      return n;
    }
    PyNode n("yield");
    if (starts_expression()) n.add(star_expressions());
    return n;
  }

  PyNode atom() {
    const Token& t = peek();
    switch (t.kind) {
      case TokKind::Name: {
        if (t.text == "True" || t.text == "False" || t.text == "None") {
          ++pos_;
          std::string l = t.text;
          l[0] = static_cast<char>(l[0] - 'A' + 'a');
          return PyNode(l);
        }
        if (detail::is_keyword(t.text)) fail("invalid syntax at '" + t.text + "'");
        PyNode n("name");
        n.add_identifier(t.text);
        ++pos_;
        return n;
      }
      case TokKind::Number:
        ++pos_;
        return PyNode("num");
      case TokKind::String:
        return strings();
      case TokKind::Op:
        if (t.text == "...") {
          ++pos_;
          return PyNode("ellipsis");
        }
        if (t.text == "(") return paren_atom();
        if (t.text == "[") return list_atom();
        if (t.text == "{") return brace_atom();
        break;
      default:
        break;
    }
    fail("invalid syntax");
  }

  PyNode paren_atom() {
    expect_op("(");
    if (accept_op(")")) return PyNode("tuple");
    if (at_kw("yield")) {
      PyNode y = yield_expr();
      expect_op(")");
      return y;
    }
    PyNode first = star_named_expression();
    if (at_comprehension()) {
      PyNode g("generatorexp");
      g.add(std::move(first));
      g.add_all(comprehension_clauses());
      expect_op(")");
      return g;
    }
    if (!at_op(",")) {
      expect_op(")");
      if (first.label == "starred") fail("cannot use starred expression here");
      return first;
    }
    PyNode t("tuple");
    t.add(std::move(first));
    while (accept_op(",")) {
      if (at_op(")")) break;
      t.add(star_named_expression());
    }
    expect_op(")");
    return t;
  }

  PyNode list_atom() {
    expect_op("[");
    if (accept_op("]")) return PyNode("list");
    PyNode first = star_named_expression();
    if (at_comprehension()) {
      PyNode c("listcomp");
      c.add(std::move(first));
      c.add_all(comprehension_clauses());
      expect_op("]");
      return c;
    }
    PyNode l("list");
    l.add(std::move(first));
    while (accept_op(",")) {
      if (at_op("]")) break;
      l.add(star_named_expression());
    }
    expect_op("]");
    return l;
  }

  PyNode brace_atom() {
    expect_op("{");
    if (accept_op("}")) return PyNode("dict");
    // Dict display: keys (absent for ** entries) then values.
    auto dict_rest = [&](std::vector<PyNode> keys, std::vector<PyNode> values) {
      while (accept_op(",")) {
        if (at_op("}")) break;
        if (accept_op("**")) {
          values.push_back(bitwise_or());
        } else {
          keys.push_back(expression());
          expect_op(":");
          values.push_back(expression());
        }
      }
      expect_op("}");
      PyNode d("dict");
      d.add_all(keys);
      d.add_all(values);
      return d;
    };
    if (accept_op("**")) {
      std::vector<PyNode> values;
      values.push_back(bitwise_or());
      return dict_rest({}, std::move(values));
    }
    PyNode first = star_named_expression();
    if (accept_op(":")) {
      PyNode value = expression();
      if (at_comprehension()) {
        PyNode c("dictcomp");
        c.add(std::move(first));
        c.add(std::move(value));
        c.add_all(comprehension_clauses());
        expect_op("}");
        return c;
      }
      std::vector<PyNode> keys, values;
      keys.push_back(std::move(first));
      values.push_back(std::move(value));
      return dict_rest(std::move(keys), std::move(values));
    }
    if (at_comprehension()) {
      PyNode c("setcomp");
      c.add(std::move(first));
      c.add_all(comprehension_clauses());
      expect_op("}");
      return c;
    }
    PyNode s("set");
    s.add(std::move(first));
    while (accept_op(",")) {
      if (at_op("}")) break;
      s.add(star_named_expression());
    }
    expect_op("}");
    return s;
  }

  // Adjacent string literals concatenate; any f-string makes the whole run
  // a joinedstr whose parts are literal runs (str) and replacement fields.
  PyNode strings() {
    std::vector<const Token*> run;
    bool any_f = false;
    while (at(TokKind::String)) {
      run.push_back(&peek());
      any_f = any_f || peek().is_fstring();
      ++pos_;
    }
    if (!any_f) return PyNode("str");
    PyNode joined("joinedstr");
    bool pending_literal = false;
    for (const Token* tok : run) {
      const bool raw = tok->prefix.find('r') != std::string::npos;
      if (tok->is_fstring()) {
        fstring_parts(tok->text, raw, joined, pending_literal, tok->line);
      } else if (has_literal_text(tok->text, raw)) {
        pending_literal = true;
      }
    }
    if (pending_literal) joined.add(PyNode("str"));
    return joined;
  }

  // False when a string body denotes the empty string (backslash-newline
  // pairs are line continuations in non-raw literals).
  static bool has_literal_text(std::string_view body, bool raw) {
    if (raw) return !body.empty();
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '\\' && i + 1 < body.size() && body[i + 1] == '\n') {
        ++i;
        continue;
      }
      return true;
    }
    return false;
  }

  static PyNode parse_embedded(std::string_view expr_text, std::size_t line) {
    if (expr_text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
      throw SyntaxError("f-string: empty expression not allowed", line);
    }
    std::string wrapped = "(" + std::string(expr_text) + ")";
    Parser inner(lex_python(wrapped));
    return inner.parse_expression_list();
  }

  // Scans the body of one f-string, appending literal and formattedvalue
  // parts to `out`.
  static void fstring_parts(std::string_view body, bool raw, PyNode& out, bool& pending_literal,
                            std::size_t line) {
    std::size_t i = 0;
    while (i < body.size()) {
      const char c = body[i];
      if (c == '\\' && !raw && i + 1 < body.size()) {
        if (body[i + 1] == '\n') {
          i += 2;
          continue;
        }
        if (body[i + 1] == 'N' && i + 2 < body.size() && body[i + 2] == '{') {
          const std::size_t close = body.find('}', i + 3);
          if (close == std::string_view::npos) throw SyntaxError("malformed \\N escape", line);
          pending_literal = true;
          i = close + 1;
          continue;
        }
        pending_literal = true;
        i += 2;
        continue;
      }
      if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
        pending_literal = true;
        i += 2;
        continue;
      }
      if (c == '}') {
        if (i + 1 < body.size() && body[i + 1] == '}') {
          pending_literal = true;
          i += 2;
          continue;
        }
        throw SyntaxError("f-string: single '}' is not allowed", line);
      }
      if (c != '{') {
        pending_literal = true;
        ++i;
        continue;
      }
      // Replacement field.
      std::size_t j = i + 1;
      int depth = 0;
      char quote = 0;
      bool debug = false;
      for (; j < body.size(); ++j) {
        const char d = body[j];
        if (quote) {
          if (d == quote) quote = 0;
          continue;
        }
        if (d == '\'' || d == '"') {
          quote = d;
        } else if (d == '(' || d == '[' || d == '{') {
          ++depth;
        } else if ((d == ')' || d == ']' || d == '}') && depth > 0) {
          --depth;
        } else if (depth == 0) {
          if (d == '}' || d == ':') break;
          if (d == '!' && !(j + 1 < body.size() && body[j + 1] == '=')) break;
          if (d == '=' && j + 1 < body.size()) {
            const char prev = body[j - 1];
            const char next = body[j + 1];
            if (next != '=' && prev != '=' && prev != '!' && prev != '<' && prev != '>' &&
                (next == '}' || next == '!' || next == ':' || next == ' ')) {
              std::size_t k = j + 1;
              while (k < body.size() && body[k] == ' ') ++k;
              if (k < body.size() && (body[k] == '}' || body[k] == '!' || body[k] == ':')) {
                debug = true;
                break;
              }
            }
          }
        }
      }
      if (j >= body.size()) throw SyntaxError("f-string: expecting '}'", line);
      const std::string_view expr_text = body.substr(i + 1, j - i - 1);
      PyNode value = parse_embedded(expr_text, line);
      if (debug) {
        pending_literal = true;
        ++j;
        while (j < body.size() && body[j] == ' ') ++j;
      }
      if (j < body.size() && body[j] == '!') {
        j += 2;  // conversion character
        if (j > body.size()) throw SyntaxError("f-string: invalid conversion", line);
      }
      PyNode field("formattedvalue");
      field.add(std::move(value));
      if (j < body.size() && body[j] == ':') {
        std::size_t k = j + 1;
        int nest = 0;
        for (; k < body.size(); ++k) {
          if (body[k] == '{') ++nest;
          else if (body[k] == '}') {
            if (nest == 0) break;
            --nest;
          }
        }
        if (k >= body.size()) throw SyntaxError("f-string: expecting '}'", line);
        PyNode spec("joinedstr");
        bool spec_literal = false;
        fstring_parts(body.substr(j + 1, k - j - 1), raw, spec, spec_literal, line);
        if (spec_literal) spec.add(PyNode("str"));
        field.add(std::move(spec));
        j = k;
      }
      if (j >= body.size() || body[j] != '}') throw SyntaxError("f-string: expecting '}'", line);
      if (pending_literal) out.add(PyNode("str"));
      pending_literal = false;
      out.add(std::move(field));
      i = j + 1;
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// Parses a module. Throws SyntaxError on invalid source.
inline PyNode parse_python(std::string_view source) {
  Parser p(lex_python(source));
  return p.parse_module();
}

}  // namespace nbdoc::ast
