#pragma once

// Lexer and recursive-descent parsers for .loo module files, .nspec
// specification files, and the shared assertion/expression grammar.
// Grammar reference: docs/formats.md.

#include <cctype>
#include <set>

#include "syntax.hpp"

namespace nec {

struct ParseError : std::runtime_error {
  int line, col;
  std::string expected;
  ParseError(int l, int c, const std::string& msg, std::string exp = "")
      : std::runtime_error("parse error at " + std::to_string(l) + ":" + std::to_string(c) +
                           ": " + msg + (exp.empty() ? "" : " (expected " + exp + ")")),
        line(l), col(c), expected(std::move(exp)) {}
};

struct Token {
  enum class K { Ident, Int, Sym, End };
  K k = K::End;
  std::string text;
  std::int64_t num = 0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }
  bool at(const std::string& s) const {
    return (tok_.k == Token::K::Sym || tok_.k == Token::K::Ident) && tok_.text == s;
  }
  bool at_end() const { return tok_.k == Token::K::End; }
  Token expect(const std::string& s) {
    if (!at(s)) fail("unexpected token '" + tok_.text + "'", "'" + s + "'");
    return next();
  }
  bool accept(const std::string& s) {
    if (!at(s)) return false;
    next();
    return true;
  }
  std::string expect_ident() {
    if (tok_.k != Token::K::Ident) fail("unexpected token '" + tok_.text + "'", "identifier");
    return next().text;
  }
  [[noreturn]] void fail(const std::string& msg, std::string expected = "") const {
    throw ParseError(tok_.line, tok_.col, msg, std::move(expected));
  }

 private:
  void advance() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') { ++line_; col_ = 1; ++pos_; continue; }
      if (std::isspace(static_cast<unsigned char>(c))) { ++col_; ++pos_; continue; }
      if (c == '#') {  // comment to end of line
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
        continue;
      }
      if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
        continue;
      }
      break;
    }
    tok_ = Token{};
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) { tok_.k = Token::K::End; tok_.text = "<eof>"; return; }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      size_t s = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' ||
              src_[pos_] == '$'))
        ++pos_;
      tok_.k = Token::K::Ident;
      tok_.text = src_.substr(s, pos_ - s);
      col_ += static_cast<int>(pos_ - s);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])) && minus_starts_number_)) {
      size_t s = pos_;
      if (c == '-') ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      tok_.k = Token::K::Int;
      tok_.text = src_.substr(s, pos_ - s);
      tok_.num = std::stoll(tok_.text);
      col_ += static_cast<int>(pos_ - s);
      return;
    }
    static const char* two[] = {":=", "==", "&&", "||", "==>", "!=", nullptr};
    // try three- then two-char symbols
    for (const char* sym : {"==>", "::"}) {
      size_t n = std::string(sym).size();
      if (src_.compare(pos_, n, sym) == 0) {
        tok_.k = Token::K::Sym; tok_.text = sym; pos_ += n; col_ += static_cast<int>(n);
        return;
      }
    }
    for (int i = 0; two[i]; ++i) {
      if (src_.compare(pos_, 2, two[i]) == 0) {
        tok_.k = Token::K::Sym; tok_.text = two[i]; pos_ += 2; col_ += 2;
        return;
      }
    }
    tok_.k = Token::K::Sym;
    tok_.text = std::string(1, c);
    ++pos_;
    ++col_;
  }

  std::string src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
  bool minus_starts_number_ = false;  // binary minus wins; no negative literals in source
};

// ---------------------------------------------------------------- expressions

class ExprParser {
 public:
  explicit ExprParser(Lexer& lx) : lx_(lx) {}

  // comparison level: additive (("==" | "<" | "!=") additive)?
  ExprP parse() {
    ExprP l = additive();
    if (lx_.accept("==")) return Expr::bin(Expr::K::Eq, l, additive());
    if (lx_.accept("!=")) return nullptr_marker_neq(l);
    if (lx_.accept("<")) return Expr::bin(Expr::K::Lt, l, additive());
    return l;
  }

  ExprP additive() {
    ExprP l = primary();
    for (;;) {
      if (lx_.accept("+")) l = Expr::bin(Expr::K::Add, l, primary());
      else if (lx_.accept("-")) l = Expr::bin(Expr::K::Sub, l, primary());
      else return l;
    }
  }

  ExprP primary() {
    if (lx_.accept("(")) {
      ExprP e = parse();
      lx_.expect(")");
      return postfix(e);
    }
    const Token& t = lx_.peek();
    if (t.k == Token::K::Int) return postfix(Expr::val_(Value::integer(lx_.next().num)));
    if (t.k == Token::K::Ident) {
      if (t.text == "true") { lx_.next(); return Expr::val_(Value::boolean(true)); }
      if (t.text == "false") { lx_.next(); return Expr::val_(Value::boolean(false)); }
      if (t.text == "null") { lx_.next(); return Expr::val_(Value::null()); }
      if (t.text == "if") {
        lx_.next();
        ExprP c = parse();
        lx_.expect("then");
        ExprP a = parse();
        lx_.expect("else");
        ExprP b = parse();
        return Expr::if_(c, a, b);
      }
      return postfix(Expr::var_(lx_.next().text));
    }
    lx_.fail("unexpected token '" + t.text + "'", "expression");
  }

  // a primary without postfix field/ghost chaining (used by the calls() parser,
  // which needs to spot the method segment itself)
  ExprP primary_no_postfix() {
    const Token& t = lx_.peek();
    if (t.k == Token::K::Int) return Expr::val_(Value::integer(lx_.next().num));
    if (t.k == Token::K::Ident) return Expr::var_(lx_.next().text);
    lx_.fail("unexpected token '" + t.text + "'", "calls receiver");
  }

  ExprP postfix(ExprP e) {
    for (;;) {
      if (lx_.at(".")) {
        lx_.next();
        std::string n = lx_.expect_ident();
        if (lx_.accept("(")) {
          ExprP arg = parse();
          lx_.expect(")");
          e = Expr::ghost(e, n, arg);
        } else {
          e = Expr::field(e, n);
        }
      } else {
        return e;
      }
    }
  }

 private:
  // e1 != e2 has no Expr node; the assertion layer wraps as !(e1 == e2).
  // When it appears in pure-expression position, encode as (e1 == e2) == false.
  ExprP nullptr_marker_neq(ExprP l) {
    return Expr::bin(Expr::K::Eq, Expr::bin(Expr::K::Eq, l, additive()),
                     Expr::val_(Value::boolean(false)));
  }

  Lexer& lx_;
};

inline ExprP parse_expr_text(const std::string& s) {
  Lexer lx(s);
  ExprP e = ExprParser(lx).parse();
  if (!lx.at_end()) lx.fail("trailing input after expression");
  return e;
}

// ---------------------------------------------------------------- assertions

class AssertionParser {
 public:
  explicit AssertionParser(Lexer& lx) : lx_(lx) {}

  AssnP parse() { return implies(); }

  AssnP implies() {
    AssnP l = disj();
    if (lx_.accept("==>")) return Assertion::implies(l, implies());
    return l;
  }
  AssnP disj() {
    AssnP l = conj();
    while (lx_.accept("||")) l = Assertion::or_(l, conj());
    return l;
  }
  AssnP conj() {
    AssnP l = unary();
    while (lx_.accept("&&")) l = Assertion::and_(l, unary());
    return l;
  }

  AssnP unary() {
    if (lx_.accept("!")) return Assertion::not_(unary());
    if (lx_.at("forall") || lx_.at("exists")) {
      bool fa = lx_.next().text == "forall";
      std::vector<std::string> vars;
      vars.push_back(lx_.expect_ident());
      while (lx_.accept(",")) vars.push_back(lx_.expect_ident());
      lx_.expect(".");
      lx_.expect("[");
      AssnP body = parse();
      lx_.expect("]");
      for (auto it = vars.rbegin(); it != vars.rend(); ++it)
        body = Assertion::quant(fa ? Assertion::K::Forall : Assertion::K::Exists, *it, body);
      return body;
    }
    if (lx_.at("access") || lx_.at("internal") || lx_.at("external") || lx_.at("inside") ||
        lx_.at("calls")) {
      std::string kw = lx_.next().text;
      lx_.expect("(");
      ExprParser ep(lx_);
      if (kw == "access") {
        ExprP x = ep.parse();
        lx_.expect(",");
        ExprP y = ep.parse();
        lx_.expect(")");
        return Assertion::access(x, y);
      }
      if (kw == "calls") {
        ExprP who = ep.parse();
        lx_.expect(",");
        // receiver-path . method ( args ) — receiver paths are field chains only
        ExprP recv = ep.primary_no_postfix();
        std::string meth;
        std::vector<ExprP> args;
        for (;;) {
          lx_.expect(".");
          std::string n = lx_.expect_ident();
          if (lx_.accept("(")) {
            meth = n;
            while (!lx_.at(")")) {
              args.push_back(ep.parse());
              if (!lx_.at(")")) lx_.expect(",");
            }
            lx_.next();
            break;
          }
          recv = Expr::field(recv, n);
        }
        lx_.expect(")");
        return Assertion::calls(who, recv, meth, std::move(args));
      }
      ExprP x = ep.parse();
      lx_.expect(")");
      if (kw == "internal") return Assertion::pred(Assertion::K::Internal, x);
      if (kw == "external") return Assertion::pred(Assertion::K::External, x);
      return Assertion::pred(Assertion::K::Inside, x);
    }
    if (lx_.accept("(")) {
      AssnP a = parse();
      lx_.expect(")");
      // allow (e) : C ? no — classof applies to plain expressions only
      return a;
    }
    // plain expression, optionally with ": Class" or "!=" folded as negation
    ExprParser ep(lx_);
    ExprP l = ep.additive();
    if (lx_.accept(":")) {
      std::string c = lx_.expect_ident();
      return Assertion::has_class(l, c);
    }
    if (lx_.accept("==")) return Assertion::expr(Expr::bin(Expr::K::Eq, l, ep.additive()));
    if (lx_.accept("!="))
      return Assertion::not_(Assertion::expr(Expr::bin(Expr::K::Eq, l, ep.additive())));
    if (lx_.accept("<")) return Assertion::expr(Expr::bin(Expr::K::Lt, l, ep.additive()));
    return Assertion::expr(l);
  }

 private:
  Lexer& lx_;
};

inline AssnP parse_assertion_text(const std::string& s) {
  Lexer lx(s);
  AssnP a = AssertionParser(lx).parse();
  if (!lx.at_end()) lx.fail("trailing input after assertion");
  return a;
}

// ---------------------------------------------------------------- statements

class StmtParser {
 public:
  explicit StmtParser(Lexer& lx) : lx_(lx) {}

  std::vector<StmtP> block() {  // caller consumed '{'; we consume through '}'
    std::vector<StmtP> out;
    while (!lx_.at("}")) {
      if (lx_.at_end()) lx_.fail("unterminated block", "'}'");
      out.push_back(stmt());
      lx_.accept(";");
    }
    lx_.next();
    // a Return may only appear last
    for (size_t i = 0; i + 1 < out.size(); ++i)
      if (out[i]->k == Stmt::K::Return)
        lx_.fail("return must be the final statement of a body");
    return out;
  }

  StmtP stmt() {
    if (lx_.at("return")) {
      lx_.next();
      ExprParser ep(lx_);
      return Stmt::ret(ep.parse());
    }
    if (lx_.at("if")) {
      lx_.next();
      ExprParser ep(lx_);
      ExprP c = ep.parse();
      lx_.expect("{");
      std::vector<StmtP> thn = block();
      std::vector<StmtP> els;
      if (lx_.accept("else")) {
        lx_.expect("{");
        els = block();
      }
      return Stmt::if_(c, std::move(thn), std::move(els));
    }
    std::string x = lx_.expect_ident();
    if (lx_.accept(".")) {  // x.f := e
      std::string f = lx_.expect_ident();
      lx_.expect(":=");
      ExprParser ep(lx_);
      return Stmt::write(x, f, ep.parse());
    }
    lx_.expect(":=");
    if (lx_.accept("new")) {
      std::string c = lx_.expect_ident();
      return Stmt::new_(x, c, arg_atoms());
    }
    std::string y = lx_.expect_ident();
    lx_.expect(".");
    std::string n = lx_.expect_ident();
    if (lx_.at("(")) return Stmt::call(x, y, n, arg_atoms());
    return Stmt::read(x, y, n);
  }

  std::vector<ExprP> arg_atoms() {
    lx_.expect("(");
    std::vector<ExprP> args;
    while (!lx_.at(")")) {
      args.push_back(atom());
      if (!lx_.at(")")) lx_.expect(",");
    }
    lx_.next();
    return args;
  }

  ExprP atom() {  // call/new arguments: variables or literal values only
    const Token& t = lx_.peek();
    if (t.k == Token::K::Int) return Expr::val_(Value::integer(lx_.next().num));
    if (t.k == Token::K::Ident) {
      if (t.text == "true") { lx_.next(); return Expr::val_(Value::boolean(true)); }
      if (t.text == "false") { lx_.next(); return Expr::val_(Value::boolean(false)); }
      if (t.text == "null") { lx_.next(); return Expr::val_(Value::null()); }
      return Expr::var_(lx_.next().text);
    }
    lx_.fail("call arguments must be variables or literals", "atom");
  }

 private:
  Lexer& lx_;
};

inline std::vector<StmtP> parse_stmts_text(const std::string& s) {
  Lexer lx(s + "\n}");
  return StmtParser(lx).block();
}

// ---------------------------------------------------------------- modules

inline std::string parse_type(Lexer& lx) { return lx.expect_ident(); }

inline Module parse_module(const std::string& source) {
  Lexer lx(source);
  Module m;
  lx.expect("module");
  m.name = lx.expect_ident();
  while (!lx.at_end()) {
    ClassDef cd;
    if (lx.accept("confined")) cd.confined = true;
    lx.expect("class");
    cd.name = lx.expect_ident();
    if (m.has(cd.name)) lx.fail("duplicate class " + cd.name);
    lx.expect("{");
    while (!lx.accept("}")) {
      if (lx.at_end()) lx.fail("unterminated class body", "'}'");
      if (lx.accept("field")) {
        Param p;
        p.name = lx.expect_ident();
        lx.expect(":");
        p.type = parse_type(lx);
        if (cd.field(p.name)) lx.fail("duplicate field " + p.name);
        cd.fields.push_back(p);
      } else if (lx.accept("ghost")) {
        GhostDef g;
        if (lx.accept("intrnl")) g.intrnl = true;
        g.name = lx.expect_ident();
        lx.expect("(");
        g.param.name = lx.expect_ident();
        lx.expect(":");
        g.param.type = parse_type(lx);
        lx.expect(")");
        lx.expect(":");
        g.rtype = parse_type(lx);
        lx.expect("=");
        ExprParser ep(lx);
        g.body = ep.parse();
        if (cd.ghost(g.name)) lx.fail("duplicate ghost " + g.name);
        cd.ghosts.push_back(g);
      } else if (lx.at("constr") || lx.at("method")) {
        bool is_ctor = lx.next().text == "constr";
        MethodDef md;
        md.name = is_ctor ? "constr" : lx.expect_ident();
        lx.expect("(");
        while (!lx.at(")")) {
          Param p;
          p.name = lx.expect_ident();
          lx.expect(":");
          p.type = parse_type(lx);
          md.params.push_back(p);
          if (!lx.at(")")) lx.expect(",");
        }
        lx.next();
        if (!is_ctor && lx.accept(":")) md.rtype = parse_type(lx);
        lx.expect("{");
        StmtParser sp(lx);
        md.body = sp.block();
        if (is_ctor) {
          if (cd.ctor) lx.fail("duplicate constructor in " + cd.name);
          for (const auto& s : md.body)
            if (s->k == Stmt::K::Return) lx.fail("constructor bodies may not return");
          cd.ctor = md;
        } else {
          if (cd.method(md.name)) lx.fail("duplicate method " + md.name);
          cd.methods.push_back(md);
        }
      } else {
        lx.fail("unexpected token '" + lx.peek().text + "' in class body",
                "field/ghost/constr/method");
      }
    }
    m.classes.push_back(std::move(cd));
  }
  return m;
}

// ---------------------------------------------------------------- necessity specs

inline NecessitySpec parse_spec_stanza(Lexer& lx) {
  NecessitySpec s;
  if (lx.accept("spec")) s.name = lx.expect_ident();
  if (lx.accept("assert")) {
    s.k = NecessitySpec::K::Plain;
    AssertionParser ap(lx);
    s.a3 = ap.parse();
    return s;
  }
  lx.expect("from");
  {
    AssertionParser ap(lx);
    s.a1 = ap.parse();
  }
  bool next_form = false;
  if (lx.accept("next")) next_form = true;
  else lx.expect("to");
  {
    AssertionParser ap(lx);
    s.a2 = ap.parse();
  }
  if (lx.accept("onlyIf")) {
    s.k = next_form ? NecessitySpec::K::OnlyIfNext : NecessitySpec::K::OnlyIf;
  } else if (lx.accept("onlyThrough")) {
    if (next_form) lx.fail("onlyThrough uses 'to', not 'next'");
    s.k = NecessitySpec::K::OnlyThrough;
  } else {
    lx.fail("unexpected token '" + lx.peek().text + "'", "onlyIf/onlyThrough");
  }
  AssertionParser ap(lx);
  s.a3 = ap.parse();
  return s;
}

inline std::vector<NecessitySpec> parse_specs(const std::string& source) {
  Lexer lx(source);
  std::vector<NecessitySpec> out;
  while (!lx.at_end()) out.push_back(parse_spec_stanza(lx));
  return out;
}

inline NecessitySpec parse_spec(const std::string& source) {
  auto all = parse_specs(source);
  if (all.empty()) {
    Lexer lx(source);
    lx.fail("no specification found");
  }
  return all.front();
}

}  // namespace nec
