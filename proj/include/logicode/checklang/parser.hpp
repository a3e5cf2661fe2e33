#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "logicode/checklang/ast.hpp"

namespace logicode::checklang {

enum class Tok { Ident, Int, Float, String, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;  // identifier, punctuation, or decoded string literal
  long long int_value = 0;
  double float_value = 0;
  SourcePos pos;
};

/// Splits source text into tokens. Punctuation tokens are normalised to
/// their ASCII spelling (the Unicode forms ≤ ≥ ≠ are accepted on input).
class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.pos = pos_;
      if (at_end()) {
        t.kind = Tok::End;
        out.push_back(std::move(t));
        return out;
      }
      const char c = peek();
      if (is_ident_start(c)) {
        t.kind = Tok::Ident;
        while (!at_end() && is_ident_char(peek())) t.text += advance();
      } else if (is_digit(c)) {
        lex_number(t);
      } else if (c == '"') {
        lex_string(t);
      } else {
        lex_punct(t);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
  static bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

  bool at_end() const { return i_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const { return i_ + ahead < src_.size() ? src_[i_ + ahead] : '\0'; }

  char advance() {
    const char c = src_[i_++];
    if (c == '\n') {
      ++pos_.line;
      pos_.col = 1;
    } else if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) {
      ++pos_.col;  // count code points, not bytes
    }
    return c;
  }

  void skip_space() {
    while (!at_end()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '#') {
        while (!at_end() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  void lex_number(Token& t) {
    const std::size_t start = i_;
    bool is_float = false;
    while (is_digit(peek())) advance();
    if (peek() == '.' && is_digit(peek(1))) {
      is_float = true;
      advance();
      while (is_digit(peek())) advance();
    }
    if (peek() == 'e' || peek() == 'E') {
      std::size_t k = 1;
      if (peek(k) == '+' || peek(k) == '-') ++k;
      if (is_digit(peek(k))) {
        is_float = true;
        for (std::size_t j = 0; j < k; ++j) advance();
        while (is_digit(peek())) advance();
      }
    }
    if (is_ident_start(peek())) throw SyntaxError(pos_, "unexpected character after number");
    const std::string_view text = src_.substr(start, i_ - start);
    const char* b = text.data();
    const char* e = text.data() + text.size();
    if (is_float) {
      t.kind = Tok::Float;
      auto [p, ec] = std::from_chars(b, e, t.float_value);
      if (ec != std::errc() || p != e) throw SyntaxError(t.pos, "float literal out of range");
    } else {
      t.kind = Tok::Int;
      auto [p, ec] = std::from_chars(b, e, t.int_value);
      if (ec != std::errc() || p != e) throw SyntaxError(t.pos, "integer literal out of range");
    }
    t.text = std::string(text);
  }

  void lex_string(Token& t) {
    t.kind = Tok::String;
    advance();  // opening quote
    for (;;) {
      if (at_end()) throw SyntaxError(t.pos, "unterminated string literal");
      const char c = advance();
      if (c == '"') return;
      if (c == '\n') throw SyntaxError(t.pos, "newline in string literal");
      if (c == '\\') {
        if (at_end()) throw SyntaxError(t.pos, "unterminated string literal");
        const SourcePos esc = pos_;
        const char n = advance();
        switch (n) {
          case '"': t.text += '"'; break;
          case '\\': t.text += '\\'; break;
          case 'n': t.text += '\n'; break;
          case 't': t.text += '\t'; break;
          default: throw SyntaxError(esc, std::string("unknown escape '\\") + n + "'");
        }
      } else {
        t.text += c;
      }
    }
  }

  void lex_punct(Token& t) {
    t.kind = Tok::Punct;
    static constexpr std::pair<std::string_view, std::string_view> kMulti[] = {
        {"<=", "<="}, {">=", ">="}, {"!=", "!="},
        {"\xE2\x89\xA4", "<="}, {"\xE2\x89\xA5", ">="}, {"\xE2\x89\xA0", "!="},
    };
    for (const auto& [spelling, norm] : kMulti) {
      if (src_.substr(i_, spelling.size()) == spelling) {
        for (std::size_t k = 0; k < spelling.size(); ++k) advance();
        t.text = norm;
        return;
      }
    }
    const char c = peek();
    static constexpr std::string_view kSingle = "()[],.:=<>+-*/";
    if (kSingle.find(c) == std::string_view::npos) {
      std::string shown = (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) >= 0x7F)
                              ? "byte 0x" + std::string(1, "0123456789abcdef"[(static_cast<unsigned char>(c) >> 4)]) +
                                    std::string(1, "0123456789abcdef"[c & 0xF])
                              : std::string("'") + c + "'";
      throw SyntaxError(pos_, "unexpected " + shown);
    }
    t.text = std::string(1, advance());
  }

  std::string_view src_;
  std::size_t i_ = 0;
  SourcePos pos_;
};

/// Recursive-descent parser for check programs.
///
///   program  := check*
///   check    := 'check' IDENT 'covers' IDENT 'type' TYPE 'when' expr
///               'reason' STRING ('with' IDENT '=' expr (',' IDENT '=' expr)*)?
///   expr     := 'let' IDENT '=' sum 'in' expr
///             | 'if' expr 'then' expr 'else' expr
///             | ('forall' | 'exists') IDENT 'in' sum ':' expr
///             | or
///   or       := and ('or' and)*
///   and      := not ('and' not)*
///   not      := 'not' not | cmp
///   cmp      := sum (CMPOP sum | 'in' '[' exprs ']')?
///   sum      := product (('+' | '-') product)*
///   product  := unary (('*' | '/') unary)*
///   unary    := '-' unary | postfix
///   postfix  := primary ('.' IDENT | '[' expr ']')*
///   primary  := INT | FLOAT | STRING | 'true' | 'false' | IDENT | IDENT '(' exprs ')'
///             | '(' expr ')' | '[' exprs ']'
class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(Lexer(src).run()) {}

  CheckProgram program() {
    CheckProgram p;
    while (!at(Tok::End)) p.checks.push_back(check());
    return p;
  }

  Expr expression_only() {
    Expr e = expr();
    if (!at(Tok::End)) fail("unexpected '" + cur().text + "' after expression");
    return e;
  }

 private:
  static constexpr int kMaxDepth = 200;

  const Token& cur() const { return toks_[k_]; }
  bool at(Tok kind) const { return cur().kind == kind; }
  bool at_punct(std::string_view p) const { return cur().kind == Tok::Punct && cur().text == p; }
  bool at_kw(std::string_view w) const { return cur().kind == Tok::Ident && cur().text == w; }

  [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(cur().pos, msg); }

  std::string describe() const {
    switch (cur().kind) {
      case Tok::End: return "end of input";
      case Tok::String: return "string literal";
      case Tok::Int:
      case Tok::Float: return "number '" + cur().text + "'";
      default: return "'" + cur().text + "'";
    }
  }

  Token take() { return toks_[k_ < toks_.size() - 1 ? k_++ : k_]; }

  void expect_punct(std::string_view p) {
    if (!at_punct(p)) fail("expected '" + std::string(p) + "' but found " + describe());
    take();
  }

  void expect_kw(std::string_view w) {
    if (!at_kw(w)) fail("expected '" + std::string(w) + "' but found " + describe());
    take();
  }

  static bool is_reserved(std::string_view w) {
    static constexpr std::string_view kWords[] = {"check", "covers", "type", "when",   "reason", "with",
                                                  "let",   "in",     "if",   "then",   "else",   "forall",
                                                  "exists", "and",   "or",   "not",    "true",   "false"};
    for (auto k : kWords)
      if (k == w) return true;
    return false;
  }

  std::string ident(const char* what) {
    if (!at(Tok::Ident) || is_reserved(cur().text)) fail(std::string("expected ") + what + " but found " + describe());
    return take().text;
  }

  struct DepthGuard {
    Parser& p;
    explicit DepthGuard(Parser& parser) : p(parser) {
      if (++p.depth_ > kMaxDepth) p.fail("expression nested too deeply");
    }
    ~DepthGuard() { --p.depth_; }
  };

  Check check() {
    Check c;
    c.pos = cur().pos;
    expect_kw("check");
    c.name = ident("check name");
    expect_kw("covers");
    c.covers = ident("rule id");
    expect_kw("type");
    if (!at(Tok::Ident)) fail("expected anomaly type but found " + describe());
    auto t = anomaly_type_from_keyword(cur().text);
    if (!t) fail("unknown anomaly type '" + cur().text + "' (expected Quantity, Size, Position or Matching)");
    take();
    c.type = *t;
    expect_kw("when");
    c.condition = expr();
    expect_kw("reason");
    if (!at(Tok::String)) fail("expected reason string but found " + describe());
    c.reason_template = take().text;
    if (at_kw("with")) {
      take();
      do {
        Binding b;
        b.name = ident("binding name");
        expect_punct("=");
        b.value = expr();
        c.bindings.push_back(std::move(b));
      } while (at_punct(",") && (take(), true));
    }
    if (!at(Tok::End) && !at_kw("check")) fail("expected 'check' or end of input but found " + describe());
    return c;
  }

  Expr expr() {
    DepthGuard g(*this);
    const SourcePos pos = cur().pos;
    if (at_kw("let")) {
      take();
      Expr e;
      e.kind = Expr::Kind::Let;
      e.pos = pos;
      e.name = ident("variable name");
      expect_punct("=");
      e.args.push_back(sum());
      expect_kw("in");
      e.args.push_back(expr());
      return e;
    }
    if (at_kw("if")) {
      take();
      Expr e;
      e.kind = Expr::Kind::If;
      e.pos = pos;
      e.args.push_back(expr());
      expect_kw("then");
      e.args.push_back(expr());
      expect_kw("else");
      e.args.push_back(expr());
      return e;
    }
    if (at_kw("forall") || at_kw("exists")) {
      Expr e;
      e.kind = Expr::Kind::Quant;
      e.pos = pos;
      e.quant = take().text == "forall" ? Quantifier::Forall : Quantifier::Exists;
      e.name = ident("variable name");
      expect_kw("in");
      e.args.push_back(sum());
      expect_punct(":");
      e.args.push_back(expr());
      return e;
    }
    return or_expr();
  }

  Expr or_expr() {
    Expr l = and_expr();
    while (at_kw("or")) {
      const SourcePos pos = take().pos;
      Expr e = make::binary(BinaryOp::Or, std::move(l), and_expr());
      e.pos = pos;
      l = std::move(e);
    }
    return l;
  }

  Expr and_expr() {
    Expr l = not_expr();
    while (at_kw("and")) {
      const SourcePos pos = take().pos;
      Expr e = make::binary(BinaryOp::And, std::move(l), not_expr());
      e.pos = pos;
      l = std::move(e);
    }
    return l;
  }

  Expr not_expr() {
    DepthGuard g(*this);
    if (at_kw("not")) {
      const SourcePos pos = take().pos;
      Expr e = make::unary(UnaryOp::Not, not_expr());
      e.pos = pos;
      return e;
    }
    return cmp();
  }

  Expr cmp() {
    Expr l = sum();
    static constexpr std::pair<std::string_view, BinaryOp> kOps[] = {
        {"<", BinaryOp::Lt}, {"<=", BinaryOp::Le}, {"=", BinaryOp::Eq},
        {"!=", BinaryOp::Ne}, {">=", BinaryOp::Ge}, {">", BinaryOp::Gt}};
    for (const auto& [sym, op] : kOps) {
      if (at_punct(sym)) {
        const SourcePos pos = take().pos;
        Expr e = make::binary(op, std::move(l), sum());
        e.pos = pos;
        return e;
      }
    }
    if (at_kw("in")) {
      Expr e;
      e.kind = Expr::Kind::In;
      e.pos = take().pos;
      if (!at_punct("[")) fail("expected '[' after 'in' but found " + describe());
      e.args.push_back(std::move(l));
      for (auto& x : bracket_list()) e.args.push_back(std::move(x));
      return e;
    }
    return l;
  }

  Expr sum() {
    Expr l = product();
    while (at_punct("+") || at_punct("-")) {
      const Token t = take();
      Expr e = make::binary(t.text == "+" ? BinaryOp::Add : BinaryOp::Sub, std::move(l), product());
      e.pos = t.pos;
      l = std::move(e);
    }
    return l;
  }

  Expr product() {
    Expr l = unary();
    while (at_punct("*") || at_punct("/")) {
      const Token t = take();
      Expr e = make::binary(t.text == "*" ? BinaryOp::Mul : BinaryOp::Div, std::move(l), unary());
      e.pos = t.pos;
      l = std::move(e);
    }
    return l;
  }

  Expr unary() {
    DepthGuard g(*this);
    if (at_punct("-")) {
      const SourcePos pos = take().pos;
      Expr x = unary();
      // Fold negation into numeric literals so "-3" is the literal -3.
      if (x.kind == Expr::Kind::Int && x.int_value != std::numeric_limits<long long>::min()) {
        x.int_value = -x.int_value;
        x.pos = pos;
        return x;
      }
      if (x.kind == Expr::Kind::Float) {
        x.float_value = -x.float_value;
        x.pos = pos;
        return x;
      }
      Expr e = make::unary(UnaryOp::Neg, std::move(x));
      e.pos = pos;
      return e;
    }
    return postfix();
  }

  Expr postfix() {
    Expr e = primary();
    for (;;) {
      if (at_punct(".")) {
        const SourcePos pos = take().pos;
        Expr m = make::member(std::move(e), ident("field name"));
        m.pos = pos;
        e = std::move(m);
      } else if (at_punct("[")) {
        const SourcePos pos = take().pos;
        Expr ix;
        ix.kind = Expr::Kind::Index;
        ix.pos = pos;
        ix.args.push_back(std::move(e));
        ix.args.push_back(expr());
        expect_punct("]");
        e = std::move(ix);
      } else {
        return e;
      }
    }
  }

  std::vector<Expr> bracket_list() {
    expect_punct("[");
    std::vector<Expr> items;
    if (!at_punct("]")) {
      items.push_back(expr());
      while (at_punct(",")) {
        take();
        items.push_back(expr());
      }
    }
    expect_punct("]");
    return items;
  }

  Expr primary() {
    DepthGuard g(*this);
    const SourcePos pos = cur().pos;
    Expr e;
    switch (cur().kind) {
      case Tok::Int:
        e = make::int_lit(take().int_value);
        break;
      case Tok::Float:
        e = make::float_lit(take().float_value);
        break;
      case Tok::String:
        e = make::str_lit(take().text);
        break;
      case Tok::Ident: {
        if (at_kw("true") || at_kw("false")) {
          e = make::bool_lit(take().text == "true");
          break;
        }
        const std::string name = ident("expression");
        if (at_punct("(")) {
          take();
          std::vector<Expr> args;
          if (!at_punct(")")) {
            args.push_back(expr());
            while (at_punct(",")) {
              take();
              args.push_back(expr());
            }
          }
          expect_punct(")");
          e = make::call(name, std::move(args));
        } else {
          e = make::var(name);
        }
        break;
      }
      case Tok::Punct:
        if (at_punct("(")) {
          take();
          e = expr();
          expect_punct(")");
          return e;  // keep the inner node's position
        }
        if (at_punct("[")) {
          e.kind = Expr::Kind::List;
          e.args = bracket_list();
          break;
        }
        [[fallthrough]];
      default:
        fail("expected expression but found " + describe());
    }
    e.pos = pos;
    return e;
  }

  std::vector<Token> toks_;
  std::size_t k_ = 0;
  int depth_ = 0;
};

/// Parses a whole program; throws SyntaxError with the offending position.
inline CheckProgram parse(std::string_view source) {
  CheckProgram p = Parser(source).program();
  p.source_text = std::string(source);
  return p;
}

inline Expr parse_expression(std::string_view source) { return Parser(source).expression_only(); }

}  // namespace logicode::checklang
