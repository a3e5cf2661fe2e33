#pragma once

#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "logicode/common.hpp"

namespace logicode::checklang {

struct SourcePos {
  int line = 1;
  int col = 1;
};

enum class BinaryOp { Add, Sub, Mul, Div, Lt, Le, Eq, Ne, Ge, Gt, And, Or };
enum class UnaryOp { Neg, Not };
enum class Quantifier { Forall, Exists };

inline std::string_view to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Eq: return "=";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::And: return "and";
    case BinaryOp::Or: return "or";
  }
  return "?";
}

inline bool is_comparison(BinaryOp op) {
  return op == BinaryOp::Lt || op == BinaryOp::Le || op == BinaryOp::Eq || op == BinaryOp::Ne ||
         op == BinaryOp::Ge || op == BinaryOp::Gt;
}

/// Expression tree node. Children live in `args`; their meaning depends on
/// `kind`:
///   Call       name(args...)
///   Member     args[0].name
///   Index      args[0][args[1]]
///   Unary      op args[0]
///   Binary     args[0] op args[1]
///   In         args[0] in [args[1..]]   (numeric pair = closed range, strings = membership)
///   List       [args...]
///   Let        let name = args[0] in args[1]
///   If         if args[0] then args[1] else args[2]
///   Quant      forall|exists name in args[0]: args[1]
struct Expr {
  enum class Kind { Int, Float, String, Bool, Var, Call, Member, Index, Unary, Binary, In, List, Let, If, Quant };

  Kind kind = Kind::Int;
  long long int_value = 0;
  double float_value = 0;
  bool bool_value = false;
  std::string name;  // string literal text, variable, function, member or bound name
  BinaryOp bop = BinaryOp::Add;
  UnaryOp uop = UnaryOp::Not;
  Quantifier quant = Quantifier::Forall;
  std::vector<Expr> args;
  SourcePos pos;

  /// Structural equality; source positions are ignored.
  friend bool operator==(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Kind::Int: return a.int_value == b.int_value;
      case Kind::Float: return std::memcmp(&a.float_value, &b.float_value, sizeof(double)) == 0;
      case Kind::Bool: return a.bool_value == b.bool_value;
      case Kind::String:
      case Kind::Var: return a.name == b.name;
      case Kind::Unary:
        if (a.uop != b.uop) return false;
        break;
      case Kind::Binary:
        if (a.bop != b.bop) return false;
        break;
      case Kind::Quant:
        if (a.quant != b.quant || a.name != b.name) return false;
        break;
      case Kind::Call:
      case Kind::Member:
      case Kind::Let:
        if (a.name != b.name) return false;
        break;
      default: break;
    }
    return a.args == b.args;
  }
};

// Small constructors used by the parser, the reference compiler and tests.
namespace make {

inline Expr int_lit(long long v) {
  Expr e;
  e.kind = Expr::Kind::Int;
  e.int_value = v;
  return e;
}

inline Expr float_lit(double v) {
  Expr e;
  e.kind = Expr::Kind::Float;
  e.float_value = v;
  return e;
}

inline Expr str_lit(std::string v) {
  Expr e;
  e.kind = Expr::Kind::String;
  e.name = std::move(v);
  return e;
}

inline Expr bool_lit(bool v) {
  Expr e;
  e.kind = Expr::Kind::Bool;
  e.bool_value = v;
  return e;
}

inline Expr var(std::string n) {
  Expr e;
  e.kind = Expr::Kind::Var;
  e.name = std::move(n);
  return e;
}

inline Expr call(std::string fn, std::vector<Expr> args) {
  Expr e;
  e.kind = Expr::Kind::Call;
  e.name = std::move(fn);
  e.args = std::move(args);
  return e;
}

inline Expr member(Expr obj, std::string field) {
  Expr e;
  e.kind = Expr::Kind::Member;
  e.name = std::move(field);
  e.args.push_back(std::move(obj));
  return e;
}

inline Expr binary(BinaryOp op, Expr l, Expr r) {
  Expr e;
  e.kind = Expr::Kind::Binary;
  e.bop = op;
  e.args.push_back(std::move(l));
  e.args.push_back(std::move(r));
  return e;
}

inline Expr unary(UnaryOp op, Expr x) {
  Expr e;
  e.kind = Expr::Kind::Unary;
  e.uop = op;
  e.args.push_back(std::move(x));
  return e;
}

}  // namespace make

struct Binding {
  std::string name;
  Expr value;
  friend bool operator==(const Binding&, const Binding&) = default;
};

struct Check {
  std::string name;
  std::string covers;
  AnomalyType type = AnomalyType::Quantity;
  Expr condition;
  std::string reason_template;
  std::vector<Binding> bindings;
  SourcePos pos;

  friend bool operator==(const Check& a, const Check& b) {
    return a.name == b.name && a.covers == b.covers && a.type == b.type && a.condition == b.condition &&
           a.reason_template == b.reason_template && a.bindings == b.bindings;
  }
};

struct CheckProgram {
  std::vector<Check> checks;
  std::string source_text;

  /// Structural equality over checks; source text is not compared.
  bool same_structure(const CheckProgram& o) const { return checks == o.checks; }
};

class SyntaxError : public Error {
 public:
  SyntaxError(SourcePos pos, std::string message)
      : Error("syntax error at " + std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": " + message),
        pos_(pos),
        message_(std::move(message)) {}

  SourcePos pos() const { return pos_; }
  const std::string& message() const { return message_; }

 private:
  SourcePos pos_;
  std::string message_;
};

/// Placeholder names in a reason template, in order of appearance. Throws
/// std::invalid_argument on unbalanced or empty braces.
inline std::vector<std::string> placeholders(std::string_view tmpl) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '}') throw std::invalid_argument("unmatched '}' in reason template");
    if (tmpl[i] != '{') continue;
    const auto close = tmpl.find('}', i + 1);
    if (close == std::string_view::npos) throw std::invalid_argument("unterminated '{' in reason template");
    auto name = tmpl.substr(i + 1, close - i - 1);
    if (name.empty() || name.find('{') != std::string_view::npos)
      throw std::invalid_argument("malformed placeholder in reason template");
    out.emplace_back(name);
    i = close;
  }
  return out;
}

}  // namespace logicode::checklang
