#pragma once

#include <string>

#include "logicode/checklang/ast.hpp"

namespace logicode::checklang {

namespace detail {

// Binding strength used to decide where parentheses are needed.
enum Prec : int {
  kOpen = 0,  // let / if / quantifiers: extend to the right
  kOr = 1,
  kAnd = 2,
  kNot = 3,
  kCmp = 4,
  kSum = 5,
  kProduct = 6,
  kUnary = 7,
  kPostfix = 8,
};

inline int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Let:
    case Expr::Kind::If:
    case Expr::Kind::Quant: return kOpen;
    case Expr::Kind::Binary:
      switch (e.bop) {
        case BinaryOp::Or: return kOr;
        case BinaryOp::And: return kAnd;
        case BinaryOp::Add:
        case BinaryOp::Sub: return kSum;
        case BinaryOp::Mul:
        case BinaryOp::Div: return kProduct;
        default: return kCmp;
      }
    case Expr::Kind::In: return kCmp;
    case Expr::Kind::Unary: return e.uop == UnaryOp::Not ? kNot : kUnary;
    case Expr::Kind::Int: return e.int_value < 0 ? kUnary : kPostfix;
    case Expr::Kind::Float: return std::signbit(e.float_value) ? kUnary : kPostfix;
    default: return kPostfix;
  }
}

inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

inline void print(const Expr& e, int min_prec, std::string& out);

inline void print_list(const std::vector<Expr>& items, std::size_t from, std::string& out) {
  for (std::size_t i = from; i < items.size(); ++i) {
    if (i > from) out += ", ";
    print(items[i], kOpen, out);
  }
}

inline void print(const Expr& e, int min_prec, std::string& out) {
  const bool parens = precedence(e) < min_prec;
  if (parens) out += '(';
  switch (e.kind) {
    case Expr::Kind::Int: out += std::to_string(e.int_value); break;
    case Expr::Kind::Float: out += shortest(e.float_value); break;
    case Expr::Kind::String: out += quote(e.name); break;
    case Expr::Kind::Bool: out += e.bool_value ? "true" : "false"; break;
    case Expr::Kind::Var: out += e.name; break;
    case Expr::Kind::Call:
      out += e.name;
      out += '(';
      print_list(e.args, 0, out);
      out += ')';
      break;
    case Expr::Kind::Member:
      print(e.args[0], kPostfix, out);
      out += '.';
      out += e.name;
      break;
    case Expr::Kind::Index:
      print(e.args[0], kPostfix, out);
      out += '[';
      print(e.args[1], kOpen, out);
      out += ']';
      break;
    case Expr::Kind::Unary:
      if (e.uop == UnaryOp::Not) {
        out += "not ";
        print(e.args[0], kNot, out);
      } else {
        out += '-';
        // Keep "- -x" and "- 3"-style literals unambiguous.
        std::string inner;
        print(e.args[0], kUnary, inner);
        if (!inner.empty() && (inner[0] == '-' || std::isdigit(static_cast<unsigned char>(inner[0])))) out += '(' + inner + ')';
        else out += inner;
      }
      break;
    case Expr::Kind::Binary: {
      const int p = precedence(e);
      if (p == kCmp) {
        print(e.args[0], kSum, out);
        out += ' ';
        out += to_string(e.bop);
        out += ' ';
        print(e.args[1], kSum, out);
      } else {
        print(e.args[0], p, out);
        out += ' ';
        out += to_string(e.bop);
        out += ' ';
        print(e.args[1], p + 1, out);
      }
      break;
    }
    case Expr::Kind::In:
      print(e.args[0], kSum, out);
      out += " in [";
      print_list(e.args, 1, out);
      out += ']';
      break;
    case Expr::Kind::List:
      out += '[';
      print_list(e.args, 0, out);
      out += ']';
      break;
    case Expr::Kind::Let:
      out += "let " + e.name + " = ";
      print(e.args[0], kSum, out);
      out += " in ";
      print(e.args[1], kOpen, out);
      break;
    case Expr::Kind::If:
      out += "if ";
      print(e.args[0], kOpen, out);
      out += " then ";
      print(e.args[1], kOpen, out);
      out += " else ";
      print(e.args[2], kOpen, out);
      break;
    case Expr::Kind::Quant:
      out += e.quant == Quantifier::Forall ? "forall " : "exists ";
      out += e.name + " in ";
      print(e.args[0], kSum, out);
      out += ": ";
      print(e.args[1], kOpen, out);
      break;
  }
  if (parens) out += ')';
}

}  // namespace detail

inline std::string pretty_print(const Expr& e) {
  std::string out;
  detail::print(e, detail::kOpen, out);
  return out;
}

/// Canonical text form of a program; this is the wire format used in
/// cassettes, golden files and hashes.
inline std::string pretty_print(const CheckProgram& p) {
  std::string out;
  for (std::size_t i = 0; i < p.checks.size(); ++i) {
    const Check& c = p.checks[i];
    if (i) out += '\n';
    out += "check " + c.name + " covers " + c.covers + " type " + std::string(keyword(c.type)) + "\n";
    out += "  when ";
    detail::print(c.condition, detail::kOpen, out);
    out += "\n  reason " + detail::quote(c.reason_template) + "\n";
    if (!c.bindings.empty()) {
      out += "  with ";
      for (std::size_t k = 0; k < c.bindings.size(); ++k) {
        if (k) out += ", ";
        out += c.bindings[k].name + " = ";
        detail::print(c.bindings[k].value, detail::kOpen, out);
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace logicode::checklang
