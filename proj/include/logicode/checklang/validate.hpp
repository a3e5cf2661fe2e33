#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "logicode/checklang/ast.hpp"
#include "logicode/rules.hpp"

namespace logicode::checklang {

/// Static types. Lists carry an element type.
struct Type {
  enum class Base { Int, Float, Bool, String, Object, Size, Point, Color, List, Error };
  Base base = Base::Error;
  Base elem = Base::Error;  // meaningful for List

  static Type of(Base b) { return {b, Base::Error}; }
  static Type list(Base e) { return {Base::List, e}; }

  bool numeric() const { return base == Base::Int || base == Base::Float; }
  bool is(Base b) const { return base == b; }
  bool error() const { return base == Base::Error; }
  friend bool operator==(const Type&, const Type&) = default;
};

inline std::string to_string(Type::Base b) {
  switch (b) {
    case Type::Base::Int: return "int";
    case Type::Base::Float: return "float";
    case Type::Base::Bool: return "bool";
    case Type::Base::String: return "string";
    case Type::Base::Object: return "object";
    case Type::Base::Size: return "size";
    case Type::Base::Point: return "point";
    case Type::Base::Color: return "color";
    case Type::Base::List: return "list";
    case Type::Base::Error: return "<error>";
  }
  return "?";
}

inline std::string to_string(Type t) {
  if (t.base == Type::Base::List) return "list<" + to_string(t.elem) + ">";
  return to_string(t.base);
}

struct Diagnostic {
  std::string check;  // empty for program-level problems
  SourcePos pos;
  std::string message;

  std::string to_string() const {
    return (check.empty() ? std::string() : "check " + check + ": ") + std::to_string(pos.line) + ":" +
           std::to_string(pos.col) + ": " + message;
  }
};

enum class Outcome { Success, Error, Missing };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::Error: return "error";
    case Outcome::Missing: return "missing";
  }
  return "?";
}

inline std::optional<Outcome> parse_outcome(std::string_view s) {
  if (s == "success") return Outcome::Success;
  if (s == "error") return Outcome::Error;
  if (s == "missing") return Outcome::Missing;
  return std::nullopt;
}

struct ValidationReport {
  std::vector<Diagnostic> errors;     // type errors and contract violations
  std::set<std::string> coverage;     // rule ids covered by some check
  std::vector<std::string> missing;   // rule ids in rule order with no check

  bool clean() const { return errors.empty(); }

  /// Errors win over missing coverage.
  Outcome outcome() const {
    if (!errors.empty()) return Outcome::Error;
    if (!missing.empty()) return Outcome::Missing;
    return Outcome::Success;
  }
};

namespace detail {

using B = Type::Base;

class TypeChecker {
 public:
  TypeChecker(const rules::Vocabulary& vocab, std::vector<Diagnostic>& errors, std::string check)
      : vocab_(vocab), errors_(errors), check_(std::move(check)) {}

  Type check(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Int: return Type::of(B::Int);
      case Expr::Kind::Float: return Type::of(B::Float);
      case Expr::Kind::String: return Type::of(B::String);
      case Expr::Kind::Bool: return Type::of(B::Bool);
      case Expr::Kind::Var: {
        for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
          if (it->first == e.name) return it->second;
        return fail(e, "unbound variable '" + e.name + "'");
      }
      case Expr::Kind::Call: return call(e);
      case Expr::Kind::Member: return member(e);
      case Expr::Kind::Index: {
        const Type l = check(e.args[0]);
        const Type i = check(e.args[1]);
        if (l.error() || i.error()) return {};
        if (!l.is(B::List)) return fail(e, "indexing requires a list, got " + to_string(l));
        if (!i.is(B::Int)) return fail(e, "list index must be int, got " + to_string(i));
        return Type::of(l.elem);
      }
      case Expr::Kind::Unary: {
        const Type t = check(e.args[0]);
        if (t.error()) return {};
        if (e.uop == UnaryOp::Not) {
          if (!t.is(B::Bool)) return fail(e, "'not' requires bool, got " + to_string(t));
          return t;
        }
        if (!t.numeric()) return fail(e, "unary '-' requires a number, got " + to_string(t));
        return t;
      }
      case Expr::Kind::Binary: return binary(e);
      case Expr::Kind::In: return in(e);
      case Expr::Kind::List: {
        if (e.args.empty()) return fail(e, "empty list literal has no element type");
        std::optional<Type> elem;
        for (const auto& a : e.args) {
          const Type t = check(a);
          if (t.error()) return {};
          if (t.is(B::List)) return fail(a, "nested lists are not supported");
          if (!elem) elem = t;
          else if (*elem != t) {
            if (elem->numeric() && t.numeric()) elem = Type::of(B::Float);
            else return fail(a, "list elements mix " + to_string(*elem) + " and " + to_string(t));
          }
        }
        return Type::list(elem->base);
      }
      case Expr::Kind::Let: {
        const Type v = check(e.args[0]);
        if (v.error()) return {};
        scope_.emplace_back(e.name, v);
        const Type body = check(e.args[1]);
        scope_.pop_back();
        return body;
      }
      case Expr::Kind::If: {
        const Type c = check(e.args[0]);
        const Type a = check(e.args[1]);
        const Type b = check(e.args[2]);
        if (c.error() || a.error() || b.error()) return {};
        if (!c.is(B::Bool)) return fail(e.args[0], "'if' condition must be bool, got " + to_string(c));
        if (a == b) return a;
        if (a.numeric() && b.numeric()) return Type::of(B::Float);
        return fail(e, "'if' branches have different types " + to_string(a) + " and " + to_string(b));
      }
      case Expr::Kind::Quant: {
        const Type d = check(e.args[0]);
        if (d.error()) return {};
        if (!d.is(B::List)) return fail(e.args[0], "quantifier domain must be a list, got " + to_string(d));
        scope_.emplace_back(e.name, Type::of(d.elem));
        const Type body = check(e.args[1]);
        scope_.pop_back();
        if (body.error()) return {};
        if (!body.is(B::Bool)) return fail(e.args[1], "quantifier body must be bool, got " + to_string(body));
        return body;
      }
    }
    return {};
  }

  void bind(const std::string& name, Type t) { scope_.emplace_back(name, t); }

 private:
  Type fail(const Expr& e, std::string msg) {
    errors_.push_back({check_, e.pos, std::move(msg)});
    return {};
  }

  void check_name_literal(const Expr& arg) {
    if (arg.kind == Expr::Kind::String && !vocab_.has_name(arg.name))
      errors_.push_back({check_, arg.pos, "unknown object name \"" + arg.name + "\""});
  }

  static std::optional<Type> attr_type(rules::AttrType t) {
    switch (t) {
      case rules::AttrType::Int: return Type::of(B::Int);
      case rules::AttrType::Float: return Type::of(B::Float);
      case rules::AttrType::String: return Type::of(B::String);
      case rules::AttrType::Bool: return Type::of(B::Bool);
      case rules::AttrType::Rgb: return std::nullopt;
    }
    return std::nullopt;
  }

  Type call(const Expr& e) {
    std::vector<Type> at;
    for (const auto& a : e.args) {
      at.push_back(check(a));
      if (at.back().error()) return {};
    }
    auto sig = [&](std::initializer_list<Type> want) {
      if (at.size() != want.size()) return false;
      std::size_t i = 0;
      for (const auto& w : want) {
        const Type& got = at[i++];
        if (got == w) continue;
        if (w.is(B::Float) && got.is(B::Int)) continue;
        return false;
      }
      return true;
    };
    auto wrong = [&](const std::string& expected) {
      std::string got;
      for (std::size_t i = 0; i < at.size(); ++i) got += (i ? ", " : "") + to_string(at[i]);
      return fail(e, e.name + "(" + got + ") does not match " + e.name + "(" + expected + ")");
    };
    const Type S = Type::of(B::String), I = Type::of(B::Int), O = Type::of(B::Object);
    const std::string& f = e.name;
    if (f == "count" || f == "find") {
      if (!sig({S})) return wrong("string");
      check_name_literal(e.args[0]);
      return f == "count" ? I : Type::list(B::Object);
    }
    if (f == "obj") {
      if (!sig({S, I})) return wrong("string, int");
      check_name_literal(e.args[0]);
      return O;
    }
    if (f == "size" || f == "position" || f == "color") {
      const Type out = Type::of(f == "size" ? B::Size : f == "position" ? B::Point : B::Color);
      if (sig({O})) return out;
      if (sig({S, I})) {
        check_name_literal(e.args[0]);
        return out;
      }
      return wrong("object | string, int");
    }
    if (f == "order") {
      if (!(sig({S, S}) || sig({Type::list(B::String), S}))) return wrong("string | list<string>, string");
      if (e.args[0].kind == Expr::Kind::String) check_name_literal(e.args[0]);
      if (e.args[0].kind == Expr::Kind::List)
        for (const auto& n : e.args[0].args) check_name_literal(n);
      if (e.args[1].kind == Expr::Kind::String && e.args[1].name != "x" && e.args[1].name != "y")
        return fail(e.args[1], "axis must be \"x\" or \"y\"");
      return Type::list(B::Object);
    }
    if (f == "nearest") {
      if (!sig({O, S})) return wrong("object, string");
      check_name_literal(e.args[1]);
      return O;
    }
    if (f == "overlaps") {
      if (!sig({O, O})) return wrong("object, object");
      return Type::of(B::Bool);
    }
    if (f == "has" || f == "attr") {
      if (!sig({O, S})) return wrong("object, string");
      if (e.args[1].kind != Expr::Kind::String)
        return fail(e.args[1], "attribute name must be a string literal");
      auto declared = vocab_.any_attribute(e.args[1].name);
      if (!declared) return fail(e.args[1], "unknown attribute \"" + e.args[1].name + "\"");
      if (f == "has") return Type::of(B::Bool);
      auto t = attr_type(*declared);
      if (!t) return fail(e.args[1], "attribute \"" + e.args[1].name + "\" is a colour; use color()");
      return *t;
    }
    if (f == "is_string") {
      if (at.size() != 1) return wrong("any");
      return Type::of(B::Bool);
    }
    if (f == "names") {
      if (!sig({Type::list(B::Object)})) return wrong("list<object>");
      return Type::list(B::String);
    }
    if (f == "len") {
      if (at.size() != 1 || !at[0].is(B::List)) return wrong("list");
      return I;
    }
    return fail(e, "unknown function '" + f + "'");
  }

  Type member(const Expr& e) {
    const Type t = check(e.args[0]);
    if (t.error()) return {};
    const std::string& m = e.name;
    switch (t.base) {
      case B::Object:
        if (m == "id" || m == "name") return Type::of(B::String);
        break;
      case B::Size:
        if (m == "length" || m == "area") return Type::of(B::Float);
        break;
      case B::Point:
        if (m == "x" || m == "y") return Type::of(B::Float);
        break;
      case B::Color:
        if (m == "name") return Type::of(B::String);
        if (m == "r" || m == "g" || m == "b") return Type::of(B::Int);
        break;
      default: break;
    }
    return fail(e, "no field '" + m + "' on " + to_string(t));
  }

  static bool comparable_eq(Type a, Type b) {
    if (a.numeric() && b.numeric()) return true;
    return a == b && !a.is(B::Size) && !a.is(B::Point) && !a.is(B::Color);
  }

  Type binary(const Expr& e) {
    const Type l = check(e.args[0]);
    const Type r = check(e.args[1]);
    if (l.error() || r.error()) return {};
    const std::string op(to_string(e.bop));
    switch (e.bop) {
      case BinaryOp::And:
      case BinaryOp::Or:
        if (!l.is(B::Bool) || !r.is(B::Bool))
          return fail(e, "'" + op + "' requires bool operands, got " + to_string(l) + " and " + to_string(r));
        return l;
      case BinaryOp::Add:
      case BinaryOp::Sub:
      case BinaryOp::Mul:
      case BinaryOp::Div:
        if (!l.numeric() || !r.numeric())
          return fail(e, "'" + op + "' requires numbers, got " + to_string(l) + " and " + to_string(r));
        if (e.bop == BinaryOp::Div) return Type::of(B::Float);
        return (l.is(B::Int) && r.is(B::Int)) ? l : Type::of(B::Float);
      case BinaryOp::Eq:
      case BinaryOp::Ne:
        if (!comparable_eq(l, r)) return fail(e, "cannot compare " + to_string(l) + " with " + to_string(r));
        return Type::of(B::Bool);
      default:
        if (!(l.numeric() && r.numeric()))
          return fail(e, "'" + op + "' requires numbers, got " + to_string(l) + " and " + to_string(r));
        return Type::of(B::Bool);
    }
  }

  Type in(const Expr& e) {
    const Type l = check(e.args[0]);
    std::vector<Type> items;
    for (std::size_t i = 1; i < e.args.size(); ++i) {
      items.push_back(check(e.args[i]));
      if (items.back().error()) return {};
    }
    if (l.error()) return {};
    if (l.numeric()) {
      if (items.size() != 2 || !items[0].numeric() || !items[1].numeric())
        return fail(e, "numeric 'in' needs a range [low, high]");
      return Type::of(B::Bool);
    }
    if (l.is(B::String)) {
      if (items.empty()) return fail(e, "membership list must not be empty");
      for (std::size_t i = 0; i < items.size(); ++i)
        if (!items[i].is(B::String)) return fail(e.args[i + 1], "membership list for a string must hold strings");
      return Type::of(B::Bool);
    }
    return fail(e, "'in' requires a number (range) or string (membership), got " + to_string(l));
  }

  const rules::Vocabulary& vocab_;
  std::vector<Diagnostic>& errors_;
  std::string check_;
  std::vector<std::pair<std::string, Type>> scope_;
};

inline bool renderable(Type t) {
  switch (t.base) {
    case B::Int:
    case B::Float:
    case B::Bool:
    case B::String:
    case B::Object: return true;
    case B::List: return t.elem == B::String || t.elem == B::Object || t.elem == B::Int || t.elem == B::Float;
    default: return false;
  }
}

}  // namespace detail

/// Static checks: types, names against the scene vocabulary, the covers
/// contract and reason placeholders. Never throws on a bad program.
inline ValidationReport validate(const CheckProgram& p, const rules::RuleSet& rules,
                                 const rules::Vocabulary& vocab) {
  ValidationReport rep;
  std::set<std::string> names;
  for (const auto& c : p.checks) {
    auto err = [&](SourcePos pos, std::string msg) { rep.errors.push_back({c.name, pos, std::move(msg)}); };
    if (!names.insert(c.name).second) err(c.pos, "duplicate check name '" + c.name + "'");
    if (rules.find(c.covers)) rep.coverage.insert(c.covers);
    else err(c.pos, "covers unknown rule '" + c.covers + "'");

    const std::string prefix = display_name(c.type) + ": ";
    if (!std::string_view(c.reason_template).starts_with(prefix) || c.reason_template.size() == prefix.size())
      err(c.pos, "reason must start with \"" + prefix + "\" followed by text");

    detail::TypeChecker tc(vocab, rep.errors, c.name);
    const Type cond = tc.check(c.condition);
    if (!cond.error() && !cond.is(Type::Base::Bool))
      err(c.condition.pos, "condition must be bool, got " + to_string(cond));

    std::set<std::string> bound;
    for (const auto& b : c.bindings) {
      if (!bound.insert(b.name).second) err(b.value.pos, "binding '" + b.name + "' defined twice");
      const Type t = tc.check(b.value);
      if (!t.error() && !detail::renderable(t))
        err(b.value.pos, "binding '" + b.name + "' of type " + to_string(t) + " cannot be rendered in a reason");
      tc.bind(b.name, t);
    }
    try {
      for (const auto& ph : placeholders(c.reason_template))
        if (!bound.count(ph)) err(c.pos, "placeholder {" + ph + "} is not bound by 'with'");
    } catch (const std::invalid_argument& e) {
      err(c.pos, e.what());
    }
  }
  for (const auto& r : rules.rules)
    if (!rep.coverage.count(r.rule_id)) rep.missing.push_back(r.rule_id);
  return rep;
}

inline ValidationReport validate(const CheckProgram& p, const rules::RuleSet& rules) {
  return validate(p, rules, rules.scene_vocabulary());
}

}  // namespace logicode::checklang
