#pragma once

#include <climits>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "logicode/checklang/ast.hpp"
#include "logicode/facts.hpp"
#include "logicode/report.hpp"

namespace logicode::checklang {

inline constexpr long kDefaultStepBudget = 1'000'000;

class EvaluationError : public Error {
 public:
  EvaluationError(std::string check, std::string cause)
      : Error("check " + check + ": " + cause), check_(std::move(check)), cause_(std::move(cause)) {}
  const std::string& check() const { return check_; }
  const std::string& cause() const { return cause_; }

 private:
  std::string check_;
  std::string cause_;
};

/// Runtime value. Size, Point and Color are views onto an object's facts.
struct Value {
  enum class Kind { Null, Int, Float, Bool, String, Object, Size, Point, Color, List };
  Kind kind = Kind::Null;
  long long i = 0;
  double f = 0;
  bool b = false;
  std::string s;
  const facts::ObjectFacts* obj = nullptr;
  std::shared_ptr<const std::vector<Value>> list;

  static Value of_int(long long v) { Value x; x.kind = Kind::Int; x.i = v; return x; }
  static Value of_float(double v) { Value x; x.kind = Kind::Float; x.f = v; return x; }
  static Value of_bool(bool v) { Value x; x.kind = Kind::Bool; x.b = v; return x; }
  static Value of_string(std::string v) { Value x; x.kind = Kind::String; x.s = std::move(v); return x; }
  static Value of_object(const facts::ObjectFacts* o, Kind k = Kind::Object) { Value x; x.kind = k; x.obj = o; return x; }
  static Value of_list(std::vector<Value> v) {
    Value x;
    x.kind = Kind::List;
    x.list = std::make_shared<const std::vector<Value>>(std::move(v));
    return x;
  }

  bool numeric() const { return kind == Kind::Int || kind == Kind::Float; }
  double as_double() const { return kind == Kind::Int ? static_cast<double>(i) : f; }

  static Value from_json(const Json& j) {
    if (j.is_boolean()) return of_bool(j.get<bool>());
    if (j.is_number_integer()) {
      if (j.is_number_unsigned() && j.get<unsigned long long>() > static_cast<unsigned long long>(LLONG_MAX))
        return of_float(j.get<double>());
      return of_int(j.get<long long>());
    }
    if (j.is_number_float()) return of_float(j.get<double>());
    if (j.is_string()) return of_string(j.get<std::string>());
    return {};
  }
};

/// Equality across runtime kinds: numbers compare numerically, otherwise
/// values of different kinds are unequal.
inline bool values_equal(const Value& a, const Value& b) {
  if (a.numeric() && b.numeric()) {
    if (a.kind == Value::Kind::Int && b.kind == Value::Kind::Int) return a.i == b.i;
    return a.as_double() == b.as_double();
  }
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Value::Kind::Null: return true;
    case Value::Kind::Bool: return a.b == b.b;
    case Value::Kind::String: return a.s == b.s;
    case Value::Kind::Object: return a.obj == b.obj;
    case Value::Kind::List: {
      if (a.list->size() != b.list->size()) return false;
      for (std::size_t k = 0; k < a.list->size(); ++k)
        if (!values_equal((*a.list)[k], (*b.list)[k])) return false;
      return true;
    }
    default: return a.obj == b.obj;
  }
}

/// Text used when a value fills a reason placeholder.
inline std::string render(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Int: return std::to_string(v.i);
    case Value::Kind::Float: return fixed(v.f, 2);
    case Value::Kind::Bool: return v.b ? "true" : "false";
    case Value::Kind::String: return v.s;
    case Value::Kind::Object: return v.obj->object_id;
    case Value::Kind::List: {
      std::vector<std::string> parts;
      for (const auto& x : *v.list) parts.push_back(render(x));
      return "[" + join(parts, ", ") + "]";
    }
    case Value::Kind::Null: return "null";
    default: return "<" + v.obj->object_id + ">";
  }
}

namespace detail {

class Evaluator {
 public:
  Evaluator(const facts::FactStore& store, long budget) : store_(store), budget_(budget) {}

  void set_check(const std::string& name) { check_ = name; }

  Value eval(const Expr& e) {
    if (++steps_ > budget_) throw fail("step budget of " + std::to_string(budget_) + " exceeded");
    switch (e.kind) {
      case Expr::Kind::Int: return Value::of_int(e.int_value);
      case Expr::Kind::Float: return Value::of_float(e.float_value);
      case Expr::Kind::String: return Value::of_string(e.name);
      case Expr::Kind::Bool: return Value::of_bool(e.bool_value);
      case Expr::Kind::Var: {
        for (auto it = env_.rbegin(); it != env_.rend(); ++it)
          if (it->first == e.name) return it->second;
        throw fail("unbound variable '" + e.name + "'");
      }
      case Expr::Kind::Call: return call(e);
      case Expr::Kind::Member: return member(e);
      case Expr::Kind::Index: {
        const Value l = eval(e.args[0]);
        const Value i = eval(e.args[1]);
        if (l.kind != Value::Kind::List || i.kind != Value::Kind::Int) throw fail("bad index operands");
        if (i.i < 0 || i.i >= static_cast<long long>(l.list->size()))
          throw fail("index " + std::to_string(i.i) + " out of range for list of " + std::to_string(l.list->size()));
        return (*l.list)[static_cast<std::size_t>(i.i)];
      }
      case Expr::Kind::Unary: {
        const Value x = eval(e.args[0]);
        if (e.uop == UnaryOp::Not) return Value::of_bool(!truth(x));
        if (x.kind == Value::Kind::Int) {
          if (x.i == LLONG_MIN) throw fail("integer overflow");
          return Value::of_int(-x.i);
        }
        if (x.kind == Value::Kind::Float) return Value::of_float(-x.f);
        throw fail("unary '-' on non-number");
      }
      case Expr::Kind::Binary: return binary(e);
      case Expr::Kind::In: {
        const Value l = eval(e.args[0]);
        if (l.numeric() && e.args.size() == 3) {
          const Value lo = eval(e.args[1]);
          const Value hi = eval(e.args[2]);
          if (!lo.numeric() || !hi.numeric()) throw fail("range bounds must be numbers");
          return Value::of_bool(lo.as_double() <= l.as_double() && l.as_double() <= hi.as_double());
        }
        for (std::size_t k = 1; k < e.args.size(); ++k)
          if (values_equal(l, eval(e.args[k]))) return Value::of_bool(true);
        return Value::of_bool(false);
      }
      case Expr::Kind::List: {
        std::vector<Value> items;
        items.reserve(e.args.size());
        for (const auto& a : e.args) items.push_back(eval(a));
        return Value::of_list(std::move(items));
      }
      case Expr::Kind::Let: {
        Value v = eval(e.args[0]);
        env_.emplace_back(e.name, std::move(v));
        Value out = eval(e.args[1]);
        env_.pop_back();
        return out;
      }
      case Expr::Kind::If: return truth(eval(e.args[0])) ? eval(e.args[1]) : eval(e.args[2]);
      case Expr::Kind::Quant: {
        const Value d = eval(e.args[0]);
        if (d.kind != Value::Kind::List) throw fail("quantifier domain is not a list");
        const bool forall = e.quant == Quantifier::Forall;
        for (const auto& item : *d.list) {
          env_.emplace_back(e.name, item);
          const bool t = truth(eval(e.args[1]));
          env_.pop_back();
          if (forall && !t) return Value::of_bool(false);
          if (!forall && t) return Value::of_bool(true);
        }
        return Value::of_bool(forall);
      }
    }
    throw fail("unknown expression");
  }

  void bind(const std::string& name, Value v) { env_.emplace_back(name, std::move(v)); }
  void clear_env() { env_.clear(); }

  EvaluationError fail(std::string cause) const { return EvaluationError(check_, std::move(cause)); }

  bool truth(const Value& v) const {
    if (v.kind != Value::Kind::Bool) throw fail("expected bool value");
    return v.b;
  }

 private:
  const std::string& str(const Value& v, const char* what) const {
    if (v.kind != Value::Kind::String) throw fail(std::string(what) + " must be a string");
    return v.s;
  }

  const facts::ObjectFacts* object(const Value& v) const {
    if (v.kind != Value::Kind::Object) throw fail("expected an object");
    return v.obj;
  }

  const facts::ObjectFacts* nth(const std::string& name, long long idx) const {
    auto objs = store_.find(name);
    if (idx < 0 || idx >= static_cast<long long>(objs.size()))
      throw fail("no " + name + " #" + std::to_string(idx) + " (image has " + std::to_string(objs.size()) + ")");
    return objs[static_cast<std::size_t>(idx)];
  }

  Value object_list(const std::vector<const facts::ObjectFacts*>& objs) const {
    std::vector<Value> items;
    items.reserve(objs.size());
    for (auto* o : objs) items.push_back(Value::of_object(o));
    return Value::of_list(std::move(items));
  }

  Value call(const Expr& e) {
    std::vector<Value> a;
    a.reserve(e.args.size());
    for (const auto& x : e.args) a.push_back(eval(x));
    const std::string& f = e.name;
    auto arity = [&](std::size_t n) {
      if (a.size() != n) throw fail(f + "() takes " + std::to_string(n) + " argument(s)");
    };
    if (f == "count") {
      arity(1);
      return Value::of_int(static_cast<long long>(store_.count(str(a[0], "object name"))));
    }
    if (f == "find") {
      arity(1);
      return object_list(store_.find(str(a[0], "object name")));
    }
    if (f == "obj") {
      arity(2);
      if (a[1].kind != Value::Kind::Int) throw fail("obj() index must be int");
      return Value::of_object(nth(str(a[0], "object name"), a[1].i));
    }
    if (f == "size" || f == "position" || f == "color") {
      const auto k = f == "size" ? Value::Kind::Size : f == "position" ? Value::Kind::Point : Value::Kind::Color;
      if (a.size() == 1) return Value::of_object(object(a[0]), k);
      arity(2);
      if (a[1].kind != Value::Kind::Int) throw fail(f + "() index must be int");
      return Value::of_object(nth(str(a[0], "object name"), a[1].i), k);
    }
    if (f == "order") {
      arity(2);
      auto axis = facts::parse_axis(str(a[1], "axis"));
      if (!axis) throw fail("axis must be \"x\" or \"y\"");
      std::vector<std::string> names;
      if (a[0].kind == Value::Kind::List) {
        for (const auto& n : *a[0].list) names.push_back(str(n, "object name"));
      } else {
        names.push_back(str(a[0], "object name"));
      }
      return object_list(store_.order(names, *axis));
    }
    if (f == "nearest") {
      arity(2);
      auto* from = object(a[0]);
      auto* o = store_.nearest(from->object_id, str(a[1], "object name"));
      if (!o) throw fail("no " + a[1].s + " near " + from->object_id);
      return Value::of_object(o);
    }
    if (f == "overlaps") {
      arity(2);
      return Value::of_bool(store_.overlaps(object(a[0])->object_id, object(a[1])->object_id));
    }
    if (f == "has") {
      arity(2);
      return Value::of_bool(object(a[0])->attributes.contains(str(a[1], "attribute name")));
    }
    if (f == "attr") {
      arity(2);
      const auto* o = object(a[0]);
      const auto& key = str(a[1], "attribute name");
      auto it = o->attributes.find(key);
      if (it == o->attributes.end()) throw fail(o->object_id + " has no attribute '" + key + "'");
      return Value::from_json(*it);
    }
    if (f == "is_string") {
      arity(1);
      return Value::of_bool(a[0].kind == Value::Kind::String);
    }
    if (f == "names") {
      arity(1);
      if (a[0].kind != Value::Kind::List) throw fail("names() expects a list of objects");
      std::vector<Value> out;
      for (const auto& x : *a[0].list) out.push_back(Value::of_string(object(x)->name));
      return Value::of_list(std::move(out));
    }
    if (f == "len") {
      arity(1);
      if (a[0].kind != Value::Kind::List) throw fail("len() expects a list");
      return Value::of_int(static_cast<long long>(a[0].list->size()));
    }
    throw fail("unknown function '" + f + "'");
  }

  Value member(const Expr& e) {
    const Value v = eval(e.args[0]);
    const std::string& m = e.name;
    switch (v.kind) {
      case Value::Kind::Object:
        if (m == "id") return Value::of_string(v.obj->object_id);
        if (m == "name") return Value::of_string(v.obj->name);
        break;
      case Value::Kind::Size:
        if (m == "length") return Value::of_float(v.obj->length);
        if (m == "area") return Value::of_float(v.obj->area);
        break;
      case Value::Kind::Point:
        if (m == "x") return Value::of_float(v.obj->centroid.x);
        if (m == "y") return Value::of_float(v.obj->centroid.y);
        break;
      case Value::Kind::Color:
        if (m == "name") return Value::of_string(v.obj->color.name);
        if (m == "r") return Value::of_int(v.obj->color.rgb[0]);
        if (m == "g") return Value::of_int(v.obj->color.rgb[1]);
        if (m == "b") return Value::of_int(v.obj->color.rgb[2]);
        break;
      default: break;
    }
    throw fail("no field '" + m + "'");
  }

  Value binary(const Expr& e) {
    if (e.bop == BinaryOp::And) {
      if (!truth(eval(e.args[0]))) return Value::of_bool(false);
      return Value::of_bool(truth(eval(e.args[1])));
    }
    if (e.bop == BinaryOp::Or) {
      if (truth(eval(e.args[0]))) return Value::of_bool(true);
      return Value::of_bool(truth(eval(e.args[1])));
    }
    const Value l = eval(e.args[0]);
    const Value r = eval(e.args[1]);
    switch (e.bop) {
      case BinaryOp::Eq: return Value::of_bool(values_equal(l, r));
      case BinaryOp::Ne: return Value::of_bool(!values_equal(l, r));
      default: break;
    }
    if (!l.numeric() || !r.numeric()) throw fail("'" + std::string(to_string(e.bop)) + "' on non-numbers");
    const bool ints = l.kind == Value::Kind::Int && r.kind == Value::Kind::Int;
    switch (e.bop) {
      case BinaryOp::Add:
      case BinaryOp::Sub:
      case BinaryOp::Mul: {
        if (ints) {
          long long out = 0;
          const bool overflow = e.bop == BinaryOp::Add   ? __builtin_add_overflow(l.i, r.i, &out)
                                : e.bop == BinaryOp::Sub ? __builtin_sub_overflow(l.i, r.i, &out)
                                                         : __builtin_mul_overflow(l.i, r.i, &out);
          if (overflow) throw fail("integer overflow");
          return Value::of_int(out);
        }
        const double x = l.as_double(), y = r.as_double();
        const double out = e.bop == BinaryOp::Add ? x + y : e.bop == BinaryOp::Sub ? x - y : x * y;
        if (!std::isfinite(out)) throw fail("non-finite arithmetic result");
        return Value::of_float(out);
      }
      case BinaryOp::Div: {
        if (r.as_double() == 0.0) throw fail("division by zero");
        const double out = l.as_double() / r.as_double();
        if (!std::isfinite(out)) throw fail("non-finite arithmetic result");
        return Value::of_float(out);
      }
      default: break;
    }
    bool out = false;
    if (ints) {
      switch (e.bop) {
        case BinaryOp::Lt: out = l.i < r.i; break;
        case BinaryOp::Le: out = l.i <= r.i; break;
        case BinaryOp::Ge: out = l.i >= r.i; break;
        default: out = l.i > r.i; break;
      }
    } else {
      const double x = l.as_double(), y = r.as_double();
      switch (e.bop) {
        case BinaryOp::Lt: out = x < y; break;
        case BinaryOp::Le: out = x <= y; break;
        case BinaryOp::Ge: out = x >= y; break;
        default: out = x > y; break;
      }
    }
    return Value::of_bool(out);
  }

  const facts::FactStore& store_;
  long budget_;
  long steps_ = 0;
  std::string check_;
  std::vector<std::pair<std::string, Value>> env_;
};

inline std::string render_template(const std::string& tmpl, const std::vector<std::pair<std::string, Value>>& bound,
                                   const Evaluator& ev) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '{') {
      out += tmpl[i];
      continue;
    }
    const auto close = tmpl.find('}', i + 1);
    if (close == std::string::npos) throw ev.fail("unterminated placeholder in reason");
    const std::string name = tmpl.substr(i + 1, close - i - 1);
    const Value* v = nullptr;
    for (auto it = bound.rbegin(); it != bound.rend(); ++it)
      if (it->first == name) {
        v = &it->second;
        break;
      }
    if (!v) throw ev.fail("placeholder {" + name + "} is unbound");
    out += render(*v);
    i = close;
  }
  return out;
}

}  // namespace detail

struct EvalOptions {
  long step_budget = kDefaultStepBudget;
};

/// Runs every check against one image. Abnormal iff some condition holds;
/// reasons follow program order. Runtime faults yield EvaluationFailed.
inline AnalysisReport evaluate(const CheckProgram& p, const facts::FactStore& store, const EvalOptions& opts = {}) {
  AnalysisReport rep;
  rep.image_id = store.image_id();
  detail::Evaluator ev(store, opts.step_budget);
  try {
    for (const auto& c : p.checks) {
      ev.set_check(c.name);
      ev.clear_env();
      if (!ev.truth(ev.eval(c.condition))) continue;
      std::vector<std::pair<std::string, Value>> bound;
      for (const auto& b : c.bindings) {
        Value v = ev.eval(b.value);
        ev.bind(b.name, v);
        bound.emplace_back(b.name, std::move(v));
      }
      rep.reasons.push_back(detail::render_template(c.reason_template, bound, ev));
    }
  } catch (const EvaluationError& e) {
    rep.predicted = Prediction::EvaluationFailed;
    rep.reasons.clear();
    rep.error = e.what();
    return rep;
  }
  rep.predicted = rep.reasons.empty() ? Prediction::Normal : Prediction::Abnormal;
  return rep;
}

}  // namespace logicode::checklang
