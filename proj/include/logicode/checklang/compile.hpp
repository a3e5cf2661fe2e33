#pragma once

#include <string>

#include "logicode/checklang/parser.hpp"
#include "logicode/checklang/printer.hpp"
#include "logicode/rules.hpp"

namespace logicode::checklang {

namespace detail {

inline std::string lit(const std::string& s) { return quote(s); }

inline std::string lit(const Json& v) {
  if (v.is_string()) return quote(v.get<std::string>());
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return shortest(v.get<double>());
}

inline std::string name_list(const std::vector<std::string>& names) {
  std::string out = "[";
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? ", " : "") + quote(names[i]);
  return out + "]";
}

inline std::string range(const rules::Bounds& b) { return "[" + shortest(b.min) + ", " + shortest(b.max) + "]"; }

inline std::string present(const std::string& name) { return "count(" + quote(name) + ") >= 1"; }

/// Source of the check equivalent to one rule. Lint guarantees names carry
/// no braces, so reason text can be spliced into templates unchanged.
inline std::string check_source(const rules::Rule& r) {
  namespace reason = rules::reason;
  const AnomalyType t = r.anomaly_type;
  std::string when, tmpl, with;
  const std::string& n0 = r.subject[0];
  switch (r.kind) {
    case rules::RuleKind::CountEquals:
      when = "count(" + quote(n0) + ") != " + std::to_string(r.expected);
      tmpl = reason::count_equals(t, n0, r.expected, 0);
      tmpl = tmpl.substr(0, tmpl.rfind("found ") + 6) + "{found}";
      with = "found = count(" + quote(n0) + ")";
      break;
    case rules::RuleKind::CountInRange:
      when = "not (count(" + quote(n0) + ") in " + range(r.bounds) + ")";
      tmpl = display_name(t) + ": " + n0 + " count {found} outside " + reason::bounds_text(r.bounds);
      with = "found = count(" + quote(n0) + ")";
      break;
    case rules::RuleKind::PresenceRequired:
      when = "count(" + quote(n0) + ") = 0";
      tmpl = reason::presence_required(t, n0);
      break;
    case rules::RuleKind::LengthInRange:
    case rules::RuleKind::AreaInRange: {
      const std::string field = r.kind == rules::RuleKind::LengthInRange ? "length" : "area";
      const std::string measure = "size(" + quote(n0) + ", 0)." + field;
      when = present(n0) + " and not (" + measure + " in " + range(r.bounds) + ")";
      tmpl = display_name(t) + ": " + n0 + " " + field + " {value} outside " + reason::bounds_text(r.bounds);
      with = "value = " + measure;
      break;
    }
    case rules::RuleKind::OrderMatches: {
      const std::string seq =
          "names(order(" + name_list(r.subject) + ", " + quote(std::string(facts::to_string(r.axis))) + "))";
      for (const auto& n : r.subject) when += present(n) + " and ";
      when += seq + " != " + name_list(r.expected_order);
      tmpl = display_name(t) + ": order along " + std::string(facts::to_string(r.axis)) + " is {found}, expected " +
             reason::list_text(r.expected_order);
      with = "found = " + seq;
      break;
    }
    case rules::RuleKind::AttributeMatch: {
      const std::string& n1 = r.subject[1];
      const auto& m = r.match;
      const bool by_color = m.attribute_a == rules::kColorAttribute;
      const std::string first = "obj(" + quote(n0) + ", 0)";
      const std::string key_expr =
          by_color ? "color(" + quote(n0) + ", 0).name" : "attr(" + first + ", " + quote(m.attribute_a) + ")";
      std::vector<std::string> keys;
      for (const auto& [k, _] : m.mapping) keys.push_back(k);
      // Expected value of attribute_b for key v, as an if-chain.
      std::string expected;
      std::size_t i = 0;
      for (const auto& [k, v] : m.mapping) {
        if (++i == m.mapping.size()) expected += lit(v);
        else expected += "if v = " + quote(k) + " then " + lit(v) + " else ";
      }
      const std::string b_attr = quote(m.attribute_b);
      when = present(n0) + " and " + present(n1);
      if (!by_color)
        when += " and has(" + first + ", " + quote(m.attribute_a) + ") and is_string(" + key_expr + ")";
      when += " and (let v = " + key_expr + " in not (v in " + name_list(keys) + ") or (exists o in find(" +
              quote(n1) + "): not has(o, " + b_attr + ") or attr(o, " + b_attr + ") != (" + expected + ")))";
      tmpl = display_name(t) + ": " + n0 + " " + m.attribute_a + " {v} does not match " + n1 + " " + m.attribute_b;
      with = "v = " + key_expr;
      break;
    }
  }
  std::string src = "check " + r.rule_id + " covers " + r.rule_id + " type " + std::string(keyword(t)) +
                    "\n  when " + when + "\n  reason " + quote(tmpl) + "\n";
  if (!with.empty()) src += "  with " + with + "\n";
  return src;
}

}  // namespace detail

/// Deterministic rule -> program compiler: one check per rule, named after
/// the rule it covers, evaluating exactly like rules::evaluate_rule.
inline CheckProgram compile_reference(const rules::RuleSet& rules) {
  rules::require_lint_clean(rules);
  std::string src;
  for (std::size_t i = 0; i < rules.rules.size(); ++i) {
    if (i) src += "\n";
    src += detail::check_source(rules.rules[i]);
  }
  CheckProgram p = parse(src);
  p.source_text = pretty_print(p);
  return p;
}

}  // namespace logicode::checklang
