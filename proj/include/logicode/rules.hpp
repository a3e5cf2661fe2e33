#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "logicode/common.hpp"
#include "logicode/facts.hpp"
#include "logicode/report.hpp"

namespace logicode::rules {

using facts::Axis;
using facts::FactStore;

enum class RuleKind {
  CountEquals,
  CountInRange,
  LengthInRange,
  AreaInRange,
  OrderMatches,
  AttributeMatch,
  PresenceRequired,
};

inline constexpr std::array<RuleKind, 7> kRuleKinds = {
    RuleKind::CountEquals,  RuleKind::CountInRange,   RuleKind::LengthInRange,   RuleKind::AreaInRange,
    RuleKind::OrderMatches, RuleKind::AttributeMatch, RuleKind::PresenceRequired};

inline std::string_view to_string(RuleKind k) {
  switch (k) {
    case RuleKind::CountEquals: return "count_equals";
    case RuleKind::CountInRange: return "count_in_range";
    case RuleKind::LengthInRange: return "length_in_range";
    case RuleKind::AreaInRange: return "area_in_range";
    case RuleKind::OrderMatches: return "order_matches";
    case RuleKind::AttributeMatch: return "attribute_match";
    case RuleKind::PresenceRequired: return "presence_required";
  }
  return "?";
}

inline std::optional<RuleKind> parse_kind(std::string_view s) {
  for (auto k : kRuleKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct Bounds {
  double min = 0;
  double max = 0;
  friend bool operator==(const Bounds&, const Bounds&) = default;
};

/// Pairs an attribute of the first `subject[0]` object with an attribute
/// every `subject[1]` object must carry. attribute_a == "color" reads the
/// named colour fact instead of an annotation attribute.
struct MatchSpec {
  std::string attribute_a;
  std::string attribute_b;
  std::map<std::string, Json> mapping;
  friend bool operator==(const MatchSpec&, const MatchSpec&) = default;
};

inline constexpr std::string_view kColorAttribute = "color";

struct Rule {
  std::string rule_id;
  AnomalyType anomaly_type = AnomalyType::Quantity;
  RuleKind kind = RuleKind::CountEquals;
  std::vector<std::string> subject;
  // kind-specific parameters
  long long expected = 0;                    // count_equals
  Bounds bounds;                             // *_in_range
  Axis axis = Axis::X;                       // order_matches
  std::vector<std::string> expected_order;   // order_matches
  MatchSpec match;                           // attribute_match

  friend bool operator==(const Rule&, const Rule&) = default;
};

/// Attribute types a scene declares per object class.
enum class AttrType { Int, Float, String, Bool, Rgb };

inline std::string_view to_string(AttrType t) {
  switch (t) {
    case AttrType::Int: return "int";
    case AttrType::Float: return "float";
    case AttrType::String: return "string";
    case AttrType::Bool: return "bool";
    case AttrType::Rgb: return "rgb";
  }
  return "?";
}

inline std::optional<AttrType> parse_attr_type(std::string_view s) {
  for (auto t : {AttrType::Int, AttrType::Float, AttrType::String, AttrType::Bool, AttrType::Rgb})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

/// Object names and their attributes known for a scene.
struct Vocabulary {
  std::map<std::string, std::map<std::string, AttrType>> objects;

  bool has_name(const std::string& n) const { return objects.count(n) != 0; }

  std::optional<AttrType> attribute(const std::string& name, const std::string& attr) const {
    auto it = objects.find(name);
    if (it == objects.end()) return std::nullopt;
    auto jt = it->second.find(attr);
    if (jt == it->second.end()) return std::nullopt;
    return jt->second;
  }

  /// Attribute type declared for any object class (first match by name order).
  std::optional<AttrType> any_attribute(const std::string& attr) const {
    for (const auto& [_, attrs] : objects)
      if (auto it = attrs.find(attr); it != attrs.end()) return it->second;
    return std::nullopt;
  }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

struct RuleSet {
  std::string category;
  std::vector<Rule> rules;
  std::vector<std::string> natural_language;
  Vocabulary vocabulary;

  const Rule* find(std::string_view id) const {
    for (const auto& r : rules)
      if (r.rule_id == id) return &r;
    return nullptr;
  }

  /// Declared vocabulary plus every object name a rule mentions.
  Vocabulary scene_vocabulary() const {
    Vocabulary v = vocabulary;
    for (const auto& r : rules)
      for (const auto& n : r.subject) v.objects[n];
    return v;
  }
};

// ── JSON ────────────────────────────────────────────────────────────────────

inline Json to_json(const Rule& r) {
  Json params = Json::object();
  switch (r.kind) {
    case RuleKind::CountEquals: params["expected"] = r.expected; break;
    case RuleKind::CountInRange:
    case RuleKind::LengthInRange:
    case RuleKind::AreaInRange: params["bounds"] = {r.bounds.min, r.bounds.max}; break;
    case RuleKind::OrderMatches:
      params["axis"] = facts::to_string(r.axis);
      params["expected_order"] = r.expected_order;
      break;
    case RuleKind::AttributeMatch:
      params["attribute_a"] = r.match.attribute_a;
      params["attribute_b"] = r.match.attribute_b;
      params["mapping"] = Json(r.match.mapping);
      break;
    case RuleKind::PresenceRequired: break;
  }
  Json subject = r.subject.size() == 1 ? Json(r.subject[0]) : Json(r.subject);
  return {{"rule_id", r.rule_id},
          {"anomaly_type", keyword(r.anomaly_type)},
          {"kind", to_string(r.kind)},
          {"subject", subject},
          {"params", params}};
}

inline Json to_json(const RuleSet& s) {
  Json rules = Json::array();
  for (const auto& r : s.rules) rules.push_back(to_json(r));
  Json j = {{"category", s.category}, {"rules", rules}, {"natural_language", s.natural_language}};
  if (!s.vocabulary.objects.empty()) {
    Json v = Json::object();
    for (const auto& [name, attrs] : s.vocabulary.objects) {
      Json a = Json::object();
      for (const auto& [k, t] : attrs) a[k] = to_string(t);
      v[name] = a;
    }
    j["vocabulary"] = v;
  }
  return j;
}

inline Rule rule_from_json(const Json& j, const std::string& path) {
  auto need = [&](const char* key) -> const Json& {
    if (!j.contains(key)) throw SchemaError(path + "." + key + ": missing field");
    return j[key];
  };
  auto str = [&](const Json& v, const std::string& p) {
    if (!v.is_string()) throw SchemaError(p + ": expected string");
    return v.get<std::string>();
  };
  if (!j.is_object()) throw SchemaError(path + ": expected object");
  Rule r;
  r.rule_id = str(need("rule_id"), path + ".rule_id");
  auto t = parse_anomaly_type(str(need("anomaly_type"), path + ".anomaly_type"));
  if (!t) throw SchemaError(path + ".anomaly_type: expected Quantity, Size, Position or Matching");
  r.anomaly_type = *t;
  auto k = parse_kind(str(need("kind"), path + ".kind"));
  if (!k) throw SchemaError(path + ".kind: unknown rule kind");
  r.kind = *k;
  const Json& subj = need("subject");
  if (subj.is_string()) r.subject = {subj.get<std::string>()};
  else if (subj.is_array()) {
    for (std::size_t i = 0; i < subj.size(); ++i)
      r.subject.push_back(str(subj[i], path + ".subject[" + std::to_string(i) + "]"));
  } else throw SchemaError(path + ".subject: expected string or array of strings");

  const Json params = j.value("params", Json::object());
  if (!params.is_object()) throw SchemaError(path + ".params: expected object");
  const std::string pp = path + ".params";
  auto pneed = [&](const char* key) -> const Json& {
    if (!params.contains(key)) throw SchemaError(pp + "." + key + ": missing field for kind " + std::string(to_string(r.kind)));
    return params[key];
  };
  switch (r.kind) {
    case RuleKind::CountEquals: {
      const Json& e = pneed("expected");
      if (!e.is_number_integer()) throw SchemaError(pp + ".expected: expected integer");
      r.expected = e.get<long long>();
      break;
    }
    case RuleKind::CountInRange:
    case RuleKind::LengthInRange:
    case RuleKind::AreaInRange: {
      const Json& b = pneed("bounds");
      if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number())
        throw SchemaError(pp + ".bounds: expected [min, max]");
      r.bounds = {b[0].get<double>(), b[1].get<double>()};
      break;
    }
    case RuleKind::OrderMatches: {
      auto axis = facts::parse_axis(str(pneed("axis"), pp + ".axis"));
      if (!axis) throw SchemaError(pp + ".axis: expected \"x\" or \"y\"");
      r.axis = *axis;
      const Json& eo = pneed("expected_order");
      if (!eo.is_array()) throw SchemaError(pp + ".expected_order: expected array");
      for (std::size_t i = 0; i < eo.size(); ++i)
        r.expected_order.push_back(str(eo[i], pp + ".expected_order[" + std::to_string(i) + "]"));
      break;
    }
    case RuleKind::AttributeMatch: {
      r.match.attribute_a = str(pneed("attribute_a"), pp + ".attribute_a");
      r.match.attribute_b = str(pneed("attribute_b"), pp + ".attribute_b");
      const Json& m = pneed("mapping");
      if (!m.is_object()) throw SchemaError(pp + ".mapping: expected object");
      for (auto it = m.begin(); it != m.end(); ++it) {
        if (!it.value().is_primitive() || it.value().is_null())
          throw SchemaError(pp + ".mapping." + it.key() + ": expected scalar");
        r.match.mapping[it.key()] = it.value();
      }
      break;
    }
    case RuleKind::PresenceRequired: break;
  }
  return r;
}

inline RuleSet ruleset_from_json(const Json& j, const std::string& file = "<rules>") {
  if (!j.is_object()) throw SchemaError(file + ": $: expected object");
  RuleSet s;
  if (!j.contains("category") || !j["category"].is_string())
    throw SchemaError(file + ": $.category: missing or not a string");
  s.category = j["category"].get<std::string>();
  if (!j.contains("rules") || !j["rules"].is_array()) throw SchemaError(file + ": $.rules: expected array");
  for (std::size_t i = 0; i < j["rules"].size(); ++i)
    s.rules.push_back(rule_from_json(j["rules"][i], file + ": $.rules[" + std::to_string(i) + "]"));
  if (!j.contains("natural_language") || !j["natural_language"].is_array())
    throw SchemaError(file + ": $.natural_language: expected array");
  for (const auto& n : j["natural_language"]) {
    if (!n.is_string()) throw SchemaError(file + ": $.natural_language: expected strings");
    s.natural_language.push_back(n.get<std::string>());
  }
  if (j.contains("vocabulary")) {
    const Json& v = j["vocabulary"];
    if (!v.is_object()) throw SchemaError(file + ": $.vocabulary: expected object");
    for (auto it = v.begin(); it != v.end(); ++it) {
      auto& attrs = s.vocabulary.objects[it.key()];
      if (!it.value().is_object()) throw SchemaError(file + ": $.vocabulary." + it.key() + ": expected object");
      for (auto a = it.value().begin(); a != it.value().end(); ++a) {
        auto t = a.value().is_string() ? parse_attr_type(a.value().get<std::string>()) : std::nullopt;
        if (!t)
          throw SchemaError(file + ": $.vocabulary." + it.key() + "." + a.key() +
                            ": expected one of int, float, string, bool, rgb");
        attrs[a.key()] = *t;
      }
    }
  }
  return s;
}

inline RuleSet load_ruleset(const std::string& path) { return ruleset_from_json(read_json_file(path), path); }

/// Content hash of the canonical rule file form.
inline std::string fingerprint(const RuleSet& s) { return sha256_hex(canonical(to_json(s))); }

// ── Lint ────────────────────────────────────────────────────────────────────

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

/// Text that can be embedded verbatim in check source and reason templates.
inline bool plain_text(std::string_view s) { return s.find_first_of("\"\\{}\n") == std::string_view::npos; }

/// Static problems with a rule set; empty means lint clean.
inline std::vector<std::string> lint(const RuleSet& s) {
  std::vector<std::string> out;
  auto bad = [&](const std::string& where, const std::string& msg) { out.push_back(where + ": " + msg); };
  if (s.rules.size() != s.natural_language.size())
    bad("ruleset", "natural_language has " + std::to_string(s.natural_language.size()) + " sentences for " +
                       std::to_string(s.rules.size()) + " rules");
  for (std::size_t i = 0; i < s.natural_language.size(); ++i)
    if (trim(s.natural_language[i]).empty()) bad("natural_language[" + std::to_string(i) + "]", "empty sentence");
  std::set<std::string> ids;
  const Vocabulary vocab = s.scene_vocabulary();
  for (const auto& r : s.rules) {
    const std::string where = "rule '" + r.rule_id + "'";
    if (!is_identifier(r.rule_id)) bad(where, "rule_id must be an identifier [A-Za-z_][A-Za-z0-9_]*");
    if (!ids.insert(r.rule_id).second) bad(where, "duplicate rule_id");
    for (const auto& n : r.subject)
      if (n.empty() || !plain_text(n)) bad(where, "object names must be non-empty and free of quotes, backslashes and braces");
    auto arity = [&](std::size_t lo, std::size_t hi) {
      if (r.subject.size() < lo || r.subject.size() > hi)
        bad(where, std::string(to_string(r.kind)) + " takes " +
                       (lo == hi ? std::to_string(lo) : std::to_string(lo) + ".." + std::to_string(hi)) +
                       " subject name(s)");
    };
    switch (r.kind) {
      case RuleKind::CountEquals:
        arity(1, 1);
        if (r.expected < 0) bad(where, "expected count must be >= 0");
        break;
      case RuleKind::CountInRange:
      case RuleKind::LengthInRange:
      case RuleKind::AreaInRange:
        arity(1, 1);
        if (!std::isfinite(r.bounds.min) || !std::isfinite(r.bounds.max)) bad(where, "bounds must be finite");
        else if (r.bounds.min > r.bounds.max) bad(where, "bounds require min <= max");
        break;
      case RuleKind::PresenceRequired:
        arity(1, 1);
        if (r.anomaly_type != AnomalyType::Quantity) bad(where, "presence_required rules are Quantity anomalies");
        break;
      case RuleKind::OrderMatches: {
        arity(1, 16);
        if (r.expected_order.empty()) bad(where, "expected_order must not be empty");
        std::set<std::string> subj(r.subject.begin(), r.subject.end());
        if (subj.size() != r.subject.size()) bad(where, "subject names repeat");
        for (const auto& n : r.expected_order)
          if (!subj.count(n)) bad(where, "expected_order mentions '" + n + "' which is not a subject");
        break;
      }
      case RuleKind::AttributeMatch: {
        arity(2, 2);
        if (r.subject.size() != 2) break;
        if (r.match.mapping.empty()) bad(where, "mapping must not be empty");
        if (!plain_text(r.match.attribute_a) || !plain_text(r.match.attribute_b))
          bad(where, "attribute names must be free of quotes, backslashes and braces");
        if (r.match.attribute_a != kColorAttribute) {
          auto ta = vocab.attribute(r.subject[0], r.match.attribute_a);
          if (!ta) bad(where, "attribute '" + r.match.attribute_a + "' is not declared for '" + r.subject[0] + "'");
          else if (*ta != AttrType::String)
            bad(where, "attribute_a must be 'color' or a string attribute");
        }
        auto tb = vocab.attribute(r.subject[1], r.match.attribute_b);
        if (!tb) {
          bad(where, "attribute '" + r.match.attribute_b + "' is not declared for '" + r.subject[1] + "'");
          break;
        }
        if (*tb != AttrType::Int && *tb != AttrType::String)
          bad(where, "attribute_b must be an int or string attribute");
        for (const auto& [key, val] : r.match.mapping) {
          if (!plain_text(key)) bad(where, "mapping keys must be free of quotes, backslashes and braces");
          const bool ok = (*tb == AttrType::Int && val.is_number_integer()) ||
                          (*tb == AttrType::String && val.is_string());
          if (!ok) bad(where, "mapping value for '" + key + "' does not have the type of " + r.match.attribute_b);
          if (val.is_string()) {
            const auto sv = val.get<std::string>();
            if (!plain_text(sv)) bad(where, "mapping values must be free of quotes, backslashes and braces");
          }
        }
        break;
      }
    }
  }
  return out;
}

inline void require_lint_clean(const RuleSet& s) {
  auto problems = lint(s);
  if (!problems.empty()) throw InvariantError("rule set '" + s.category + "' is not lint clean:\n  " + join(problems, "\n  "));
}

// ── Reason templates ────────────────────────────────────────────────────────
//
// Shared by the reference evaluator, the reference compiler and the
// synthetic generator. Measured floats render with two decimals.

namespace reason {

inline std::string bounds_text(const Bounds& b) { return "[" + fixed(b.min, 2) + ", " + fixed(b.max, 2) + "]"; }

inline std::string list_text(const std::vector<std::string>& items) { return "[" + join(items, ", ") + "]"; }

inline std::string count_equals(AnomalyType t, const std::string& name, long long expected, long long found) {
  return make_reason(t, "expected " + std::to_string(expected) + " " + name + ", found " + std::to_string(found));
}

inline std::string count_in_range(AnomalyType t, const std::string& name, long long found, const Bounds& b) {
  return make_reason(t, name + " count " + std::to_string(found) + " outside " + bounds_text(b));
}

inline std::string length_in_range(AnomalyType t, const std::string& name, double value, const Bounds& b) {
  return make_reason(t, name + " length " + fixed(value, 2) + " outside " + bounds_text(b));
}

inline std::string area_in_range(AnomalyType t, const std::string& name, double value, const Bounds& b) {
  return make_reason(t, name + " area " + fixed(value, 2) + " outside " + bounds_text(b));
}

inline std::string presence_required(AnomalyType t, const std::string& name) {
  return make_reason(t, "expected \xE2\x89\xA5" "1 " + name + ", found 0");
}

inline std::string order_matches(AnomalyType t, Axis axis, const std::vector<std::string>& found,
                                 const std::vector<std::string>& expected) {
  return make_reason(t, "order along " + std::string(facts::to_string(axis)) + " is " + list_text(found) +
                            ", expected " + list_text(expected));
}

inline std::string attribute_match(AnomalyType t, const std::string& name_a, const std::string& attr_a,
                                   const std::string& value_a, const std::string& name_b,
                                   const std::string& attr_b) {
  return make_reason(t, name_a + " " + attr_a + " " + value_a + " does not match " + name_b + " " + attr_b);
}

}  // namespace reason

// ── Reference evaluation ────────────────────────────────────────────────────

struct Verdict {
  bool fired = false;
  std::optional<std::string> reason;
  bool skipped = false;
  std::string warning;
};

namespace detail {

inline Verdict skipped(const Rule& r, const std::string& name) {
  return {false, std::nullopt, true, "rule " + r.rule_id + " skipped: no '" + name + "' objects in image"};
}

inline Verdict fire(std::string reason) { return {true, std::move(reason), false, {}}; }

}  // namespace detail

/// Reference ("oracle") evaluation of one rule against the image facts.
/// Bounds are inclusive. Rules other than count rules are skipped with a
/// warning when a subject class is absent from the image.
inline Verdict evaluate_rule(const Rule& r, const FactStore& store) {
  const AnomalyType t = r.anomaly_type;
  switch (r.kind) {
    case RuleKind::CountEquals: {
      const auto n = static_cast<long long>(store.count(r.subject[0]));
      if (n != r.expected) return detail::fire(reason::count_equals(t, r.subject[0], r.expected, n));
      return {};
    }
    case RuleKind::CountInRange: {
      const auto n = static_cast<long long>(store.count(r.subject[0]));
      const double v = static_cast<double>(n);
      if (!(r.bounds.min <= v && v <= r.bounds.max))
        return detail::fire(reason::count_in_range(t, r.subject[0], n, r.bounds));
      return {};
    }
    case RuleKind::PresenceRequired: {
      if (store.count(r.subject[0]) == 0) return detail::fire(reason::presence_required(t, r.subject[0]));
      return {};
    }
    case RuleKind::LengthInRange:
    case RuleKind::AreaInRange: {
      const auto objs = store.find(r.subject[0]);
      if (objs.empty()) return detail::skipped(r, r.subject[0]);
      const bool is_len = r.kind == RuleKind::LengthInRange;
      const double v = is_len ? objs[0]->length : objs[0]->area;
      if (r.bounds.min <= v && v <= r.bounds.max) return {};
      return detail::fire(is_len ? reason::length_in_range(t, r.subject[0], v, r.bounds)
                                 : reason::area_in_range(t, r.subject[0], v, r.bounds));
    }
    case RuleKind::OrderMatches: {
      for (const auto& n : r.subject)
        if (store.count(n) == 0) return detail::skipped(r, n);
      std::vector<std::string> seq;
      for (auto* o : store.order(r.subject, r.axis)) seq.push_back(o->name);
      if (seq == r.expected_order) return {};
      return detail::fire(reason::order_matches(t, r.axis, seq, r.expected_order));
    }
    case RuleKind::AttributeMatch: {
      const auto& a_name = r.subject[0];
      const auto& b_name = r.subject[1];
      const auto as = store.find(a_name);
      if (as.empty()) return detail::skipped(r, a_name);
      if (store.count(b_name) == 0) return detail::skipped(r, b_name);
      std::string key;
      if (r.match.attribute_a == kColorAttribute) {
        key = as[0]->color.name;
      } else {
        auto it = as[0]->attributes.find(r.match.attribute_a);
        if (it == as[0]->attributes.end() || !it->is_string())
          return {false, std::nullopt, true,
                  "rule " + r.rule_id + " skipped: first '" + a_name + "' has no string attribute '" +
                      r.match.attribute_a + "'"};
        key = it->get<std::string>();
      }
      auto expected = r.match.mapping.find(key);
      bool mismatch = expected == r.match.mapping.end();
      if (!mismatch) {
        for (auto* b : store.find(b_name)) {
          auto it = b->attributes.find(r.match.attribute_b);
          if (it == b->attributes.end() || *it != expected->second) {
            mismatch = true;
            break;
          }
        }
      }
      if (!mismatch) return {};
      return detail::fire(reason::attribute_match(t, a_name, r.match.attribute_a, key, b_name, r.match.attribute_b));
    }
  }
  return {};
}

/// Abnormal iff any rule fired; reasons in rule order.
inline AnalysisReport evaluate_ruleset(const RuleSet& s, const FactStore& store) {
  AnalysisReport rep;
  rep.image_id = store.image_id();
  for (const auto& r : s.rules) {
    auto v = evaluate_rule(r, store);
    if (v.fired) rep.reasons.push_back(*v.reason);
    if (v.skipped) rep.warnings.push_back(v.warning);
  }
  rep.predicted = rep.reasons.empty() ? Prediction::Normal : Prediction::Abnormal;
  return rep;
}

}  // namespace logicode::rules
