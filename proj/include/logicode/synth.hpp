#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "logicode/common.hpp"
#include "logicode/dataset.hpp"
#include "logicode/facts.hpp"
#include "logicode/rules.hpp"

namespace logicode::synth {

using dataset::ImageRecord;
using dataset::ObjectAnnotation;
using geometry::Point;

struct InjectionRates {
  double quantity = 0;
  double size = 0;
  double position = 0;
  double matching = 0;
};

struct SynthConfig {
  std::string template_name = "connector-scene";
  std::size_t n = 0;
  InjectionRates rates;
  double train_fraction = 0;  // leading share of records assigned to the train split
};

inline constexpr std::array<std::string_view, 1> kTemplates = {"connector-scene"};

inline SynthConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("synthetic: expected object");
  SynthConfig c;
  try {
    c.template_name = j.value("template", c.template_name);
    c.n = j.at("n").get<std::size_t>();
    c.train_fraction = j.value("train_fraction", 0.0);
    if (j.contains("rates")) {
      const Json& r = j["rates"];
      if (!r.is_object()) throw ConfigError("synthetic.rates: expected object");
      for (auto it = r.begin(); it != r.end(); ++it)
        if (it.key() != "quantity" && it.key() != "size" && it.key() != "position" && it.key() != "matching")
          throw ConfigError("synthetic.rates." + it.key() + ": unknown anomaly type");
      c.rates = {r.value("quantity", 0.0), r.value("size", 0.0), r.value("position", 0.0), r.value("matching", 0.0)};
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("synthetic: ") + e.what());
  }
  return c;
}

inline Json to_json(const SynthConfig& c) {
  return {{"template", c.template_name},
          {"n", c.n},
          {"train_fraction", c.train_fraction},
          {"rates",
           {{"quantity", c.rates.quantity},
            {"size", c.rates.size},
            {"position", c.rates.position},
            {"matching", c.rates.matching}}}};
}

inline void check_config(const SynthConfig& c) {
  bool known = false;
  for (auto t : kTemplates) known |= t == c.template_name;
  if (!known) throw ConfigError("unknown scene template '" + c.template_name + "'");
  const std::pair<const char*, double> rates[] = {{"quantity", c.rates.quantity},
                                                  {"size", c.rates.size},
                                                  {"position", c.rates.position},
                                                  {"matching", c.rates.matching},
                                                  {"train_fraction", c.train_fraction}};
  for (auto [name, v] : rates)
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1], got " + shortest(v));
}

// ── connector-scene ─────────────────────────────────────────────────────────
//
// Two connectors at the image edges, two terminals between them and one
// cable spanning the middle. The cable colour decides how many slots the
// connectors must have.

namespace connector_scene {

inline constexpr const char* kCategory = "synthetic_connector_scene";
inline constexpr double kWidth = 400, kHeight = 200;
inline constexpr double kCableHeight = 8;
inline const rules::Bounds kLengthBounds{240, 300};

struct SlotColor {
  const char* color;
  long long slots;
};
inline constexpr std::array<SlotColor, 3> kSlots = {{{"blue", 3}, {"red", 5}, {"yellow", 2}}};

inline rules::RuleSet ruleset() {
  using rules::Rule, rules::RuleKind;
  rules::RuleSet s;
  s.category = kCategory;

  Rule cable_count;
  cable_count.rule_id = "cable_count";
  cable_count.anomaly_type = AnomalyType::Quantity;
  cable_count.kind = RuleKind::CountEquals;
  cable_count.subject = {"cable"};
  cable_count.expected = 1;

  Rule connector_count = cable_count;
  connector_count.rule_id = "connector_count";
  connector_count.subject = {"connector"};
  connector_count.expected = 2;

  Rule length;
  length.rule_id = "cable_length";
  length.anomaly_type = AnomalyType::Size;
  length.kind = RuleKind::LengthInRange;
  length.subject = {"cable"};
  length.bounds = kLengthBounds;

  Rule order;
  order.rule_id = "terminal_order";
  order.anomaly_type = AnomalyType::Position;
  order.kind = RuleKind::OrderMatches;
  order.subject = {"connector", "terminal"};
  order.axis = facts::Axis::X;
  order.expected_order = {"connector", "terminal", "terminal", "connector"};

  Rule match;
  match.rule_id = "slot_match";
  match.anomaly_type = AnomalyType::Matching;
  match.kind = RuleKind::AttributeMatch;
  match.subject = {"cable", "connector"};
  match.match.attribute_a = std::string(rules::kColorAttribute);
  match.match.attribute_b = "slot_count";
  for (const auto& sc : kSlots) match.match.mapping[sc.color] = sc.slots;

  s.rules = {cable_count, connector_count, length, order, match};
  s.natural_language = {
      "There must be exactly one cable.",
      "There must be exactly two connectors.",
      "The cable length must lie within [240, 300] pixels.",
      "From left to right the objects must read: connector, terminal, terminal, connector.",
      "The cable colour determines the connector slot count: blue needs 3 slots, red needs 5, yellow needs 2; "
      "every connector must have that slot count.",
  };
  s.vocabulary.objects["cable"]["color_rgb"] = rules::AttrType::Rgb;
  s.vocabulary.objects["connector"]["slot_count"] = rules::AttrType::Int;
  s.vocabulary.objects["terminal"];
  return s;
}

}  // namespace connector_scene

/// Rule set that labels records of a template.
inline rules::RuleSet template_rules(const std::string& template_name) {
  if (template_name == "connector-scene") return connector_scene::ruleset();
  throw ConfigError("unknown scene template '" + template_name + "'");
}

namespace detail {

// Distribution helpers built on raw engine output so results do not depend
// on the standard library's distribution implementations.
struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}

  double uniform() { return double(engine() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t index(std::size_t n) { return std::size_t(uniform() * double(n)); }
};

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

inline std::vector<Point> rect(double x0, double y0, double x1, double y1) {
  return {{round2(x0), round2(y0)}, {round2(x1), round2(y0)}, {round2(x1), round2(y1)}, {round2(x0), round2(y1)}};
}

inline ObjectAnnotation object(std::string id, std::string name, std::vector<Point> poly, Json attrs = Json::object()) {
  return {std::move(id), std::move(name), std::move(poly), std::move(attrs)};
}

inline int clamp_channel(double v) { return int(std::lround(std::clamp(v, 0.0, 255.0))); }

inline ImageRecord connector_scene_record(Rng& rng, std::string image_id, const InjectionRates& rates) {
  namespace cs = connector_scene;
  namespace reason = rules::reason;
  const rules::RuleSet rs = cs::ruleset();

  const bool quantity = rng.bernoulli(rates.quantity);
  const bool size = rng.bernoulli(rates.size);
  const bool position = rng.bernoulli(rates.position);
  const bool matching = rng.bernoulli(rates.matching);
  const std::size_t n_cables = quantity ? (rng.bernoulli(0.5) ? 2 : 0) : 1;
  // With no cable there is nothing to measure or match.
  const bool size_on = size && n_cables > 0;
  const bool matching_on = matching && n_cables > 0;

  const cs::SlotColor& slot = cs::kSlots[rng.index(cs::kSlots.size())];
  long long slots = slot.slots;
  if (matching_on) {
    std::vector<long long> wrong;
    for (const auto& s : cs::kSlots)
      if (s.slots != slot.slots) wrong.push_back(s.slots);
    slots = wrong[rng.index(wrong.size())];
  }

  ImageRecord r;
  r.image_id = std::move(image_id);
  r.category = cs::kCategory;
  r.width = cs::kWidth;
  r.height = cs::kHeight;

  const double ca = rng.uniform(-5, 5), cb = rng.uniform(-5, 5);
  r.objects.push_back(object("connector_0", "connector", rect(20 + ca, 60, 60 + ca, 140), {{"slot_count", slots}}));

  const double t0 = 130 + rng.uniform(-15, 15);
  double t1 = 270 + rng.uniform(-15, 15);
  std::vector<std::string> seq = {"connector", "terminal", "terminal", "connector"};
  if (position) {
    const bool right = rng.bernoulli(0.5);
    t1 = right ? 390 : 10;
    seq = right ? std::vector<std::string>{"connector", "terminal", "connector", "terminal"}
                : std::vector<std::string>{"terminal", "connector", "terminal", "connector"};
  }
  r.objects.push_back(object("terminal_0", "terminal", rect(t0 - 8, 80, t0 + 8, 120)));

  std::string first_cable_color;
  double first_cable_length = 0;
  for (std::size_t k = 0; k < n_cables; ++k) {
    double len = rng.uniform(250, 290);
    if (k == 0 && size_on) len = rng.bernoulli(0.5) ? rng.uniform(150, 220) : rng.uniform(320, 370);
    const double y = k == 0 ? 96 + rng.uniform(-4, 4) : 160 + rng.uniform(-4, 4);
    const double x0 = cs::kWidth / 2 - len / 2;
    const auto base = facts::palette_rgb(slot.color);
    const Json rgb = {clamp_channel(base[0] + rng.uniform(-15, 15)), clamp_channel(base[1] + rng.uniform(-15, 15)),
                      clamp_channel(base[2] + rng.uniform(-15, 15))};
    auto poly = rect(x0, y, x0 + len, y + cs::kCableHeight);
    if (k == 0) {
      first_cable_length = geometry::diameter(poly);
      first_cable_color = facts::named_color({rgb[0].get<int>(), rgb[1].get<int>(), rgb[2].get<int>()});
    }
    r.objects.push_back(object("cable_" + std::to_string(k), "cable", std::move(poly), {{"color_rgb", rgb}}));
  }

  r.objects.push_back(object("terminal_1", "terminal", rect(t1 - 8, 80, t1 + 8, 120)));
  r.objects.push_back(object("connector_1", "connector", rect(340 + cb, 60, 380 + cb, 140), {{"slot_count", slots}}));

  // Reasons in rule order, built from what was injected.
  if (quantity) r.reasons.push_back(reason::count_equals(AnomalyType::Quantity, "cable", 1, (long long)n_cables));
  if (size_on)
    r.reasons.push_back(reason::length_in_range(AnomalyType::Size, "cable", first_cable_length, cs::kLengthBounds));
  if (position)
    r.reasons.push_back(reason::order_matches(AnomalyType::Position, facts::Axis::X, seq, rs.rules[3].expected_order));
  if (matching_on)
    r.reasons.push_back(
        reason::attribute_match(AnomalyType::Matching, "cable", "color", first_cable_color, "connector", "slot_count"));
  r.label = r.reasons.empty() ? dataset::Label::Normal : dataset::Label::Abnormal;
  return r;
}

}  // namespace detail

/// Deterministic in (config, seed).
inline dataset::DatasetManifest generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
  check_config(config);
  detail::Rng rng(seed);
  const auto n_train = static_cast<std::size_t>(std::llround(config.train_fraction * double(config.n)));
  std::vector<ImageRecord> records;
  records.reserve(config.n);
  char id[32];
  for (std::size_t i = 0; i < config.n; ++i) {
    std::snprintf(id, sizeof id, "cs_%05zu", i);
    auto r = detail::connector_scene_record(rng, id, config.rates);
    r.split = i < n_train ? dataset::Split::Train : dataset::Split::Test;
    records.push_back(std::move(r));
  }
  return dataset::make_manifest(std::move(records));
}

}  // namespace logicode::synth
