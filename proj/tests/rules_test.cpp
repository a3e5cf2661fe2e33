#include <gtest/gtest.h>

#include "logicode/rules.hpp"
#include "logicode/synth.hpp"

using namespace logicode;
using namespace logicode::rules;
using dataset::ImageRecord;
using dataset::ObjectAnnotation;

namespace {

ObjectAnnotation bar(std::string id, std::string name, double x, double len, Json attrs = Json::object()) {
  return {std::move(id), std::move(name), {{x, 10}, {x + len, 10}, {x + len, 10.0001}, {x, 10.0001}}, std::move(attrs)};
}

facts::FactStore store(std::vector<ObjectAnnotation> objs) {
  ImageRecord r;
  r.image_id = "img";
  r.objects = std::move(objs);
  return facts::build_facts(r);
}

Rule length_rule() {
  Rule r;
  r.rule_id = "len";
  r.anomaly_type = AnomalyType::Size;
  r.kind = RuleKind::LengthInRange;
  r.subject = {"cable"};
  r.bounds = {90, 110};
  return r;
}

Rule count_rule(std::string name, long long n) {
  Rule r;
  r.rule_id = "count_" + name;
  r.anomaly_type = AnomalyType::Quantity;
  r.kind = RuleKind::CountEquals;
  r.subject = {std::move(name)};
  r.expected = n;
  return r;
}

}  // namespace

TEST(Rules, LengthInteriorBoundaryAndOutside) {
  auto r = length_rule();
  EXPECT_FALSE(evaluate_rule(r, store({bar("c", "cable", 0, 100)})).fired);
  auto v = evaluate_rule(r, store({bar("c", "cable", 0, 120)}));
  ASSERT_TRUE(v.fired);
  EXPECT_EQ(*v.reason, "Size Anomaly: cable length 120.00 outside [90.00, 110.00]");
}

TEST(Rules, InclusiveBounds) {
  Rule r = length_rule();
  // Triangle (0,0),(L,0),(0,1e-9) has diameter exactly L to double precision.
  for (double L : {90.0, 110.0}) {
    auto s = store({{"c", "cable", {{0, 0}, {L, 0}, {0, 1e-9}}, Json::object()}});
    ASSERT_EQ(s.objects()[0].length, L);
    EXPECT_FALSE(evaluate_rule(r, s).fired) << L;
  }
  auto s = store({{"c", "cable", {{0, 0}, {110.001, 0}, {0, 1e-9}}, Json::object()}});
  EXPECT_TRUE(evaluate_rule(r, s).fired);
}

TEST(Rules, CountEquals) {
  auto v = evaluate_rule(count_rule("cable", 1), store({bar("a", "cable", 0, 5), bar("b", "cable", 10, 5)}));
  ASSERT_TRUE(v.fired);
  EXPECT_EQ(*v.reason, "Quantity Anomaly: expected 1 cable, found 2");
}

TEST(Rules, AbsentSubjectSkipsExceptCountKinds) {
  auto empty = store({});
  auto v = evaluate_rule(length_rule(), empty);
  EXPECT_FALSE(v.fired);
  EXPECT_TRUE(v.skipped);
  EXPECT_NE(v.warning.find("cable"), std::string::npos);

  Rule p;
  p.rule_id = "p";
  p.anomaly_type = AnomalyType::Quantity;
  p.kind = RuleKind::PresenceRequired;
  p.subject = {"cable"};
  v = evaluate_rule(p, empty);
  ASSERT_TRUE(v.fired);
  EXPECT_EQ(*v.reason, "Quantity Anomaly: expected ≥1 cable, found 0");

  auto set = synth::template_rules("connector-scene");
  auto rep = evaluate_ruleset(set, empty);
  EXPECT_EQ(rep.predicted, Prediction::Abnormal);
  EXPECT_EQ(rep.reasons.size(), 2u);  // the two count rules
  EXPECT_EQ(rep.warnings.size(), 3u);
}

TEST(Rules, OrderMatches) {
  Rule r;
  r.rule_id = "ord";
  r.anomaly_type = AnomalyType::Position;
  r.kind = RuleKind::OrderMatches;
  r.subject = {"connector", "terminal"};
  r.expected_order = {"connector", "terminal", "connector"};
  EXPECT_FALSE(evaluate_rule(r, store({bar("c1", "connector", 0, 2), bar("t", "terminal", 5, 2), bar("c2", "connector", 9, 2)})).fired);
  auto v = evaluate_rule(r, store({bar("c1", "connector", 0, 2), bar("t", "terminal", 12, 2), bar("c2", "connector", 9, 2)}));
  ASSERT_TRUE(v.fired);
  EXPECT_EQ(*v.reason, "Position Anomaly: order along x is [connector, connector, terminal], expected [connector, terminal, connector]");
}

TEST(Rules, AttributeMatchByColourAndString) {
  Rule r;
  r.rule_id = "m";
  r.anomaly_type = AnomalyType::Matching;
  r.kind = RuleKind::AttributeMatch;
  r.subject = {"cable", "connector"};
  r.match = {"color", "slot_count", {{"yellow", 2}, {"blue", 3}}};
  auto ok = store({bar("c", "cable", 0, 5, {{"color_rgb", {250, 250, 0}}}), bar("k", "connector", 9, 2, {{"slot_count", 2}})});
  EXPECT_FALSE(evaluate_rule(r, ok).fired);
  auto bad = store({bar("c", "cable", 0, 5, {{"color_rgb", {250, 250, 0}}}), bar("k", "connector", 9, 2, {{"slot_count", 3}})});
  auto v = evaluate_rule(r, bad);
  ASSERT_TRUE(v.fired);
  EXPECT_EQ(*v.reason, "Matching Anomaly: cable color yellow does not match connector slot_count");
  auto unmapped = store({bar("c", "cable", 0, 5, {{"color_rgb", {0, 128, 0}}}), bar("k", "connector", 9, 2, {{"slot_count", 2}})});
  EXPECT_TRUE(evaluate_rule(r, unmapped).fired);

  r.match = {"kind", "slot_count", {{"A", 2}}};
  auto s = store({bar("c", "cable", 0, 5, {{"kind", "A"}}), bar("k", "connector", 9, 2, {{"slot_count", 2}})});
  EXPECT_FALSE(evaluate_rule(r, s).fired);
  auto no_key = store({bar("c", "cable", 0, 5), bar("k", "connector", 9, 2, {{"slot_count", 2}})});
  EXPECT_TRUE(evaluate_rule(r, no_key).skipped);
}

TEST(Rules, RulesetOrderAndEmptySet) {
  RuleSet empty;
  auto s = store({bar("a", "cable", 0, 120), bar("b", "cable", 200, 5)});
  EXPECT_EQ(evaluate_ruleset(empty, s).predicted, Prediction::Normal);
  RuleSet set;
  set.rules = {length_rule(), count_rule("cable", 1)};
  auto rep = evaluate_ruleset(set, s);
  ASSERT_EQ(rep.reasons.size(), 2u);
  EXPECT_TRUE(rep.reasons[0].starts_with("Size Anomaly"));
  EXPECT_TRUE(rep.reasons[1].starts_with("Quantity Anomaly"));
  // brute force: each rule on its own
  for (std::size_t i = 0; i < set.rules.size(); ++i) EXPECT_EQ(*evaluate_rule(set.rules[i], s).reason, rep.reasons[i]);
}

TEST(Rules, MonotonicityWhenAddingRules) {
  synth::SynthConfig c;
  c.n = 100;
  c.rates = {0.2, 0.2, 0.2, 0.2};
  auto m = synth::generate_synthetic(c, 3);
  auto full = synth::template_rules("connector-scene");
  for (const auto& rec : m.records) {
    auto s = facts::build_facts(rec);
    RuleSet partial;
    bool was_abnormal = false;
    for (const auto& r : full.rules) {
      partial.rules.push_back(r);
      const bool now = evaluate_ruleset(partial, s).predicted == Prediction::Abnormal;
      EXPECT_TRUE(now || !was_abnormal);
      was_abnormal = now;
    }
  }
}

TEST(Rules, JsonRoundTripAndLint) {
  auto set = synth::template_rules("connector-scene");
  EXPECT_TRUE(lint(set).empty());
  auto back = ruleset_from_json(to_json(set));
  EXPECT_EQ(to_json(back), to_json(set));
  EXPECT_EQ(fingerprint(back), fingerprint(set));
}

TEST(Rules, LintCatchesProblems) {
  auto set = synth::template_rules("connector-scene");
  auto bad = set;
  bad.rules[2].bounds = {300, 240};
  EXPECT_FALSE(lint(bad).empty());
  bad = set;
  bad.rules[1].rule_id = bad.rules[0].rule_id;
  EXPECT_FALSE(lint(bad).empty());
  bad = set;
  bad.natural_language.pop_back();
  EXPECT_FALSE(lint(bad).empty());
  bad = set;
  bad.rules[4].match.attribute_b = "undeclared";
  EXPECT_FALSE(lint(bad).empty());
  bad = set;
  bad.rules[0].expected = -1;
  EXPECT_FALSE(lint(bad).empty());
  bad = set;
  bad.rules[0].subject = {"ca{ble"};
  EXPECT_FALSE(lint(bad).empty());
  EXPECT_THROW(require_lint_clean(bad), InvariantError);
}

TEST(Rules, ShippedRuleFilesLintClean) {
  for (const auto& e : std::filesystem::directory_iterator(std::string(LOGICODE_DATA_DIR) + "/rules")) {
    auto set = load_ruleset(e.path().string());
    EXPECT_TRUE(lint(set).empty()) << e.path();
  }
}

TEST(Rules, ShippedConnectorSceneMatchesGenerator) {
  auto shipped = load_ruleset(std::string(LOGICODE_DATA_DIR) + "/rules/connector-scene.json");
  EXPECT_EQ(to_json(shipped), to_json(synth::template_rules("connector-scene")));
}
