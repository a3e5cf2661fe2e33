#include <gtest/gtest.h>

#include "logicode/dataset.hpp"
#include "logicode/synth.hpp"
#include "support/tmpdir.hpp"

using namespace logicode;
using namespace logicode::dataset;
using testing_support::TempDir;

namespace {

Json record_json(const std::string& id) {
  return Json::parse(R"({
    "image_id": ")" + id + R"(", "category": "splicing_connectors", "split": "test",
    "label": "abnormal", "reasons": ["Quantity Anomaly: expected 1 cable, found 2"],
    "image_size": [100, 100],
    "objects": [
      {"object_id": "a", "name": "cable", "polygon": [[0,0],[10,0],[10,2],[0,2]], "attributes": {"color_rgb": [250, 250, 5]}},
      {"object_id": "b", "name": "cable", "polygon": [[0,5],[10,5],[10,7],[0,7]]}
    ]})");
}

void put(const TempDir& d, const std::string& rel, const Json& j) {
  std::filesystem::create_directories((d / rel).parent_path());
  write_file((d / rel).string(), j.dump(2));
}

}  // namespace

TEST(Dataset, LoadsWellFormedDirectory) {
  TempDir d;
  put(d, "a.json", record_json("img_a"));
  put(d, "sub/b.json", record_json("img_b"));
  auto m = load_manifest(d.path());
  ASSERT_EQ(m.records.size(), 2u);
  EXPECT_EQ(m.records[0].image_id, "img_a");
  EXPECT_EQ(m.records[1].objects.size(), 2u);
  EXPECT_EQ(m.count(Split::Test), 2u);
  EXPECT_EQ((m.counts()[{"test", "splicing_connectors"}]), 2u);
}

TEST(Dataset, IndexFileRestrictsFiles) {
  TempDir d;
  put(d, "a.json", record_json("img_a"));
  put(d, "b.json", record_json("img_b"));
  put(d, "index.json", Json{{"files", {"b.json"}}});
  auto m = load_manifest(d.path());
  ASSERT_EQ(m.records.size(), 1u);
  EXPECT_EQ(m.records[0].image_id, "img_b");
}

TEST(Dataset, NormalWithReasonsIsInvariantError) {
  TempDir d;
  auto j = record_json("img_a");
  j["label"] = "normal";
  put(d, "a.json", j);
  EXPECT_THROW(load_manifest(d.path()), InvariantError);
}

TEST(Dataset, SchemaErrorsNameFileAndPath) {
  TempDir d;
  auto j = record_json("img_a");
  j.erase("split");
  j["objects"][1]["polygon"][2] = "oops";
  put(d, "a.json", j);
  try {
    load_manifest(d.path());
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("a.json: $.split"), std::string::npos) << msg;
    EXPECT_NE(msg.find("$.objects[1].polygon[2]"), std::string::npos) << msg;
  }
}

TEST(Dataset, CollectsEveryProblem) {
  TempDir d;
  auto j = record_json("img_a");
  j["reasons"] = {"Colour Anomaly: x", "Quantity Anomaly: "};
  j["objects"][0]["object_id"] = "b";
  j["objects"][0]["polygon"] = {{0, 0}, {200, 0}, {0, 1}};
  put(d, "a.json", j);
  put(d, "b.json", record_json("img_a"));
  auto scan = scan_manifest(d.path());
  // two bad reasons, duplicate object id, vertex out of bounds, duplicate image id
  EXPECT_EQ(scan.errors.size(), 5u);
  EXPECT_TRUE(scan.manifest.records.empty());
}

TEST(Dataset, DegeneratePolygonStrictVsLenient) {
  TempDir d;
  auto j = record_json("img_a");
  j["objects"][1]["polygon"] = {{0, 0}, {5, 0}, {10, 0}};
  put(d, "a.json", j);
  EXPECT_THROW(load_manifest(d.path()), InvariantError);
  auto scan = scan_manifest(d.path(), {.strict_geometry = false});
  EXPECT_TRUE(scan.errors.empty());
  EXPECT_EQ(scan.warnings.size(), 1u);
  EXPECT_EQ(scan.manifest.records.size(), 1u);
}

TEST(Dataset, SelfIntersectingPolygonRejected) {
  ImageRecord r;
  r.image_id = "x";
  r.category = "pushpins";
  r.width = r.height = 10;
  r.objects.push_back({"o", "pin", {{0, 0}, {2, 2}, {2, 0}, {0, 2}}, Json::object()});
  auto issues = validate_record(r);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].kind, Issue::Kind::Geometry);
}

TEST(Dataset, UnsafeImageIdRejected) {
  ImageRecord r;
  r.category = "pushpins";
  r.width = r.height = 10;
  for (const char* id : {"../x", "a/b", ".hidden"}) {
    r.image_id = id;
    EXPECT_EQ(validate_record(r).size(), 1u) << id;
  }
}

TEST(Dataset, DuplicateImageIdInMemory) {
  ImageRecord a;
  a.image_id = "same";
  EXPECT_THROW(make_manifest({a, a}), InvariantError);
}

TEST(Dataset, WriteLoadRoundTrip) {
  synth::SynthConfig c;
  c.n = 40;
  c.rates = {0.3, 0.3, 0.3, 0.3};
  c.train_fraction = 0.25;
  auto m = synth::generate_synthetic(c, 7);
  TempDir d;
  write_manifest(m, d.path());
  auto back = load_manifest(d.path());
  ASSERT_EQ(back.records.size(), m.records.size());
  for (std::size_t i = 0; i < m.records.size(); ++i)
    EXPECT_EQ(to_json(back.records[i]), to_json(m.records[i])) << m.records[i].image_id;
  EXPECT_EQ(back.fingerprint(), m.fingerprint());
  EXPECT_EQ(back.count(Split::Train), 10u);
}

TEST(Dataset, ReasonsCanonicallyOrdered) {
  ImageRecord r;
  r.reasons = {"Size Anomaly: b", "Matching Anomaly: a"};
  auto j = to_json(r);
  EXPECT_EQ(j["reasons"][0], "Matching Anomaly: a");
}

TEST(Dataset, ReasonGrammar) {
  auto p = parse_reason("Position Anomaly: terminal misplaced");
  ASSERT_TRUE(p);
  EXPECT_EQ(p->type, AnomalyType::Position);
  EXPECT_EQ(p->text, "terminal misplaced");
  EXPECT_FALSE(parse_reason("Position: x"));
  EXPECT_FALSE(parse_reason("Quantity Anomaly:x"));
  EXPECT_FALSE(parse_reason("Quantity Anomaly: "));
}
