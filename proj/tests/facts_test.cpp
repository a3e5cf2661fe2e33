#include <gtest/gtest.h>

#include <random>

#include "logicode/facts.hpp"
#include "logicode/synth.hpp"
#include "support/raster.hpp"
#include "support/tmpdir.hpp"

using namespace logicode;
using namespace logicode::facts;
using dataset::ImageRecord;
using dataset::ObjectAnnotation;

namespace {

ObjectAnnotation box(std::string id, std::string name, double x, double y, double w = 4, double h = 4,
                     Json attrs = Json::object()) {
  return {std::move(id), std::move(name), {{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}}, std::move(attrs)};
}

ImageRecord scene(std::vector<ObjectAnnotation> objs) {
  ImageRecord r;
  r.image_id = "img";
  r.category = "synthetic_test";
  r.width = r.height = 1000;
  r.objects = std::move(objs);
  return r;
}

}  // namespace

TEST(Facts, UnitSquareFacts) {
  auto s = build_facts(scene({{"sq", "tile", {{0, 0}, {1, 0}, {1, 1}, {0, 1}}, Json::object()}}));
  auto sz = s.size("sq");
  EXPECT_NEAR(sz.area, 1.0, 1e-12);
  EXPECT_NEAR(sz.length, 1.41421356, 1e-8);
  EXPECT_NEAR(s.position("sq").x, 0.5, 1e-12);
  EXPECT_TRUE(s.color("sq").missing);
  EXPECT_EQ(s.color("sq").name, "gray");
}

TEST(Facts, CountAndFind) {
  auto s = build_facts(scene({box("c1", "cable", 0, 0), box("c2", "cable", 10, 0), box("t", "terminal", 20, 0)}));
  EXPECT_EQ(s.count("cable"), 2u);
  EXPECT_EQ(s.find("cable").size(), 2u);
  EXPECT_TRUE(s.find("unicorn").empty());
  EXPECT_EQ(s.count("unicorn"), 0u);
  EXPECT_THROW(s.object("nope"), UnknownObject);
}

TEST(Facts, OrderByAxisWithIdTies) {
  auto s = build_facts(scene({box("a", "connector", 10, 0), box("b", "connector", 5, 0), box("c", "connector", 20, 0),
                              box("d", "connector", 5, 50)}));
  std::vector<std::string> ids;
  for (auto* o : s.order("connector", Axis::X)) ids.push_back(o->object_id);
  EXPECT_EQ(ids, (std::vector<std::string>{"b", "d", "a", "c"}));
  ids.clear();
  for (auto* o : s.order("connector", Axis::Y)) ids.push_back(o->object_id);
  EXPECT_EQ(ids, (std::vector<std::string>{"a", "b", "c", "d"}));
}

TEST(Facts, NearestAndOverlaps) {
  auto s = build_facts(scene({box("a", "pin", 0, 0), box("b", "pin", 10, 0), box("c", "pin", 0, 10),
                              box("d", "pin", 2, 2), box("e", "pin", 4, 0)}));
  // b and c are both 10 away from a; d is closest.
  EXPECT_EQ(s.nearest("a", "pin")->object_id, "d");
  EXPECT_TRUE(s.overlaps("a", "d"));
  EXPECT_FALSE(s.overlaps("a", "e"));  // edges touch only
  EXPECT_FALSE(s.overlaps("a", "b"));
  auto s2 = build_facts(scene({box("a", "pin", 0, 0), box("c", "pin", 0, 10), box("b", "pin", 10, 0)}));
  EXPECT_EQ(s2.nearest("a", "pin")->object_id, "b");
  EXPECT_EQ(s2.nearest("a", "none"), nullptr);
}

TEST(Facts, ColorFromAttribute) {
  auto s = build_facts(scene({box("a", "cable", 0, 0, 4, 4, {{"color_rgb", {250, 240, 12}}})}));
  EXPECT_EQ(s.color("a").name, "yellow");
  EXPECT_FALSE(s.color("a").missing);
}

TEST(Facts, PaletteTieBreaksLexicographically) {
  // Brute-force nearest palette colour with an explicit lexicographic tie-break.
  for (int r = 0; r < 256; r += 17)
    for (int g = 0; g < 256; g += 17)
      for (int b = 0; b < 256; b += 17) {
        long best = -1;
        std::string expect;
        for (const auto& e : kPalette) {
          long d = 0;
          for (int k = 0; k < 3; ++k) d += long((std::array{r, g, b}[k] - e.rgb[k])) * (std::array{r, g, b}[k] - e.rgb[k]);
          if (best < 0 || d < best || (d == best && std::string(e.name) < expect)) {
            best = d;
            expect = e.name;
          }
        }
        EXPECT_EQ(named_color({r, g, b}), expect);
      }
}

TEST(Facts, DegeneratePolygonThrows) {
  EXPECT_THROW(build_facts(scene({{"l", "line", {{0, 0}, {5, 0}, {10, 0}}, Json::object()}})), GeometryError);
  EXPECT_THROW(build_facts(scene({{"p", "pt", {{0, 0}, {5, 0}}, Json::object()}})), GeometryError);
}

TEST(Facts, PixelColorFromPpm) {
  testing_support::TempDir d;
  std::string ppm = "P6\n4 4\n255\n";
  for (int i = 0; i < 16; ++i) ppm += std::string("\x00\x00\xf0", 3);
  write_file((d / "img.ppm").string(), ppm);
  auto r = scene({box("a", "cable", 0, 0, 4, 4)});
  r.image_path = "img.ppm";
  auto s = build_facts(r, {.image_root = d.path()});
  EXPECT_EQ(s.color("a").name, "blue");
  EXPECT_FALSE(s.color("a").missing);
  EXPECT_TRUE(build_facts(r).color("a").missing);
}

TEST(Facts, CountFindConsistencyAndDeterminism) {
  synth::SynthConfig c;
  c.n = 60;
  c.rates = {0.5, 0.5, 0.5, 0.5};
  auto m = synth::generate_synthetic(c, 99);
  for (const auto& rec : m.records) {
    auto s = build_facts(rec);
    EXPECT_EQ(s, build_facts(rec));
    for (const char* n : {"cable", "connector", "terminal", "unicorn"}) EXPECT_EQ(s.count(n), s.find(n).size());
    EXPECT_EQ(to_json(s), to_json(build_facts(rec)));
  }
}

TEST(Facts, TranslationInvarianceAndScaleCovariance) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> shift(-50, 50), scale(0.2, 5);
  for (int k = 0; k < 100; ++k) {
    std::vector<ObjectAnnotation> objs;
    for (int i = 0; i < 5; ++i) {
      auto poly = oracle::star_polygon(rng, 200 + 30 * i, 200 + 10 * (i % 2), 3, 12);
      objs.push_back({"o" + std::to_string(i), i % 2 ? "a" : "b", poly, {{"color_rgb", {10 * i, 200, 30}}}});
    }
    const auto base = build_facts(scene(objs));
    const double dx = shift(rng), dy = shift(rng), s = scale(rng);
    auto moved = objs, scaled = objs;
    for (auto& o : moved)
      for (auto& p : o.polygon) p = {p.x + dx, p.y + dy};
    for (auto& o : scaled)
      for (auto& p : o.polygon) p = {p.x * s, p.y * s};
    const auto t = build_facts(scene(moved));
    const auto z = build_facts(scene(scaled));
    for (std::size_t i = 0; i < objs.size(); ++i) {
      const auto &a = base.objects()[i], &b = t.objects()[i], &c = z.objects()[i];
      EXPECT_NEAR(a.area, b.area, 1e-9 * a.area);
      EXPECT_NEAR(a.length, b.length, 1e-9 * a.length);
      EXPECT_NEAR(b.centroid.x - a.centroid.x, dx, 1e-7);
      EXPECT_NEAR(b.centroid.y - a.centroid.y, dy, 1e-7);
      EXPECT_EQ(a.color.name, b.color.name);
      EXPECT_NEAR(c.area, a.area * s * s, 1e-9 * c.area);
      EXPECT_NEAR(c.length, a.length * s, 1e-9 * c.length);
      for (std::size_t j = 0; j < objs.size(); ++j)
        EXPECT_EQ(base.overlaps(a.object_id, objs[j].object_id), t.overlaps(a.object_id, objs[j].object_id));
    }
    auto ids = [](const FactStore& st) {
      std::vector<std::string> out;
      for (auto* o : st.order(std::vector<std::string>{"a", "b"}, Axis::X)) out.push_back(o->object_id);
      return out;
    };
    EXPECT_EQ(ids(base), ids(t));
  }
}

TEST(Facts, BoundingBoxContainsCentroid) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 200; ++k) {
    auto s = build_facts(scene({{"p", "poly", oracle::star_polygon(rng, 100, 100, 5, 60), Json::object()}}));
    const auto& o = s.objects()[0];
    EXPECT_TRUE(o.bbox.contains(o.centroid));
    EXPECT_GT(o.area, 0);
  }
}

TEST(Facts, TypedQueries) {
  auto s = build_facts(scene({box("a", "cable", 0, 0), box("b", "cable", 10, 0)}));
  EXPECT_EQ(std::get<std::size_t>(run_query(s, query::Count{"cable"})), 2u);
  EXPECT_EQ(std::get<IdList>(run_query(s, query::Find{"cable"})), (IdList{"a", "b"}));
  EXPECT_EQ(std::get<std::optional<std::string>>(run_query(s, query::Nearest{"a", "cable"})), "b");
  EXPECT_FALSE(std::get<bool>(run_query(s, query::Overlaps{"a", "b"})));
  EXPECT_THROW(run_query(s, query::Size{"zzz"}), UnknownObject);
}
