#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "logicode/common.hpp"
#include "logicode/dataset.hpp"
#include "logicode/geometry.hpp"

namespace logicode::facts {

using geometry::BoundingBox;
using geometry::Point;

class GeometryError : public Error {
 public:
  using Error::Error;
};

class UnknownObject : public Error {
 public:
  using Error::Error;
};

using Rgb = std::array<int, 3>;

struct PaletteEntry {
  std::string_view name;
  Rgb rgb;
};

// Alphabetical so that equal distances resolve to the lexicographically
// smallest name by taking the first minimum.
inline constexpr std::array<PaletteEntry, 10> kPalette = {{
    {"black", {0, 0, 0}},
    {"blue", {0, 0, 255}},
    {"brown", {139, 69, 19}},
    {"gray", {128, 128, 128}},
    {"green", {0, 128, 0}},
    {"orange", {255, 165, 0}},
    {"purple", {128, 0, 128}},
    {"red", {255, 0, 0}},
    {"white", {255, 255, 255}},
    {"yellow", {255, 255, 0}},
}};

/// Nearest palette colour by Euclidean RGB distance.
inline std::string named_color(const Rgb& c) {
  long best = -1;
  std::string_view name;
  for (const auto& e : kPalette) {
    long d = 0;
    for (int k = 0; k < 3; ++k) d += long(c[k] - e.rgb[k]) * (c[k] - e.rgb[k]);
    if (best < 0 || d < best) {
      best = d;
      name = e.name;
    }
  }
  return std::string(name);
}

inline Rgb palette_rgb(std::string_view name) {
  for (const auto& e : kPalette)
    if (e.name == name) return e.rgb;
  throw Error("unknown palette colour '" + std::string(name) + "'");
}

struct SizeFact {
  double area = 0;
  double length = 0;
  friend bool operator==(const SizeFact&, const SizeFact&) = default;
};

struct ColorFact {
  Rgb rgb{};
  std::string name;
  bool missing = false;  // no colour source; name falls back to "gray"
  friend bool operator==(const ColorFact&, const ColorFact&) = default;
};

struct ObjectFacts {
  std::string object_id;
  std::string name;
  double area = 0;
  double length = 0;  // polygon diameter
  Point centroid;
  BoundingBox bbox;
  ColorFact color;
  Json attributes = Json::object();

  friend bool operator==(const ObjectFacts&, const ObjectFacts&) = default;
};

enum class Axis { X, Y };

inline std::optional<Axis> parse_axis(std::string_view s) {
  if (s == "x") return Axis::X;
  if (s == "y") return Axis::Y;
  return std::nullopt;
}

inline std::string_view to_string(Axis a) { return a == Axis::X ? "x" : "y"; }

/// Binary PPM (P6, maxval 255) image used by the optional pixel colour path.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // row-major RGB

  Rgb at(int x, int y) const {
    const std::size_t i = (std::size_t(y) * width + x) * 3;
    return {data[i], data[i + 1], data[i + 2]};
  }
};

inline std::optional<RgbImage> load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic;
  auto skip_comments = [&] {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string line;
      std::getline(in, line);
      in >> std::ws;
    }
  };
  skip_comments();
  in >> w;
  skip_comments();
  in >> h;
  skip_comments();
  in >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) return std::nullopt;
  in.get();
  RgbImage img{w, h, std::vector<std::uint8_t>(std::size_t(w) * h * 3)};
  in.read(reinterpret_cast<char*>(img.data.data()), std::streamsize(img.data.size()));
  if (in.gcount() != std::streamsize(img.data.size())) return std::nullopt;
  return img;
}

/// Mean colour of pixel centres inside the polygon, if any.
inline std::optional<Rgb> mean_color(const RgbImage& img, std::span<const Point> poly) {
  const auto box = geometry::bounding_box(poly);
  const int x0 = std::max(0, int(std::floor(box.x0)));
  const int y0 = std::max(0, int(std::floor(box.y0)));
  const int x1 = std::min(img.width - 1, int(std::ceil(box.x1)));
  const int y1 = std::min(img.height - 1, int(std::ceil(box.y1)));
  std::array<double, 3> sum{};
  long n = 0;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      if (!geometry::contains(poly, {x + 0.5, y + 0.5})) continue;
      const Rgb c = img.at(x, y);
      for (int k = 0; k < 3; ++k) sum[k] += c[k];
      ++n;
    }
  if (n == 0) return std::nullopt;
  return Rgb{int(std::lround(sum[0] / n)), int(std::lround(sum[1] / n)), int(std::lround(sum[2] / n))};
}

inline std::optional<Rgb> color_attribute(const Json& attributes) {
  auto it = attributes.find("color_rgb");
  if (it == attributes.end() || !it->is_array() || it->size() != 3) return std::nullopt;
  Rgb c{};
  for (int k = 0; k < 3; ++k) {
    if (!(*it)[k].is_number_integer()) return std::nullopt;
    c[k] = (*it)[k].get<int>();
    if (c[k] < 0 || c[k] > 255) return std::nullopt;
  }
  return c;
}

/// Immutable per-image fact table.
class FactStore {
 public:
  FactStore() = default;
  FactStore(std::string image_id, std::vector<ObjectFacts> objects)
      : image_id_(std::move(image_id)), objects_(std::move(objects)) {
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      by_name_[objects_[i].name].push_back(i);
      if (!by_id_.emplace(objects_[i].object_id, i).second)
        throw InvariantError("duplicate object_id '" + objects_[i].object_id + "'");
    }
  }

  const std::string& image_id() const { return image_id_; }
  const std::vector<ObjectFacts>& objects() const { return objects_; }

  /// Objects with the given class name, in annotation order. Absent names
  /// yield an empty list.
  std::vector<const ObjectFacts*> find(std::string_view name) const {
    std::vector<const ObjectFacts*> out;
    if (auto it = by_name_.find(std::string(name)); it != by_name_.end())
      for (auto i : it->second) out.push_back(&objects_[i]);
    return out;
  }

  std::size_t count(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    return it == by_name_.end() ? 0 : it->second.size();
  }

  const ObjectFacts& object(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) throw UnknownObject("unknown object id '" + std::string(id) + "'");
    return objects_[it->second];
  }

  SizeFact size(std::string_view id) const {
    const auto& o = object(id);
    return {o.area, o.length};
  }

  Point position(std::string_view id) const { return object(id).centroid; }

  const ColorFact& color(std::string_view id) const { return object(id).color; }

  /// Objects of any of `names`, sorted by centroid coordinate on `axis`,
  /// ties broken by object_id.
  std::vector<const ObjectFacts*> order(std::span<const std::string> names, Axis axis) const {
    std::vector<const ObjectFacts*> out;
    std::vector<std::string> uniq(names.begin(), names.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (const auto& n : uniq)
      for (auto* o : find(n)) out.push_back(o);
    std::sort(out.begin(), out.end(), [axis](const ObjectFacts* a, const ObjectFacts* b) {
      const double ka = axis == Axis::X ? a->centroid.x : a->centroid.y;
      const double kb = axis == Axis::X ? b->centroid.x : b->centroid.y;
      if (ka != kb) return ka < kb;
      return a->object_id < b->object_id;
    });
    return out;
  }

  std::vector<const ObjectFacts*> order(std::string_view name, Axis axis) const {
    const std::string n(name);
    return order(std::span<const std::string>(&n, 1), axis);
  }

  /// Closest other object of class `name` by centroid distance; ties by
  /// object_id. nullptr when there is none.
  const ObjectFacts* nearest(std::string_view id, std::string_view name) const {
    const auto& from = object(id);
    const ObjectFacts* best = nullptr;
    double best_d = 0;
    for (auto* o : find(name)) {
      if (o->object_id == from.object_id) continue;
      const double d = std::hypot(o->centroid.x - from.centroid.x, o->centroid.y - from.centroid.y);
      if (!best || d < best_d || (d == best_d && o->object_id < best->object_id)) {
        best = o;
        best_d = d;
      }
    }
    return best;
  }

  bool overlaps(std::string_view a, std::string_view b) const {
    return geometry::intersection_area(object(a).bbox, object(b).bbox) > 0;
  }

  friend bool operator==(const FactStore& a, const FactStore& b) {
    return a.image_id_ == b.image_id_ && a.objects_ == b.objects_;
  }

 private:
  std::string image_id_;
  std::vector<ObjectFacts> objects_;
  std::map<std::string, std::vector<std::size_t>> by_name_;
  std::map<std::string, std::size_t> by_id_;
};

inline ObjectFacts object_facts(const dataset::ObjectAnnotation& o, const RgbImage* image) {
  if (o.polygon.size() < 3)
    throw GeometryError("object '" + o.object_id + "': polygon has fewer than 3 vertices");
  const double a = geometry::area(o.polygon);
  if (!(a > 0)) throw GeometryError("object '" + o.object_id + "': polygon has zero area");
  ObjectFacts f;
  f.object_id = o.object_id;
  f.name = o.name;
  f.area = a;
  f.length = geometry::diameter(o.polygon);
  f.centroid = geometry::centroid(o.polygon);
  f.bbox = geometry::bounding_box(o.polygon);
  f.attributes = o.attributes;
  std::optional<Rgb> rgb = color_attribute(o.attributes);
  if (!rgb && image) rgb = mean_color(*image, o.polygon);
  if (rgb) {
    f.color = {*rgb, named_color(*rgb), false};
  } else {
    f.color = {palette_rgb("gray"), "gray", true};
  }
  return f;
}

struct BuildOptions {
  /// Directory that relative image_path values resolve against. Pixel
  /// colours are only read when the file exists and is a binary PPM.
  std::optional<std::filesystem::path> image_root;
};

inline FactStore build_facts(const dataset::ImageRecord& record, const BuildOptions& opts = {}) {
  std::optional<RgbImage> image;
  if (record.image_path && opts.image_root) {
    const auto p = *opts.image_root / *record.image_path;
    if (std::filesystem::exists(p)) image = load_ppm(p.string());
  }
  std::vector<ObjectFacts> objs;
  objs.reserve(record.objects.size());
  for (const auto& o : record.objects) objs.push_back(object_facts(o, image ? &*image : nullptr));
  return FactStore(record.image_id, std::move(objs));
}

// ── Typed queries ───────────────────────────────────────────────────────────

namespace query {
struct Find { std::string name; };
struct Count { std::string name; };
struct Size { std::string id; };
struct Position { std::string id; };
struct Color { std::string id; };
struct Order { std::vector<std::string> names; Axis axis = Axis::X; };
struct Nearest { std::string id; std::string name; };
struct Overlaps { std::string a; std::string b; };
}  // namespace query

using FactQuery = std::variant<query::Find, query::Count, query::Size, query::Position, query::Color,
                               query::Order, query::Nearest, query::Overlaps>;

using IdList = std::vector<std::string>;
using FactValue = std::variant<IdList, std::size_t, SizeFact, Point, ColorFact, std::optional<std::string>, bool>;

inline IdList ids_of(const std::vector<const ObjectFacts*>& objs) {
  IdList ids;
  for (auto* o : objs) ids.push_back(o->object_id);
  return ids;
}

inline FactValue run_query(const FactStore& s, const FactQuery& q) {
  return std::visit(
      [&s](const auto& v) -> FactValue {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, query::Find>) return ids_of(s.find(v.name));
        else if constexpr (std::is_same_v<T, query::Count>) return s.count(v.name);
        else if constexpr (std::is_same_v<T, query::Size>) return s.size(v.id);
        else if constexpr (std::is_same_v<T, query::Position>) return s.position(v.id);
        else if constexpr (std::is_same_v<T, query::Color>) return s.color(v.id);
        else if constexpr (std::is_same_v<T, query::Order>) return ids_of(s.order(v.names, v.axis));
        else if constexpr (std::is_same_v<T, query::Nearest>) {
          auto* o = s.nearest(v.id, v.name);
          return o ? std::optional<std::string>(o->object_id) : std::optional<std::string>();
        } else return s.overlaps(v.a, v.b);
      },
      q);
}

// ── JSON views ──────────────────────────────────────────────────────────────

inline Json to_json(const ColorFact& c) {
  return {{"rgb", c.rgb}, {"name", c.name}, {"missing", c.missing}};
}

inline Json to_json(const FactValue& v) {
  return std::visit(
      [](const auto& x) -> Json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, SizeFact>) return {{"area", x.area}, {"length", x.length}};
        else if constexpr (std::is_same_v<T, Point>) return {{"x", x.x}, {"y", x.y}};
        else if constexpr (std::is_same_v<T, ColorFact>) return to_json(x);
        else if constexpr (std::is_same_v<T, std::optional<std::string>>) return x ? Json(*x) : Json(nullptr);
        else return Json(x);
      },
      v);
}

/// Canonical fact table (stable key order) for dumps and golden files.
inline Json to_json(const FactStore& s) {
  Json objs = Json::array();
  for (const auto& o : s.objects())
    objs.push_back({{"object_id", o.object_id},
                    {"name", o.name},
                    {"area", o.area},
                    {"length", o.length},
                    {"centroid", {o.centroid.x, o.centroid.y}},
                    {"bbox", {o.bbox.x0, o.bbox.y0, o.bbox.x1, o.bbox.y1}},
                    {"color", to_json(o.color)},
                    {"attributes", o.attributes}});
  return {{"image_id", s.image_id()}, {"objects", objs}};
}

}  // namespace logicode::facts
