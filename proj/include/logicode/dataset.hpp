#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "logicode/common.hpp"
#include "logicode/geometry.hpp"

namespace logicode::dataset {

using geometry::Point;

enum class Split { Train, Test };
enum class Label { Normal, Abnormal };

inline std::string_view to_string(Split s) { return s == Split::Train ? "train" : "test"; }
inline std::string_view to_string(Label l) { return l == Label::Normal ? "normal" : "abnormal"; }

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

inline std::optional<Label> parse_label(std::string_view s) {
  if (s == "normal") return Label::Normal;
  if (s == "abnormal") return Label::Abnormal;
  return std::nullopt;
}

inline constexpr std::array<std::string_view, 5> kLocoCategories = {
    "juice_bottle", "breakfast_box", "pushpins", "screw_bag", "splicing_connectors"};

inline bool is_known_category(std::string_view c) {
  if (c.starts_with("synthetic_") && c.size() > 10) return true;
  return std::find(kLocoCategories.begin(), kLocoCategories.end(), c) != kLocoCategories.end();
}

struct ObjectAnnotation {
  std::string object_id;
  std::string name;
  std::vector<Point> polygon;
  Json attributes = Json::object();
};

struct ImageRecord {
  std::string image_id;
  std::string category;
  Split split = Split::Test;
  Label label = Label::Normal;
  std::vector<std::string> reasons;
  std::vector<ObjectAnnotation> objects;
  double width = 0;
  double height = 0;
  std::optional<std::string> image_path;
};

/// One problem found while loading or validating annotations.
struct Issue {
  enum class Kind { Schema, Invariant, Geometry };
  Kind kind;
  std::string file;
  std::string path;  // JSON path inside the file, e.g. "$.objects[1].polygon"
  std::string message;

  std::string to_string() const {
    std::string k = kind == Kind::Schema ? "schema" : kind == Kind::Invariant ? "invariant" : "geometry";
    return file + ": " + path + ": " + k + ": " + message;
  }
};

// ── JSON (de)serialisation ──────────────────────────────────────────────────

inline Json to_json(const ObjectAnnotation& o) {
  Json poly = Json::array();
  for (const auto& p : o.polygon) poly.push_back({p.x, p.y});
  return {{"object_id", o.object_id}, {"name", o.name}, {"polygon", poly}, {"attributes", o.attributes}};
}

/// Canonical form: reasons sorted lexicographically.
inline Json to_json(const ImageRecord& r) {
  auto reasons = r.reasons;
  std::sort(reasons.begin(), reasons.end());
  Json objs = Json::array();
  for (const auto& o : r.objects) objs.push_back(to_json(o));
  Json j = {{"image_id", r.image_id},
            {"category", r.category},
            {"split", to_string(r.split)},
            {"label", to_string(r.label)},
            {"reasons", reasons},
            {"image_size", {r.width, r.height}},
            {"objects", objs}};
  if (r.image_path) j["image_path"] = *r.image_path;
  return j;
}

namespace detail {

struct Reader {
  std::string file;
  std::vector<Issue>& issues;

  void fail(const std::string& path, const std::string& msg) {
    issues.push_back({Issue::Kind::Schema, file, path, msg});
  }

  const Json* field(const Json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      fail(path + "." + key, "missing field");
      return nullptr;
    }
    return &*it;
  }

  std::optional<std::string> string_field(const Json& obj, const std::string& path, const char* key) {
    const Json* v = field(obj, path, key);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      fail(path + "." + key, "expected string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  std::optional<Point> point(const Json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(path, "expected [x, y] number pair");
      return std::nullopt;
    }
    return Point{v[0].get<double>(), v[1].get<double>()};
  }
};

}  // namespace detail

/// Parses one annotation document; schema problems are appended to `issues`.
inline std::optional<ImageRecord> record_from_json(const Json& j, const std::string& file,
                                                   std::vector<Issue>& issues) {
  detail::Reader rd{file, issues};
  const std::size_t before = issues.size();
  if (!j.is_object()) {
    rd.fail("$", "expected object");
    return std::nullopt;
  }
  ImageRecord r;
  if (auto s = rd.string_field(j, "$", "image_id")) r.image_id = *s;
  if (auto s = rd.string_field(j, "$", "category")) r.category = *s;
  if (auto s = rd.string_field(j, "$", "split")) {
    if (auto sp = parse_split(*s)) r.split = *sp;
    else rd.fail("$.split", "expected \"train\" or \"test\"");
  }
  if (auto s = rd.string_field(j, "$", "label")) {
    if (auto lb = parse_label(*s)) r.label = *lb;
    else rd.fail("$.label", "expected \"normal\" or \"abnormal\"");
  }
  if (const Json* v = rd.field(j, "$", "reasons")) {
    if (!v->is_array()) rd.fail("$.reasons", "expected array");
    else
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_string()) rd.fail("$.reasons[" + std::to_string(i) + "]", "expected string");
        else r.reasons.push_back((*v)[i].get<std::string>());
      }
  }
  if (const Json* v = rd.field(j, "$", "image_size")) {
    if (auto p = rd.point(*v, "$.image_size")) {
      r.width = p->x;
      r.height = p->y;
    }
  }
  if (auto it = j.find("image_path"); it != j.end() && !it->is_null()) {
    if (it->is_string()) r.image_path = it->get<std::string>();
    else rd.fail("$.image_path", "expected string");
  }
  if (const Json* v = rd.field(j, "$", "objects")) {
    if (!v->is_array()) rd.fail("$.objects", "expected array");
    else
      for (std::size_t i = 0; i < v->size(); ++i) {
        const std::string path = "$.objects[" + std::to_string(i) + "]";
        const Json& oj = (*v)[i];
        if (!oj.is_object()) {
          rd.fail(path, "expected object");
          continue;
        }
        ObjectAnnotation o;
        if (auto s = rd.string_field(oj, path, "object_id")) o.object_id = *s;
        if (auto s = rd.string_field(oj, path, "name")) o.name = *s;
        if (const Json* pv = rd.field(oj, path, "polygon")) {
          if (!pv->is_array()) rd.fail(path + ".polygon", "expected array");
          else
            for (std::size_t k = 0; k < pv->size(); ++k)
              if (auto p = rd.point((*pv)[k], path + ".polygon[" + std::to_string(k) + "]"))
                o.polygon.push_back(*p);
        }
        if (auto it = oj.find("attributes"); it != oj.end()) {
          if (it->is_object()) o.attributes = *it;
          else rd.fail(path + ".attributes", "expected object");
        }
        r.objects.push_back(std::move(o));
      }
  }
  if (issues.size() != before) return std::nullopt;
  return r;
}

// ── Invariants ──────────────────────────────────────────────────────────────

// image_id doubles as a file name when a manifest is written out.
inline constexpr std::string_view kIdChars =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-.";

/// Checks record invariants. Polygon degeneracy is reported with kind
/// Geometry so callers can choose to tolerate it.
inline std::vector<Issue> validate_record(const ImageRecord& r, const std::string& file = "<memory>") {
  std::vector<Issue> out;
  auto bad = [&](Issue::Kind k, std::string path, std::string msg) {
    out.push_back({k, file, std::move(path), std::move(msg)});
  };
  using K = Issue::Kind;
  if (r.image_id.empty()) bad(K::Invariant, "$.image_id", "empty image_id");
  else if (r.image_id[0] == '.' || r.image_id.find_first_not_of(kIdChars) != std::string::npos)
    bad(K::Invariant, "$.image_id", "image_id may only use letters, digits, '_', '-' and '.' (not leading)");
  if (!is_known_category(r.category)) bad(K::Invariant, "$.category", "unknown category '" + r.category + "'");
  if (r.label == Label::Normal && !r.reasons.empty())
    bad(K::Invariant, "$.reasons", "label is normal but reasons are present");
  if (r.label == Label::Abnormal && r.reasons.empty())
    bad(K::Invariant, "$.reasons", "label is abnormal but no reasons given");
  for (std::size_t i = 0; i < r.reasons.size(); ++i)
    if (!parse_reason(r.reasons[i]))
      bad(K::Invariant, "$.reasons[" + std::to_string(i) + "]",
          "reason does not match '<Anomaly Type>: <text>': \"" + r.reasons[i] + "\"");
  if (!(r.width > 0 && r.height > 0)) bad(K::Invariant, "$.image_size", "image size must be positive");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < r.objects.size(); ++i) {
    const auto& o = r.objects[i];
    const std::string path = "$.objects[" + std::to_string(i) + "]";
    if (o.object_id.empty()) bad(K::Invariant, path + ".object_id", "empty object_id");
    if (!ids.insert(o.object_id).second)
      bad(K::Invariant, path + ".object_id", "duplicate object_id '" + o.object_id + "'");
    if (o.name.empty()) bad(K::Invariant, path + ".name", "empty name");
    for (const auto& p : o.polygon)
      if (p.x < 0 || p.y < 0 || p.x > r.width || p.y > r.height) {
        bad(K::Invariant, path + ".polygon", "vertex outside image bounds");
        break;
      }
    if (o.polygon.size() < 3) bad(K::Geometry, path + ".polygon", "fewer than 3 vertices");
    else if (geometry::area(o.polygon) <= 0) bad(K::Geometry, path + ".polygon", "zero area");
    else if (!geometry::is_simple(o.polygon)) bad(K::Geometry, path + ".polygon", "self-intersecting polygon");
  }
  return out;
}

// ── Manifest ────────────────────────────────────────────────────────────────

struct DatasetManifest {
  std::vector<ImageRecord> records;  // sorted by image_id

  const ImageRecord* find(std::string_view image_id) const {
    auto it = std::lower_bound(records.begin(), records.end(), image_id,
                               [](const ImageRecord& r, std::string_view id) { return r.image_id < id; });
    return (it != records.end() && it->image_id == image_id) ? &*it : nullptr;
  }

  /// (split, category) -> number of records.
  std::map<std::pair<std::string, std::string>, std::size_t> counts() const {
    std::map<std::pair<std::string, std::string>, std::size_t> c;
    for (const auto& r : records) ++c[{std::string(to_string(r.split)), r.category}];
    return c;
  }

  std::size_t count(Split s) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [s](const ImageRecord& r) { return r.split == s; }));
  }

  /// Content hash over the canonical form of every record.
  std::string fingerprint() const {
    std::string acc;
    for (const auto& r : records) acc += canonical(to_json(r)) + "\n";
    return sha256_hex(acc);
  }
};

/// Sorts records and enforces manifest-level uniqueness.
inline DatasetManifest make_manifest(std::vector<ImageRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const ImageRecord& a, const ImageRecord& b) { return a.image_id < b.image_id; });
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].image_id == records[i - 1].image_id)
      throw InvariantError("duplicate image_id '" + records[i].image_id + "' in manifest");
  return DatasetManifest{std::move(records)};
}

struct LoadOptions {
  /// When false, degenerate polygons are kept and reported as warnings; the
  /// facts stage then fails those images individually.
  bool strict_geometry = true;
};

struct ScanResult {
  DatasetManifest manifest;  // records that passed every blocking check
  std::vector<Issue> errors;
  std::vector<Issue> warnings;
};

inline constexpr const char* kIndexFile = "index.json";

/// Relative paths of annotation files under `root`: taken from index.json
/// when present, else every *.json file found recursively.
inline std::vector<std::string> list_annotation_files(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  const auto index = root / kIndexFile;
  if (fs::exists(index)) {
    Json j = read_json_file(index.string());
    if (!j.is_object() || !j.contains("files") || !j["files"].is_array())
      throw SchemaError(index.string() + ": $.files: expected array of relative paths");
    for (const auto& f : j["files"]) {
      if (!f.is_string()) throw SchemaError(index.string() + ": $.files: expected string entries");
      files.push_back(f.get<std::string>());
    }
    return files;
  }
  if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().extension() != ".json") continue;
    files.push_back(fs::relative(e.path(), root).generic_string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

/// Loads every annotation file and collects all problems instead of
/// stopping at the first one.
inline ScanResult scan_manifest(const std::filesystem::path& root, const LoadOptions& opts = {}) {
  ScanResult out;
  std::vector<ImageRecord> good;
  std::map<std::string, std::string> seen;  // image_id -> file
  for (const auto& rel : list_annotation_files(root)) {
    const std::string path = (root / rel).string();
    Json j;
    try {
      j = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
      out.errors.push_back({Issue::Kind::Schema, rel, "$", std::string("invalid JSON: ") + e.what()});
      continue;
    } catch (const IoError& e) {
      out.errors.push_back({Issue::Kind::Schema, rel, "$", e.what()});
      continue;
    }
    auto rec = record_from_json(j, rel, out.errors);
    if (!rec) continue;
    bool blocked = false;
    for (auto& issue : validate_record(*rec, rel)) {
      if (issue.kind == Issue::Kind::Geometry && !opts.strict_geometry) {
        out.warnings.push_back(std::move(issue));
      } else {
        if (issue.kind == Issue::Kind::Geometry) issue.kind = Issue::Kind::Invariant;
        out.errors.push_back(std::move(issue));
        blocked = true;
      }
    }
    if (auto [it, inserted] = seen.emplace(rec->image_id, rel); !inserted) {
      out.errors.push_back({Issue::Kind::Invariant, rel, "$.image_id",
                            "duplicate image_id '" + rec->image_id + "' (also in " + it->second + ")"});
      blocked = true;
    }
    if (!blocked) good.push_back(std::move(*rec));
  }
  out.manifest = make_manifest(std::move(good));
  return out;
}

/// Strict load: throws SchemaError if any schema problem was found, else
/// InvariantError if any invariant failed. The message lists every issue.
inline DatasetManifest load_manifest(const std::filesystem::path& root, const LoadOptions& opts = {}) {
  auto scan = scan_manifest(root, opts);
  if (scan.errors.empty()) return std::move(scan.manifest);
  std::string msg = std::to_string(scan.errors.size()) + " problem(s) in " + root.string() + ":";
  bool any_schema = false;
  for (const auto& e : scan.errors) {
    msg += "\n  " + e.to_string();
    any_schema |= e.kind == Issue::Kind::Schema;
  }
  if (any_schema) throw SchemaError(msg);
  throw InvariantError(msg);
}

/// Writes one `<image_id>.json` per record plus index.json.
inline void write_manifest(const DatasetManifest& m, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Json index = {{"files", Json::array()}};
  for (const auto& r : m.records) {
    const std::string file = r.image_id + ".json";
    write_file((dir / file).string(), to_json(r).dump(2) + "\n");
    index["files"].push_back(file);
  }
  write_file((dir / kIndexFile).string(), index.dump(2) + "\n");
}

}  // namespace logicode::dataset
