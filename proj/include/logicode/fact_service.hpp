#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "logicode/common.hpp"
#include "logicode/facts.hpp"

// Fact queries served over a byte stream for foreign-runtime programs.
//
// Each message is a frame: the payload length in bytes as ASCII decimal, a
// newline, then that many bytes of JSON.
//
//   request:  {"query_id": 7, "query": "size", "args": {"id": "cable_0"}}
//   response: {"query_id": 7, "value": {"area": 2048.0, "length": 256.1}}
//          or {"query_id": 7, "error": {"kind": "unknown_object", "message": "..."}}
//
// Queries and their args:
//   find {name}  count {name}  size {id}  position {id}  color {id}
//   order {names, axis}  nearest {id, name}  overlaps {a, b}

namespace logicode::facts::service {

class ProtocolError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::size_t kMaxFrame = 1 << 20;

inline std::string encode_frame(const Json& payload) {
  const std::string body = payload.dump();
  return std::to_string(body.size()) + "\n" + body;
}

inline void write_frame(std::ostream& out, const Json& payload) {
  out << encode_frame(payload);
  out.flush();
}

/// Next frame, or nullopt on clean end of stream.
inline std::optional<Json> read_frame(std::istream& in) {
  std::string header;
  int c;
  while ((c = in.get()) != std::char_traits<char>::eof() && c != '\n') {
    if (c < '0' || c > '9') throw ProtocolError("frame header: expected decimal length");
    if (header.size() >= 8) throw ProtocolError("frame header too long");
    header.push_back(char(c));
  }
  if (c == std::char_traits<char>::eof()) {
    if (header.empty()) return std::nullopt;
    throw ProtocolError("truncated frame header");
  }
  if (header.empty()) throw ProtocolError("frame header: empty length");
  const std::size_t n = std::stoul(header);
  if (n > kMaxFrame) throw ProtocolError("frame of " + header + " bytes exceeds limit");
  std::string body(n, '\0');
  in.read(body.data(), std::streamsize(n));
  if (std::size_t(in.gcount()) != n) throw ProtocolError("truncated frame body");
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded()) throw ProtocolError("frame body is not JSON");
  return j;
}

inline FactQuery query_from_json(const std::string& name, const Json& args) {
  if (!args.is_object()) throw SchemaError("args must be an object");
  auto str = [&](const char* key) {
    if (!args.contains(key) || !args[key].is_string()) throw SchemaError(std::string("args.") + key + ": expected string");
    return args[key].get<std::string>();
  };
  if (name == "find") return query::Find{str("name")};
  if (name == "count") return query::Count{str("name")};
  if (name == "size") return query::Size{str("id")};
  if (name == "position") return query::Position{str("id")};
  if (name == "color") return query::Color{str("id")};
  if (name == "nearest") return query::Nearest{str("id"), str("name")};
  if (name == "overlaps") return query::Overlaps{str("a"), str("b")};
  if (name == "order") {
    if (!args.contains("names") || !args["names"].is_array()) throw SchemaError("args.names: expected list");
    query::Order q;
    for (const auto& n : args["names"]) {
      if (!n.is_string()) throw SchemaError("args.names: expected strings");
      q.names.push_back(n.get<std::string>());
    }
    auto axis = parse_axis(args.value("axis", std::string("x")));
    if (!axis) throw SchemaError("args.axis: expected \"x\" or \"y\"");
    q.axis = *axis;
    return q;
  }
  throw SchemaError("unknown query '" + name + "'");
}

/// Answers one request. Never throws; failures become error responses.
inline Json handle(const FactStore& store, const Json& request) {
  Json id = request.is_object() && request.contains("query_id") ? request["query_id"] : Json(nullptr);
  auto fail = [&](const char* kind, const std::string& msg) {
    return Json{{"query_id", id}, {"error", {{"kind", kind}, {"message", msg}}}};
  };
  if (!request.is_object() || !request.contains("query") || !request["query"].is_string())
    return fail("bad_request", "expected {query_id, query, args}");
  try {
    const FactQuery q = query_from_json(request["query"].get<std::string>(), request.value("args", Json::object()));
    return {{"query_id", id}, {"value", to_json(run_query(store, q))}};
  } catch (const UnknownObject& e) {
    return fail("unknown_object", e.what());
  } catch (const SchemaError& e) {
    return fail("bad_request", e.what());
  }
}

/// Request/response loop until end of input. Returns the number of requests
/// answered. A framing error ends the session with ProtocolError.
inline std::size_t serve(const FactStore& store, std::istream& in, std::ostream& out) {
  std::size_t n = 0;
  while (auto req = read_frame(in)) {
    write_frame(out, handle(store, *req));
    ++n;
  }
  return n;
}

}  // namespace logicode::facts::service
