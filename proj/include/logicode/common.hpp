#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

namespace logicode {

using Json = nlohmann::json;

// ── Errors ──────────────────────────────────────────────────────────────────

/// Base for every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// ── Anomaly types and reason strings ────────────────────────────────────────

enum class AnomalyType { Quantity, Size, Position, Matching };

inline constexpr std::array<AnomalyType, 4> kAnomalyTypes = {
    AnomalyType::Quantity, AnomalyType::Size, AnomalyType::Position,
    AnomalyType::Matching};

/// Short keyword: "Quantity", "Size", ...
inline std::string_view keyword(AnomalyType t) {
  switch (t) {
    case AnomalyType::Quantity: return "Quantity";
    case AnomalyType::Size: return "Size";
    case AnomalyType::Position: return "Position";
    case AnomalyType::Matching: return "Matching";
  }
  return "?";
}

/// Display name used as the prefix of a reason string: "Quantity Anomaly".
inline std::string display_name(AnomalyType t) {
  return std::string(keyword(t)) + " Anomaly";
}

inline std::optional<AnomalyType> anomaly_type_from_keyword(std::string_view s) {
  for (auto t : kAnomalyTypes)
    if (keyword(t) == s) return t;
  return std::nullopt;
}

/// Accepts either the keyword ("Size") or the display name ("Size Anomaly").
inline std::optional<AnomalyType> parse_anomaly_type(std::string_view s) {
  for (auto t : kAnomalyTypes)
    if (keyword(t) == s || display_name(t) == s) return t;
  return std::nullopt;
}

struct ParsedReason {
  AnomalyType type;
  std::string text;
};

/// Splits `<AnomalyType>: <free text>`. Free text must be non-empty.
inline std::optional<ParsedReason> parse_reason(std::string_view reason) {
  auto colon = reason.find(": ");
  if (colon == std::string_view::npos) return std::nullopt;
  auto head = reason.substr(0, colon);
  auto tail = reason.substr(colon + 2);
  for (auto t : kAnomalyTypes) {
    if (display_name(t) == head) {
      if (tail.empty()) return std::nullopt;
      return ParsedReason{t, std::string(tail)};
    }
  }
  return std::nullopt;
}

inline std::string make_reason(AnomalyType t, std::string_view text) {
  return display_name(t) + ": " + std::string(text);
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// ── Number formatting ───────────────────────────────────────────────────────

/// Fixed-point rendering, e.g. fixed(120, 2) == "120.00".
inline std::string fixed(double v, int decimals) {
  if (v == 0.0) v = 0.0;  // drop negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

/// Shortest text that reads back to exactly `v`; always contains '.' or 'e'
/// so it is recognisable as a float literal.
inline std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

// ── Hashing and files ───────────────────────────────────────────────────────

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xF];
  }
  return out;
}

/// Canonical JSON text: keys sorted (nlohmann's default object ordering),
/// no insignificant whitespace.
inline std::string canonical(const Json& j) { return j.dump(); }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
}

inline Json read_json_file(const std::string& path) {
  auto text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(path + ": invalid JSON: " + e.what());
  }
}

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace logicode
