#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "logicode/checklang/compile.hpp"
#include "logicode/common.hpp"
#include "logicode/prompt.hpp"
#include "logicode/rules.hpp"

namespace logicode::llm {

// ── Errors ──────────────────────────────────────────────────────────────────

class BackendError : public Error {
 public:
  using Error::Error;
};

class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
};

class AuthError : public BackendError {
 public:
  using BackendError::BackendError;
};

class CassetteMiss : public BackendError {
 public:
  explicit CassetteMiss(std::string hash)
      : BackendError("cassette has no recorded response for request " + hash), request_hash(std::move(hash)) {}
  std::string request_hash;
};

// ── Wire types ──────────────────────────────────────────────────────────────

struct Message {
  std::string role;
  std::string content;
  friend bool operator==(const Message&, const Message&) = default;
};

struct LlmRequest {
  std::string model;
  std::vector<Message> messages;
  double temperature = 0.7;
  int max_tokens = 2048;

  /// Chat-completions body. Object keys are sorted, so dump() is canonical.
  Json to_json() const {
    Json msgs = Json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    return {{"model", model}, {"messages", msgs}, {"temperature", temperature}, {"max_tokens", max_tokens}};
  }

  std::string hash() const { return sha256_hex(canonical(to_json())); }

  static LlmRequest from_json(const Json& j) {
    LlmRequest r;
    try {
      r.model = j.at("model").get<std::string>();
      for (const auto& m : j.at("messages"))
        r.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
      r.temperature = j.at("temperature").get<double>();
      r.max_tokens = j.at("max_tokens").get<int>();
    } catch (const Json::exception& e) {
      throw SchemaError(std::string("malformed request: ") + e.what());
    }
    return r;
  }

  /// Text of the last user message.
  const std::string& user_text() const {
    static const std::string empty;
    for (auto it = messages.rbegin(); it != messages.rend(); ++it)
      if (it->role == "user") return it->content;
    return empty;
  }
};

struct LlmResponse {
  std::string content;
  std::string finish_reason = "stop";
  long long prompt_tokens = 0;
  long long completion_tokens = 0;

  Json to_json() const {
    return {{"content", content},
            {"finish_reason", finish_reason},
            {"usage", {{"prompt_tokens", prompt_tokens}, {"completion_tokens", completion_tokens}}}};
  }

  static LlmResponse from_json(const Json& j) {
    LlmResponse r;
    try {
      r.content = j.at("content").get<std::string>();
      r.finish_reason = j.value("finish_reason", std::string("stop"));
      if (j.contains("usage")) {
        r.prompt_tokens = j["usage"].value("prompt_tokens", 0LL);
        r.completion_tokens = j["usage"].value("completion_tokens", 0LL);
      }
    } catch (const Json::exception& e) {
      throw SchemaError(std::string("malformed response: ") + e.what());
    }
    return r;
  }

  friend bool operator==(const LlmResponse&, const LlmResponse&) = default;
};

// ── Backends ────────────────────────────────────────────────────────────────

class Backend {
 public:
  virtual ~Backend() = default;
  virtual LlmResponse complete(const LlmRequest& req) = 0;
  /// Stable identifier recorded in run provenance.
  virtual std::string id() const = 0;
  /// False when answers depend on call order, as with cassettes.
  virtual bool order_independent() const { return true; }
  virtual std::size_t max_in_flight() const { return 1; }
};

// ── Live ────────────────────────────────────────────────────────────────────

struct LiveConfig {
  std::string api_base = "https://api.openai.com/v1";
  std::string api_key;
  std::size_t max_in_flight = 4;
  int attempts = 3;
  std::chrono::milliseconds backoff{500};  // doubled after each failed attempt
  std::chrono::seconds timeout{120};

  /// Credentials come from the environment only.
  static LiveConfig from_env() {
    LiveConfig c;
    const char* key = std::getenv("LOGICODE_API_KEY");
    if (!key || !*key) throw AuthError("LOGICODE_API_KEY is not set");
    c.api_key = key;
    if (const char* base = std::getenv("LOGICODE_API_BASE"); base && *base) c.api_base = base;
    return c;
  }
};

namespace detail {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing slash
};

inline Endpoint split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("api base '" + url + "' lacks a scheme");
  const auto slash = url.find('/', scheme + 3);
  Endpoint e{url.substr(0, slash), slash == std::string::npos ? "" : url.substr(slash)};
  while (e.path.ends_with("/")) e.path.pop_back();
  return e;
}

/// Counting gate for in-flight requests.
class Gate {
 public:
  explicit Gate(std::size_t n) : free_(std::max<std::size_t>(n, 1)) {}
  void acquire() {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return free_ > 0; });
    --free_;
  }
  void release() {
    {
      std::lock_guard lk(mu_);
      ++free_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t free_;
};

}  // namespace detail

/// OpenAI-compatible chat-completions client.
class LiveBackend : public Backend {
 public:
  explicit LiveBackend(LiveConfig cfg) : cfg_(std::move(cfg)), ep_(detail::split_url(cfg_.api_base)), gate_(cfg_.max_in_flight) {}

  LlmResponse complete(const LlmRequest& req) override {
    gate_.acquire();
    struct Release {
      detail::Gate& g;
      ~Release() { g.release(); }
    } release{gate_};

    const std::string body = req.to_json().dump();
    std::string last_error;
    auto delay = cfg_.backoff;
    for (int attempt = 0; attempt < cfg_.attempts; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
      httplib::Client cli(ep_.origin);
      cli.set_connection_timeout(cfg_.timeout);
      cli.set_read_timeout(cfg_.timeout);
      cli.set_write_timeout(cfg_.timeout);
      cli.set_bearer_token_auth(cfg_.api_key);
      auto res = cli.Post(ep_.path + "/chat/completions", body, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status == 401 || res->status == 403)
        throw AuthError("endpoint rejected the credential (HTTP " + std::to_string(res->status) + ")");
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
      return parse(res->body);
    }
    throw TransportError("request failed after " + std::to_string(cfg_.attempts) + " attempts: " + last_error);
  }

  std::string id() const override { return "live:" + ep_.origin + ep_.path; }
  std::size_t max_in_flight() const override { return cfg_.max_in_flight; }

  static LlmResponse parse(const std::string& body) {
    Json j = Json::parse(body, nullptr, false);
    try {
      if (j.is_discarded()) throw TransportError("response body is not JSON");
      const Json& choice = j.at("choices").at(0);
      LlmResponse r;
      const Json& content = choice.at("message").at("content");
      r.content = content.is_string() ? content.get<std::string>() : "";
      if (choice.contains("finish_reason") && choice["finish_reason"].is_string())
        r.finish_reason = choice["finish_reason"].get<std::string>();
      if (j.contains("usage") && j["usage"].is_object()) {
        r.prompt_tokens = j["usage"].value("prompt_tokens", 0LL);
        r.completion_tokens = j["usage"].value("completion_tokens", 0LL);
      }
      return r;
    } catch (const Json::exception& e) {
      throw TransportError(std::string("unexpected response shape: ") + e.what());
    }
  }

 private:
  LiveConfig cfg_;
  detail::Endpoint ep_;
  detail::Gate gate_;
};

// ── Cassette / replay ───────────────────────────────────────────────────────

struct CassetteEntry {
  std::string hash;
  Json request;
  LlmResponse response;

  Json to_json() const { return {{"hash", hash}, {"request", request}, {"response", response.to_json()}}; }
};

/// Recorded request/response pairs. Repeated identical requests replay
/// their recorded responses in order.
class Cassette {
 public:
  Cassette() = default;

  static Cassette load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BackendError("cannot open cassette '" + path + "'");
    Cassette c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      Json j = Json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("hash") || !j.contains("response"))
        throw BackendError(path + ":" + std::to_string(lineno) + ": malformed cassette entry");
      try {
        c.add({j["hash"].get<std::string>(), j.value("request", Json()), LlmResponse::from_json(j["response"])});
      } catch (const std::exception& e) {
        throw BackendError(path + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    return c;
  }

  void add(CassetteEntry e) {
    std::lock_guard lk(mu_);
    queues_[e.hash].push_back(e.response);
    entries_.push_back(std::move(e));
  }

  std::optional<LlmResponse> take(const std::string& hash) {
    std::lock_guard lk(mu_);
    auto it = queues_.find(hash);
    if (it == queues_.end() || it->second.empty()) return std::nullopt;
    LlmResponse r = std::move(it->second.front());
    it->second.pop_front();
    return r;
  }

  std::string dump() const {
    std::lock_guard lk(mu_);
    std::string out;
    for (const auto& e : entries_) out += e.to_json().dump() + "\n";
    return out;
  }

  std::size_t size() const {
    std::lock_guard lk(mu_);
    return entries_.size();
  }

  Cassette(Cassette&& o) noexcept {
    std::lock_guard lk(o.mu_);
    entries_ = std::move(o.entries_);
    queues_ = std::move(o.queues_);
  }

 private:
  mutable std::mutex mu_;
  std::vector<CassetteEntry> entries_;
  std::map<std::string, std::deque<LlmResponse>> queues_;
};

/// Offline backend. Never touches the network.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(Cassette c, std::string id = "replay") : cassette_(std::move(c)), id_(std::move(id)) {}

  static std::unique_ptr<ReplayBackend> from_file(const std::string& path) {
    if (!std::filesystem::is_regular_file(path)) throw BackendError("cassette '" + path + "' does not exist");
    return std::make_unique<ReplayBackend>(Cassette::load(path), "replay:" + sha256_hex(read_file(path)).substr(0, 16));
  }

  LlmResponse complete(const LlmRequest& req) override {
    const std::string h = req.hash();
    if (auto r = cassette_.take(h)) return *r;
    throw CassetteMiss(h);
  }

  std::string id() const override { return id_; }
  bool order_independent() const override { return false; }

 private:
  Cassette cassette_;
  std::string id_;
};

/// Passes calls through and appends every exchange to a cassette file.
class RecordingBackend : public Backend {
 public:
  RecordingBackend(std::unique_ptr<Backend> inner, std::string path) : inner_(std::move(inner)), path_(std::move(path)) {
    std::ofstream(path_, std::ios::binary | std::ios::trunc);
  }

  LlmResponse complete(const LlmRequest& req) override {
    LlmResponse r = inner_->complete(req);
    const CassetteEntry e{req.hash(), req.to_json(), r};
    std::lock_guard lk(mu_);
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    out << e.to_json().dump() << "\n";
    if (!out) throw IoError("cannot append to cassette '" + path_ + "'");
    return r;
  }

  std::string id() const override { return inner_->id(); }
  bool order_independent() const override { return false; }
  std::size_t max_in_flight() const override { return inner_->max_in_flight(); }

 private:
  std::unique_ptr<Backend> inner_;
  std::string path_;
  std::mutex mu_;
};

// ── Oracle stub ─────────────────────────────────────────────────────────────

/// Judge answer for two reason lists: MATCH iff they agree as multisets.
inline std::string stub_judgement(std::vector<std::string> predicted, std::vector<std::string> ground_truth) {
  std::sort(predicted.begin(), predicted.end());
  std::sort(ground_truth.begin(), ground_truth.end());
  return predicted == ground_truth ? "MATCH" : "MISMATCH";
}

/// Answers generation requests with the reference program for the rule set
/// named in the prompt, and judge requests by exact comparison.
class OracleStubBackend : public Backend {
 public:
  explicit OracleStubBackend(std::vector<rules::RuleSet> rulesets) {
    for (auto& rs : rulesets) {
      const std::string src = checklang::pretty_print(checklang::compile_reference(rs));
      programs_.emplace_back(rs.category, "```checklang\n" + src + "```\n");
    }
  }

  LlmResponse complete(const LlmRequest& req) override {
    const std::string& text = req.user_text();
    if (auto lists = prompt::parse_judge_prompt(text))
      return {stub_judgement(lists->predicted, lists->ground_truth), "stop", 0, 0};
    const std::pair<std::string, std::string>* pick = programs_.size() == 1 ? &programs_[0] : nullptr;
    for (const auto& p : programs_)
      if (text.find("\"" + p.first + "\"") != std::string::npos) pick = &p;
    if (!pick) throw BackendError("oracle stub: request names no known category");
    return {pick->second, "stop", 0, 0};
  }

  std::string id() const override { return "oracle-stub"; }
  std::size_t max_in_flight() const override { return 64; }

 private:
  std::vector<std::pair<std::string, std::string>> programs_;
};

// ── Factory ─────────────────────────────────────────────────────────────────

struct BackendConfig {
  std::string kind = "oracle";  // live | replay | oracle
  std::string cassette;
  std::string model = "gpt-4";
  std::optional<double> temperature;
  std::string record;  // live/oracle: cassette path to record into
  std::size_t max_in_flight = 4;

  static BackendConfig from_json(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected object");
    BackendConfig c;
    try {
      for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k != "kind" && k != "cassette" && k != "model" && k != "temperature" && k != "record" &&
            k != "max_in_flight")
          throw ConfigError(where + "." + k + ": unknown field");
      }
      c.kind = j.value("kind", c.kind);
      c.cassette = j.value("cassette", c.cassette);
      c.model = j.value("model", c.model);
      if (j.contains("temperature")) c.temperature = j["temperature"].get<double>();
      c.record = j.value("record", c.record);
      c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    } catch (const Json::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
    if (c.kind != "live" && c.kind != "replay" && c.kind != "oracle")
      throw ConfigError(where + ".kind: expected live, replay or oracle, got '" + c.kind + "'");
    if (c.kind == "replay" && c.cassette.empty()) throw ConfigError(where + ".cassette: required for replay");
    if (c.temperature && !(*c.temperature >= 0 && *c.temperature <= 2))
      throw ConfigError(where + ".temperature: must lie in [0, 2]");
    return c;
  }

  Json to_json() const {
    Json j = {{"kind", kind}, {"model", model}};
    if (!cassette.empty()) j["cassette"] = cassette;
    if (temperature) j["temperature"] = *temperature;
    return j;
  }
};

inline std::unique_ptr<Backend> make_backend(const BackendConfig& c, const std::vector<rules::RuleSet>& rulesets) {
  std::unique_ptr<Backend> b;
  if (c.kind == "replay") return ReplayBackend::from_file(c.cassette);
  if (c.kind == "live") {
    LiveConfig lc = LiveConfig::from_env();
    lc.max_in_flight = c.max_in_flight;
    b = std::make_unique<LiveBackend>(lc);
  } else {
    b = std::make_unique<OracleStubBackend>(rulesets);
  }
  if (!c.record.empty()) b = std::make_unique<RecordingBackend>(std::move(b), c.record);
  return b;
}

}  // namespace logicode::llm
