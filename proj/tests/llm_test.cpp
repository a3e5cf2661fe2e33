#include <gtest/gtest.h>

#include <atomic>
#include <future>

#include "logicode/llm.hpp"
#include "logicode/synth.hpp"
#include "support/tmpdir.hpp"

using namespace logicode;
using namespace logicode::llm;

namespace {

LlmRequest request(std::string text, double temperature = 0.7) {
  return {"gpt-4", {{"system", "sys"}, {"user", std::move(text)}}, temperature, 512};
}

Json completion(const std::string& content) {
  return {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}, {"finish_reason", "stop"}}}},
          {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 7}}}};
}

/// Local chat-completions endpoint with scripted statuses.
class FakeServer {
 public:
  FakeServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++calls_;
      const int now = ++in_flight_;
      int seen = peak_.load();
      while (now > seen && !peak_.compare_exchange_weak(seen, now)) {}
      if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      int status = 200;
      {
        std::lock_guard lk(mu_);
        if (!statuses_.empty()) {
          status = statuses_.front();
          statuses_.pop_front();
        }
      }
      res.status = status;
      if (status == 200) {
        const Json body = Json::parse(req.body);
        res.set_content(completion("echo " + std::to_string(n) + ": " + body["messages"].back()["content"].get<std::string>()).dump(),
                        "application/json");
      } else {
        res.set_content("{\"error\":\"scripted\"}", "application/json");
      }
      --in_flight_;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  void script(std::initializer_list<int> statuses) {
    std::lock_guard lk(mu_);
    statuses_.assign(statuses);
  }

  LiveConfig config() const {
    LiveConfig c;
    c.api_base = "http://127.0.0.1:" + std::to_string(port_) + "/v1/";
    c.api_key = "test-key";
    c.backoff = std::chrono::milliseconds(1);
    c.timeout = std::chrono::seconds(5);
    return c;
  }

  std::atomic<int> calls_{0}, in_flight_{0}, peak_{0};
  int delay_ms_ = 0;
  std::string last_auth_, last_body_;

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::deque<int> statuses_;
};

}  // namespace

TEST(Llm, RequestHashIsCanonical) {
  const auto a = request("hello");
  const auto b = LlmRequest::from_json(Json::parse(a.to_json().dump()));
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash(), sha256_hex(a.to_json().dump()));
  EXPECT_NE(a.hash(), request("hello", 0.0).hash());
  EXPECT_NE(a.hash(), request("hello!").hash());
  // Keys come out sorted regardless of construction order.
  EXPECT_LT(a.to_json().dump().find("\"max_tokens\""), a.to_json().dump().find("\"messages\""));
}

TEST(Llm, LiveBackendSpeaksChatCompletions) {
  FakeServer srv;
  LiveBackend b(srv.config());
  const auto r = b.complete(request("ping"));
  EXPECT_EQ(r.content, "echo 1: ping");
  EXPECT_EQ(r.prompt_tokens, 11);
  EXPECT_EQ(r.completion_tokens, 7);
  EXPECT_EQ(srv.last_auth_, "Bearer test-key");
  EXPECT_EQ(Json::parse(srv.last_body_), request("ping").to_json());
}

TEST(Llm, LiveBackendRetriesTransientFailures) {
  FakeServer srv;
  LiveBackend b(srv.config());
  srv.script({500, 429});
  EXPECT_EQ(b.complete(request("x")).content, "echo 3: x");
  EXPECT_EQ(srv.calls_, 3);

  srv.script({503, 503, 503});
  EXPECT_THROW(b.complete(request("y")), TransportError);
  EXPECT_EQ(srv.calls_, 6);
}

TEST(Llm, LiveBackendAuthErrorsAreNotRetried) {
  FakeServer srv;
  LiveBackend b(srv.config());
  srv.script({401});
  EXPECT_THROW(b.complete(request("x")), AuthError);
  srv.script({403});
  EXPECT_THROW(b.complete(request("x")), AuthError);
  EXPECT_EQ(srv.calls_, 2);
  srv.script({400});
  EXPECT_THROW(b.complete(request("x")), TransportError);
  EXPECT_EQ(srv.calls_, 3);
}

TEST(Llm, LiveBackendUnreachable) {
  LiveConfig c;
  c.api_base = "http://127.0.0.1:1/v1";
  c.api_key = "k";
  c.backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::seconds(1);
  LiveBackend b(c);
  EXPECT_THROW(b.complete(request("x")), TransportError);
}

TEST(Llm, LiveBackendCapsInFlightRequests) {
  FakeServer srv;
  srv.delay_ms_ = 30;
  auto cfg = srv.config();
  cfg.max_in_flight = 2;
  LiveBackend b(cfg);
  std::vector<std::future<LlmResponse>> fs;
  for (int i = 0; i < 6; ++i) fs.push_back(std::async(std::launch::async, [&, i] { return b.complete(request(std::to_string(i))); }));
  for (auto& f : fs) f.get();
  EXPECT_EQ(srv.calls_, 6);
  EXPECT_LE(srv.peak_, 2);
}

TEST(Llm, CredentialsComeFromEnvironment) {
  ::unsetenv("LOGICODE_API_KEY");
  EXPECT_THROW(LiveConfig::from_env(), AuthError);
  ::setenv("LOGICODE_API_KEY", "secret", 1);
  ::setenv("LOGICODE_API_BASE", "http://localhost:9/v1", 1);
  const auto c = LiveConfig::from_env();
  EXPECT_EQ(c.api_key, "secret");
  EXPECT_EQ(c.api_base, "http://localhost:9/v1");
  ::unsetenv("LOGICODE_API_KEY");
  ::unsetenv("LOGICODE_API_BASE");
}

TEST(Llm, RecordThenReplayOffline) {
  testing_support::TempDir dir;
  const std::string path = (dir / "c.jsonl").string();
  std::vector<LlmResponse> live;
  {
    FakeServer srv;
    RecordingBackend rec(std::make_unique<LiveBackend>(srv.config()), path);
    live.push_back(rec.complete(request("a")));
    live.push_back(rec.complete(request("a")));  // same hash, different answer
    live.push_back(rec.complete(request("b")));
  }
  // The server is gone; replay must not need it.
  auto replay = ReplayBackend::from_file(path);
  EXPECT_EQ(replay->complete(request("a")), live[0]);
  EXPECT_EQ(replay->complete(request("b")), live[2]);
  EXPECT_EQ(replay->complete(request("a")), live[1]);
  try {
    replay->complete(request("a"));
    FAIL() << "expected CassetteMiss";
  } catch (const CassetteMiss& e) {
    EXPECT_EQ(e.request_hash, request("a").hash());
  }
  EXPECT_THROW(replay->complete(request("novel")), CassetteMiss);
}

TEST(Llm, CassetteFileFormat) {
  testing_support::TempDir dir;
  const std::string path = (dir / "c.jsonl").string();
  const auto req = request("q");
  write_file(path, Json{{"hash", req.hash()}, {"request", req.to_json()}, {"response", {{"content", "A"}}}}.dump() + "\n\n");
  auto replay = ReplayBackend::from_file(path);
  EXPECT_EQ(replay->complete(req).content, "A");
  EXPECT_EQ(replay->id(), "replay:" + sha256_hex(read_file(path)).substr(0, 16));

  write_file(path, "{not json\n");
  EXPECT_THROW(ReplayBackend::from_file(path), BackendError);
  EXPECT_THROW(ReplayBackend::from_file((dir / "absent.jsonl").string()), BackendError);
}

TEST(Llm, OracleStubReturnsReferenceProgram) {
  const auto rs = synth::template_rules("connector-scene");
  OracleStubBackend stub({rs});
  const auto p = prompt::build_prompt(rs, "v1");
  const auto r = stub.complete(request(p.rendered));
  const std::string expected = checklang::pretty_print(checklang::compile_reference(rs));
  EXPECT_EQ(r.content, "```checklang\n" + expected + "```\n");
}

TEST(Llm, OracleStubPicksCategoryFromPrompt) {
  const auto a = synth::template_rules("connector-scene");
  const auto b = rules::load_ruleset(std::string(LOGICODE_DATA_DIR) + "/rules/pushpins.json");
  OracleStubBackend stub({a, b});
  const auto pb = prompt::build_prompt(b, "v1");
  EXPECT_NE(stub.complete(request(pb.rendered)).content.find(checklang::pretty_print(checklang::compile_reference(b))),
            std::string::npos);
  EXPECT_THROW(stub.complete(request("no category here")), BackendError);
}

TEST(Llm, OracleStubJudges) {
  OracleStubBackend stub({synth::template_rules("connector-scene")});
  const auto t = prompt::load_template("judge_v1");
  auto judge = [&](std::vector<std::string> p, std::vector<std::string> g) {
    return stub.complete(request(prompt::build_judge_prompt(t, p, g).rendered, 0.0)).content;
  };
  EXPECT_EQ(judge({"Size Anomaly: a", "Quantity Anomaly: b"}, {"Quantity Anomaly: b", "Size Anomaly: a"}), "MATCH");
  EXPECT_EQ(judge({"Size Anomaly: a"}, {"Size Anomaly: a", "Size Anomaly: a"}), "MISMATCH");
  EXPECT_EQ(judge({}, {"Size Anomaly: a"}), "MISMATCH");
}

TEST(Llm, BackendConfigValidation) {
  EXPECT_THROW(BackendConfig::from_json({{"kind", "psychic"}}, "backend"), ConfigError);
  EXPECT_THROW(BackendConfig::from_json({{"kind", "replay"}}, "backend"), ConfigError);
  EXPECT_THROW(BackendConfig::from_json({{"kind", "oracle"}, {"colour", 1}}, "backend"), ConfigError);
  EXPECT_THROW(BackendConfig::from_json({{"kind", "oracle"}, {"temperature", "hot"}}, "backend"), ConfigError);
  EXPECT_THROW(BackendConfig::from_json({{"kind", "oracle"}, {"temperature", 3}}, "backend"), ConfigError);
  EXPECT_THROW(BackendConfig::from_json(Json::array(), "backend"), ConfigError);
  const auto c = BackendConfig::from_json({{"kind", "replay"}, {"cassette", "x.jsonl"}}, "backend");
  EXPECT_EQ(c.cassette, "x.jsonl");
  EXPECT_THROW(make_backend(c, {}), BackendError);
}
