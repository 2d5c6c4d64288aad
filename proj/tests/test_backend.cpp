#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "goe/backend.hpp"
#include "support.hpp"

using namespace goe;
using testsupport::TempDir;

namespace {

PromptMessages prompt(const std::string& user) {
  return {{{Role::System, "sys"}, {Role::User, user}}};
}

BackendParams params() {
  BackendParams p;
  p.model_id = "test-model";
  p.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  return p;
}

/// Replays a scripted sequence of outcomes, one per send().
class ScriptedBackend : public ChatBackend {
 public:
  enum class Step { Ok, Transient, Auth, Malformed };
  explicit ScriptedBackend(std::vector<Step> steps) : steps_(std::move(steps)) {}

  BackendReply send(const PromptMessages& p, const BackendParams&, std::string_view) override {
    const std::size_t i = calls++;
    const Step s = i < steps_.size() ? steps_[i] : Step::Ok;
    switch (s) {
      case Step::Transient: throw TransientError("503");
      case Step::Auth: throw AuthError("401");
      case Step::Malformed: throw MalformedResponseError("no choices");
      case Step::Ok: break;
    }
    return {"echo:" + p.last_user_content(), "2024-01-01T00:00:00Z"};
  }

  std::atomic<std::size_t> calls{0};

 private:
  std::vector<Step> steps_;
};

ClientOptions no_sleep(std::vector<std::chrono::milliseconds>* slept = nullptr) {
  ClientOptions o;
  o.retry.max_attempts = 4;
  o.retry.base_delay = std::chrono::milliseconds{100};
  o.retry.sleep = [slept](std::chrono::milliseconds d) {
    if (slept) slept->push_back(d);
  };
  return o;
}

}  // namespace

TEST_CASE("request hash covers messages, model, temperature, max_tokens only") {
  auto a = params();
  auto b = a;
  b.endpoint = "https://other.example/v1/chat/completions";
  b.timeout_seconds = 5;
  CHECK(request_hash(prompt("x"), a) == request_hash(prompt("x"), b));
  b.temperature = 0.5;
  CHECK(request_hash(prompt("x"), a) != request_hash(prompt("x"), b));
  b = a;
  b.max_tokens = 7;
  CHECK(request_hash(prompt("x"), a) != request_hash(prompt("x"), b));
  b = a;
  b.model_id = "other";
  CHECK(request_hash(prompt("x"), a) != request_hash(prompt("x"), b));
  CHECK(request_hash(prompt("x"), a) != request_hash(prompt("y"), a));
  CHECK(request_hash(prompt("x"), a).size() == 64);
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("params validation") {
  auto p = params();
  p.temperature = -1;
  CHECK_THROWS(validate(p));
  p = params();
  p.max_tokens = 0;
  CHECK_THROWS(validate(p));
  CHECK_NOTHROW(validate(params()));
}

TEST_CASE("cache hit on second identical call") {
  TempDir tmp;
  auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Step>{});
  auto cache = std::make_shared<ResponseCache>(tmp / "c.cache");
  CompletionClient client(backend, cache, no_sleep());
  const auto first = client.complete(prompt("hola"), params());
  CHECK_FALSE(first.from_cache);
  const auto second = client.complete(prompt("hola"), params());
  CHECK(second.from_cache);
  CHECK(second.content == first.content);
  CHECK(second.timestamp == first.timestamp);
  CHECK(backend->calls == 1);

  // a fresh cache object reloads the persisted entry
  ResponseCache reloaded(tmp / "c.cache");
  REQUIRE(reloaded.lookup(first.request_hash));
  CHECK(reloaded.lookup(first.request_hash)->content == "echo:hola");
}

TEST_CASE("offline cache miss") {
  TempDir tmp;
  ClientOptions o = no_sleep();
  o.offline = true;
  CompletionClient client(nullptr, std::make_shared<ResponseCache>(tmp / "c.cache"), o);
  try {
    client.complete(prompt("x"), params());
    FAIL("expected a cache miss");
  } catch (const OfflineCacheMissError& e) {
    CHECK(std::string(e.what()) == "cache miss in offline mode");
  }
}

TEST_CASE("retries: transient errors back off exponentially, others surface immediately") {
  using S = ScriptedBackend::Step;
  std::vector<std::chrono::milliseconds> slept;
  auto flaky = std::make_shared<ScriptedBackend>(std::vector<S>{S::Transient, S::Transient, S::Ok});
  CompletionClient client(flaky, nullptr, no_sleep(&slept));
  CHECK(client.complete(prompt("x"), params()).content == "echo:x");
  CHECK(flaky->calls == 3);
  REQUIRE(slept.size() == 2);
  CHECK(slept[0].count() >= 100);
  CHECK(slept[0].count() <= 125);
  CHECK(slept[1].count() >= 200);
  CHECK(slept[1].count() <= 250);

  auto down = std::make_shared<ScriptedBackend>(std::vector<S>(10, S::Transient));
  CompletionClient c2(down, nullptr, no_sleep());
  CHECK_THROWS_AS(c2.complete(prompt("x"), params()), RetriesExhaustedError);
  CHECK(down->calls == 4);

  auto auth = std::make_shared<ScriptedBackend>(std::vector<S>{S::Auth});
  CompletionClient c3(auth, nullptr, no_sleep());
  CHECK_THROWS_AS(c3.complete(prompt("x"), params()), AuthError);
  CHECK(auth->calls == 1);

  auto bad = std::make_shared<ScriptedBackend>(std::vector<S>{S::Malformed});
  CompletionClient c4(bad, nullptr, no_sleep());
  CHECK_THROWS_AS(c4.complete(prompt("x"), params()), MalformedResponseError);
  CHECK(bad->calls == 1);
}

TEST_CASE("mock backend") {
  auto mock = MockBackend::parse("*hola*\tHello.\\nSecond line\n*boom*\t!fail poisoned\n");
  auto reply = mock.send(prompt("di hola"), params(), "h");
  CHECK(reply.content == "Hello.\nSecond line");
  CHECK(reply.timestamp == std::string(MockBackend::kTimestamp));
  CHECK_THROWS_AS(mock.send(prompt("boom"), params(), "h"), BackendError);
  CHECK_THROWS_AS(mock.send(prompt("unknown"), params(), "h"), BackendError);
  const std::string hash = request_hash(prompt("exact"), params());
  mock.add(hash, "by hash");
  CHECK(mock.send(prompt("exact"), params(), hash).content == "by hash");
  CHECK_THROWS(MockBackend::parse("no tab here\n"));
  CHECK(unescape_field(escape_field("a\\b\tc\nd\re")) == "a\\b\tc\nd\re");
}

TEST_CASE("chat response parsing") {
  CHECK(parse_chat_response(R"({"choices":[{"message":{"role":"assistant","content":"Hola."}}]})") == "Hola.");
  CHECK_THROWS_AS(parse_chat_response("not json"), MalformedResponseError);
  CHECK_THROWS_AS(parse_chat_response(R"({"choices":[]})"), MalformedResponseError);
  CHECK_THROWS_AS(parse_chat_response(R"({"choices":[{"message":{"content":null}}]})"), MalformedResponseError);
  const auto body = chat_request_body(prompt("x"), params());
  CHECK(body["model"] == "test-model");
  CHECK(body["messages"][1]["role"] == "user");
}

namespace {

std::vector<BatchJob> jobs(int n) {
  std::vector<BatchJob> out;
  for (int i = 0; i < n; ++i) out.push_back({"s" + std::to_string(i), {{"e", Gender::Feminine}}, prompt("job " + std::to_string(i))});
  return out;
}

/// Mock with randomized latency so completion order differs from input order.
class JitterBackend : public ChatBackend {
 public:
  BackendReply send(const PromptMessages& p, const BackendParams&, std::string_view) override {
    const int in = ++inflight;
    int prev = peak.load();
    while (in > prev && !peak.compare_exchange_weak(prev, in)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(std::hash<std::string>{}(p.last_user_content()) % 7));
    --inflight;
    if (p.last_user_content() == "job 5") throw BackendError("poisoned");
    return {"\"" + p.last_user_content() + "\"", std::string(MockBackend::kTimestamp)};
  }
  std::atomic<int> inflight{0}, peak{0};
};

}  // namespace

TEST_CASE("run_batch keeps input order for concurrency 1, 2, 8 and isolates failures") {
  std::vector<nlohmann::ordered_json> baseline;
  for (int concurrency : {1, 2, 8}) {
    auto backend = std::make_shared<JitterBackend>();
    CompletionClient client(backend, nullptr, no_sleep());
    const auto recs = run_batch(jobs(20), params(), concurrency, client);
    REQUIRE(recs.size() == 20);
    CHECK(backend->peak <= concurrency);
    std::vector<nlohmann::ordered_json> dumped;
    for (int i = 0; i < 20; ++i) {
      CHECK(recs[i].sample_id == "s" + std::to_string(i));
      if (i == 5) {
        REQUIRE(recs[i].error);
        CHECK(recs[i].error->find("poisoned") != std::string::npos);
      } else {
        CHECK_FALSE(recs[i].error);
        CHECK(recs[i].translation == "job " + std::to_string(i));
      }
      dumped.push_back(to_json(recs[i]));
    }
    if (baseline.empty())
      baseline = dumped;
    else
      CHECK(dumped == baseline);
  }
  CompletionClient client(std::make_shared<JitterBackend>(), nullptr, no_sleep());
  CHECK(run_batch({}, params(), 4, client).empty());
  CHECK_THROWS(run_batch(jobs(1), params(), 0, client));
}

TEST_CASE("translation record round trip omits the cache flag") {
  TranslationRecord r;
  r.sample_id = "s";
  r.mapping = {{"a", Gender::Masculine}, {"b", Gender::Feminine}};
  r.prompt = prompt("p");
  r.raw = {"h", "c\nd", "m", "2024-01-01T00:00:00Z", true};
  r.translation = "t";
  r.degraded = true;
  r.error = "e";
  const auto j = to_json(r);
  CHECK_FALSE(j["raw"].contains("from_cache"));
  auto back = translation_record_from_json(nlohmann::json::parse(j.dump()));
  r.raw.from_cache = false;
  CHECK(back == r);
}

TEST_CASE("cache compaction keeps the first entry per hash") {
  TempDir tmp;
  const std::string hash(64, 'a');
  {
    std::ofstream out(tmp / "c.cache");
    out << hash << '\t' << to_json(RawCompletion{hash, "first", "m", "t", false}).dump() << '\n';
    out << hash << '\t' << to_json(RawCompletion{hash, "second", "m", "t", false}).dump() << '\n';
  }
  ResponseCache cache(tmp / "c.cache");
  CHECK(cache.size() == 1);
  CHECK(cache.lookup(hash)->content == "first");
  CHECK(cache.compact() == 1);
  ResponseCache again(tmp / "c.cache");
  CHECK(again.lookup(hash)->content == "first");
  CHECK(testsupport::slurp(tmp / "c.cache").find("second") == std::string::npos);

  testsupport::spit(tmp / "bad.cache", "garbage line without tab\n");
  CHECK_THROWS_AS(ResponseCache(tmp / "bad.cache"), BackendError);
}

TEST_CASE("HTTP backend against a local server") {
  httplib::Server srv;
  std::atomic<int> hits{0};
  std::string seen_auth, seen_body;
  srv.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    const auto body = nlohmann::json::parse(req.body);
    const std::string user = body["messages"].back()["content"];
    if (user == "auth") {
      res.status = 401;
      return;
    }
    if (user == "busy") {
      res.status = 503;
      return;
    }
    if (user == "junk") {
      res.set_content("{}", "application/json");
      return;
    }
    res.set_content(nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", "ok:" + user}}}}}}}.dump(),
                    "application/json");
  });
  const int port = srv.bind_to_any_port("127.0.0.1");
  std::thread t([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  auto p = params();
  p.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  p.timeout_seconds = 5;
  HttpChatBackend backend("secret");
  CHECK(backend.send(prompt("hi"), p, "").content == "ok:hi");
  CHECK(seen_auth == "Bearer secret");
  CHECK(nlohmann::json::parse(seen_body)["temperature"] == 0.0);
  CHECK_THROWS_AS(backend.send(prompt("auth"), p, ""), AuthError);
  CHECK_THROWS_AS(backend.send(prompt("busy"), p, ""), TransientError);
  CHECK_THROWS_AS(backend.send(prompt("junk"), p, ""), MalformedResponseError);

  // Same request through the client replays from cache even with a new endpoint.
  TempDir tmp;
  auto cache = std::make_shared<ResponseCache>(tmp / "c.cache");
  CompletionClient client(std::make_shared<HttpChatBackend>(), cache, no_sleep());
  const int before = hits;
  CHECK(client.complete(prompt("cached"), p).content == "ok:cached");
  auto moved = p;
  moved.endpoint = "http://127.0.0.1:1/unreachable";
  CHECK(client.complete(prompt("cached"), moved).from_cache);
  CHECK(hits == before + 1);

  srv.stop();
  t.join();
}
