#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <thread>

#include <httplib.h>

#include "goe/annotation_service.hpp"
#include "goe/commands.hpp"
#include "support.hpp"

using namespace goe;
using nlohmann::json;
using testsupport::fixture;
using testsupport::TempDir;

namespace {

struct Fixture {
  TempDir tmp;
  std::vector<Sample> samples;
  std::string run_id;

  Fixture() {
    ImportArgs a;
    a.workspace = tmp.path();
    a.input = fixture("e2e/gate_es.tsv");
    a.benchmark = Benchmark::MultiAmbiguous;
    a.target_lang = "es";
    a.format = SourceFormat::Gate;
    const auto corpus = cmd_import(a).corpus;
    samples = read_corpus(corpus);
    TranslateArgs t;
    t.workspace = tmp.path();
    t.corpus = corpus;
    t.backend.kind = "mock";
    t.backend.mock_fixture = fixture("e2e/mock_goe.tsv");
    run_id = cmd_translate(t).run_id;
  }
  Workspace ws() const { return Workspace(tmp.path()); }
};

/// Service listening on an ephemeral port for the lifetime of the object.
struct Running {
  AnnotationService service;
  int port;
  std::thread thread;

  Running(const Workspace& ws, const std::string& run_id)
      : service(ws, run_id), port(service.bind("127.0.0.1", 0)), thread([this] { service.listen(); }) {}
  ~Running() {
    service.stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_connection_timeout(5);
    return c;
  }
};

httplib::Result post(httplib::Client& c, const json& body) {
  return c.Post("/api/judgments", body.dump(), "application/json");
}

httplib::Result wait_get(httplib::Client& c, const std::string& path) {
  for (int i = 0; i < 100; ++i) {
    if (auto r = c.Get(path)) return r;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  return c.Get(path);
}

}  // namespace

TEST_CASE("task order is a deterministic shuffle seeded by the run id") {
  CHECK(shuffled_order(20, "run-a") == shuffled_order(20, "run-a"));
  CHECK(shuffled_order(20, "run-a") != shuffled_order(20, "run-b"));
  auto p = shuffled_order(50, "x");
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == i);
  CHECK(shuffled_order(0, "x").empty());

  Fixture f;
  AnnotationService a(f.ws(), f.run_id), b(f.ws(), f.run_id);
  REQUIRE(a.tasks().size() == 12);
  for (std::size_t i = 0; i < a.tasks().size(); ++i) CHECK(a.tasks()[i].task_id == b.tasks()[i].task_id);
}

TEST_CASE("HTTP API: next task, submit, progress, 204 when done") {
  Fixture f;
  Running srv(f.ws(), f.run_id);
  auto c = srv.client();

  auto r = wait_get(c, "/api/tasks/next");
  REQUIRE(r);
  CHECK(r->status == 400);

  std::set<std::string> seen;
  for (int i = 0; i < 12; ++i) {
    r = c.Get("/api/tasks/next?rater=ana");
    REQUIRE(r);
    REQUIRE(r->status == 200);
    const auto task = json::parse(r->body);
    CHECK(task["progress"]["done"] == i);
    CHECK(task["progress"]["total"] == 12);
    CHECK(task["condition"].get<std::string>().starts_with("Entity \""));
    seen.insert(task["task_id"]);
    auto ok = post(c, {{"task_id", task["task_id"]},
                       {"rater", "ana"},
                       {"label", i % 3 ? "ACCURATE" : "INACCURATE"},
                       {"comment", "checked"},
                       {"aspects", {{"fluency", 5}}}});
    REQUIRE(ok);
    CHECK(ok->status == 200);
    CHECK(json::parse(ok->body)["revision"] == 0);
  }
  CHECK(seen.size() == 12);
  r = c.Get("/api/tasks/next?rater=ana");
  REQUIRE(r);
  CHECK(r->status == 204);
  r = c.Get("/api/tasks/next?rater=ben");
  REQUIRE(r);
  CHECK(r->status == 200);

  r = c.Get("/api/progress");
  REQUIRE(r);
  const auto progress = json::parse(r->body);
  CHECK(progress["total"] == 12);
  CHECK(progress["raters"]["ana"] == 12);
}

TEST_CASE("HTTP API: validation errors and resubmission") {
  Fixture f;
  Running srv(f.ws(), f.run_id);
  auto c = srv.client();
  REQUIRE(wait_get(c, "/api/progress"));
  const std::string task_id = srv.service.tasks()[0].task_id;

  auto bad = c.Post("/api/judgments", "{not json", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  for (const json& body : {json{{"rater", "ana"}, {"label", "ACCURATE"}},
                           json{{"task_id", task_id}, {"label", "ACCURATE"}},
                           json{{"task_id", task_id}, {"rater", "  "}, {"label", "ACCURATE"}},
                           json{{"task_id", "nope#x=M"}, {"rater", "ana"}, {"label", "ACCURATE"}},
                           json{{"task_id", task_id}, {"rater", "ana"}, {"label", "MAYBE"}},
                           json{{"task_id", task_id}, {"rater", "ana"}, {"label", "ACCURATE"}, {"aspects", 3}},
                           json::array()}) {
    auto r = post(c, body);
    REQUIRE(r);
    CHECK(r->status == 400);
    CHECK(json::parse(r->body).contains("error"));
  }

  auto first = post(c, {{"task_id", task_id}, {"rater", "ana"}, {"label", "INACCURATE"}});
  auto second = post(c, {{"task_id", task_id}, {"rater", "ana"}, {"label", "ACCURATE"}});
  REQUIRE(first);
  REQUIRE(second);
  CHECK(json::parse(second->body)["revision"] == 1);
  const auto log = read_judgment_log(srv.service.log_path());
  CHECK(log.size() == 2);  // both lines kept for audit
  CHECK(JudgmentMatrix::from_log(log).get(task_id, "ana") == VerdictLabel::Accurate);
}

TEST_CASE("task payloads never carry reference translations") {
  Fixture f;
  Running srv(f.ws(), f.run_id);
  auto c = srv.client();
  REQUIRE(wait_get(c, "/api/progress"));
  std::map<std::string, const Sample*> by_id;
  for (const auto& s : f.samples) by_id[s.id] = &s;
  for (int i = 0; i < 12; ++i) {
    auto r = c.Get("/api/tasks/next?rater=zoe");
    REQUIRE(r);
    REQUIRE(r->status == 200);
    const auto task = json::parse(r->body);
    CHECK_FALSE(task.contains("reference"));
    CHECK_FALSE(task.contains("references"));
    const Sample& s = *by_id.at(task["sample_id"]);
    for (const auto& ref : s.references)
      if (ref.text != task["hypothesis"].get<std::string>()) CHECK(r->body.find(ref.text) == std::string::npos);
    post(c, {{"task_id", task["task_id"]}, {"rater", "zoe"}, {"label", "ACCURATE"}});
  }
}

TEST_CASE("concurrent raters; replaying the log rebuilds the served matrix") {
  Fixture f;
  JudgmentMatrix expected;
  {
    Running srv(f.ws(), f.run_id);
    REQUIRE(wait_get(*std::make_unique<httplib::Client>("127.0.0.1", srv.port), "/api/progress"));
    std::vector<std::thread> raters;
    std::mutex m;
    for (const std::string name : {"r1", "r2", "r3"}) {
      raters.emplace_back([&, name] {
        auto c = srv.client();
        for (int i = 0;; ++i) {
          auto r = c.Get(("/api/tasks/next?rater=" + name).c_str());
          if (!r || r->status != 200) break;
          const std::string id = json::parse(r->body)["task_id"];
          const auto label = (i + name.back()) % 2 ? VerdictLabel::Accurate : VerdictLabel::Inaccurate;
          auto ok = post(c, {{"task_id", id}, {"rater", name}, {"label", std::string(to_string(label))}});
          if (ok && ok->status == 200) {
            std::lock_guard lock(m);
            expected.set(id, name, label);
          }
        }
      });
    }
    for (auto& t : raters) t.join();
  }
  // a restarted service picks up where the log left off
  AnnotationService again(f.ws(), f.run_id);
  CHECK_FALSE(again.next_task("r1"));
  const auto log = read_judgment_log(again.log_path());
  CHECK(log.size() == 36);
  const auto rebuilt = JudgmentMatrix::from_log(log);
  for (const auto& item : expected.items())
    for (const std::string name : {"r1", "r2", "r3"}) CHECK(rebuilt.get(item, name) == expected.get(item, name));
  CHECK(fleiss_kappa(rebuilt, {"r1", "r2", "r3"}).n_items == 12);
}

TEST_CASE("service errors: port in use, corrupt log") {
  Fixture f;
  Running srv(f.ws(), f.run_id);
  AnnotationService other(f.ws(), f.run_id);
  CHECK_THROWS(other.bind("127.0.0.1", srv.port));
  CHECK_THROWS(other.bind("127.0.0.1", 0, f.tmp / "no-such-assets"));

  testsupport::spit(f.ws().judgments_dir() / (f.run_id + "__human.jsonl"), "garbage\n");
  CHECK_THROWS(AnnotationService(f.ws(), f.run_id));
}
