#include "goe/annotation_service.hpp"

#include <fstream>
#include <random>

#include <httplib.h>

#include "goe/commands.hpp"
#include "goe/lge.hpp"
#include "goe/text.hpp"

namespace goe {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string condition_text(const GenderMapping& conditions) {
  std::vector<std::string> clauses;
  for (const auto& [entity, g] : conditions.entries())
    clauses.push_back("Entity \"" + entity + "\" should be translated as \"" +
                      (g == Gender::Masculine ? "masculine" : "feminine") + "\"");
  return text::join(clauses, ". ");
}

ojson to_json(const AnnotationTask& t) {
  ojson j;
  j["task_id"] = t.task_id;
  j["sample_id"] = t.sample_id;
  j["source"] = t.source;
  j["context"] = t.context ? json(*t.context) : json(nullptr);
  j["hypothesis"] = t.hypothesis;
  ojson conds = ojson::array();
  for (const auto& [entity, g] : t.conditions.entries())
    conds.push_back({{"entity", entity}, {"gender", g == Gender::Masculine ? "masculine" : "feminine"}});
  j["conditions"] = std::move(conds);
  j["condition"] = condition_text(t.conditions);
  return j;
}

std::vector<std::size_t> shuffled_order(std::size_t n, const std::string& run_id) {
  const std::string digest = sha256_hex(run_id);
  std::mt19937_64 rng(std::stoull(digest.substr(0, 16), nullptr, 16));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  return order;
}

AnnotationService::AnnotationService(const Workspace& ws, const std::string& run_id)
    : log_path_(ws.judgments_dir() / (run_id + "__human.jsonl")) {
  const auto manifest = ws.read_manifest(run_id);
  const auto samples = load_run_corpus(ws, manifest);
  const auto records = read_records(ws.records_path(run_id));
  std::map<std::string, const Sample*> index;
  for (const auto& s : samples) index.emplace(s.id, &s);

  std::vector<AnnotationTask> ordered;
  for (const auto& item : build_evaluation_items(records, samples)) {
    const Sample& s = *index.at(item.task.sample_id);
    AnnotationTask t{item_id(s.id, item.task.conditions), s.id, s.source, s.context, item.task.hypothesis,
                     item.task.conditions};
    if (task_index_.contains(t.task_id)) continue;
    task_index_.emplace(t.task_id, 0);
    ordered.push_back(std::move(t));
  }
  for (std::size_t i : shuffled_order(ordered.size(), run_id)) tasks_.push_back(std::move(ordered[i]));
  for (std::size_t i = 0; i < tasks_.size(); ++i) task_index_[tasks_[i].task_id] = i;

  if (std::filesystem::exists(log_path_)) {
    for (const auto& j : read_judgment_log(log_path_)) {
      auto& rev = revisions_[{j.item, j.rater}];
      rev = std::max(rev, j.revision);
    }
  }
}

AnnotationService::~AnnotationService() = default;

std::optional<ojson> AnnotationService::next_task(const std::string& rater) const {
  std::lock_guard lock(mutex_);
  std::size_t done = 0;
  const AnnotationTask* next = nullptr;
  for (const auto& t : tasks_) {
    if (revisions_.contains({t.task_id, rater}))
      ++done;
    else if (!next)
      next = &t;
  }
  if (!next) return std::nullopt;
  ojson j = to_json(*next);
  j["progress"] = {{"done", done}, {"total", tasks_.size()}};
  return j;
}

JudgmentRecord AnnotationService::submit(const json& body) {
  if (!body.is_object()) throw SubmissionError("body must be a JSON object");
  auto str = [&](const char* key, bool required) -> std::string {
    if (!body.contains(key) || body.at(key).is_null()) {
      if (required) throw SubmissionError(std::string("missing field '") + key + "'");
      return {};
    }
    if (!body.at(key).is_string()) throw SubmissionError(std::string("field '") + key + "' must be a string");
    return body.at(key).get<std::string>();
  };
  const std::string task_id = str("task_id", true);
  const std::string rater = text::trim(str("rater", true));
  const std::string label = str("label", true);
  if (rater.empty()) throw SubmissionError("rater must be non-empty");
  const auto it = task_index_.find(task_id);
  if (it == task_index_.end()) throw SubmissionError("unknown task '" + task_id + "'");
  if (label != "ACCURATE" && label != "INACCURATE") throw SubmissionError("label must be ACCURATE or INACCURATE");
  if (body.contains("aspects") && !body.at("aspects").is_null() && !body.at("aspects").is_object())
    throw SubmissionError("aspects must be an object");

  const AnnotationTask& task = tasks_[it->second];
  JudgmentRecord j;
  j.item = task.task_id;
  j.sample_id = task.sample_id;
  j.mapping = task.conditions;
  j.rater = rater;
  j.label = verdict_label_from_string(label);
  j.comment = str("comment", false);
  if (body.contains("aspects") && body.at("aspects").is_object()) j.aspects = body.at("aspects");

  std::lock_guard lock(mutex_);
  const auto prev = revisions_.find({j.item, j.rater});
  j.revision = prev == revisions_.end() ? 0 : prev->second + 1;
  if (log_path_.has_parent_path()) std::filesystem::create_directories(log_path_.parent_path());
  std::ofstream out(log_path_, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + log_path_.string());
  out << to_json(j).dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("write to " + log_path_.string() + " failed");
  revisions_[{j.item, j.rater}] = j.revision;
  return j;
}

ojson AnnotationService::progress() const {
  std::lock_guard lock(mutex_);
  std::map<std::string, std::size_t> per_rater;
  for (const auto& [key, rev] : revisions_)
    if (task_index_.contains(key.first)) ++per_rater[key.second];
  ojson raters = ojson::object();
  for (const auto& [name, n] : per_rater) raters[name] = n;
  return {{"total", tasks_.size()}, {"raters", std::move(raters)}};
}

int AnnotationService::bind(const std::string& host, int port, const std::optional<std::filesystem::path>& assets) {
  server_ = std::make_unique<httplib::Server>();
  auto& srv = *server_;
  // httplib defaults to SO_REUSEPORT, which lets a second server share a busy port.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  srv.Get("/api/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string rater = text::trim(req.get_param_value("rater"));
    if (rater.empty()) {
      res.status = 400;
      res.set_content(R"({"error":"rater is required"})", "application/json");
      return;
    }
    if (auto task = next_task(rater)) {
      res.set_content(task->dump(), "application/json");
    } else {
      res.status = 204;
    }
  });
  srv.Post("/api/judgments", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto j = submit(json::parse(req.body));
      res.set_content(ojson{{"ok", true}, {"task_id", j.item}, {"revision", j.revision}}.dump(), "application/json");
    } catch (const json::parse_error&) {
      res.status = 400;
      res.set_content(R"({"error":"body is not valid JSON"})", "application/json");
    } catch (const SubmissionError& e) {
      res.status = 400;
      res.set_content(ojson{{"error", e.what()}}.dump(), "application/json");
    }
  });
  srv.Get("/api/progress", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(progress().dump(), "application/json");
  });
  if (assets && !srv.set_mount_point("/", assets->string()))
    throw std::runtime_error("no asset directory " + assets->string());

  const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port) + " (port in use?)");
  return bound;
}

void AnnotationService::listen() {
  if (!server_) throw std::logic_error("bind() before listen()");
  listening_ = true;
  if (stop_requested_) return;
  server_->listen_after_bind();
}

void AnnotationService::stop() {
  stop_requested_ = true;
  if (!server_ || !listening_) return;
  server_->wait_until_ready();
  server_->stop();
}

}  // namespace goe
