#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "goe/agreement.hpp"
#include "goe/workspace.hpp"

namespace httplib {
class Server;
}

namespace goe {

/// What a rater is shown. Carries no reference translation.
struct AnnotationTask {
  std::string task_id;  // item id, "<sample_id>#<mapping key>"
  std::string sample_id;
  std::string source;
  std::optional<std::string> context;
  std::string hypothesis;
  GenderMapping conditions;
};

nlohmann::ordered_json to_json(const AnnotationTask& t);

/// "Entity \"x\" should be translated as \"feminine\"", joined by ". ".
std::string condition_text(const GenderMapping& conditions);

/// Rejected submission; maps to HTTP 400.
class SubmissionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Tasks of one run in a fixed order shuffled by the run id. Judgments are
/// appended to judgments/<run_id>__human.jsonl by a single writer; a repeated
/// (task, rater) submission is appended with a higher revision and wins.
class AnnotationService {
 public:
  AnnotationService(const Workspace& ws, const std::string& run_id);
  ~AnnotationService();

  const std::vector<AnnotationTask>& tasks() const { return tasks_; }
  const std::filesystem::path& log_path() const { return log_path_; }

  std::optional<nlohmann::ordered_json> next_task(const std::string& rater) const;
  JudgmentRecord submit(const nlohmann::json& body);
  nlohmann::ordered_json progress() const;

  /// Binds `host:port` (port 0 picks a free one) and returns the bound port.
  /// Throws when the port is taken.
  int bind(const std::string& host, int port, const std::optional<std::filesystem::path>& assets = std::nullopt);
  /// Blocks until stop(). stop() may be called before listen() starts.
  void listen();
  void stop();

 private:
  std::vector<AnnotationTask> tasks_;
  std::map<std::string, std::size_t> task_index_;
  std::filesystem::path log_path_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, int> revisions_;  // (task, rater) -> latest revision
  std::unique_ptr<httplib::Server> server_;
  std::atomic<bool> listening_{false};
  std::atomic<bool> stop_requested_{false};
};

/// Fisher-Yates over mt19937_64 seeded from the run id digest.
std::vector<std::size_t> shuffled_order(std::size_t n, const std::string& run_id);

}  // namespace goe
