#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "goe/corpus.hpp"
#include "goe/postprocess.hpp"
#include "goe/prompting.hpp"

namespace goe {

struct BackendParams {
  std::string model_id = "mock";
  double temperature = 0.0;
  int max_tokens = 512;
  std::string endpoint;  // e.g. https://api.openai.com/v1/chat/completions
  double timeout_seconds = 60.0;
};

void validate(const BackendParams& params);

struct RawCompletion {
  std::string request_hash;
  std::string content;
  std::string model_id;
  std::string timestamp;  // ISO-8601 UTC
  bool from_cache = false;

  bool operator==(const RawCompletion&) const = default;
};

/// SHA-256 over the canonical JSON of (messages, model, temperature,
/// max_tokens). Endpoint and timeout are deliberately not part of it.
std::string request_hash(const PromptMessages& prompt, const BackendParams& params);

/// OpenAI-style chat-completion request body.
nlohmann::json chat_request_body(const PromptMessages& prompt, const BackendParams& params);

std::string sha256_hex(std::string_view data);
std::string utc_now_iso8601();

// ---------------------------------------------------------------------------
// Errors. Only TransientError is retried.

class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class TransientError : public BackendError {
 public:
  using BackendError::BackendError;
};
class AuthError : public BackendError {
 public:
  using BackendError::BackendError;
};
class MalformedResponseError : public BackendError {
 public:
  using BackendError::BackendError;
};
class RetriesExhaustedError : public BackendError {
 public:
  using BackendError::BackendError;
};
class OfflineCacheMissError : public BackendError {
 public:
  OfflineCacheMissError() : BackendError("cache miss in offline mode") {}
};

// ---------------------------------------------------------------------------
// Backends

struct BackendReply {
  std::string content;
  std::optional<std::string> timestamp;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual BackendReply send(const PromptMessages& prompt, const BackendParams& params,
                            std::string_view request_hash) = 0;
};

/// Chat-completion endpoint over HTTP(S); bearer token optional.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(std::string token = {});
  BackendReply send(const PromptMessages& prompt, const BackendParams& params, std::string_view hash) override;

 private:
  std::string token_;
};

/// Reads the chat response body and returns choices[0].message.content.
std::string parse_chat_response(std::string_view body);

/// Deterministic canned responses. Fixture lines are
/// `<request_hash or glob on last user content><TAB><content>`, with \n, \t
/// and \\ escapes. A canned content starting with "!fail" raises BackendError.
class MockBackend : public ChatBackend {
 public:
  static MockBackend parse(std::string_view fixture);
  static MockBackend load(const std::filesystem::path& path);

  void add(std::string key, std::string content);
  BackendReply send(const PromptMessages& prompt, const BackendParams& params, std::string_view hash) override;

  static constexpr std::string_view kTimestamp = "1970-01-01T00:00:00Z";

 private:
  std::map<std::string, std::string, std::less<>> by_hash_;
  std::vector<std::pair<std::string, std::string>> globs_;
};

std::string escape_field(std::string_view s);
std::string unescape_field(std::string_view s);

// ---------------------------------------------------------------------------
// Cache

/// Append-only `hash<TAB>json` file; first entry for a hash wins.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path path);

  std::optional<RawCompletion> lookup(const std::string& hash) const;
  void append(const RawCompletion& completion);
  /// Rewrites the file with one line per hash, in first-seen order.
  std::size_t compact();
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, RawCompletion> entries_;
  std::vector<std::string> order_;
};

nlohmann::ordered_json to_json(const RawCompletion& c, bool include_cache_flag = false);
RawCompletion raw_completion_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Client

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double jitter = 0.25;  // fraction of the delay added at random
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

/// Spaces request starts at least `min_interval` apart across threads.
class RateLimiter {
 public:
  explicit RateLimiter(std::chrono::milliseconds min_interval = std::chrono::milliseconds{0});
  void acquire();

 private:
  std::chrono::milliseconds interval_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_;
};

struct ClientOptions {
  bool offline = false;
  RetryPolicy retry;
  std::chrono::milliseconds min_request_interval{0};
};

class CompletionClient {
 public:
  CompletionClient(std::shared_ptr<ChatBackend> backend, std::shared_ptr<ResponseCache> cache,
                   ClientOptions options = {});

  RawCompletion complete(const PromptMessages& prompt, const BackendParams& params);

 private:
  std::shared_ptr<ChatBackend> backend_;
  std::shared_ptr<ResponseCache> cache_;
  ClientOptions options_;
  RateLimiter limiter_;
};

// ---------------------------------------------------------------------------
// Batch translation

struct TranslationRecord {
  std::string sample_id;
  /// Designated mapping the output is evaluated against. Empty for baseline
  /// runs on ambiguous benchmarks (scored against every reference).
  GenderMapping mapping;
  PromptMessages prompt;
  RawCompletion raw;
  std::string translation;
  bool degraded = false;
  std::optional<std::string> error;

  bool operator==(const TranslationRecord&) const = default;
};

/// The cache flag is omitted so that replays serialize byte-identically.
nlohmann::ordered_json to_json(const TranslationRecord& r);
TranslationRecord translation_record_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const PromptMessages& p);
PromptMessages prompt_from_json(const nlohmann::json& j);

struct BatchJob {
  std::string sample_id;
  GenderMapping mapping;
  PromptMessages prompt;
};

using Extractor = std::function<Extraction(std::string_view)>;

/// At most `concurrency` requests in flight; output order is input order.
/// Per-job failures land in TranslationRecord::error.
std::vector<TranslationRecord> run_batch(const std::vector<BatchJob>& jobs, const BackendParams& params,
                                         int concurrency, CompletionClient& client,
                                         const Extractor& extract = extract_translation);

/// Runs fn(i) for i in [0, n) on `concurrency` worker threads.
void parallel_for(std::size_t n, int concurrency, const std::function<void(std::size_t)>& fn);

}  // namespace goe
