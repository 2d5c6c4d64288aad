#include "goe/backend.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <cmath>
#include <ctime>
#include <fstream>
#include <random>
#include <thread>

#include <httplib.h>

#include "goe/corpus_io.hpp"
#include "goe/text.hpp"

namespace goe {

using nlohmann::json;

void validate(const BackendParams& p) {
  if (p.model_id.empty()) throw std::invalid_argument("backend model id is empty");
  if (!(p.temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (p.max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
  if (!(p.timeout_seconds > 0.0)) throw std::invalid_argument("timeout must be positive");
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string utc_now_iso8601() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json chat_request_body(const PromptMessages& prompt, const BackendParams& params) {
  json messages = json::array();
  for (const auto& m : prompt.messages)
    messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  return {{"model", params.model_id},
          {"messages", std::move(messages)},
          {"temperature", params.temperature},
          {"max_tokens", params.max_tokens}};
}

std::string request_hash(const PromptMessages& prompt, const BackendParams& params) {
  // nlohmann::json keeps object keys sorted, which makes dump() canonical.
  return sha256_hex(chat_request_body(prompt, params).dump());
}

// ---------------------------------------------------------------------------

HttpChatBackend::HttpChatBackend(std::string token) : token_(std::move(token)) {}

std::string parse_chat_response(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw MalformedResponseError(std::string("response is not JSON: ") + e.what());
  }
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw MalformedResponseError("choices[0].message.content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw MalformedResponseError(std::string("response lacks choices[0].message.content: ") + e.what());
  }
}

BackendReply HttpChatBackend::send(const PromptMessages& prompt, const BackendParams& params, std::string_view) {
  const std::string& url = params.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw BackendError("endpoint must be an absolute URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client cli(origin);
  const auto secs = static_cast<time_t>(params.timeout_seconds);
  const auto usecs = static_cast<time_t>((params.timeout_seconds - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

  auto res = cli.Post(path, headers, chat_request_body(prompt, params).dump(), "application/json");
  if (!res) throw TransientError("request failed: " + httplib::to_string(res.error()));
  const int status = res->status;
  if (status == 401 || status == 403) throw AuthError("authentication failed (HTTP " + std::to_string(status) + ")");
  if (status == 408 || status == 429 || status >= 500)
    throw TransientError("transient HTTP " + std::to_string(status));
  if (status < 200 || status >= 300) throw BackendError("request rejected (HTTP " + std::to_string(status) + ")");
  return {parse_chat_response(res->body), utc_now_iso8601()};
}

// ---------------------------------------------------------------------------

std::string escape_field(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      switch (s[i + 1]) {
        case 'n': out += '\n'; ++i; continue;
        case 't': out += '\t'; ++i; continue;
        case 'r': out += '\r'; ++i; continue;
        case '\\': out += '\\'; ++i; continue;
        default: break;
      }
    }
    out += s[i];
  }
  return out;
}

namespace {
bool is_hex_digest(std::string_view s) {
  return s.size() == 64 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}
}  // namespace

void MockBackend::add(std::string key, std::string content) {
  if (is_hex_digest(key))
    by_hash_.emplace(std::move(key), std::move(content));
  else
    globs_.emplace_back(std::move(key), std::move(content));
}

MockBackend MockBackend::parse(std::string_view fixture) {
  MockBackend mock;
  std::size_t line_no = 0;
  for (const auto& raw : text::split(fixture, '\n')) {
    ++line_no;
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::invalid_argument("mock fixture line " + std::to_string(line_no) + ": expected key<TAB>content");
    mock.add(unescape_field(line.substr(0, tab)), unescape_field(line.substr(tab + 1)));
  }
  return mock;
}

MockBackend MockBackend::load(const std::filesystem::path& path) { return parse(read_file(path)); }

BackendReply MockBackend::send(const PromptMessages& prompt, const BackendParams&, std::string_view hash) {
  const std::string* content = nullptr;
  if (auto it = by_hash_.find(hash); it != by_hash_.end()) {
    content = &it->second;
  } else {
    const std::string& user = prompt.last_user_content();
    for (const auto& [pattern, canned] : globs_) {
      if (text::glob_match(pattern, user)) {
        content = &canned;
        break;
      }
    }
  }
  if (!content) throw BackendError("mock backend has no canned response for request " + std::string(hash));
  if (content->starts_with("!fail")) throw BackendError("mock failure: " + text::trim(content->substr(5)));
  return {*content, std::string(kTimestamp)};
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json to_json(const RawCompletion& c, bool include_cache_flag) {
  nlohmann::ordered_json j;
  j["request_hash"] = c.request_hash;
  j["content"] = c.content;
  j["model_id"] = c.model_id;
  j["timestamp"] = c.timestamp;
  if (include_cache_flag) j["from_cache"] = c.from_cache;
  return j;
}

RawCompletion raw_completion_from_json(const json& j) {
  RawCompletion c;
  c.request_hash = j.at("request_hash").get<std::string>();
  c.content = j.at("content").get<std::string>();
  c.model_id = j.at("model_id").get<std::string>();
  c.timestamp = j.value("timestamp", "");
  c.from_cache = j.value("from_cache", false);
  return c;
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  if (!std::filesystem::exists(path_)) return;
  std::size_t line_no = 0;
  for (const auto& line : text::split(read_file(path_), '\n')) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw BackendError("corrupt cache line " + std::to_string(line_no) + " in " + path_.string());
    try {
      RawCompletion c = raw_completion_from_json(json::parse(line.substr(tab + 1)));
      std::string key = line.substr(0, tab);
      if (entries_.emplace(key, std::move(c)).second) order_.push_back(std::move(key));
    } catch (const json::exception& e) {
      throw BackendError("corrupt cache line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::optional<RawCompletion> ResponseCache::lookup(const std::string& hash) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(hash);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::append(const RawCompletion& c) {
  std::unique_lock lock(mutex_);
  if (entries_.contains(c.request_hash)) return;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw BackendError("cannot append to cache " + path_.string());
  out << c.request_hash << '\t' << to_json(c).dump() << '\n';
  out.flush();
  entries_.emplace(c.request_hash, c);
  order_.push_back(c.request_hash);
}

std::size_t ResponseCache::compact() {
  std::unique_lock lock(mutex_);
  const auto tmp = path_.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw BackendError("cannot write " + tmp);
    for (const auto& key : order_) out << key << '\t' << to_json(entries_.at(key)).dump() << '\n';
  }
  std::filesystem::rename(tmp, path_);
  return order_.size();
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(std::chrono::milliseconds min_interval)
    : interval_(min_interval), next_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (interval_.count() <= 0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

CompletionClient::CompletionClient(std::shared_ptr<ChatBackend> backend, std::shared_ptr<ResponseCache> cache,
                                   ClientOptions options)
    : backend_(std::move(backend)),
      cache_(std::move(cache)),
      options_(std::move(options)),
      limiter_(options_.min_request_interval) {
  if (!options_.retry.sleep)
    options_.retry.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (options_.retry.max_attempts < 1) options_.retry.max_attempts = 1;
}

RawCompletion CompletionClient::complete(const PromptMessages& prompt, const BackendParams& params) {
  validate(params);
  const std::string hash = request_hash(prompt, params);
  if (cache_) {
    if (auto hit = cache_->lookup(hash)) {
      hit->from_cache = true;
      return *hit;
    }
  }
  if (options_.offline) throw OfflineCacheMissError();
  if (!backend_) throw BackendError("no backend configured");

  thread_local std::mt19937 rng{std::random_device{}()};
  std::string last_error;
  for (int attempt = 0; attempt < options_.retry.max_attempts; ++attempt) {
    if (attempt > 0) {
      const double base = static_cast<double>(options_.retry.base_delay.count()) * std::pow(2.0, attempt - 1);
      std::uniform_real_distribution<double> jitter(0.0, options_.retry.jitter);
      options_.retry.sleep(std::chrono::milliseconds(static_cast<long long>(base * (1.0 + jitter(rng)))));
    }
    limiter_.acquire();
    try {
      BackendReply reply = backend_->send(prompt, params, hash);
      RawCompletion c{hash, std::move(reply.content), params.model_id,
                      reply.timestamp ? *reply.timestamp : utc_now_iso8601(), false};
      if (cache_) cache_->append(c);
      return c;
    } catch (const TransientError& e) {
      last_error = e.what();
    }
  }
  throw RetriesExhaustedError("gave up after " + std::to_string(options_.retry.max_attempts) +
                              " attempts: " + last_error);
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json to_json(const PromptMessages& p) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& m : p.messages) {
    nlohmann::ordered_json jm;
    jm["role"] = std::string(to_string(m.role));
    jm["content"] = m.content;
    arr.push_back(std::move(jm));
  }
  return arr;
}

PromptMessages prompt_from_json(const json& j) {
  PromptMessages p;
  for (const auto& jm : j)
    p.messages.push_back({role_from_string(jm.at("role").get<std::string>()), jm.at("content").get<std::string>()});
  return p;
}

nlohmann::ordered_json to_json(const TranslationRecord& r) {
  nlohmann::ordered_json j;
  j["sample_id"] = r.sample_id;
  j["mapping"] = to_json(r.mapping);
  j["prompt"] = to_json(r.prompt);
  j["raw"] = to_json(r.raw);
  j["translation"] = r.translation;
  j["degraded"] = r.degraded;
  if (r.error) j["error"] = *r.error;
  return j;
}

TranslationRecord translation_record_from_json(const json& j) {
  TranslationRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.mapping = mapping_from_json(j.at("mapping"));
  r.prompt = prompt_from_json(j.at("prompt"));
  r.raw = raw_completion_from_json(j.at("raw"));
  r.translation = j.at("translation").get<std::string>();
  r.degraded = j.value("degraded", false);
  if (j.contains("error")) r.error = j.at("error").get<std::string>();
  return r;
}

void parallel_for(std::size_t n, int concurrency, const std::function<void(std::size_t)>& fn) {
  if (concurrency < 1) throw std::invalid_argument("concurrency must be >= 1");
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(concurrency), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<TranslationRecord> run_batch(const std::vector<BatchJob>& jobs, const BackendParams& params,
                                         int concurrency, CompletionClient& client, const Extractor& extract) {
  if (concurrency < 1) throw std::invalid_argument("concurrency must be >= 1");
  std::vector<TranslationRecord> out(jobs.size());
  parallel_for(jobs.size(), concurrency, [&](std::size_t i) {
    const auto& job = jobs[i];
    auto& rec = out[i];
    rec.sample_id = job.sample_id;
    rec.mapping = job.mapping;
    rec.prompt = job.prompt;
    try {
      rec.raw = client.complete(job.prompt, params);
      Extraction ex = extract(rec.raw.content);
      rec.translation = std::move(ex.text);
      rec.degraded = ex.degraded;
    } catch (const std::exception& e) {
      rec.raw.request_hash = request_hash(job.prompt, params);
      rec.raw.model_id = params.model_id;
      rec.error = e.what();
    }
  });
  return out;
}

}  // namespace goe
