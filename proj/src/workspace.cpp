#include "goe/workspace.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

#include "goe/corpus_io.hpp"
#include "goe/text.hpp"

namespace goe {

using nlohmann::json;

Config parse_config(std::string_view contents) {
  json j;
  try {
    j = json::parse(contents);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  Config c;
  c.params.endpoint = j.value("endpoint", c.params.endpoint);
  c.params.model_id = j.value("model", c.params.model_id);
  c.params.temperature = j.value("temperature", c.params.temperature);
  c.params.max_tokens = j.value("max_tokens", c.params.max_tokens);
  c.params.timeout_seconds = j.value("timeout_seconds", c.params.timeout_seconds);
  if (j.contains("languages")) {
    for (const auto& [code, name] : j.at("languages").items()) c.languages.set(code, name.get<std::string>());
  }
  validate(c.params);
  return c;
}

Config load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

namespace {

constexpr std::pair<Variant, std::string_view> kVariants[] = {
    {Variant::Baseline, "baseline"}, {Variant::Goe, "goe"},   {Variant::GoeSpeaker, "goe_speaker"},
    {Variant::GoeAmb, "goe_amb"},    {Variant::GoeFull, "goe_full"}, {Variant::IGoe, "igoe"},
    {Variant::Prefix, "prefix"},
};

}  // namespace

std::string_view to_string(Variant v) {
  for (const auto& [value, name] : kVariants)
    if (value == v) return name;
  throw std::logic_error("unknown variant");
}

Variant variant_from_string(std::string_view s) {
  for (const auto& [value, name] : kVariants)
    if (name == s) return value;
  throw std::invalid_argument("unknown prompt variant '" + std::string(s) + "'");
}

nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["run_id"] = m.run_id;
  j["corpus"] = m.corpus;
  j["benchmark"] = to_string(m.benchmark);
  j["variant"] = to_string(m.variant);
  j["backend"] = m.backend;
  j["model"] = m.params.model_id;
  j["temperature"] = m.params.temperature;
  j["max_tokens"] = m.params.max_tokens;
  j["endpoint"] = m.params.endpoint;
  j["timeout_seconds"] = m.params.timeout_seconds;
  j["shots"] = m.shots ? json(*m.shots) : json(nullptr);
  j["record_count"] = m.record_count;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  return j;
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.corpus = j.at("corpus").get<std::string>();
  m.benchmark = benchmark_from_string(j.at("benchmark").get<std::string>());
  m.variant = variant_from_string(j.at("variant").get<std::string>());
  m.backend = j.value("backend", "http");
  m.params.model_id = j.at("model").get<std::string>();
  m.params.temperature = j.value("temperature", 0.0);
  m.params.max_tokens = j.value("max_tokens", 512);
  m.params.endpoint = j.value("endpoint", "");
  m.params.timeout_seconds = j.value("timeout_seconds", 60.0);
  if (j.contains("shots") && !j.at("shots").is_null()) m.shots = j.at("shots").get<std::string>();
  m.record_count = j.value("record_count", std::size_t{0});
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  return m;
}

Workspace::Workspace(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path Workspace::run_dir(const std::string& run_id) const {
  if (run_id.empty() || path_component(run_id) != run_id)
    throw std::invalid_argument("invalid run id '" + run_id + "'");
  return runs_dir() / run_id;
}

std::filesystem::path Workspace::cache_path(std::string_view model_id, std::string_view corpus_name) const {
  return root_ / "cache" / (path_component(model_id) + "__" + path_component(corpus_name) + ".cache");
}

bool Workspace::has_run(const std::string& run_id) const { return std::filesystem::exists(manifest_path(run_id)); }

RunManifest Workspace::read_manifest(const std::string& run_id) const {
  const auto path = manifest_path(run_id);
  if (!std::filesystem::exists(path)) throw std::runtime_error("no run '" + run_id + "' in " + root_.string());
  return manifest_from_json(json::parse(read_file(path)));
}

std::string path_component(std::string_view s) {
  std::string out;
  for (char c : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  if (out == "." || out == "..") out = "_";
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_records(const std::filesystem::path& path, const std::vector<TranslationRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  write_file_atomic(path, out);
}

std::vector<TranslationRecord> read_records(const std::filesystem::path& path) {
  std::vector<TranslationRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split(read_file(path), '\n')) {
    ++line_no;
    if (text::is_blank(line)) continue;
    try {
      out.push_back(translation_record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": corrupt record: " + e.what());
    }
  }
  return out;
}

}  // namespace goe
