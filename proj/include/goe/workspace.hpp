#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "goe/backend.hpp"
#include "goe/corpus.hpp"
#include "goe/prompting.hpp"

// On-disk layout of an evaluation workspace:
//   corpora/<name>.jsonl
//   runs/<run_id>/{manifest.json, records.jsonl, reports/}
//   cache/<model>__<corpus>.cache
//   judgments/<name>.jsonl
namespace goe {

/// Environment variable holding the bearer token for the HTTP backend.
inline constexpr const char* kTokenEnvVar = "GOE_API_TOKEN";

struct Config {
  BackendParams params;
  LanguageNames languages;
};

/// JSON document with optional keys endpoint, model, temperature, max_tokens,
/// timeout_seconds and languages ({"es": "Spanish", ...}).
Config load_config(const std::filesystem::path& path);
Config parse_config(std::string_view contents);

enum class Variant { Baseline, Goe, GoeSpeaker, GoeAmb, GoeFull, IGoe, Prefix };
std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view s);

struct RunManifest {
  std::string run_id;
  std::string corpus;  // path as given at translate time
  Benchmark benchmark = Benchmark::SingleAmbiguous;
  Variant variant = Variant::Goe;
  BackendParams params;
  std::string backend;  // http | mock | oracle | oracle-inverted
  std::optional<std::string> shots;
  std::size_t record_count = 0;
  std::string started_at;
  std::string finished_at;
};

nlohmann::ordered_json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path corpora_dir() const { return root_ / "corpora"; }
  std::filesystem::path runs_dir() const { return root_ / "runs"; }
  std::filesystem::path run_dir(const std::string& run_id) const;
  std::filesystem::path manifest_path(const std::string& run_id) const { return run_dir(run_id) / "manifest.json"; }
  std::filesystem::path records_path(const std::string& run_id) const { return run_dir(run_id) / "records.jsonl"; }
  std::filesystem::path reports_dir(const std::string& run_id) const { return run_dir(run_id) / "reports"; }
  std::filesystem::path cache_path(std::string_view model_id, std::string_view corpus_name) const;
  std::filesystem::path judgments_dir() const { return root_ / "judgments"; }

  bool has_run(const std::string& run_id) const;
  RunManifest read_manifest(const std::string& run_id) const;

 private:
  std::filesystem::path root_;
};

/// Filesystem-safe rendering of a model id or corpus name.
std::string path_component(std::string_view s);

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

void write_records(const std::filesystem::path& path, const std::vector<TranslationRecord>& records);
std::vector<TranslationRecord> read_records(const std::filesystem::path& path);

}  // namespace goe
