#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "goe/agreement.hpp"
#include "goe/backend.hpp"
#include "goe/corpus_io.hpp"
#include "goe/lge.hpp"
#include "goe/metrics.hpp"
#include "goe/workspace.hpp"

// Pipeline steps behind the `goe` subcommands. Each reads and writes the
// workspace layout and returns what it wrote, so tests can drive it directly.
namespace goe {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BackendOptions {
  std::string kind = "http";  // http | mock | oracle | oracle-inverted
  std::optional<std::filesystem::path> mock_fixture;
  std::optional<std::filesystem::path> config;
  std::optional<std::string> model;
  bool offline = false;
  int concurrency = 1;
  /// Test hook: replaces the retry sleep.
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// Resolved backend parameters: config file, then --model, then the backend
/// kind's default model id.
Config resolve_config(const BackendOptions& opts);

/// `samples` is needed by the oracle judges only.
std::shared_ptr<ChatBackend> make_backend(const BackendOptions& opts, const std::vector<Sample>& samples);

// ---------------------------------------------------------------------------

struct ImportArgs {
  std::filesystem::path workspace;
  std::filesystem::path input;
  std::optional<std::filesystem::path> output;  // default corpora/<stem>.jsonl
  Benchmark benchmark = Benchmark::SingleAmbiguous;
  std::string target_lang;
  SourceFormat format = SourceFormat::Auto;
  std::optional<std::filesystem::path> sidecar;
  std::optional<std::filesystem::path> wordlist;
};

struct ImportSummary {
  std::filesystem::path corpus;
  std::filesystem::path issues;  // <corpus>.issues.tsv
  std::size_t samples = 0;
  std::size_t errors = 0;
  std::size_t warnings = 0;
};

ImportSummary cmd_import(const ImportArgs& args);

// ---------------------------------------------------------------------------

struct TranslateArgs {
  std::filesystem::path workspace;
  std::filesystem::path corpus;
  Variant variant = Variant::Goe;
  BackendOptions backend;
  std::optional<std::string> run_id;  // default <variant>-<model>-<corpus>
  std::optional<std::filesystem::path> shots;  // normalized corpus, igoe only
};

/// Jobs in corpus order, then mapping order within a sample.
std::vector<BatchJob> plan_jobs(const std::vector<Sample>& samples, Variant variant, const LanguageNames& langs,
                                const std::vector<FewShotExample>& shots = {});

RunManifest cmd_translate(const TranslateArgs& args);

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::filesystem::path workspace;
  std::string run_id;
  std::vector<BreakdownKey> breakdowns;
  std::optional<std::filesystem::path> comet;  // sample_id<TAB>score
};

struct EvaluationSummary {
  CoverageAccuracyReport terms;  // with the requested breakdowns
  CoverageAccuracyReport flat;   // every key, one level deep
  std::optional<BleuScore> bleu;
  std::optional<double> comet;
  std::size_t comet_matched = 0;
  std::size_t records = 0;
  std::size_t failed = 0;
  std::size_t degraded = 0;
};

EvaluationSummary evaluate_run(const std::vector<TranslationRecord>& records, const std::vector<Sample>& samples,
                               const std::vector<BreakdownKey>& breakdowns,
                               const std::optional<std::filesystem::path>& comet = std::nullopt);

/// Writes reports/metrics.{json,tsv} and reports/summary.tsv.
EvaluationSummary cmd_evaluate(const EvaluateArgs& args);

std::string render_metrics_tsv(const EvaluationSummary& s);
std::string render_summary_tsv(const EvaluationSummary& s);
nlohmann::ordered_json to_json(const CoverageAccuracyReport& r);

// ---------------------------------------------------------------------------

struct LgeArgs {
  std::filesystem::path workspace;
  std::string run_id;
  BackendOptions judge;
  std::optional<std::string> rater;  // default "lge:<model>"
};

struct LgeSummary {
  LgeReport report;
  std::filesystem::path judgments;
  std::string rater;
};

/// Writes reports/lge.{json,tsv} and judgments/<run_id>__<rater>.jsonl.
LgeSummary cmd_lge(const LgeArgs& args);

struct SanityArgs {
  std::filesystem::path workspace;
  std::filesystem::path corpus;
  BackendOptions judge;
  bool all_negatives = false;
};

struct SanitySummary {
  SanityReport report;
  std::filesystem::path report_path;  // <workspace>/reports/sanity__<model>__<corpus>.tsv
};

SanitySummary cmd_sanity(const SanityArgs& args);
std::string render_sanity_tsv(const SanityReport& r);

// ---------------------------------------------------------------------------

struct AgreeArgs {
  std::filesystem::path workspace;
  std::vector<std::filesystem::path> judgments;
  /// When set, adds the run's coverage-based pseudo-rater and writes reports
  /// into the run; otherwise into <workspace>/reports/agreement.*.
  std::optional<std::string> run_id;
  std::vector<std::string> raters;  // empty = every rater found
};

struct AgreeSummary {
  std::vector<std::string> raters;
  std::vector<std::pair<std::pair<std::string, std::string>, AgreementReport>> pairwise;
  std::optional<FleissResult> fleiss;
  std::optional<MajorityResult> majority;
  std::filesystem::path report_path;
};

AgreeSummary cmd_agree(const AgreeArgs& args);
std::string render_agreement_tsv(const AgreeSummary& s);

// ---------------------------------------------------------------------------

std::size_t cmd_cache_compact(const std::filesystem::path& cache_file);

/// Samples of a run's corpus, read from the manifest's corpus path.
std::vector<Sample> load_run_corpus(const Workspace& ws, const RunManifest& manifest);

}  // namespace goe
