#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "goe/agreement.hpp"
#include "goe/backend.hpp"
#include "goe/corpus.hpp"
#include "goe/metrics.hpp"
#include "goe/postprocess.hpp"
#include "goe/prompting.hpp"

// LLM-as-gender-evaluator: reference-free judging of gender-conditioned
// translations, plus the two procedures built on it (sanity check against
// references, coverage-partitioned re-evaluation).
namespace goe {

struct LgeTask {
  std::string sample_id;
  std::string source;      // context + source for contextual samples
  std::string hypothesis;  // never empty
  /// Controlled entities and their designated genders; one Condition clause each.
  GenderMapping conditions;
  std::string source_lang = "en";
  std::string target_lang;
};

struct LgeResult {
  LgeTask task;
  std::optional<Verdict> verdict;
  bool parse_failed = false;  // verdict absent <=> parse_failed
  std::string error;          // parse or backend failure detail
};

PromptMessages render_lge_prompt(const LgeTask& task);

/// The system instruction, verbatim.
const std::string& lge_system_instruction();

struct JudgeConfig {
  BackendParams params;
  int concurrency = 1;
  std::string rater = "lge";
};

/// Judge calls go through the client's cache/retry/rate-limit path. Backend
/// failures and unparseable outputs both yield parse_failed results.
std::vector<LgeResult> judge(const std::vector<LgeTask>& tasks, CompletionClient& client, const JudgeConfig& config);

JudgmentRecord to_judgment(const LgeResult& result, const std::string& rater);

// ---------------------------------------------------------------------------

enum class ReferenceKind { Correct, Wrong };
std::string_view to_string(ReferenceKind k);

struct SanityItem {
  LgeTask task;
  ReferenceKind kind;
  std::size_t n_entities;
};

struct SanityReport {
  ClassificationScores scores;
  /// (n_entities, reference kind) -> scores over that subset.
  std::map<std::pair<std::size_t, ReferenceKind>, ClassificationScores> per_subset;
  std::size_t parse_failures = 0;
};

/// Positives: each reference judged under its own mapping. Negatives: the
/// reference whose mapping differs in the first entity only, judged under the
/// original mapping (or every other reference when all_negatives is set).
std::vector<SanityItem> build_sanity_items(const std::vector<Sample>& samples, bool all_negatives = false);

SanityReport summarize_sanity(const std::vector<SanityItem>& items, const std::vector<LgeResult>& results);

struct SanityRun {
  SanityReport report;
  std::vector<SanityItem> items;
  std::vector<LgeResult> results;
};

SanityRun sanity_check(const std::vector<Sample>& samples, CompletionClient& client, const JudgeConfig& config,
                       bool all_negatives = false);

// ---------------------------------------------------------------------------

struct LgeReport {
  std::optional<double> acc_covered;
  std::optional<double> acc_not_covered;
  std::optional<double> acc_all;
  std::size_t n_covered = 0;      // judged, covered
  std::size_t n_not_covered = 0;  // judged, not covered
  std::size_t parse_failures = 0;
  std::size_t skipped = 0;  // records with backend errors or empty output
};

struct EvaluationItem {
  LgeTask task;
  bool covered = false;
};

/// One task per (record, designated mapping). Baseline records (empty
/// mapping) are judged once per reference mapping of their sample.
std::vector<EvaluationItem> build_evaluation_items(const std::vector<TranslationRecord>& records,
                                                   const std::vector<Sample>& samples, std::size_t* skipped = nullptr);

LgeReport summarize_evaluation(const std::vector<EvaluationItem>& items, const std::vector<LgeResult>& results,
                               std::size_t skipped = 0);

struct EvaluationRun {
  LgeReport report;
  std::vector<EvaluationItem> items;
  std::vector<LgeResult> results;
};

EvaluationRun evaluate_outputs(const std::vector<TranslationRecord>& records, const std::vector<Sample>& samples,
                               CompletionClient& client, const JudgeConfig& config);

/// Term-coverage metric as a pseudo-rater: one judgment per covered
/// (record, reference), Accurate iff no term came out wrong.
std::vector<JudgmentRecord> coverage_judgments(const std::vector<TranslationRecord>& records,
                                               const std::vector<Sample>& samples,
                                               const std::string& rater = "coverage");

/// Judge that knows the references: ACCURATE iff the hypothesis equals the
/// reference for the stated conditions. `inverted` flips every verdict.
std::shared_ptr<ChatBackend> make_oracle_judge(const std::vector<Sample>& samples, bool inverted = false);

}  // namespace goe
