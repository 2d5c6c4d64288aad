#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "goe/backend.hpp"
#include "goe/corpus.hpp"
#include "goe/postprocess.hpp"

namespace goe {

enum class TermStatus { Correct, Wrong, Uncovered };
std::string_view to_string(TermStatus s);

struct TermOutcome {
  std::string sample_id;
  Gender entity_gender = Gender::Masculine;
  GenderedTermPair term;
  TermStatus status = TermStatus::Uncovered;
  MappingClass mapping_class = MappingClass::Single;
  std::size_t n_entities = 1;
};

/// Lexical term matching over 13a tokens, lowercased. Both forms present
/// counts as wrong.
std::vector<TermOutcome> score_terms(std::string_view sample_id, std::string_view hypothesis,
                                     const Reference& reference);

/// Requires record.mapping to be empty (baseline) or equal to reference.mapping.
std::vector<TermOutcome> score_terms(const TranslationRecord& record, const Reference& reference);

/// True iff `needle` occurs as a contiguous run in `haystack`.
bool contains_tokens(const std::vector<std::string>& haystack, const std::vector<std::string>& needle);

enum class BreakdownKey { ByGender, ByEntityCount, ByMappingClass };
std::string_view to_string(BreakdownKey k);
BreakdownKey breakdown_key_from_string(std::string_view s);

struct CoverageAccuracyReport {
  std::size_t total = 0;
  std::size_t covered = 0;
  std::size_t correct = 0;
  std::size_t wrong = 0;
  std::optional<double> coverage;  // undefined when total = 0
  std::optional<double> accuracy;  // undefined when covered = 0
  /// breakdown name -> partition label -> report. Partitions are exhaustive,
  /// so each partition's counts sum to this node's counts.
  std::map<std::string, std::map<std::string, CoverageAccuracyReport>> breakdowns;
};

/// Top-level counts plus one partition per requested key. Each partition
/// child is itself broken down by the keys that follow it in `keys`.
CoverageAccuracyReport aggregate(const std::vector<TermOutcome>& outcomes, const std::vector<BreakdownKey>& keys = {});

/// Partition labels: by_gender M/F; by_entity_count 1/>=2;
/// by_mapping_class single/uniform/mixed.
std::string partition_label(BreakdownKey key, const TermOutcome& o);
std::vector<std::string> partition_labels(BreakdownKey key);

struct BleuScore {
  double score = 0.0;
  std::vector<double> ngram_precisions;  // percentages, 4 orders
  double brevity_penalty = 0.0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
};

/// Corpus BLEU-4, 13a tokenization, mixed case, exponential smoothing.
BleuScore bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs);

struct ClassificationScores {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

ClassificationScores classification_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

/// Positive class = Accurate. gold[i] is true when item i should be judged Accurate.
ClassificationScores classification_scores(const std::vector<VerdictLabel>& predicted, const std::vector<bool>& gold);

/// "n/a" for undefined, otherwise the value with `digits` decimals.
std::string format_ratio(const std::optional<double>& v, int digits = 4);
std::string format_percent(const std::optional<double>& v, int digits = 1);

}  // namespace goe
