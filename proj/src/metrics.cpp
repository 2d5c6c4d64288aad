#include "goe/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "goe/text.hpp"

namespace goe {

std::string_view to_string(TermStatus s) {
  switch (s) {
    case TermStatus::Correct: return "correct";
    case TermStatus::Wrong: return "wrong";
    case TermStatus::Uncovered: return "uncovered";
  }
  return "?";
}

bool contains_tokens(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
  if (needle.empty()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

std::vector<TermOutcome> score_terms(std::string_view sample_id, std::string_view hypothesis,
                                     const Reference& reference) {
  const auto hyp = text::match_tokens(hypothesis);
  const auto& mapping = reference.mapping;
  const MappingClass cls = mapping.empty() ? MappingClass::Single : classify_mapping(mapping);
  const std::size_t n_entities = std::max<std::size_t>(mapping.size(), 1);

  std::vector<TermOutcome> out;
  out.reserve(reference.terms.size());
  for (const auto& term : reference.terms) {
    TermOutcome o;
    o.sample_id = std::string(sample_id);
    o.term = term;
    o.mapping_class = cls;
    o.n_entities = n_entities;
    if (term.entity) {
      const auto g = mapping.find(*term.entity);
      if (!g) throw std::invalid_argument("term entity '" + *term.entity + "' not in reference mapping");
      o.entity_gender = *g;
    } else if (!mapping.empty()) {
      // Unattributed terms only occur when every entity shares one gender.
      o.entity_gender = mapping.entries().front().second;
    }
    const bool has_correct = contains_tokens(hyp, text::match_tokens(term.correct));
    const bool has_wrong = contains_tokens(hyp, text::match_tokens(term.wrong));
    if (has_wrong)
      o.status = TermStatus::Wrong;
    else if (has_correct)
      o.status = TermStatus::Correct;
    else
      o.status = TermStatus::Uncovered;
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<TermOutcome> score_terms(const TranslationRecord& record, const Reference& reference) {
  if (!record.mapping.empty() && !(record.mapping == reference.mapping))
    throw std::invalid_argument(record.sample_id + ": record mapping '" + record.mapping.key() +
                                "' does not match reference mapping '" + reference.mapping.key() + "'");
  return score_terms(record.sample_id, record.translation, reference);
}

std::string_view to_string(BreakdownKey k) {
  switch (k) {
    case BreakdownKey::ByGender: return "by_gender";
    case BreakdownKey::ByEntityCount: return "by_entity_count";
    case BreakdownKey::ByMappingClass: return "by_mapping_class";
  }
  return "?";
}

BreakdownKey breakdown_key_from_string(std::string_view s) {
  if (s == "by_gender" || s == "gender") return BreakdownKey::ByGender;
  if (s == "by_entity_count" || s == "entity_count" || s == "entities") return BreakdownKey::ByEntityCount;
  if (s == "by_mapping_class" || s == "mapping_class" || s == "mapping") return BreakdownKey::ByMappingClass;
  throw std::invalid_argument("unknown breakdown '" + std::string(s) + "'");
}

std::string partition_label(BreakdownKey key, const TermOutcome& o) {
  switch (key) {
    case BreakdownKey::ByGender: return std::string(to_code(o.entity_gender));
    case BreakdownKey::ByEntityCount: return o.n_entities <= 1 ? "1" : ">=2";
    case BreakdownKey::ByMappingClass: return std::string(to_string(o.mapping_class));
  }
  return "?";
}

std::vector<std::string> partition_labels(BreakdownKey key) {
  switch (key) {
    case BreakdownKey::ByGender: return {"M", "F"};
    case BreakdownKey::ByEntityCount: return {"1", ">=2"};
    case BreakdownKey::ByMappingClass: return {"single", "uniform", "mixed"};
  }
  return {};
}

namespace {

CoverageAccuracyReport aggregate_range(const std::vector<const TermOutcome*>& outcomes,
                                       const std::vector<BreakdownKey>& keys) {
  CoverageAccuracyReport r;
  for (const auto* o : outcomes) {
    ++r.total;
    if (o->status == TermStatus::Correct) ++r.correct;
    if (o->status == TermStatus::Wrong) ++r.wrong;
  }
  r.covered = r.correct + r.wrong;
  if (r.total) r.coverage = static_cast<double>(r.covered) / static_cast<double>(r.total);
  if (r.covered) r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.covered);

  for (std::size_t k = 0; k < keys.size(); ++k) {
    const std::vector<BreakdownKey> rest(keys.begin() + static_cast<std::ptrdiff_t>(k) + 1, keys.end());
    auto& partition = r.breakdowns[std::string(to_string(keys[k]))];
    for (const auto& label : partition_labels(keys[k])) {
      std::vector<const TermOutcome*> subset;
      for (const auto* o : outcomes)
        if (partition_label(keys[k], *o) == label) subset.push_back(o);
      partition.emplace(label, aggregate_range(subset, rest));
    }
  }
  return r;
}

}  // namespace

CoverageAccuracyReport aggregate(const std::vector<TermOutcome>& outcomes, const std::vector<BreakdownKey>& keys) {
  std::vector<const TermOutcome*> ptrs;
  ptrs.reserve(outcomes.size());
  for (const auto& o : outcomes) ptrs.push_back(&o);
  return aggregate_range(ptrs, keys);
}

ClassificationScores classification_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  ClassificationScores s{tp, fp, fn, tn, std::nullopt, std::nullopt, std::nullopt};
  if (tp + fp) s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn) s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (s.precision && s.recall) {
    const double denom = *s.precision + *s.recall;
    s.f1 = denom > 0.0 ? 2.0 * *s.precision * *s.recall / denom : 0.0;
  }
  return s;
}

ClassificationScores classification_scores(const std::vector<VerdictLabel>& predicted, const std::vector<bool>& gold) {
  if (predicted.size() != gold.size()) throw std::invalid_argument("predicted and gold lengths differ");
  if (predicted.empty()) throw std::invalid_argument("classification scores need at least one item");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool pos = predicted[i] == VerdictLabel::Accurate;
    if (pos && gold[i]) ++tp;
    else if (pos) ++fp;
    else if (gold[i]) ++fn;
    else ++tn;
  }
  return classification_from_counts(tp, fp, fn, tn);
}

std::string format_ratio(const std::optional<double>& v, int digits) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
  return buf;
}

std::string format_percent(const std::optional<double>& v, int digits) {
  if (!v) return "n/a";
  return format_ratio(*v * 100.0, digits);
}

}  // namespace goe
