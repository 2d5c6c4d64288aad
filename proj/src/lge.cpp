#include "goe/lge.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "goe/text.hpp"

namespace goe {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string_view gender_word(Gender g) { return g == Gender::Masculine ? "masculine" : "feminine"; }

}  // namespace

const std::string& lge_system_instruction() {
  static const std::string kInstruction =
      "You are evaluating a gender-conditioned translation. "
      "Please specifically focus on whether the translation accurately reflects the gender representation of the "
      "provided entities. "
      "Check if the words related to the entities are translated in a way that is consistent with the entities' "
      "specified genders. "
      "After reviewing the input, provide your evaluation in the following format:\n\n"
      "Comment: [Your explanation regarding the gender representation in relation to the entities in the "
      "translation.]\n\n"
      "Gender Accuracy: [ACCURATE or INACCURATE].";
  return kInstruction;
}

PromptMessages render_lge_prompt(const LgeTask& task) {
  std::vector<std::string> clauses;
  for (const auto& [entity, g] : task.conditions.entries())
    clauses.push_back("Entity \"" + entity + "\" should be translated as \"" + std::string(gender_word(g)) + "\"");
  std::string user = "Source [" + upper(task.source_lang) + "]: " + task.source + "\n";
  user += "Condition: " + text::join(clauses, ". ") + "\n";
  user += "Translation [" + upper(task.target_lang) + "]: " + task.hypothesis;
  return {{{Role::System, lge_system_instruction()}, {Role::User, std::move(user)}}};
}

std::vector<LgeResult> judge(const std::vector<LgeTask>& tasks, CompletionClient& client, const JudgeConfig& config) {
  std::vector<LgeResult> results(tasks.size());
  parallel_for(tasks.size(), config.concurrency, [&](std::size_t i) {
    auto& res = results[i];
    res.task = tasks[i];
    try {
      const RawCompletion raw = client.complete(render_lge_prompt(tasks[i]), config.params);
      res.verdict = extract_lge_verdict(raw.content);
    } catch (const std::exception& e) {
      res.parse_failed = true;
      res.error = e.what();
    }
  });
  return results;
}

JudgmentRecord to_judgment(const LgeResult& result, const std::string& rater) {
  JudgmentRecord j;
  j.sample_id = result.task.sample_id;
  j.mapping = result.task.conditions;
  j.item = item_id(j.sample_id, j.mapping);
  j.rater = rater;
  if (result.verdict) {
    j.label = result.verdict->label;
    j.comment = result.verdict->comment;
  } else {
    j.parse_failed = true;
    j.comment = result.error;
  }
  return j;
}

std::string_view to_string(ReferenceKind k) { return k == ReferenceKind::Correct ? "correct_ref" : "wrong_ref"; }

// ---------------------------------------------------------------------------

std::vector<SanityItem> build_sanity_items(const std::vector<Sample>& samples, bool all_negatives) {
  std::vector<SanityItem> items;
  for (const auto& s : samples) {
    for (const auto& ref : s.references) {
      if (ref.mapping.empty()) continue;
      auto task_for = [&](const Reference& hyp) {
        return LgeTask{s.id, source_with_context(s), hyp.text, ref.mapping, s.lang_pair.source, s.lang_pair.target};
      };
      const std::size_t n = ref.mapping.size();
      items.push_back({task_for(ref), ReferenceKind::Correct, n});

      if (all_negatives) {
        for (const auto& other : s.references)
          if (&other != &ref && !other.mapping.empty()) items.push_back({task_for(other), ReferenceKind::Wrong, n});
      } else {
        GenderMapping neg = ref.mapping;
        const auto& [first, g] = ref.mapping.entries().front();
        neg.set(first, opposite(g));
        if (const Reference* other = s.find_reference(neg)) items.push_back({task_for(*other), ReferenceKind::Wrong, n});
      }
    }
  }
  return items;
}

SanityReport summarize_sanity(const std::vector<SanityItem>& items, const std::vector<LgeResult>& results) {
  if (items.size() != results.size()) throw std::invalid_argument("sanity items and results differ in length");
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  };
  Counts all;
  std::map<std::pair<std::size_t, ReferenceKind>, Counts> subsets;
  SanityReport report;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!results[i].verdict) {
      ++report.parse_failures;
      continue;
    }
    const bool gold = items[i].kind == ReferenceKind::Correct;
    const bool pred = results[i].verdict->label == VerdictLabel::Accurate;
    auto bump = [&](Counts& c) {
      if (pred && gold) ++c.tp;
      else if (pred) ++c.fp;
      else if (gold) ++c.fn;
      else ++c.tn;
    };
    bump(all);
    bump(subsets[{items[i].n_entities, items[i].kind}]);
  }
  report.scores = classification_from_counts(all.tp, all.fp, all.fn, all.tn);
  for (const auto& [key, c] : subsets) report.per_subset[key] = classification_from_counts(c.tp, c.fp, c.fn, c.tn);
  return report;
}

SanityRun sanity_check(const std::vector<Sample>& samples, CompletionClient& client, const JudgeConfig& config,
                       bool all_negatives) {
  SanityRun run;
  run.items = build_sanity_items(samples, all_negatives);
  std::vector<LgeTask> tasks;
  tasks.reserve(run.items.size());
  for (const auto& it : run.items) tasks.push_back(it.task);
  run.results = judge(tasks, client, config);
  run.report = summarize_sanity(run.items, run.results);
  return run;
}

// ---------------------------------------------------------------------------

namespace {

std::map<std::string, const Sample*> index_samples(const std::vector<Sample>& samples) {
  std::map<std::string, const Sample*> out;
  for (const auto& s : samples) out.emplace(s.id, &s);
  return out;
}

bool is_covered(const std::vector<TermOutcome>& outcomes) {
  return std::any_of(outcomes.begin(), outcomes.end(),
                     [](const TermOutcome& o) { return o.status != TermStatus::Uncovered; });
}

}  // namespace

std::vector<EvaluationItem> build_evaluation_items(const std::vector<TranslationRecord>& records,
                                                   const std::vector<Sample>& samples, std::size_t* skipped) {
  const auto index = index_samples(samples);
  std::vector<EvaluationItem> items;
  std::size_t skip = 0;
  for (const auto& rec : records) {
    const auto it = index.find(rec.sample_id);
    if (it == index.end()) throw std::invalid_argument("record for unknown sample '" + rec.sample_id + "'");
    const Sample& s = *it->second;
    if (rec.error || text::is_blank(rec.translation)) {
      ++skip;
      continue;
    }
    auto add = [&](const GenderMapping& conditions, const Reference* ref) {
      EvaluationItem item;
      item.task = {s.id, source_with_context(s), rec.translation, conditions, s.lang_pair.source,
                   s.lang_pair.target};
      item.covered = ref && is_covered(score_terms(rec.sample_id, rec.translation, *ref));
      items.push_back(std::move(item));
    };
    if (rec.mapping.empty()) {
      for (const auto& ref : s.references)
        if (!ref.mapping.empty()) add(ref.mapping, &ref);
    } else {
      add(rec.mapping, s.find_reference(rec.mapping));
    }
  }
  if (skipped) *skipped = skip;
  return items;
}

LgeReport summarize_evaluation(const std::vector<EvaluationItem>& items, const std::vector<LgeResult>& results,
                               std::size_t skipped) {
  if (items.size() != results.size()) throw std::invalid_argument("evaluation items and results differ in length");
  LgeReport r;
  r.skipped = skipped;
  std::size_t acc_c = 0, acc_nc = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!results[i].verdict) {
      ++r.parse_failures;
      continue;
    }
    const bool accurate = results[i].verdict->label == VerdictLabel::Accurate;
    if (items[i].covered) {
      ++r.n_covered;
      acc_c += accurate;
    } else {
      ++r.n_not_covered;
      acc_nc += accurate;
    }
  }
  if (r.n_covered) r.acc_covered = static_cast<double>(acc_c) / static_cast<double>(r.n_covered);
  if (r.n_not_covered) r.acc_not_covered = static_cast<double>(acc_nc) / static_cast<double>(r.n_not_covered);
  const std::size_t judged = r.n_covered + r.n_not_covered;
  if (judged) r.acc_all = static_cast<double>(acc_c + acc_nc) / static_cast<double>(judged);
  return r;
}

EvaluationRun evaluate_outputs(const std::vector<TranslationRecord>& records, const std::vector<Sample>& samples,
                               CompletionClient& client, const JudgeConfig& config) {
  EvaluationRun run;
  std::size_t skipped = 0;
  run.items = build_evaluation_items(records, samples, &skipped);
  std::vector<LgeTask> tasks;
  tasks.reserve(run.items.size());
  for (const auto& it : run.items) tasks.push_back(it.task);
  run.results = judge(tasks, client, config);
  run.report = summarize_evaluation(run.items, run.results, skipped);
  return run;
}

std::vector<JudgmentRecord> coverage_judgments(const std::vector<TranslationRecord>& records,
                                               const std::vector<Sample>& samples, const std::string& rater) {
  const auto index = index_samples(samples);
  std::vector<JudgmentRecord> out;
  auto judge_ref = [&](const TranslationRecord& rec, const Reference& ref) {
    const auto outcomes = score_terms(rec.sample_id, rec.translation, ref);
    if (!is_covered(outcomes)) return;
    const bool any_wrong = std::any_of(outcomes.begin(), outcomes.end(),
                                       [](const TermOutcome& o) { return o.status == TermStatus::Wrong; });
    JudgmentRecord j;
    j.sample_id = rec.sample_id;
    j.mapping = ref.mapping;
    j.item = item_id(j.sample_id, j.mapping);
    j.rater = rater;
    j.label = any_wrong ? VerdictLabel::Inaccurate : VerdictLabel::Accurate;
    out.push_back(std::move(j));
  };
  for (const auto& rec : records) {
    if (rec.error) continue;
    const auto it = index.find(rec.sample_id);
    if (it == index.end()) continue;
    if (rec.mapping.empty()) {
      for (const auto& ref : it->second->references) judge_ref(rec, ref);
    } else if (const Reference* ref = it->second->find_reference(rec.mapping)) {
      judge_ref(rec, *ref);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

class OracleJudge : public ChatBackend {
 public:
  OracleJudge(const std::vector<Sample>& samples, bool inverted) : inverted_(inverted) {
    for (const auto& s : samples)
      for (const auto& r : s.references) refs_[source_with_context(s)].push_back({r.mapping.key(), r.text});
  }

  BackendReply send(const PromptMessages& prompt, const BackendParams&, std::string_view) override {
    static const std::regex kCondition(R"re(Entity "([^"]*)" should be translated as "?(masculine|feminine)"?)re");
    const std::string& user = prompt.last_user_content();
    std::string source, translation, condition;
    for (const auto& line : text::split(user, '\n')) {
      if (line.starts_with("Source [")) source = line.substr(line.find("]: ") + 3);
      else if (line.starts_with("Condition: ")) condition = line.substr(11);
      else if (line.starts_with("Translation [")) translation = line.substr(line.find("]: ") + 3);
    }
    GenderMapping conditions;
    for (auto it = std::sregex_iterator(condition.begin(), condition.end(), kCondition); it != std::sregex_iterator();
         ++it)
      conditions.set((*it)[1].str(), (*it)[2].str() == "masculine" ? Gender::Masculine : Gender::Feminine);
    if (conditions.empty()) throw MalformedResponseError("oracle judge could not read the Condition line");

    bool match = false;
    if (auto it = refs_.find(source); it != refs_.end()) {
      for (const auto& [key, text] : it->second)
        if (key == conditions.key() && text::trim(text) == text::trim(translation)) match = true;
    }
    const bool accurate = match != inverted_;
    std::string out = "Comment: ";
    out += match ? "The translation matches the reference for the stated condition."
                 : "The translation does not match the reference for the stated condition.";
    out += "\nGender Accuracy: ";
    out += accurate ? "ACCURATE" : "INACCURATE";
    return {std::move(out), std::string(MockBackend::kTimestamp)};
  }

 private:
  bool inverted_;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> refs_;
};

}  // namespace

std::shared_ptr<ChatBackend> make_oracle_judge(const std::vector<Sample>& samples, bool inverted) {
  return std::make_shared<OracleJudge>(samples, inverted);
}

}  // namespace goe
