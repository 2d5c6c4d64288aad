#include "goe/prompting.hpp"

#include <algorithm>

namespace goe {

namespace {

std::string system_instruction(const std::string& lang) {
  return "You are a professional " + lang +
         " translator that especially considers translating gender inflections correctly.";
}

constexpr std::string_view kPretextHead = "From the given source text, we can infer that ";

}  // namespace

std::string_view to_string(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "?";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::System;
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  throw PromptError("unknown message role '" + std::string(s) + "'");
}

const std::string& PromptMessages::last_user_content() const {
  static const std::string empty;
  for (auto it = messages.rbegin(); it != messages.rend(); ++it)
    if (it->role == Role::User) return it->content;
  return empty;
}

LanguageNames::LanguageNames() : names_{{"es", "Spanish"}, {"fr", "French"}, {"it", "Italian"}} {}

void LanguageNames::set(std::string code, std::string name) { names_[std::move(code)] = std::move(name); }

const std::string& LanguageNames::name(std::string_view code) const {
  const auto it = names_.find(code);
  if (it == names_.end()) throw PromptError("no display name for language code '" + std::string(code) + "'");
  return it->second;
}

std::string_view pronoun(Gender g) { return g == Gender::Masculine ? "he/him" : "she/her"; }

std::string render_gender_annotation(const GenderMapping& mapping, AnnotationStyle style) {
  if (mapping.empty()) throw PromptError("gender annotation needs a non-empty mapping");
  if (style == AnnotationStyle::Speaker) {
    if (mapping.size() != 1) throw PromptError("speaker annotation supports exactly one entity");
    return mapping.entries().front().second == Gender::Masculine ? "the speaker is male" : "the speaker is female";
  }
  std::string out;
  for (const auto& [surface, g] : mapping.entries()) {
    if (!out.empty()) out += "; ";
    out += "for ";
    out += surface;
    out += ", use ";
    out += pronoun(g);
  }
  return out;
}

std::string source_with_context(const Sample& sample) {
  if (sample.context && !sample.context->empty()) return *sample.context + " " + sample.source;
  return sample.source;
}

PromptMessages render_goe(const Sample& sample, const GenderMapping& mapping, AnnotationStyle style,
                          const LanguageNames& langs) {
  if (mapping.empty()) return render_baseline(sample, langs);
  for (const auto& [surface, g] : mapping.entries()) {
    const bool known = std::any_of(sample.entities.begin(), sample.entities.end(),
                                   [&](const Entity& e) { return e.surface == surface; });
    if (!known) throw PromptError(sample.id + ": mapping names unknown entity '" + surface + "'");
  }
  const std::string& lang = langs.name(sample.lang_pair.target);
  return {{{Role::System, system_instruction(lang)},
           {Role::User, "Translate the following sentence into " + lang + " (" +
                            render_gender_annotation(mapping, style) + "): " + source_with_context(sample)}}};
}

PromptMessages render_baseline(const Sample& sample, const LanguageNames& langs) {
  const std::string& lang = langs.name(sample.lang_pair.target);
  return {{{Role::System, system_instruction(lang)},
           {Role::User, "Translate the following sentence into " + lang + ": " + source_with_context(sample)}}};
}

std::string render_prefix(std::string_view source, Gender gender) {
  if (source.empty()) throw PromptError("cannot prefix an empty source");
  return std::string(gender == Gender::Masculine ? "MALE: " : "FEMALE: ") + std::string(source);
}

PromptMessages render_igoe_fewshot(const Sample& sample, const std::vector<FewShotExample>& shots,
                                   const LanguageNames& langs) {
  if (shots.empty()) throw PromptError("I-GoE prompting needs at least one few-shot example");
  const std::string& lang = langs.name(sample.lang_pair.target);
  PromptMessages p;
  p.messages.push_back({Role::System, system_instruction(lang)});
  p.messages.push_back({Role::User, "Help me translate the following source text into " + lang + "."});
  p.messages.push_back({Role::Assistant, "Sure, I’d be happy to!"});
  for (const auto& shot : shots) {
    if (shot.source.empty() || shot.entity.empty() || shot.translation.empty())
      throw PromptError("few-shot example with an empty field");
    p.messages.push_back({Role::User, shot.source});
    p.messages.push_back({Role::Assistant, std::string(kPretextHead) + shot.entity + " uses " +
                                               std::string(pronoun(shot.gender)) + ". Therefore, the " + lang +
                                               " translation with correct gender inflection is:\n" +
                                               shot.translation});
  }
  p.messages.push_back({Role::User, source_with_context(sample)});
  return p;
}

std::vector<FewShotExample> fewshot_from_samples(const std::vector<Sample>& samples) {
  std::vector<FewShotExample> out;
  for (const auto& s : samples) {
    const Entity* gold = nullptr;
    int n_gold = 0;
    for (const auto& e : s.entities)
      if (e.gold_gender) {
        gold = &e;
        ++n_gold;
      }
    if (n_gold != 1 || s.references.size() != 1) continue;
    out.push_back({source_with_context(s), gold->surface, *gold->gold_gender, s.references.front().text});
  }
  return out;
}

}  // namespace goe
