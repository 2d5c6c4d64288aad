#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "goe/corpus.hpp"

namespace goe {

enum class Role { System, User, Assistant };
std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

struct Message {
  Role role;
  std::string content;

  bool operator==(const Message&) const = default;
};

struct PromptMessages {
  std::vector<Message> messages;

  /// Content of the last user message, or "" if none.
  const std::string& last_user_content() const;

  bool operator==(const PromptMessages&) const = default;
};

class PromptError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Language code -> display name used in prompt templates.
class LanguageNames {
 public:
  LanguageNames();  // es, fr, it
  void set(std::string code, std::string name);
  /// Throws PromptError for codes without a display name.
  const std::string& name(std::string_view code) const;

 private:
  std::map<std::string, std::string, std::less<>> names_;
};

enum class AnnotationStyle { EntityList, Speaker };

struct FewShotExample {
  std::string source;
  std::string entity;
  Gender gender = Gender::Masculine;
  std::string translation;
};

/// "he/him" or "she/her".
std::string_view pronoun(Gender g);

std::string render_gender_annotation(const GenderMapping& mapping, AnnotationStyle style);

/// Context sentence (if any) followed by the source, space separated.
std::string source_with_context(const Sample& sample);

/// GoE prompt. An empty mapping degenerates to the baseline prompt.
PromptMessages render_goe(const Sample& sample, const GenderMapping& mapping, AnnotationStyle style,
                          const LanguageNames& langs = {});
PromptMessages render_baseline(const Sample& sample, const LanguageNames& langs = {});

/// Gender-prefixing baseline input: "MALE: ..." / "FEMALE: ...".
std::string render_prefix(std::string_view source, Gender gender);

PromptMessages render_igoe_fewshot(const Sample& sample, const std::vector<FewShotExample>& shots,
                                   const LanguageNames& langs = {});

/// Shots from a normalized corpus: samples with exactly one gold-gendered
/// entity and one reference. Others are skipped.
std::vector<FewShotExample> fewshot_from_samples(const std::vector<Sample>& samples);

}  // namespace goe
