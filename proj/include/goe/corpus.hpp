#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace goe {

enum class Gender { Masculine, Feminine };

/// "M" / "F"; the only spellings accepted in files.
std::string_view to_code(Gender g);
Gender gender_from_code(std::string_view code);
Gender opposite(Gender g);

struct Entity {
  std::string surface;
  bool ambiguous = true;
  std::optional<Gender> gold_gender;

  bool operator==(const Entity&) const = default;
};

/// Ordered entity -> gender assignment. Order follows entity order in the
/// owning sample. Stored as a vector so that duplicate keys read from a file
/// survive long enough to be reported by validation.
class GenderMapping {
 public:
  using Entry = std::pair<std::string, Gender>;

  GenderMapping() = default;
  GenderMapping(std::initializer_list<Entry> entries) : entries_(entries) {}
  explicit GenderMapping(std::vector<Entry> entries) : entries_(std::move(entries)) {}

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::optional<Gender> find(std::string_view surface) const;
  void set(std::string surface, Gender g);
  bool has_duplicate_keys() const;
  GenderMapping swapped() const;

  /// Canonical compact form, e.g. "doctor=F;nurse=M". Empty mapping -> "".
  std::string key() const;

  bool operator==(const GenderMapping&) const = default;

 private:
  std::vector<Entry> entries_;
};

struct GenderedTermPair {
  std::string correct;
  std::string wrong;
  /// Surface of the entity whose inflection this term carries. Optional in
  /// files; required for multi-entity references with mixed genders.
  std::optional<std::string> entity;

  bool operator==(const GenderedTermPair&) const = default;
};

struct Reference {
  GenderMapping mapping;
  std::string text;
  std::vector<GenderedTermPair> terms;

  bool operator==(const Reference&) const = default;
};

enum class Benchmark { SingleAmbiguous, MultiAmbiguous, Mixed, Contextual };

std::string_view to_string(Benchmark b);
Benchmark benchmark_from_string(std::string_view s);

struct LangPair {
  std::string source = "en";
  std::string target;

  bool operator==(const LangPair&) const = default;
};

struct Sample {
  std::string id;
  Benchmark benchmark = Benchmark::SingleAmbiguous;
  LangPair lang_pair;
  std::string source;
  std::optional<std::string> context;
  std::vector<Entity> entities;
  std::vector<Reference> references;

  std::size_t ambiguous_count() const;
  const Reference* find_reference(const GenderMapping& mapping) const;
  /// Mapping of every entity carrying a gold gender, in entity order.
  GenderMapping gold_mapping() const;

  bool operator==(const Sample&) const = default;
};

enum class Severity { Error, Warning };

struct ValidationIssue {
  std::string sample_id;
  Severity severity = Severity::Error;
  std::string message;

  bool operator==(const ValidationIssue&) const = default;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Mapping derivation

/// All {M,F} assignments over the ambiguous entities, entity order, M before F.
std::vector<GenderMapping> enumerate_mappings(const std::vector<Entity>& entities);

enum class MappingClass { Single, Uniform, Mixed };
std::string_view to_string(MappingClass c);

MappingClass classify_mapping(const GenderMapping& mapping);

enum class MixedVariant { AmbOnly, Full };

/// Ambiguous entity gets the gender opposite to the unambiguous entity.
GenderMapping derive_mixed_mapping(const Sample& sample, MixedVariant variant);

class GenderWordList;

/// Checks against the built-in gender word list.
std::vector<ValidationIssue> validate_sample(const Sample& sample);
std::vector<ValidationIssue> validate_sample(const Sample& sample, const GenderWordList& words);

}  // namespace goe
