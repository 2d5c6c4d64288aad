#include "goe/corpus.hpp"

#include <algorithm>
#include <set>

#include "goe/text.hpp"
#include "goe/wordlist.hpp"

namespace goe {

std::string_view to_code(Gender g) { return g == Gender::Masculine ? "M" : "F"; }

Gender gender_from_code(std::string_view code) {
  if (code == "M") return Gender::Masculine;
  if (code == "F") return Gender::Feminine;
  throw CorpusError("invalid gender code '" + std::string(code) + "' (expected M or F)");
}

Gender opposite(Gender g) { return g == Gender::Masculine ? Gender::Feminine : Gender::Masculine; }

std::optional<Gender> GenderMapping::find(std::string_view surface) const {
  for (const auto& [s, g] : entries_)
    if (s == surface) return g;
  return std::nullopt;
}

void GenderMapping::set(std::string surface, Gender g) {
  for (auto& [s, existing] : entries_) {
    if (s == surface) {
      existing = g;
      return;
    }
  }
  entries_.emplace_back(std::move(surface), g);
}

bool GenderMapping::has_duplicate_keys() const {
  std::set<std::string_view> seen;
  for (const auto& [s, g] : entries_)
    if (!seen.insert(s).second) return true;
  return false;
}

GenderMapping GenderMapping::swapped() const {
  GenderMapping out = *this;
  for (auto& [s, g] : out.entries_) g = opposite(g);
  return out;
}

std::string GenderMapping::key() const {
  std::string out;
  for (const auto& [s, g] : entries_) {
    if (!out.empty()) out += ';';
    out += s;
    out += '=';
    out += to_code(g);
  }
  return out;
}

std::string_view to_string(Benchmark b) {
  switch (b) {
    case Benchmark::SingleAmbiguous: return "single_ambiguous";
    case Benchmark::MultiAmbiguous: return "multi_ambiguous";
    case Benchmark::Mixed: return "mixed";
    case Benchmark::Contextual: return "contextual";
  }
  return "?";
}

Benchmark benchmark_from_string(std::string_view s) {
  if (s == "single_ambiguous") return Benchmark::SingleAmbiguous;
  if (s == "multi_ambiguous") return Benchmark::MultiAmbiguous;
  if (s == "mixed") return Benchmark::Mixed;
  if (s == "contextual") return Benchmark::Contextual;
  throw CorpusError("unknown benchmark '" + std::string(s) + "'");
}

std::size_t Sample::ambiguous_count() const {
  return static_cast<std::size_t>(
      std::count_if(entities.begin(), entities.end(), [](const Entity& e) { return e.ambiguous; }));
}

const Reference* Sample::find_reference(const GenderMapping& mapping) const {
  for (const auto& r : references)
    if (r.mapping == mapping) return &r;
  return nullptr;
}

GenderMapping Sample::gold_mapping() const {
  GenderMapping m;
  for (const auto& e : entities)
    if (e.gold_gender) m.set(e.surface, *e.gold_gender);
  return m;
}

std::vector<GenderMapping> enumerate_mappings(const std::vector<Entity>& entities) {
  std::vector<const Entity*> amb;
  for (const auto& e : entities)
    if (e.ambiguous) amb.push_back(&e);

  const std::size_t n = amb.size();
  if (n >= 8 * sizeof(std::size_t) - 1) throw CorpusError("too many ambiguous entities to enumerate");
  std::vector<GenderMapping> out;
  out.reserve(std::size_t{1} << n);
  // Bit (n-1-i) of the counter selects entity i, so the first entity varies
  // slowest: lexicographic over entity order with M < F.
  for (std::size_t bits = 0; bits < (std::size_t{1} << n); ++bits) {
    GenderMapping m;
    for (std::size_t i = 0; i < n; ++i) {
      const bool fem = (bits >> (n - 1 - i)) & 1U;
      m.set(amb[i]->surface, fem ? Gender::Feminine : Gender::Masculine);
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::string_view to_string(MappingClass c) {
  switch (c) {
    case MappingClass::Single: return "single";
    case MappingClass::Uniform: return "uniform";
    case MappingClass::Mixed: return "mixed";
  }
  return "?";
}

MappingClass classify_mapping(const GenderMapping& mapping) {
  if (mapping.empty()) throw CorpusError("cannot classify an empty mapping");
  if (mapping.size() == 1) return MappingClass::Single;
  const Gender first = mapping.entries().front().second;
  for (const auto& [s, g] : mapping.entries())
    if (g != first) return MappingClass::Mixed;
  return MappingClass::Uniform;
}

GenderMapping derive_mixed_mapping(const Sample& sample, MixedVariant variant) {
  if (sample.benchmark != Benchmark::Mixed)
    throw CorpusError(sample.id + ": mixed-entity mappings require a mixed benchmark sample");
  const Entity* unamb = nullptr;
  const Entity* amb = nullptr;
  for (const auto& e : sample.entities) {
    if (e.ambiguous) {
      if (amb) throw CorpusError(sample.id + ": more than one ambiguous entity");
      amb = &e;
    } else {
      if (unamb) throw CorpusError(sample.id + ": more than one unambiguous entity");
      unamb = &e;
    }
  }
  if (!amb || !unamb) throw CorpusError(sample.id + ": needs one ambiguous and one unambiguous entity");
  if (!unamb->gold_gender) throw CorpusError(sample.id + ": unambiguous entity has no gold gender");

  const Gender amb_gender = opposite(*unamb->gold_gender);
  GenderMapping m;
  // Entity order in the sample decides entry order.
  for (const auto& e : sample.entities) {
    if (&e == amb)
      m.set(e.surface, amb_gender);
    else if (variant == MixedVariant::Full)
      m.set(e.surface, *e.gold_gender);
  }
  return m;
}

std::vector<ValidationIssue> validate_sample(const Sample& sample) {
  return validate_sample(sample, GenderWordList::builtin());
}

std::vector<ValidationIssue> validate_sample(const Sample& s, const GenderWordList& words) {
  std::vector<ValidationIssue> issues;
  auto error = [&](std::string msg) { issues.push_back({s.id, Severity::Error, std::move(msg)}); };
  auto warn = [&](std::string msg) { issues.push_back({s.id, Severity::Warning, std::move(msg)}); };

  if (s.id.empty()) error("empty sample id");
  if (text::is_blank(s.source)) error("blank source text");

  std::set<std::string_view> surfaces;
  for (const auto& e : s.entities) {
    if (e.surface.empty()) error("entity with empty surface");
    if (!surfaces.insert(e.surface).second) error("duplicate entity surface '" + e.surface + "'");
    if (e.ambiguous && e.gold_gender) error("ambiguous entity '" + e.surface + "' carries a gold gender");
    if (!e.ambiguous && !e.gold_gender) error("unambiguous entity '" + e.surface + "' lacks a gold gender");
  }

  const std::size_t n_amb = s.ambiguous_count();
  switch (s.benchmark) {
    case Benchmark::MultiAmbiguous: {
      const std::size_t expected = std::size_t{1} << std::min<std::size_t>(n_amb, 30);
      if (s.references.size() != expected)
        error("number of entities does not match the annotations: " + std::to_string(n_amb) +
              " ambiguous entities need " + std::to_string(expected) + " references, found " +
              std::to_string(s.references.size()));
      break;
    }
    case Benchmark::SingleAmbiguous:
      if (n_amb != 1) error("single-entity sample must have exactly one ambiguous entity");
      break;
    case Benchmark::Mixed:
      if (s.entities.size() != 2 || n_amb != 1)
        error("mixed sample needs exactly two entities, exactly one unambiguous");
      break;
    case Benchmark::Contextual:
      if (!s.context || text::is_blank(*s.context)) {
        error("blank context sentence");
      } else if (!detect_context_gender(*s.context, words)) {
        error("context sentence has no detectable gender");
      }
      break;
  }

  std::set<std::string> mapping_keys;
  for (const auto& r : s.references) {
    if (r.mapping.has_duplicate_keys()) error("reference mapping has duplicate keys");
    for (const auto& [surface, g] : r.mapping.entries())
      if (!surfaces.contains(surface)) error("reference mapping names unknown entity '" + surface + "'");
    for (const auto& e : s.entities)
      if (e.ambiguous && !r.mapping.find(e.surface))
        error("reference mapping does not cover ambiguous entity '" + e.surface + "'");
    if (!mapping_keys.insert(r.mapping.key()).second)
      error("two references share mapping '" + r.mapping.key() + "'");

    const bool mixed_genders = r.mapping.size() >= 2 && classify_mapping(r.mapping) == MappingClass::Mixed;
    for (const auto& t : r.terms) {
      if (t.correct.empty() || t.wrong.empty()) error("term pair with an empty side");
      if (t.correct == t.wrong) error("term pair (" + t.correct + ", " + t.wrong + ") has correct = wrong");
      if (t.entity && !r.mapping.find(*t.entity))
        error("term '" + t.correct + "' attributed to entity outside the mapping");
      if (!t.entity && mixed_genders)
        error("term '" + t.correct + "' lacks entity attribution in a mixed-gender reference");
    }
    if (r.terms.empty() && s.benchmark != Benchmark::Mixed) warn("reference '" + r.mapping.key() + "' has no gendered terms");
  }
  return issues;
}

}  // namespace goe
