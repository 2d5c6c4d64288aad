#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "goe/corpus.hpp"
#include "goe/wordlist.hpp"

namespace goe {

using ojson = nlohmann::ordered_json;

// Normalized corpus: one JSON object per line, UTF-8, NFC.
ojson to_json(const GenderMapping& m);
ojson to_json(const Sample& s);
GenderMapping mapping_from_json(const nlohmann::json& j);
Sample sample_from_json(const nlohmann::json& j);

std::string serialize_sample(const Sample& s);
Sample parse_sample(std::string_view line);

void write_corpus(const std::filesystem::path& path, const std::vector<Sample>& samples);
/// Strict reader for files this tool wrote; throws CorpusError on any bad line.
std::vector<Sample> read_corpus(const std::filesystem::path& path);

/// Raw distribution layouts understood by the importer.
///   normalized  JSONL as written by write_corpus
///   gate        id, source, entities ("a;b"), then one column per reference
///               "<genders>:<text>" with genders in entity order, e.g. "MF:..."
///   mustshe     id, source, gender, correct_ref, wrong_ref, terms ("c|w;c|w")
///   winomt      id, source, unambiguous entity, gold gender, ambiguous entity
///   mtgeneval   id, context, source, ref_masculine, ref_feminine (+ sidecar)
enum class SourceFormat { Auto, Normalized, Gate, MustShe, WinoMT, MtGenEval };
SourceFormat source_format_from_string(std::string_view s);

struct ImportOptions {
  Benchmark benchmark = Benchmark::SingleAmbiguous;
  LangPair lang_pair;
  SourceFormat format = SourceFormat::Auto;
  /// `sample_id<TAB>surface<TAB>ambiguous(0|1)<TAB>gold(M|F|-)`; required for mtgeneval.
  std::optional<std::filesystem::path> sidecar;
  const GenderWordList* words = nullptr;  // builtin when null
};

struct ImportResult {
  std::vector<Sample> samples;
  std::vector<ValidationIssue> issues;
};

/// Unreadable files throw; malformed rows and invalid samples are reported in
/// `issues` and dropped.
ImportResult import_corpus(const std::filesystem::path& path, const ImportOptions& options);

struct SidecarEntity {
  std::string sample_id;
  Entity entity;
};
std::vector<SidecarEntity> parse_sidecar(std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace goe
