#include "goe/corpus_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "goe/term_diff.hpp"
#include "goe/text.hpp"

namespace goe {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ojson to_json(const GenderMapping& m) {
  ojson arr = ojson::array();
  for (const auto& [s, g] : m.entries()) arr.push_back(ojson::array({s, std::string(to_code(g))}));
  return arr;
}

ojson to_json(const Sample& s) {
  ojson j;
  j["id"] = s.id;
  j["benchmark"] = std::string(to_string(s.benchmark));
  j["lang_pair"] = {{"source", s.lang_pair.source}, {"target", s.lang_pair.target}};
  j["source"] = s.source;
  if (s.context) j["context"] = *s.context;
  ojson ents = ojson::array();
  for (const auto& e : s.entities) {
    ojson je;
    je["surface"] = e.surface;
    je["ambiguous"] = e.ambiguous;
    if (e.gold_gender) je["gold_gender"] = std::string(to_code(*e.gold_gender));
    ents.push_back(std::move(je));
  }
  j["entities"] = std::move(ents);
  ojson refs = ojson::array();
  for (const auto& r : s.references) {
    ojson jr;
    jr["mapping"] = to_json(r.mapping);
    jr["text"] = r.text;
    ojson terms = ojson::array();
    for (const auto& t : r.terms) {
      ojson jt;
      jt["correct"] = t.correct;
      jt["wrong"] = t.wrong;
      if (t.entity) jt["entity"] = *t.entity;
      terms.push_back(std::move(jt));
    }
    jr["terms"] = std::move(terms);
    refs.push_back(std::move(jr));
  }
  j["references"] = std::move(refs);
  return j;
}

GenderMapping mapping_from_json(const json& j) {
  if (!j.is_array()) throw CorpusError("mapping must be an array of [surface, gender] pairs");
  std::vector<GenderMapping::Entry> entries;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2) throw CorpusError("mapping entries must be [surface, gender] pairs");
    entries.emplace_back(text::nfc(pair[0].get<std::string>()), gender_from_code(pair[1].get<std::string>()));
  }
  return GenderMapping(std::move(entries));
}

Sample sample_from_json(const json& j) {
  Sample s;
  s.id = j.at("id").get<std::string>();
  s.benchmark = benchmark_from_string(j.at("benchmark").get<std::string>());
  if (j.contains("lang_pair")) {
    const auto& lp = j.at("lang_pair");
    s.lang_pair.source = lp.value("source", "en");
    s.lang_pair.target = lp.value("target", "");
  }
  s.source = text::nfc(j.at("source").get<std::string>());
  if (j.contains("context")) s.context = text::nfc(j.at("context").get<std::string>());
  for (const auto& je : j.at("entities")) {
    Entity e;
    e.surface = text::nfc(je.at("surface").get<std::string>());
    e.ambiguous = je.at("ambiguous").get<bool>();
    if (je.contains("gold_gender")) e.gold_gender = gender_from_code(je.at("gold_gender").get<std::string>());
    s.entities.push_back(std::move(e));
  }
  if (j.contains("references")) {
    for (const auto& jr : j.at("references")) {
      Reference r;
      r.mapping = mapping_from_json(jr.at("mapping"));
      r.text = text::nfc(jr.at("text").get<std::string>());
      if (jr.contains("terms")) {
        for (const auto& jt : jr.at("terms")) {
          GenderedTermPair t;
          t.correct = text::nfc(jt.at("correct").get<std::string>());
          t.wrong = text::nfc(jt.at("wrong").get<std::string>());
          if (jt.contains("entity")) t.entity = text::nfc(jt.at("entity").get<std::string>());
          r.terms.push_back(std::move(t));
        }
      }
      s.references.push_back(std::move(r));
    }
  }
  return s;
}

std::string serialize_sample(const Sample& s) { return to_json(s).dump(); }

Sample parse_sample(std::string_view line) {
  try {
    return sample_from_json(json::parse(line));
  } catch (const json::exception& e) {
    throw CorpusError(std::string("malformed corpus record: ") + e.what());
  }
}

void write_corpus(const std::filesystem::path& path, const std::vector<Sample>& samples) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError("cannot write " + path.string());
  for (const auto& s : samples) out << serialize_sample(s) << '\n';
}

std::vector<Sample> read_corpus(const std::filesystem::path& path) {
  std::vector<Sample> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split(read_file(path), '\n')) {
    ++line_no;
    if (text::is_blank(line)) continue;
    try {
      out.push_back(parse_sample(line));
    } catch (const CorpusError& e) {
      throw CorpusError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

SourceFormat source_format_from_string(std::string_view s) {
  if (s == "auto") return SourceFormat::Auto;
  if (s == "normalized" || s == "jsonl") return SourceFormat::Normalized;
  if (s == "gate") return SourceFormat::Gate;
  if (s == "mustshe") return SourceFormat::MustShe;
  if (s == "winomt") return SourceFormat::WinoMT;
  if (s == "mtgeneval") return SourceFormat::MtGenEval;
  throw CorpusError("unknown source format '" + std::string(s) + "'");
}

std::vector<SidecarEntity> parse_sidecar(std::string_view contents) {
  std::vector<SidecarEntity> out;
  std::size_t line_no = 0;
  for (const auto& raw : text::split(contents, '\n')) {
    ++line_no;
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::is_blank(line) || line.front() == '#') continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() != 4) throw CorpusError("sidecar line " + std::to_string(line_no) + ": expected 4 columns");
    SidecarEntity se;
    se.sample_id = cols[0];
    se.entity.surface = text::nfc(cols[1]);
    if (cols[2] != "0" && cols[2] != "1")
      throw CorpusError("sidecar line " + std::to_string(line_no) + ": ambiguous flag must be 0 or 1");
    se.entity.ambiguous = cols[2] == "1";
    if (cols[3] != "-") se.entity.gold_gender = gender_from_code(cols[3]);
    out.push_back(std::move(se));
  }
  return out;
}

namespace {

struct Row {
  std::size_t line_no;
  std::vector<std::string> cols;
};

std::vector<Row> tsv_rows(std::string_view contents) {
  std::vector<Row> rows;
  std::size_t line_no = 0;
  for (const auto& raw : text::split(contents, '\n')) {
    ++line_no;
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::is_blank(line) || line.front() == '#') continue;
    auto cols = text::split(line, '\t');
    for (auto& c : cols) c = text::nfc(text::trim(c));
    rows.push_back({line_no, std::move(cols)});
  }
  return rows;
}

/// Terms for `entity` in `ref`, obtained by diffing against the reference in
/// which only that entity's gender is flipped.
void attach_diff_terms(Sample& s) {
  for (auto& ref : s.references) {
    for (const auto& [surface, g] : ref.mapping.entries()) {
      GenderMapping flipped = ref.mapping;
      flipped.set(surface, opposite(g));
      const Reference* other = s.find_reference(flipped);
      if (!other) continue;
      for (auto& t : extract_gender_terms_by_diff(ref.text, other->text)) {
        t.entity = surface;
        ref.terms.push_back(std::move(t));
      }
    }
  }
}

Sample make_base(const ImportOptions& opt, std::string id, std::string source) {
  Sample s;
  s.id = std::move(id);
  s.benchmark = opt.benchmark;
  s.lang_pair = opt.lang_pair;
  s.source = std::move(source);
  return s;
}

Sample parse_gate_row(const Row& row, const ImportOptions& opt) {
  if (row.cols.size() < 3) throw CorpusError("expected id, source, entities, references...");
  Sample s = make_base(opt, row.cols[0], row.cols[1]);
  for (const auto& surface : text::split(row.cols[2], ';')) {
    const auto t = text::trim(surface);
    if (!t.empty()) s.entities.push_back({t, true, std::nullopt});
  }
  for (std::size_t c = 3; c < row.cols.size(); ++c) {
    const auto& cell = row.cols[c];
    const auto colon = cell.find(':');
    if (colon == std::string::npos) throw CorpusError("reference column without '<genders>:' prefix");
    const std::string genders = cell.substr(0, colon);
    if (genders.size() != s.entities.size())
      throw CorpusError("number of entities does not match the annotations (" + std::to_string(s.entities.size()) +
                        " entities, " + std::to_string(genders.size()) + " genders)");
    Reference r;
    for (std::size_t k = 0; k < genders.size(); ++k)
      r.mapping.set(s.entities[k].surface, gender_from_code(std::string_view(&genders[k], 1)));
    r.text = text::trim(cell.substr(colon + 1));
    s.references.push_back(std::move(r));
  }
  attach_diff_terms(s);
  return s;
}

Sample parse_mustshe_row(const Row& row, const ImportOptions& opt) {
  if (row.cols.size() != 6) throw CorpusError("expected 6 columns: id, source, gender, correct_ref, wrong_ref, terms");
  Sample s = make_base(opt, row.cols[0], row.cols[1]);
  const Gender g = gender_from_code(row.cols[2]);
  s.entities.push_back({"speaker", true, std::nullopt});
  std::vector<GenderedTermPair> terms;
  for (const auto& entry : text::split(row.cols[5], ';')) {
    if (text::is_blank(entry)) continue;
    const auto parts = text::split(entry, '|');
    if (parts.size() != 2) throw CorpusError("term annotation must be 'correct|wrong'");
    terms.push_back({text::trim(parts[0]), text::trim(parts[1]), std::string("speaker")});
  }
  Reference mine{GenderMapping{{"speaker", g}}, row.cols[3], terms};
  Reference other{GenderMapping{{"speaker", opposite(g)}}, row.cols[4], {}};
  for (const auto& t : terms) other.terms.push_back({t.wrong, t.correct, t.entity});
  // References follow enumeration order (M first).
  if (g == Gender::Masculine) {
    s.references = {std::move(mine), std::move(other)};
  } else {
    s.references = {std::move(other), std::move(mine)};
  }
  return s;
}

Sample parse_winomt_row(const Row& row, const ImportOptions& opt) {
  if (row.cols.size() != 5)
    throw CorpusError("expected 5 columns: id, source, unambiguous entity, gold gender, ambiguous entity");
  Sample s = make_base(opt, row.cols[0], row.cols[1]);
  Entity unamb{row.cols[2], false, gender_from_code(row.cols[3])};
  Entity amb{row.cols[4], true, std::nullopt};
  // Entities in order of first appearance in the source.
  const auto pu = s.source.find(unamb.surface);
  const auto pa = s.source.find(amb.surface);
  if (pa < pu)
    s.entities = {amb, unamb};
  else
    s.entities = {unamb, amb};
  return s;
}

Sample parse_mtgeneval_row(const Row& row, const ImportOptions& opt,
                           const std::map<std::string, std::vector<Entity>>& sidecar, const GenderWordList& words) {
  if (row.cols.size() != 5) throw CorpusError("expected 5 columns: id, context, source, ref_masculine, ref_feminine");
  Sample s = make_base(opt, row.cols[0], row.cols[2]);
  s.context = row.cols[1];
  const auto it = sidecar.find(s.id);
  if (it == sidecar.end()) throw CorpusError("no sidecar entities for sample");
  const auto detected = detect_context_gender(*s.context, words);
  for (auto e : it->second) {
    if (!e.ambiguous && !e.gold_gender) e.gold_gender = detected;
    s.entities.push_back(std::move(e));
  }
  Reference rm, rf;
  for (const auto& e : s.entities) {
    rm.mapping.set(e.surface, Gender::Masculine);
    rf.mapping.set(e.surface, Gender::Feminine);
  }
  rm.text = row.cols[3];
  rf.text = row.cols[4];
  const std::optional<std::string> owner =
      s.entities.size() == 1 ? std::optional<std::string>(s.entities.front().surface) : std::nullopt;
  for (auto& t : extract_gender_terms_by_diff(rm.text, rf.text)) {
    rf.terms.push_back({t.wrong, t.correct, owner});
    t.entity = owner;
    rm.terms.push_back(std::move(t));
  }
  s.references = {std::move(rm), std::move(rf)};
  return s;
}

SourceFormat resolve_format(const std::filesystem::path& path, const ImportOptions& opt) {
  if (opt.format != SourceFormat::Auto) return opt.format;
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".json") return SourceFormat::Normalized;
  switch (opt.benchmark) {
    case Benchmark::SingleAmbiguous: return SourceFormat::MustShe;
    case Benchmark::MultiAmbiguous: return SourceFormat::Gate;
    case Benchmark::Mixed: return SourceFormat::WinoMT;
    case Benchmark::Contextual: return SourceFormat::MtGenEval;
  }
  return SourceFormat::Normalized;
}

}  // namespace

ImportResult import_corpus(const std::filesystem::path& path, const ImportOptions& opt) {
  const std::string contents = read_file(path);
  const GenderWordList& words = opt.words ? *opt.words : GenderWordList::builtin();
  const SourceFormat format = resolve_format(path, opt);

  std::map<std::string, std::vector<Entity>> sidecar;
  if (opt.sidecar) {
    for (auto& se : parse_sidecar(read_file(*opt.sidecar))) sidecar[se.sample_id].push_back(std::move(se.entity));
  } else if (format == SourceFormat::MtGenEval) {
    throw CorpusError("mtgeneval import requires a sidecar entity file");
  }

  ImportResult result;
  std::vector<Sample> parsed;
  auto row_issue = [&](std::size_t line_no, const std::string& msg) {
    result.issues.push_back({"line " + std::to_string(line_no), Severity::Error, msg});
  };

  if (format == SourceFormat::Normalized) {
    std::size_t line_no = 0;
    for (const auto& line : text::split(contents, '\n')) {
      ++line_no;
      if (text::is_blank(line)) continue;
      try {
        Sample s = parse_sample(line);
        if (s.benchmark != opt.benchmark) {
          row_issue(line_no, "record benchmark '" + std::string(to_string(s.benchmark)) + "' differs from requested '" +
                                 std::string(to_string(opt.benchmark)) + "'");
          continue;
        }
        if (s.lang_pair.target.empty()) s.lang_pair = opt.lang_pair;
        parsed.push_back(std::move(s));
      } catch (const std::exception& e) {
        row_issue(line_no, e.what());
      }
    }
  } else {
    for (const auto& row : tsv_rows(contents)) {
      try {
        switch (format) {
          case SourceFormat::Gate: parsed.push_back(parse_gate_row(row, opt)); break;
          case SourceFormat::MustShe: parsed.push_back(parse_mustshe_row(row, opt)); break;
          case SourceFormat::WinoMT: parsed.push_back(parse_winomt_row(row, opt)); break;
          case SourceFormat::MtGenEval: parsed.push_back(parse_mtgeneval_row(row, opt, sidecar, words)); break;
          default: break;
        }
      } catch (const std::exception& e) {
        const std::string id = row.cols.empty() ? "" : row.cols[0];
        row_issue(row.line_no, (id.empty() ? "" : id + ": ") + e.what());
      }
    }
  }

  std::set<std::string> ids;
  for (auto& s : parsed) {
    auto issues = validate_sample(s, words);
    if (!ids.insert(s.id).second) issues.push_back({s.id, Severity::Error, "duplicate sample id"});
    const bool fatal = std::any_of(issues.begin(), issues.end(),
                                   [](const ValidationIssue& i) { return i.severity == Severity::Error; });
    result.issues.insert(result.issues.end(), issues.begin(), issues.end());
    if (!fatal) result.samples.push_back(std::move(s));
  }
  return result;
}

}  // namespace goe
