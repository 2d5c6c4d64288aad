#include "goe/wordlist.hpp"

#include <fstream>
#include <sstream>

#include "goe/text.hpp"

namespace goe {

namespace {
#include "builtin_wordlist.inc"
}  // namespace

GenderWordList GenderWordList::parse(std::string_view contents) {
  GenderWordList out;
  std::size_t line_no = 0;
  for (const auto& raw : text::split(contents, '\n')) {
    ++line_no;
    std::string line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() != 2)
      throw CorpusError("word list line " + std::to_string(line_no) + ": expected word<TAB>M|F");
    out.add(text::trim(cols[0]), gender_from_code(text::trim(cols[1])));
  }
  return out;
}

GenderWordList GenderWordList::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot read word list " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const GenderWordList& GenderWordList::builtin() {
  static const GenderWordList list = parse(kBuiltinWordList);
  return list;
}

void GenderWordList::add(std::string word, Gender g) {
  word = text::to_lower(word);
  auto& mine = g == Gender::Masculine ? masculine_ : feminine_;
  const auto& other = g == Gender::Masculine ? feminine_ : masculine_;
  if (other.contains(word)) throw CorpusError("word '" + word + "' listed under both genders");
  mine.insert(std::move(word));
}

std::optional<Gender> GenderWordList::lookup(std::string_view w) const {
  if (masculine_.contains(w)) return Gender::Masculine;
  if (feminine_.contains(w)) return Gender::Feminine;
  return std::nullopt;
}

std::optional<Gender> detect_context_gender(std::string_view sentence, const GenderWordList& words) {
  bool masc = false;
  bool fem = false;
  for (const auto& tok : text::diff_tokens(text::to_lower(sentence))) {
    if (auto g = words.lookup(tok)) (*g == Gender::Masculine ? masc : fem) = true;
  }
  if (masc == fem) return std::nullopt;
  return masc ? Gender::Masculine : Gender::Feminine;
}

}  // namespace goe
