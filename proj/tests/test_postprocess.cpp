#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "goe/postprocess.hpp"
#include "goe/text.hpp"
#include "support.hpp"

using namespace goe;

TEST_CASE("translation extraction examples") {
  CHECK(extract_translation("Sure! Here is the translation:\nHola a todos.").text == "Hola a todos.");
  CHECK(extract_translation("Bonjour le monde.") == Extraction{"Bonjour le monde.", false});
  CHECK(extract_translation("Note: gender applied.\n\n\"La doctora llegó.\"").text == "La doctora llegó.");
  CHECK(extract_translation("Translation only.") == Extraction{"Translation only.", true});
}

TEST_CASE("I-GoE extraction examples") {
  CHECK(extract_igoe_translation("From the given source text, we can infer that the author uses she/her. Therefore, the "
                                 "Spanish translation with correct gender inflection is:\nLa autora escribió.")
            .text == "La autora escribió.");
  CHECK(extract_igoe_translation("Hello.\nNote: x") == extract_translation("Hello.\nNote: x"));
  CHECK(extract_igoe_translation("... correct gender inflection is: \"Le juge est parti.\"").text ==
        "Le juge est parti.");
}

TEST_CASE("verdict extraction examples") {
  CHECK(extract_lge_verdict("Comment: ...la embajadora...\nGender Accuracy: ACCURATE").label == VerdictLabel::Accurate);
  CHECK(extract_lge_verdict("Comment: wrong.\nGender Accuracy: INACCURATE.").label == VerdictLabel::Inaccurate);
  CHECK_THROWS_AS(extract_lge_verdict("The translation looks fine."), VerdictParseError);
  CHECK_THROWS_AS(extract_lge_verdict("Gender Accuracy: maybe"), VerdictParseError);
  CHECK(extract_lge_verdict("comment: ok\ngender accuracy: accurate!").comment == "ok");
}

TEST_CASE("quote stripping") {
  CHECK(strip_wrapping_quotes("\"'x'\"") == "x");
  CHECK(strip_wrapping_quotes("“ y ”") == "y");
  CHECK(strip_wrapping_quotes("\"unbalanced") == "\"unbalanced");
  CHECK(strip_wrapping_quotes("\"") == "\"");
}

TEST_CASE("postprocess fixture") {
  std::istringstream in(testsupport::slurp(testsupport::fixture("postprocess_cases.jsonl")));
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = nlohmann::json::parse(line);
    const std::string raw = c["raw"];
    CAPTURE(raw);
    const std::string kind = c["kind"];
    if (kind == "translation") {
      CHECK(extract_translation(raw) == Extraction{c["text"], c["degraded"]});
    } else if (kind == "igoe") {
      CHECK(extract_igoe_translation(raw) == Extraction{c["text"], c["degraded"]});
    } else {
      REQUIRE(kind == "verdict");
      if (c.value("error", false)) {
        CHECK_THROWS_AS(extract_lge_verdict(raw), VerdictParseError);
      } else {
        const auto v = extract_lge_verdict(raw);
        CHECK(to_string(v.label) == c["label"].get<std::string>());
        CHECK(v.comment == c["comment"].get<std::string>());
      }
    }
    ++n;
  }
  CHECK(n == 30);
}

namespace {

std::string random_output(std::mt19937& rng) {
  static const std::vector<std::string> lines = {
      "Here is the translation:", "La doctora llegó.", "\"El médico llegó.\"", "", "   ", "Note: feminine.",
      "« Le juge »", "The sentence uses he/him.", "Gender: F", "Il cuoco è bravo.", "'quoted'", "TRANSLATED:",
      "Sentence 1", "x"};
  std::string out;
  for (int k = rng() % 5; k >= 0; --k) out += lines[rng() % lines.size()] + (rng() % 3 ? "\n" : "\r\n");
  return out;
}

}  // namespace

TEST_CASE("translation extraction properties") {
  std::mt19937 rng(3);
  const std::vector<std::string> filters = {"gender", "translat", "sentence", "note"};
  for (int trial = 0; trial < 3000; ++trial) {
    const std::string raw = random_output(rng);
    CAPTURE(raw);
    const auto once = extract_translation(raw);
    CHECK(extract_translation(once.text).text == once.text);
    if (!once.degraded) {
      CHECK(once.text.find('\n') == std::string::npos);
      const auto lower = text::to_lower(once.text);
      for (const auto& f : filters) CHECK(lower.find(f) == std::string::npos);
    }
  }
}

TEST_CASE("verdict property: an INACCURATE verdict line is never read as Accurate") {
  std::mt19937 rng(9);
  const std::vector<std::string> spellings = {"INACCURATE", "inaccurate", "Inaccurate", "InAcCuRaTe"};
  const std::vector<std::string> tails = {"", ".", "!", " ", "**", " (ACCURATE would be wrong)"};
  const std::vector<std::string> heads = {"Comment: fine.\n", "", "Comment: ACCURATE terms\n", "Comment:\n\n"};
  for (int trial = 0; trial < 2000; ++trial) {
    const std::string raw = heads[rng() % heads.size()] + "Gender Accuracy: " + spellings[rng() % spellings.size()] +
                            tails[rng() % tails.size()];
    CAPTURE(raw);
    CHECK(extract_lge_verdict(raw).label == VerdictLabel::Inaccurate);
  }
}
