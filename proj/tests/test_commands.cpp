#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include "goe/commands.hpp"
#include "support.hpp"

using namespace goe;
using testsupport::fixture;
using testsupport::slurp;
using testsupport::spit;
using testsupport::TempDir;

namespace {

/// Two single-entity samples in normalized form.
std::filesystem::path write_speaker_corpus(const TempDir& tmp) {
  std::vector<Sample> samples;
  struct Row {
    std::string id, source, ref_m, ref_f, term_m, term_f;
  };
  for (const auto& r : std::vector<Row>{{"ms1", "I am tired.", "Estoy cansado.", "Estoy cansada.", "cansado", "cansada"},
                                        {"ms2", "I am a doctor.", "Soy médico.", "Soy médica.", "médico", "médica"}}) {
    Sample s;
    s.id = r.id;
    s.benchmark = Benchmark::SingleAmbiguous;
    s.lang_pair = {"en", "es"};
    s.source = r.source;
    s.entities = {{"speaker", true, std::nullopt}};
    s.references = {{{{"speaker", Gender::Masculine}}, r.ref_m, {{r.term_m, r.term_f, "speaker"}}},
                    {{{"speaker", Gender::Feminine}}, r.ref_f, {{r.term_f, r.term_m, "speaker"}}}};
    samples.push_back(s);
  }
  const auto path = tmp / "speaker.jsonl";
  write_corpus(path, samples);
  return path;
}

BackendOptions mock(const std::filesystem::path& fixture_file, int concurrency = 1) {
  BackendOptions b;
  b.kind = "mock";
  b.mock_fixture = fixture_file;
  b.concurrency = concurrency;
  return b;
}

BackendOptions oracle(bool inverted = false) {
  BackendOptions b;
  b.kind = inverted ? "oracle-inverted" : "oracle";
  return b;
}

std::filesystem::path import_gate(const std::filesystem::path& ws) {
  ImportArgs a;
  a.workspace = ws;
  a.input = fixture("e2e/gate_es.tsv");
  a.benchmark = Benchmark::MultiAmbiguous;
  a.target_lang = "es";
  a.format = SourceFormat::Gate;
  return cmd_import(a).corpus;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GOE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("import writes the corpus and an issue report") {
  TempDir tmp;
  ImportArgs a;
  a.workspace = tmp.path();
  a.input = fixture("e2e/gate_es.tsv");
  a.benchmark = Benchmark::MultiAmbiguous;
  a.target_lang = "es";
  a.format = SourceFormat::Gate;
  const auto s = cmd_import(a);
  CHECK(s.corpus == tmp / "corpora/gate_es.jsonl");
  CHECK(s.samples == 4);
  CHECK(s.errors == 1);
  CHECK(read_corpus(s.corpus).size() == 4);
  const auto issues = slurp(s.issues);
  CHECK(issues.starts_with("sample_id\tseverity\tmessage\n"));
  CHECK(issues.find("number of entities does not match") != std::string::npos);

  spit(tmp / "empty.tsv", "");
  a.input = tmp / "empty.tsv";
  a.format = SourceFormat::MustShe;
  a.benchmark = Benchmark::SingleAmbiguous;
  const auto e = cmd_import(a);
  CHECK(e.samples == 0);
  CHECK(slurp(e.corpus).empty());
}

TEST_CASE("CLI reports usage errors with exit code 2") {
  TempDir tmp;
  const std::string ws = "--workspace " + tmp.path().string();
  const std::string corpus = fixture("e2e/gate_es.tsv").string();
  CHECK(run_cli(ws + " import --corpus " + corpus + " --benchmark bogus --target es") == 2);
  CHECK(run_cli(ws + " import --no-such-flag") == 2);
  CHECK(run_cli(ws + " evaluate --run-id x --breakdowns by_colour") == 2);
  CHECK(run_cli(ws + " translate --corpus " + corpus + " --backend http") == 2);  // no model, no endpoint
  CHECK(run_cli(ws + " import --corpus " + corpus + " --benchmark multi_ambiguous --target es --format gate") == 0);
  CHECK(run_cli(ws + " evaluate --run-id missing") == 1);
}

TEST_CASE("translate: mapping fan-out and baseline record counts") {
  TempDir tmp;
  const auto corpus = write_speaker_corpus(tmp);
  spit(tmp / "mock.tsv", "*\tEstoy cansada.\n");
  TranslateArgs t;
  t.workspace = tmp / "ws";
  t.corpus = corpus;
  t.backend = mock(tmp / "mock.tsv");
  t.variant = Variant::Goe;
  const auto goe = cmd_translate(t);
  CHECK(goe.record_count == 4);
  CHECK(goe.run_id == "goe-mock-speaker");
  CHECK(read_records(Workspace(t.workspace).records_path(goe.run_id)).size() == 4);

  t.variant = Variant::Baseline;
  CHECK(cmd_translate(t).record_count == 2);
  t.variant = Variant::GoeSpeaker;
  const auto spk = cmd_translate(t);
  CHECK(spk.record_count == 4);
  const auto recs = read_records(Workspace(t.workspace).records_path(spk.run_id));
  CHECK(recs[1].prompt.last_user_content().find("(the speaker is female)") != std::string::npos);
  t.variant = Variant::Prefix;
  const auto pre = cmd_translate(t);
  CHECK(read_records(Workspace(t.workspace).records_path(pre.run_id))[0].prompt.last_user_content().find(
            "MALE: I am tired.") != std::string::npos);

  t.variant = Variant::Goe;
  CHECK_THROWS_AS(cmd_translate(t), UsageError);  // run id taken
  t.variant = Variant::IGoe;
  CHECK_THROWS_AS(cmd_translate(t), UsageError);  // no shots
}

TEST_CASE("translate: record count equals the sum of enumerated mappings") {
  TempDir tmp;
  std::vector<Sample> samples;
  std::size_t expected = 0;
  for (std::size_t n = 0; n <= 6; ++n) {
    Sample s;
    s.id = "n" + std::to_string(n);
    s.benchmark = Benchmark::MultiAmbiguous;
    s.lang_pair = {"en", "it"};
    s.source = "Sentence " + std::to_string(n) + ".";
    for (std::size_t k = 0; k < n; ++k) s.entities.push_back({"e" + std::to_string(k), true, std::nullopt});
    expected += enumerate_mappings(s.entities).size();
    samples.push_back(s);
  }
  CHECK(expected == 127);
  write_corpus(tmp / "fan.jsonl", samples);
  spit(tmp / "mock.tsv", "*\tFrase.\n");
  TranslateArgs t;
  t.workspace = tmp / "ws";
  t.corpus = tmp / "fan.jsonl";
  t.backend = mock(tmp / "mock.tsv", 4);
  CHECK(cmd_translate(t).record_count == expected);
}

TEST_CASE("translate: replay from cache is byte-identical, offline included") {
  TempDir tmp;
  const auto corpus = write_speaker_corpus(tmp);
  spit(tmp / "mock.tsv", "*use he/him*\tEstoy cansado.\n*use she/her*\t\"Estoy cansada.\"\n");
  spit(tmp / "empty.tsv", "");
  TranslateArgs t;
  t.workspace = tmp / "ws";
  t.corpus = corpus;
  t.backend = mock(tmp / "mock.tsv");
  t.run_id = "first";
  cmd_translate(t);
  t.run_id = "second";
  t.backend = mock(tmp / "empty.tsv", 4);
  t.backend.offline = true;
  cmd_translate(t);
  const Workspace ws(t.workspace);
  CHECK(slurp(ws.records_path("first")) == slurp(ws.records_path("second")));

  // a cache miss offline lands in the record, not as a crash
  t.run_id = "third";
  t.variant = Variant::Baseline;
  cmd_translate(t);
  for (const auto& r : read_records(ws.records_path("third"))) {
    REQUIRE(r.error);
    CHECK(*r.error == "cache miss in offline mode");
  }
}

TEST_CASE("evaluate: nested breakdowns, n/a accuracy and COMET join") {
  TempDir tmp;
  const auto corpus = write_speaker_corpus(tmp);
  spit(tmp / "mock.tsv", "*\tNo tengo idea.\n");
  TranslateArgs t;
  t.workspace = tmp / "ws";
  t.corpus = corpus;
  t.backend = mock(tmp / "mock.tsv");
  const auto run = cmd_translate(t);
  spit(tmp / "comet.tsv", "ms1\t0.5\nms2\t0.7\nunknown\t0.1\n");

  EvaluateArgs e;
  e.workspace = t.workspace;
  e.run_id = run.run_id;
  e.breakdowns = {BreakdownKey::ByGender};
  e.comet = tmp / "comet.tsv";
  const auto s = cmd_evaluate(e);
  CHECK(s.terms.covered == 0);
  CHECK_FALSE(s.terms.accuracy);
  CHECK(*s.comet == doctest::Approx(0.6));
  CHECK(s.comet_matched == 4);
  const auto summary = slurp(Workspace(t.workspace).reports_dir(run.run_id) / "summary.tsv");
  CHECK(summary.find("\t0.0\tn/a\tn/a\tn/a\tn/a\t") != std::string::npos);
  CHECK(summary.ends_with("\t0.6000\n"));
}

TEST_CASE("evaluate on the e2e fixture: nested tables") {
  TempDir tmp;
  const auto corpus = import_gate(tmp.path());
  TranslateArgs t;
  t.workspace = tmp.path();
  t.corpus = corpus;
  t.backend = mock(fixture("e2e/mock_goe.tsv"));
  const auto run = cmd_translate(t);
  CHECK(run.record_count == 12);
  EvaluateArgs e;
  e.workspace = tmp.path();
  e.run_id = run.run_id;
  e.breakdowns = {BreakdownKey::ByEntityCount, BreakdownKey::ByMappingClass};
  const auto s = cmd_evaluate(e);
  const auto& two = s.terms.breakdowns.at("by_entity_count").at(">=2");
  CHECK(*two.breakdowns.at("by_mapping_class").at("uniform").accuracy == 1.0);
  CHECK(*two.breakdowns.at("by_mapping_class").at("mixed").accuracy == 0.5);
  const auto tsv = slurp(Workspace(tmp.path()).reports_dir(run.run_id) / "metrics.tsv");
  CHECK(tsv.find("by_entity_count=>=2/by_mapping_class=mixed\t16\t16\t8\t8\t1.0000\t0.5000\n") != std::string::npos);
  CHECK(tsv.find("by_entity_count=1\t10\t10\t7\t3\t1.0000\t0.7000\n") != std::string::npos);
  CHECK(s.failed == 0);
  REQUIRE(s.bleu);
}

TEST_CASE("lge, sanity and agree commands") {
  TempDir tmp;
  const auto corpus = import_gate(tmp.path());
  TranslateArgs t;
  t.workspace = tmp.path();
  t.corpus = corpus;
  t.backend = mock(fixture("e2e/mock_goe.tsv"));
  const auto run = cmd_translate(t);

  LgeArgs l;
  l.workspace = tmp.path();
  l.run_id = run.run_id;
  l.judge = oracle();
  const auto lge = cmd_lge(l);
  CHECK(lge.rater == "lge:oracle");
  CHECK(*lge.report.acc_all == 0.75);
  CHECK(std::filesystem::exists(lge.judgments));

  SanityArgs sa;
  sa.workspace = tmp.path();
  sa.corpus = corpus;
  sa.judge = oracle();
  const auto good = cmd_sanity(sa);
  CHECK(*good.report.scores.f1 == 1.0);
  CHECK(std::filesystem::exists(good.report_path));
  CHECK(slurp(good.report_path).starts_with("subset\ttp\tfp\tfn\ttn\tprecision\trecall\tf1\nall\t"));
  sa.judge = oracle(true);
  CHECK(*cmd_sanity(sa).report.scores.f1 == 0.0);

  AgreeArgs a;
  a.workspace = tmp.path();
  a.judgments = {lge.judgments};
  a.run_id = run.run_id;
  const auto agree = cmd_agree(a);
  CHECK(agree.raters == std::vector<std::string>{"lge:oracle", "coverage"});
  REQUIRE(agree.pairwise.size() == 1);
  CHECK(agree.pairwise[0].second.n_items == 12);

  AgreeArgs missing = a;
  missing.judgments = {tmp / "judgments/none.jsonl"};
  CHECK_THROWS(cmd_agree(missing));
}

TEST_CASE("agree on the three-rater fixture") {
  TempDir tmp;
  AgreeArgs a;
  a.workspace = tmp.path();
  a.judgments = {fixture("agreement/three_raters.jsonl")};
  const auto s = cmd_agree(a);
  CHECK(s.raters == std::vector<std::string>{"b", "a", "c"});  // first-seen order
  CHECK(s.pairwise.size() == 3);
  REQUIRE(s.fleiss);
  CHECK(std::abs(*s.fleiss->kappa - 4.0 / 9.0) < 1e-9);
  REQUIRE(s.majority);
  CHECK(s.majority->unanimous == 6);
  const auto tsv = slurp(s.report_path);
  CHECK(tsv.starts_with("rater_a\trater_b\tn\tpercent\tkappa\n"));
  CHECK(tsv.find("fleiss\tb,a,c\t10\t\t0.4444\n") != std::string::npos);

  a.raters = {"a"};
  CHECK_THROWS(cmd_agree(a));
}

TEST_CASE("downstream reports are byte-stable on re-run") {
  TempDir tmp;
  const auto corpus = import_gate(tmp.path());
  TranslateArgs t;
  t.workspace = tmp.path();
  t.corpus = corpus;
  t.backend = mock(fixture("e2e/mock_goe.tsv"), 3);
  const auto run = cmd_translate(t);
  const Workspace ws(tmp.path());
  auto reports = [&] {
    EvaluateArgs e{tmp.path(), run.run_id, {BreakdownKey::ByGender}, std::nullopt};
    cmd_evaluate(e);
    LgeArgs l;
    l.workspace = tmp.path();
    l.run_id = run.run_id;
    l.judge = oracle();
    const auto j = cmd_lge(l);
    AgreeArgs a;
    a.workspace = tmp.path();
    a.judgments = {j.judgments};
    a.run_id = run.run_id;
    cmd_agree(a);
    std::string all;
    for (const auto* name : {"metrics.json", "metrics.tsv", "summary.tsv", "lge.json", "lge.tsv", "agreement.json",
                             "agreement.tsv"})
      all += slurp(ws.reports_dir(run.run_id) / name);
    return all + slurp(j.judgments);
  };
  const auto first = reports();
  CHECK(first == reports());
}

TEST_CASE("config file and backend resolution") {
  TempDir tmp;
  spit(tmp / "cfg.json",
       R"({"endpoint":"http://127.0.0.1:9/v1/chat/completions","model":"m1","temperature":0.2,"max_tokens":64,)"
       R"("languages":{"de":"German"}})");
  BackendOptions b;
  b.config = tmp / "cfg.json";
  const auto c = resolve_config(b);
  CHECK(c.params.model_id == "m1");
  CHECK(c.params.temperature == 0.2);
  CHECK(c.languages.name("de") == "German");
  CHECK_THROWS(parse_config(R"({"temperature":-3})"));
  BackendOptions none;
  CHECK_THROWS_AS(resolve_config(none), UsageError);
  BackendOptions no_fixture;
  no_fixture.kind = "mock";
  CHECK_THROWS_AS(make_backend(no_fixture, {}), UsageError);
}
