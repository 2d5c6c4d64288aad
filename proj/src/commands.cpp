#include "goe/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

#include "goe/prompting.hpp"
#include "goe/text.hpp"
#include "goe/wordlist.hpp"

namespace goe {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

Config resolve_config(const BackendOptions& opts) {
  Config c = opts.config ? load_config(*opts.config) : Config{};
  if (opts.model) {
    c.params.model_id = *opts.model;
  } else if (!opts.config) {
    if (opts.kind == "http") throw UsageError("the http backend needs --model or --config");
    c.params.model_id = opts.kind;
  }
  if (opts.kind == "http" && c.params.endpoint.empty() && !opts.offline)
    throw UsageError("the http backend needs an endpoint in --config");
  if (opts.concurrency < 1) throw UsageError("--concurrency must be at least 1");
  validate(c.params);
  return c;
}

std::shared_ptr<ChatBackend> make_backend(const BackendOptions& opts, const std::vector<Sample>& samples) {
  if (opts.kind == "http") {
    const char* token = std::getenv(kTokenEnvVar);
    return std::make_shared<HttpChatBackend>(token ? token : "");
  }
  if (opts.kind == "mock") {
    if (!opts.mock_fixture) throw UsageError("the mock backend needs --mock-fixture");
    return std::make_shared<MockBackend>(MockBackend::load(*opts.mock_fixture));
  }
  if (opts.kind == "oracle") return make_oracle_judge(samples, false);
  if (opts.kind == "oracle-inverted") return make_oracle_judge(samples, true);
  throw UsageError("unknown backend '" + opts.kind + "'");
}

namespace {

std::string corpus_name(const fs::path& corpus) { return corpus.stem().string(); }

CompletionClient make_client(const Workspace& ws, const BackendOptions& opts, const Config& config,
                             const fs::path& corpus, const std::vector<Sample>& samples) {
  auto cache = std::make_shared<ResponseCache>(ws.cache_path(config.params.model_id, corpus_name(corpus)));
  ClientOptions co;
  co.offline = opts.offline;
  if (opts.sleep) co.retry.sleep = opts.sleep;
  return CompletionClient(make_backend(opts, samples), std::move(cache), co);
}

std::string count_line(const char* what, std::size_t n) { return std::string(what) + "\t" + std::to_string(n); }

}  // namespace

// ---------------------------------------------------------------------------

ImportSummary cmd_import(const ImportArgs& args) {
  if (args.target_lang.empty()) throw UsageError("--target is required");
  Workspace ws(args.workspace);
  std::optional<GenderWordList> words;
  if (args.wordlist) words = GenderWordList::load(*args.wordlist);

  ImportOptions opts;
  opts.benchmark = args.benchmark;
  opts.lang_pair.target = args.target_lang;
  opts.format = args.format;
  opts.sidecar = args.sidecar;
  opts.words = words ? &*words : nullptr;
  const ImportResult result = import_corpus(args.input, opts);

  ImportSummary summary;
  summary.corpus = args.output ? *args.output : ws.corpora_dir() / (args.input.stem().string() + ".jsonl");
  summary.issues = summary.corpus;
  summary.issues += ".issues.tsv";
  summary.samples = result.samples.size();
  write_corpus(summary.corpus, result.samples);

  std::string report = "sample_id\tseverity\tmessage\n";
  for (const auto& issue : result.issues) {
    const bool error = issue.severity == Severity::Error;
    (error ? summary.errors : summary.warnings)++;
    report += issue.sample_id + "\t" + (error ? "error" : "warning") + "\t" + issue.message + "\n";
  }
  write_file_atomic(summary.issues, report);
  return summary;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<GenderMapping> controlled_mappings(const Sample& s) {
  if (s.ambiguous_count() == 0) return {s.gold_mapping()};
  return enumerate_mappings(s.entities);
}

}  // namespace

std::vector<BatchJob> plan_jobs(const std::vector<Sample>& samples, Variant variant, const LanguageNames& langs,
                                const std::vector<FewShotExample>& shots) {
  if (variant == Variant::IGoe && shots.empty()) throw UsageError("the igoe variant needs --shots");
  std::vector<BatchJob> jobs;
  for (const auto& s : samples) {
    switch (variant) {
      case Variant::Baseline: {
        GenderMapping designated;
        if (s.benchmark == Benchmark::Contextual) designated = s.gold_mapping();
        if (s.benchmark == Benchmark::Mixed) designated = derive_mixed_mapping(s, MixedVariant::Full);
        jobs.push_back({s.id, designated, render_baseline(s, langs)});
        break;
      }
      case Variant::Goe:
      case Variant::GoeSpeaker: {
        const auto style = variant == Variant::Goe ? AnnotationStyle::EntityList : AnnotationStyle::Speaker;
        for (auto& m : controlled_mappings(s)) jobs.push_back({s.id, m, render_goe(s, m, style, langs)});
        break;
      }
      case Variant::GoeAmb:
      case Variant::GoeFull: {
        const auto full = derive_mixed_mapping(s, MixedVariant::Full);
        const auto prompted =
            variant == Variant::GoeAmb ? derive_mixed_mapping(s, MixedVariant::AmbOnly) : full;
        jobs.push_back({s.id, full, render_goe(s, prompted, AnnotationStyle::EntityList, langs)});
        break;
      }
      case Variant::IGoe:
        jobs.push_back({s.id, s.gold_mapping(), render_igoe_fewshot(s, shots, langs)});
        break;
      case Variant::Prefix:
        for (auto& m : controlled_mappings(s)) {
          if (m.size() != 1) throw PromptError(s.id + ": gender prefixing needs exactly one controlled entity");
          Sample prefixed = s;
          prefixed.source = render_prefix(s.source, m.entries().front().second);
          jobs.push_back({s.id, m, render_baseline(prefixed, langs)});
        }
        break;
    }
  }
  return jobs;
}

RunManifest cmd_translate(const TranslateArgs& args) {
  Workspace ws(args.workspace);
  if (args.backend.kind == "oracle" || args.backend.kind == "oracle-inverted")
    throw UsageError("oracle backends only judge; use mock or http to translate");
  const Config config = resolve_config(args.backend);
  const auto samples = read_corpus(args.corpus);
  std::vector<FewShotExample> shots;
  if (args.shots) shots = fewshot_from_samples(read_corpus(*args.shots));
  if (args.variant == Variant::IGoe && args.shots && shots.empty())
    throw UsageError("--shots corpus has no usable single-entity samples");

  RunManifest m;
  m.run_id = args.run_id ? *args.run_id
                         : path_component(std::string(to_string(args.variant)) + "-" + config.params.model_id + "-" +
                                          corpus_name(args.corpus));
  if (ws.has_run(m.run_id)) throw UsageError("run '" + m.run_id + "' already exists; pass another --run-id");
  m.corpus = fs::absolute(args.corpus).lexically_normal().string();
  m.benchmark = samples.empty() ? Benchmark::SingleAmbiguous : samples.front().benchmark;
  m.variant = args.variant;
  m.params = config.params;
  m.backend = args.backend.kind;
  if (args.shots) m.shots = fs::absolute(*args.shots).lexically_normal().string();
  m.started_at = utc_now_iso8601();

  const auto jobs = plan_jobs(samples, args.variant, config.languages, shots);
  CompletionClient client = make_client(ws, args.backend, config, args.corpus, samples);
  const Extractor extractor = args.variant == Variant::IGoe ? Extractor(extract_igoe_translation)
                                                            : Extractor(extract_translation);
  const auto records = run_batch(jobs, config.params, args.backend.concurrency, client, extractor);

  write_records(ws.records_path(m.run_id), records);
  m.record_count = records.size();
  m.finished_at = utc_now_iso8601();
  write_file_atomic(ws.manifest_path(m.run_id), to_json(m).dump(2) + "\n");
  return m;
}

std::vector<Sample> load_run_corpus(const Workspace&, const RunManifest& manifest) {
  return read_corpus(manifest.corpus);
}

// ---------------------------------------------------------------------------

namespace {

std::map<std::string, double> read_comet(const fs::path& path) {
  std::map<std::string, double> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split(read_file(path), '\n')) {
    ++line_no;
    if (text::is_blank(line)) continue;
    const auto cols = text::split(line, '\t');
    try {
      if (cols.size() != 2) throw std::invalid_argument("expected 2 columns");
      std::size_t used = 0;
      const double v = std::stod(cols[1], &used);
      if (used != text::trim(cols[1]).size() && used != cols[1].size()) throw std::invalid_argument("bad number");
      out[cols[0]] = v;
    } catch (const std::exception& e) {
      if (line_no == 1) continue;  // header
      throw CorpusError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

EvaluationSummary evaluate_run(const std::vector<TranslationRecord>& records, const std::vector<Sample>& samples,
                               const std::vector<BreakdownKey>& breakdowns, const std::optional<fs::path>& comet) {
  std::map<std::string, const Sample*> index;
  for (const auto& s : samples) index.emplace(s.id, &s);

  EvaluationSummary sum;
  std::vector<TermOutcome> outcomes;
  std::vector<std::string> hyps, refs;
  auto score = [&](const TranslationRecord& rec, const Reference& ref) {
    auto o = score_terms(rec, ref);
    outcomes.insert(outcomes.end(), o.begin(), o.end());
    if (!text::is_blank(ref.text)) {
      hyps.push_back(rec.translation);
      refs.push_back(ref.text);
    }
  };
  for (const auto& rec : records) {
    ++sum.records;
    if (rec.error) {
      ++sum.failed;
      continue;
    }
    if (rec.degraded) ++sum.degraded;
    const auto it = index.find(rec.sample_id);
    if (it == index.end()) throw CorpusError("record for unknown sample '" + rec.sample_id + "'");
    if (rec.mapping.empty()) {
      for (const auto& ref : it->second->references) score(rec, ref);
    } else if (const Reference* ref = it->second->find_reference(rec.mapping)) {
      score(rec, *ref);
    }
  }
  sum.terms = aggregate(outcomes, breakdowns);
  sum.flat = aggregate(outcomes);
  for (auto key : {BreakdownKey::ByGender, BreakdownKey::ByEntityCount, BreakdownKey::ByMappingClass}) {
    auto one = aggregate(outcomes, {key});
    sum.flat.breakdowns.merge(one.breakdowns);
  }
  if (!hyps.empty()) sum.bleu = bleu(hyps, refs);

  if (comet) {
    const auto scores = read_comet(*comet);
    double total = 0.0;
    for (const auto& rec : records) {
      if (rec.error) continue;
      if (auto s = scores.find(rec.sample_id); s != scores.end()) {
        total += s->second;
        ++sum.comet_matched;
      }
    }
    if (sum.comet_matched) sum.comet = total / static_cast<double>(sum.comet_matched);
  }
  return sum;
}

ojson to_json(const CoverageAccuracyReport& r) {
  ojson j;
  j["total"] = r.total;
  j["covered"] = r.covered;
  j["correct"] = r.correct;
  j["wrong"] = r.wrong;
  j["coverage"] = r.coverage ? json(*r.coverage) : json(nullptr);
  j["accuracy"] = r.accuracy ? json(*r.accuracy) : json(nullptr);
  if (!r.breakdowns.empty()) {
    ojson b = ojson::object();
    for (const auto& [name, partition] : r.breakdowns) {
      ojson p = ojson::object();
      for (const auto& label : partition_labels(breakdown_key_from_string(name)))
        if (auto it = partition.find(label); it != partition.end()) p[label] = to_json(it->second);
      b[name] = std::move(p);
    }
    j["breakdowns"] = std::move(b);
  }
  return j;
}

namespace {

void metrics_rows(const CoverageAccuracyReport& r, const std::string& path, std::string& out) {
  out += path + "\t" + std::to_string(r.total) + "\t" + std::to_string(r.covered) + "\t" + std::to_string(r.correct) +
         "\t" + std::to_string(r.wrong) + "\t" + format_ratio(r.coverage) + "\t" + format_ratio(r.accuracy) + "\n";
  for (const auto& [name, partition] : r.breakdowns)
    for (const auto& label : partition_labels(breakdown_key_from_string(name)))
      if (auto it = partition.find(label); it != partition.end())
        metrics_rows(it->second, (path == "all" ? "" : path + "/") + name + "=" + label, out);
}

std::optional<double> partition_accuracy(const CoverageAccuracyReport& r, BreakdownKey key, const std::string& label) {
  const auto b = r.breakdowns.find(std::string(to_string(key)));
  if (b == r.breakdowns.end()) return std::nullopt;
  const auto p = b->second.find(label);
  return p == b->second.end() ? std::nullopt : p->second.accuracy;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

}  // namespace

std::string render_metrics_tsv(const EvaluationSummary& s) {
  std::string out = "node\ttotal\tcovered\tcorrect\twrong\tcoverage\taccuracy\n";
  metrics_rows(s.terms, "all", out);
  return out;
}

std::string render_summary_tsv(const EvaluationSummary& s) {
  const auto& f = s.flat;
  std::string out = "records\tfailed\tdegraded\tCov.\tAcc\tAcc_M\tAcc_F\tAcc_1\tAcc_>=2\tAcc_uniform\tAcc_mixed\tBLEU\tCOMET\n";
  out += std::to_string(s.records) + "\t" + std::to_string(s.failed) + "\t" + std::to_string(s.degraded);
  for (const auto& v : {f.coverage, f.accuracy, partition_accuracy(f, BreakdownKey::ByGender, "M"),
                        partition_accuracy(f, BreakdownKey::ByGender, "F"),
                        partition_accuracy(f, BreakdownKey::ByEntityCount, "1"),
                        partition_accuracy(f, BreakdownKey::ByEntityCount, ">=2"),
                        partition_accuracy(f, BreakdownKey::ByMappingClass, "uniform"),
                        partition_accuracy(f, BreakdownKey::ByMappingClass, "mixed")})
    out += "\t" + format_percent(v);
  out += "\t" + (s.bleu ? fixed(s.bleu->score, 2) : std::string("n/a"));
  out += "\t" + (s.comet ? fixed(*s.comet, 4) : std::string("n/a"));
  return out + "\n";
}

EvaluationSummary cmd_evaluate(const EvaluateArgs& args) {
  Workspace ws(args.workspace);
  const auto manifest = ws.read_manifest(args.run_id);
  const auto samples = load_run_corpus(ws, manifest);
  const auto records = read_records(ws.records_path(args.run_id));
  auto sum = evaluate_run(records, samples, args.breakdowns, args.comet);

  ojson j;
  j["run_id"] = args.run_id;
  j["records"] = sum.records;
  j["failed"] = sum.failed;
  j["degraded"] = sum.degraded;
  j["terms"] = to_json(sum.terms);
  if (sum.bleu) {
    j["bleu"] = {{"score", sum.bleu->score},
                 {"precisions", sum.bleu->ngram_precisions},
                 {"brevity_penalty", sum.bleu->brevity_penalty},
                 {"hyp_len", sum.bleu->hyp_len},
                 {"ref_len", sum.bleu->ref_len},
                 {"signature", "nrefs:1|case:mixed|eff:no|tok:13a|smooth:exp"}};
  } else {
    j["bleu"] = nullptr;
  }
  j["comet"] = sum.comet ? json(*sum.comet) : json(nullptr);
  j["comet_matched"] = sum.comet_matched;

  const auto dir = ws.reports_dir(args.run_id);
  write_file_atomic(dir / "metrics.json", j.dump(2) + "\n");
  write_file_atomic(dir / "metrics.tsv", render_metrics_tsv(sum));
  write_file_atomic(dir / "summary.tsv", render_summary_tsv(sum));
  return sum;
}

// ---------------------------------------------------------------------------

LgeSummary cmd_lge(const LgeArgs& args) {
  Workspace ws(args.workspace);
  const auto manifest = ws.read_manifest(args.run_id);
  const auto samples = load_run_corpus(ws, manifest);
  const auto records = read_records(ws.records_path(args.run_id));
  const Config config = resolve_config(args.judge);
  CompletionClient client = make_client(ws, args.judge, config, manifest.corpus, samples);

  LgeSummary sum;
  sum.rater = args.rater ? *args.rater : "lge:" + config.params.model_id;
  const JudgeConfig jc{config.params, args.judge.concurrency, sum.rater};
  const auto run = evaluate_outputs(records, samples, client, jc);
  sum.report = run.report;

  std::vector<JudgmentRecord> judgments;
  judgments.reserve(run.results.size());
  for (const auto& r : run.results) judgments.push_back(to_judgment(r, sum.rater));
  sum.judgments = ws.judgments_dir() / (args.run_id + "__" + path_component(sum.rater) + ".jsonl");
  std::string log;
  for (const auto& jr : judgments) log += to_json(jr).dump() + "\n";
  write_file_atomic(sum.judgments, log);

  const auto& r = sum.report;
  ojson j;
  j["run_id"] = args.run_id;
  j["rater"] = sum.rater;
  j["n_covered"] = r.n_covered;
  j["n_not_covered"] = r.n_not_covered;
  j["acc_covered"] = r.acc_covered ? json(*r.acc_covered) : json(nullptr);
  j["acc_not_covered"] = r.acc_not_covered ? json(*r.acc_not_covered) : json(nullptr);
  j["acc_all"] = r.acc_all ? json(*r.acc_all) : json(nullptr);
  j["parse_failures"] = r.parse_failures;
  j["skipped"] = r.skipped;
  std::string tsv = "rater\tn_covered\tn_not_covered\tAcc_C\tAcc_N.C\tAcc_All\tparse_failures\tskipped\n";
  tsv += sum.rater + "\t" + std::to_string(r.n_covered) + "\t" + std::to_string(r.n_not_covered) + "\t" +
         format_percent(r.acc_covered) + "\t" + format_percent(r.acc_not_covered) + "\t" + format_percent(r.acc_all) +
         "\t" + std::to_string(r.parse_failures) + "\t" + std::to_string(r.skipped) + "\n";
  const auto dir = ws.reports_dir(args.run_id);
  write_file_atomic(dir / "lge.json", j.dump(2) + "\n");
  write_file_atomic(dir / "lge.tsv", tsv);
  return sum;
}

std::string render_sanity_tsv(const SanityReport& r) {
  std::string out = "subset\ttp\tfp\tfn\ttn\tprecision\trecall\tf1\n";
  auto row = [&](const std::string& name, const ClassificationScores& s) {
    out += name + "\t" + std::to_string(s.tp) + "\t" + std::to_string(s.fp) + "\t" + std::to_string(s.fn) + "\t" +
           std::to_string(s.tn) + "\t" + format_ratio(s.precision) + "\t" + format_ratio(s.recall) + "\t" +
           format_ratio(s.f1) + "\n";
  };
  row("all", r.scores);
  for (const auto& [key, s] : r.per_subset)
    row("entities=" + std::to_string(key.first) + "/" + std::string(to_string(key.second)), s);
  out += count_line("parse_failures", r.parse_failures) + "\n";
  return out;
}

SanitySummary cmd_sanity(const SanityArgs& args) {
  Workspace ws(args.workspace);
  const auto samples = read_corpus(args.corpus);
  const Config config = resolve_config(args.judge);
  CompletionClient client = make_client(ws, args.judge, config, args.corpus, samples);
  const JudgeConfig jc{config.params, args.judge.concurrency, "lge:" + config.params.model_id};
  const auto run = sanity_check(samples, client, jc, args.all_negatives);

  SanitySummary sum;
  sum.report = run.report;
  sum.report_path = ws.root() / "reports" /
                    ("sanity__" + path_component(config.params.model_id) + "__" + corpus_name(args.corpus) + ".tsv");
  write_file_atomic(sum.report_path, render_sanity_tsv(sum.report));
  return sum;
}

// ---------------------------------------------------------------------------

AgreeSummary cmd_agree(const AgreeArgs& args) {
  Workspace ws(args.workspace);
  std::vector<JudgmentRecord> all;
  for (const auto& path : args.judgments) {
    if (!fs::exists(path)) throw std::runtime_error("missing judgment log " + path.string());
    auto log = read_judgment_log(path);
    all.insert(all.end(), log.begin(), log.end());
  }
  if (args.run_id) {
    const auto manifest = ws.read_manifest(*args.run_id);
    const auto cov = coverage_judgments(read_records(ws.records_path(*args.run_id)), load_run_corpus(ws, manifest));
    all.insert(all.end(), cov.begin(), cov.end());
  }
  if (all.empty()) throw UsageError("no judgments given");

  const auto matrix = JudgmentMatrix::from_log(all);
  AgreeSummary sum;
  sum.raters = args.raters.empty() ? matrix.raters() : args.raters;
  if (sum.raters.size() < 2) throw AgreementError("agreement needs at least two raters");
  for (const auto& r : sum.raters)
    if (matrix.labels_of(r).empty()) throw AgreementError("rater '" + r + "' has no labels");

  for (std::size_t a = 0; a < sum.raters.size(); ++a)
    for (std::size_t b = a + 1; b < sum.raters.size(); ++b) {
      AgreementReport rep;
      try {
        rep = pairwise_agreement(matrix.labels_of(sum.raters[a]), matrix.labels_of(sum.raters[b]));
      } catch (const AgreementError&) {
        rep.n_items = 0;
      }
      sum.pairwise.push_back({{sum.raters[a], sum.raters[b]}, rep});
    }
  try {
    sum.fleiss = fleiss_kappa(matrix, sum.raters);
  } catch (const AgreementError&) {
  }
  if (sum.raters.size() >= 3 && sum.raters.size() % 2 == 1) sum.majority = majority_vote(matrix, sum.raters);

  ojson j;
  j["raters"] = sum.raters;
  ojson pairs = ojson::array();
  for (const auto& [names, rep] : sum.pairwise) {
    ojson p;
    p["a"] = names.first;
    p["b"] = names.second;
    p["n_items"] = rep.n_items;
    p["dropped"] = rep.dropped;
    p["percent"] = rep.n_items ? json(rep.percent) : json(nullptr);
    p["kappa"] = rep.kappa ? json(*rep.kappa) : json(nullptr);
    pairs.push_back(std::move(p));
  }
  j["pairwise"] = std::move(pairs);
  if (sum.fleiss) {
    j["fleiss"] = {{"kappa", sum.fleiss->kappa ? json(*sum.fleiss->kappa) : json(nullptr)},
                   {"n_items", sum.fleiss->n_items},
                   {"dropped", sum.fleiss->dropped}};
  }
  if (sum.majority) {
    ojson labels = ojson::object();
    for (const auto& item : matrix.items())
      if (auto it = sum.majority->labels.find(item); it != sum.majority->labels.end())
        labels[item] = std::string(to_string(it->second));
    j["majority"] = {{"unanimous", sum.majority->unanimous},
                     {"dropped", sum.majority->dropped},
                     {"labels", std::move(labels)}};
  }

  const fs::path dir = args.run_id ? ws.reports_dir(*args.run_id) : ws.root() / "reports";
  sum.report_path = dir / "agreement.tsv";
  write_file_atomic(dir / "agreement.json", j.dump(2) + "\n");
  write_file_atomic(sum.report_path, render_agreement_tsv(sum));
  return sum;
}

std::string render_agreement_tsv(const AgreeSummary& s) {
  std::string out = "rater_a\trater_b\tn\tpercent\tkappa\n";
  for (const auto& [names, rep] : s.pairwise) {
    out += names.first + "\t" + names.second + "\t" + std::to_string(rep.n_items) + "\t" +
           format_percent(rep.n_items ? std::optional<double>(rep.percent) : std::nullopt) + "\t" +
           format_ratio(rep.kappa) + "\n";
  }
  if (s.fleiss)
    out += "fleiss\t" + text::join(s.raters, ",") + "\t" + std::to_string(s.fleiss->n_items) + "\t\t" +
           format_ratio(s.fleiss->kappa) + "\n";
  if (s.majority)
    out += "majority\t" + text::join(s.raters, ",") + "\t" + std::to_string(s.majority->labels.size()) + "\t" +
           count_line("unanimous", s.majority->unanimous) + "\n";
  return out;
}

std::size_t cmd_cache_compact(const fs::path& cache_file) {
  if (!fs::exists(cache_file)) throw std::runtime_error("no cache file " + cache_file.string());
  ResponseCache cache(cache_file);
  return cache.compact();
}

}  // namespace goe
