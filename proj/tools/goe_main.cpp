#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "goe/annotation_service.hpp"
#include "goe/commands.hpp"

namespace {

goe::AnnotationService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

void add_backend_flags(CLI::App* cmd, goe::BackendOptions& b, bool judge) {
  std::vector<std::string> kinds = {"http", "mock"};
  if (judge) {
    kinds.push_back("oracle");
    kinds.push_back("oracle-inverted");
  }
  cmd->add_option("--backend", b.kind, "Chat backend")->check(CLI::IsMember(kinds))->capture_default_str();
  cmd->add_option("--model", b.model, "Model id (overrides the config file)");
  cmd->add_option("--config", b.config, "Backend config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--mock-fixture", b.mock_fixture, "Canned responses for --backend mock")->check(CLI::ExistingFile);
  cmd->add_option("--concurrency", b.concurrency, "Requests in flight")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_flag("--offline", b.offline, "Serve from cache only; misses fail");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluation harness for gender-controlled machine translation"};
  app.require_subcommand(1);
  std::string workspace = "workspace";
  app.add_option("--workspace", workspace, "Workspace root")->capture_default_str();

  // import
  goe::ImportArgs imp;
  std::string imp_benchmark = "single_ambiguous", imp_format = "auto";
  auto* c_import = app.add_subcommand("import", "Normalize and validate a benchmark file");
  c_import->add_option("--corpus", imp.input, "Raw benchmark file")->required()->check(CLI::ExistingFile);
  c_import->add_option("--benchmark", imp_benchmark, "Benchmark family")
      ->check(CLI::IsMember({"single_ambiguous", "multi_ambiguous", "mixed", "contextual"}))
      ->capture_default_str();
  c_import->add_option("--target", imp.target_lang, "Target language code")->required();
  c_import->add_option("--format", imp_format, "Raw file layout")
      ->check(CLI::IsMember({"auto", "normalized", "gate", "mustshe", "winomt", "mtgeneval"}))
      ->capture_default_str();
  c_import->add_option("--sidecar", imp.sidecar, "Entity annotations")->check(CLI::ExistingFile);
  c_import->add_option("--wordlist", imp.wordlist, "Gender word list (word<TAB>M|F)")->check(CLI::ExistingFile);
  c_import->add_option("--out", imp.output, "Output corpus path");

  // translate
  goe::TranslateArgs tr;
  std::string tr_variant = "goe";
  auto* c_translate = app.add_subcommand("translate", "Render prompts, query the backend, store records");
  c_translate->add_option("--corpus", tr.corpus, "Normalized corpus")->required()->check(CLI::ExistingFile);
  c_translate->add_option("--variant", tr_variant, "Prompt variant")
      ->check(CLI::IsMember({"baseline", "goe", "goe_speaker", "goe_amb", "goe_full", "igoe", "prefix"}))
      ->capture_default_str();
  c_translate->add_option("--run-id", tr.run_id, "Run id");
  c_translate->add_option("--shots", tr.shots, "Few-shot corpus for igoe")->check(CLI::ExistingFile);
  add_backend_flags(c_translate, tr.backend, false);

  // evaluate
  goe::EvaluateArgs ev;
  std::vector<std::string> ev_breakdowns;
  auto* c_evaluate = app.add_subcommand("evaluate", "Coverage, accuracy and BLEU for a run");
  c_evaluate->add_option("--run-id", ev.run_id, "Run id")->required();
  c_evaluate->add_option("--breakdowns", ev_breakdowns, "by_gender, by_entity_count, by_mapping_class (nested in order)")
      ->delimiter(',')
      ->check(CLI::IsMember({"by_gender", "by_entity_count", "by_mapping_class"}));
  c_evaluate->add_option("--comet", ev.comet, "External COMET scores (sample_id<TAB>score)")->check(CLI::ExistingFile);

  // lge
  goe::LgeArgs lg;
  auto* c_lge = app.add_subcommand("lge", "Reference-free judging of a run");
  c_lge->add_option("--run-id", lg.run_id, "Run id")->required();
  c_lge->add_option("--rater", lg.rater, "Rater name written to the judgment log");
  add_backend_flags(c_lge, lg.judge, true);

  // sanity
  goe::SanityArgs sa;
  auto* c_sanity = app.add_subcommand("sanity", "Score a judge on correct and gender-swapped references");
  c_sanity->add_option("--corpus", sa.corpus, "Normalized corpus")->required()->check(CLI::ExistingFile);
  c_sanity->add_flag("--all-negatives", sa.all_negatives, "Use every other reference as a negative");
  add_backend_flags(c_sanity, sa.judge, true);

  // agree
  goe::AgreeArgs ag;
  auto* c_agree = app.add_subcommand("agree", "Agreement between raters");
  c_agree->add_option("--judgments", ag.judgments, "Judgment logs");
  c_agree->add_option("--run-id", ag.run_id, "Add the run's coverage-based rater");
  c_agree->add_option("--raters", ag.raters, "Raters to compare")->delimiter(',');

  // serve
  std::string sv_run, sv_host = "127.0.0.1";
  int sv_port = 8080;
  std::optional<std::filesystem::path> sv_assets;
  auto* c_serve = app.add_subcommand("serve", "Local annotation service");
  c_serve->add_option("--run-id", sv_run, "Run id")->required();
  c_serve->add_option("--port", sv_port, "Port")->capture_default_str();
  c_serve->add_option("--host", sv_host, "Bind address")->capture_default_str();
  c_serve->add_option("--assets", sv_assets, "Built UI assets")->check(CLI::ExistingDirectory);

  // cache-compact
  std::filesystem::path cc_file;
  auto* c_compact = app.add_subcommand("cache-compact", "Drop duplicate cache lines");
  c_compact->add_option("cache", cc_file, "Cache file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*c_import) {
      imp.workspace = workspace;
      imp.benchmark = goe::benchmark_from_string(imp_benchmark);
      imp.format = goe::source_format_from_string(imp_format);
      const auto s = goe::cmd_import(imp);
      std::cout << s.corpus.string() << "\t" << s.samples << " samples\t" << s.errors << " errors\t" << s.warnings
                << " warnings\n";
    } else if (*c_translate) {
      tr.workspace = workspace;
      tr.variant = goe::variant_from_string(tr_variant);
      const auto m = goe::cmd_translate(tr);
      std::cout << m.run_id << "\t" << m.record_count << " records\n";
    } else if (*c_evaluate) {
      ev.workspace = workspace;
      for (const auto& b : ev_breakdowns) ev.breakdowns.push_back(goe::breakdown_key_from_string(b));
      std::cout << goe::render_summary_tsv(goe::cmd_evaluate(ev));
    } else if (*c_lge) {
      lg.workspace = workspace;
      const auto s = goe::cmd_lge(lg);
      std::cout << s.judgments.string() << "\n";
    } else if (*c_sanity) {
      sa.workspace = workspace;
      std::cout << goe::render_sanity_tsv(goe::cmd_sanity(sa).report);
    } else if (*c_agree) {
      ag.workspace = workspace;
      std::cout << goe::render_agreement_tsv(goe::cmd_agree(ag));
    } else if (*c_serve) {
      goe::AnnotationService service(goe::Workspace(workspace), sv_run);
      const int port = service.bind(sv_host, sv_port, sv_assets);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << service.tasks().size() << " tasks on http://" << sv_host << ":" << port << "\n";
      service.listen();
      g_service = nullptr;
    } else if (*c_compact) {
      std::cout << goe::cmd_cache_compact(cc_file) << " entries\n";
    }
  } catch (const goe::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
