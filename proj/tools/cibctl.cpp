#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cib/engine.hpp"
#include "cib/errors.hpp"
#include "cib/mcda.hpp"
#include "cib/model.hpp"
#include "cib/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string spec;
  std::string config;
  std::string out = "out";
  std::string ensemble;
  std::string mcda;
  std::string translation;
  std::string identities;
  std::string outcome;
  std::size_t runs = 10000;
  std::uint64_t seed = 0;
  std::size_t workers = cib::default_worker_count();
  std::size_t max_iter = 100;
  std::size_t k = 4;
  std::size_t limit = 1000000;
  double level = 0.95;
};

int report(const cib::PipelineResult& result) {
  for (const auto& a : result.artifacts) std::cout << a.string() << '\n';
  if (result.error) std::cerr << "error: " << *result.error << '\n';
  return result.exit_code;
}

cib::PipelineConfig base_config(const Options& o) {
  cib::PipelineConfig cfg;
  cfg.spec_path = o.spec;
  cfg.run_count = o.runs;
  cfg.master_seed = o.seed;
  cfg.worker_count = o.workers;
  cfg.output_dir = o.out;
  cfg.max_iter = o.max_iter;
  cfg.level = o.level;
  cfg.ensemble_path = o.ensemble;
  cfg.mcda_path = o.mcda;
  cfg.translation_path = o.translation;
  cfg.identity_path = o.identities;
  if (!o.outcome.empty()) cfg.screening.outcome = o.outcome;
  cfg.screening.k = o.k;
  cfg.stages = {false, false, false, false, false};
  return cfg;
}

int cmd_validate(const Options& o) {
  const auto spec = cib::load_study_spec(o.spec);
  const auto findings = cib::validate_study_spec(spec);
  for (const auto& f : findings) {
    std::cout << fmt::format("{} {}: {}\n", cib::to_string(f.severity), f.path, f.message);
  }
  if (cib::has_errors(findings)) return cib::exit_validation;
  std::cout << fmt::format("ok {} ({} descriptors, {} periods)\n", cib::spec_digest(spec), spec.descriptor_count(),
                           spec.time_grid.size());
  return cib::exit_ok;
}

int cmd_enumerate(const Options& o) {
  const auto spec = cib::load_study_spec(o.spec);
  const auto findings = cib::validate_study_spec(spec);
  if (cib::has_errors(findings)) {
    for (const auto& f : findings) std::cerr << fmt::format("{} {}: {}\n", cib::to_string(f.severity), f.path, f.message);
    return cib::exit_validation;
  }
  const auto consistent = cib::enumerate_consistent(spec, spec.cim, o.limit);
  for (const auto& s : consistent) std::cout << cib::format_scenario(spec, s) << '\n';
  std::cerr << fmt::format("{} consistent of {} scenarios\n", consistent.size(), cib::state_space_size(spec));
  return cib::exit_ok;
}

int cmd_mcda(const Options& o) {
  const auto input = cib::load_mcda_input(o.mcda);
  const auto ranking = cib::rank_pathways(input);
  const auto doc = cib::mcda_report(input, ranking);
  for (std::size_t r = 0; r < ranking.order.size(); ++r) {
    const auto p = ranking.order[r];
    std::cout << fmt::format("{} {} {}\n", r + 1, input.pathways[p], ranking.values[p]);
  }
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    std::ofstream(fs::path(o.out) / "mcda_report.json", std::ios::binary) << doc.dump(2) << '\n';
  }
  return cib::exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic cross-impact balance scenario engine"};
  app.set_version_flag("--version", std::string(cib::kToolVersion));
  app.require_subcommand(1);
  Options o;

  auto add_spec = [&](CLI::App* c) { c->add_option("--spec", o.spec, "Study spec (JSON)")->required()->check(CLI::ExistingFile); };
  auto add_run = [&](CLI::App* c) {
    c->add_option("--runs", o.runs, "Monte Carlo runs")->check(CLI::PositiveNumber);
    c->add_option("--seed", o.seed, "Master seed");
    c->add_option("--workers", o.workers, fmt::format("Worker threads (default from {})", cib::kWorkersEnv))->check(CLI::PositiveNumber);
    c->add_option("--max-iter", o.max_iter, "Succession iterations per period")->check(CLI::PositiveNumber);
  };
  auto add_out = [&](CLI::App* c) { c->add_option("--out", o.out, "Output directory"); };
  auto add_level = [&](CLI::App* c) { c->add_option("--level", o.level, "Interval confidence level"); };
  auto add_ensemble = [&](CLI::App* c) { c->add_option("--ensemble", o.ensemble, "Ensemble file (default <out>/ensemble.jsonl)"); };
  auto add_screen = [&](CLI::App* c) {
    c->add_option("--outcome", o.outcome, "Outcome descriptor id")->required();
    c->add_option("--k", o.k, "Candidates to select");
  };

  auto* validate = app.add_subcommand("validate", "Check a study spec");
  add_spec(validate);

  auto* enumerate = app.add_subcommand("enumerate", "List every consistent scenario of a small spec");
  add_spec(enumerate);
  enumerate->add_option("--limit", o.limit, "Largest state space to enumerate");

  auto* simulate = app.add_subcommand("simulate", "Run the ensemble and state-share series");
  add_spec(simulate);
  add_run(simulate);
  add_out(simulate);
  add_level(simulate);

  auto* stats = app.add_subcommand("stats", "State-share series for an existing ensemble");
  add_spec(stats);
  add_out(stats);
  add_level(stats);
  add_ensemble(stats);

  auto* screen = app.add_subcommand("screen", "Screen pathways and select candidates");
  add_spec(screen);
  add_out(screen);
  add_ensemble(screen);
  add_screen(screen);

  auto* mcda = app.add_subcommand("mcda", "Rank pathways by persona-weighted scores");
  mcda->add_option("--mcda", o.mcda, "MCDA input (JSON)")->required()->check(CLI::ExistingFile);
  mcda->add_option("--out", o.out, "Directory for mcda_report.json");

  auto* quantify = app.add_subcommand("quantify", "Translate the selected pathway into model inputs");
  add_spec(quantify);
  add_out(quantify);
  add_ensemble(quantify);
  quantify->add_option("--translation", o.translation, "Translation matrix (JSON)")->required()->check(CLI::ExistingFile);
  quantify->add_option("--identities", o.identities, "Accounting identities (JSON)")->check(CLI::ExistingFile);

  auto* pipeline = app.add_subcommand("pipeline", "Run every enabled stage from a config file");
  pipeline->add_option("--config", o.config, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  auto* runs_opt = pipeline->add_option("--runs", o.runs, "Override run count")->check(CLI::PositiveNumber);
  auto* seed_opt = pipeline->add_option("--seed", o.seed, "Override master seed");
  auto* workers_opt = pipeline->add_option("--workers", o.workers, "Override worker threads")->check(CLI::PositiveNumber);
  auto* out_opt = pipeline->add_option("--out", o.out, "Override output directory");
  auto* level_opt = pipeline->add_option("--level", o.level, "Override interval confidence level");
  auto* iter_opt = pipeline->add_option("--max-iter", o.max_iter, "Override succession iterations")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cib::exit_configuration;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*enumerate) return cmd_enumerate(o);
    if (*mcda) return cmd_mcda(o);

    if (*pipeline) {
      auto cfg = cib::load_pipeline_config(o.config);
      if (*runs_opt) cfg.run_count = o.runs;
      if (*seed_opt) cfg.master_seed = o.seed;
      if (*workers_opt) cfg.worker_count = o.workers;
      if (*out_opt) cfg.output_dir = o.out;
      if (*level_opt) cfg.level = o.level;
      if (*iter_opt) cfg.max_iter = o.max_iter;
      return report(cib::run_pipeline(cfg));
    }

    auto cfg = base_config(o);
    if (*simulate) cfg.stages.simulate = cfg.stages.analytics = true;
    if (*stats) cfg.stages.analytics = true;
    if (*screen) cfg.stages.screen = true;
    if (*quantify) cfg.stages.quantify = true;
    return report(cib::run_pipeline(cfg));
  } catch (const cib::Error& e) {
    std::cerr << fmt::format("error ({}): {}\n", cib::to_string(e.kind()), e.what());
    return cib::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cib::exit_runtime;
  }
}
