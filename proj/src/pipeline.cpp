#include "cib/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "cib/analytics.hpp"
#include "cib/errors.hpp"
#include "cib/hash.hpp"
#include "cib/mcda.hpp"
#include "cib/model.hpp"
#include "cib/quantifier.hpp"
#include "cib/simulator.hpp"

namespace cib {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const Error& error) noexcept {
  switch (error.kind()) {
    case ErrorKind::parse:
    case ErrorKind::reference:
    case ErrorKind::range:
    case ErrorKind::structure:
      return exit_validation;
    case ErrorKind::configuration:
    case ErrorKind::io:
      return exit_configuration;
    default:
      return exit_runtime;
  }
}

std::size_t default_worker_count(std::size_t fallback) {
  if (const char* env = std::getenv(kWorkersEnv)) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
  }
  return fallback;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open pipeline config");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), e.what());
  }
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : (base / p).lexically_normal(); };

  PipelineConfig cfg;
  try {
    cfg.spec_path = resolve(doc.at("spec").get<std::string>());
    cfg.run_count = doc.value("runs", cfg.run_count);
    cfg.master_seed = doc.value("seed", cfg.master_seed);
    cfg.worker_count = doc.value("workers", default_worker_count(cfg.worker_count));
    cfg.output_dir = resolve(doc.value("out", std::string("out")));
    cfg.max_iter = doc.value("max_iter", cfg.max_iter);
    cfg.level = doc.value("level", cfg.level);
    if (doc.contains("stages")) {
      const auto& s = doc["stages"];
      cfg.stages.simulate = s.value("simulate", true);
      cfg.stages.analytics = s.value("analytics", true);
      cfg.stages.screen = s.value("screen", true);
      cfg.stages.mcda = s.value("mcda", true);
      cfg.stages.quantify = s.value("quantify", true);
    }
    if (doc.contains("ensemble")) cfg.ensemble_path = resolve(doc["ensemble"].get<std::string>());
    if (doc.contains("mcda")) cfg.mcda_path = resolve(doc["mcda"].get<std::string>());
    if (doc.contains("translation")) cfg.translation_path = resolve(doc["translation"].get<std::string>());
    if (doc.contains("identities")) cfg.identity_path = resolve(doc["identities"].get<std::string>());
    if (doc.contains("screening")) {
      const auto& s = doc["screening"];
      auto& out = cfg.screening;
      if (s.contains("outcome")) out.outcome = s["outcome"].get<std::string>();
      out.higher_is_better = s.value("higher_is_better", out.higher_is_better);
      out.backsliding_all_descriptors = s.value("backsliding_all_descriptors", out.backsliding_all_descriptors);
      out.late_rush_steps = s.value("late_rush_steps", out.late_rush_steps);
      out.discontinuity_steps = s.value("discontinuity_steps", out.discontinuity_steps);
      out.k = s.value("k", out.k);
      if (s.contains("best_outcome_state")) out.best_outcome_state = s["best_outcome_state"].get<std::string>();
      if (s.contains("endpoint_rules")) out.endpoint_rules = s["endpoint_rules"];
    }
  } catch (const json::exception& e) {
    throw ConfigError(path.string(), e.what());
  }
  if (cfg.run_count < 1) throw ConfigError("runs", "run count must be at least 1");
  return cfg;
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot read artifact");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {}

  fs::path write(const std::string& stage, const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot write artifact");
    out << content;
    if (!out) throw IoError(path.string(), "write failed");
    stage_artifacts(stage)[name] = content_hash(content);
    written_.push_back(path);
    return path;
  }

  json& stage_artifacts(const std::string& stage) {
    for (auto& s : stages_) {
      if (s["stage"] == stage) return s["artifacts"];
    }
    stages_.push_back({{"stage", stage}, {"artifacts", json::object()}});
    return stages_.back()["artifacts"];
  }

  const json& stages() const { return stages_; }
  const std::vector<fs::path>& written() const { return written_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  json stages_ = json::array();
  std::vector<fs::path> written_;
};

json findings_json(const std::vector<Finding>& findings) {
  json out = json::array();
  for (const auto& f : findings) out.push_back({{"severity", to_string(f.severity)}, {"path", f.path}, {"message", f.message}});
  return out;
}

std::string shares_csv(const StudySpec& spec, const std::vector<StateShareSeries>& series) {
  std::string out = "descriptor,period,state,count,share,low,high\n";
  for (const auto& s : series) {
    const auto& d = spec.descriptors[spec.descriptor_index(s.descriptor_id)];
    for (std::size_t t = 0; t < s.periods.size(); ++t) {
      for (std::size_t l = 0; l < s.cells[t].size(); ++l) {
        const auto& c = s.cells[t][l];
        out += fmt::format("{},{},{},{},{},{},{}\n", d.id, s.periods[t], d.states[l].label, c.count, c.share, c.interval.low,
                           c.interval.high);
      }
    }
  }
  return out;
}

json shares_json(const StudySpec& spec, const std::vector<StateShareSeries>& series, double level) {
  json out{{"level", level}, {"series", json::array()}};
  for (const auto& s : series) {
    const auto& d = spec.descriptors[spec.descriptor_index(s.descriptor_id)];
    json labels = json::array();
    for (const auto& st : d.states) labels.push_back(st.label);
    json share = json::array(), low = json::array(), high = json::array();
    for (const auto& row : s.cells) {
      json a = json::array(), b = json::array(), c = json::array();
      for (const auto& cell : row) {
        a.push_back(cell.share);
        b.push_back(cell.interval.low);
        c.push_back(cell.interval.high);
      }
      share.push_back(std::move(a));
      low.push_back(std::move(b));
      high.push_back(std::move(c));
    }
    out["trials"] = s.trials;
    out["series"].push_back({{"descriptor", d.id},
                             {"states", std::move(labels)},
                             {"periods", s.periods},
                             {"share", std::move(share)},
                             {"low", std::move(low)},
                             {"high", std::move(high)}});
  }
  return out;
}

json pathway_json(const StudySpec& spec, const Pathway& p) {
  json states = json::array();
  json labelled = json::array();
  for (const auto& e : p.entries) {
    states.push_back(e.scenario.states);
    labelled.push_back({{"period", e.period}, {"scenario", format_scenario(spec, e.scenario)}});
  }
  return json{{"states", std::move(states)}, {"labelled", std::move(labelled)}};
}

Pathway pathway_from_json(const json& states, const std::vector<int>& grid) {
  Pathway p;
  for (std::size_t t = 0; t < states.size() && t < grid.size(); ++t) {
    p.entries.push_back({grid[t], Scenario{states[t].get<std::vector<int>>()}});
  }
  return p;
}

ScreeningConfig resolve_screening(const StudySpec& spec, const ScreeningSettings& s) {
  if (!s.outcome) throw ConfigError("screening/outcome", "the outcome descriptor must be designated for screening");
  auto cfg = ScreeningConfig::for_spec(spec, spec.descriptor_index(*s.outcome));
  cfg.higher_is_better = s.higher_is_better;
  cfg.backsliding_all_descriptors = s.backsliding_all_descriptors;
  cfg.late_rush_steps = s.late_rush_steps;
  cfg.discontinuity_steps = s.discontinuity_steps;
  for (const auto& jr : s.endpoint_rules) {
    EndpointRule rule;
    rule.name = jr.value("name", std::string("endpoint"));
    for (const auto& [id, state] : jr.at("states").items()) {
      const auto d = spec.descriptor_index(id);
      rule.states.push_back({d, state.is_number_integer() ? state.get<int>() : spec.state_index(d, state.get<std::string>())});
    }
    cfg.endpoint_rules.push_back(std::move(rule));
  }
  return cfg;
}

StateRef best_outcome_ref(const StudySpec& spec, const ScreeningSettings& s) {
  const auto d = spec.descriptor_index(*s.outcome);
  const auto& desc = spec.descriptors[d];
  if (s.best_outcome_state) return {d, spec.state_index(d, *s.best_outcome_state)};
  return {d, s.higher_is_better ? desc.state_count() - 1 : 0};
}

void write_error(const fs::path& dir, const std::string& stage, const Error* error, const std::string& message) {
  json report{{"stage", stage}, {"message", message}};
  if (error) {
    report["kind"] = to_string(error->kind());
    report["path"] = error->path();
    report["reason"] = error->reason();
  }
  std::ofstream out(dir / "error.json", std::ios::binary | std::ios::trunc);
  out << report.dump(2) << '\n';
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
  PipelineResult result;
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) {
    result.exit_code = exit_configuration;
    result.error = fmt::format("cannot create output directory {}: {}", config.output_dir.string(), ec.message());
    return result;
  }
  fs::remove(config.output_dir / "error.json", ec);
  ArtifactWriter writer(config.output_dir);
  std::string stage = "validate";
  const fs::path ensemble_path = config.ensemble_path.empty() ? config.output_dir / "ensemble.jsonl" : config.ensemble_path;

  try {
    const StudySpec spec = load_study_spec(config.spec_path.string());
    const auto findings = validate_study_spec(spec);
    writer.write(stage, "validation.json", json{{"spec_digest", spec_digest(spec)}, {"findings", findings_json(findings)}}.dump(2) + "\n");
    if (has_errors(findings)) {
      result.exit_code = exit_validation;
      result.error = "study spec failed validation";
      write_error(config.output_dir, stage, nullptr, *result.error);
      result.artifacts = writer.written();
      return result;
    }

    std::optional<EnsembleResult> ensemble;
    auto need_ensemble = [&]() -> const EnsembleResult& {
      if (!ensemble) {
        std::istringstream in(read_file(ensemble_path));
        ensemble = read_ensemble(in);
        if (ensemble->spec_digest != spec_digest(spec)) {
          throw InputError(ensemble_path.string(), "ensemble was produced from a different study spec");
        }
      }
      return *ensemble;
    };

    if (config.stages.simulate) {
      stage = "simulate";
      ensemble = simulate_ensemble(spec, config.run_count, config.master_seed, config.max_iter, config.worker_count);
      writer.write(stage, "ensemble.jsonl", ensemble_to_string(*ensemble));
    }

    if (config.stages.analytics) {
      stage = "analytics";
      const auto& ens = need_ensemble();
      std::vector<StateShareSeries> series;
      for (const auto& d : spec.descriptors) series.push_back(state_share_series(ens, d.id, config.level));
      writer.write(stage, "shares.csv", shares_csv(spec, series));
      writer.write(stage, "shares.json", shares_json(spec, series, config.level).dump(2) + "\n");
    }

    if (config.stages.screen) {
      stage = "screen";
      const auto& ens = need_ensemble();
      const auto screening = resolve_screening(spec, config.screening);
      const auto best = best_outcome_ref(spec, config.screening);
      const auto screened = screen_candidates(ens, screening);
      const auto selected = select_candidates(screened, config.screening.k, best);
      json cands = json::array();
      std::string csv = "id,run_count,first_run,terminal_frequency,terminal,rationale\n";
      for (const auto& c : selected.candidates) {
        auto jc = pathway_json(spec, c.pathway);
        jc["id"] = c.id;
        jc["run_count"] = c.run_count;
        jc["first_run"] = c.first_run;
        jc["terminal_frequency"] = c.terminal_frequency;
        jc["rationale"] = c.rationale;
        cands.push_back(std::move(jc));
        std::string rationale;
        for (const auto& r : c.rationale) rationale += (rationale.empty() ? "" : ";") + r;
        csv += fmt::format("{},{},{},{},\"{}\",{}\n", c.id, c.run_count, c.first_run, c.terminal_frequency,
                           format_scenario(spec, c.pathway.terminal()), rationale);
      }
      json rejected = json::array();
      for (const auto& r : selected.rejected) {
        json reasons = json::array();
        for (auto reason : r.reasons) reasons.push_back(to_string(reason));
        rejected.push_back({{"states", pathway_json(spec, r.pathway)["states"]},
                            {"run_count", r.run_count},
                            {"first_run", r.first_run},
                            {"reasons", std::move(reasons)}});
      }
      const json report{{"outcome", *config.screening.outcome},
                        {"best_outcome", {{"descriptor", spec.descriptors[best.descriptor].id},
                                          {"state", spec.descriptors[best.descriptor].states[best.state].label}}},
                        {"k", config.screening.k},
                        {"surviving_pathways", screened.candidates.size()},
                        {"time_grid", spec.time_grid},
                        {"candidates", std::move(cands)},
                        {"rejected", std::move(rejected)},
                        {"warnings", selected.warnings}};
      writer.write(stage, "candidates.json", report.dump(2) + "\n");
      writer.write(stage, "candidates.csv", csv);
    }

    if (config.stages.mcda) {
      stage = "mcda";
      if (config.mcda_path.empty()) throw ConfigError("mcda", "no MCDA input file configured");
      const auto input = load_mcda_input(config.mcda_path.string());
      const auto mcda_findings = validate_mcda_input(input);
      if (has_errors(mcda_findings)) {
        const auto& f = mcda_findings.front();
        throw InputError(f.path, f.message);
      }
      const auto ranking = rank_pathways(input);
      auto report = mcda_report(input, ranking);
      const auto candidates = json::parse(read_file(config.output_dir / "candidates.json"));
      json unknown = json::array();
      for (const auto& p : input.pathways) {
        bool found = false;
        for (const auto& c : candidates["candidates"]) found = found || c["id"] == p;
        if (!found) unknown.push_back(p);
      }
      if (!unknown.empty()) throw ReferenceError("mcda/pathways", fmt::format("not candidate ids: {}", unknown.dump()));
      writer.write(stage, "mcda_report.json", report.dump(2) + "\n");
      std::string csv = "rank,pathway,value\n";
      for (std::size_t r = 0; r < ranking.order.size(); ++r) {
        csv += fmt::format("{},{},{}\n", r + 1, input.pathways[ranking.order[r]], ranking.values[ranking.order[r]]);
      }
      writer.write(stage, "mcda_ranking.csv", csv);
    }

    if (config.stages.quantify) {
      stage = "quantify";
      if (config.translation_path.empty()) throw ConfigError("translation", "no translation matrix configured");
      const auto report = json::parse(read_file(config.output_dir / "mcda_report.json"));
      const auto candidates = json::parse(read_file(config.output_dir / "candidates.json"));
      const auto selected = report.at("selected").get<std::string>();
      std::optional<Pathway> pathway;
      for (const auto& c : candidates.at("candidates")) {
        if (c.at("id") == selected) pathway = pathway_from_json(c.at("states"), spec.time_grid);
      }
      if (!pathway) throw ReferenceError("selected", fmt::format("selected pathway '{}' is not a candidate", selected));
      const auto bundle = load_translation(config.translation_path.string(), spec);
      auto qp = quantify_pathway(*pathway, bundle.dimensions, bundle.matrix, bundle.overrides);
      if (!config.identity_path.empty()) qp = enforce_identities(std::move(qp), load_identities(config.identity_path.string()));
      qp = attach_uncertainty_ranges(std::move(qp), bundle.ranges);
      const auto extremes = build_extreme_scenarios(need_ensemble(), spec, bundle.dimensions, bundle.matrix, bundle.extremes);
      auto out = quantified_bundle(qp, extremes, spec);
      out["selected"] = selected;
      writer.write(stage, "quantified.csv", quantified_csv(qp));
      writer.write(stage, "quantified.json", out.dump(2) + "\n");
    }

    stage = "manifest";
    const json manifest{{"tool", "cibctl"},
                        {"version", kToolVersion},
                        {"spec_digest", spec_digest(spec)},
                        {"master_seed", config.master_seed},
                        {"run_count", config.run_count},
                        {"max_iter", config.max_iter},
                        {"stages", writer.stages()}};
    writer.write(stage, "manifest.json", manifest.dump(2) + "\n");
  } catch (const Error& e) {
    result.exit_code = exit_code_for(e);
    result.error = fmt::format("{} stage failed: {}", stage, e.what());
    write_error(config.output_dir, stage, &e, e.what());
  } catch (const std::exception& e) {
    result.exit_code = exit_runtime;
    result.error = fmt::format("{} stage failed: {}", stage, e.what());
    write_error(config.output_dir, stage, nullptr, e.what());
  }
  result.artifacts = writer.written();
  return result;
}

}  // namespace cib
