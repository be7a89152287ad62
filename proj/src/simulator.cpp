#include "cib/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cib/errors.hpp"

namespace cib {

using nlohmann::json;

int transition_cyclic_state(const CyclicParams& params, int current, int state_count, RandomSource& rng) {
  const double u = rng.uniform();
  int distance = 0;
  if (u < params.stay) distance = 0;
  else if (u < params.stay + params.step) distance = 1;
  else distance = 2;
  // Direction is drawn unconditionally so the stream layout does not depend on
  // the outcome of the first draw.
  const bool up = rng.uniform() < (1.0 + params.drift) / 2.0;
  if (distance == 0) return current;
  const int target = up ? current + distance : current - distance;
  if (target < 0 || target >= state_count) return current;  // blocked at the scale boundary
  return target;
}

CrossImpactMatrix period_cim(const StudySpec& spec, const RunContext& ctx, int period) {
  const int draw_period =
      spec.uncertainty.resample == ResamplePolicy::per_run ? spec.time_grid.front() : period;
  auto sampling = ctx.stream(draw_period, Purpose::cim_sampling);
  CrossImpactMatrix cim = sample_cim(spec, sampling, draw_period);
  if (spec.shocks.structural.enabled) {
    auto shock = ctx.stream(period, Purpose::structural_shock);
    cim = apply_structural_shock(std::move(cim), shock, spec.shocks.structural);
  }
  return cim;
}

PeriodOutcome simulate_period(const StudySpec& spec, const Scenario& prev, int period, DynamicShockState shock,
                              const RunContext& ctx, std::size_t max_iter) {
  if (max_iter < 1) throw ConfigError("max_iter", "must be at least 1");
  const auto n = spec.descriptor_count();
  const CrossImpactMatrix cim = period_cim(spec, ctx, period);

  Scenario current = prev;
  LockMask locked(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& d = spec.descriptors[j];
    if (d.kind != DescriptorKind::cyclic || !d.cyclic) continue;
    auto rng = ctx.stream(period, Purpose::cyclic_transition, j);
    current[j] = transition_cyclic_state(*d.cyclic, prev[j], d.state_count(), rng);
    locked[j] = true;
  }

  const ImpactBalance* perturbation = nullptr;
  if (spec.shocks.dynamic.enabled) {
    auto rng = ctx.stream(period, Purpose::dynamic_shock);
    shock = advance_dynamic_shock(std::move(shock), rng);
    perturbation = &shock.eta;
  }

  PeriodOutcome out;
  for (std::size_t it = 0; it < max_iter; ++it) {
    Scenario next = succession_step(spec, cim, current, locked, perturbation);
    if (next == current) {
      out.converged = true;
      break;
    }
    current = std::move(next);
    ++out.iterations;
  }
  out.scenario = std::move(current);
  out.shock = std::move(shock);
  return out;
}

RunRecord simulate_run(const StudySpec& spec, const RunContext& ctx, std::size_t max_iter) {
  RunRecord rec;
  rec.run_index = ctx.run;
  rec.seed_stream = fmt::format("{:016x}/run/{}", ctx.master_seed, ctx.run);
  const auto& grid = spec.time_grid;
  rec.pathway.entries.reserve(grid.size());
  rec.pathway.entries.push_back({grid.front(), spec.baseline});
  rec.converged.push_back(true);
  rec.succession_iterations.push_back(0);

  auto shock = DynamicShockState::initial(spec.state_counts(), spec.shocks.dynamic);
  for (std::size_t t = 1; t < grid.size(); ++t) {
    if (!rec.error) {
      try {
        auto outcome = simulate_period(spec, rec.pathway.entries.back().scenario, grid[t], std::move(shock), ctx, max_iter);
        shock = std::move(outcome.shock);
        rec.pathway.entries.push_back({grid[t], std::move(outcome.scenario)});
        rec.converged.push_back(outcome.converged);
        rec.succession_iterations.push_back(outcome.iterations);
        continue;
      } catch (const InfeasibilityError& e) {
        rec.error = fmt::format("period {}: {}", grid[t], e.what());
      }
    }
    // After a failure the last scenario is carried forward, flagged.
    rec.pathway.entries.push_back({grid[t], rec.pathway.entries.back().scenario});
    rec.converged.push_back(false);
    rec.succession_iterations.push_back(0);
  }
  return rec;
}

EnsembleResult simulate_ensemble(const StudySpec& spec, std::size_t run_count, std::uint64_t master_seed,
                                 std::size_t max_iter, std::size_t worker_count) {
  if (run_count < 1) throw ConfigError("runs", "run count must be at least 1");
  if (max_iter < 1) throw ConfigError("max_iter", "must be at least 1");
  if (spec.time_grid.empty()) throw ConfigError("time_grid", "time grid is empty");

  EnsembleResult result;
  result.spec_digest = spec_digest(spec);
  result.master_seed = master_seed;
  result.run_count = run_count;
  for (const auto& d : spec.descriptors) result.descriptor_ids.push_back(d.id);
  result.state_counts = spec.state_counts();
  result.time_grid = spec.time_grid;
  result.runs.resize(run_count);

  const std::size_t workers = std::clamp<std::size_t>(worker_count, 1, run_count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= run_count) return;
      try {
        result.runs[r] = simulate_run(spec, {master_seed, r}, max_iter);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(run_count);
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

double robustness_fraction(const StudySpec& spec, const Scenario& scenario, const StructuralShockConfig& shock,
                           std::size_t sample_count, std::uint64_t master_seed) {
  if (sample_count < 1) throw ConfigError("sample_count", "must be at least 1");
  std::size_t hits = 0;
  for (std::size_t s = 0; s < sample_count; ++s) {
    RandomSource rng(master_seed, {s, 0, Purpose::robustness, 0});
    const auto shocked = apply_structural_shock(spec.cim, rng, shock);
    const auto m = spec.threshold_rules.empty() ? shocked : effective_cim(spec, shocked, scenario);
    if (check_consistency(spec, m, scenario).consistent) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(sample_count);
}

// ---------------------------------------------------------------------------
// Ensemble file

namespace {
constexpr const char* kEnsembleFormat = "cib-ensemble/1";
}

void write_ensemble(std::ostream& out, const EnsembleResult& ensemble) {
  const json header{{"format", kEnsembleFormat},
                    {"spec_digest", ensemble.spec_digest},
                    {"master_seed", ensemble.master_seed},
                    {"run_count", ensemble.run_count},
                    {"descriptors", ensemble.descriptor_ids},
                    {"state_counts", ensemble.state_counts},
                    {"time_grid", ensemble.time_grid}};
  out << header.dump() << '\n';
  for (const auto& run : ensemble.runs) {
    json states = json::array();
    for (const auto& e : run.pathway.entries) states.push_back(e.scenario.states);
    json converged = json::array();
    for (bool c : run.converged) converged.push_back(c);
    json rec{{"run", run.run_index},
             {"stream", run.seed_stream},
             {"states", std::move(states)},
             {"converged", std::move(converged)},
             {"iterations", run.succession_iterations}};
    if (run.error) rec["error"] = *run.error;
    out << rec.dump() << '\n';
  }
}

std::string ensemble_to_string(const EnsembleResult& ensemble) {
  std::ostringstream out;
  write_ensemble(out, ensemble);
  return out.str();
}

EnsembleResult read_ensemble(std::istream& in) {
  EnsembleResult result;
  std::string line;
  std::size_t line_no = 0;
  auto parse_line = [&](const std::string& text) {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(fmt::format("ensemble:{}", line_no), e.what());
    }
  };
  if (!std::getline(in, line)) throw ParseError("ensemble", "empty ensemble file");
  ++line_no;
  try {
    const auto header = parse_line(line);
    if (header.value("format", "") != kEnsembleFormat) throw ParseError("ensemble:1", "unrecognised ensemble format");
    result.spec_digest = header.at("spec_digest").get<std::string>();
    result.master_seed = header.at("master_seed").get<std::uint64_t>();
    result.run_count = header.at("run_count").get<std::size_t>();
    result.descriptor_ids = header.at("descriptors").get<std::vector<std::string>>();
    result.state_counts = header.at("state_counts").get<std::vector<int>>();
    result.time_grid = header.at("time_grid").get<std::vector<int>>();
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto rec = parse_line(line);
      RunRecord run;
      run.run_index = rec.at("run").get<std::size_t>();
      run.seed_stream = rec.at("stream").get<std::string>();
      const auto& states = rec.at("states");
      if (states.size() != result.time_grid.size()) {
        throw ParseError(fmt::format("ensemble:{}", line_no), "run does not cover the time grid");
      }
      for (std::size_t t = 0; t < states.size(); ++t) {
        run.pathway.entries.push_back({result.time_grid[t], Scenario{states[t].get<std::vector<int>>()}});
      }
      for (const auto& c : rec.at("converged")) run.converged.push_back(c.get<bool>());
      run.succession_iterations = rec.at("iterations").get<std::vector<std::size_t>>();
      if (rec.contains("error")) run.error = rec["error"].get<std::string>();
      result.runs.push_back(std::move(run));
    }
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("ensemble:{}", line_no), e.what());
  }
  if (result.runs.size() != result.run_count) {
    throw ParseError("ensemble", fmt::format("header declares {} runs, file holds {}", result.run_count, result.runs.size()));
  }
  return result;
}

}  // namespace cib
