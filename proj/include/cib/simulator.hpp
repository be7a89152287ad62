#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cib/engine.hpp"
#include "cib/model.hpp"
#include "cib/random.hpp"
#include "cib/uncertainty.hpp"

namespace cib {

inline constexpr std::size_t kDefaultMaxIter = 100;

struct PathwayEntry {
  int period = 0;
  Scenario scenario;

  bool operator==(const PathwayEntry&) const = default;
};

struct Pathway {
  std::vector<PathwayEntry> entries;

  const Scenario& terminal() const { return entries.back().scenario; }
  auto operator<=>(const Pathway& other) const {
    return std::lexicographical_compare_three_way(
        entries.begin(), entries.end(), other.entries.begin(), other.entries.end(),
        [](const PathwayEntry& a, const PathwayEntry& b) {
          if (auto c = a.period <=> b.period; c != 0) return c;
          return a.scenario <=> b.scenario;
        });
  }
  bool operator==(const Pathway&) const = default;
};

struct RunRecord {
  std::size_t run_index = 0;
  std::string seed_stream;
  Pathway pathway;
  std::vector<bool> converged;
  std::vector<std::size_t> succession_iterations;
  std::optional<std::string> error;  // set when the run hit an infeasibility

  bool ok() const noexcept { return !error.has_value(); }
  bool operator==(const RunRecord&) const = default;
};

struct EnsembleResult {
  std::string spec_digest;
  std::uint64_t master_seed = 0;
  std::size_t run_count = 0;
  std::vector<std::string> descriptor_ids;
  std::vector<int> state_counts;
  std::vector<int> time_grid;
  std::vector<RunRecord> runs;

  bool operator==(const EnsembleResult&) const = default;
};

// Everything needed to derive the random streams of one run.
struct RunContext {
  std::uint64_t master_seed = 0;
  std::uint64_t run = 0;

  RandomSource stream(int period, Purpose purpose, std::uint64_t entity = 0) const {
    return RandomSource(master_seed, {run, period, purpose, entity});
  }
};

struct PeriodOutcome {
  Scenario scenario;
  DynamicShockState shock;
  bool converged = false;
  std::size_t iterations = 0;  // succession steps that changed the scenario
};

int transition_cyclic_state(const CyclicParams& params, int current, int state_count, RandomSource& rng);

// The matrix in force at `period` for a run: sampled per the resample policy,
// then structurally shocked when enabled.
CrossImpactMatrix period_cim(const StudySpec& spec, const RunContext& ctx, int period);

PeriodOutcome simulate_period(const StudySpec& spec, const Scenario& prev, int period, DynamicShockState shock,
                              const RunContext& ctx, std::size_t max_iter);

RunRecord simulate_run(const StudySpec& spec, const RunContext& ctx, std::size_t max_iter);

EnsembleResult simulate_ensemble(const StudySpec& spec, std::size_t run_count, std::uint64_t master_seed,
                                 std::size_t max_iter = kDefaultMaxIter, std::size_t worker_count = 1);

double robustness_fraction(const StudySpec& spec, const Scenario& scenario, const StructuralShockConfig& shock,
                           std::size_t sample_count, std::uint64_t master_seed);

// Line-delimited ensemble file: a header record, then one record per run.
void write_ensemble(std::ostream& out, const EnsembleResult& ensemble);
std::string ensemble_to_string(const EnsembleResult& ensemble);
EnsembleResult read_ensemble(std::istream& in);

}  // namespace cib
