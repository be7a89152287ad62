#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cib/errors.hpp"

namespace cib {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kWorkersEnv = "CIB_WORKERS";

enum ExitCode : int {
  exit_ok = 0,
  exit_validation = 1,
  exit_runtime = 2,
  exit_configuration = 3,
};

struct StageToggles {
  bool simulate = true;
  bool analytics = true;
  bool screen = true;
  bool mcda = true;
  bool quantify = true;
};

// Screening and selection settings; descriptor/state references are resolved
// against the study spec when the stage runs.
struct ScreeningSettings {
  std::optional<std::string> outcome;
  bool higher_is_better = true;
  bool backsliding_all_descriptors = false;
  int late_rush_steps = 2;
  int discontinuity_steps = 2;
  std::size_t k = 4;
  std::optional<std::string> best_outcome_state;  // defaults to the top state
  nlohmann::json endpoint_rules = nlohmann::json::array();
};

struct PipelineConfig {
  std::filesystem::path spec_path;
  std::size_t run_count = 10000;
  std::uint64_t master_seed = 0;
  std::size_t worker_count = 1;
  std::filesystem::path output_dir = "out";
  std::size_t max_iter = 100;
  double level = 0.95;
  StageToggles stages;
  std::filesystem::path ensemble_path;  // empty: <output_dir>/ensemble.jsonl
  std::filesystem::path mcda_path;
  std::filesystem::path translation_path;
  std::filesystem::path identity_path;
  ScreeningSettings screening;
};

// Reads a pipeline config file; relative paths resolve against its directory.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct PipelineResult {
  int exit_code = exit_ok;
  std::vector<std::filesystem::path> artifacts;
  std::optional<std::string> error;
};

// Runs validate -> simulate -> analytics -> screen/select -> mcda -> quantify
// for the enabled stages, writing artifacts and manifest.json under the
// output directory. Failures write error.json and return a nonzero code.
PipelineResult run_pipeline(const PipelineConfig& config);

// Worker count from the environment, or `fallback` when unset or invalid.
std::size_t default_worker_count(std::size_t fallback = 1);

int exit_code_for(const Error& error) noexcept;

}  // namespace cib
