#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace cib {

inline constexpr double kMinScore = -3.0;
inline constexpr double kMaxScore = 3.0;
inline constexpr int kMinStates = 2;
inline constexpr int kMaxStates = 5;
inline constexpr int kConfidenceLevels = 5;

enum class DescriptorKind { endogenous, exogenous, cyclic };

struct StateDef {
  int index = 0;
  std::string label;
  std::string definition;

  bool operator==(const StateDef&) const = default;
};

// Between-period transition law of a cyclic descriptor.
struct CyclicParams {
  double stay = 1.0;
  double step = 0.0;
  double step2 = 0.0;
  double drift = 0.0;

  bool operator==(const CyclicParams&) const = default;
};

struct Descriptor {
  std::string id;
  std::string name;
  std::vector<StateDef> states;
  DescriptorKind kind = DescriptorKind::endogenous;
  std::optional<CyclicParams> cyclic;

  int state_count() const noexcept { return static_cast<int>(states.size()); }
  bool operator==(const Descriptor&) const = default;
};

struct JudgementCell {
  double score = 0.0;
  int confidence = 3;

  bool operator==(const JudgementCell&) const = default;
};

// Dense cross-impact matrix. Cells exist for every ordered pair of distinct
// descriptors and every (source state, target state) combination; storage is
// one contiguous block per ordered pair, row-major over (source, target) state.
// A cell is "defined" once it has been assigned.
class CrossImpactMatrix {
 public:
  CrossImpactMatrix() = default;
  explicit CrossImpactMatrix(std::vector<int> state_counts);

  std::size_t descriptor_count() const noexcept { return counts_.size(); }
  int state_count(std::size_t descriptor) const { return counts_.at(descriptor); }
  const std::vector<int>& state_counts() const noexcept { return counts_; }

  // Number of cell slots (defined or not).
  std::size_t size() const noexcept { return score_.size(); }

  bool defined(std::size_t source, int source_state, std::size_t target, int target_state) const;
  JudgementCell cell(std::size_t source, int source_state, std::size_t target, int target_state) const;
  double score(std::size_t source, int source_state, std::size_t target, int target_state) const {
    return score_[offset(source, source_state, target, target_state)];
  }
  void set(std::size_t source, int source_state, std::size_t target, int target_state, JudgementCell cell);
  void add_score(std::size_t source, int source_state, std::size_t target, int target_state, double delta);

  // Flat views in storage order, used by samplers that treat cells uniformly.
  std::span<double> scores() noexcept { return score_; }
  std::span<const double> scores() const noexcept { return score_; }
  std::span<const std::int8_t> confidences() const noexcept { return confidence_; }
  bool all_defined() const noexcept;

  // Start of the (source, target) block; cells inside are indexed
  // source_state * state_count(target) + target_state.
  std::size_t block_offset(std::size_t source, std::size_t target) const {
    return offsets_[source * counts_.size() + target];
  }

  bool operator==(const CrossImpactMatrix&) const = default;

 private:
  std::size_t offset(std::size_t source, int source_state, std::size_t target, int target_state) const {
    return block_offset(source, target) +
           static_cast<std::size_t>(source_state * counts_[target] + target_state);
  }

  std::vector<int> counts_;
  std::vector<std::size_t> offsets_;
  std::vector<double> score_;
  std::vector<std::int8_t> confidence_;
  std::vector<std::uint8_t> defined_;
};

// One state index per descriptor, in descriptor order.
struct Scenario {
  std::vector<int> states;

  std::size_t size() const noexcept { return states.size(); }
  int operator[](std::size_t i) const { return states[i]; }
  int& operator[](std::size_t i) { return states[i]; }

  auto operator<=>(const Scenario&) const = default;
  bool operator==(const Scenario&) const = default;
};

struct ScenarioHash {
  std::size_t operator()(const Scenario& s) const noexcept;
};

struct StateRef {
  std::size_t descriptor = 0;
  int state = 0;

  auto operator<=>(const StateRef&) const = default;
};

struct CellRef {
  std::size_t source = 0;
  int source_state = 0;
  std::size_t target = 0;
  int target_state = 0;

  bool operator==(const CellRef&) const = default;
};

struct ForbiddenPair {
  StateRef first;
  StateRef second;

  bool operator==(const ForbiddenPair&) const = default;
};

struct Implication {
  StateRef antecedent;
  StateRef consequent;

  bool operator==(const Implication&) const = default;
};

struct DomainRules {
  std::vector<ForbiddenPair> forbidden_pairs;
  std::vector<Implication> implications;

  bool operator==(const DomainRules&) const = default;
};

// When every condition holds, `delta` is added to the effect cell.
struct ThresholdRule {
  std::vector<StateRef> conditions;
  CellRef effect;
  double delta = 0.0;

  bool operator==(const ThresholdRule&) const = default;
};

struct Distribution {
  enum class Kind { gaussian, student_t };
  Kind kind = Kind::gaussian;
  int df = 0;  // degrees of freedom, student_t only

  static Distribution gaussian() { return {}; }
  static Distribution student_t(int df) { return {Kind::student_t, df}; }
  bool operator==(const Distribution&) const = default;
};

struct StructuralShockConfig {
  bool enabled = false;
  double scale = 0.30;  // per-cell standard deviation
  Distribution distribution;

  bool operator==(const StructuralShockConfig&) const = default;
};

struct DynamicShockConfig {
  bool enabled = false;
  double long_run_sd = 0.0;  // tau
  double persistence = 0.0;  // rho
  Distribution distribution;

  bool operator==(const DynamicShockConfig&) const = default;
};

struct ShockConfig {
  StructuralShockConfig structural;
  DynamicShockConfig dynamic;

  bool operator==(const ShockConfig&) const = default;
};

enum class ResamplePolicy { per_run, per_period };

struct UncertaintyConfig {
  // Index 0 holds confidence code 1.
  std::array<double, kConfidenceLevels> confidence_sigma{1.5, 1.175, 0.85, 0.525, 0.2};
  std::map<int, double> time_scale;
  Distribution sampling_distribution;
  ResamplePolicy resample = ResamplePolicy::per_period;

  bool operator==(const UncertaintyConfig&) const = default;
};

// Linear factor from `first` at the first period to `last` at the final one.
std::map<int, double> linear_time_scale(std::span<const int> time_grid, double first = 1.0,
                                        double last = 1.5);

struct StudySpec {
  std::vector<Descriptor> descriptors;
  CrossImpactMatrix cim;
  Scenario baseline;
  DomainRules rules;
  std::vector<ThresholdRule> threshold_rules;
  ShockConfig shocks;
  UncertaintyConfig uncertainty;
  std::vector<int> time_grid;

  std::size_t descriptor_count() const noexcept { return descriptors.size(); }
  std::vector<int> state_counts() const;

  // Lookups by identifier; throw ReferenceError when absent.
  std::size_t descriptor_index(std::string_view id) const;
  int state_index(std::size_t descriptor, std::string_view label) const;

  bool operator==(const StudySpec&) const = default;
};

enum class Severity { error, warning };

struct Finding {
  Severity severity = Severity::error;
  std::string path;
  std::string message;
};

// Reads a study document; applies defaults and resolves label references.
StudySpec parse_study_spec(const nlohmann::json& document);
StudySpec parse_study_spec_text(std::string_view text);
StudySpec load_study_spec(const std::string& path);

nlohmann::json serialize_study_spec(const StudySpec& spec);

std::vector<Finding> validate_study_spec(const StudySpec& spec);
bool has_errors(std::span<const Finding> findings) noexcept;

// FNV-1a over the canonical serialization, as 16 hex digits.
std::string spec_digest(const StudySpec& spec);

const char* to_string(DescriptorKind kind) noexcept;
const char* to_string(ResamplePolicy policy) noexcept;
const char* to_string(Severity severity) noexcept;

std::string format_scenario(const StudySpec& spec, const Scenario& scenario);

}  // namespace cib
