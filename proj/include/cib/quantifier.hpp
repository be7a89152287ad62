#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cib/model.hpp"
#include "cib/simulator.hpp"

namespace cib {

struct Dimension {
  std::string id;
  std::string unit;
  std::size_t driver = 0;  // descriptor index
};

// State -> value for one dimension, optionally per period. A period table,
// when present, takes precedence for that period.
struct DimensionTable {
  std::vector<std::optional<double>> values;
  std::map<int, std::vector<std::optional<double>>> per_period;
};

struct TranslationMatrix {
  std::map<std::string, DimensionTable> tables;

  // Value for `dimension` at `state` and `period`; throws CoverageError.
  double lookup(const Dimension& dimension, int state, int period) const;
};

struct Override {
  std::string dimension;
  int period = 0;
  double value = 0.0;
  std::string note;
};

struct CellProvenance {
  int state = 0;
  double matrix_value = 0.0;
  bool time_dependent = false;
  std::optional<std::string> override_note;
  std::vector<std::string> repairs;

  std::string describe() const;
};

struct ValueRange {
  double low = 0.0;
  double high = 0.0;
};

struct QuantifiedPathway {
  std::vector<Dimension> dimensions;
  std::vector<int> periods;
  // [dimension][period index]
  std::vector<std::vector<double>> values;
  std::vector<std::vector<std::optional<ValueRange>>> ranges;
  std::vector<std::vector<CellProvenance>> provenance;

  std::size_t dimension_index(const std::string& id) const;
  std::size_t period_index(int period) const;
};

QuantifiedPathway quantify_pathway(const Pathway& pathway, const std::vector<Dimension>& dimensions,
                                   const TranslationMatrix& matrix, const std::vector<Override>& overrides = {});

struct RangeBound {
  enum class Kind { relative, offset, value };
  Kind kind = Kind::relative;
  double amount = 0.0;

  double resolve(double central) const;
};

struct RangeSpec {
  std::string dimension;
  RangeBound low;
  RangeBound high;
};

QuantifiedPathway attach_uncertainty_ranges(QuantifiedPathway qp, const std::vector<RangeSpec>& ranges);

enum class ExtremeAxis { outcome_based, descriptor_based, frequency_based };
const char* to_string(ExtremeAxis axis) noexcept;

struct DescriptorStack {
  std::string label;
  std::vector<StateRef> states;
};

struct ExtremeConfig {
  std::size_t count = 4;
  std::optional<std::size_t> outcome_descriptor;
  std::vector<DescriptorStack> stacks;
  bool frequency_based = true;
  std::size_t min_count = 10;
};

struct ExtremeScenario {
  std::string label;
  ExtremeAxis axis = ExtremeAxis::outcome_based;
  Scenario scenario;
  std::size_t occurrences = 0;  // runs ending in this scenario
  std::vector<double> values;   // per dimension, at the terminal period
};

struct ExtremeSet {
  std::vector<ExtremeScenario> scenarios;
  std::vector<std::string> warnings;
};

ExtremeSet build_extreme_scenarios(const EnsembleResult& ensemble, const StudySpec& spec,
                                   const std::vector<Dimension>& dimensions, const TranslationMatrix& matrix,
                                   const ExtremeConfig& config);

// sum_i coefficient_i * x_i = rhs, repaired by rescaling `adjustable`.
struct Identity {
  std::string name;
  std::vector<std::pair<std::string, double>> terms;
  double rhs = 0.0;
  std::vector<std::string> adjustable;
};

inline constexpr double kIdentityTolerance = 1e-9;

QuantifiedPathway enforce_identities(QuantifiedPathway qp, const std::vector<Identity>& identities);

// Translation file: dimensions with their tables plus optional overrides,
// ranges and extreme-scenario settings.
struct TranslationBundle {
  std::vector<Dimension> dimensions;
  TranslationMatrix matrix;
  std::vector<Override> overrides;
  std::vector<RangeSpec> ranges;
  ExtremeConfig extremes;
};

TranslationBundle parse_translation(const nlohmann::json& document, const StudySpec& spec);
TranslationBundle load_translation(const std::string& path, const StudySpec& spec);
std::vector<Identity> parse_identities(const nlohmann::json& document);
std::vector<Identity> load_identities(const std::string& path);

std::string quantified_csv(const QuantifiedPathway& qp);
nlohmann::json quantified_bundle(const QuantifiedPathway& qp, const ExtremeSet& extremes, const StudySpec& spec);

}  // namespace cib
