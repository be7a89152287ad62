#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cib/model.hpp"

namespace cib {

struct Persona {
  std::string id;
  std::vector<std::optional<double>> weights;  // aligned with McdaInput::criteria
};

struct ScoreScale {
  double low = 1.0;
  double high = 5.0;
};

struct McdaInput {
  std::vector<std::string> pathways;
  std::vector<std::string> criteria;
  std::vector<std::vector<std::optional<double>>> scores;  // [pathway][criterion]
  std::vector<Persona> personas;
  ScoreScale scale;
  std::optional<std::string> selected;  // deliberative override, passed through
};

struct McdaRanking {
  std::vector<double> values;                    // V_p, in input pathway order
  std::vector<std::vector<double>> per_persona;  // [persona][pathway]
  std::vector<std::size_t> order;                // descending V_p, ties by pathway id
  std::vector<std::vector<std::size_t>> ties;    // groups of two or more equal V_p
};

std::vector<Finding> validate_mcda_input(const McdaInput& input);

// Simple additive weighting averaged over personas. Inputs are read as their
// shortest decimal forms and the weighted sums are evaluated exactly in decimal,
// then rounded once, so persona order never affects the result.
McdaRanking rank_pathways(const McdaInput& input);

McdaInput parse_mcda_input(const nlohmann::json& document);
McdaInput load_mcda_input(const std::string& path);
nlohmann::json mcda_report(const McdaInput& input, const McdaRanking& ranking);

}  // namespace cib
