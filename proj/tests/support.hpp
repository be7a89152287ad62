#pragma once

#include <random>
#include <string>
#include <vector>

#include "cib/model.hpp"

namespace fixtures {

// Descriptors named A, B, C, ... with states A1, A2, ...; every cell zero at
// confidence 3; baseline at state 0; linear time scale over the grid.
inline cib::StudySpec make_spec(const std::vector<int>& counts, std::vector<int> grid = {2025, 2030, 2035}) {
  cib::StudySpec spec;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    cib::Descriptor d;
    d.id = std::string(1, static_cast<char>('A' + i));
    d.name = d.id;
    for (int s = 0; s < counts[i]; ++s) d.states.push_back({s, d.id + std::to_string(s + 1), ""});
    spec.descriptors.push_back(std::move(d));
  }
  spec.cim = cib::CrossImpactMatrix(counts);
  for (std::size_t i = 0; i < counts.size(); ++i)
    for (std::size_t j = 0; j < counts.size(); ++j)
      if (i != j)
        for (int a = 0; a < counts[i]; ++a)
          for (int b = 0; b < counts[j]; ++b) spec.cim.set(i, a, j, b, {0.0, 3});
  spec.baseline.states.assign(counts.size(), 0);
  spec.time_grid = std::move(grid);
  spec.uncertainty.time_scale = cib::linear_time_scale(spec.time_grid);
  return spec;
}

inline void set(cib::StudySpec& spec, std::size_t i, int a, std::size_t j, int b, double score, int confidence = 3) {
  spec.cim.set(i, a, j, b, {score, confidence});
}

// A1->B: (+2, -2); A2->B: (-2, +2); B1->A: (+1, -1); B2->A: (-1, +1).
inline cib::StudySpec two_by_two() {
  auto spec = make_spec({2, 2});
  set(spec, 0, 0, 1, 0, 2);
  set(spec, 0, 0, 1, 1, -2);
  set(spec, 0, 1, 1, 0, -2);
  set(spec, 0, 1, 1, 1, 2);
  set(spec, 1, 0, 0, 0, 1);
  set(spec, 1, 0, 0, 1, -1);
  set(spec, 1, 1, 0, 0, -1);
  set(spec, 1, 1, 0, 1, 1);
  return spec;
}

inline cib::Scenario sc(std::vector<int> states) { return cib::Scenario{std::move(states)}; }

// Random integer-scored spec with 2..max_descriptors descriptors of 2..max_states states.
inline cib::StudySpec random_spec(std::mt19937_64& rng, int max_descriptors = 6, int max_states = 3) {
  std::uniform_int_distribution<int> nd(2, max_descriptors), ns(2, max_states), score(-3, 3);
  std::vector<int> counts(static_cast<std::size_t>(nd(rng)));
  for (auto& c : counts) c = ns(rng);
  auto spec = make_spec(counts);
  for (std::size_t i = 0; i < counts.size(); ++i)
    for (std::size_t j = 0; j < counts.size(); ++j)
      if (i != j)
        for (int a = 0; a < counts[i]; ++a)
          for (int b = 0; b < counts[j]; ++b) set(spec, i, a, j, b, score(rng));
  return spec;
}

inline cib::Scenario random_scenario(std::mt19937_64& rng, const cib::StudySpec& spec) {
  cib::Scenario s;
  for (const auto& d : spec.descriptors) s.states.push_back(std::uniform_int_distribution<int>(0, d.state_count() - 1)(rng));
  return s;
}

}  // namespace fixtures
