#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "cib/model.hpp"

namespace cib {

// Per descriptor j, the impact score of each of its states l.
struct ImpactBalance {
  std::vector<std::vector<double>> scores;

  static ImpactBalance zeros(std::span<const int> state_counts);
  bool operator==(const ImpactBalance&) const = default;
};

struct ConsistencyResult {
  bool consistent = false;
  // max_l theta[j][l] - theta[j][z_j], per descriptor; zero where consistent.
  std::vector<double> deficits;
};

struct Attractor {
  enum class Kind { fixed_point, cycle };
  Kind kind = Kind::fixed_point;
  std::vector<Scenario> scenarios;
  std::size_t steps_to_reach = 0;
};

struct NonConvergence {
  std::size_t steps_taken = 0;
  Scenario last;
};

using AttractorSearch = std::variant<Attractor, NonConvergence>;

// Descriptors whose state succession must not change; indexed by descriptor.
using LockMask = std::vector<bool>;

ImpactBalance impact_balance(const StudySpec& spec, const CrossImpactMatrix& cim, const Scenario& scenario);

ConsistencyResult check_consistency(const StudySpec& spec, const CrossImpactMatrix& cim, const Scenario& scenario);

// The matrix with every threshold rule that holds in `scenario` applied.
CrossImpactMatrix effective_cim(const StudySpec& spec, const CrossImpactMatrix& cim, const Scenario& scenario);

// True when no forbidden pair is present.
bool is_feasible(const StudySpec& spec, const Scenario& scenario);

// One simultaneous succession update. `perturbation`, when given, is added to
// the impact balance before the argmax.
Scenario succession_step(const StudySpec& spec, const CrossImpactMatrix& cim, const Scenario& scenario,
                         const LockMask& locked = {}, const ImpactBalance* perturbation = nullptr);

AttractorSearch find_attractor(const StudySpec& spec, const CrossImpactMatrix& cim, const Scenario& start,
                               std::size_t max_steps);

// Every consistent, feasible scenario in lexicographic order. Consistency is
// judged under the effective matrix of each scenario.
std::vector<Scenario> enumerate_consistent(const StudySpec& spec, const CrossImpactMatrix& cim, std::size_t limit);

// Product of state counts, saturating at SIZE_MAX.
std::size_t state_space_size(const StudySpec& spec) noexcept;

}  // namespace cib
