#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cib/model.hpp"
#include "cib/simulator.hpp"

namespace cib {

inline constexpr double kDefaultConfidenceLevel = 0.95;

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::size_t successes, std::size_t trials, double confidence_level = kDefaultConfidenceLevel);

struct ShareCell {
  std::size_t count = 0;
  double share = 0.0;
  Interval interval;
};

struct StateShareSeries {
  std::string descriptor_id;
  std::vector<int> periods;
  std::size_t trials = 0;
  // cells[period index][state index]
  std::vector<std::vector<ShareCell>> cells;
};

// Shares over the runs that completed without an infeasibility.
StateShareSeries state_share_series(const EnsembleResult& ensemble, const std::string& descriptor_id,
                                    double confidence_level = kDefaultConfidenceLevel);

enum class RejectionReason { backsliding, endpoint_inconsistency, late_rush, discontinuity };
const char* to_string(RejectionReason reason) noexcept;

// A terminal combination the panel deems implausible; a pathway whose final
// scenario contains all of `states` is rejected.
struct EndpointRule {
  std::string name;
  std::vector<StateRef> states;
};

struct ScreeningConfig {
  std::size_t outcome_descriptor = 0;
  bool higher_is_better = true;
  bool backsliding_all_descriptors = false;
  int late_rush_steps = 2;
  int discontinuity_steps = 2;
  std::vector<EndpointRule> endpoint_rules;
  // Largest single-transition move each descriptor's cyclic law can produce
  // (0 for non-cyclic descriptors); moves up to this size are explained.
  std::vector<int> cyclic_max_step;

  static ScreeningConfig for_spec(const StudySpec& spec, std::size_t outcome_descriptor);
};

struct Candidate {
  std::string id;
  Pathway pathway;
  std::size_t run_count = 0;         // runs that realised this exact pathway
  std::size_t first_run = 0;         // lowest run index realising it
  double terminal_frequency = 0.0;   // share of runs ending in its terminal scenario
  std::vector<std::string> rationale;
};

struct Rejection {
  Pathway pathway;
  std::size_t run_count = 0;
  std::size_t first_run = 0;
  std::vector<RejectionReason> reasons;
};

struct CandidateSet {
  std::vector<Candidate> candidates;
  std::vector<Rejection> rejected;
  std::vector<std::string> warnings;
};

// Reasons a single pathway fails screening; empty when it passes.
std::vector<RejectionReason> screen_pathway(const Pathway& pathway, const ScreeningConfig& config);

// Screens every distinct pathway of the ensemble. Results are sorted by
// pathway, so they do not depend on run order.
CandidateSet screen_candidates(const EnsembleResult& ensemble, const ScreeningConfig& config);

CandidateSet select_candidates(const CandidateSet& screened, std::size_t k, StateRef best_outcome);

// Mean per-period Hamming distance between two pathways over the same grid.
double pathway_distance(const Pathway& a, const Pathway& b);

}  // namespace cib
