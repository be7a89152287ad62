#pragma once

#include "cib/engine.hpp"
#include "cib/model.hpp"
#include "cib/random.hpp"

namespace cib {

// Standard deviation for a judgement with the given confidence code at `period`.
double judgement_sigma(const UncertaintyConfig& uncertainty, int confidence, int period);

// Draws every cell around its point estimate and clips to the score range.
CrossImpactMatrix sample_cim(const StudySpec& spec, RandomSource& rng, int period);

// Additive per-cell perturbation, clipped to the score range. Applied
// regardless of `config.enabled`; callers decide whether to shock.
CrossImpactMatrix apply_structural_shock(CrossImpactMatrix cim, RandomSource& rng, const StructuralShockConfig& config);

// AR(1) perturbation of impact scores, one entry per (descriptor, state).
struct DynamicShockState {
  ImpactBalance eta;
  DynamicShockConfig params;

  static DynamicShockState initial(std::span<const int> state_counts, const DynamicShockConfig& params);
};

// tau * sqrt(1 - rho^2)
double innovation_sd(const DynamicShockConfig& params);

DynamicShockState advance_dynamic_shock(DynamicShockState state, RandomSource& rng);

inline double clip_score(double score) noexcept {
  return score < kMinScore ? kMinScore : (score > kMaxScore ? kMaxScore : score);
}

}  // namespace cib
