#include "cib/uncertainty.hpp"

#include <cmath>

#include <fmt/format.h>

#include "cib/errors.hpp"

namespace cib {

double judgement_sigma(const UncertaintyConfig& uncertainty, int confidence, int period) {
  if (confidence < 1 || confidence > kConfidenceLevels) {
    throw RangeError("confidence", fmt::format("confidence {} outside 1..5", confidence));
  }
  auto it = uncertainty.time_scale.find(period);
  if (it == uncertainty.time_scale.end()) throw RangeError("period", fmt::format("period {} has no time-scale factor", period));
  return uncertainty.confidence_sigma[confidence - 1] * it->second;
}

CrossImpactMatrix sample_cim(const StudySpec& spec, RandomSource& rng, int period) {
  std::array<double, kConfidenceLevels> sigma{};
  for (int c = 1; c <= kConfidenceLevels; ++c) sigma[c - 1] = judgement_sigma(spec.uncertainty, c, period);

  CrossImpactMatrix out = spec.cim;
  auto scores = out.scores();
  const auto confidences = out.confidences();
  const auto& dist = spec.uncertainty.sampling_distribution;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const int c = confidences[k];
    if (c < 1 || c > kConfidenceLevels) continue;  // undefined slot
    const double sd = sigma[c - 1];
    if (sd == 0.0) continue;
    scores[k] = clip_score(scores[k] + rng.draw(dist, sd));
  }
  return out;
}

CrossImpactMatrix apply_structural_shock(CrossImpactMatrix cim, RandomSource& rng, const StructuralShockConfig& config) {
  if (!(config.scale >= 0.0)) throw ConfigError("shocks/structural/scale", "scale must be non-negative");
  if (config.scale == 0.0) return cim;
  for (double& s : cim.scores()) s = clip_score(s + rng.draw(config.distribution, config.scale));
  return cim;
}

DynamicShockState DynamicShockState::initial(std::span<const int> state_counts, const DynamicShockConfig& params) {
  return {ImpactBalance::zeros(state_counts), params};
}

double innovation_sd(const DynamicShockConfig& params) {
  return params.long_run_sd * std::sqrt(1.0 - params.persistence * params.persistence);
}

DynamicShockState advance_dynamic_shock(DynamicShockState state, RandomSource& rng) {
  const auto& p = state.params;
  if (!(std::abs(p.persistence) < 1.0)) {
    throw ConfigError("shocks/dynamic/persistence", fmt::format("|rho| = {} must be below 1", std::abs(p.persistence)));
  }
  if (p.distribution.kind == Distribution::Kind::student_t && p.distribution.df <= 2) {
    throw ConfigError("shocks/dynamic/distribution",
                      fmt::format("student_t with df = {} has no finite standard deviation", p.distribution.df));
  }
  const double sd = innovation_sd(p);
  for (auto& row : state.eta.scores) {
    for (double& eta : row) eta = p.persistence * eta + (sd == 0.0 ? 0.0 : rng.draw(p.distribution, sd));
  }
  return state;
}

}  // namespace cib
