#include "cib/engine.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include <fmt/format.h>

#include "cib/errors.hpp"

namespace cib {

ImpactBalance ImpactBalance::zeros(std::span<const int> state_counts) {
  ImpactBalance out;
  out.scores.reserve(state_counts.size());
  for (int c : state_counts) out.scores.emplace_back(static_cast<std::size_t>(c), 0.0);
  return out;
}

namespace {

void check_structure(const StudySpec& spec, const CrossImpactMatrix& cim, const Scenario& scenario) {
  const auto n = spec.descriptor_count();
  if (cim.descriptor_count() != n) {
    throw StructureError("cim", fmt::format("matrix covers {} descriptors, spec has {}", cim.descriptor_count(), n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (cim.state_count(i) != spec.descriptors[i].state_count()) {
      throw StructureError("cim", fmt::format("state count mismatch for '{}'", spec.descriptors[i].id));
    }
  }
  if (scenario.size() != n) {
    throw StructureError("scenario", fmt::format("scenario has {} entries, spec has {} descriptors", scenario.size(), n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (scenario[i] < 0 || scenario[i] >= spec.descriptors[i].state_count()) {
      throw StructureError("scenario", fmt::format("invalid state {} for '{}'", scenario[i], spec.descriptors[i].id));
    }
  }
}

bool rule_holds(const ThresholdRule& rule, const Scenario& scenario) {
  return std::all_of(rule.conditions.begin(), rule.conditions.end(),
                     [&](const StateRef& c) { return scenario[c.descriptor] == c.state; });
}

// Whether (j, l) is compatible with every other descriptor's state in `others`.
bool compatible(const StudySpec& spec, std::size_t j, int l, const Scenario& others) {
  for (const auto& fp : spec.rules.forbidden_pairs) {
    if (fp.first.descriptor == j && fp.first.state == l && fp.second.descriptor != j &&
        others[fp.second.descriptor] == fp.second.state) {
      return false;
    }
    if (fp.second.descriptor == j && fp.second.state == l && fp.first.descriptor != j &&
        others[fp.first.descriptor] == fp.first.state) {
      return false;
    }
  }
  return true;
}

bool in_conflict(const StudySpec& spec, std::size_t j, const Scenario& scenario) {
  return !compatible(spec, j, scenario[j], scenario);
}

// Argmax over the states of descriptor j admitted by `others`. Among maximal
// states `preferred` wins if present, else the lowest index. Returns -1 when
// no state is admissible.
int best_state(const StudySpec& spec, std::size_t j, const std::vector<double>& theta, const Scenario& others,
               int preferred) {
  double best = -std::numeric_limits<double>::infinity();
  int best_index = -1;
  bool preferred_ok = false;
  for (int l = 0; l < static_cast<int>(theta.size()); ++l) {
    if (!compatible(spec, j, l, others)) continue;
    if (l == preferred) preferred_ok = true;
    if (best_index < 0 || theta[l] > best) {
      best = theta[l];
      best_index = l;
    }
  }
  if (preferred_ok && theta[preferred] == best) return preferred;
  return best_index;
}

}  // namespace

ImpactBalance impact_balance(const StudySpec& spec, const CrossImpactMatrix& cim, const Scenario& scenario) {
  check_structure(spec, cim, scenario);
  const auto n = spec.descriptor_count();
  auto out = ImpactBalance::zeros(cim.state_counts());
  const auto scores = cim.scores();
  for (std::size_t j = 0; j < n; ++j) {
    auto& row = out.scores[j];
    const int states = cim.state_count(j);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      const auto base = cim.block_offset(i, j) + static_cast<std::size_t>(scenario[i] * states);
      for (int l = 0; l < states; ++l) row[l] += scores[base + l];
    }
  }
  return out;
}

ConsistencyResult check_consistency(const StudySpec& spec, const CrossImpactMatrix& cim, const Scenario& scenario) {
  const auto theta = impact_balance(spec, cim, scenario);
  ConsistencyResult out;
  out.consistent = true;
  out.deficits.reserve(theta.scores.size());
  for (std::size_t j = 0; j < theta.scores.size(); ++j) {
    const auto& row = theta.scores[j];
    const double best = *std::max_element(row.begin(), row.end());
    const double deficit = best - row[scenario[j]];
    out.deficits.push_back(deficit);
    if (deficit > 0.0) out.consistent = false;
  }
  return out;
}

CrossImpactMatrix effective_cim(const StudySpec& spec, const CrossImpactMatrix& cim, const Scenario& scenario) {
  check_structure(spec, cim, scenario);
  CrossImpactMatrix out = cim;
  for (const auto& rule : spec.threshold_rules) {
    if (rule_holds(rule, scenario)) {
      const auto& e = rule.effect;
      out.add_score(e.source, e.source_state, e.target, e.target_state, rule.delta);
    }
  }
  return out;
}

bool is_feasible(const StudySpec& spec, const Scenario& scenario) {
  return std::none_of(spec.rules.forbidden_pairs.begin(), spec.rules.forbidden_pairs.end(), [&](const ForbiddenPair& fp) {
    return scenario[fp.first.descriptor] == fp.first.state && scenario[fp.second.descriptor] == fp.second.state;
  });
}

Scenario succession_step(const StudySpec& spec, const CrossImpactMatrix& cim, const Scenario& scenario,
                         const LockMask& locked, const ImpactBalance* perturbation) {
  check_structure(spec, cim, scenario);
  const auto n = spec.descriptor_count();
  if (!locked.empty() && locked.size() != n) throw StructureError("locked", "lock mask size does not match descriptors");
  const auto is_locked = [&](std::size_t j) { return !locked.empty() && locked[j]; };

  const bool any_rule = std::any_of(spec.threshold_rules.begin(), spec.threshold_rules.end(),
                                    [&](const ThresholdRule& r) { return rule_holds(r, scenario); });
  auto theta = any_rule ? impact_balance(spec, effective_cim(spec, cim, scenario), scenario)
                        : impact_balance(spec, cim, scenario);
  if (perturbation) {
    if (perturbation->scores.size() != n) throw StructureError("perturbation", "perturbation does not cover every descriptor");
    for (std::size_t j = 0; j < n; ++j) {
      if (perturbation->scores[j].size() != theta.scores[j].size()) {
        throw StructureError("perturbation", fmt::format("perturbation does not cover every state of '{}'", spec.descriptors[j].id));
      }
      for (std::size_t l = 0; l < theta.scores[j].size(); ++l) theta.scores[j][l] += perturbation->scores[j][l];
    }
  }

  // Simultaneous update; feasibility judged against the input scenario.
  Scenario next = scenario;
  for (std::size_t j = 0; j < n; ++j) {
    if (is_locked(j)) continue;
    const int s = best_state(spec, j, theta.scores[j], scenario, scenario[j]);
    if (s < 0) throw InfeasibilityError(spec.descriptors[j].id, "no feasible state under the domain rules");
    next[j] = s;
  }

  for (const auto& im : spec.rules.implications) {
    if (next[im.antecedent.descriptor] == im.antecedent.state && !is_locked(im.consequent.descriptor)) {
      next[im.consequent.descriptor] = im.consequent.state;
    }
  }

  // Simultaneous moves can still combine into a forbidden pair; re-choose the
  // offending unlocked descriptors against the successor, in descriptor order.
  if (!spec.rules.forbidden_pairs.empty()) {
    for (std::size_t j = 0; j < n; ++j) {
      if (is_locked(j) || !in_conflict(spec, j, next)) continue;
      const int s = best_state(spec, j, theta.scores[j], next, scenario[j]);
      if (s < 0) throw InfeasibilityError(spec.descriptors[j].id, "no feasible state under the domain rules");
      next[j] = s;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (in_conflict(spec, j, next)) {
        throw InfeasibilityError(spec.descriptors[j].id, "locked states form a forbidden pair");
      }
    }
  }
  return next;
}

AttractorSearch find_attractor(const StudySpec& spec, const CrossImpactMatrix& cim, const Scenario& start,
                               std::size_t max_steps) {
  if (max_steps < 1) throw ConfigError("max_steps", "must be at least 1");
  std::unordered_map<Scenario, std::size_t, ScenarioHash> visited;
  std::vector<Scenario> path{start};
  visited.emplace(start, 0);
  for (std::size_t step = 0; step < max_steps; ++step) {
    Scenario next = succession_step(spec, cim, path.back());
    auto it = visited.find(next);
    if (it != visited.end()) {
      Attractor a;
      a.steps_to_reach = it->second;
      a.scenarios.assign(path.begin() + static_cast<std::ptrdiff_t>(it->second), path.end());
      a.kind = a.scenarios.size() == 1 ? Attractor::Kind::fixed_point : Attractor::Kind::cycle;
      return a;
    }
    visited.emplace(next, path.size());
    path.push_back(std::move(next));
  }
  return NonConvergence{max_steps, path.back()};
}

std::size_t state_space_size(const StudySpec& spec) noexcept {
  std::size_t product = 1;
  for (const auto& d : spec.descriptors) {
    const auto c = static_cast<std::size_t>(std::max(d.state_count(), 0));
    if (c != 0 && product > std::numeric_limits<std::size_t>::max() / c) return std::numeric_limits<std::size_t>::max();
    product *= c;
  }
  return product;
}

std::vector<Scenario> enumerate_consistent(const StudySpec& spec, const CrossImpactMatrix& cim, std::size_t limit) {
  const auto space = state_space_size(spec);
  if (space > limit) {
    throw TractabilityError("", fmt::format("state space of {} scenarios exceeds the limit of {}", space, limit));
  }
  std::vector<Scenario> out;
  const auto n = spec.descriptor_count();
  if (n == 0 || space == 0) return out;
  Scenario z;
  z.states.assign(n, 0);
  for (;;) {
    if (is_feasible(spec, z)) {
      const auto& m = spec.threshold_rules.empty() ? cim : effective_cim(spec, cim, z);
      if (check_consistency(spec, m, z).consistent) out.push_back(z);
    }
    std::size_t k = n;
    while (k > 0) {
      --k;
      if (++z[k] < spec.descriptors[k].state_count()) break;
      z[k] = 0;
      if (k == 0) return out;
    }
  }
}

}  // namespace cib
