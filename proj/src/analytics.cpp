#include "cib/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "cib/errors.hpp"

namespace cib {

Interval wilson_interval(std::size_t successes, std::size_t trials, double confidence_level) {
  if (trials == 0) throw EmptyInputError("trials", "Wilson interval needs at least one trial");
  if (successes > trials) throw InputError("successes", "successes exceed trials");
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
    throw ConfigError("level", fmt::format("confidence level {} outside (0, 1)", confidence_level));
  }
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + confidence_level / 2.0);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  Interval out{std::clamp(centre - half, 0.0, p), std::clamp(centre + half, p, 1.0)};
  if (successes == 0) out.low = 0.0;
  if (successes == trials) out.high = 1.0;
  return out;
}

StateShareSeries state_share_series(const EnsembleResult& ensemble, const std::string& descriptor_id,
                                    double confidence_level) {
  const auto it = std::find(ensemble.descriptor_ids.begin(), ensemble.descriptor_ids.end(), descriptor_id);
  if (it == ensemble.descriptor_ids.end()) throw ReferenceError(descriptor_id, "unknown descriptor");
  const auto j = static_cast<std::size_t>(it - ensemble.descriptor_ids.begin());
  const int states = ensemble.state_counts.at(j);

  StateShareSeries out;
  out.descriptor_id = descriptor_id;
  out.periods = ensemble.time_grid;
  out.cells.assign(out.periods.size(), std::vector<ShareCell>(static_cast<std::size_t>(states)));
  for (const auto& run : ensemble.runs) {
    if (!run.ok()) continue;
    ++out.trials;
    for (std::size_t t = 0; t < run.pathway.entries.size(); ++t) {
      ++out.cells[t].at(static_cast<std::size_t>(run.pathway.entries[t].scenario[j])).count;
    }
  }
  if (out.trials == 0) throw EmptyInputError("ensemble", "no completed runs");
  for (auto& row : out.cells) {
    for (auto& cell : row) {
      cell.share = static_cast<double>(cell.count) / static_cast<double>(out.trials);
      cell.interval = wilson_interval(cell.count, out.trials, confidence_level);
    }
  }
  return out;
}

const char* to_string(RejectionReason reason) noexcept {
  switch (reason) {
    case RejectionReason::backsliding: return "backsliding";
    case RejectionReason::endpoint_inconsistency: return "endpoint_inconsistency";
    case RejectionReason::late_rush: return "late_rush";
    case RejectionReason::discontinuity: return "discontinuity";
  }
  return "unknown";
}

ScreeningConfig ScreeningConfig::for_spec(const StudySpec& spec, std::size_t outcome_descriptor) {
  ScreeningConfig cfg;
  cfg.outcome_descriptor = outcome_descriptor;
  for (const auto& d : spec.descriptors) {
    int reach = 0;
    if (d.kind == DescriptorKind::cyclic && d.cyclic) {
      if (d.cyclic->step > 0.0) reach = 1;
      if (d.cyclic->step2 > 0.0) reach = 2;
    }
    cfg.cyclic_max_step.push_back(reach);
  }
  return cfg;
}

namespace {

// A drop below a level that was itself reached by improving.
bool backslides(const std::vector<int>& seq) {
  int prefix_min = seq.empty() ? 0 : seq.front();
  for (std::size_t t = 1; t < seq.size(); ++t) {
    if (prefix_min < seq[t]) {
      for (std::size_t u = t + 1; u < seq.size(); ++u) {
        if (seq[u] < seq[t]) return true;
      }
    }
    prefix_min = std::min(prefix_min, seq[t]);
  }
  return false;
}

std::vector<int> trajectory(const Pathway& p, std::size_t descriptor, bool higher_is_better) {
  std::vector<int> seq;
  seq.reserve(p.entries.size());
  for (const auto& e : p.entries) {
    const int s = e.scenario[descriptor];
    seq.push_back(higher_is_better ? s : -s);
  }
  return seq;
}

}  // namespace

std::vector<RejectionReason> screen_pathway(const Pathway& pathway, const ScreeningConfig& config) {
  std::vector<RejectionReason> reasons;
  if (pathway.entries.empty()) return reasons;
  const auto n = pathway.entries.front().scenario.size();
  const auto outcome = trajectory(pathway, config.outcome_descriptor, config.higher_is_better);

  bool backslide = backslides(outcome);
  if (config.backsliding_all_descriptors) {
    for (std::size_t j = 0; j < n && !backslide; ++j) backslide = backslides(trajectory(pathway, j, true));
  }
  if (backslide) reasons.push_back(RejectionReason::backsliding);

  const auto& terminal = pathway.terminal();
  for (const auto& rule : config.endpoint_rules) {
    const bool hit = !rule.states.empty() && std::all_of(rule.states.begin(), rule.states.end(), [&](const StateRef& r) {
      return terminal[r.descriptor] == r.state;
    });
    if (hit) {
      reasons.push_back(RejectionReason::endpoint_inconsistency);
      break;
    }
  }

  if (outcome.size() >= 2 && outcome.back() - outcome[outcome.size() - 2] >= config.late_rush_steps) {
    reasons.push_back(RejectionReason::late_rush);
  }

  for (std::size_t t = 1; t < pathway.entries.size(); ++t) {
    bool jump = false;
    for (std::size_t j = 0; j < n && !jump; ++j) {
      const int move = std::abs(pathway.entries[t].scenario[j] - pathway.entries[t - 1].scenario[j]);
      const int explained = j < config.cyclic_max_step.size() ? config.cyclic_max_step[j] : 0;
      jump = move >= config.discontinuity_steps && move > explained;
    }
    if (jump) {
      reasons.push_back(RejectionReason::discontinuity);
      break;
    }
  }
  return reasons;
}

CandidateSet screen_candidates(const EnsembleResult& ensemble, const ScreeningConfig& config) {
  struct Tally {
    std::size_t count = 0;
    std::size_t first_run = 0;
  };
  std::map<Pathway, Tally> distinct;
  std::map<Scenario, std::size_t> terminals;
  std::size_t completed = 0;
  for (const auto& run : ensemble.runs) {
    if (!run.ok()) continue;
    ++completed;
    auto [it, inserted] = distinct.try_emplace(run.pathway, Tally{0, run.run_index});
    ++it->second.count;
    it->second.first_run = std::min(it->second.first_run, run.run_index);
    ++terminals[run.pathway.terminal()];
  }
  CandidateSet out;
  std::size_t index = 0;
  for (const auto& [pathway, tally] : distinct) {
    ++index;
    auto reasons = screen_pathway(pathway, config);
    if (reasons.empty()) {
      Candidate c;
      c.id = fmt::format("S{}", index);
      c.pathway = pathway;
      c.run_count = tally.count;
      c.first_run = tally.first_run;
      c.terminal_frequency = static_cast<double>(terminals[pathway.terminal()]) / static_cast<double>(completed);
      c.rationale.push_back("screened");
      out.candidates.push_back(std::move(c));
    } else {
      out.rejected.push_back({pathway, tally.count, tally.first_run, std::move(reasons)});
    }
  }
  return out;
}

double pathway_distance(const Pathway& a, const Pathway& b) {
  if (a.entries.size() != b.entries.size()) throw StructureError("pathway", "pathways cover different grids");
  if (a.entries.empty()) return 0.0;
  std::size_t diff = 0;
  for (std::size_t t = 0; t < a.entries.size(); ++t) {
    const auto& x = a.entries[t].scenario.states;
    const auto& y = b.entries[t].scenario.states;
    for (std::size_t j = 0; j < x.size(); ++j) diff += x[j] != y[j] ? 1 : 0;
  }
  return static_cast<double>(diff) / static_cast<double>(a.entries.size());
}

namespace {

std::string terminal_tag(const Scenario& s) {
  std::string out;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (j) out += '-';
    out += std::to_string(s[j]);
  }
  return out;
}

}  // namespace

CandidateSet select_candidates(const CandidateSet& screened, std::size_t k, StateRef best_outcome) {
  if (k < 2) throw ConfigError("k", "at least two candidates must be selected");
  const auto& pool = screened.candidates;
  if (pool.size() < k) {
    throw InsufficientCandidatesError(
        "candidates", fmt::format("{} surviving pathways cannot supply {} candidates", pool.size(), k));
  }

  // Group by terminal scenario; order groups by frequency, then scenario.
  std::map<Scenario, std::vector<std::size_t>> by_terminal;
  for (std::size_t i = 0; i < pool.size(); ++i) by_terminal[pool[i].pathway.terminal()].push_back(i);
  std::vector<std::vector<std::size_t>> groups;
  for (auto& [terminal, members] : by_terminal) groups.push_back(members);
  std::stable_sort(groups.begin(), groups.end(), [&](const auto& a, const auto& b) {
    return pool[a.front()].terminal_frequency > pool[b.front()].terminal_frequency;
  });

  // Within a group, members ordered by centrality: the medoid first.
  for (auto& members : groups) {
    std::vector<double> spread(pool.size(), 0.0);
    double weight = 0.0;
    for (auto o : members) weight += static_cast<double>(pool[o].run_count);
    for (auto m : members) {
      double sum = 0.0;
      for (auto o : members) sum += static_cast<double>(pool[o].run_count) * pathway_distance(pool[m].pathway, pool[o].pathway);
      spread[m] = sum / weight;
    }
    std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      if (spread[a] != spread[b]) return spread[a] < spread[b];
      return pool[a].run_count > pool[b].run_count;
    });
  }

  // Priority: round-robin over groups, most central member first.
  struct Slot {
    std::size_t candidate;
    std::size_t group;
    std::size_t depth;
  };
  std::vector<Slot> priority;
  for (std::size_t depth = 0; priority.size() < pool.size(); ++depth) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (depth < groups[g].size()) priority.push_back({groups[g][depth], g, depth});
    }
  }

  const auto is_best = [&](std::size_t c) {
    return pool[c].pathway.terminal()[best_outcome.descriptor] == best_outcome.state;
  };
  std::vector<Slot> chosen(priority.begin(), priority.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<bool> guaranteed(k, false);
  CandidateSet out;
  out.rejected = screened.rejected;
  out.warnings = screened.warnings;

  const auto best_total = static_cast<std::size_t>(std::count_if(priority.begin(), priority.end(), [&](const Slot& s) { return is_best(s.candidate); }));
  if (best_total < 2) {
    out.warnings.push_back(fmt::format(
        "only {} surviving pathway(s) reach the best outcome state; best-outcome quota relaxed", best_total));
  } else {
    auto count_best = [&] {
      return std::count_if(chosen.begin(), chosen.end(), [&](const Slot& s) { return is_best(s.candidate); });
    };
    std::size_t scan = k;
    while (count_best() < 2) {
      while (!is_best(priority[scan].candidate)) ++scan;
      // Replace the lowest-priority selection that does not reach the best outcome.
      std::size_t drop = k;
      while (drop > 0 && is_best(chosen[drop - 1].candidate)) --drop;
      chosen[drop - 1] = priority[scan];
      guaranteed[drop - 1] = true;
      ++scan;
    }
  }

  std::vector<std::size_t> order(k);
  for (std::size_t i = 0; i < k; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (chosen[a].depth != chosen[b].depth) return chosen[a].depth < chosen[b].depth;
    return chosen[a].group < chosen[b].group;
  });
  for (std::size_t rank = 0; rank < k; ++rank) {
    const auto& slot = chosen[order[rank]];
    Candidate c = pool[slot.candidate];
    c.id = fmt::format("C{}", rank + 1);
    c.rationale.clear();
    c.rationale.push_back(fmt::format("frequency_rank={}", slot.group + 1));
    c.rationale.push_back(fmt::format("diversity_group={}", terminal_tag(c.pathway.terminal())));
    c.rationale.push_back(slot.depth == 0 ? "representative=medoid" : fmt::format("representative=member{}", slot.depth + 1));
    if (guaranteed[order[rank]]) c.rationale.push_back("best_outcome_guarantee");
    out.candidates.push_back(std::move(c));
  }
  return out;
}

}  // namespace cib
