// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "cib/analytics.hpp"
#include "cib/engine.hpp"
#include "cib/errors.hpp"
#include "cib/hash.hpp"
#include "cib/mcda.hpp"
#include "cib/quantifier.hpp"
#include "cib/random.hpp"
#include "cib/simulator.hpp"
#include "cib/uncertainty.hpp"
#include "oracle.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using fixtures::sc;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Result of one criterion; `detail` holds the measurements and, on failure,
// the first unmet requirement.
struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool condition, const std::string& what) {
    if (!condition && pass) {
      pass = false;
      detail = what + (detail.empty() ? "" : "; " + detail);
    }
  }
  void note(const std::string& text) { detail += (detail.empty() ? "" : "; ") + text; }
};

double sample_sd(const std::vector<double>& xs) {
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double m2 = 0;
  for (double x : xs) m2 += (x - mean) * (x - mean);
  return std::sqrt(m2 / static_cast<double>(xs.size()));
}

cib::StudySpec deterministic(cib::StudySpec spec) {
  for (auto& [period, factor] : spec.uncertainty.time_scale) factor = 0.0;
  spec.shocks = {};
  return spec;
}

std::set<std::vector<int>> as_set(const std::vector<cib::Scenario>& scenarios) {
  std::set<std::vector<int>> out;
  for (const auto& s : scenarios) out.insert(s.states);
  return out;
}

// Every scenario of a spec, in lexicographic order.
std::vector<cib::Scenario> all_scenarios(const cib::StudySpec& spec) {
  std::vector<cib::Scenario> out;
  std::vector<int> z(spec.descriptors.size(), 0);
  while (true) {
    out.push_back(cib::Scenario{z});
    std::size_t k = z.size();
    while (k > 0) {
      --k;
      if (++z[k] < spec.descriptors[k].state_count()) break;
      z[k] = 0;
      if (k == 0) return out;
    }
    if (z.empty()) return out;
  }
}

Outcome oracle_equivalence() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 rng(1001);
  std::size_t mismatches = 0, total = 0;
  for (int k = 0; k < 200; ++k) {
    const auto spec = fixtures::random_spec(rng, 6, 3);
    const auto found = as_set(cib::enumerate_consistent(spec, spec.cim, cib::state_space_size(spec)));
    const auto expected = oracle::consistent_set(spec);
    mismatches += found != expected;
    total += expected.size();
  }
  const double elapsed = seconds_since(start);
  o.note(fmt::format("200 specs, {} consistent scenarios, {:.2f}s", total, elapsed));
  o.require(mismatches == 0, fmt::format("{} specs differ from the brute-force filter", mismatches));
  o.require(elapsed < 30.0, "runtime over 30s");
  return o;
}

Outcome attractor_soundness() {
  Outcome o;
  std::mt19937_64 rng(1002);
  std::size_t fixed = 0, cycles = 0, violations = 0, unconverged = 0;
  for (int k = 0; k < 100; ++k) {
    const auto spec = fixtures::random_spec(rng, 6, 3);
    for (const auto& start : all_scenarios(spec)) {
      const auto found = cib::find_attractor(spec, spec.cim, start, 10000);
      if (std::holds_alternative<cib::NonConvergence>(found)) {
        ++unconverged;
        continue;
      }
      const auto& att = std::get<cib::Attractor>(found);
      if (att.kind == cib::Attractor::Kind::fixed_point) {
        ++fixed;
        violations += !cib::check_consistency(spec, spec.cim, att.scenarios.front()).consistent;
        violations += cib::succession_step(spec, spec.cim, att.scenarios.front()) != att.scenarios.front();
      } else {
        ++cycles;
        const auto n = att.scenarios.size();
        for (std::size_t i = 0; i < n; ++i)
          violations += cib::succession_step(spec, spec.cim, att.scenarios[i]) != att.scenarios[(i + 1) % n];
      }
    }
  }
  o.note(fmt::format("{} fixed points, {} cycles, {} unconverged searches", fixed, cycles, unconverged));
  o.require(violations == 0, fmt::format("{} violations", violations));
  return o;
}

Outcome fixture_succession() {
  Outcome o;
  const auto spec = fixtures::two_by_two();
  const auto consistent = as_set(cib::enumerate_consistent(spec, spec.cim, 4));
  o.require(consistent == std::set<std::vector<int>>{{0, 0}, {1, 1}}, "consistent set is not {(A1,B1), (A2,B2)}");

  const auto from_a1b1 = cib::find_attractor(spec, spec.cim, sc({0, 0}), 100);
  const auto* fixed = std::get_if<cib::Attractor>(&from_a1b1);
  o.require(fixed && fixed->kind == cib::Attractor::Kind::fixed_point && fixed->scenarios == std::vector{sc({0, 0})},
            "(A1,B1) is not a fixed point");

  const auto from_a1b2 = cib::find_attractor(spec, spec.cim, sc({0, 1}), 100);
  const auto* cycle = std::get_if<cib::Attractor>(&from_a1b2);
  o.require(cycle && cycle->kind == cib::Attractor::Kind::cycle && cycle->scenarios.size() == 2 &&
                as_set(cycle->scenarios) == std::set<std::vector<int>>{{0, 1}, {1, 0}},
            "(A1,B2) does not reach the 2-cycle with (A2,B1)");
  o.require(cib::succession_step(spec, spec.cim, sc({0, 1})) == sc({1, 0}) &&
                cib::succession_step(spec, spec.cim, sc({1, 0})) == sc({0, 1}),
            "succession does not alternate (A1,B2) and (A2,B1)");
  o.note("consistent {(A1,B1), (A2,B2)}; fixed point (A1,B1); cycle (A1,B2) <-> (A2,B1)");
  return o;
}

Outcome degenerate_determinism() {
  Outcome o;
  const auto spec = deterministic(fixtures::two_by_two());
  const auto ens = cib::simulate_ensemble(spec, 1000, 7, cib::kDefaultMaxIter, 2);
  const auto& first = ens.runs.front().pathway;
  const auto identical = std::count_if(ens.runs.begin(), ens.runs.end(), [&](const cib::RunRecord& r) { return r.pathway == first; });
  o.require(identical == 1000, fmt::format("only {} of 1000 pathways match the first", identical));

  const auto series = cib::state_share_series(ens, "A");
  const int terminal_state = first.terminal()[0];
  const auto& cell = series.cells.back()[static_cast<std::size_t>(terminal_state)];
  o.require(cell.share == 1.0, fmt::format("terminal share {}", cell.share));
  o.require(cell.interval.high == 1.0, "upper Wilson bound is not 1");

  double previous_low = 0.0;
  std::string lows;
  for (std::size_t n : {10u, 100u, 1000u, 100000u}) {
    const double low = cib::wilson_interval(n, n).low;
    o.require(low > previous_low, "lower bound does not grow with n");
    lows += fmt::format("{}{:.5f}", lows.empty() ? "" : ", ", low);
    previous_low = low;
  }
  o.require(previous_low > 0.9999, "lower bound does not approach 1");
  o.note("lower bounds at n=10,100,1000,100000: " + lows);
  return o;
}

Outcome sampling_calibration() {
  Outcome o;
  auto spec = fixtures::make_spec({2, 2}, {2025, 2050});
  fixtures::set(spec, 0, 0, 1, 0, 0.0, 5);
  spec.uncertainty.time_scale = {{2025, 1.0}, {2050, 1.0}};
  std::vector<double> sampled, shocked;
  bool bounded = true;
  for (std::uint64_t r = 0; r < 100000; ++r) {
    cib::RandomSource a(5001, {r, 2025, cib::Purpose::cim_sampling, 0});
    const auto cim = cib::sample_cim(spec, a, 2025);
    sampled.push_back(cim.score(0, 0, 1, 0));
    cib::RandomSource b(5002, {r, 2025, cib::Purpose::structural_shock, 0});
    const auto shock = cib::apply_structural_shock(spec.cim, b, {true, 0.30, {}});
    shocked.push_back(shock.score(0, 0, 1, 0));
    for (double s : cim.scores()) bounded &= s >= -3.0 && s <= 3.0;
    for (double s : shock.scores()) bounded &= s >= -3.0 && s <= 3.0;
  }
  const double sd_sample = sample_sd(sampled), sd_shock = sample_sd(shocked);
  o.note(fmt::format("sampling sd {:.4f}, structural sd {:.4f}", sd_sample, sd_shock));
  o.require(sd_sample >= 0.19 && sd_sample <= 0.21, "sampling sd outside [0.19, 0.21]");
  o.require(sd_shock >= 0.295 && sd_shock <= 0.305, "structural sd outside [0.295, 0.305]");
  o.require(bounded, "a draw left [-3, 3]");
  return o;
}

Outcome ar1_stationarity() {
  Outcome o;
  const cib::DynamicShockConfig cfg{true, 1.0, 0.6, {}};
  auto state = cib::DynamicShockState::initial(std::vector<int>{2}, cfg);
  cib::RandomSource rng(6001, {0, 0, cib::Purpose::dynamic_shock, 0});
  std::vector<double> xs;
  for (int k = 0; k < 100000; ++k) {
    state = cib::advance_dynamic_shock(std::move(state), rng);
    xs.push_back(state.eta.scores[0][0]);
  }
  const double sd = sample_sd(xs);
  o.note(fmt::format("long-run sd {:.4f}, innovation sd {:.4f}", sd, cib::innovation_sd(cfg)));
  o.require(sd >= 0.97 && sd <= 1.03, "long-run sd outside [0.97, 1.03]");
  o.require(std::abs(cib::innovation_sd(cfg) - 0.8) < 1e-12, "innovation sd is not 0.8");
  return o;
}

Outcome cyclic_frequencies() {
  Outcome o;
  const cib::CyclicParams params{0.7, 0.25, 0.05, 0.0};
  const std::size_t n = 10000;
  std::size_t counts[3] = {0, 0, 0};
  for (std::size_t k = 0; k < n; ++k) {
    cib::RandomSource rng(20250101, {k, 2030, cib::Purpose::cyclic_transition, 0});
    ++counts[std::abs(cib::transition_cyclic_state(params, 2, 5, rng) - 2)];
  }
  const double expected[3] = {0.7, 0.25, 0.05};
  const char* names[3] = {"stay", "step", "step2"};
  for (int m = 0; m < 3; ++m) {
    const auto ci = cib::wilson_interval(counts[m], n);
    o.note(fmt::format("{} {:.4f} in [{:.4f}, {:.4f}]", names[m], static_cast<double>(counts[m]) / n, ci.low, ci.high));
    o.require(ci.low <= expected[m] && expected[m] <= ci.high, fmt::format("{} probability {} outside its interval", names[m], expected[m]));
  }

  bool moved = false;
  for (int start = 0; start < 5; ++start)
    for (std::uint64_t k = 0; k < 2000; ++k) {
      cib::RandomSource rng(7002, {k, 2030, cib::Purpose::cyclic_transition, 0});
      moved |= cib::transition_cyclic_state({1.0, 0.0, 0.0, 0.0}, start, 5, rng) != start;
    }
  o.require(!moved, "a stay = 1 descriptor changed state");
  return o;
}

Outcome robustness_behaviour() {
  Outcome o;
  const auto spec = fixtures::two_by_two();
  double previous = 0.0;
  std::string values;
  bool first = true;
  for (double scale : {0.0, 0.15, 0.30, 0.60}) {
    const double f = cib::robustness_fraction(spec, sc({0, 0}), {true, scale, {}}, 10000, 8001);
    values += fmt::format("{}{:.4f}", first ? "" : ", ", f);
    if (first) o.require(f == 1.0, "fraction at scale 0 is not 1");
    else o.require(f <= previous + 0.02, fmt::format("fraction rises at scale {}", scale));
    previous = f;
    first = false;
  }
  o.note("fractions " + values);
  return o;
}

cib::McdaInput random_mcda(std::mt19937_64& rng, std::size_t pathways, std::size_t criteria, std::size_t personas) {
  cib::McdaInput in;
  std::uniform_int_distribution<int> score(1, 5), raw(1, 20);
  for (std::size_t p = 0; p < pathways; ++p) in.pathways.push_back(fmt::format("P{}", p + 1));
  for (std::size_t c = 0; c < criteria; ++c) in.criteria.push_back(fmt::format("c{}", c + 1));
  for (std::size_t p = 0; p < pathways; ++p) {
    in.scores.emplace_back();
    for (std::size_t c = 0; c < criteria; ++c) in.scores.back().push_back(score(rng));
  }
  for (std::size_t r = 0; r < personas; ++r) {
    // Weights in hundredths that sum to exactly one hundred.
    std::vector<int> w(criteria);
    int total = 0;
    for (auto& x : w) total += (x = raw(rng));
    int assigned = 0;
    cib::Persona persona{fmt::format("r{}", r), {}};
    for (std::size_t c = 0; c + 1 < criteria; ++c) {
      const int h = w[c] * 100 / total;
      assigned += h;
      persona.weights.push_back(h / 100.0);
    }
    persona.weights.push_back((100 - assigned) / 100.0);
    in.personas.push_back(std::move(persona));
  }
  return in;
}

Outcome mcda_exactness() {
  Outcome o;
  cib::McdaInput hand;
  hand.pathways = {"p1", "p2"};
  hand.criteria = {"c1", "c2"};
  hand.scores = {{4.0, 2.0}, {3.0, 5.0}};
  hand.personas = {{"r1", {0.5, 0.5}}, {"r2", {0.8, 0.2}}};
  const auto ranking = cib::rank_pathways(hand);
  o.note(fmt::format("V_p1 = {}, V_p2 = {}", ranking.values[0], ranking.values[1]));
  o.require(ranking.values[0] == 3.3 && ranking.values[1] == 3.7, "hand example values are not exactly 3.3 and 3.7");

  std::mt19937_64 rng(9001);
  std::size_t differences = 0;
  for (int k = 0; k < 200; ++k) {
    const auto in = random_mcda(rng, 5, 5, 8);
    const auto base = cib::rank_pathways(in).values;
    auto permuted = in;
    std::shuffle(permuted.personas.begin(), permuted.personas.end(), rng);
    differences += cib::rank_pathways(permuted).values != base;

    auto doubled = in;
    for (auto p : in.personas) {
      p.id += "_copy";
      doubled.personas.push_back(std::move(p));
    }
    differences += cib::rank_pathways(doubled).values != base;

    auto single = in;
    single.personas.resize(1);
    auto twin = single;
    twin.personas.push_back({"twin", single.personas[0].weights});
    differences += cib::rank_pathways(twin).values != cib::rank_pathways(single).values;
  }
  o.require(differences == 0, fmt::format("{} permutation or duplication cases changed V", differences));

  auto bad = hand;
  bad.personas[1].weights = {0.8, 0.3};
  bool rejected = cib::has_errors(cib::validate_mcda_input(bad));
  try {
    cib::rank_pathways(bad);
    rejected = false;
  } catch (const cib::InputError&) {
  }
  o.require(rejected, "weights summing to 1.1 were accepted");
  return o;
}

cib::Pathway driver_path(const std::vector<int>& states) {
  cib::Pathway p;
  int period = 2025;
  for (int s : states) {
    p.entries.push_back({period, sc({s, 0})});
    period += 5;
  }
  return p;
}

Outcome quantifier_exactness() {
  Outcome o;
  cib::TranslationMatrix matrix;
  matrix.tables["price"].values = {50.0, 100.0, 200.0};
  const cib::Dimension price{"price", "EUR/tCO2", 0};
  const auto qp = cib::quantify_pathway(driver_path({1, 1, 1, 1, 2, 2}), {price}, matrix);
  o.require(qp.values[0] == std::vector<double>{100, 100, 100, 100, 200, 200}, "step series differs");

  std::mt19937_64 rng(10001);
  std::uniform_int_distribution<int> state(0, 2);
  std::size_t mismatched = 0;
  for (int k = 0; k < 100; ++k) {
    std::vector<int> states(6);
    for (auto& s : states) s = state(rng);
    const auto q = cib::quantify_pathway(driver_path(states), {price}, matrix);
    int driver_changes = 0, value_changes = 0;
    for (std::size_t t = 1; t < states.size(); ++t) {
      driver_changes += states[t] != states[t - 1];
      value_changes += q.values[0][t] != q.values[0][t - 1];
    }
    mismatched += driver_changes != value_changes;
  }
  o.require(mismatched == 0, fmt::format("{} of 100 pathways change value without a driver change or vice versa", mismatched));

  std::uniform_real_distribution<double> v(0.0, 50.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    cib::QuantifiedPathway shares;
    shares.periods = {2030, 2035};
    for (int d = 0; d < 4; ++d) {
      shares.dimensions.push_back({fmt::format("x{}", d + 1), "", 0});
      shares.values.push_back({v(rng), v(rng)});
      shares.ranges.push_back({std::nullopt, std::nullopt});
      shares.provenance.push_back({cib::CellProvenance{}, cib::CellProvenance{}});
    }
    const auto repaired = cib::enforce_identities(
        shares, {{"mix", {{"x1", 1}, {"x2", 1}, {"x3", 1}}, 100.0, {"x2", "x3"}}, {"ratio", {{"x1", 2}, {"x4", -1}}, 5.0, {"x4"}}});
    const auto& x = repaired.values;
    for (std::size_t t = 0; t < 2; ++t) {
      worst = std::max(worst, std::abs(x[0][t] + x[1][t] + x[2][t] - 100.0));
      worst = std::max(worst, std::abs(2 * x[0][t] - x[3][t] - 5.0));
    }
  }
  o.note(fmt::format("largest identity residual {:.3g}", worst));
  o.require(worst <= 1e-9, "an identity residual exceeds 1e-9");
  return o;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome parallel_determinism() {
  Outcome o;
  const auto spec = cib::load_study_spec(CIB_DATA_DIR "/mini/study.json");
  const auto dir = fs::temp_directory_path() / "cib_acceptance_parallel";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::vector<std::string> hashes;
  double slowest = 0.0;
  for (std::size_t workers : {1u, 4u, 8u}) {
    const auto start = Clock::now();
    const auto ens = cib::simulate_ensemble(spec, 10000, 20250101, cib::kDefaultMaxIter, workers);
    const auto path = dir / fmt::format("ensemble_w{}.jsonl", workers);
    {
      std::ofstream out(path, std::ios::binary);
      cib::write_ensemble(out, ens);
    }
    const double elapsed = seconds_since(start);
    slowest = std::max(slowest, elapsed);
    hashes.push_back(cib::content_hash(file_bytes(path)));
    o.note(fmt::format("workers {} {:.2f}s", workers, elapsed));
  }
  fs::remove_all(dir);
  o.note("hash " + hashes.front());
  o.require(hashes[0] == hashes[1] && hashes[1] == hashes[2], "ensemble files differ across worker counts");
  o.require(slowest < 60.0, "a 10,000-run ensemble took 60s or more");
  return o;
}

Outcome wilson_formula() {
  Outcome o;
  const auto mid = cib::wilson_interval(5000, 10000, 0.95);
  o.note(fmt::format("({:.6f}, {:.6f})", mid.low, mid.high));
  o.require(std::abs(mid.low - 0.4902) <= 1e-4 && std::abs(mid.high - 0.5098) <= 1e-4, "interval differs from (0.4902, 0.5098)");
  for (std::size_t n : {1u, 10u, 1000u}) {
    o.require(cib::wilson_interval(0, n).low == 0.0, fmt::format("0/{} lower bound is not 0", n));
    o.require(cib::wilson_interval(n, n).high == 1.0, fmt::format("{0}/{0} upper bound is not 1", n));
  }
  return o;
}

cib::Pathway outcome_path(const std::vector<std::vector<int>>& states) {
  cib::Pathway p;
  int period = 2025;
  for (const auto& s : states) {
    p.entries.push_back({period, sc(s)});
    period += 5;
  }
  return p;
}

cib::Pathway outcome_only(const std::vector<int>& outcome) {
  std::vector<std::vector<int>> states;
  for (int x : outcome) states.push_back({0, x});
  return outcome_path(states);
}

Outcome screening() {
  Outcome o;
  cib::ScreeningConfig cfg;
  cfg.outcome_descriptor = 1;
  cfg.cyclic_max_step = {0, 0};
  using R = cib::RejectionReason;
  auto has = [](const std::vector<R>& rs, R r) { return std::find(rs.begin(), rs.end(), r) != rs.end(); };
  o.require(has(cib::screen_pathway(outcome_only({1, 2, 1}), cfg), R::backsliding), "backsliding not tagged");
  o.require(has(cib::screen_pathway(outcome_only({0, 0, 0, 0, 0, 2}), cfg), R::late_rush), "late rush not tagged");
  o.require(has(cib::screen_pathway(outcome_path({{0, 0}, {2, 0}, {2, 1}}), cfg), R::discontinuity), "discontinuity not tagged");
  o.require(cib::screen_pathway(outcome_only({0, 1, 1, 2}), cfg).empty(), "a monotone improving pathway was rejected");

  cib::EnsembleResult e;
  e.descriptor_ids = {"X", "O"};
  e.state_counts = {3, 3};
  e.time_grid = {2025, 2030, 2035};
  const std::vector<std::pair<cib::Pathway, std::size_t>> groups{
      {outcome_only({0, 0, 0}), 40},
      {outcome_path({{0, 0}, {1, 0}, {1, 0}}), 25},
      {outcome_only({0, 1, 1}), 15},
      {outcome_path({{0, 0}, {0, 1}, {1, 1}}), 10},
      {outcome_only({0, 1, 2}), 6},
      {outcome_path({{0, 0}, {1, 1}, {1, 2}}), 4},
      {outcome_only({1, 2, 1}), 9},
  };
  for (const auto& [p, n] : groups)
    for (std::size_t k = 0; k < n; ++k) {
      cib::RunRecord r;
      r.run_index = e.runs.size();
      r.pathway = p;
      r.converged.assign(p.entries.size(), true);
      r.succession_iterations.assign(p.entries.size(), 0);
      e.runs.push_back(std::move(r));
    }
  e.run_count = e.runs.size();
  const auto chosen = cib::select_candidates(cib::screen_candidates(e, cfg), 4, {1, 2});
  const auto best = std::count_if(chosen.candidates.begin(), chosen.candidates.end(),
                                  [](const cib::Candidate& c) { return c.pathway.terminal()[1] == 2; });
  o.note(fmt::format("{} candidates, {} with the best outcome", chosen.candidates.size(), best));
  o.require(chosen.candidates.size() == 4, "selection did not return k = 4 candidates");
  o.require(best >= 2, "fewer than two best-outcome terminals selected");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle equivalence", oracle_equivalence},
      {"attractor soundness", attractor_soundness},
      {"fixture succession", fixture_succession},
      {"degenerate determinism", degenerate_determinism},
      {"sampling calibration", sampling_calibration},
      {"AR(1) stationarity", ar1_stationarity},
      {"cyclic transition frequencies", cyclic_frequencies},
      {"robustness behaviour", robustness_behaviour},
      {"MCDA exactness", mcda_exactness},
      {"quantifier exactness", quantifier_exactness},
      {"parallel determinism", parallel_determinism},
      {"Wilson formula", wilson_formula},
      {"screening", screening},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, fmt::format("threw: {}", e.what())};
    }
    failures += !outcome.pass;
    fmt::print("{} {:>2} {}: {}\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, outcome.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
  return failures == 0 ? 0 : 1;
}
