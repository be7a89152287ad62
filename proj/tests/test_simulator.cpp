#include <doctest.h>

#include <sstream>

#include "cib/analytics.hpp"
#include "cib/engine.hpp"
#include "cib/errors.hpp"
#include "cib/hash.hpp"
#include "cib/simulator.hpp"
#include "support.hpp"

using fixtures::sc;

namespace {

cib::StudySpec deterministic(cib::StudySpec spec) {
  for (auto& [period, factor] : spec.uncertainty.time_scale) factor = 0.0;
  spec.shocks = {};
  return spec;
}

cib::StudySpec mini() { return cib::load_study_spec(CIB_DATA_DIR "/mini/study.json"); }

}  // namespace

TEST_SUITE("pathway_simulator") {
  TEST_CASE("cyclic transitions") {
    cib::RandomSource rng(1, {0, 0, cib::Purpose::cyclic_transition, 0});
    for (int k = 0; k < 500; ++k) CHECK(cib::transition_cyclic_state({1.0, 0.0, 0.0, 0.0}, 1, 3, rng) == 1);
    for (int k = 0; k < 500; ++k) CHECK(cib::transition_cyclic_state({0.0, 1.0, 0.0, 1.0}, 0, 3, rng) == 1);
    // Two steps from the middle of three states is always blocked.
    for (int k = 0; k < 500; ++k) CHECK(cib::transition_cyclic_state({0.0, 0.0, 1.0, 0.0}, 1, 3, rng) == 1);
  }

  TEST_CASE("cyclic frequencies fall inside their Wilson intervals") {
    const cib::CyclicParams params{0.7, 0.25, 0.05, 0.0};
    std::size_t stay = 0, step = 0, step2 = 0;
    const std::size_t n = 100000;
    for (std::size_t k = 0; k < n; ++k) {
      cib::RandomSource rng(99, {k, 2030, cib::Purpose::cyclic_transition, 0});
      const int d = std::abs(cib::transition_cyclic_state(params, 2, 5, rng) - 2);
      (d == 0 ? stay : d == 1 ? step : step2)++;
    }
    for (auto [count, p] : {std::pair{stay, 0.7}, std::pair{step, 0.25}, std::pair{step2, 0.05}}) {
      const auto ci = cib::wilson_interval(count, n, 0.999);
      CHECK(ci.low <= p);
      CHECK(p <= ci.high);
    }
  }

  TEST_CASE("degenerate period keeps a consistent scenario") {
    const auto spec = deterministic(fixtures::two_by_two());
    const auto shock = cib::DynamicShockState::initial(spec.state_counts(), spec.shocks.dynamic);
    const auto out = cib::simulate_period(spec, sc({0, 0}), 2030, shock, {1, 0}, 100);
    CHECK(out.scenario == sc({0, 0}));
    CHECK(out.converged);
    CHECK(out.iterations == 0);
    CHECK_THROWS_AS(cib::simulate_period(spec, sc({0, 0}), 2030, shock, {1, 0}, 0), cib::ConfigError);
  }

  TEST_CASE("a 2-cycle does not converge") {
    const auto spec = deterministic(fixtures::two_by_two());
    const auto shock = cib::DynamicShockState::initial(spec.state_counts(), spec.shocks.dynamic);
    auto out = cib::simulate_period(spec, sc({0, 1}), 2030, shock, {1, 0}, 100);
    CHECK_FALSE(out.converged);
    CHECK(out.iterations == 100);
    CHECK(out.scenario == sc({0, 1}));
    out = cib::simulate_period(spec, sc({0, 1}), 2030, shock, {1, 0}, 7);
    CHECK(out.scenario == sc({1, 0}));
  }

  TEST_CASE("a stay-only cyclic descriptor never moves") {
    auto spec = fixtures::two_by_two();
    spec.descriptors[1].kind = cib::DescriptorKind::cyclic;
    spec.descriptors[1].cyclic = cib::CyclicParams{1.0, 0.0, 0.0, 0.0};
    spec.shocks.structural.enabled = true;
    const auto ens = cib::simulate_ensemble(spec, 200, 5);
    for (const auto& run : ens.runs)
      for (const auto& e : run.pathway.entries) CHECK(e.scenario[1] == spec.baseline[1]);
  }

  TEST_CASE("deterministic ensembles") {
    auto spec = deterministic(fixtures::two_by_two());
    auto ens = cib::simulate_ensemble(spec, 3, 1);
    CHECK(ens.runs.size() == 3);
    CHECK(ens.runs[0].pathway == ens.runs[1].pathway);
    CHECK(ens.runs[1].pathway == ens.runs[2].pathway);
    for (const auto& e : ens.runs[0].pathway.entries) CHECK(e.scenario == sc({0, 0}));
    CHECK(ens.runs[0].pathway.entries.size() == spec.time_grid.size());
    CHECK_THROWS_AS(cib::simulate_ensemble(spec, 0, 1), cib::ConfigError);
  }

  TEST_CASE("ensemble invariants on the bundled study") {
    const auto spec = mini();
    const auto ens = cib::simulate_ensemble(spec, 300, 17, 100, 3);
    CHECK(ens.run_count == 300);
    for (std::size_t r = 0; r < ens.runs.size(); ++r) {
      const auto& run = ens.runs[r];
      CHECK(run.run_index == r);
      REQUIRE(run.pathway.entries.size() == spec.time_grid.size());
      CHECK(run.pathway.entries.front().scenario == spec.baseline);
      CHECK(run.converged.size() == spec.time_grid.size());
      for (std::size_t t = 0; t < spec.time_grid.size(); ++t) {
        CHECK(run.pathway.entries[t].period == spec.time_grid[t]);
        CHECK(cib::is_feasible(spec, run.pathway.entries[t].scenario));
      }
    }
  }

  TEST_CASE("converged deterministic periods are consistent") {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 30; ++k) {
      auto spec = deterministic(fixtures::random_spec(rng, 4, 3));
      spec.baseline = fixtures::random_scenario(rng, spec);
      const auto run = cib::simulate_run(spec, {3, 0}, 100);
      for (std::size_t t = 1; t < spec.time_grid.size(); ++t) {
        if (!run.converged[t]) continue;
        const auto& z = run.pathway.entries[t].scenario;
        CHECK(cib::check_consistency(spec, cib::effective_cim(spec, spec.cim, z), z).consistent);
      }
    }
  }

  TEST_CASE("worker count and run order do not change the ensemble") {
    const auto spec = mini();
    const auto one = cib::ensemble_to_string(cib::simulate_ensemble(spec, 500, 1234, 100, 1));
    const auto four = cib::ensemble_to_string(cib::simulate_ensemble(spec, 500, 1234, 100, 4));
    CHECK(cib::content_hash(one) == cib::content_hash(four));
    const auto run7 = cib::simulate_run(spec, {1234, 7}, 100);
    CHECK(run7 == cib::simulate_ensemble(spec, 500, 1234, 100, 8).runs[7]);
    CHECK(one != cib::ensemble_to_string(cib::simulate_ensemble(spec, 500, 1235, 100, 1)));
  }

  TEST_CASE("ensemble file round trip") {
    const auto ens = cib::simulate_ensemble(mini(), 50, 8);
    std::istringstream in(cib::ensemble_to_string(ens));
    CHECK(cib::read_ensemble(in) == ens);
    std::istringstream truncated("{\"format\":\"cib-ensemble/1\"}\n");
    CHECK_THROWS_AS(cib::read_ensemble(truncated), cib::ParseError);
    std::istringstream empty("");
    CHECK_THROWS_AS(cib::read_ensemble(empty), cib::ParseError);
  }

  TEST_CASE("robustness fraction") {
    const auto spec = fixtures::two_by_two();
    CHECK(cib::robustness_fraction(spec, sc({0, 0}), {true, 0.0, {}}, 100, 1) == 1.0);
    CHECK(cib::robustness_fraction(spec, sc({0, 1}), {true, 0.0, {}}, 100, 1) == 0.0);
    double previous = 1.0;
    for (double scale : {0.15, 0.30, 0.60, 1.5}) {
      const double f = cib::robustness_fraction(spec, sc({0, 0}), {true, scale, {}}, 2000, 4);
      CHECK(f <= previous + 0.02);
      previous = f;
    }
    CHECK(previous < 1.0);
    CHECK_THROWS_AS(cib::robustness_fraction(spec, sc({0, 0}), {}, 0, 1), cib::ConfigError);
  }
}
