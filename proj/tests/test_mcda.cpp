#include <doctest.h>

#include <algorithm>
#include <random>

#include <nlohmann/json.hpp>

#include "cib/errors.hpp"
#include "cib/mcda.hpp"

namespace {

cib::McdaInput hand_example() {
  cib::McdaInput in;
  in.pathways = {"p1", "p2"};
  in.criteria = {"c1", "c2"};
  in.scores = {{4.0, 2.0}, {3.0, 5.0}};
  in.personas = {{"r1", {0.5, 0.5}}, {"r2", {0.8, 0.2}}};
  return in;
}

cib::McdaInput random_input(std::mt19937_64& rng, std::size_t pathways, std::size_t criteria, std::size_t personas) {
  cib::McdaInput in;
  std::uniform_int_distribution<int> score(1, 5);
  std::uniform_real_distribution<double> raw(0.01, 1.0);
  for (std::size_t p = 0; p < pathways; ++p) in.pathways.push_back("P" + std::to_string(p + 1));
  for (std::size_t c = 0; c < criteria; ++c) in.criteria.push_back("c" + std::to_string(c + 1));
  for (std::size_t p = 0; p < pathways; ++p) {
    in.scores.emplace_back();
    for (std::size_t c = 0; c < criteria; ++c) in.scores.back().push_back(score(rng));
  }
  for (std::size_t r = 0; r < personas; ++r) {
    cib::Persona persona{"r" + std::to_string(r), {}};
    std::vector<double> w(criteria);
    for (auto& x : w) x = raw(rng);
    double sum = 0;
    for (double x : w) sum += x;
    // Normalise, then push the residual into the last weight so the sum is exact.
    double partial = 0;
    for (std::size_t c = 0; c + 1 < criteria; ++c) {
      w[c] /= sum;
      partial += w[c];
    }
    w.back() = 1.0 - partial;
    for (double x : w) persona.weights.push_back(x);
    in.personas.push_back(std::move(persona));
  }
  return in;
}

bool has_error_at(const std::vector<cib::Finding>& fs, const std::string& fragment) {
  return std::any_of(fs.begin(), fs.end(), [&](const cib::Finding& f) {
    return f.severity == cib::Severity::error && (f.path + " " + f.message).find(fragment) != std::string::npos;
  });
}

}  // namespace

TEST_SUITE("mcda_selector") {
  TEST_CASE("hand example") {
    const auto ranking = cib::rank_pathways(hand_example());
    CHECK(ranking.per_persona[0][0] == 3.0);
    CHECK(ranking.per_persona[1][0] == 3.6);
    CHECK(ranking.per_persona[0][1] == 4.0);
    CHECK(ranking.per_persona[1][1] == 3.4);
    CHECK(ranking.values[0] == 3.3);
    CHECK(ranking.values[1] == 3.7);
    CHECK(ranking.order == std::vector<std::size_t>{1, 0});
    CHECK(ranking.ties.empty());
  }

  TEST_CASE("validation findings") {
    auto in = hand_example();
    in.personas[0].weights = {0.5, 0.6};
    CHECK(has_error_at(cib::validate_mcda_input(in), "sum to 1.1"));
    CHECK_THROWS_AS(cib::rank_pathways(in), cib::InputError);

    in = hand_example();
    in.scores[1][1].reset();
    CHECK(has_error_at(cib::validate_mcda_input(in), "/scores/p2/c2"));

    in = hand_example();
    in.personas[1].weights = {1.2, -0.2};
    CHECK(has_error_at(cib::validate_mcda_input(in), "negative"));

    in = hand_example();
    in.scores[0][0] = 6.0;
    CHECK(has_error_at(cib::validate_mcda_input(in), "outside the scale"));

    in = hand_example();
    in.personas.clear();
    CHECK(has_error_at(cib::validate_mcda_input(in), "/personas"));

    in = hand_example();
    in.pathways.pop_back();
    in.scores.pop_back();
    CHECK(has_error_at(cib::validate_mcda_input(in), "at least two pathways"));

    in = hand_example();
    in.selected = "p9";
    CHECK(has_error_at(cib::validate_mcda_input(in), "/selected"));

    std::mt19937_64 rng(4);
    CHECK(cib::validate_mcda_input(random_input(rng, 4, 5, 10)).empty());
  }

  TEST_CASE("degenerate rankings") {
    cib::McdaInput in;
    in.pathways = {"a", "b", "c"};
    in.criteria = {"only"};
    in.scores = {{2.0}, {5.0}, {3.0}};
    in.personas = {{"solo", {1.0}}};
    CHECK(cib::rank_pathways(in).order == std::vector<std::size_t>{1, 2, 0});

    in.scores = {{3.0}, {3.0}, {3.0}};
    const auto tied = cib::rank_pathways(in);
    CHECK(tied.ties == std::vector<std::vector<std::size_t>>{{0, 1, 2}});
    CHECK(tied.order == std::vector<std::size_t>{0, 1, 2});
  }

  TEST_CASE("persona permutation and duplication leave values bit-identical") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 100; ++k) {
      const auto in = random_input(rng, 4, 5, 10);
      const auto base = cib::rank_pathways(in);

      auto permuted = in;
      std::shuffle(permuted.personas.begin(), permuted.personas.end(), rng);
      CHECK(cib::rank_pathways(permuted).values == base.values);

      auto doubled = in;
      for (auto p : in.personas) {
        p.id += "_copy";
        doubled.personas.push_back(p);
      }
      CHECK(cib::rank_pathways(doubled).values == base.values);

      auto single = in;
      single.personas.resize(1);
      auto single_dup = single;
      single_dup.personas.push_back({"twin", single.personas[0].weights});
      CHECK(cib::rank_pathways(single_dup).values == cib::rank_pathways(single).values);
    }
  }

  TEST_CASE("monotone and affine properties") {
    std::mt19937_64 rng(6);
    for (int k = 0; k < 50; ++k) {
      const auto in = random_input(rng, 4, 3, 3);
      const auto base = cib::rank_pathways(in);

      auto bumped = in;
      *bumped.scores[2][1] = std::min(5.0, *bumped.scores[2][1] + 0.5);
      if (*bumped.scores[2][1] != *in.scores[2][1]) {
        const auto after = cib::rank_pathways(bumped);
        CHECK(after.values[2] > base.values[2]);
        for (std::size_t p : {0u, 1u, 3u}) CHECK(after.values[p] == base.values[p]);
      }

      auto affine = in;
      affine.scale = {2.0 * 1 + 1, 2.0 * 5 + 1};
      for (auto& row : affine.scores)
        for (auto& s : row) s = 2.0 * *s + 1.0;
      const auto mapped = cib::rank_pathways(affine);
      for (std::size_t p = 0; p < 4; ++p) CHECK(mapped.values[p] == doctest::Approx(2.0 * base.values[p] + 1.0));
      if (base.ties.empty()) CHECK(mapped.order == base.order);
    }
  }

  TEST_CASE("decimal weights give decimal results") {
    cib::McdaInput in;
    in.pathways = {"a", "b"};
    in.criteria = {"c1", "c2", "c3"};
    in.scores = {{1.0, 1.0, 1.0}, {5.0, 2.0, 3.0}};
    in.personas = {{"r", {0.1, 0.2, 0.7}}, {"s", {0.3, 0.3, 0.4}}};
    const auto ranking = cib::rank_pathways(in);
    CHECK(ranking.values[0] == 1.0);
    CHECK(ranking.per_persona[0][1] == 3.0);
    CHECK(ranking.per_persona[1][1] == 3.3);
    CHECK(ranking.values[1] == 3.15);
  }

  TEST_CASE("document parsing and report") {
    const auto doc = nlohmann::json::parse(R"({
      "pathways": ["p1", "p2"], "criteria": ["c1", "c2"],
      "scores": {"p1": {"c1": 4, "c2": 2}, "p2": {"c1": 3, "c2": 5}},
      "personas": [{"id": "r1", "weights": {"c1": 0.5, "c2": 0.5}}, {"id": "r2", "weights": {"c1": 0.8, "c2": 0.2}}]
    })");
    const auto in = cib::parse_mcda_input(doc);
    const auto report = cib::mcda_report(in, cib::rank_pathways(in));
    CHECK(report["values"]["p1"] == 3.3);
    CHECK(report["ranking"] == nlohmann::json::array({"p2", "p1"}));
    CHECK(report["selected"] == "p2");
    CHECK(report["selection_source"] == "top_ranked");

    auto bad = doc;
    bad["scores"]["p3"] = {{"c1", 1}};
    CHECK_THROWS_AS(cib::parse_mcda_input(bad), cib::ReferenceError);

    auto chosen = doc;
    chosen["selected"] = "p1";
    const auto in2 = cib::parse_mcda_input(chosen);
    CHECK(cib::mcda_report(in2, cib::rank_pathways(in2))["selection_source"] == "override");
  }
}
