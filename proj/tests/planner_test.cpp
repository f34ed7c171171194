// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include <doctest.h>

#include <cmath>

#include "webexpert/errors.hpp"
#include "webexpert/planner.hpp"
#include "webexpert/text.hpp"
#include "webexpert/training.hpp"

using namespace webexpert;

namespace {

ExperienceBaseVersion fixture_base() {
  ExperienceBaseVersion base;
  base.version = 0;
  ExperienceRule region_rule;
  region_rule.rule_id = "r-ont";
  region_rule.rule.core_guidance = "figures are filed in ontario records";
  region_rule.facets.region = "ontario";
  apply_sentinel_defaults(region_rule.facets);
  base.rules[region_rule.rule_id] = region_rule;

  ExperienceRule year_rule;
  year_rule.rule_id = "r-year";
  year_rule.rule.core_guidance = "figures come from the 2023 archives";
  year_rule.facets.time =
      TimeInterval{std::string("2023-01-01"), std::string("2023-12-31")};
  year_rule.facets.time_raw = "2023";
  apply_sentinel_defaults(year_rule.facets);
  base.rules[year_rule.rule_id] = year_rule;
  return base;
}

RetrievedExperiences retrieved_proceed() {
  RetrievedExperiences r;
  r.items = {{"r-ont", 0.8}, {"r-year", 0.7}};
  r.k = 5;
  r.gate_confidence = 0.75;
  r.gate_decision = GateDecision::Proceed;
  return r;
}

RetrievedExperiences retrieved_fallback() {
  RetrievedExperiences r;
  r.k = 5;
  r.gate_decision = GateDecision::Fallback;
  return r;
}

}  // namespace

TEST_SUITE_BEGIN("planner");

TEST_CASE("m equal to one degenerates to the question itself") {
  PlannerOptions opts;
  opts.m = 1;
  auto plan = generate_plan("what about figures?", retrieved_proceed(), fixture_base(),
                            opts);
  CHECK(plan.queries == std::vector<std::string>{"what about figures?"});
}

TEST_CASE("facet slots follow rule score order") {
  PlannerOptions opts;  // m = 3
  const std::string q = "where do i find the figures";
  auto plan = generate_plan(q, retrieved_proceed(), fixture_base(), opts);
  REQUIRE(plan.queries.size() == 3);
  CHECK(plan.queries[0] == q);

  // Template oracle: the top rule carries region=ontario, the second carries
  // time=2023, so the expected augmentations are exactly these.
  CHECK(plan.queries[1] == q + " ontario");
  CHECK(plan.queries[2] == q + " 2023");
  CHECK(plan.gate_decision == GateDecision::Proceed);
  CHECK(plan.provenance == std::vector<std::string>{"r-ont", "r-year"});
  CHECK(plan.active_facets.keywords.count("region") == 1);
  CHECK(plan.active_facets.keywords.count("time") == 1);
}

TEST_CASE("fallback plans contain no facet keywords") {
  PlannerOptions opts;
  const std::string q = "plain question without any slots";
  auto plan = generate_plan(q, retrieved_fallback(), fixture_base(), opts);
  REQUIRE(plan.queries.size() == 3);
  CHECK(plan.queries[0] == q);
  CHECK(plan.active_facets.empty());

  // String scan: none of the known facet keywords may appear.
  auto tables = FacetTables::builtin();
  for (const auto& query : plan.queries) {
    for (const auto& tok : tokenize(query)) {
      CHECK_FALSE(is_facet_pattern_token(tok, tables));
    }
  }
}

TEST_CASE("reference planning is deterministic") {
  PlannerOptions opts;
  auto a = generate_plan("a question", retrieved_proceed(), fixture_base(), opts);
  auto b = generate_plan("a question", retrieved_proceed(), fixture_base(), opts);
  CHECK(a.queries == b.queries);
  CHECK(a.provenance == b.provenance);
}

TEST_CASE("proceed-mode augmentations carry an indicator keyword") {
  PlannerOptions opts;
  opts.m = 4;
  auto plan = generate_plan("the question", retrieved_proceed(), fixture_base(), opts);
  REQUIRE(plan.queries.size() == 4);
  REQUIRE_FALSE(plan.active_facets.empty());
  // Every augmented query slots one facet combination while values last.
  for (std::size_t i = 1; i < 3; ++i) {
    bool has_keyword = false;
    for (const auto& tok : tokenize(plan.queries[i])) {
      if (plan.active_facets.matches_token(tok)) has_keyword = true;
    }
    CHECK(has_keyword);
  }
}

TEST_CASE("empty questions are rejected") {
  PlannerOptions opts;
  CHECK_THROWS_AS(generate_plan("  ", retrieved_proceed(), fixture_base(), opts),
                  EmptyQuestionError);
}

namespace {

class ScriptedPlanner : public PlannerPort {
 public:
  std::vector<std::vector<std::string>> responses;
  std::size_t calls = 0;

  std::vector<std::string> plan(const PlanRequest&) override {
    if (calls >= responses.size()) throw PlanInvalidError("no more scripted plans");
    return responses[calls++];
  }
};

}  // namespace

TEST_CASE("a valid external plan is accepted") {
  ScriptedPlanner port;
  port.responses = {{"q one", "q two", "q three"}};
  PlannerOptions opts;
  opts.port = &port;
  auto plan = generate_plan("question", retrieved_proceed(), fixture_base(), opts);
  CHECK(plan.queries == std::vector<std::string>{"q one", "q two", "q three"});
  CHECK(port.calls == 1);
}

TEST_CASE("two invalid external plans fall back to reference mode") {
  ScriptedPlanner port;
  port.responses = {{"only one"}, {}};  // wrong sizes twice
  PlannerOptions opts;
  opts.port = &port;
  const std::string q = "question";
  auto plan = generate_plan(q, retrieved_proceed(), fixture_base(), opts);
  CHECK(port.calls == 2);
  REQUIRE(plan.queries.size() == 3);
  CHECK(plan.queries[0] == q);  // reference shape
}

TEST_CASE("plan scores are deterministic and coverage-monotone") {
  BigramModel model(0.1);
  model.fit({{"figures", "ontario", "2023"}, {"figures", "quebec", "2022"}});
  FacetIndicatorMap phi;
  phi.keywords["region"] = {"ontario"};
  phi.keywords["time"] = {"2023"};

  QueryPlan covered;
  covered.queries = {"figures ontario", "figures 2023"};
  QueryPlan uncovered;
  uncovered.queries = {"figures quebec", "figures 2022"};

  CHECK(score_plan(covered, phi, model) == score_plan(covered, phi, model));
  CHECK(coverage_score(covered, phi) > coverage_score(uncovered, phi));

  // Hand evaluation of the score ordering: identical token-count structure,
  // so the log-prob legs match and coverage decides.
  double lp_covered = 0, lp_uncovered = 0;
  auto accumulate = [&](const QueryPlan& p, double& acc) {
    for (const auto& q : p.queries) {
      std::string prev = "<s>";
      for (const auto& tok : tokenize(q)) {
        acc += std::log(model.prob(prev, tok));
        prev = tok;
      }
    }
  };
  accumulate(covered, lp_covered);
  accumulate(uncovered, lp_uncovered);
  double expected_covered = lp_covered + coverage_score(covered, phi);
  double expected_uncovered = lp_uncovered + coverage_score(uncovered, phi);
  CHECK(score_plan(covered, phi, model) ==
        doctest::Approx(expected_covered).epsilon(1e-12));
  CHECK(score_plan(uncovered, phi, model) ==
        doctest::Approx(expected_uncovered).epsilon(1e-12));
  REQUIRE(expected_covered > expected_uncovered);
  CHECK(score_plan(covered, phi, model) > score_plan(uncovered, phi, model));
}

TEST_SUITE_END();
