// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "webexpert/facets.hpp"
#include "webexpert/retrieval.hpp"

namespace webexpert {

class TokenModel;  // training.hpp

// Multi-query plan grounded in the retrieved experiences.
struct QueryPlan {
  std::vector<std::string> queries;  // z_1..z_M
  FacetIndicatorMap active_facets;   // empty under fallback
  GateDecision gate_decision = GateDecision::Fallback;
  std::vector<std::string> provenance;  // rule ids the facets came from
};

// Wire format of the external planner port.
struct PlanRequest {
  std::string question;
  std::vector<std::pair<std::string, FacetSet>> rules;  // (core guidance, facets)
  FacetIndicatorMap facet_keywords;
  std::size_t m = 3;
};

class PlannerPort {
 public:
  virtual ~PlannerPort() = default;
  virtual std::vector<std::string> plan(const PlanRequest& request) = 0;
};

struct PlannerOptions {
  std::size_t m = 3;
  FacetTables tables = FacetTables::builtin();
  // External mode: validated against the plan invariants, one retry, then
  // reference-mode fallback.
  PlannerPort* port = nullptr;
};

// Reference planner: z_1 is the question verbatim; under a proceed gate
// z_2..z_M append facet slot values collected from the retrieved rules
// (highest-scoring rule first, facet priority time/region/policy/industry
// within a rule); under fallback the expansions are generic and contain no
// facet keywords. Deterministic. Throws EmptyQuestionError.
QueryPlan generate_plan(const std::string& question,
                        const RetrievedExperiences& retrieved,
                        const ExperienceBaseVersion& base,
                        const PlannerOptions& opts);

// Sum of token log-probabilities of every query under the model plus the
// facet coverage bonus; the score feeds loss_pref.
double score_plan(const QueryPlan& plan, const FacetIndicatorMap& phi,
                  const TokenModel& model);

}  // namespace webexpert
