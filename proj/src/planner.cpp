// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/planner.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "webexpert/errors.hpp"
#include "webexpert/text.hpp"
#include "webexpert/training.hpp"

namespace webexpert {

namespace {

// Generic expansions for the fallback path; none of these are facet-shaped.
const std::vector<std::string>& generic_suffixes() {
  static const std::vector<std::string> s = {"overview", "details", "explained",
                                             "summary", "guide"};
  return s;
}

bool plan_valid(const std::vector<std::string>& queries, std::size_t m) {
  if (queries.empty() || queries.size() != m) return false;
  for (const auto& q : queries) {
    if (squeeze_ws(q).empty()) return false;
  }
  return true;
}

QueryPlan reference_plan(const std::string& question,
                         const RetrievedExperiences& retrieved,
                         const ExperienceBaseVersion& base,
                         const PlannerOptions& opts) {
  QueryPlan plan;
  plan.gate_decision = retrieved.gate_decision;
  plan.queries.push_back(question);

  if (retrieved.gate_decision == GateDecision::Proceed) {
    std::vector<ExperienceRule> rules;
    for (const auto& item : retrieved.items) {
      auto it = base.rules.find(item.rule_id);
      if (it != base.rules.end()) {
        rules.push_back(it->second);
        plan.provenance.push_back(item.rule_id);
      }
    }
    if (!rules.empty()) {
      plan.active_facets = facet_indicators(rules, opts.tables);
    }

    // One facet combination per query: each retrieved rule contributes its
    // facet values (priority order) as a single augmentation, highest-scoring
    // rule first. Redundant rules cost query slots on purpose.
    std::vector<std::string> slots;
    for (const auto& rule : rules) {
      std::string combo;
      for (const auto& [facet, value] : ordered_facet_values(rule.facets)) {
        (void)facet;
        if (!combo.empty()) combo += " ";
        combo += value;
      }
      if (!combo.empty()) slots.push_back(combo);
    }
    std::size_t slot_i = 0, suffix_i = 0;
    while (plan.queries.size() < opts.m) {
      if (slot_i < slots.size()) {
        plan.queries.push_back(question + " " + slots[slot_i++]);
      } else {
        // Facet values exhausted; pad with covered-keyword-free expansions.
        plan.queries.push_back(
            question + " " +
            generic_suffixes()[suffix_i % generic_suffixes().size()]);
        ++suffix_i;
      }
    }
  } else {
    std::size_t suffix_i = 0;
    while (plan.queries.size() < opts.m) {
      plan.queries.push_back(
          question + " " + generic_suffixes()[suffix_i % generic_suffixes().size()]);
      ++suffix_i;
    }
  }
  return plan;
}

}  // namespace

QueryPlan generate_plan(const std::string& question,
                        const RetrievedExperiences& retrieved,
                        const ExperienceBaseVersion& base,
                        const PlannerOptions& opts) {
  if (squeeze_ws(question).empty()) {
    throw EmptyQuestionError("generate_plan: empty question");
  }
  if (opts.m < 1) throw InvalidConfigError("generate_plan: M must be >= 1");

  if (opts.port == nullptr) {
    return reference_plan(question, retrieved, base, opts);
  }

  PlanRequest req;
  req.question = question;
  req.m = opts.m;
  std::vector<ExperienceRule> rules;
  for (const auto& item : retrieved.items) {
    auto it = base.rules.find(item.rule_id);
    if (it != base.rules.end()) {
      req.rules.push_back({it->second.rule.core_guidance, it->second.facets});
      rules.push_back(it->second);
    }
  }
  if (!rules.empty() && retrieved.gate_decision == GateDecision::Proceed) {
    req.facet_keywords = facet_indicators(rules, opts.tables);
  }

  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<std::string> queries;
    try {
      queries = opts.port->plan(req);
    } catch (const Error&) {
      continue;
    }
    if (plan_valid(queries, opts.m)) {
      QueryPlan plan;
      plan.queries = std::move(queries);
      plan.gate_decision = retrieved.gate_decision;
      if (retrieved.gate_decision == GateDecision::Proceed) {
        plan.active_facets = req.facet_keywords;
        for (const auto& item : retrieved.items) plan.provenance.push_back(item.rule_id);
      }
      return plan;
    }
  }
  // Invalid external plans twice in a row: reference mode.
  return reference_plan(question, retrieved, base, opts);
}

double score_plan(const QueryPlan& plan, const FacetIndicatorMap& phi,
                  const TokenModel& model) {
  double log_prob = 0.0;
  for (const auto& q : plan.queries) {
    std::string prev = "<s>";
    for (const auto& tok : tokenize(q)) {
      if (!model.normalized(prev)) {
        throw UnnormalizedModelError("score_plan: model not normalized");
      }
      log_prob += std::log(model.prob(prev, tok));
      prev = tok;
    }
  }
  return log_prob + coverage_score(plan, phi);
}

}  // namespace webexpert
