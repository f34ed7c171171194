// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
//
// Seeded fixture generators shared by the unit, acceptance and CLI suites.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "webexpert/retrieval.hpp"
#include "webexpert/training.hpp"

namespace fixtures {

struct ToySet {
  webexpert::ExperienceBaseVersion base;
  std::vector<webexpert::TrainPair> train;
  std::vector<webexpert::TrainPair> heldout;
};

// Separable two-topic retrieval training set: one rule per marker token,
// one training query and one held-out query each.
inline ToySet separable_toy_set() {
  ToySet toy;
  const char* topic_word[2] = {"portfolio", "enzyme"};
  const char* filler[2] = {"allocation strategy", "reaction pathway"};
  for (int t = 0; t < 2; ++t) {
    for (int i = 0; i < 10; ++i) {
      std::string uniq = (t == 0 ? "alpha" : "beta") + std::to_string(i);
      webexpert::ExperienceRule r;
      r.rule_id = "r-" + uniq;
      r.rule.core_guidance =
          std::string(topic_word[t]) + " guidance " + uniq + " covers " + filler[t];
      toy.base.rules[r.rule_id] = r;
      toy.train.push_back(
          {"how to handle " + uniq + " " + topic_word[t] + " case", r.rule_id});
      toy.heldout.push_back(
          {std::string(topic_word[t]) + " question about " + uniq + " handling",
           r.rule_id});
    }
  }
  toy.base.version = 0;
  return toy;
}

// Synthetic preference pairs: the preferred plan slots the facet values of
// its topic, the rejected plan is either off-facet or redundant.
inline std::vector<webexpert::PreferencePair> preference_pairs(std::size_t n,
                                                               std::uint64_t seed) {
  struct Topic {
    std::string name;
    std::string region;
    std::string year;
  };
  const std::vector<Topic> topics = {{"solar panels", "ontario", "2021"},
                                     {"credit approval", "quebec", "2020"},
                                     {"vaccine trials", "california", "2019"},
                                     {"chip fabrication", "singapore", "2022"}};
  const std::vector<std::string> off_regions = {"texas", "bavaria", "new-york"};
  const std::vector<std::string> off_years = {"2017", "2018", "2023"};

  std::mt19937_64 rng(seed);
  std::vector<webexpert::PreferencePair> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Topic& t = topics[i % topics.size()];
    std::string q = "what figure did entity" + std::to_string(i) + " report for " +
                    t.name + "?";
    webexpert::PreferencePair p;
    p.query = q;
    p.preferred_plan = {q, q + " " + t.region, q + " " + t.year};
    if (rng() % 2 == 0) {
      // off-facet rejection
      p.rejected_plan = {q, q + " " + off_regions[rng() % off_regions.size()],
                         q + " " + off_years[rng() % off_years.size()]};
    } else {
      // redundant rejection: the same facet twice, the other one missing
      p.rejected_plan = {q, q + " " + t.region, q + " " + t.region};
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace fixtures
