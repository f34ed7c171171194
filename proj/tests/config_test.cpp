// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "webexpert/config.hpp"
#include "webexpert/errors.hpp"

using namespace webexpert;
using nlohmann::json;

TEST_SUITE_BEGIN("config");

TEST_CASE("defaults validate and serialize") {
  PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK_FALSE(cfg.digest().empty());
}

TEST_CASE("the digest is stable across source key ordering") {
  // Same document content, different key order in the raw text.
  std::string a = R"({"retrieval": {"k": 4, "theta": 0.25}, "planner": {"m": 2}})";
  std::string b = R"({"planner": {"m": 2}, "retrieval": {"theta": 0.25, "k": 4}})";
  auto ca = PipelineConfig::from_json(json::parse(a));
  auto cb = PipelineConfig::from_json(json::parse(b));
  CHECK(ca.digest() == cb.digest());

  PipelineConfig defaults;
  CHECK(ca.digest() != defaults.digest());
}

TEST_CASE("round-trip through json preserves the digest") {
  PipelineConfig cfg;
  cfg.gate.k = 3;
  cfg.training.epochs = 17;
  auto back = PipelineConfig::from_json(cfg.to_json());
  CHECK(back.digest() == cfg.digest());
}

TEST_CASE("out-of-range values are rejected") {
  PipelineConfig cfg;
  cfg.gate.theta = 1.1;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfigError);

  PipelineConfig cfg2;
  cfg2.clustering.weights = {0.9, 0.2, 0.2};
  CHECK_THROWS_AS(cfg2.validate(), InvalidConfigError);

  PipelineConfig cfg3;
  cfg3.plan_m = 0;
  CHECK_THROWS_AS(cfg3.validate(), InvalidConfigError);

  CHECK_THROWS_AS(
      PipelineConfig::from_json(json::parse(R"({"retrieval": {"theta": 1.5}})")),
      InvalidConfigError);
}

TEST_SUITE_END();
