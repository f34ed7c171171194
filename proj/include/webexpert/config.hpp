// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <string>

#include "webexpert/canonicalize.hpp"
#include "webexpert/clustering.hpp"
#include "webexpert/evidence.hpp"
#include "webexpert/retrieval.hpp"
#include "webexpert/simeval.hpp"
#include "webexpert/training.hpp"

namespace webexpert {

// Whole-pipeline configuration, loaded from a single JSON document. Every
// knob that influences build output feeds the digest, which gates streaming
// updates against config drift.
struct PipelineConfig {
  std::size_t embedding_dim = kDefaultEmbeddingDim;

  std::vector<DelexRule> delex_rules = default_delex_rules();
  double paraphrase_threshold = 0.35;

  ClusterParams clustering;
  bool topic_merge = true;

  EvidenceParams evidence;

  std::string summarizer = "mock";  // "mock" | "external"
  bool sentence_level = true;

  double z_cut = 1.96;
  double prior_scale = 10.0;
  std::string gazetteer_path;        // empty = builtin tables
  std::string taxonomy_path;
  std::string policy_patterns_path;

  GateConfig gate;
  TrainingConfig training;
  PlanLossConfig plan_loss;
  std::size_t plan_m = 3;

  SimSpec sim;
  ControllerOptions controller;

  FacetTables tables() const;

  void validate() const;
  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::string& path);
  void save(const std::string& path) const;

  // FNV-1a of the canonical (sorted-key) serialization; key order in the
  // source document does not matter.
  std::string digest() const;
};

}  // namespace webexpert
