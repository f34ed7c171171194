// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "webexpert/embedding.hpp"
#include "webexpert/matrix.hpp"
#include "webexpert/store.hpp"

namespace webexpert {

struct GateConfig {
  std::size_t k = 5;
  double theta = 0.3;

  void validate() const;
};

enum class GateDecision { Proceed, Fallback };

struct ScoredRule {
  std::string rule_id;
  double score = 0.0;

  bool operator==(const ScoredRule&) const = default;
};

// Top-k retrieved experiences with the gate verdict attached.
struct RetrievedExperiences {
  std::vector<ScoredRule> items;  // score descending, rule_id tie-break
  std::size_t k = 0;
  double gate_confidence = 0.0;   // mean item score, 0 when empty
  GateDecision gate_decision = GateDecision::Fallback;
};

// Retrieval index over one base version: rule embeddings (of the core
// guidance text) in rule_id order. Build once, query many times.
struct RetrievalIndex {
  std::vector<std::string> rule_ids;
  std::vector<Embedding> rule_vecs;
  std::size_t dim = kDefaultEmbeddingDim;

  static RetrievalIndex build(const ExperienceBaseVersion& base,
                              std::size_t dim = kDefaultEmbeddingDim,
                              Exec exec = Exec::Parallel);
};

// Cosine of the (optionally projected, renormalized) query and rule vectors;
// map-style kernel, bit-identical across execution modes.
std::vector<double> score_rules(const Embedding& query, const RetrievalIndex& index,
                                const Matrix* projection = nullptr,
                                Exec exec = Exec::Parallel);

// Exact top-k retrieval with the gate applied. An empty base yields no items
// and a fallback decision.
RetrievedExperiences topk_experiences(const std::string& question,
                                      const RetrievalIndex& index,
                                      const GateConfig& cfg,
                                      const Matrix* projection = nullptr,
                                      Exec exec = Exec::Parallel);

// Fallback iff the mean top-k score is below theta or no items were
// retrieved; confidence and decision are recorded on the structure.
GateDecision gate(RetrievedExperiences& retrieved, const GateConfig& cfg);

struct MinedNegatives {
  std::vector<std::string> rule_ids;
  bool insufficient = false;  // fewer than n_neg survivors existed
};

// Hard-negative mining: take the pool_size highest-scoring candidates,
// exclude the positives and every candidate whose score lies within `margin`
// of any positive's score (likely unlabeled positives), then return the
// n_neg best survivors.
MinedNegatives mine_hard_negatives(const std::string& question,
                                   const std::set<std::string>& positives,
                                   const RetrievalIndex& index, std::size_t n_neg,
                                   std::size_t pool_size = 64, double margin = 0.05,
                                   const Matrix* projection = nullptr,
                                   Exec exec = Exec::Parallel);

}  // namespace webexpert
