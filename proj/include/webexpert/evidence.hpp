// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "webexpert/clustering.hpp"
#include "webexpert/types.hpp"

namespace webexpert {

struct EvidenceItem {
  SourceRef source;
  std::string text;
  double dense_score = 0.0;    // membership-weighted centroid cosine, min-max normalized
  double lexical_score = 0.0;  // membership-weighted BM25 vs the medoid question, normalized
  double fused_score = 0.0;    // alpha * dense + (1 - alpha) * lexical
  bool from_citation = false;  // false for items synthesized from bare answers
  double member_weight = 1.0;  // membership weight of the contributing member

  bool operator==(const EvidenceItem&) const = default;
};

struct EvidenceParams {
  double alpha = 0.5;             // dense weight in the fusion
  std::size_t top_n = 5;          // MMR selection size
  double mmr_lambda = 0.7;
  double jaccard_threshold = 0.8;
  std::size_t per_source_cap = 2;
  std::size_t shingle_n = 5;
  std::size_t embedding_dim = kDefaultEmbeddingDim;
};

// Pool every member's citations (quote text when present, else the member's
// answer, else its question) plus bare answers of citation-less members.
// Dense/lexical scores are weighted by membership weight and min-max
// normalized within the pool (singleton or constant pools normalize to 1.0);
// the result is sorted by fused score, descending. Throws EmptyClusterError.
std::vector<EvidenceItem> aggregate_evidence(
    const Cluster& cluster, const std::map<std::string, QATuple>& tuples,
    const EvidenceParams& params);

// Greedy Maximal Marginal Relevance: repeatedly pick the item maximizing
// mmr_lambda * fused_score - (1 - mmr_lambda) * max cosine to the selection.
// Asking for more items than the pool holds returns the whole pool.
std::vector<EvidenceItem> mmr_select(const std::vector<EvidenceItem>& items,
                                     std::size_t n, double mmr_lambda = 0.7,
                                     std::size_t embedding_dim = kDefaultEmbeddingDim);

// Scan in fused-score order; drop items whose shingle Jaccard to a kept item
// reaches the threshold, and keep at most per_source_cap items per source.
std::vector<EvidenceItem> dedup_quotes(const std::vector<EvidenceItem>& items,
                                       double jaccard_threshold = 0.8,
                                       std::size_t per_source_cap = 2,
                                       std::size_t shingle_n = 5);

}  // namespace webexpert
