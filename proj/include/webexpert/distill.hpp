// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "webexpert/clustering.hpp"
#include "webexpert/evidence.hpp"
#include "webexpert/facets.hpp"
#include "webexpert/types.hpp"

namespace webexpert {

struct Claim {
  enum class Polarity { Positive, Negated };

  std::string text;
  Polarity polarity = Polarity::Positive;
  std::size_t support_count = 1;
  std::vector<std::string> source_ids;

  bool operator==(const Claim&) const = default;
};

struct RuleDraft {
  std::vector<std::string> conditions;
  std::string core_guidance;
  std::vector<std::string> edge_cases;
  std::vector<std::string> failure_modes;
  std::vector<std::string> caveats;

  bool operator==(const RuleDraft&) const = default;
};

struct ExperienceRule {
  std::string rule_id;
  RuleDraft rule;
  std::vector<SourceRef> citations;  // c_m, unique by source, sorted
  FacetSet facets;                   // g_m
  double coverage = 0.0;
  double confidence = 0.0;
  std::string provenance_cluster;
  int provenance_version = 0;

  bool operator==(const ExperienceRule&) const = default;
};

// Wire format of the external summarizer port.
struct SummaryRequest {
  std::vector<std::string> answers;
  std::vector<std::string> rationales;
  std::vector<std::string> citations;
  std::string instructions;
};

class SummarizerPort {
 public:
  virtual ~SummarizerPort() = default;
  virtual RuleDraft summarize(const SummaryRequest& request) = 0;
};

struct SummarizeOptions {
  bool sentence_level = true;  // false switches to whole-answer granularity
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  // Membership weight per answer (parallel to the answers argument; empty
  // means all 1.0). Centrality scores scale by these, so soft members only
  // provide the core guidance when density members have nothing better.
  std::vector<double> answer_weights;
};

// True when the text carries a negation token ("not", "never", "cannot", ...).
bool is_negated_text(const std::string& text);

// Normalized grouping key that ignores negation and auxiliaries, with a crude
// plural/3rd-person stem so "increases" and "does not increase" collide.
std::string claim_group_key(const std::string& text);

// One claim per answer, aggregated by (group key, polarity).
std::vector<Claim> extract_claims(
    const std::vector<std::pair<std::string, std::string>>& id_answer_pairs);

struct ConsistencyResult {
  std::vector<Claim> kept;
  std::vector<Claim> folded_caveats;
  std::vector<Claim> flagged;
};

// Majority polarity per group is kept; the minority folds into caveats when
// supported by at least two sources, else it is flagged. Ties flag the group.
ConsistencyResult consistency_filter(const std::vector<Claim>& claims);

// Deterministic extractive reference summarizer: core guidance is the answer
// sentence closest to the cluster centroid, conditions / edge cases / failure
// modes are marker-scanned sentences, caveats are the minority-polarity
// claims. When `port` is non-null the request is dispatched to it instead.
RuleDraft summarize_cluster(const std::vector<EvidenceItem>& evidence,
                            const std::vector<std::string>& answers,
                            const std::vector<std::string>& rationales,
                            const Embedding& centroid,
                            const SummarizeOptions& opts = {},
                            SummarizerPort* port = nullptr);

// Assemble the final rule: citations come from the selected evidence and must
// stay inside the cluster members' citation union (CitationLeakError aborts
// otherwise); coverage is the fraction of answer-bearing members whose
// polarity agrees with the core guidance; confidence is the mean fused score
// of the cited evidence.
ExperienceRule assemble_rule(const RuleDraft& draft, const Cluster& cluster,
                             const std::vector<EvidenceItem>& selected_evidence,
                             const FacetSet& facets,
                             const std::map<std::string, QATuple>& tuples,
                             int version);

// Answerless fallback: each sentence of each document becomes a QATuple that
// feeds the regular consolidation pipeline.
std::vector<QATuple> sentence_fallback(const std::vector<std::string>& documents);

nlohmann::json rule_to_json(const ExperienceRule& r);
ExperienceRule rule_from_json(const nlohmann::json& j);

}  // namespace webexpert
