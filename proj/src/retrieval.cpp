// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "webexpert/errors.hpp"

namespace webexpert {

void GateConfig::validate() const {
  if (k < 1) throw InvalidConfigError("gate: k must be >= 1");
  if (theta < 0.0 || theta > 1.0) {
    throw InvalidConfigError("gate: theta must be in [0,1]");
  }
}

RetrievalIndex RetrievalIndex::build(const ExperienceBaseVersion& base,
                                     std::size_t dim, Exec exec) {
  RetrievalIndex idx;
  idx.dim = dim;
  std::vector<std::string> texts;
  for (const auto& [id, rule] : base.rules) {
    idx.rule_ids.push_back(id);
    texts.push_back(rule.rule.core_guidance);
  }
  idx.rule_vecs = embed_batch(texts, dim, exec);
  return idx;
}

namespace {

Embedding project_unit(const Embedding& e, const Matrix& p) {
  Embedding out;
  out.values = p.apply(e.values);
  renormalize(out);
  return out;
}

}  // namespace

std::vector<double> score_rules(const Embedding& query, const RetrievalIndex& index,
                                const Matrix* projection, Exec exec) {
  Embedding q = projection ? project_unit(query, *projection) : query;
  std::vector<double> scores(index.rule_vecs.size(), 0.0);
  parallel_for(index.rule_vecs.size(), exec, [&](std::size_t i) {
    if (projection) {
      scores[i] = cosine(q, project_unit(index.rule_vecs[i], *projection));
    } else {
      scores[i] = cosine(q, index.rule_vecs[i]);
    }
  });
  return scores;
}

RetrievedExperiences topk_experiences(const std::string& question,
                                      const RetrievalIndex& index,
                                      const GateConfig& cfg,
                                      const Matrix* projection, Exec exec) {
  cfg.validate();
  RetrievedExperiences out;
  out.k = cfg.k;
  if (index.rule_ids.empty()) {
    out.gate_decision = GateDecision::Fallback;
    return out;
  }
  Embedding q = embed_text(question, index.dim);
  auto scores = score_rules(q, index, projection, exec);

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return index.rule_ids[a] < index.rule_ids[b];
  });

  const std::size_t take = std::min<std::size_t>(cfg.k, order.size());
  for (std::size_t i = 0; i < take; ++i) {
    out.items.push_back({index.rule_ids[order[i]], scores[order[i]]});
  }
  out.gate_decision = gate(out, cfg);
  return out;
}

GateDecision gate(RetrievedExperiences& retrieved, const GateConfig& cfg) {
  cfg.validate();
  if (retrieved.items.empty()) {
    retrieved.gate_confidence = 0.0;
    retrieved.gate_decision = GateDecision::Fallback;
    return retrieved.gate_decision;
  }
  double sum = 0.0;
  for (const auto& it : retrieved.items) sum += it.score;
  retrieved.gate_confidence = sum / static_cast<double>(retrieved.items.size());
  retrieved.gate_decision = retrieved.gate_confidence < cfg.theta
                                ? GateDecision::Fallback
                                : GateDecision::Proceed;
  return retrieved.gate_decision;
}

MinedNegatives mine_hard_negatives(const std::string& question,
                                   const std::set<std::string>& positives,
                                   const RetrievalIndex& index, std::size_t n_neg,
                                   std::size_t pool_size, double margin,
                                   const Matrix* projection, Exec exec) {
  if (positives.empty()) {
    throw InvalidConfigError("mine_hard_negatives: positives must be non-empty");
  }
  if (pool_size < n_neg) {
    throw InvalidConfigError("mine_hard_negatives: pool_size must be >= n_neg");
  }
  Embedding q = embed_text(question, index.dim);
  auto scores = score_rules(q, index, projection, exec);

  std::vector<double> positive_scores;
  for (std::size_t i = 0; i < index.rule_ids.size(); ++i) {
    if (positives.count(index.rule_ids[i])) positive_scores.push_back(scores[i]);
  }

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return index.rule_ids[a] < index.rule_ids[b];
  });
  if (order.size() > pool_size) order.resize(pool_size);

  MinedNegatives out;
  for (std::size_t i : order) {
    if (out.rule_ids.size() >= n_neg) break;
    const std::string& id = index.rule_ids[i];
    if (positives.count(id)) continue;
    bool within_margin = false;
    for (double ps : positive_scores) {
      if (std::abs(scores[i] - ps) < margin) {
        within_margin = true;
        break;
      }
    }
    if (within_margin) continue;
    out.rule_ids.push_back(id);
  }
  out.insufficient = out.rule_ids.size() < n_neg;
  return out;
}

}  // namespace webexpert
