// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/evidence.hpp"

#include <algorithm>
#include <cmath>

#include "webexpert/bm25.hpp"
#include "webexpert/errors.hpp"
#include "webexpert/shingle.hpp"
#include "webexpert/text.hpp"

namespace webexpert {

namespace {

void minmax_normalize(std::vector<double>& v) {
  if (v.empty()) return;
  double lo = *std::min_element(v.begin(), v.end());
  double hi = *std::max_element(v.begin(), v.end());
  if (hi - lo < 1e-12) {
    std::fill(v.begin(), v.end(), 1.0);
    return;
  }
  for (double& x : v) x = (x - lo) / (hi - lo);
}

bool evidence_order(const EvidenceItem& a, const EvidenceItem& b) {
  if (a.fused_score != b.fused_score) return a.fused_score > b.fused_score;
  if (a.source.url_or_name != b.source.url_or_name) {
    return a.source.url_or_name < b.source.url_or_name;
  }
  return a.text < b.text;
}

}  // namespace

std::vector<EvidenceItem> aggregate_evidence(
    const Cluster& cluster, const std::map<std::string, QATuple>& tuples,
    const EvidenceParams& params) {
  if (cluster.members.empty()) {
    throw EmptyClusterError("aggregate_evidence: cluster has no members");
  }

  struct RawItem {
    EvidenceItem item;
    double member_weight;
  };
  std::vector<RawItem> pool;
  for (const auto& m : cluster.members) {
    auto it = tuples.find(m.id);
    if (it == tuples.end()) continue;
    const QATuple& t = it->second;
    for (const auto& cit : t.citations) {
      EvidenceItem e;
      e.source = cit;
      e.from_citation = true;
      e.member_weight = m.weight;
      if (cit.quote && !cit.quote->empty()) {
        e.text = *cit.quote;
      } else if (t.answer) {
        e.text = *t.answer;
      } else {
        e.text = t.question;
      }
      pool.push_back({std::move(e), m.weight});
    }
    if (t.citations.empty() && t.answer) {
      EvidenceItem e;
      e.source.url_or_name = "member:" + t.id;
      e.text = *t.answer;
      e.from_citation = false;
      e.member_weight = m.weight;
      pool.push_back({std::move(e), m.weight});
    }
  }
  if (pool.empty()) {
    // Answerless, citation-less members still yield question-text evidence.
    for (const auto& m : cluster.members) {
      auto it = tuples.find(m.id);
      if (it == tuples.end()) continue;
      EvidenceItem e;
      e.source.url_or_name = "member:" + it->second.id;
      e.text = it->second.question;
      e.from_citation = false;
      e.member_weight = m.weight;
      pool.push_back({std::move(e), m.weight});
    }
  }
  if (pool.empty()) {
    throw EmptyClusterError("aggregate_evidence: no members resolve to tuples");
  }

  // Lexical leg: BM25 of the medoid question against the pool texts.
  std::vector<std::pair<std::string, std::string>> docs;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    docs.push_back({std::to_string(i), pool[i].item.text});
  }
  CorpusStats stats = CorpusStats::build(docs);
  std::vector<std::string> medoid_terms;
  if (auto it = tuples.find(cluster.medoid_id); it != tuples.end()) {
    medoid_terms = tokenize(it->second.question);
  }

  std::vector<double> dense(pool.size()), lexical(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    dense[i] = pool[i].member_weight *
               cosine(embed_text(pool[i].item.text, params.embedding_dim),
                      cluster.centroid);
    lexical[i] = pool[i].member_weight *
                 bm25_score(medoid_terms, std::to_string(i), stats);
  }
  minmax_normalize(dense);
  minmax_normalize(lexical);

  std::vector<EvidenceItem> out;
  out.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    EvidenceItem e = std::move(pool[i].item);
    e.dense_score = dense[i];
    e.lexical_score = lexical[i];
    e.fused_score = params.alpha * dense[i] + (1.0 - params.alpha) * lexical[i];
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), evidence_order);
  return out;
}

std::vector<EvidenceItem> mmr_select(const std::vector<EvidenceItem>& items,
                                     std::size_t n, double mmr_lambda,
                                     std::size_t embedding_dim) {
  if (n == 0) throw InvalidConfigError("mmr_select: n must be >= 1");
  if (mmr_lambda < 0.0 || mmr_lambda > 1.0) {
    throw InvalidConfigError("mmr_select: lambda must be in [0,1]");
  }
  // Asking for more than the pool returns the whole pool, still greedy order.
  const std::size_t take = std::min(n, items.size());
  std::vector<Embedding> embs(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    embs[i] = embed_text(items[i].text, embedding_dim);
  }

  std::vector<bool> taken(items.size(), false);
  std::vector<EvidenceItem> out;
  while (out.size() < take) {
    long best = -1;
    double best_score = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (taken[i]) continue;
      double max_sim = 0.0;
      bool any = false;
      for (std::size_t j = 0; j < items.size(); ++j) {
        if (!taken[j]) continue;
        double s = cosine(embs[i], embs[j]);
        if (!any || s > max_sim) max_sim = s;
        any = true;
      }
      double score = mmr_lambda * items[i].fused_score -
                     (any ? (1.0 - mmr_lambda) * max_sim : 0.0);
      if (best < 0 || score > best_score ||
          (score == best_score && evidence_order(items[i], items[static_cast<std::size_t>(best)]))) {
        best = static_cast<long>(i);
        best_score = score;
      }
    }
    taken[static_cast<std::size_t>(best)] = true;
    out.push_back(items[static_cast<std::size_t>(best)]);
  }
  return out;
}

std::vector<EvidenceItem> dedup_quotes(const std::vector<EvidenceItem>& items,
                                       double jaccard_threshold,
                                       std::size_t per_source_cap,
                                       std::size_t shingle_n) {
  if (jaccard_threshold <= 0.0 || jaccard_threshold > 1.0) {
    throw InvalidConfigError("dedup_quotes: threshold must be in (0,1]");
  }
  auto ordered = items;
  std::sort(ordered.begin(), ordered.end(), evidence_order);

  std::vector<EvidenceItem> kept;
  std::map<std::string, std::size_t> per_source;
  for (const auto& item : ordered) {
    bool duplicate = false;
    for (const auto& k : kept) {
      if (!item.text.empty() && !k.text.empty() &&
          shingle_jaccard(item.text, k.text, shingle_n) >= jaccard_threshold) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;
    auto& used = per_source[item.source.url_or_name];
    if (used >= per_source_cap) continue;
    ++used;
    kept.push_back(item);
  }
  return kept;
}

}  // namespace webexpert
