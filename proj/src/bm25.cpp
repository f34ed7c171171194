// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/bm25.hpp"

#include <cmath>

#include "webexpert/errors.hpp"
#include "webexpert/text.hpp"

namespace webexpert {

CorpusStats CorpusStats::build(
    const std::vector<std::pair<std::string, std::string>>& docs) {
  CorpusStats s;
  s.doc_count = docs.size();
  std::size_t total_len = 0;
  for (const auto& [id, text] : docs) {
    auto toks = tokenize(text);
    s.doc_len[id] = toks.size();
    total_len += toks.size();
    auto& tf = s.term_freq[id];
    for (const auto& t : toks) ++tf[t];
  }
  for (const auto& [id, tf] : s.term_freq) {
    (void)id;
    for (const auto& [term, cnt] : tf) {
      (void)cnt;
      ++s.term_doc_freq[term];
    }
  }
  s.avg_doc_len = s.doc_count ? static_cast<double>(total_len) / s.doc_count : 0.0;
  return s;
}

double bm25_score(const std::vector<std::string>& query_terms,
                  const std::string& doc_id, const CorpusStats& stats,
                  double k1, double b) {
  auto len_it = stats.doc_len.find(doc_id);
  if (len_it == stats.doc_len.end()) {
    throw UnknownDocError("bm25_score: unknown doc id '" + doc_id + "'");
  }
  auto tf_it = stats.term_freq.find(doc_id);
  const std::map<std::string, std::size_t> empty_tf;
  const auto& tf = tf_it == stats.term_freq.end() ? empty_tf : tf_it->second;

  const double dl = static_cast<double>(len_it->second);
  const double avgdl = stats.avg_doc_len > 0.0 ? stats.avg_doc_len : 1.0;
  const double n_docs = static_cast<double>(stats.doc_count);

  double score = 0.0;
  for (const auto& term : query_terms) {
    auto f_it = tf.find(term);
    if (f_it == tf.end()) continue;
    double f = static_cast<double>(f_it->second);
    auto df_it = stats.term_doc_freq.find(term);
    double df = df_it == stats.term_doc_freq.end()
                    ? 0.0
                    : static_cast<double>(df_it->second);
    double idf = std::log((n_docs - df + 0.5) / (df + 0.5));
    if (idf < 0.0) idf = 0.0;
    score += idf * (f * (k1 + 1.0)) / (f + k1 * (1.0 - b + b * dl / avgdl));
  }
  return score;
}

}  // namespace webexpert
