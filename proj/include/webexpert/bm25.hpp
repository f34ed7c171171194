// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <map>
#include <string>
#include <vector>

namespace webexpert {

// Okapi BM25 corpus statistics. Documents are identified by caller-chosen
// string ids; term frequencies are kept per document so scores can be
// recomputed for any (query, doc) pair.
struct CorpusStats {
  std::size_t doc_count = 0;
  std::map<std::string, std::size_t> doc_len;                       // id -> token count
  double avg_doc_len = 0.0;
  std::map<std::string, std::size_t> term_doc_freq;                 // term -> #docs containing it
  std::map<std::string, std::map<std::string, std::size_t>> term_freq;  // id -> term -> count

  static CorpusStats build(const std::vector<std::pair<std::string, std::string>>& docs);
};

// Okapi BM25 with the IDF term floored at zero, so terms present in more
// than half the corpus (and everything in single-doc corpora) contribute 0.
// Throws UnknownDocError when doc_id is not in stats.
double bm25_score(const std::vector<std::string>& query_terms,
                  const std::string& doc_id, const CorpusStats& stats,
                  double k1 = 1.2, double b = 0.75);

}  // namespace webexpert
