// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "webexpert/config.hpp"
#include "webexpert/distill.hpp"
#include "webexpert/store.hpp"

namespace webexpert {

// Generic-English background term counts used as the log-odds prior when no
// explicit background corpus is supplied.
std::map<std::string, std::size_t> builtin_background_counts();

// Unigram + bigram counts over the dataset's questions, answers and quotes.
std::map<std::string, std::size_t> dataset_term_counts(
    const std::vector<QATuple>& tuples);

struct BuildResult {
  ExperienceBaseVersion version;
  std::vector<std::string> noise_ids;
  FacetVocab vocab;
};

// Offline build: canonicalize -> cluster -> merge -> evidence -> distill ->
// facetize -> commit. Deterministic for a given (dataset, config).
BuildResult build_experience_base(std::vector<QATuple> dataset,
                                  const PipelineConfig& cfg, ExperienceStore& store,
                                  SummarizerPort* summarizer = nullptr,
                                  Exec exec = Exec::Parallel);

// Streaming refresh: warm-start clustering over the stored state, then
// re-distill only the changed clusters. Unchanged rules are carried over
// byte-identically. Throws ConfigDriftError when the config digest differs
// from the one the base was built with.
ExperienceBaseVersion streaming_update(ExperienceStore& store,
                                       const std::vector<QATuple>& new_tuples,
                                       const PipelineConfig& cfg,
                                       SummarizerPort* summarizer = nullptr,
                                       Exec exec = Exec::Parallel);

// Distill one cluster into a rule (shared by build and refresh).
ExperienceRule distill_cluster(const Cluster& cluster,
                               const std::map<std::string, QATuple>& tuple_map,
                               const FacetVocab& vocab, const FacetTables& tables,
                               const PipelineConfig& cfg, int version,
                               SummarizerPort* summarizer);

}  // namespace webexpert
