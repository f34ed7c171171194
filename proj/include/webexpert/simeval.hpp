// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "webexpert/bm25.hpp"
#include "webexpert/planner.hpp"
#include "webexpert/retrieval.hpp"
#include "webexpert/types.hpp"

namespace webexpert {

struct SimPage {
  std::string page_id;
  std::string title;
  std::string body;
  std::vector<std::string> facet_labels;  // region / year value tokens
  std::vector<std::string> out_links;
  std::vector<std::string> answer_for;  // question ids answered here
  // Annotations for the leakage stress transforms.
  std::vector<std::string> entities;
  std::vector<std::string> dates;  // years as strings

  bool operator==(const SimPage&) const = default;
};

struct SimQuestion {
  std::string id;
  std::string text;
  std::string topic;
  std::vector<std::string> entities;
  std::vector<std::string> dates;
  int template_id = 0;
  std::map<std::string, std::string> slots;  // template slot -> value

  bool operator==(const SimQuestion&) const = default;
};

struct AnswerKey {
  std::string question_id;
  std::string answer;
  std::vector<std::string> answer_page_ids;

  bool operator==(const AnswerKey&) const = default;
};

struct SimCorpus {
  std::vector<SimPage> pages;
  std::vector<SimQuestion> questions;
  std::map<std::string, AnswerKey> key;
  std::vector<QATuple> expert_tuples;  // seed data for the experience base
  std::vector<std::string> entity_reserve;
  std::uint64_t seed = 0;

  bool operator==(const SimCorpus&) const = default;
};

struct SimSpec {
  std::size_t n_pages = 260;
  std::size_t n_questions = 50;
  std::size_t distractors_per_question = 4;
  // Required mean embedding gap: per question, answer-page cosine minus the
  // strongest same-entity distractor cosine, averaged over questions.
  double answer_margin = 0.01;
  std::uint64_t seed = 42;
  // no_merge ablation needs paraphrase sub-groups: phrasings per expert rule
  std::size_t expert_phrasings = 3;
};

// Seeded synthetic web corpus: per topic one (region, year) segment, expert
// tuples describing where that topic's figures are filed, one answer page per
// question (entity + topic + facets + a planted answer signature) and
// distractors sharing the vocabulary but not the facets. Validates that every
// question has an answer page and that the answer page outscores the
// distractors by the configured embedding margin (SpecInfeasibleError).
SimCorpus build_sim_corpus(const SimSpec& spec);

// The deterministic signature token planted on answer pages; derived from the
// question id, so the browsing controller never touches the answer key.
std::string answer_signature(const std::string& question_id);

struct Trajectory {
  std::string question_id;
  std::vector<std::string> plan_queries;
  std::vector<std::string> visits;  // page ids in visit order
  std::vector<std::string> cited;   // ranked citation list
  std::string answer;               // extracted span or "unknown"
  std::size_t retrieval_steps = 0;  // T_r
  std::size_t answer_steps = 0;     // T_a: 1 when an answer was emitted

  bool operator==(const Trajectory&) const = default;
};

// Page ranking index: BM25 stats plus dense embeddings over title + body.
struct SimIndex {
  CorpusStats stats;
  std::vector<std::string> page_ids;
  std::vector<Embedding> page_vecs;
  std::map<std::string, std::size_t> page_pos;
  std::size_t dim = kDefaultEmbeddingDim;

  static SimIndex build(const SimCorpus& corpus,
                        std::size_t dim = kDefaultEmbeddingDim,
                        Exec exec = Exec::Parallel);
};

// Fused (BM25 + dense, min-max normalized, alpha-weighted) ranking of all
// pages for one query; ties break by page_id.
std::vector<std::pair<std::string, double>> rank_pages(const std::string& query,
                                                       const SimCorpus& corpus,
                                                       const SimIndex& index,
                                                       double alpha = 0.5);

struct ControllerOptions {
  std::size_t hop_budget = 6;
  std::size_t visits_per_query = 2;
  double alpha = 0.5;
  std::size_t embedding_dim = kDefaultEmbeddingDim;
};

// Deterministic browsing controller: per plan query, walk the fused ranking;
// follow the best unvisited out-link instead when the current page's facet
// overlap with the plan beats the next ranked page's. Stops on an answer
// signature match or when the hop budget is exhausted ("unknown").
Trajectory run_controller(const SimQuestion& question, const QueryPlan& plan,
                          const SimCorpus& corpus, const SimIndex& index,
                          const ControllerOptions& opts);

// Fraction of queries whose top-3 ranked pages contain an answer-bearing page
// for their question (strict match against the key).
double qp_at_3(const std::vector<std::pair<std::string, std::vector<std::string>>>&
                   question_query_top3,
               const std::map<std::string, AnswerKey>& key);

// Number of distinct pages visited.
std::size_t page_hops(const Trajectory& t);

// Binary-relevance nDCG at cutoff 10 over the cited ranking; the ideal
// ordering permutes the cited list. 0 when nothing cited is relevant.
double ndcg_at_10(const std::vector<std::string>& cited,
                  const std::map<std::string, int>& relevance);

double exact_match(const std::string& answer, const std::string& gold);
double token_f1(const std::string& answer, const std::string& gold);

enum class StressKind { EntityRandomized, TimeShifted, TemplateRemix };

struct StressMapping {
  std::map<std::string, std::string> entity_map;  // original -> replacement
  int year_shift = 0;
  std::map<std::string, int> template_map;  // question id -> original template
};

// Consistent, invertible dataset transforms (seed 0 is the identity).
// Throws MissingAnnotationsError when the needed annotations are absent.
std::pair<SimCorpus, StressMapping> stress_transform(const SimCorpus& corpus,
                                                     StressKind kind,
                                                     std::uint64_t seed);

struct QuestionReport {
  std::string question_id;
  double em = 0.0;
  double f1 = 0.0;
  double qp3 = 0.0;  // fraction of this question's queries hitting top-3
  std::size_t hops = 0;
  double ndcg10 = 0.0;
  bool fallback = false;
};

struct EvalReport {
  std::vector<QuestionReport> per_question;
  double em = 0.0;
  double f1 = 0.0;
  double qp_at_3 = 0.0;  // over all generated queries
  double mean_hops = 0.0;
  double mean_ndcg10 = 0.0;
  double fallback_rate = 0.0;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string planner_mode;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

enum class PlannerMode { Faceted, Generic };

struct EvalOptions {
  GateConfig gate;
  PlannerOptions planner;
  ControllerOptions controller;
  PlannerMode mode = PlannerMode::Faceted;
  const Matrix* projection = nullptr;
  std::string config_digest;
};

// Full loop: retrieve -> gate -> plan -> browse -> score, one pass per
// question (parallel across questions, aggregation in fixed order).
EvalReport evaluate_benchmark(const SimCorpus& corpus,
                              const ExperienceBaseVersion& base,
                              const EvalOptions& opts, Exec exec = Exec::Parallel);

// Corpus io: pages.jsonl, questions.jsonl, answers.jsonl in one directory.
void save_sim_corpus(const SimCorpus& corpus, const std::string& dir);
SimCorpus load_sim_corpus(const std::string& dir);

}  // namespace webexpert
