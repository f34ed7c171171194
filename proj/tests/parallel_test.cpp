// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
//
// The OpenMP kernels are map-style: each output element is computed
// independently and reductions happen serially in fixed order, so the
// parallel path must be bit-identical to the serial reference.
#include <doctest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "webexpert/clustering.hpp"
#include "webexpert/retrieval.hpp"
#include "webexpert/simeval.hpp"
#include "webexpert/training.hpp"

using namespace webexpert;

TEST_SUITE_BEGIN("parallel");

TEST_CASE("embed_batch parallel equals serial") {
  std::vector<std::string> texts;
  for (int i = 0; i < 500; ++i) {
    texts.push_back("text sample number " + std::to_string(i) + " with words");
  }
  auto serial = embed_batch(texts, kDefaultEmbeddingDim, Exec::Serial);
  auto parallel = embed_batch(texts, kDefaultEmbeddingDim, Exec::Parallel);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].values == parallel[i].values);
  }
}

TEST_CASE("pairwise similarity parallel equals serial") {
  std::vector<QATuple> tuples;
  for (int i = 0; i < 60; ++i) {
    QATuple t;
    t.id = "t" + std::to_string(100 + i);
    t.question = "question body " + std::to_string(i % 7);
    if (i % 3) t.answer = "answer body " + std::to_string(i % 5);
    tuples.push_back(t);
  }
  ClusterParams params;
  TupleViews views = TupleViews::build(tuples, params, Exec::Parallel);
  auto serial = pairwise_similarity_matrix(views, params.weights, Exec::Serial);
  auto parallel = pairwise_similarity_matrix(views, params.weights, Exec::Parallel);
  CHECK(serial == parallel);
}

TEST_CASE("rule scoring parallel equals serial") {
  ExperienceBaseVersion base;
  for (int i = 0; i < 300; ++i) {
    ExperienceRule r;
    r.rule_id = "r-" + std::to_string(i);
    r.rule.core_guidance = "guidance text " + std::to_string(i % 13);
    base.rules[r.rule_id] = r;
  }
  auto index = RetrievalIndex::build(base, kDefaultEmbeddingDim, Exec::Parallel);
  Embedding q = embed_text("guidance text query");
  CHECK(score_rules(q, index, nullptr, Exec::Serial) ==
        score_rules(q, index, nullptr, Exec::Parallel));

  Matrix p = Matrix::identity(kDefaultEmbeddingDim);
  p(0, 1) = 0.25;
  CHECK(score_rules(q, index, &p, Exec::Serial) ==
        score_rules(q, index, &p, Exec::Parallel));
}

TEST_CASE("benchmark evaluation parallel equals serial") {
  SimSpec spec;
  spec.n_questions = 8;
  spec.n_pages = 8 * 5 + 8;
  spec.answer_margin = -1.0;
  auto corpus = build_sim_corpus(spec);

  ExperienceBaseVersion base;
  ExperienceRule r;
  r.rule_id = "r-x";
  r.rule.core_guidance = "solar panels figures are filed in ontario records";
  r.facets.region = "ontario";
  apply_sentinel_defaults(r.facets);
  base.rules[r.rule_id] = r;

  EvalOptions opts;
  auto serial = evaluate_benchmark(corpus, base, opts, Exec::Serial);
  auto parallel = evaluate_benchmark(corpus, base, opts, Exec::Parallel);
  CHECK(serial.to_json().dump() == parallel.to_json().dump());
}

TEST_SUITE_END();
