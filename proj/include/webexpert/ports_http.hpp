// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <string>
#include <vector>

#include "webexpert/distill.hpp"
#include "webexpert/embedding.hpp"
#include "webexpert/planner.hpp"

namespace webexpert {

// External-service ports, all JSON over HTTP. Disabled by default; the CLI
// wires them up only when the matching environment variable is set:
//   WEBEXPERT_EMBED_URL, WEBEXPERT_SUMMARIZER_URL, WEBEXPERT_PLANNER_URL

struct HttpPortConfig {
  std::string endpoint;  // e.g. "http://127.0.0.1:8080"
  std::string path = "/";
  int timeout_seconds = 10;
  int retries = 1;
  // Instruction template file for the summarizer port (defaults to a short
  // built-in instruction when empty); data/summarizer_prompt.txt ships one.
  std::string prompt_template_path;
};

// Embedding service: request {"texts": [string]}, response
// {"vectors": [[real; D]]}. Vectors are renormalized on receipt.
std::vector<Embedding> embed_texts_remote(const HttpPortConfig& cfg,
                                          const std::vector<std::string>& texts,
                                          std::size_t expected_dim);

// Summarizer port: request {answers, rationales, citations, instructions},
// response {conditions, core_guidance, edge_cases, failure_modes, caveats}.
// Throws SummarizerUnavailableError after the configured retries.
class HttpSummarizer : public SummarizerPort {
 public:
  explicit HttpSummarizer(HttpPortConfig cfg) : cfg_(std::move(cfg)) {}
  RuleDraft summarize(const SummaryRequest& request) override;

 private:
  HttpPortConfig cfg_;
};

// Planner port: request {question, rules: [{text, facets}], facet_keywords, M},
// response {queries: [string]}.
class HttpPlanner : public PlannerPort {
 public:
  explicit HttpPlanner(HttpPortConfig cfg) : cfg_(std::move(cfg)) {}
  std::vector<std::string> plan(const PlanRequest& request) override;

 private:
  HttpPortConfig cfg_;
};

}  // namespace webexpert
