// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/ports_http.hpp"

#include <httplib.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "webexpert/errors.hpp"

namespace webexpert {

using nlohmann::json;

namespace {

json post_json(const HttpPortConfig& cfg, const json& body) {
  httplib::Client client(cfg.endpoint);
  client.set_connection_timeout(cfg.timeout_seconds);
  client.set_read_timeout(cfg.timeout_seconds);
  for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
    auto res = client.Post(cfg.path, body.dump(), "application/json");
    if (res && res->status == 200) {
      json parsed = json::parse(res->body, nullptr, false);
      if (!parsed.is_discarded()) return parsed;
    }
  }
  throw Error("port at " + cfg.endpoint + cfg.path + " did not answer");
}

}  // namespace

std::vector<Embedding> embed_texts_remote(const HttpPortConfig& cfg,
                                          const std::vector<std::string>& texts,
                                          std::size_t expected_dim) {
  json req;
  req["texts"] = texts;
  json res = post_json(cfg, req);
  if (!res.contains("vectors") || !res["vectors"].is_array() ||
      res["vectors"].size() != texts.size()) {
    throw Error("embedding service returned a malformed response");
  }
  std::vector<Embedding> out;
  for (const auto& v : res["vectors"]) {
    Embedding e;
    e.values = v.get<std::vector<double>>();
    if (e.values.size() != expected_dim) {
      throw DimensionMismatchError("embedding service returned dimension " +
                                   std::to_string(e.values.size()) + ", expected " +
                                   std::to_string(expected_dim));
    }
    renormalize(e);
    out.push_back(std::move(e));
  }
  return out;
}

RuleDraft HttpSummarizer::summarize(const SummaryRequest& request) {
  json req;
  req["answers"] = request.answers;
  req["rationales"] = request.rationales;
  req["citations"] = request.citations;
  req["instructions"] = request.instructions;
  if (!cfg_.prompt_template_path.empty()) {
    std::ifstream tmpl(cfg_.prompt_template_path);
    if (!tmpl) {
      throw SummarizerUnavailableError("cannot open prompt template: " +
                                       cfg_.prompt_template_path);
    }
    std::stringstream buf;
    buf << tmpl.rdbuf();
    req["instructions"] = buf.str();
  }
  json res;
  try {
    res = post_json(cfg_, req);
  } catch (const Error& e) {
    throw SummarizerUnavailableError(e.what());
  }
  RuleDraft draft;
  try {
    draft.conditions = res.at("conditions").get<std::vector<std::string>>();
    draft.core_guidance = res.at("core_guidance").get<std::string>();
    draft.edge_cases = res.at("edge_cases").get<std::vector<std::string>>();
    draft.failure_modes = res.at("failure_modes").get<std::vector<std::string>>();
    draft.caveats = res.at("caveats").get<std::vector<std::string>>();
  } catch (const json::exception&) {
    throw SummarizerUnavailableError("summarizer returned a malformed response");
  }
  if (draft.core_guidance.empty()) {
    throw SummarizerUnavailableError("summarizer returned empty core guidance");
  }
  return draft;
}

std::vector<std::string> HttpPlanner::plan(const PlanRequest& request) {
  json req;
  req["question"] = request.question;
  req["rules"] = json::array();
  for (const auto& [text, facets] : request.rules) {
    req["rules"].push_back({{"text", text}, {"facets", facet_set_to_json(facets)}});
  }
  req["facet_keywords"] = request.facet_keywords.keywords;
  req["M"] = request.m;
  json res = post_json(cfg_, req);
  if (!res.contains("queries") || !res["queries"].is_array()) {
    throw PlanInvalidError("planner returned a malformed response");
  }
  return res["queries"].get<std::vector<std::string>>();
}

}  // namespace webexpert
