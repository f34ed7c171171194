// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "webexpert/errors.hpp"
#include "webexpert/text.hpp"

namespace webexpert {

using nlohmann::json;

FacetTables PipelineConfig::tables() const {
  if (gazetteer_path.empty() && taxonomy_path.empty() && policy_patterns_path.empty()) {
    return FacetTables::builtin();
  }
  if (gazetteer_path.empty() || taxonomy_path.empty() || policy_patterns_path.empty()) {
    throw InvalidConfigError("facet table paths must be all set or all empty");
  }
  return FacetTables::load(gazetteer_path, taxonomy_path, policy_patterns_path);
}

void PipelineConfig::validate() const {
  if (embedding_dim < 8 || embedding_dim > 65536) {
    throw InvalidConfigError("embedding dim out of range");
  }
  if (paraphrase_threshold <= 0.0 || paraphrase_threshold > 1.0) {
    throw InvalidConfigError("paraphrase_threshold must be in (0,1]");
  }
  clustering.weights.validate();
  if (clustering.min_cluster_size < 1) {
    throw InvalidConfigError("min_cluster_size must be >= 1");
  }
  if (clustering.soft_threshold <= 0.0 || clustering.soft_threshold >= 1.0) {
    throw InvalidConfigError("soft_threshold must be in (0,1)");
  }
  if (clustering.merge_threshold <= 0.0 || clustering.merge_threshold > 1.0) {
    throw InvalidConfigError("merge_threshold must be in (0,1]");
  }
  if (evidence.alpha < 0.0 || evidence.alpha > 1.0) {
    throw InvalidConfigError("evidence alpha must be in [0,1]");
  }
  if (evidence.mmr_lambda < 0.0 || evidence.mmr_lambda > 1.0) {
    throw InvalidConfigError("mmr lambda must be in [0,1]");
  }
  if (evidence.top_n < 1) throw InvalidConfigError("evidence top_n must be >= 1");
  if (summarizer != "mock" && summarizer != "external") {
    throw InvalidConfigError("summarizer must be 'mock' or 'external'");
  }
  if (z_cut <= 0.0) throw InvalidConfigError("z_cut must be > 0");
  gate.validate();
  if (training.tau <= 0.0) throw InvalidConfigError("tau must be > 0");
  if (training.learning_rate <= 0.0) throw InvalidConfigError("lr must be > 0");
  if (training.pool_size < training.n_neg) {
    throw InvalidConfigError("pool_size must be >= n_neg");
  }
  if (plan_loss.weight_floor <= 0.0) {
    throw InvalidConfigError("weight_floor must be > 0");
  }
  if (plan_m < 1) throw InvalidConfigError("planner M must be >= 1");
  if (sim.n_pages < 10) throw InvalidConfigError("sim n_pages must be >= 10");
  if (controller.visits_per_query < 1) {
    throw InvalidConfigError("visits_per_query must be >= 1");
  }
}

json PipelineConfig::to_json() const {
  json j;
  j["embedding"] = {{"dim", embedding_dim}};
  json rules = json::array();
  for (const auto& r : delex_rules) {
    rules.push_back({{"pattern", r.pattern}, {"replace", r.replace}});
  }
  j["canonicalize"] = {{"paraphrase_threshold", paraphrase_threshold},
                       {"delex_rules", rules}};
  j["clustering"] = {{"lambda1", clustering.weights.lambda1},
                     {"lambda2", clustering.weights.lambda2},
                     {"lambda3", clustering.weights.lambda3},
                     {"min_cluster_size", clustering.min_cluster_size},
                     {"soft_threshold", clustering.soft_threshold},
                     {"merge_threshold", clustering.merge_threshold},
                     {"pca_dim", clustering.pca_dim},
                     {"topic_merge", topic_merge}};
  j["evidence"] = {{"alpha", evidence.alpha},
                   {"top_n", evidence.top_n},
                   {"mmr_lambda", evidence.mmr_lambda},
                   {"jaccard_threshold", evidence.jaccard_threshold},
                   {"per_source_cap", evidence.per_source_cap},
                   {"shingle_n", evidence.shingle_n}};
  j["distill"] = {{"summarizer", summarizer}, {"sentence_level", sentence_level}};
  j["facets"] = {{"z_cut", z_cut},
                 {"prior_scale", prior_scale},
                 {"gazetteer", gazetteer_path},
                 {"taxonomy", taxonomy_path},
                 {"policy_patterns", policy_patterns_path}};
  j["retrieval"] = {{"k", gate.k}, {"theta", gate.theta}};
  j["training"] = {{"tau", training.tau},
                   {"learning_rate", training.learning_rate},
                   {"epochs", training.epochs},
                   {"seed", training.seed},
                   {"pool_size", training.pool_size},
                   {"margin", training.margin},
                   {"n_neg", training.n_neg},
                   {"lambda_ret", training.lambda_ret},
                   {"lambda_pref", training.lambda_pref},
                   {"lambda_cov", training.lambda_cov}};
  j["plan_loss"] = {{"alpha_up", plan_loss.alpha_up},
                    {"beta_down", plan_loss.beta_down},
                    {"weight_floor", plan_loss.weight_floor}};
  j["planner"] = {{"m", plan_m}};
  j["sim"] = {{"n_pages", sim.n_pages},
              {"n_questions", sim.n_questions},
              {"distractors_per_question", sim.distractors_per_question},
              {"answer_margin", sim.answer_margin},
              {"seed", sim.seed},
              {"expert_phrasings", sim.expert_phrasings}};
  j["controller"] = {{"hop_budget", controller.hop_budget},
                     {"visits_per_query", controller.visits_per_query},
                     {"alpha", controller.alpha}};
  return j;
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  if (j.contains("embedding")) maybe(j["embedding"], "dim", c.embedding_dim);
  if (j.contains("canonicalize")) {
    const auto& s = j["canonicalize"];
    maybe(s, "paraphrase_threshold", c.paraphrase_threshold);
    if (s.contains("delex_rules")) {
      c.delex_rules.clear();
      for (const auto& r : s["delex_rules"]) {
        c.delex_rules.push_back({r.at("pattern").get<std::string>(),
                                 r.at("replace").get<std::string>()});
      }
    }
  }
  if (j.contains("clustering")) {
    const auto& s = j["clustering"];
    maybe(s, "lambda1", c.clustering.weights.lambda1);
    maybe(s, "lambda2", c.clustering.weights.lambda2);
    maybe(s, "lambda3", c.clustering.weights.lambda3);
    maybe(s, "min_cluster_size", c.clustering.min_cluster_size);
    maybe(s, "soft_threshold", c.clustering.soft_threshold);
    maybe(s, "merge_threshold", c.clustering.merge_threshold);
    maybe(s, "pca_dim", c.clustering.pca_dim);
    maybe(s, "topic_merge", c.topic_merge);
  }
  if (j.contains("evidence")) {
    const auto& s = j["evidence"];
    maybe(s, "alpha", c.evidence.alpha);
    maybe(s, "top_n", c.evidence.top_n);
    maybe(s, "mmr_lambda", c.evidence.mmr_lambda);
    maybe(s, "jaccard_threshold", c.evidence.jaccard_threshold);
    maybe(s, "per_source_cap", c.evidence.per_source_cap);
    maybe(s, "shingle_n", c.evidence.shingle_n);
  }
  if (j.contains("distill")) {
    maybe(j["distill"], "summarizer", c.summarizer);
    maybe(j["distill"], "sentence_level", c.sentence_level);
  }
  if (j.contains("facets")) {
    const auto& s = j["facets"];
    maybe(s, "z_cut", c.z_cut);
    maybe(s, "prior_scale", c.prior_scale);
    maybe(s, "gazetteer", c.gazetteer_path);
    maybe(s, "taxonomy", c.taxonomy_path);
    maybe(s, "policy_patterns", c.policy_patterns_path);
  }
  if (j.contains("retrieval")) {
    maybe(j["retrieval"], "k", c.gate.k);
    maybe(j["retrieval"], "theta", c.gate.theta);
  }
  if (j.contains("training")) {
    const auto& s = j["training"];
    maybe(s, "tau", c.training.tau);
    maybe(s, "learning_rate", c.training.learning_rate);
    maybe(s, "epochs", c.training.epochs);
    maybe(s, "seed", c.training.seed);
    maybe(s, "pool_size", c.training.pool_size);
    maybe(s, "margin", c.training.margin);
    maybe(s, "n_neg", c.training.n_neg);
    maybe(s, "lambda_ret", c.training.lambda_ret);
    maybe(s, "lambda_pref", c.training.lambda_pref);
    maybe(s, "lambda_cov", c.training.lambda_cov);
  }
  if (j.contains("plan_loss")) {
    const auto& s = j["plan_loss"];
    maybe(s, "alpha_up", c.plan_loss.alpha_up);
    maybe(s, "beta_down", c.plan_loss.beta_down);
    maybe(s, "weight_floor", c.plan_loss.weight_floor);
  }
  if (j.contains("planner")) maybe(j["planner"], "m", c.plan_m);
  if (j.contains("sim")) {
    const auto& s = j["sim"];
    maybe(s, "n_pages", c.sim.n_pages);
    maybe(s, "n_questions", c.sim.n_questions);
    maybe(s, "distractors_per_question", c.sim.distractors_per_question);
    maybe(s, "answer_margin", c.sim.answer_margin);
    maybe(s, "seed", c.sim.seed);
    maybe(s, "expert_phrasings", c.sim.expert_phrasings);
  }
  if (j.contains("controller")) {
    const auto& s = j["controller"];
    maybe(s, "hop_budget", c.controller.hop_budget);
    maybe(s, "visits_per_query", c.controller.visits_per_query);
    maybe(s, "alpha", c.controller.alpha);
  }
  c.clustering.embedding_dim = c.embedding_dim;
  c.evidence.embedding_dim = c.embedding_dim;
  c.controller.embedding_dim = c.embedding_dim;
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfigError("cannot open config: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw InvalidConfigError("config is not valid JSON: " + path);
  return from_json(j);
}

void PipelineConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write config: " + path);
  out << to_json().dump(2) << "\n";
}

std::string PipelineConfig::digest() const {
  return to_hex(fnv1a64(to_json().dump()));
}

}  // namespace webexpert
