// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
//
// webexpert — build, refresh, query and evaluate an expert experience base.
//
// Commands: build, refresh, retrieve, plan, train, simulate, eval, ablate.
// Pipeline parameters live in a JSON config document; flags only select the
// command, paths and seed overrides. External service endpoints are read
// from the environment: WEBEXPERT_SUMMARIZER_URL and WEBEXPERT_PLANNER_URL
// (plus WEBEXPERT_SUMMARIZER_PROMPT for an instruction template file).

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <nlohmann/json.hpp>

#include "webexpert/config.hpp"
#include "webexpert/errors.hpp"
#include "webexpert/pipeline.hpp"
#include "webexpert/ports_http.hpp"
#include "webexpert/simeval.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace webexpert;

namespace {

PipelineConfig load_config(const std::string& path) {
  if (path.empty()) return PipelineConfig{};
  return PipelineConfig::load(path);
}

std::unique_ptr<SummarizerPort> make_summarizer(const PipelineConfig& cfg) {
  if (cfg.summarizer != "external") return nullptr;
  const char* url = std::getenv("WEBEXPERT_SUMMARIZER_URL");
  if (url == nullptr) {
    throw InvalidConfigError(
        "summarizer=external requires WEBEXPERT_SUMMARIZER_URL");
  }
  HttpPortConfig port;
  port.endpoint = url;
  if (const char* tmpl = std::getenv("WEBEXPERT_SUMMARIZER_PROMPT")) {
    port.prompt_template_path = tmpl;
  }
  return std::make_unique<HttpSummarizer>(port);
}

void emit_error(const std::exception& e) {
  json err;
  err["error"] = {{"type", "error"}, {"message", e.what()}};
  std::cerr << err.dump() << "\n";
}

EvalOptions eval_options(const PipelineConfig& cfg, PlannerMode mode,
                         const Matrix* projection) {
  EvalOptions opts;
  opts.gate = cfg.gate;
  opts.planner.m = cfg.plan_m;
  opts.planner.tables = cfg.tables();
  opts.controller = cfg.controller;
  opts.mode = mode;
  opts.projection = projection;
  opts.config_digest = cfg.digest();
  return opts;
}

int cmd_build(const std::string& dataset, const std::string& config,
              const std::string& out) {
  PipelineConfig cfg = load_config(config);
  auto tuples = load_qa_jsonl(dataset);
  if (tuples.empty()) throw Error("dataset is empty: " + dataset);
  auto store = ExperienceStore::open(out);
  if (!store.empty()) {
    throw Error("store at " + out + " already has versions; use refresh");
  }
  auto summarizer = make_summarizer(cfg);
  auto result = build_experience_base(tuples, cfg, store, summarizer.get());
  json j;
  j["version"] = result.version.version;
  j["rule_count"] = result.version.rules.size();
  j["noise_ids"] = result.noise_ids;
  j["config_digest"] = result.version.config_digest;
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_refresh(const std::string& base_dir, const std::string& dataset,
                const std::string& config) {
  PipelineConfig cfg = load_config(config);
  auto tuples = load_qa_jsonl(dataset);
  auto store = ExperienceStore::open(base_dir);
  auto summarizer = make_summarizer(cfg);
  auto version = streaming_update(store, tuples, cfg, summarizer.get());
  json j;
  j["version"] = version.version;
  j["rule_count"] = version.rules.size();
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_retrieve(const std::string& base_dir, const std::string& query,
                 const std::string& config, const std::string& projection_path) {
  PipelineConfig cfg = load_config(config);
  auto store = ExperienceStore::open(base_dir);
  auto base = store.latest();
  RetrievalIndex index = RetrievalIndex::build(base, cfg.embedding_dim);
  Matrix projection;
  const Matrix* proj = nullptr;
  if (!projection_path.empty()) {
    projection = load_matrix(projection_path);
    proj = &projection;
  }
  auto retrieved = topk_experiences(query, index, cfg.gate, proj);
  json j;
  j["query"] = query;
  j["gate_confidence"] = retrieved.gate_confidence;
  j["gate_decision"] =
      retrieved.gate_decision == GateDecision::Proceed ? "proceed" : "fallback";
  j["items"] = json::array();
  for (const auto& item : retrieved.items) {
    const auto& rule = base.rules.at(item.rule_id);
    j["items"].push_back({{"rule_id", item.rule_id},
                          {"score", item.score},
                          {"core_guidance", rule.rule.core_guidance}});
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_plan(const std::string& base_dir, const std::string& query,
             const std::string& config) {
  PipelineConfig cfg = load_config(config);
  auto store = ExperienceStore::open(base_dir);
  auto base = store.latest();
  RetrievalIndex index = RetrievalIndex::build(base, cfg.embedding_dim);
  auto retrieved = topk_experiences(query, index, cfg.gate);

  PlannerOptions popts;
  popts.m = cfg.plan_m;
  popts.tables = cfg.tables();
  std::unique_ptr<HttpPlanner> http_planner;
  if (const char* url = std::getenv("WEBEXPERT_PLANNER_URL")) {
    HttpPortConfig port;
    port.endpoint = url;
    http_planner = std::make_unique<HttpPlanner>(port);
    popts.port = http_planner.get();
  }
  auto plan = generate_plan(query, retrieved, base, popts);
  json j;
  j["question"] = query;
  j["queries"] = plan.queries;
  j["fallback"] = plan.gate_decision == GateDecision::Fallback;
  j["active_facets"] = plan.active_facets.keywords;
  j["provenance"] = plan.provenance;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_train(const std::string& base_dir, const std::string& pairs_path,
              const std::string& config, const std::string& out_matrix,
              const std::string& curve_out) {
  PipelineConfig cfg = load_config(config);
  auto store = ExperienceStore::open(base_dir);
  auto base = store.latest();
  RetrievalIndex index = RetrievalIndex::build(base, cfg.embedding_dim);

  std::vector<TrainPair> pairs;
  {
    std::ifstream in(pairs_path);
    if (!in) throw Error("cannot open training pairs: " + pairs_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j = json::parse(line);
      pairs.push_back({j.at("query").get<std::string>(),
                       j.at("positive_rule_id").get<std::string>()});
    }
  }
  auto result = train_projection(pairs, index, cfg.training);
  save_matrix(result.projection, out_matrix);
  json j;
  j["epochs"] = cfg.training.epochs;
  j["loss_curve"] = result.loss_curve;
  if (!result.loss_curve.empty()) {
    j["initial_loss"] = result.loss_curve.front();
    j["final_loss"] = result.loss_curve.back();
  }
  j["projection_file"] = out_matrix;
  j["full_scale_recipe"] = {{"learning_rate", cfg.training.full_scale.learning_rate},
                            {"schedule", cfg.training.full_scale.schedule},
                            {"beta2", cfg.training.full_scale.beta2}};
  if (!curve_out.empty()) {
    std::ofstream out(curve_out);
    out << j.dump(2) << "\n";
  }
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_simulate(const std::string& config, const std::string& out_dir,
                 long long seed_override) {
  PipelineConfig cfg = load_config(config);
  if (seed_override >= 0) cfg.sim.seed = static_cast<std::uint64_t>(seed_override);
  SimCorpus corpus = build_sim_corpus(cfg.sim);
  save_sim_corpus(corpus, out_dir);
  json j;
  j["pages"] = corpus.pages.size();
  j["questions"] = corpus.questions.size();
  j["expert_tuples"] = corpus.expert_tuples.size();
  j["out_dir"] = out_dir;
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_eval(const std::string& base_dir, const std::string& sim_dir,
             const std::string& config, const std::string& report_out,
             const std::string& planner_mode, const std::string& projection_path) {
  PipelineConfig cfg = load_config(config);
  auto store = ExperienceStore::open(base_dir);
  auto base = store.latest();
  SimCorpus corpus = load_sim_corpus(sim_dir);

  Matrix projection;
  const Matrix* proj = nullptr;
  if (!projection_path.empty()) {
    projection = load_matrix(projection_path);
    proj = &projection;
  }
  PlannerMode mode =
      planner_mode == "generic" ? PlannerMode::Generic : PlannerMode::Faceted;
  EvalReport report = evaluate_benchmark(corpus, base, eval_options(cfg, mode, proj));
  std::cout << report.to_table();
  if (!report_out.empty()) {
    std::ofstream out(report_out);
    out << report.to_json().dump(2) << "\n";
  } else {
    std::cout << report.to_json().dump() << "\n";
  }
  return 0;
}

int cmd_ablate(const std::string& config, const std::string& work_dir,
               const std::string& variants_csv, const std::string& report_out,
               long long seed_override) {
  PipelineConfig cfg = load_config(config);
  if (seed_override >= 0) cfg.sim.seed = static_cast<std::uint64_t>(seed_override);
  std::vector<std::string> variants;
  {
    std::string cur;
    for (char c : variants_csv) {
      if (c == ',') {
        if (!cur.empty()) variants.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) variants.push_back(cur);
  }
  if (variants.empty()) throw InvalidConfigError("ablate: empty variant list");
  for (const auto& v : variants) {
    if (v != "full" && v != "no_merge" && v != "no_sentence_embed" && v != "k1" &&
        v != "generic") {
      throw InvalidConfigError("ablate: unknown variant '" + v + "'");
    }
  }

  SimCorpus corpus = build_sim_corpus(cfg.sim);
  json rows = json::array();
  std::printf("%-18s %6s %8s %8s %8s %8s\n", "variant", "rules", "QP@3", "hops",
              "nDCG@10", "EM");
  for (const auto& variant : variants) {
    PipelineConfig vcfg = cfg;
    PlannerMode mode = PlannerMode::Faceted;
    if (variant == "no_merge") vcfg.topic_merge = false;
    if (variant == "no_sentence_embed") vcfg.sentence_level = false;
    if (variant == "k1") vcfg.gate.k = 1;
    if (variant == "generic") mode = PlannerMode::Generic;

    fs::path store_dir = fs::path(work_dir) / ("base_" + variant);
    fs::remove_all(store_dir);
    auto store = ExperienceStore::open(store_dir.string());
    auto built = build_experience_base(corpus.expert_tuples, vcfg, store);
    EvalReport report =
        evaluate_benchmark(corpus, built.version, eval_options(vcfg, mode, nullptr));
    std::printf("%-18s %6zu %8.4f %8.2f %8.4f %8.4f\n", variant.c_str(),
                built.version.rules.size(), report.qp_at_3, report.mean_hops,
                report.mean_ndcg10, report.em);
    rows.push_back({{"variant", variant},
                    {"rules", built.version.rules.size()},
                    {"qp_at_3", report.qp_at_3},
                    {"mean_hops", report.mean_hops},
                    {"mean_ndcg10", report.mean_ndcg10},
                    {"em", report.em}});
  }
  if (!report_out.empty()) {
    std::ofstream out(report_out);
    out << rows.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"expert experience pipeline"};
  app.require_subcommand(1);

  std::string dataset, config, out_dir, base_dir, query, sim_dir, report_out;
  std::string pairs_path, matrix_out = "projection.json", curve_out;
  std::string planner_mode = "faceted", projection_path;
  std::string variants = "full,no_merge,no_sentence_embed,k1,generic";
  long long seed_override = -1;

  auto* build = app.add_subcommand("build", "build an experience base from QA JSONL");
  build->add_option("dataset", dataset, "QA tuples (JSON Lines)")->required();
  build->add_option("--config", config, "pipeline config JSON");
  build->add_option("--out", out_dir, "store directory")->required();

  auto* refresh = app.add_subcommand("refresh", "streaming update with new tuples");
  refresh->add_option("base", base_dir, "store directory")->required();
  refresh->add_option("dataset", dataset, "new QA tuples (JSON Lines)")->required();
  refresh->add_option("--config", config, "pipeline config JSON");

  auto* retrieve = app.add_subcommand("retrieve", "top-k experiences for a question");
  retrieve->add_option("base", base_dir)->required();
  retrieve->add_option("--query", query)->required();
  retrieve->add_option("--config", config);
  retrieve->add_option("--projection", projection_path, "trained projection matrix");

  auto* plan = app.add_subcommand("plan", "facet-grounded multi-query plan");
  plan->add_option("base", base_dir)->required();
  plan->add_option("--query", query)->required();
  plan->add_option("--config", config);

  auto* train = app.add_subcommand("train", "train the retrieval projection");
  train->add_option("base", base_dir)->required();
  train->add_option("pairs", pairs_path, "JSONL {query, positive_rule_id}")->required();
  train->add_option("--config", config);
  train->add_option("--out", matrix_out, "projection output file");
  train->add_option("--curve", curve_out, "loss curve JSON output");

  auto* simulate = app.add_subcommand("simulate", "generate the synthetic corpus");
  simulate->add_option("--config", config);
  simulate->add_option("--out", out_dir)->required();
  simulate->add_option("--seed", seed_override, "override the corpus seed");

  auto* eval = app.add_subcommand("eval", "run the benchmark loop and metrics");
  eval->add_option("--base", base_dir)->required();
  eval->add_option("--sim", sim_dir)->required();
  eval->add_option("--config", config);
  eval->add_option("--report", report_out, "report JSON output");
  eval->add_option("--planner", planner_mode, "faceted | generic");
  eval->add_option("--projection", projection_path);

  auto* ablate = app.add_subcommand("ablate", "compare pipeline variants");
  ablate->add_option("--config", config);
  ablate->add_option("--work", out_dir, "working directory")->required();
  ablate->add_option("--variants", variants, "comma-separated variant list");
  ablate->add_option("--report", report_out);
  ablate->add_option("--seed", seed_override, "override the corpus seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) return cmd_build(dataset, config, out_dir);
    if (refresh->parsed()) return cmd_refresh(base_dir, dataset, config);
    if (retrieve->parsed())
      return cmd_retrieve(base_dir, query, config, projection_path);
    if (plan->parsed()) return cmd_plan(base_dir, query, config);
    if (train->parsed())
      return cmd_train(base_dir, pairs_path, config, matrix_out, curve_out);
    if (simulate->parsed()) return cmd_simulate(config, out_dir, seed_override);
    if (eval->parsed())
      return cmd_eval(base_dir, sim_dir, config, report_out, planner_mode,
                      projection_path);
    if (ablate->parsed())
      return cmd_ablate(config, out_dir, variants, report_out, seed_override);
  } catch (const std::exception& e) {
    emit_error(e);
    return 1;
  }
  return 0;
}
