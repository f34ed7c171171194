// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
//
// Shell-level tests of the webexpert binary (path via WEBEXPERT_BIN).
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "webexpert/config.hpp"
#include "webexpert/pipeline.hpp"
#include "webexpert/simeval.hpp"

using namespace webexpert;
using nlohmann::json;
namespace fs = std::filesystem;

#ifndef WEBEXPERT_DATA_DIR
#define WEBEXPERT_DATA_DIR "data"
#endif

namespace {

std::string binary() {
  const char* bin = std::getenv("WEBEXPERT_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "WEBEXPERT_BIN must point at the CLI binary");
  return bin;
}

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  std::string cmd = binary() + " " + args + " 2>&1";
  std::array<char, 4096> chunk{};
  RunResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::size_t got;
  while ((got = fread(chunk.data(), 1, chunk.size(), pipe)) > 0) {
    result.output.append(chunk.data(), got);
  }
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / name;
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string golden_dataset() {
  return std::string(WEBEXPERT_DATA_DIR) + "/fixtures/table1.jsonl";
}

json last_json_line(const std::string& output) {
  std::istringstream in(output);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '{') last = line;
  }
  REQUIRE_FALSE(last.empty());
  return json::parse(last);
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("build reports the version and rule count") {
  TempDir dir("wx_cli_build");
  auto out = run_cli("build " + golden_dataset() + " --out " +
                     (dir.path / "base").string());
  REQUIRE(out.exit_code == 0);
  auto j = last_json_line(out.output);
  CHECK(j["version"] == 0);
  CHECK(j["rule_count"] == 1);
  CHECK(fs::exists(dir.path / "base" / "rules-0.jsonl"));
  CHECK(fs::exists(dir.path / "base" / "manifest.json"));
}

TEST_CASE("an empty dataset fails with a structured error") {
  TempDir dir("wx_cli_empty");
  std::ofstream(dir.path / "empty.jsonl").close();
  auto out = run_cli("build " + (dir.path / "empty.jsonl").string() + " --out " +
                     (dir.path / "base").string());
  CHECK(out.exit_code != 0);
  CHECK(out.output.find("\"error\"") != std::string::npos);
}

TEST_CASE("rebuilding with the same inputs is byte-identical") {
  TempDir dir("wx_cli_det");
  REQUIRE(run_cli("build " + golden_dataset() + " --out " +
                  (dir.path / "b1").string())
              .exit_code == 0);
  REQUIRE(run_cli("build " + golden_dataset() + " --out " +
                  (dir.path / "b2").string())
              .exit_code == 0);
  CHECK(slurp(dir.path / "b1" / "rules-0.jsonl") ==
        slurp(dir.path / "b2" / "rules-0.jsonl"));
}

TEST_CASE("invalid config values fail before any work") {
  TempDir dir("wx_cli_badcfg");
  std::ofstream(dir.path / "bad.json") << R"({"retrieval": {"theta": 1.1}})";
  auto out = run_cli("retrieve " + (dir.path / "missing_base").string() +
                     " --query anything --config " + (dir.path / "bad.json").string());
  CHECK(out.exit_code != 0);
  CHECK(out.output.find("theta") != std::string::npos);
}

TEST_CASE("retrieve and plan expose the gate decision") {
  TempDir dir("wx_cli_plan");
  REQUIRE(run_cli("build " + golden_dataset() + " --out " +
                  (dir.path / "base").string())
              .exit_code == 0);

  auto retrieved = run_cli("retrieve " + (dir.path / "base").string() +
                           " --query \"diversification and correlation\"");
  REQUIRE(retrieved.exit_code == 0);
  CHECK(retrieved.output.find("gate_decision") != std::string::npos);

  // An off-domain question falls back, and the plan says so.
  auto plan = run_cli("plan " + (dir.path / "base").string() +
                      " --query \"zebra migration patterns next spring\"");
  REQUIRE(plan.exit_code == 0);
  auto pj = json::parse(plan.output);
  CHECK(pj["fallback"] == true);
  CHECK(pj["queries"].size() == 3);
}

TEST_CASE("refresh performs a streaming update") {
  TempDir dir("wx_cli_refresh");
  REQUIRE(run_cli("build " + golden_dataset() + " --out " +
                  (dir.path / "base").string())
              .exit_code == 0);
  std::ofstream(dir.path / "new.jsonl")
      << R"({"id":"qa-010","question":"Does rebalancing interact with diversification?","answer":"Rebalancing maintains diversification when correlations drift.","citations":[{"source":"CFAI"}]})"
      << "\n";
  auto out = run_cli("refresh " + (dir.path / "base").string() + " " +
                     (dir.path / "new.jsonl").string());
  REQUIRE(out.exit_code == 0);
  auto j = last_json_line(out.output);
  CHECK(j["version"] == 1);
}

TEST_CASE("simulate, eval and a trained projection round-trip through files") {
  TempDir dir("wx_cli_sim");
  PipelineConfig cfg;
  cfg.sim.n_questions = 12;
  cfg.sim.n_pages = 12 * 5 + 8;
  cfg.save((dir.path / "cfg.json").string());
  const std::string cfg_arg = " --config " + (dir.path / "cfg.json").string();

  auto sim = run_cli("simulate --out " + (dir.path / "sim").string() + cfg_arg);
  REQUIRE(sim.exit_code == 0);
  REQUIRE(fs::exists(dir.path / "sim" / "pages.jsonl"));
  REQUIRE(fs::exists(dir.path / "sim" / "questions.jsonl"));
  REQUIRE(fs::exists(dir.path / "sim" / "answers.jsonl"));

  auto build = run_cli("build " + (dir.path / "sim" / "expert_tuples.jsonl").string() +
                       " --out " + (dir.path / "base").string() + cfg_arg);
  REQUIRE(build.exit_code == 0);

  auto eval = run_cli("eval --base " + (dir.path / "base").string() + " --sim " +
                      (dir.path / "sim").string() + " --report " +
                      (dir.path / "report.json").string() + cfg_arg);
  REQUIRE(eval.exit_code == 0);

  // The CLI report equals a direct in-process run, byte for byte.
  auto corpus = load_sim_corpus((dir.path / "sim").string());
  auto store = ExperienceStore::open((dir.path / "base").string());
  EvalOptions opts;
  opts.gate = cfg.gate;
  opts.planner.m = cfg.plan_m;
  opts.planner.tables = cfg.tables();
  opts.controller = cfg.controller;
  opts.config_digest = cfg.digest();
  auto report = evaluate_benchmark(corpus, store.latest(), opts);
  CHECK(slurp(dir.path / "report.json") == report.to_json().dump(2) + "\n");

  // Train on question -> expert-rule pairs derived from the corpus topics.
  {
    auto base = store.latest();
    std::ofstream pairs(dir.path / "pairs.jsonl");
    std::size_t written = 0;
    for (const auto& q : corpus.questions) {
      for (const auto& [id, rule] : base.rules) {
        if (rule.rule.core_guidance.find(q.topic) != std::string::npos) {
          pairs << json{{"query", q.text}, {"positive_rule_id", id}}.dump() << "\n";
          ++written;
          break;
        }
      }
    }
    REQUIRE(written > 0);
  }
  std::ofstream(dir.path / "traincfg.json")
      << R"({"training": {"epochs": 3}, "sim": {"n_questions": 12, "n_pages": 68}})";
  auto train = run_cli("train " + (dir.path / "base").string() + " " +
                       (dir.path / "pairs.jsonl").string() + " --out " +
                       (dir.path / "proj.json").string() + " --config " +
                       (dir.path / "traincfg.json").string());
  REQUIRE(train.exit_code == 0);
  auto tj = last_json_line(train.output);
  CHECK(tj["loss_curve"].size() == 4);  // 3 epochs + final state
  CHECK(fs::exists(dir.path / "proj.json"));

  auto rerun = run_cli("eval --base " + (dir.path / "base").string() + " --sim " +
                       (dir.path / "sim").string() + " --projection " +
                       (dir.path / "proj.json").string() + cfg_arg);
  CHECK(rerun.exit_code == 0);
}

TEST_CASE("ablate runs the requested variants and reports a table") {
  TempDir dir("wx_cli_ablate");
  PipelineConfig cfg;
  cfg.sim.n_questions = 16;
  cfg.sim.n_pages = 16 * 5 + 8;
  cfg.save((dir.path / "cfg.json").string());
  auto out = run_cli("ablate --work " + (dir.path / "work").string() +
                     " --variants full,k1 --report " +
                     (dir.path / "ablation.json").string() + " --config " +
                     (dir.path / "cfg.json").string());
  REQUIRE(out.exit_code == 0);
  CHECK(out.output.find("full") != std::string::npos);
  CHECK(out.output.find("k1") != std::string::npos);
  auto rows = json::parse(slurp(dir.path / "ablation.json"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0]["variant"] == "full");

  auto bad = run_cli("ablate --work " + (dir.path / "work2").string() +
                     " --variants nope");
  CHECK(bad.exit_code != 0);
}

TEST_SUITE_END();
