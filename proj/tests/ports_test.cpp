// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
//
// Exercises the external-service wire formats against a local HTTP server.
#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include <nlohmann/json.hpp>

#include "webexpert/errors.hpp"
#include "webexpert/ports_http.hpp"

#ifndef WEBEXPERT_DATA_DIR
#define WEBEXPERT_DATA_DIR "data"
#endif

using namespace webexpert;
using nlohmann::json;

namespace {

// Serves canned handlers on an ephemeral port for one test block.
class LocalServer {
 public:
  explicit LocalServer(std::function<void(httplib::Server&)> setup) {
    setup(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_SUITE_BEGIN("ports");

TEST_CASE("embedding port round-trips vectors") {
  LocalServer server([](httplib::Server& s) {
    s.Post("/", [](const httplib::Request& req, httplib::Response& res) {
      json body = json::parse(req.body);
      json out;
      out["vectors"] = json::array();
      for (const auto& text : body.at("texts")) {
        (void)text;
        out["vectors"].push_back(std::vector<double>{3.0, 4.0});
      }
      res.set_content(out.dump(), "application/json");
    });
  });
  HttpPortConfig cfg;
  cfg.endpoint = server.endpoint();
  auto embs = embed_texts_remote(cfg, {"one", "two"}, 2);
  REQUIRE(embs.size() == 2);
  CHECK(embs[0].values[0] == doctest::Approx(0.6));  // renormalized 3-4-5
  CHECK(embs[0].values[1] == doctest::Approx(0.8));
}

TEST_CASE("embedding port rejects wrong dimensions") {
  LocalServer server([](httplib::Server& s) {
    s.Post("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"vectors": [[1.0, 2.0, 3.0]]})", "application/json");
    });
  });
  HttpPortConfig cfg;
  cfg.endpoint = server.endpoint();
  CHECK_THROWS_AS(embed_texts_remote(cfg, {"one"}, 2), DimensionMismatchError);
}

TEST_CASE("summarizer port parses the response schema") {
  LocalServer server([](httplib::Server& s) {
    s.Post("/", [](const httplib::Request& req, httplib::Response& res) {
      json body = json::parse(req.body);
      REQUIRE(body.contains("answers"));
      REQUIRE(body.contains("rationales"));
      REQUIRE(body.contains("citations"));
      REQUIRE(body.contains("instructions"));
      json out;
      out["conditions"] = {"when volatility spikes"};
      out["core_guidance"] = "hedge before the spike";
      out["edge_cases"] = json::array();
      out["failure_modes"] = {"fails under illiquidity"};
      out["caveats"] = json::array();
      res.set_content(out.dump(), "application/json");
    });
  });
  HttpPortConfig cfg;
  cfg.endpoint = server.endpoint();
  HttpSummarizer port(cfg);
  SummaryRequest req;
  req.answers = {"hedge early"};
  auto draft = port.summarize(req);
  CHECK(draft.core_guidance == "hedge before the spike");
  CHECK(draft.conditions == std::vector<std::string>{"when volatility spikes"});
  CHECK(draft.failure_modes == std::vector<std::string>{"fails under illiquidity"});
}

TEST_CASE("the shipped prompt template becomes the port instructions") {
  std::string seen_instructions;
  LocalServer server([&](httplib::Server& s) {
    s.Post("/", [&](const httplib::Request& req, httplib::Response& res) {
      seen_instructions = json::parse(req.body).at("instructions").get<std::string>();
      json out;
      out["conditions"] = json::array();
      out["core_guidance"] = "g";
      out["edge_cases"] = json::array();
      out["failure_modes"] = json::array();
      out["caveats"] = json::array();
      res.set_content(out.dump(), "application/json");
    });
  });
  HttpPortConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.prompt_template_path = std::string(WEBEXPERT_DATA_DIR) + "/summarizer_prompt.txt";
  HttpSummarizer port(cfg);
  port.summarize(SummaryRequest{});
  CHECK(seen_instructions.find("core_guidance") != std::string::npos);
  CHECK(seen_instructions.find("{answers}") != std::string::npos);
}

TEST_CASE("a malformed summarizer response reports the port as unavailable") {
  LocalServer server([](httplib::Server& s) {
    s.Post("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"wrong": "shape"})", "application/json");
    });
  });
  HttpPortConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.retries = 0;
  HttpSummarizer port(cfg);
  CHECK_THROWS_AS(port.summarize(SummaryRequest{}), SummarizerUnavailableError);
}

TEST_CASE("an unreachable summarizer reports unavailable") {
  HttpPortConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1";  // nothing listens here
  cfg.retries = 0;
  cfg.timeout_seconds = 1;
  HttpSummarizer port(cfg);
  CHECK_THROWS_AS(port.summarize(SummaryRequest{}), SummarizerUnavailableError);
}

TEST_CASE("planner port sends the request schema and returns queries") {
  LocalServer server([](httplib::Server& s) {
    s.Post("/", [](const httplib::Request& req, httplib::Response& res) {
      json body = json::parse(req.body);
      REQUIRE(body.contains("question"));
      REQUIRE(body.contains("rules"));
      REQUIRE(body.contains("facet_keywords"));
      REQUIRE(body.contains("M"));
      json out;
      out["queries"] = {body["question"].get<std::string>() + " a",
                        body["question"].get<std::string>() + " b",
                        body["question"].get<std::string>() + " c"};
      res.set_content(out.dump(), "application/json");
    });
  });
  HttpPortConfig cfg;
  cfg.endpoint = server.endpoint();
  HttpPlanner port(cfg);
  PlanRequest req;
  req.question = "the question";
  req.m = 3;
  auto queries = port.plan(req);
  REQUIRE(queries.size() == 3);
  CHECK(queries[0] == "the question a");
}

TEST_SUITE_END();
