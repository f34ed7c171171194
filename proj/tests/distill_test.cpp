// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include <doctest.h>

#include <set>

#include <nlohmann/json.hpp>

#include "webexpert/clustering.hpp"
#include "webexpert/distill.hpp"
#include "webexpert/errors.hpp"

using namespace webexpert;

namespace {

Claim claim(const std::string& text, Claim::Polarity pol, std::size_t support) {
  Claim c;
  c.text = text;
  c.polarity = pol;
  c.support_count = support;
  for (std::size_t i = 0; i < support; ++i) {
    c.source_ids.push_back("s" + std::to_string(i));
  }
  return c;
}

Embedding centroid_of(const std::vector<std::string>& texts) {
  Embedding sum;
  sum.values.assign(kDefaultEmbeddingDim, 0.0);
  for (const auto& t : texts) {
    auto e = embed_text(t);
    for (std::size_t i = 0; i < e.dim(); ++i) sum.values[i] += e.values[i];
  }
  renormalize(sum);
  return sum;
}

}  // namespace

TEST_SUITE_BEGIN("distill");

TEST_CASE("claims group across negation and inflection") {
  CHECK(claim_group_key("X increases Y") == claim_group_key("X does not increase Y"));
  CHECK(is_negated_text("X does not increase Y"));
  CHECK_FALSE(is_negated_text("X increases Y"));
}

TEST_CASE("consistency filter keeps unanimous claims") {
  auto result = consistency_filter({claim("rates rise", Claim::Polarity::Positive, 2),
                                    claim("rates rise", Claim::Polarity::Positive, 1)});
  CHECK(result.kept.size() == 2);
  CHECK(result.folded_caveats.empty());
  CHECK(result.flagged.empty());
}

TEST_CASE("two against one: majority kept, singleton minority flagged") {
  auto result = consistency_filter(
      {claim("X increases Y", Claim::Polarity::Positive, 2),
       claim("X does not increase Y", Claim::Polarity::Negated, 1)});
  REQUIRE(result.kept.size() == 1);
  CHECK(result.kept[0].polarity == Claim::Polarity::Positive);
  REQUIRE(result.flagged.size() == 1);
  CHECK(result.flagged[0].polarity == Claim::Polarity::Negated);
  CHECK(result.folded_caveats.empty());
}

TEST_CASE("a supported minority folds into caveats") {
  auto result = consistency_filter(
      {claim("X increases Y", Claim::Polarity::Positive, 3),
       claim("X does not increase Y", Claim::Polarity::Negated, 2)});
  CHECK(result.kept.size() == 1);
  REQUIRE(result.folded_caveats.size() == 1);
  CHECK(result.folded_caveats[0].polarity == Claim::Polarity::Negated);
}

TEST_CASE("an exact tie flags the whole group") {
  auto result = consistency_filter(
      {claim("X increases Y", Claim::Polarity::Positive, 1),
       claim("X does not increase Y", Claim::Polarity::Negated, 1)});
  CHECK(result.kept.empty());
  CHECK(result.folded_caveats.empty());
  CHECK(result.flagged.size() == 2);
}

TEST_CASE("the filter partitions its input") {
  std::vector<Claim> claims = {
      claim("A holds", Claim::Polarity::Positive, 2),
      claim("A does not hold", Claim::Polarity::Negated, 1),
      claim("B works", Claim::Polarity::Positive, 1),
      claim("B does not work", Claim::Polarity::Negated, 1),
      claim("C stands alone", Claim::Polarity::Positive, 4),
  };
  auto result = consistency_filter(claims);
  CHECK(result.kept.size() + result.folded_caveats.size() + result.flagged.size() ==
        claims.size());
  std::multiset<std::string> all;
  for (const auto& c : result.kept) all.insert(c.text);
  for (const auto& c : result.folded_caveats) all.insert(c.text);
  for (const auto& c : result.flagged) all.insert(c.text);
  std::multiset<std::string> expected;
  for (const auto& c : claims) expected.insert(c.text);
  CHECK(all == expected);
}

TEST_CASE("mock summarizer on a single plain answer") {
  std::vector<std::string> answers = {"plain guidance sentence"};
  auto draft = summarize_cluster({}, answers, {}, centroid_of(answers));
  CHECK(draft.core_guidance == "plain guidance sentence");
  CHECK(draft.conditions.empty());
  CHECK(draft.edge_cases.empty());
  CHECK(draft.failure_modes.empty());
  CHECK(draft.caveats.empty());
}

TEST_CASE("mock summarizer is deterministic") {
  std::vector<std::string> answers = {
      "Diversification works best when assets are uncorrelated.",
      "Higher correlation reduces the benefit."};
  auto centroid = centroid_of(answers);
  auto a = summarize_cluster({}, answers, {}, centroid);
  auto b = summarize_cluster({}, answers, {}, centroid);
  CHECK(a == b);
}

TEST_CASE("minority polarity lands in the caveats") {
  std::vector<std::string> answers = {"X increases Y", "X does not increase Y",
                                      "X increases Y"};
  auto draft = summarize_cluster({}, answers, {}, centroid_of(answers));
  REQUIRE(draft.caveats.size() == 1);
  CHECK(draft.caveats[0] == "X does not increase Y");
}

TEST_CASE("condition and failure markers route sentences") {
  std::vector<std::string> answers = {
      "Use hedging when volatility spikes. The approach fails under illiquidity."};
  auto draft = summarize_cluster({}, answers, {}, centroid_of(answers));
  REQUIRE(draft.conditions.size() == 1);
  CHECK(draft.conditions[0] == "Use hedging when volatility spikes");
  REQUIRE(draft.failure_modes.size() == 1);
  CHECK(draft.failure_modes[0] == "The approach fails under illiquidity");
}

namespace {

struct GoldenCluster {
  Cluster cluster;
  std::map<std::string, QATuple> tuples;
  std::vector<EvidenceItem> evidence;
};

GoldenCluster golden_cluster() {
  GoldenCluster g;
  auto add = [&](const std::string& id, const std::string& q, const std::string& a,
                 std::vector<std::string> sources) {
    QATuple t;
    t.id = id;
    t.question = q;
    t.answer = a;
    for (const auto& s : sources) t.citations.push_back({s, {}, {}});
    g.tuples[id] = t;
    g.cluster.members.push_back({id, 1.0});
  };
  add("qa-001", "When is diversification most effective in portfolio risk management?",
      "Diversification is most effective when portfolio assets are uncorrelated.",
      {"Investopedia", "CFAI"});
  add("qa-002", "Does asset correlation affect diversification benefits in investing?",
      "Yes, higher correlation among assets reduces the risk reduction benefit of "
      "diversification.",
      {"BlackRock", "Morningstar"});
  add("qa-003", "How do correlations impact portfolio volatility?",
      "Lower asset correlations lead to lower overall portfolio volatility due to "
      "better risk spreading.",
      {"Corp Finance", "CFAI"});
  g.cluster.cluster_id = "c-qa-001";
  g.cluster.medoid_id = "qa-001";
  g.cluster.centroid = centroid_of({g.tuples["qa-001"].question,
                                    g.tuples["qa-002"].question,
                                    g.tuples["qa-003"].question});
  for (const auto& [id, t] : g.tuples) {
    for (const auto& c : t.citations) {
      EvidenceItem e;
      e.source = c;
      e.text = *t.answer;
      e.from_citation = true;
      e.fused_score = 0.8;
      g.evidence.push_back(e);
    }
  }
  return g;
}

// Distillation target for the golden cluster; the summarizer must land close.
const char* kGoldenRuleText =
    "Diversification is most impactful when portfolio assets exhibit low or "
    "negative correlation; in such scenarios, overall risk and volatility are "
    "minimized.";

}  // namespace

TEST_CASE("golden cluster core guidance is semantically close to the target rule") {
  auto g = golden_cluster();
  std::vector<std::string> answers;
  for (const auto& [id, t] : g.tuples) answers.push_back(*t.answer);
  auto draft = summarize_cluster(g.evidence, answers, {}, g.cluster.centroid);
  CHECK(cosine(embed_text(draft.core_guidance), embed_text(kGoldenRuleText)) >= 0.4);
}

TEST_CASE("assembled golden rule cites only listed sources") {
  auto g = golden_cluster();
  std::vector<std::string> answers;
  for (const auto& [id, t] : g.tuples) answers.push_back(*t.answer);
  auto draft = summarize_cluster(g.evidence, answers, {}, g.cluster.centroid);
  auto rule = assemble_rule(draft, g.cluster, g.evidence, FacetSet{}, g.tuples, 0);

  std::set<std::string> allowed = {"Investopedia", "CFAI", "BlackRock", "Morningstar",
                                   "Corp Finance"};
  CHECK(!rule.citations.empty());
  for (const auto& c : rule.citations) CHECK(allowed.count(c.url_or_name) == 1);
  CHECK(rule.coverage == doctest::Approx(1.0));
  CHECK(rule.rule_id == "r-qa-001");
}

TEST_CASE("a foreign source aborts assembly") {
  auto g = golden_cluster();
  EvidenceItem alien;
  alien.source.url_or_name = "SomewhereElse";
  alien.text = "unrelated quote";
  alien.from_citation = true;
  auto evidence = g.evidence;
  evidence.push_back(alien);
  RuleDraft draft;
  draft.core_guidance = "whatever guidance";
  CHECK_THROWS_AS(assemble_rule(draft, g.cluster, evidence, FacetSet{}, g.tuples, 0),
                  CitationLeakError);
}

TEST_CASE("coverage counts polarity agreement") {
  std::map<std::string, QATuple> tuples;
  Cluster cluster;
  cluster.cluster_id = "c-m1";
  auto add = [&](const std::string& id, const std::string& answer) {
    QATuple t;
    t.id = id;
    t.question = "does X increase Y";
    t.answer = answer;
    tuples[id] = t;
    cluster.members.push_back({id, 1.0});
  };
  add("m1", "X increases Y");
  add("m2", "X increases Y strongly");
  add("m3", "X increases Y a bit");
  add("m4", "X does not increase Y");
  cluster.medoid_id = "m1";
  cluster.centroid = centroid_of({"does X increase Y"});

  RuleDraft draft;
  draft.core_guidance = "X increases Y";
  auto rule = assemble_rule(draft, cluster, {}, FacetSet{}, tuples, 0);
  CHECK(rule.coverage == doctest::Approx(0.75));
}

TEST_CASE("sentence fallback splits documents into answerless tuples") {
  auto tuples = sentence_fallback(
      {"First sentence. Second one here. And a third thought."});
  CHECK(tuples.size() == 3);
  for (const auto& t : tuples) {
    CHECK_FALSE(t.answer.has_value());
    CHECK(t.citations.empty());
  }
  CHECK_THROWS_AS(sentence_fallback({}), EmptyTextError);
}

TEST_CASE("fallback tuples cluster like directly supplied answerless tuples") {
  std::vector<std::string> docs = {
      "Solar inverters degrade in heat. Solar inverters need airflow. Solar "
      "inverters prefer shade.",
      "Loan collateral must be pledged. Loan collateral gets appraised. Loan "
      "collateral can be seized."};
  auto fallback = sentence_fallback(docs);
  REQUIRE(fallback.size() == 6);

  std::vector<QATuple> direct;
  for (std::size_t i = 0; i < fallback.size(); ++i) {
    QATuple t;
    t.id = fallback[i].id;  // same ids, same texts
    t.question = fallback[i].question;
    direct.push_back(t);
  }
  ClusterParams params;
  auto a = cluster_qa(fallback, params, Exec::Serial);
  auto b = cluster_qa(direct, params, Exec::Serial);
  REQUIRE(a.clusters.size() == b.clusters.size());
  for (std::size_t i = 0; i < a.clusters.size(); ++i) {
    CHECK(a.clusters[i].cluster_id == b.clusters[i].cluster_id);
    CHECK(a.clusters[i].members == b.clusters[i].members);
  }
}

TEST_CASE("rule json round-trip is exact") {
  ExperienceRule r;
  r.rule_id = "r-x";
  r.rule.core_guidance = "guidance";
  r.rule.conditions = {"when it rains"};
  r.rule.caveats = {"sometimes not"};
  r.citations = {{"SourceA", std::string("quoted"), {}}};
  r.facets.region = "ontario";
  r.facets.time = TimeInterval{std::string("2023-01-01"), std::string("2023-12-31")};
  r.facets.time_raw = "2023";
  r.coverage = 0.75;
  r.confidence = 0.5;
  r.provenance_cluster = "c-x";
  r.provenance_version = 3;
  CHECK(rule_from_json(rule_to_json(r)) == r);
}

TEST_SUITE_END();
