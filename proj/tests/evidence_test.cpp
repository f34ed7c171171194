// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include <doctest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "webexpert/bm25.hpp"
#include "webexpert/errors.hpp"
#include "webexpert/evidence.hpp"
#include "webexpert/shingle.hpp"
#include "webexpert/text.hpp"
#include "webexpert/types.hpp"

using namespace webexpert;

namespace {

QATuple make_qa(const std::string& id, const std::string& q, const std::string& a,
                   std::vector<SourceRef> cites = {}) {
  QATuple t;
  t.id = id;
  t.question = q;
  if (!a.empty()) t.answer = a;
  t.citations = std::move(cites);
  return t;
}

Cluster cluster_of(const std::vector<QATuple>& tuples) {
  Cluster c;
  c.cluster_id = "c-" + tuples.front().id;
  c.medoid_id = tuples.front().id;
  Embedding sum;
  sum.values.assign(kDefaultEmbeddingDim, 0.0);
  for (const auto& t : tuples) {
    c.members.push_back({t.id, 1.0});
    auto e = embed_text(t.question);
    for (std::size_t i = 0; i < e.dim(); ++i) sum.values[i] += e.values[i];
  }
  renormalize(sum);
  c.centroid = sum;
  return c;
}

std::map<std::string, QATuple> to_map(const std::vector<QATuple>& tuples) {
  std::map<std::string, QATuple> m;
  for (const auto& t : tuples) m[t.id] = t;
  return m;
}

EvidenceItem item(const std::string& source, const std::string& text, double fused) {
  EvidenceItem e;
  e.source.url_or_name = source;
  e.text = text;
  e.fused_score = fused;
  return e;
}

}  // namespace

TEST_SUITE_BEGIN("evidence");

TEST_CASE("a singleton pool normalizes to fused score 1.0") {
  SourceRef src{"OneSource", std::string("the one quoted sentence"), {}};
  auto tuples = std::vector<QATuple>{make_qa("t1", "the question", "", {src})};
  auto pool = aggregate_evidence(cluster_of(tuples), to_map(tuples), EvidenceParams{});
  REQUIRE(pool.size() == 1);
  CHECK(pool[0].fused_score == doctest::Approx(1.0));
  CHECK(pool[0].dense_score == doctest::Approx(1.0));
  CHECK(pool[0].lexical_score == doctest::Approx(1.0));
}

TEST_CASE("golden cluster pool carries all five distinct sources") {
  auto tuples = std::vector<QATuple>{
      make_qa("qa-001",
                 "When is diversification most effective in portfolio risk management?",
                 "Diversification is most effective when portfolio assets are "
                 "uncorrelated.",
                 {{"Investopedia", {}, {}}, {"CFAI", {}, {}}}),
      make_qa("qa-002",
                 "Does asset correlation affect diversification benefits in investing?",
                 "Yes, higher correlation among assets reduces the risk reduction "
                 "benefit of diversification.",
                 {{"BlackRock", {}, {}}, {"Morningstar", {}, {}}}),
      make_qa("qa-003", "How do correlations impact portfolio volatility?",
                 "Lower asset correlations lead to lower overall portfolio "
                 "volatility due to better risk spreading.",
                 {{"Corp Finance", {}, {}}, {"CFAI", {}, {}}}),
  };
  auto pool = aggregate_evidence(cluster_of(tuples), to_map(tuples), EvidenceParams{});
  std::set<std::string> sources;
  for (const auto& e : pool) sources.insert(e.source.url_or_name);
  CHECK(sources == std::set<std::string>{"Investopedia", "CFAI", "BlackRock",
                                         "Morningstar", "Corp Finance"});
}

TEST_CASE("fused ranking equals an independent evaluation of the fusion formula") {
  std::vector<SourceRef> cites = {
      {"s1", std::string("solar inverter output figures rise each year"), {}},
      {"s2", std::string("inverter efficiency depends on module temperature"), {}},
      {"s3", std::string("unrelated cooking recipe for pancakes"), {}},
      {"s4", std::string("solar output figures and yearly efficiency data"), {}},
      {"s5", std::string("module temperature coefficients summary table"), {}},
      {"s6", std::string("inverter sizing and solar output guidance"), {}},
  };
  auto tuples = std::vector<QATuple>{
      make_qa("t1", "how do solar inverter output figures evolve", "", cites)};
  EvidenceParams params;
  auto pool = aggregate_evidence(cluster_of(tuples), to_map(tuples), params);
  REQUIRE(pool.size() == 6);

  // Independent evaluation: recompute both score legs and the fusion here.
  const Cluster cluster = cluster_of(tuples);
  oracles::Bm25Oracle bm;
  for (std::size_t i = 0; i < cites.size(); ++i) {
    bm.add(std::to_string(i), *cites[i].quote);
  }
  auto medoid_terms = tokenize(tuples[0].question);
  std::vector<double> dense, lexical;
  for (std::size_t i = 0; i < cites.size(); ++i) {
    dense.push_back(cosine(embed_text(*cites[i].quote), cluster.centroid));
    lexical.push_back(bm.score(medoid_terms, std::to_string(i)));
  }
  auto minmax = [](std::vector<double> v) {
    double lo = *std::min_element(v.begin(), v.end());
    double hi = *std::max_element(v.begin(), v.end());
    for (auto& x : v) x = hi - lo < 1e-12 ? 1.0 : (x - lo) / (hi - lo);
    return v;
  };
  dense = minmax(dense);
  lexical = minmax(lexical);
  std::vector<std::pair<double, std::string>> expected;
  for (std::size_t i = 0; i < cites.size(); ++i) {
    expected.push_back(
        {params.alpha * dense[i] + (1 - params.alpha) * lexical[i],
         cites[i].url_or_name});
  }
  std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; i < pool.size(); ++i) {
    CHECK(pool[i].source.url_or_name == expected[i].second);
    CHECK(pool[i].fused_score == doctest::Approx(expected[i].first).epsilon(1e-12));
  }
}

TEST_CASE("empty cluster is rejected") {
  Cluster empty;
  CHECK_THROWS_AS(aggregate_evidence(empty, {}, EvidenceParams{}), EmptyClusterError);
}

TEST_CASE("mmr with n=1 picks the most relevant item") {
  std::vector<EvidenceItem> items = {item("a", "first text", 0.4),
                                     item("b", "second text", 0.9),
                                     item("c", "third text", 0.6)};
  auto out = mmr_select(items, 1);
  REQUIRE(out.size() == 1);
  CHECK(out[0].source.url_or_name == "b");
}

TEST_CASE("mmr with lambda 1 is plain relevance order") {
  std::vector<EvidenceItem> items = {item("a", "alpha text", 0.2),
                                     item("b", "beta text", 0.8),
                                     item("c", "gamma text", 0.5),
                                     item("d", "delta text", 0.7)};
  auto out = mmr_select(items, 3, 1.0);
  REQUIRE(out.size() == 3);
  CHECK(out[0].source.url_or_name == "b");
  CHECK(out[1].source.url_or_name == "d");
  CHECK(out[2].source.url_or_name == "c");
}

TEST_CASE("mmr displaces a near-duplicate, matching the exhaustive oracle") {
  std::vector<EvidenceItem> items = {
      item("a", "solar inverter output figures for the year", 1.00),
      item("b", "solar inverter output figures for the year again", 0.90),
      item("c", "loan collateral policy summary", 0.70),
      item("d", "vaccine cohort dosing tables", 0.65),
      item("e", "wafer lithography yield notes", 0.60),
      item("f", "solar module temperature context", 0.45),
      item("g", "credit underwriting commentary", 0.40),
      item("h", "chip foundry node history", 0.35),
  };
  const double lambda = 0.7;
  auto out = mmr_select(items, 3, lambda);
  REQUIRE(out.size() == 3);

  std::vector<double> rel;
  std::vector<std::vector<double>> sim(items.size(), std::vector<double>(items.size()));
  std::vector<Embedding> embs;
  for (const auto& e : items) embs.push_back(embed_text(e.text));
  for (std::size_t i = 0; i < items.size(); ++i) {
    rel.push_back(items[i].fused_score);
    for (std::size_t j = 0; j < items.size(); ++j) sim[i][j] = cosine(embs[i], embs[j]);
  }
  auto picked = oracles::greedy_mmr(rel, sim, lambda, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(out[i].source.url_or_name == items[picked[i]].source.url_or_name);
  }
  // The near duplicate of the top item is not selected.
  for (const auto& e : out) CHECK(e.source.url_or_name != "b");
}

TEST_CASE("mmr equals the greedy oracle on random pools") {
  std::mt19937_64 rng(13);
  const std::vector<std::string> vocab = {"solar", "loan", "vaccine", "wafer",
                                          "figures", "policy", "cohort", "yield"};
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<EvidenceItem> items;
    std::size_t n = 5 + rng() % 16;  // up to 20
    for (std::size_t i = 0; i < n; ++i) {
      std::string text;
      for (int w = 0; w < 5; ++w) text += vocab[rng() % vocab.size()] + " ";
      items.push_back(item("s" + std::to_string(i), text + std::to_string(i),
                           (double)(rng() % 1000) / 1000.0));
    }
    std::size_t take = 1 + rng() % std::min<std::size_t>(n, 6);
    auto out = mmr_select(items, take, 0.7);

    std::vector<double> rel;
    std::vector<std::vector<double>> sim(n, std::vector<double>(n));
    std::vector<Embedding> embs;
    for (const auto& e : items) embs.push_back(embed_text(e.text));
    for (std::size_t i = 0; i < n; ++i) {
      rel.push_back(items[i].fused_score);
      for (std::size_t j = 0; j < n; ++j) sim[i][j] = cosine(embs[i], embs[j]);
    }
    auto tie_less = [&](std::size_t x, std::size_t y) {
      if (items[x].fused_score != items[y].fused_score) {
        return items[x].fused_score > items[y].fused_score;
      }
      if (items[x].source.url_or_name != items[y].source.url_or_name) {
        return items[x].source.url_or_name < items[y].source.url_or_name;
      }
      return items[x].text < items[y].text;
    };
    auto picked = oracles::greedy_mmr(rel, sim, 0.7, take, tie_less);
    REQUIRE(out.size() == picked.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out[i].source.url_or_name == items[picked[i]].source.url_or_name);
    }
  }
}

TEST_CASE("asking for more than the pool returns the pool") {
  std::vector<EvidenceItem> items = {item("a", "only text", 0.5)};
  CHECK(mmr_select(items, 5).size() == 1);
}

TEST_CASE("dedup removes exact duplicates and respects the source cap") {
  std::vector<EvidenceItem> items = {
      item("src", "an identical quoted sentence", 0.9),
      item("src", "an identical quoted sentence", 0.8),
      item("src", "a different sentence entirely from the same source", 0.7),
      item("src", "yet another distinct sentence from that source", 0.6),
  };
  auto out = dedup_quotes(items, 0.8, 2);
  REQUIRE(out.size() == 2);
  CHECK(out[0].fused_score == doctest::Approx(0.9));
  // the duplicate is gone, the cap keeps two per source
  CHECK(out[1].fused_score == doctest::Approx(0.7));
}

TEST_CASE("threshold 1.0 with distinct quotes from distinct sources keeps all") {
  std::vector<EvidenceItem> items = {
      item("s1", "first distinct sentence", 0.9),
      item("s2", "second distinct sentence", 0.8),
      item("s3", "third distinct sentence", 0.7),
  };
  CHECK(dedup_quotes(items, 1.0, 2).size() == 3);
}

TEST_CASE("three quotes from one source with cap two drops the lowest") {
  std::vector<EvidenceItem> items = {
      item("s", "completely different first sentence", 0.9),
      item("s", "another unrelated second sentence", 0.8),
      item("s", "the lowest scored third sentence", 0.5),
  };
  auto out = dedup_quotes(items, 0.99, 2);
  REQUIRE(out.size() == 2);
  for (const auto& e : out) CHECK(e.fused_score >= 0.8);
}

TEST_CASE("survivors are pairwise below the duplicate threshold") {
  std::mt19937_64 rng(29);
  const std::vector<std::string> base = {
      "solar inverter output figures note", "loan collateral policy sentence",
      "vaccine cohort dosing line"};
  std::vector<EvidenceItem> items;
  for (int i = 0; i < 15; ++i) {
    std::string text = base[rng() % base.size()];
    if (rng() % 2) text += " with suffix " + std::to_string(rng() % 3);
    items.push_back(item("s" + std::to_string(rng() % 4), text,
                         (double)(rng() % 100) / 100.0));
  }
  const double threshold = 0.8;
  auto out = dedup_quotes(items, threshold, 3);
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = i + 1; j < out.size(); ++j) {
      CHECK(shingle_jaccard(out[i].text, out[j].text) < threshold);
    }
  }
}

TEST_SUITE_END();
