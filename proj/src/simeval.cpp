// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/simeval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "webexpert/errors.hpp"
#include "webexpert/text.hpp"

namespace webexpert {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TopicSpec {
  std::string name;
  std::vector<std::string> vocab;
  std::string industry;
  std::string region;  // segment region (gazetteer canonical)
  std::string year;    // segment year
};

const std::vector<TopicSpec>& topic_specs() {
  static const std::vector<TopicSpec> topics = {
      {"solar panels",
       {"photovoltaic", "inverter", "module", "efficiency", "irradiance", "capacity"},
       "renewables",
       "ontario",
       "2021"},
      {"credit approval",
       {"loan", "underwriting", "applicant", "lending", "collateral", "borrower"},
       "retail-banking",
       "quebec",
       "2020"},
      {"vaccine trials",
       {"clinical", "efficacy", "cohort", "immunology", "dosage", "placebo"},
       "pharmaceuticals",
       "california",
       "2019"},
      {"chip fabrication",
       {"wafer", "lithography", "yield", "foundry", "node", "etching"},
       "semiconductors",
       "singapore",
       "2022"},
  };
  return topics;
}

const std::vector<std::string>& off_pool_regions() {
  static const std::vector<std::string> r = {"texas", "bavaria", "new-york",
                                             "united-kingdom"};
  return r;
}

const std::vector<std::string>& off_pool_years() {
  static const std::vector<std::string> y = {"2017", "2018", "2023"};
  return y;
}

std::string make_entity(std::mt19937_64& rng, std::set<std::string>& used) {
  static const std::string consonants = "bdfgklmnprstvz";
  static const std::string vowels = "aeiou";
  for (;;) {
    std::string e;
    for (int s = 0; s < 3; ++s) {
      e.push_back(consonants[rng() % consonants.size()]);
      e.push_back(vowels[rng() % vowels.size()]);
    }
    if (used.insert(e).second) return e;
  }
}

std::string render_question(int template_id,
                            const std::map<std::string, std::string>& slots) {
  const std::string& entity = slots.at("entity");
  const std::string& topic = slots.at("topic");
  switch (template_id % 3) {
    case 0:
      return "what figure did " + entity + " report for " + topic + "?";
    case 1:
      return "for " + topic + ", what figure did " + entity + " report?";
    default:
      return "the " + topic + " figure reported by " + entity + " was what?";
  }
}

std::string pad4(std::size_t n) {
  std::string s = std::to_string(n);
  while (s.size() < 4) s.insert(s.begin(), '0');
  return s;
}

// Expert tuple templates. Each concept has two paraphrase sub-groups; the
// sub-groups cluster apart under density clustering and merge back together
// under topic merging, which is what the no_merge ablation switches off.
struct ConceptSpec {
  std::string question_a;
  std::string question_b;
  std::string answer_a;
  std::string answer_b;
  std::string source_tag;
};

std::vector<ConceptSpec> concepts_for(const TopicSpec& t) {
  return {
      // region filing concept
      {"where are " + t.name + " " + t.vocab[0] + " figures filed",
       "where are " + t.name + " " + t.vocab[0] + " figures currently filed",
       t.name + " figures are filed in " + t.region + " records",
       t.name + " figures are filed under " + t.region + " records",
       "region"},
      // year archive concept
      {"how recent are " + t.name + " " + t.vocab[1] + " figure archives",
       "how recent are " + t.name + " " + t.vocab[1] + " figure archives really",
       t.name + " figures date from the " + t.year + " archives",
       t.name + " figures come from the " + t.year + " archives",
       "year"},
      // universal guidance concepts (sentinel facets)
      {"how should " + t.name + " " + t.vocab[2] + " figures be verified",
       "how should " + t.name + " " + t.vocab[2] + " figures be properly verified",
       "always verify " + t.name + " figures against primary filings",
       "always verify " + t.name + " figures with primary filings",
       "verify"},
      {"what matters when reading " + t.name + " " + t.vocab[3] + " figures",
       "what matters when carefully reading " + t.name + " " + t.vocab[3] + " figures",
       "compare " + t.name + " figures across independent sources",
       "compare " + t.name + " figures against independent sources",
       "compare"},
  };
}

const std::vector<std::string>& question_tails() {
  static const std::vector<std::string> tails = {"", " now", " then"};
  return tails;
}

}  // namespace

std::string answer_signature(const std::string& question_id) {
  return "sig" + to_hex(fnv1a64(question_id)).substr(0, 10);
}

SimCorpus build_sim_corpus(const SimSpec& spec) {
  if (spec.n_pages < 10) {
    throw SpecInfeasibleError("build_sim_corpus: need at least 10 pages");
  }
  const std::size_t pages_needed =
      spec.n_questions * (1 + spec.distractors_per_question);
  if (spec.n_pages < pages_needed) {
    throw SpecInfeasibleError("build_sim_corpus: " + std::to_string(pages_needed) +
                              " pages needed for " +
                              std::to_string(spec.n_questions) + " questions");
  }

  std::mt19937_64 rng(spec.seed);
  SimCorpus corpus;
  corpus.seed = spec.seed;
  const auto& topics = topic_specs();

  // Expert tuples: per topic, per concept, two sub-groups of `expert_phrasings`
  // near-copies. Sub-group ids sort adjacently for stable cluster ids.
  for (std::size_t ti = 0; ti < topics.size(); ++ti) {
    const TopicSpec& t = topics[ti];
    auto concepts = concepts_for(t);
    for (std::size_t ci = 0; ci < concepts.size(); ++ci) {
      const ConceptSpec& c = concepts[ci];
      for (int group = 0; group < 2; ++group) {
        const std::string& q = group == 0 ? c.question_a : c.question_b;
        const std::string& a = group == 0 ? c.answer_a : c.answer_b;
        for (std::size_t p = 0; p < spec.expert_phrasings; ++p) {
          QATuple tup;
          tup.id = "e" + std::to_string(ti) + std::to_string(ci) +
                   std::to_string(group) + std::to_string(p);
          tup.question = q + question_tails()[p % question_tails().size()] + "?";
          tup.answer = a;
          SourceRef src;
          src.url_or_name = "src-" + std::to_string(ti) + "-" + c.source_tag + "-" +
                            (group == 0 ? "a" : "b");
          src.quote = a;
          tup.citations.push_back(src);
          corpus.expert_tuples.push_back(std::move(tup));
        }
      }
    }
  }

  std::set<std::string> used_entities;
  std::vector<std::string> question_entities;
  for (std::size_t i = 0; i < spec.n_questions; ++i) {
    question_entities.push_back(make_entity(rng, used_entities));
  }
  for (std::size_t i = 0; i < spec.n_questions; ++i) {
    corpus.entity_reserve.push_back(make_entity(rng, used_entities));
  }

  std::size_t page_counter = 0;
  auto next_page_id = [&] { return "p" + pad4(page_counter++); };

  for (std::size_t qi = 0; qi < spec.n_questions; ++qi) {
    const TopicSpec& t = topics[qi % topics.size()];
    const std::string& entity = question_entities[qi];

    SimQuestion q;
    q.id = "q" + pad4(qi);
    q.template_id = static_cast<int>(rng() % 3);
    q.slots = {{"entity", entity}, {"topic", t.name}};
    q.text = render_question(q.template_id, q.slots);
    q.topic = t.name;
    q.entities = {entity};

    const std::string gold =
        std::to_string(30000 + rng() % 70000) + " units";
    const std::string sig = answer_signature(q.id);

    SimPage answer_page;
    answer_page.page_id = next_page_id();
    answer_page.title = entity + " " + t.name + " report " + t.region + " " + t.year;
    answer_page.body = entity + " " + entity + " " + t.name + " " + t.name +
                       " report for the " + t.industry +
                       " sector. whatever gets figured when reporting " + t.name +
                       " appears in " + t.region + " " + t.year + " filings. " +
                       t.vocab[qi % t.vocab.size()] + " " +
                       t.vocab[(qi + 1) % t.vocab.size()] + " " +
                       t.vocab[(qi + 2) % t.vocab.size()] + " context. [" + sig +
                       "] answer: " + gold + ".";
    answer_page.facet_labels = {t.region, t.year};
    answer_page.entities = {entity};
    answer_page.dates = {t.year};
    answer_page.answer_for = {q.id};

    std::vector<SimPage> distractors;
    for (std::size_t d = 0; d < spec.distractors_per_question; ++d) {
      SimPage page;
      page.page_id = next_page_id();
      // Distractor 0 is a near miss: right region, wrong year. The rest are
      // fully off-facet.
      std::string region = d == 0
                               ? t.region
                               : off_pool_regions()[rng() % off_pool_regions().size()];
      std::string year = off_pool_years()[rng() % off_pool_years().size()];
      page.title = entity + " " + t.name + " bulletin " + region + " " + year;
      page.body = entity + " " + entity + " " + t.name + " " + t.name +
                  " bulletin for the " + t.industry + " sector. the draft " +
                  t.name + " figure sits in " + region + " " + year + " notes. " +
                  t.vocab[(qi + d) % t.vocab.size()] + " " +
                  t.vocab[(qi + d + 3) % t.vocab.size()] + " commentary.";
      page.facet_labels = {region, year};
      page.entities = {entity};
      page.dates = {year};
      distractors.push_back(std::move(page));
    }
    // Link shape: near miss -> answer page, later distractors chain backwards.
    if (!distractors.empty()) {
      distractors[0].out_links.push_back(answer_page.page_id);
      for (std::size_t d = 1; d < distractors.size(); ++d) {
        distractors[d].out_links.push_back(distractors[d - 1].page_id);
      }
    }

    corpus.key[q.id] = {q.id, gold, {answer_page.page_id}};
    corpus.questions.push_back(std::move(q));
    corpus.pages.push_back(std::move(answer_page));
    for (auto& d : distractors) corpus.pages.push_back(std::move(d));
  }

  while (corpus.pages.size() < spec.n_pages) {
    const TopicSpec& t = topics[corpus.pages.size() % topics.size()];
    SimPage filler;
    filler.page_id = "f" + pad4(page_counter++);
    filler.title = t.name + " " + t.vocab[corpus.pages.size() % t.vocab.size()] +
                   " overview";
    filler.body = t.name + " background. " +
                  t.vocab[(corpus.pages.size() + 1) % t.vocab.size()] + " and " +
                  t.vocab[(corpus.pages.size() + 2) % t.vocab.size()] +
                  " discussion without figures.";
    corpus.pages.push_back(std::move(filler));
  }

  // Post-conditions: answer pages exist and beat their distractors in
  // embedding space by the configured margin.
  std::map<std::string, std::size_t> page_pos;
  for (std::size_t i = 0; i < corpus.pages.size(); ++i) {
    page_pos[corpus.pages[i].page_id] = i;
  }
  double gap_sum = 0.0;
  for (const auto& q : corpus.questions) {
    const auto& key = corpus.key.at(q.id);
    if (key.answer_page_ids.empty()) {
      throw SpecInfeasibleError("question " + q.id + " has no answer page");
    }
    Embedding qe = embed_text(q.text);
    const SimPage& ap = corpus.pages[page_pos.at(key.answer_page_ids.front())];
    double answer_cos = cosine(qe, embed_text(ap.title + " " + ap.body));
    double worst_gap = 1e9;
    for (const auto& page : corpus.pages) {
      if (page.answer_for.empty() && !page.entities.empty() &&
          page.entities.front() == q.entities.front()) {
        double d_cos = cosine(qe, embed_text(page.title + " " + page.body));
        worst_gap = std::min(worst_gap, answer_cos - d_cos);
      }
    }
    gap_sum += worst_gap;
  }
  const double mean_gap = gap_sum / static_cast<double>(corpus.questions.size());
  if (mean_gap < spec.answer_margin) {
    throw SpecInfeasibleError("mean answer/distractor embedding gap " +
                              std::to_string(mean_gap) + " below required " +
                              std::to_string(spec.answer_margin));
  }
  return corpus;
}

SimIndex SimIndex::build(const SimCorpus& corpus, std::size_t dim, Exec exec) {
  SimIndex idx;
  idx.dim = dim;
  std::vector<std::pair<std::string, std::string>> docs;
  std::vector<std::string> texts;
  for (const auto& p : corpus.pages) {
    idx.page_ids.push_back(p.page_id);
    docs.push_back({p.page_id, p.title + " " + p.body});
    texts.push_back(p.title + " " + p.body);
  }
  idx.stats = CorpusStats::build(docs);
  idx.page_vecs = embed_batch(texts, dim, exec);
  for (std::size_t i = 0; i < idx.page_ids.size(); ++i) {
    idx.page_pos[idx.page_ids[i]] = i;
  }
  return idx;
}

std::vector<std::pair<std::string, double>> rank_pages(const std::string& query,
                                                       const SimCorpus& corpus,
                                                       const SimIndex& index,
                                                       double alpha) {
  (void)corpus;
  const std::size_t n = index.page_ids.size();
  Embedding qe = embed_text(query, index.dim);
  auto q_terms = tokenize(query);

  std::vector<double> dense(n), lexical(n);
  for (std::size_t i = 0; i < n; ++i) {
    dense[i] = cosine(qe, index.page_vecs[i]);
    lexical[i] = bm25_score(q_terms, index.page_ids[i], index.stats);
  }
  auto minmax = [](std::vector<double>& v) {
    double lo = *std::min_element(v.begin(), v.end());
    double hi = *std::max_element(v.begin(), v.end());
    if (hi - lo < 1e-12) {
      std::fill(v.begin(), v.end(), 1.0);
      return;
    }
    for (double& x : v) x = (x - lo) / (hi - lo);
  };
  minmax(dense);
  minmax(lexical);

  std::vector<std::pair<std::string, double>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = {index.page_ids[i], alpha * dense[i] + (1.0 - alpha) * lexical[i]};
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

namespace {

std::size_t facet_overlap(const SimPage& page, const QueryPlan& plan) {
  std::size_t overlap = 0;
  for (const auto& label : page.facet_labels) {
    for (const auto& q : plan.queries) {
      auto toks = tokenize(q);
      auto label_toks = tokenize(label);
      bool found = false;
      for (std::size_t i = 0;
           !label_toks.empty() && i + label_toks.size() <= toks.size(); ++i) {
        bool all = true;
        for (std::size_t j = 0; j < label_toks.size(); ++j) {
          if (toks[i + j] != label_toks[j]) {
            all = false;
            break;
          }
        }
        if (all) {
          found = true;
          break;
        }
      }
      if (found) {
        ++overlap;
        break;
      }
    }
  }
  return overlap;
}

std::optional<std::string> extract_answer(const SimPage& page,
                                          const std::string& sig) {
  const std::string marker = "[" + sig + "] answer: ";
  auto pos = page.body.find(marker);
  if (pos == std::string::npos) return std::nullopt;
  auto start = pos + marker.size();
  auto end = page.body.find('.', start);
  if (end == std::string::npos) end = page.body.size();
  return page.body.substr(start, end - start);
}

}  // namespace

Trajectory run_controller(const SimQuestion& question, const QueryPlan& plan,
                          const SimCorpus& corpus, const SimIndex& index,
                          const ControllerOptions& opts) {
  Trajectory t;
  t.question_id = question.id;
  t.plan_queries = plan.queries;
  t.answer = "unknown";
  const std::string sig = answer_signature(question.id);

  std::set<std::string> visited;
  std::map<std::string, double> best_fused;  // per visited page, for citations
  const SimPage* current = nullptr;

  auto visit = [&](const SimPage& page, double fused) -> bool {
    t.visits.push_back(page.page_id);
    visited.insert(page.page_id);
    auto it = best_fused.find(page.page_id);
    if (it == best_fused.end() || fused > it->second) best_fused[page.page_id] = fused;
    current = &page;
    if (auto ans = extract_answer(page, sig)) {
      t.answer = *ans;
      return true;
    }
    return false;
  };

  bool done = false;
  for (const auto& query : plan.queries) {
    if (done || t.visits.size() >= opts.hop_budget) break;
    auto ranked = rank_pages(query, corpus, index, opts.alpha);
    std::map<std::string, double> fused_of;
    for (const auto& [id, score] : ranked) fused_of[id] = score;

    std::size_t taken = 0, pos = 0;
    while (taken < opts.visits_per_query && t.visits.size() < opts.hop_budget) {
      while (pos < ranked.size() && visited.count(ranked[pos].first)) ++pos;
      if (pos >= ranked.size()) break;
      const SimPage* next_ranked = &corpus.pages[index.page_pos.at(ranked[pos].first)];

      const SimPage* chosen = next_ranked;
      bool consumed_ranked = true;
      if (current != nullptr &&
          facet_overlap(*current, plan) > facet_overlap(*next_ranked, plan)) {
        // Current page looks closer to the plan's facets than the ranking
        // does; follow its best unvisited out-link instead.
        const SimPage* best_link = nullptr;
        std::size_t best_ov = 0;
        for (const auto& link : current->out_links) {
          auto it = index.page_pos.find(link);
          if (it == index.page_pos.end() || visited.count(link)) continue;
          const SimPage& candidate = corpus.pages[it->second];
          std::size_t ov = facet_overlap(candidate, plan);
          if (best_link == nullptr || ov > best_ov ||
              (ov == best_ov && candidate.page_id < best_link->page_id)) {
            best_link = &candidate;
            best_ov = ov;
          }
        }
        if (best_link != nullptr) {
          chosen = best_link;
          consumed_ranked = false;
        }
      }
      if (consumed_ranked) ++pos;
      ++taken;
      if (visit(*chosen, fused_of.count(chosen->page_id) ? fused_of[chosen->page_id]
                                                         : 0.0)) {
        done = true;
        break;
      }
    }
  }

  t.retrieval_steps = t.visits.size();
  t.answer_steps = t.answer == "unknown" ? 0 : 1;

  // Cited ranking: unique visited pages by best fused score, answer page first.
  std::vector<std::string> unique_visits(visited.begin(), visited.end());
  std::sort(unique_visits.begin(), unique_visits.end(),
            [&](const std::string& a, const std::string& b) {
              double fa = best_fused[a], fb = best_fused[b];
              if (fa != fb) return fa > fb;
              return a < b;
            });
  if (t.answer != "unknown" && !t.visits.empty()) {
    const std::string& answer_page = t.visits.back();
    auto it = std::find(unique_visits.begin(), unique_visits.end(), answer_page);
    if (it != unique_visits.end()) {
      unique_visits.erase(it);
      unique_visits.insert(unique_visits.begin(), answer_page);
    }
  }
  t.cited = unique_visits;
  return t;
}

double qp_at_3(const std::vector<std::pair<std::string, std::vector<std::string>>>&
                   question_query_top3,
               const std::map<std::string, AnswerKey>& key) {
  if (question_query_top3.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& [qid, top3] : question_query_top3) {
    auto it = key.find(qid);
    if (it == key.end()) continue;
    bool hit = false;
    for (const auto& page_id : top3) {
      if (std::find(it->second.answer_page_ids.begin(),
                    it->second.answer_page_ids.end(),
                    page_id) != it->second.answer_page_ids.end()) {
        hit = true;
        break;
      }
    }
    if (hit) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(question_query_top3.size());
}

std::size_t page_hops(const Trajectory& t) {
  std::set<std::string> unique(t.visits.begin(), t.visits.end());
  return unique.size();
}

double ndcg_at_10(const std::vector<std::string>& cited,
                  const std::map<std::string, int>& relevance) {
  std::vector<int> rels;
  for (const auto& id : cited) {
    auto it = relevance.find(id);
    rels.push_back(it == relevance.end() ? 0 : it->second);
  }
  auto dcg = [](const std::vector<int>& r) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.size() && i < 10; ++i) {
      s += static_cast<double>(r[i]) / std::log2(static_cast<double>(i) + 2.0);
    }
    return s;
  };
  double actual = dcg(rels);
  std::vector<int> ideal = rels;
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  double best = dcg(ideal);
  return best > 0.0 ? actual / best : 0.0;
}

namespace {

const std::set<std::string>& metric_stopwords() {
  static const std::set<std::string> sw = {"a",  "an", "the", "with", "of", "in",
                                           "on", "at", "for", "to",   "and", "or"};
  return sw;
}

std::vector<std::string> normalize_answer(const std::string& s) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(s)) {
    if (!metric_stopwords().count(t)) out.push_back(t);
  }
  return out;
}

}  // namespace

double exact_match(const std::string& answer, const std::string& gold) {
  return normalize_answer(answer) == normalize_answer(gold) ? 1.0 : 0.0;
}

double token_f1(const std::string& answer, const std::string& gold) {
  auto a = normalize_answer(answer);
  auto g = normalize_answer(gold);
  if (a.empty() && g.empty()) return 1.0;
  if (a.empty() || g.empty()) return 0.0;
  std::map<std::string, std::size_t> counts;
  for (const auto& t : g) ++counts[t];
  std::size_t overlap = 0;
  for (const auto& t : a) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  double precision = static_cast<double>(overlap) / static_cast<double>(a.size());
  double recall = static_cast<double>(overlap) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

namespace {

std::string replace_tokens(const std::string& text,
                           const std::map<std::string, std::string>& mapping) {
  std::string out;
  std::string cur;
  auto flush = [&]() {
    if (cur.empty()) return;
    auto it = mapping.find(lower_ascii(cur));
    out += it == mapping.end() ? cur : it->second;
    cur.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    } else {
      flush();
      out.push_back(c);
    }
  }
  flush();
  return out;
}

std::string shift_years_in_text(const std::string& text, int shift) {
  std::string out;
  std::string cur;
  auto flush = [&]() {
    if (cur.empty()) return;
    if (is_year_token(cur)) {
      out += std::to_string(std::stoi(cur) + shift);
    } else {
      out += cur;
    }
    cur.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    } else {
      flush();
      out.push_back(c);
    }
  }
  flush();
  return out;
}

}  // namespace

std::pair<SimCorpus, StressMapping> stress_transform(const SimCorpus& corpus,
                                                     StressKind kind,
                                                     std::uint64_t seed) {
  SimCorpus out = corpus;
  StressMapping mapping;
  if (seed == 0) return {out, mapping};  // identity

  if (kind == StressKind::EntityRandomized) {
    std::set<std::string> entity_set;
    for (const auto& q : corpus.questions) {
      if (q.entities.empty()) {
        throw MissingAnnotationsError("question " + q.id + " has no entity annotations");
      }
      for (const auto& e : q.entities) entity_set.insert(e);
    }
    std::vector<std::string> entities(entity_set.begin(), entity_set.end());
    if (corpus.entity_reserve.size() < entities.size()) {
      throw MissingAnnotationsError("entity reserve smaller than entity set");
    }
    std::vector<std::string> reserve = corpus.entity_reserve;
    std::mt19937_64 rng(seed);
    std::shuffle(reserve.begin(), reserve.end(), rng);
    for (std::size_t i = 0; i < entities.size(); ++i) {
      mapping.entity_map[entities[i]] = reserve[i];
    }
    auto apply = [&](std::string& text) { text = replace_tokens(text, mapping.entity_map); };
    for (auto& q : out.questions) {
      apply(q.text);
      for (auto& e : q.entities) e = mapping.entity_map.at(e);
      for (auto& [slot, value] : q.slots) {
        (void)slot;
        if (mapping.entity_map.count(value)) value = mapping.entity_map.at(value);
      }
    }
    for (auto& p : out.pages) {
      apply(p.title);
      apply(p.body);
      for (auto& e : p.entities) {
        if (mapping.entity_map.count(e)) e = mapping.entity_map.at(e);
      }
    }
    for (auto& [qid, k] : out.key) {
      (void)qid;
      k.answer = replace_tokens(k.answer, mapping.entity_map);
    }
    for (auto& t : out.expert_tuples) {
      t.question = replace_tokens(t.question, mapping.entity_map);
      if (t.answer) t.answer = replace_tokens(*t.answer, mapping.entity_map);
    }
    return {out, mapping};
  }

  if (kind == StressKind::TimeShifted) {
    for (const auto& p : corpus.pages) {
      if (!p.answer_for.empty() && p.dates.empty()) {
        throw MissingAnnotationsError("page " + p.page_id + " has no date annotations");
      }
    }
    mapping.year_shift = static_cast<int>((seed - 1) % 5) + 1;
    const int shift = mapping.year_shift;
    for (auto& q : out.questions) {
      q.text = shift_years_in_text(q.text, shift);
      for (auto& d : q.dates) d = std::to_string(std::stoi(d) + shift);
    }
    for (auto& p : out.pages) {
      p.title = shift_years_in_text(p.title, shift);
      p.body = shift_years_in_text(p.body, shift);
      for (auto& d : p.dates) d = std::to_string(std::stoi(d) + shift);
      for (auto& label : p.facet_labels) {
        if (is_year_token(label)) label = std::to_string(std::stoi(label) + shift);
      }
    }
    for (auto& [qid, k] : out.key) {
      (void)qid;
      k.answer = shift_years_in_text(k.answer, shift);
    }
    for (auto& t : out.expert_tuples) {
      t.question = shift_years_in_text(t.question, shift);
      if (t.answer) t.answer = shift_years_in_text(*t.answer, shift);
      for (auto& c : t.citations) {
        if (c.quote) c.quote = shift_years_in_text(*c.quote, shift);
      }
    }
    return {out, mapping};
  }

  // TemplateRemix
  for (const auto& q : corpus.questions) {
    if (q.slots.empty()) {
      throw MissingAnnotationsError("question " + q.id + " has no template slots");
    }
  }
  const int rotate = static_cast<int>(seed % 2) + 1;
  for (auto& q : out.questions) {
    mapping.template_map[q.id] = q.template_id;
    q.template_id = (q.template_id + rotate) % 3;
    q.text = render_question(q.template_id, q.slots);
  }
  return {out, mapping};
}

EvalReport evaluate_benchmark(const SimCorpus& corpus,
                              const ExperienceBaseVersion& base,
                              const EvalOptions& opts, Exec exec) {
  EvalReport report;
  report.seed = corpus.seed;
  report.config_digest = opts.config_digest;
  report.planner_mode = opts.mode == PlannerMode::Faceted ? "faceted" : "generic";

  SimIndex sim_index = SimIndex::build(corpus, opts.controller.embedding_dim, exec);
  RetrievalIndex rule_index =
      RetrievalIndex::build(base, opts.controller.embedding_dim, exec);

  const std::size_t n = corpus.questions.size();
  std::vector<QuestionReport> per_question(n);
  std::vector<std::vector<std::pair<std::string, std::vector<std::string>>>>
      qp3_rows(n);

  parallel_for(n, exec, [&](std::size_t i) {
    const SimQuestion& q = corpus.questions[i];
    RetrievedExperiences retrieved =
        topk_experiences(q.text, rule_index, opts.gate, opts.projection, Exec::Serial);
    if (opts.mode == PlannerMode::Generic) {
      retrieved.gate_decision = GateDecision::Fallback;
    }
    QueryPlan plan = generate_plan(q.text, retrieved, base, opts.planner);

    Trajectory traj = run_controller(q, plan, corpus, sim_index, opts.controller);

    QuestionReport qr;
    qr.question_id = q.id;
    qr.fallback = plan.gate_decision == GateDecision::Fallback ||
                  opts.mode == PlannerMode::Generic;
    const auto& key = corpus.key.at(q.id);
    qr.em = exact_match(traj.answer, key.answer);
    qr.f1 = token_f1(traj.answer, key.answer);
    qr.hops = page_hops(traj);

    std::size_t query_hits = 0;
    for (const auto& query : plan.queries) {
      auto ranked = rank_pages(query, corpus, sim_index, opts.controller.alpha);
      std::vector<std::string> top3;
      for (std::size_t r = 0; r < ranked.size() && r < 3; ++r) {
        top3.push_back(ranked[r].first);
      }
      qp3_rows[i].push_back({q.id, top3});
      for (const auto& page_id : top3) {
        if (std::find(key.answer_page_ids.begin(), key.answer_page_ids.end(),
                      page_id) != key.answer_page_ids.end()) {
          ++query_hits;
          break;
        }
      }
    }
    qr.qp3 = plan.queries.empty()
                 ? 0.0
                 : static_cast<double>(query_hits) /
                       static_cast<double>(plan.queries.size());

    std::map<std::string, int> rel;
    for (const auto& page_id : key.answer_page_ids) rel[page_id] = 1;
    qr.ndcg10 = ndcg_at_10(traj.cited, rel);
    per_question[i] = std::move(qr);
  });

  std::vector<std::pair<std::string, std::vector<std::string>>> all_queries;
  for (const auto& rows : qp3_rows) {
    all_queries.insert(all_queries.end(), rows.begin(), rows.end());
  }

  report.per_question = std::move(per_question);
  double em = 0, f1 = 0, hops = 0, ndcg = 0, fallback = 0;
  for (const auto& qr : report.per_question) {
    em += qr.em;
    f1 += qr.f1;
    hops += static_cast<double>(qr.hops);
    ndcg += qr.ndcg10;
    fallback += qr.fallback ? 1.0 : 0.0;
  }
  const double dn = n ? static_cast<double>(n) : 1.0;
  report.em = em / dn;
  report.f1 = f1 / dn;
  report.mean_hops = hops / dn;
  report.mean_ndcg10 = ndcg / dn;
  report.fallback_rate = fallback / dn;
  report.qp_at_3 = qp_at_3(all_queries, corpus.key);
  return report;
}

json EvalReport::to_json() const {
  json j;
  j["aggregate"] = {{"em", em},
                    {"f1", f1},
                    {"qp_at_3", qp_at_3},
                    {"mean_hops", mean_hops},
                    {"mean_ndcg10", mean_ndcg10},
                    {"fallback_rate", fallback_rate}};
  j["config_digest"] = config_digest;
  j["seed"] = seed;
  j["planner_mode"] = planner_mode;
  j["per_question"] = json::array();
  for (const auto& q : per_question) {
    j["per_question"].push_back({{"id", q.question_id},
                                 {"em", q.em},
                                 {"f1", q.f1},
                                 {"qp3", q.qp3},
                                 {"hops", q.hops},
                                 {"ndcg10", q.ndcg10},
                                 {"fallback", q.fallback}});
  }
  return j;
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %8s %8s %8s %8s %8s\n", "planner",
                "EM", "F1", "QP@3", "hops", "nDCG@10");
  out << line;
  std::snprintf(line, sizeof(line), "%-10s %8.4f %8.4f %8.4f %8.2f %8.4f\n",
                planner_mode.c_str(), em, f1, qp_at_3, mean_hops, mean_ndcg10);
  out << line;
  return out.str();
}

void save_sim_corpus(const SimCorpus& corpus, const std::string& dir) {
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + name + " in " + dir);
    out << content;
  };

  std::ostringstream pages;
  for (const auto& p : corpus.pages) {
    json j;
    j["page_id"] = p.page_id;
    j["title"] = p.title;
    j["body"] = p.body;
    j["facet_labels"] = p.facet_labels;
    j["out_links"] = p.out_links;
    j["answer_for"] = p.answer_for;
    j["entities"] = p.entities;
    j["dates"] = p.dates;
    pages << j.dump() << "\n";
  }
  write("pages.jsonl", pages.str());

  std::ostringstream questions;
  for (const auto& q : corpus.questions) {
    json j;
    j["id"] = q.id;
    j["text"] = q.text;
    j["topic"] = q.topic;
    j["entities"] = q.entities;
    j["dates"] = q.dates;
    j["template_id"] = q.template_id;
    j["slots"] = q.slots;
    questions << j.dump() << "\n";
  }
  write("questions.jsonl", questions.str());

  std::ostringstream answers;
  for (const auto& [qid, k] : corpus.key) {
    (void)qid;
    json j;
    j["question_id"] = k.question_id;
    j["answer"] = k.answer;
    j["answer_page_ids"] = k.answer_page_ids;
    answers << j.dump() << "\n";
  }
  write("answers.jsonl", answers.str());

  std::ostringstream tuples;
  for (const auto& t : corpus.expert_tuples) {
    tuples << qa_tuple_to_json(t).dump() << "\n";
  }
  write("expert_tuples.jsonl", tuples.str());

  json meta;
  meta["seed"] = corpus.seed;
  meta["entity_reserve"] = corpus.entity_reserve;
  write("meta.json", meta.dump(2) + "\n");
}

SimCorpus load_sim_corpus(const std::string& dir) {
  auto read_lines = [&](const std::string& name) {
    std::ifstream in(fs::path(dir) / name);
    if (!in) throw Error("cannot open " + name + " in " + dir);
    std::vector<json> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      rows.push_back(json::parse(line));
    }
    return rows;
  };

  SimCorpus corpus;
  for (const auto& j : read_lines("pages.jsonl")) {
    SimPage p;
    p.page_id = j.at("page_id").get<std::string>();
    p.title = j.at("title").get<std::string>();
    p.body = j.at("body").get<std::string>();
    p.facet_labels = j.at("facet_labels").get<std::vector<std::string>>();
    p.out_links = j.at("out_links").get<std::vector<std::string>>();
    p.answer_for = j.at("answer_for").get<std::vector<std::string>>();
    p.entities = j.at("entities").get<std::vector<std::string>>();
    p.dates = j.at("dates").get<std::vector<std::string>>();
    corpus.pages.push_back(std::move(p));
  }
  for (const auto& j : read_lines("questions.jsonl")) {
    SimQuestion q;
    q.id = j.at("id").get<std::string>();
    q.text = j.at("text").get<std::string>();
    q.topic = j.at("topic").get<std::string>();
    q.entities = j.at("entities").get<std::vector<std::string>>();
    q.dates = j.at("dates").get<std::vector<std::string>>();
    q.template_id = j.at("template_id").get<int>();
    q.slots = j.at("slots").get<std::map<std::string, std::string>>();
    corpus.questions.push_back(std::move(q));
  }
  for (const auto& j : read_lines("answers.jsonl")) {
    AnswerKey k;
    k.question_id = j.at("question_id").get<std::string>();
    k.answer = j.at("answer").get<std::string>();
    k.answer_page_ids = j.at("answer_page_ids").get<std::vector<std::string>>();
    corpus.key[k.question_id] = std::move(k);
  }
  for (const auto& j : read_lines("expert_tuples.jsonl")) {
    corpus.expert_tuples.push_back(qa_tuple_from_json(j));
  }
  std::ifstream meta_in(fs::path(dir) / "meta.json");
  if (meta_in) {
    json meta = json::parse(meta_in);
    corpus.seed = meta.at("seed").get<std::uint64_t>();
    corpus.entity_reserve = meta.at("entity_reserve").get<std::vector<std::string>>();
  }
  return corpus;
}

}  // namespace webexpert
