// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/pipeline.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "webexpert/canonicalize.hpp"
#include "webexpert/errors.hpp"
#include "webexpert/text.hpp"

namespace webexpert {

std::map<std::string, std::size_t> builtin_background_counts() {
  // Rough general-English frequencies; only relative magnitudes matter.
  static const std::vector<std::pair<std::string, std::size_t>> words = {
      {"the", 5000}, {"of", 3000},   {"and", 2900}, {"to", 2600},  {"a", 2300},
      {"in", 2100},  {"is", 1100},   {"it", 1000},  {"for", 880},  {"are", 700},
      {"was", 660},  {"on", 640},    {"that", 620}, {"with", 600}, {"as", 580},
      {"be", 560},   {"at", 520},    {"this", 500}, {"have", 460}, {"from", 440},
      {"or", 420},   {"had", 400},   {"by", 400},   {"not", 380},  {"but", 360},
      {"what", 340}, {"all", 320},   {"were", 300}, {"when", 290}, {"can", 280},
      {"there", 270}, {"most", 260}, {"more", 250}, {"how", 240},  {"which", 230},
      {"do", 220},   {"does", 210},  {"their", 200}, {"if", 190},  {"will", 180},
      {"each", 170}, {"about", 160}, {"other", 150}, {"into", 140}, {"than", 130},
      {"then", 120}, {"them", 110},  {"these", 100}, {"so", 95},   {"some", 90},
      {"would", 85}, {"report", 60}, {"figures", 40}, {"where", 230},
      {"effective", 30}, {"should", 80}, {"against", 40}, {"across", 35},
      {"always", 45}, {"be located", 5}, {"are filed", 5}, {"of the", 400},
      {"in the", 380}, {"for the", 300}, {"what is", 60}, {"how do", 30},
  };
  std::map<std::string, std::size_t> counts;
  for (const auto& [w, c] : words) counts[w] = c;
  return counts;
}

std::map<std::string, std::size_t> dataset_term_counts(
    const std::vector<QATuple>& tuples) {
  std::map<std::string, std::size_t> counts;
  auto add_text = [&](const std::string& text) {
    auto toks = tokenize(text);
    for (const auto& t : toks) ++counts[t];
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
      ++counts[toks[i] + " " + toks[i + 1]];
    }
  };
  for (const auto& t : tuples) {
    add_text(t.question);
    if (t.answer) add_text(*t.answer);
    if (t.rationale) add_text(*t.rationale);
    for (const auto& c : t.citations) {
      if (c.quote) add_text(*c.quote);
    }
  }
  return counts;
}

ExperienceRule distill_cluster(const Cluster& cluster,
                               const std::map<std::string, QATuple>& tuple_map,
                               const FacetVocab& vocab, const FacetTables& tables,
                               const PipelineConfig& cfg, int version,
                               SummarizerPort* summarizer) {
  auto pool = aggregate_evidence(cluster, tuple_map, cfg.evidence);
  auto deduped = dedup_quotes(pool, cfg.evidence.jaccard_threshold,
                              cfg.evidence.per_source_cap, cfg.evidence.shingle_n);
  auto selected = mmr_select(deduped, cfg.evidence.top_n, cfg.evidence.mmr_lambda,
                             cfg.embedding_dim);

  std::vector<std::string> answers, rationales;
  SummarizeOptions sopts;
  sopts.sentence_level = cfg.sentence_level;
  sopts.embedding_dim = cfg.embedding_dim;
  for (const auto& m : cluster.members) {
    auto it = tuple_map.find(m.id);
    if (it == tuple_map.end()) continue;
    if (it->second.answer) {
      answers.push_back(*it->second.answer);
      sopts.answer_weights.push_back(m.weight);
    }
    if (it->second.rationale) rationales.push_back(*it->second.rationale);
  }

  RuleDraft draft = summarize_cluster(selected, answers, rationales,
                                      cluster.centroid, sopts, summarizer);

  // Facet mentions from the draft plus the density members' evidence; soft
  // members rank and diversify but do not facetize the rule.
  std::vector<std::string> mentions;
  auto scan = [&](const std::string& text) {
    for (const auto& m : extract_facet_mentions(text, vocab, tables)) {
      if (std::find(mentions.begin(), mentions.end(), m) == mentions.end()) {
        mentions.push_back(m);
      }
    }
  };
  scan(draft.core_guidance);
  for (const auto& c : draft.conditions) scan(c);
  for (const auto& e : selected) {
    if (e.member_weight == 1.0) scan(e.text);
  }

  FacetSet facets = normalize_facets(mentions, vocab, tables);
  apply_sentinel_defaults(facets);

  return assemble_rule(draft, cluster, selected, facets, tuple_map, version);
}

namespace {

std::map<std::string, QATuple> index_tuples(const std::vector<QATuple>& tuples) {
  std::map<std::string, QATuple> map;
  for (const auto& t : tuples) {
    if (!map.emplace(t.id, t).second) {
      throw Error("duplicate tuple id '" + t.id + "' in dataset");
    }
  }
  return map;
}

}  // namespace

BuildResult build_experience_base(std::vector<QATuple> dataset,
                                  const PipelineConfig& cfg, ExperienceStore& store,
                                  SummarizerPort* summarizer, Exec exec) {
  cfg.validate();
  if (dataset.empty()) throw Error("build: empty dataset");

  std::sort(dataset.begin(), dataset.end(),
            [](const QATuple& a, const QATuple& b) { return a.id < b.id; });
  canonicalize_tuples(dataset, cfg.delex_rules);
  auto tuple_map = index_tuples(dataset);

  ClusterParams params = cfg.clustering;
  params.embedding_dim = cfg.embedding_dim;
  ClusterResult clustered = cluster_qa(dataset, params, exec);

  std::vector<Cluster> clusters = clustered.clusters;
  if (cfg.topic_merge && clusters.size() > 1) {
    TupleViews views = TupleViews::build(dataset, params, exec);
    clusters = merge_topics(std::move(clusters), params.merge_threshold, views,
                            params.weights);
  }

  FacetVocab vocab = induce_facet_vocab(dataset_term_counts(dataset),
                                        builtin_background_counts(), cfg.z_cut,
                                        cfg.tables(), cfg.prior_scale);
  FacetTables tables = cfg.tables();

  const int version = store.latest_version() + 1;
  ChangeSet changes;
  changes.config_digest = cfg.digest();
  changes.clusters = clusters;
  changes.tuples = dataset;
  for (const auto& cluster : clusters) {
    changes.adds.push_back(distill_cluster(cluster, tuple_map, vocab, tables, cfg,
                                           version, summarizer));
  }

  ExperienceBaseVersion parent;
  parent.version = store.latest_version();
  if (store.latest_version() >= 0) parent = store.latest();

  BuildResult result;
  result.version = store.commit(parent, changes);
  result.noise_ids = clustered.noise_ids;
  result.vocab = std::move(vocab);
  return result;
}

ExperienceBaseVersion streaming_update(ExperienceStore& store,
                                       const std::vector<QATuple>& new_tuples,
                                       const PipelineConfig& cfg,
                                       SummarizerPort* summarizer, Exec exec) {
  cfg.validate();
  ExperienceBaseVersion base = store.latest();
  if (base.config_digest != cfg.digest()) {
    throw ConfigDriftError("pipeline config changed since version " +
                           std::to_string(base.version) + "; full rebuild required");
  }

  std::vector<QATuple> incoming = new_tuples;
  std::sort(incoming.begin(), incoming.end(),
            [](const QATuple& a, const QATuple& b) { return a.id < b.id; });
  canonicalize_tuples(incoming, cfg.delex_rules);

  ClusterParams params = cfg.clustering;
  params.embedding_dim = cfg.embedding_dim;

  ChangeSet changes;
  changes.config_digest = cfg.digest();

  if (incoming.empty()) {
    return store.commit(base, changes);
  }

  RefreshResult refreshed;
  if (cfg.topic_merge) {
    refreshed = warm_start_refresh(base.clusters, base.tuples, incoming, params, exec);
  } else {
    // Same refresh with merging disabled: raise the merge bar to impossible.
    ClusterParams no_merge = params;
    no_merge.merge_threshold = 1.0;
    refreshed = warm_start_refresh(base.clusters, base.tuples, incoming, no_merge, exec);
  }

  std::vector<QATuple> all_tuples = base.tuples;
  all_tuples.insert(all_tuples.end(), incoming.begin(), incoming.end());
  auto tuple_map = index_tuples(all_tuples);

  FacetVocab vocab = induce_facet_vocab(dataset_term_counts(all_tuples),
                                        builtin_background_counts(), cfg.z_cut,
                                        cfg.tables(), cfg.prior_scale);
  FacetTables tables = cfg.tables();

  auto rule_id_of = [](const std::string& cluster_id) {
    return cluster_id.starts_with("c-") ? "r-" + cluster_id.substr(2)
                                        : "r-" + cluster_id;
  };

  // Alias pairs introduced by this refresh become rule merges.
  std::set<std::string> old_cluster_ids;
  for (const auto& c : base.clusters) old_cluster_ids.insert(c.cluster_id);
  std::set<std::string> previously_aliased;
  for (const auto& c : base.clusters) {
    for (const auto& a : c.aliases) previously_aliased.insert(a);
  }
  for (const auto& c : refreshed.clusters) {
    for (const auto& a : c.aliases) {
      if (previously_aliased.count(a)) continue;
      if (old_cluster_ids.count(a)) {
        changes.merges.push_back({rule_id_of(a), rule_id_of(c.cluster_id)});
      }
    }
  }

  const int version = base.version + 1;
  std::set<std::string> changed(refreshed.changed_ids.begin(),
                                refreshed.changed_ids.end());
  for (const auto& cluster : refreshed.clusters) {
    if (!changed.count(cluster.cluster_id)) continue;
    ExperienceRule rule = distill_cluster(cluster, tuple_map, vocab, tables, cfg,
                                          version, summarizer);
    if (base.rules.count(rule.rule_id)) {
      changes.updates.push_back(std::move(rule));
    } else {
      changes.adds.push_back(std::move(rule));
    }
  }

  changes.clusters = refreshed.clusters;
  changes.tuples = all_tuples;
  return store.commit(base, changes);
}

}  // namespace webexpert
