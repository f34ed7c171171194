// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include <nlohmann/json.hpp>

#include "webexpert/errors.hpp"
#include "webexpert/parallel.hpp"

namespace webexpert {

using nlohmann::json;

void MultiViewWeights::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0) {
    throw InvalidConfigError("multi-view weights must be non-negative");
  }
  if (std::abs(lambda1 + lambda2 + lambda3 - 1.0) > 1e-9) {
    throw InvalidConfigError("multi-view weights must sum to 1");
  }
}

bool Cluster::has_member(const std::string& id) const {
  for (const auto& m : members) {
    if (m.id == id) return true;
  }
  return false;
}

std::vector<std::string> Cluster::hard_member_ids() const {
  std::vector<std::string> out;
  for (const auto& m : members) {
    if (m.weight == 1.0) out.push_back(m.id);
  }
  return out;
}

namespace {

// Deterministic PCA by power iteration with deflation. Used only when
// params.pca_dim > 0; reduces every view vector before similarities.
std::vector<std::vector<double>> pca_components(
    const std::vector<const Embedding*>& pool, std::size_t in_dim,
    std::size_t out_dim) {
  std::vector<double> mean(in_dim, 0.0);
  for (const auto* e : pool) {
    for (std::size_t i = 0; i < in_dim; ++i) mean[i] += e->values[i];
  }
  for (double& m : mean) m /= static_cast<double>(pool.size());

  std::vector<std::vector<double>> centered(pool.size(),
                                            std::vector<double>(in_dim));
  for (std::size_t r = 0; r < pool.size(); ++r) {
    for (std::size_t i = 0; i < in_dim; ++i) {
      centered[r][i] = pool[r]->values[i] - mean[i];
    }
  }

  std::vector<std::vector<double>> comps;
  for (std::size_t c = 0; c < out_dim; ++c) {
    std::vector<double> v(in_dim);
    for (std::size_t i = 0; i < in_dim; ++i) {
      v[i] = 1.0 + 0.001 * static_cast<double>((i * 2654435761ULL + c) % 97);
    }
    for (int iter = 0; iter < 100; ++iter) {
      // w = Cov * v, computed as X^T (X v) without materializing Cov
      std::vector<double> xv(centered.size(), 0.0);
      for (std::size_t r = 0; r < centered.size(); ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < in_dim; ++i) s += centered[r][i] * v[i];
        xv[r] = s;
      }
      std::vector<double> w(in_dim, 0.0);
      for (std::size_t r = 0; r < centered.size(); ++r) {
        for (std::size_t i = 0; i < in_dim; ++i) w[i] += centered[r][i] * xv[r];
      }
      // deflate against previous components
      for (const auto& prev : comps) {
        double d = 0.0;
        for (std::size_t i = 0; i < in_dim; ++i) d += w[i] * prev[i];
        for (std::size_t i = 0; i < in_dim; ++i) w[i] -= d * prev[i];
      }
      double nrm = 0.0;
      for (double x : w) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm < 1e-12) break;
      for (std::size_t i = 0; i < in_dim; ++i) v[i] = w[i] / nrm;
    }
    comps.push_back(v);
  }
  return comps;
}

Embedding project_pca(const Embedding& e,
                      const std::vector<std::vector<double>>& comps) {
  Embedding out;
  out.values.resize(comps.size());
  for (std::size_t c = 0; c < comps.size(); ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < e.dim(); ++i) s += comps[c][i] * e.values[i];
    out.values[c] = s;
  }
  double nrm = out.norm();
  if (nrm < 1e-12) {
    out.values.assign(comps.size(), 0.0);
    out.values[0] = 1.0;
  } else {
    for (double& x : out.values) x /= nrm;
  }
  return out;
}

std::string joint_text(const QATuple& t) {
  return t.question + " " + (t.answer ? *t.answer : std::string());
}

double percentile90(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::size_t idx = static_cast<std::size_t>(
      std::ceil(0.9 * static_cast<double>(values.size())));
  if (idx > 0) --idx;
  return values[idx];
}

std::string min_member_id(const std::vector<ClusterMember>& members) {
  std::string best;
  for (const auto& m : members) {
    if (best.empty() || m.id < best) best = m.id;
  }
  return best;
}

}  // namespace

TupleViews TupleViews::build(const std::vector<QATuple>& tuples,
                             const ClusterParams& params, Exec exec) {
  TupleViews v;
  std::vector<std::size_t> order(tuples.size());
  for (std::size_t i = 0; i < tuples.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return tuples[a].id < tuples[b].id;
  });

  const std::size_t n = tuples.size();
  v.ids.resize(n);
  v.question.resize(n);
  v.answer.resize(n);
  v.joint.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    v.ids[i] = tuples[order[i]].id;
    v.index_of[v.ids[i]] = i;
  }
  parallel_for(n, exec, [&](std::size_t i) {
    const QATuple& t = tuples[order[i]];
    v.question[i] = embed_text(t.question, params.embedding_dim);
    if (t.answer) {
      v.answer[i] = embed_text(*t.answer, params.embedding_dim);
      v.joint[i] = embed_text(joint_text(t), params.embedding_dim);
    }
  });

  if (params.pca_dim > 0 && params.pca_dim < params.embedding_dim && n > 1) {
    std::vector<const Embedding*> pool;
    for (std::size_t i = 0; i < n; ++i) {
      pool.push_back(&v.question[i]);
      if (v.answer[i]) pool.push_back(&*v.answer[i]);
      if (v.joint[i]) pool.push_back(&*v.joint[i]);
    }
    auto comps = pca_components(pool, params.embedding_dim, params.pca_dim);
    for (std::size_t i = 0; i < n; ++i) {
      v.question[i] = project_pca(v.question[i], comps);
      if (v.answer[i]) v.answer[i] = project_pca(*v.answer[i], comps);
      if (v.joint[i]) v.joint[i] = project_pca(*v.joint[i], comps);
    }
  }
  return v;
}

double multiview_similarity(const TupleViews& views, std::size_t i, std::size_t j,
                            const MultiViewWeights& w) {
  double num = w.lambda1 * cosine(views.question[i], views.question[j]);
  double denom = w.lambda1;
  if (views.answer[i] && views.answer[j]) {
    num += w.lambda2 * cosine(*views.answer[i], *views.answer[j]);
    denom += w.lambda2;
  }
  if (views.joint[i] && views.joint[j]) {
    num += w.lambda3 * cosine(*views.joint[i], *views.joint[j]);
    denom += w.lambda3;
  }
  if (denom <= 0.0) {
    return cosine(views.question[i], views.question[j]);
  }
  return num / denom;
}

double multiview_similarity(const QATuple& p, const QATuple& q,
                            const MultiViewWeights& w, std::size_t dim) {
  w.validate();
  ClusterParams params;
  params.embedding_dim = dim;
  TupleViews views = TupleViews::build({p, q}, params, Exec::Serial);
  return multiview_similarity(views, 0, 1, w);
}

std::vector<std::vector<double>> pairwise_similarity_matrix(
    const TupleViews& views, const MultiViewWeights& w, Exec exec) {
  const std::size_t n = views.ids.size();
  std::vector<std::vector<double>> sim(n, std::vector<double>(n, 1.0));
  parallel_for(n, exec, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sim[i][j] = multiview_similarity(views, i, j, w);
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) sim[j][i] = sim[i][j];
  }
  return sim;
}

namespace {

std::size_t medoid_index(const std::vector<std::size_t>& member_idx,
                         const std::vector<std::vector<double>>& sim,
                         const TupleViews& views) {
  std::size_t best = member_idx.front();
  double best_total = -1e300;
  for (std::size_t i : member_idx) {
    double total = 0.0;
    for (std::size_t j : member_idx) {
      if (i != j) total += sim[i][j];
    }
    if (total > best_total ||
        (total == best_total && views.ids[i] < views.ids[best])) {
      best_total = total;
      best = i;
    }
  }
  return best;
}

// Centroid over the density (weight-1) members; soft memberships feed
// evidence aggregation only and must not drag centroids between topics.
Embedding mean_question_embedding(const std::vector<ClusterMember>& members,
                                  const TupleViews& views) {
  std::vector<const Embedding*> qs;
  for (const auto& m : members) {
    if (m.weight == 1.0) qs.push_back(&views.question[views.index_of.at(m.id)]);
  }
  if (qs.empty()) {
    for (const auto& m : members) {
      qs.push_back(&views.question[views.index_of.at(m.id)]);
    }
  }
  Embedding c;
  const std::size_t dim = views.question.front().dim();
  c.values.assign(dim, 0.0);
  for (const auto* q : qs) {
    for (std::size_t i = 0; i < dim; ++i) c.values[i] += q->values[i];
  }
  for (double& x : c.values) x /= static_cast<double>(qs.size());
  double nrm = c.norm();
  if (nrm < 1e-12) {
    c.values.assign(dim, 0.0);
    c.values[0] = 1.0;
  } else {
    for (double& x : c.values) x /= nrm;
  }
  return c;
}

void refresh_geometry(Cluster& c, const TupleViews& views,
                      const std::vector<std::vector<double>>& sim) {
  std::vector<std::size_t> hard;
  for (const auto& m : c.members) {
    if (m.weight == 1.0) hard.push_back(views.index_of.at(m.id));
  }
  if (hard.empty()) {
    for (const auto& m : c.members) hard.push_back(views.index_of.at(m.id));
  }
  std::sort(hard.begin(), hard.end());
  c.medoid_id = views.ids[medoid_index(hard, sim, views)];
  c.centroid = mean_question_embedding(c.members, views);
}

void sort_members(Cluster& c) {
  std::sort(c.members.begin(), c.members.end(),
            [](const ClusterMember& a, const ClusterMember& b) { return a.id < b.id; });
}

}  // namespace

ClusterResult cluster_qa(const std::vector<QATuple>& tuples,
                         const ClusterParams& params, Exec exec) {
  params.weights.validate();
  if (params.soft_threshold <= 0.0 || params.soft_threshold >= 1.0) {
    throw InvalidConfigError("cluster_qa: soft_threshold must be in (0,1)");
  }
  ClusterResult result;
  if (tuples.empty()) return result;

  TupleViews views = TupleViews::build(tuples, params, exec);
  const std::size_t n = views.ids.size();
  auto sim = pairwise_similarity_matrix(views, params.weights, exec);

  if (n == 1) {
    if (params.min_cluster_size <= 1) {
      Cluster c;
      c.cluster_id = "c-" + views.ids[0];
      c.medoid_id = views.ids[0];
      c.members = {{views.ids[0], 1.0}};
      c.centroid = views.question[0];
      result.clusters.push_back(std::move(c));
    } else {
      result.noise_ids.push_back(views.ids[0]);
    }
    return result;
  }

  // eps from the 90th percentile of k-NN distances, k = min_cluster_size.
  const std::size_t k = std::min(params.min_cluster_size, n - 1);
  std::vector<double> knn(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> d;
    d.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) d.push_back(1.0 - sim[i][j]);
    }
    std::nth_element(d.begin(), d.begin() + static_cast<long>(k - 1), d.end());
    knn[i] = d[k - 1];
  }
  const double eps = percentile90(knn);

  std::vector<std::vector<std::size_t>> neighbors(n);
  std::vector<bool> core(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && 1.0 - sim[i][j] <= eps) neighbors[i].push_back(j);
    }
    core[i] = neighbors[i].size() + 1 >= params.min_cluster_size;
  }

  // Density expansion seeded in lexicographic id order (views are id-sorted).
  constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);
  std::vector<std::size_t> assignment(n, kUnassigned);
  std::vector<std::vector<std::size_t>> hard_clusters;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!core[seed] || assignment[seed] != kUnassigned) continue;
    std::size_t cid = hard_clusters.size();
    hard_clusters.emplace_back();
    std::deque<std::size_t> queue{seed};
    assignment[seed] = cid;
    while (!queue.empty()) {
      std::size_t p = queue.front();
      queue.pop_front();
      hard_clusters[cid].push_back(p);
      if (!core[p]) continue;
      for (std::size_t q : neighbors[p]) {
        if (assignment[q] == kUnassigned) {
          assignment[q] = cid;
          queue.push_back(q);
        }
      }
    }
    std::sort(hard_clusters[cid].begin(), hard_clusters[cid].end());
  }

  for (const auto& idxs : hard_clusters) {
    Cluster c;
    for (std::size_t i : idxs) c.members.push_back({views.ids[i], 1.0});
    c.cluster_id = "c-" + min_member_id(c.members);
    c.medoid_id = views.ids[medoid_index(idxs, sim, views)];
    result.clusters.push_back(std::move(c));
  }
  std::sort(result.clusters.begin(), result.clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.cluster_id < b.cluster_id; });

  // Soft assignment against each other cluster's medoid.
  for (std::size_t t = 0; t < n; ++t) {
    for (auto& c : result.clusters) {
      if (c.has_member(views.ids[t])) continue;
      double s = sim[t][views.index_of.at(c.medoid_id)];
      if (s >= params.soft_threshold) c.members.push_back({views.ids[t], s});
    }
  }
  for (auto& c : result.clusters) {
    sort_members(c);
    c.centroid = mean_question_embedding(c.members, views);
  }

  for (std::size_t t = 0; t < n; ++t) {
    bool anywhere = false;
    for (const auto& c : result.clusters) {
      if (c.has_member(views.ids[t])) {
        anywhere = true;
        break;
      }
    }
    if (!anywhere) result.noise_ids.push_back(views.ids[t]);
  }
  return result;
}

std::vector<Cluster> merge_topics(std::vector<Cluster> clusters,
                                  double merge_threshold, const TupleViews& views,
                                  const MultiViewWeights& weights,
                                  const std::set<std::string>& protected_ids) {
  if (merge_threshold <= 0.0 || merge_threshold > 1.0) {
    throw InvalidConfigError("merge_topics: merge_threshold must be in (0,1]");
  }
  auto sim = pairwise_similarity_matrix(views, weights, Exec::Serial);

  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.cluster_id < b.cluster_id; });

  while (clusters.size() > 1) {
    double best_cos = -2.0;
    std::size_t bi = 0, bj = 0;
    bool found = false;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        double c = cosine(clusters[i].centroid, clusters[j].centroid);
        if (c >= merge_threshold && c > best_cos) {
          best_cos = c;
          bi = i;
          bj = j;
          found = true;
        }
      }
    }
    if (!found) break;

    // Survivor: protected beats unprotected, then lexicographically smaller id.
    bool pi = protected_ids.count(clusters[bi].cluster_id) > 0;
    bool pj = protected_ids.count(clusters[bj].cluster_id) > 0;
    std::size_t keep = bi, drop = bj;
    if (pi != pj) {
      keep = pi ? bi : bj;
    } else {
      keep = clusters[bi].cluster_id <= clusters[bj].cluster_id ? bi : bj;
    }
    drop = keep == bi ? bj : bi;

    Cluster& k = clusters[keep];
    Cluster& d = clusters[drop];
    for (const auto& m : d.members) {
      bool merged_into_existing = false;
      for (auto& km : k.members) {
        if (km.id == m.id) {
          km.weight = std::max(km.weight, m.weight);
          merged_into_existing = true;
          break;
        }
      }
      if (!merged_into_existing) k.members.push_back(m);
    }
    k.aliases.push_back(d.cluster_id);
    for (const auto& a : d.aliases) k.aliases.push_back(a);
    std::sort(k.aliases.begin(), k.aliases.end());
    sort_members(k);
    refresh_geometry(k, views, sim);
    clusters.erase(clusters.begin() + static_cast<long>(drop));
  }
  return clusters;
}

void recompute_cluster_geometry(std::vector<Cluster>& clusters,
                                const TupleViews& views,
                                const MultiViewWeights& weights) {
  auto sim = pairwise_similarity_matrix(views, weights, Exec::Serial);
  for (auto& c : clusters) refresh_geometry(c, views, sim);
}

RefreshResult warm_start_refresh(const std::vector<Cluster>& existing,
                                 const std::vector<QATuple>& existing_tuples,
                                 const std::vector<QATuple>& new_tuples,
                                 const ClusterParams& params, Exec exec) {
  RefreshResult result;
  result.clusters = existing;
  if (new_tuples.empty()) return result;

  std::vector<QATuple> all = existing_tuples;
  all.insert(all.end(), new_tuples.begin(), new_tuples.end());
  TupleViews views = TupleViews::build(all, params, exec);
  auto sim = pairwise_similarity_matrix(views, params.weights, exec);

  std::set<std::string> changed;
  std::set<std::string> existing_ids;
  for (const auto& c : existing) existing_ids.insert(c.cluster_id);

  std::vector<std::string> new_ids;
  for (const auto& t : new_tuples) new_ids.push_back(t.id);
  std::sort(new_ids.begin(), new_ids.end());

  std::map<std::string, const QATuple*> tuple_by_id;
  for (const auto& t : all) tuple_by_id[t.id] = &t;

  std::vector<QATuple> pending;
  for (const auto& id : new_ids) {
    std::size_t t = views.index_of.at(id);
    Cluster* best = nullptr;
    double best_sim = -2.0;
    for (auto& c : result.clusters) {
      double s = sim[t][views.index_of.at(c.medoid_id)];
      if (s > best_sim ||
          (s == best_sim && best && c.cluster_id < best->cluster_id)) {
        best_sim = s;
        best = &c;
      }
    }
    if (best && best_sim >= params.soft_threshold) {
      best->members.push_back({id, 1.0});
      sort_members(*best);
      changed.insert(best->cluster_id);
    } else {
      pending.push_back(*tuple_by_id.at(id));
    }
  }

  for (auto& c : result.clusters) {
    if (changed.count(c.cluster_id)) refresh_geometry(c, views, sim);
  }

  if (!pending.empty()) {
    ClusterResult fresh = cluster_qa(pending, params, exec);
    for (auto& c : fresh.clusters) {
      changed.insert(c.cluster_id);
      result.clusters.push_back(std::move(c));
    }
    result.noise_ids = fresh.noise_ids;
  }

  // Recompute geometry in the union space so centroids are comparable.
  recompute_cluster_geometry(result.clusters, views, params.weights);

  std::size_t before = result.clusters.size();
  result.clusters = merge_topics(result.clusters, params.merge_threshold, views,
                                 params.weights, existing_ids);
  if (result.clusters.size() != before) {
    for (const auto& c : result.clusters) {
      if (!c.aliases.empty()) changed.insert(c.cluster_id);
    }
  }

  for (const auto& id : changed) result.changed_ids.push_back(id);
  std::sort(result.changed_ids.begin(), result.changed_ids.end());
  std::sort(result.clusters.begin(), result.clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.cluster_id < b.cluster_id; });
  return result;
}

std::string clusters_to_jsonl(const std::vector<Cluster>& clusters) {
  std::ostringstream out;
  for (const auto& c : clusters) {
    json j;
    j["cluster_id"] = c.cluster_id;
    j["aliases"] = c.aliases;
    j["medoid_id"] = c.medoid_id;
    j["members"] = json::array();
    for (const auto& m : c.members) {
      j["members"].push_back({{"id", m.id}, {"weight", m.weight}});
    }
    out << j.dump() << "\n";
  }
  return out.str();
}

std::vector<Cluster> clusters_from_jsonl(const std::string& content) {
  std::vector<Cluster> out;
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line);
    Cluster c;
    c.cluster_id = j.at("cluster_id").get<std::string>();
    c.aliases = j.at("aliases").get<std::vector<std::string>>();
    c.medoid_id = j.at("medoid_id").get<std::string>();
    for (const auto& m : j.at("members")) {
      c.members.push_back({m.at("id").get<std::string>(), m.at("weight").get<double>()});
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace webexpert
