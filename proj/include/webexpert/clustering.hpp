// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "webexpert/embedding.hpp"
#include "webexpert/types.hpp"

namespace webexpert {

// Weights of the question / answer / joint views. Must sum to 1 (+-1e-9).
struct MultiViewWeights {
  double lambda1 = 0.5;
  double lambda2 = 0.3;
  double lambda3 = 0.2;

  void validate() const;
};

struct ClusterMember {
  std::string id;
  double weight = 1.0;  // 1.0 for density members, medoid similarity for soft members

  bool operator==(const ClusterMember&) const = default;
};

struct Cluster {
  std::string cluster_id;
  std::vector<std::string> aliases;
  std::string medoid_id;
  std::vector<ClusterMember> members;  // sorted by id
  // Normalized mean of the density members' question embeddings (soft
  // memberships weigh into evidence aggregation, not geometry).
  Embedding centroid;

  bool has_member(const std::string& id) const;
  std::vector<std::string> hard_member_ids() const;
};

struct ClusterParams {
  MultiViewWeights weights;
  std::size_t min_cluster_size = 2;
  double soft_threshold = 0.45;
  double merge_threshold = 0.85;
  std::size_t pca_dim = 0;  // 0 disables the PCA reduction
  std::size_t embedding_dim = kDefaultEmbeddingDim;
};

// Per-tuple view embeddings, indexed in lexicographic id order. The answer
// and joint views are absent for answerless tuples.
struct TupleViews {
  std::vector<std::string> ids;
  std::vector<Embedding> question;
  std::vector<std::optional<Embedding>> answer;
  std::vector<std::optional<Embedding>> joint;
  std::map<std::string, std::size_t> index_of;

  static TupleViews build(const std::vector<QATuple>& tuples,
                          const ClusterParams& params, Exec exec = Exec::Parallel);
};

// lambda1<u,u'> + lambda2<v,v'> + lambda3<w,w'>, renormalized over the views
// present on both sides. Symmetric, in [-1, 1].
double multiview_similarity(const QATuple& p, const QATuple& q,
                            const MultiViewWeights& w,
                            std::size_t dim = kDefaultEmbeddingDim);
double multiview_similarity(const TupleViews& views, std::size_t i, std::size_t j,
                            const MultiViewWeights& w);

// Full n x n similarity matrix; map-style kernel, bit-identical across modes.
std::vector<std::vector<double>> pairwise_similarity_matrix(
    const TupleViews& views, const MultiViewWeights& w, Exec exec = Exec::Parallel);

struct ClusterResult {
  std::vector<Cluster> clusters;       // sorted by cluster_id
  std::vector<std::string> noise_ids;  // tuples in no cluster
};

// Density clustering over distance 1 - multiview_similarity with eps at the
// 90th percentile of k-NN distances (k = min_cluster_size), followed by a
// soft-assignment pass: any tuple whose similarity s to another cluster's
// medoid reaches soft_threshold joins that cluster with weight s.
ClusterResult cluster_qa(const std::vector<QATuple>& tuples,
                         const ClusterParams& params, Exec exec = Exec::Parallel);

// Agglomerates cluster pairs whose centroid cosine reaches merge_threshold,
// highest pair first. The lexicographically smaller cluster_id survives
// (protected ids always beat unprotected ones); the absorbed id becomes an
// alias. Medoid and centroid are recomputed from the merged membership.
std::vector<Cluster> merge_topics(std::vector<Cluster> clusters,
                                  double merge_threshold, const TupleViews& views,
                                  const MultiViewWeights& weights,
                                  const std::set<std::string>& protected_ids = {});

struct RefreshResult {
  std::vector<Cluster> clusters;
  std::vector<std::string> noise_ids;
  std::vector<std::string> changed_ids;  // grown, created, or merge-touched clusters
};

// Warm-start refresh: new tuples join the nearest existing cluster when the
// medoid similarity reaches soft_threshold; the rest are clustered fresh and
// the union is locally merged. Ids of clusters that only grew never change.
RefreshResult warm_start_refresh(const std::vector<Cluster>& existing,
                                 const std::vector<QATuple>& existing_tuples,
                                 const std::vector<QATuple>& new_tuples,
                                 const ClusterParams& params,
                                 Exec exec = Exec::Parallel);

// Recompute medoids and centroids (e.g. after loading a cluster dump, which
// carries membership only).
void recompute_cluster_geometry(std::vector<Cluster>& clusters,
                                const TupleViews& views,
                                const MultiViewWeights& weights);

// Cluster dump: JSON Lines {cluster_id, aliases, medoid_id, members:[{id,weight}]}.
std::string clusters_to_jsonl(const std::vector<Cluster>& clusters);
std::vector<Cluster> clusters_from_jsonl(const std::string& content);

}  // namespace webexpert
