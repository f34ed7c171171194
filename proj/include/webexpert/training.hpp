// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "webexpert/facets.hpp"
#include "webexpert/matrix.hpp"
#include "webexpert/parallel.hpp"
#include "webexpert/retrieval.hpp"

namespace webexpert {

// One InfoNCE example: a query vector, its positive and the mined negatives.
struct ContrastiveBatch {
  std::vector<double> query;
  std::vector<double> positive;
  std::vector<std::vector<double>> negatives;
  double tau = 0.07;
};

struct RetLossResult {
  double loss = 0.0;
  Matrix grad;  // d loss / d projection
};

// loss = -log( exp(s+/tau) / (exp(s+/tau) + sum_j exp(s-_j/tau)) ) where
// s = cosine after projection and renormalization. The analytic gradient
// w.r.t. the projection matrix is returned alongside. Throws
// DegenerateVectorError when any projected vector has norm < 1e-12.
RetLossResult loss_ret(const ContrastiveBatch& batch, const Matrix& projection);

// Next-token model port. Reference implementation below; any conforming
// model can be plugged into loss_plan / score_plan.
class TokenModel {
 public:
  virtual ~TokenModel() = default;
  virtual const std::vector<std::string>& vocabulary() const = 0;
  // pi(token | prev); prev = "<s>" at sequence start.
  virtual double prob(const std::string& prev, const std::string& token) const = 0;
  // Must hold within 1e-6 for every context used by a loss evaluation.
  virtual bool normalized(const std::string& prev) const;
};

// Learnable bigram table with add-lambda smoothing; unknown tokens map to
// the <unk> slot. Deterministic given the same corpus.
class BigramModel : public TokenModel {
 public:
  explicit BigramModel(double smoothing = 0.1) : smoothing_(smoothing) {}

  void fit(const std::vector<std::vector<std::string>>& token_sequences);
  void set_count(const std::string& prev, const std::string& token, double count);

  const std::vector<std::string>& vocabulary() const override { return vocab_; }
  double prob(const std::string& prev, const std::string& token) const override;

 private:
  std::string slot(const std::string& token) const;

  double smoothing_;
  std::vector<std::string> vocab_;
  std::map<std::string, std::map<std::string, double>> counts_;
  std::map<std::string, double> totals_;
};

struct PlanLossConfig {
  double alpha_up = 0.5;     // facet-token up-weight: w = 1 + alpha_up
  double beta_down = 0.25;   // off-facet down-weight: w = 1 - beta_down
  double weight_floor = 0.1;
  // Classifies facet-shaped tokens for the off-facet penalty; defaults to
  // year/quarter patterns when unset.
  std::function<bool(const std::string&)> facet_token_classifier;
};

// Facet-alignment weighted negative log-likelihood:
//   - sum_t w(y_t) log pi(y_t | y_{t-1})
// with w = 1 + alpha_up for tokens matching a phi keyword, 1 - beta_down for
// facet-shaped tokens outside phi, 1 otherwise, floored at weight_floor.
// Throws UnnormalizedModelError when the model is not a distribution for a
// used context.
double loss_plan(const std::vector<std::string>& tokens, const TokenModel& model,
                 const FacetIndicatorMap& phi, const PlanLossConfig& cfg);

// Pairwise logistic preference loss: -log sigmoid(preferred - rejected).
double loss_pref(double score_preferred, double score_rejected);

struct QueryPlan;  // planner.hpp

// Fraction of active facets with at least one keyword present in at least
// one plan query (token-sequence containment). Defined as 1 when phi is empty.
double coverage_score(const QueryPlan& plan, const FacetIndicatorMap& phi);

struct TrainPair {
  std::string query;
  std::string positive_rule_id;
};

// Constants of the full-parameter fine-tuning recipe, carried as metadata
// only; the in-process loop trains the projection with its own settings.
struct FullScaleRecipe {
  double learning_rate = 1e-5;
  std::string schedule = "cosine-decay";
  double beta2 = 0.98;
};

struct TrainingConfig {
  double tau = 0.07;
  double learning_rate = 0.5;
  std::size_t epochs = 200;
  std::uint64_t seed = 7;
  std::size_t pool_size = 64;
  double margin = 0.05;
  std::size_t n_neg = 4;
  double lambda_ret = 1.0;   // combined-objective weights
  double lambda_pref = 0.5;
  double lambda_cov = 0.5;
  FullScaleRecipe full_scale;
};

struct TrainResult {
  Matrix projection;
  std::vector<double> loss_curve;  // [0] = pre-training; one entry per epoch after
};

// Full-batch gradient descent on the mean contrastive loss; hard negatives
// are re-mined from the index with the current projection every epoch.
// Deterministic given (dataset, config). Zero epochs returns the identity
// projection and an empty curve.
TrainResult train_projection(const std::vector<TrainPair>& dataset,
                             const RetrievalIndex& index, const TrainingConfig& cfg,
                             Exec exec = Exec::Parallel);

// L = L_plan + lambda_ret * L_ret + lambda_pref * L_pref + lambda_cov * (1 - coverage)
double combined_objective(double plan_loss, double ret_loss, double pref_loss,
                          double coverage, const TrainingConfig& cfg);

// Preference-pair dataset: JSON Lines
// {query, preferred_plan: [string], rejected_plan: [string]}.
struct PreferencePair {
  std::string query;
  std::vector<std::string> preferred_plan;
  std::vector<std::string> rejected_plan;
};
std::vector<PreferencePair> load_preference_pairs(const std::string& path);
void save_preference_pairs(const std::vector<PreferencePair>& pairs,
                           const std::string& path);

}  // namespace webexpert
