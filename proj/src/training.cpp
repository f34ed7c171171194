// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "webexpert/errors.hpp"
#include "webexpert/planner.hpp"
#include "webexpert/text.hpp"

namespace webexpert {

using nlohmann::json;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// Accumulate outer(u, v) * scale into g.
void add_outer(Matrix& g, const std::vector<double>& u,
               const std::vector<double>& v, double scale) {
  for (std::size_t r = 0; r < g.rows; ++r) {
    const double ur = u[r] * scale;
    if (ur == 0.0) continue;
    double* row = &g.a[r * g.cols];
    for (std::size_t c = 0; c < g.cols; ++c) row[c] += ur * v[c];
  }
}

}  // namespace

RetLossResult loss_ret(const ContrastiveBatch& batch, const Matrix& projection) {
  if (batch.negatives.empty()) {
    throw InvalidConfigError("loss_ret: at least one negative required");
  }
  if (batch.tau <= 0.0) throw InvalidConfigError("loss_ret: tau must be > 0");
  const std::size_t d = batch.query.size();
  if (batch.positive.size() != d || projection.rows != d || projection.cols != d) {
    throw DimensionMismatchError("loss_ret: dimension mismatch");
  }
  for (const auto& n : batch.negatives) {
    if (n.size() != d) throw DimensionMismatchError("loss_ret: negative dimension");
  }

  const std::vector<double> a = projection.apply(batch.query);
  const double na = norm(a);
  if (na < 1e-12) throw DegenerateVectorError("loss_ret: projected query degenerate");

  // candidates[0] = positive, then the negatives
  std::vector<const std::vector<double>*> inputs{&batch.positive};
  for (const auto& n : batch.negatives) inputs.push_back(&n);

  const std::size_t m = inputs.size();
  std::vector<std::vector<double>> b(m);
  std::vector<double> nb(m), s(m);
  for (std::size_t i = 0; i < m; ++i) {
    b[i] = projection.apply(*inputs[i]);
    nb[i] = norm(b[i]);
    if (nb[i] < 1e-12) {
      throw DegenerateVectorError("loss_ret: projected candidate degenerate");
    }
    s[i] = dot(a, b[i]) / (na * nb[i]);
  }

  // Stable log-sum-exp over logits s_i / tau.
  double max_logit = s[0] / batch.tau;
  for (std::size_t i = 1; i < m; ++i) max_logit = std::max(max_logit, s[i] / batch.tau);
  double lse = 0.0;
  for (std::size_t i = 0; i < m; ++i) lse += std::exp(s[i] / batch.tau - max_logit);
  const double log_z = max_logit + std::log(lse);

  RetLossResult result;
  result.loss = log_z - s[0] / batch.tau;
  result.grad = Matrix(projection.rows, projection.cols);

  // dL/ds_i = (softmax_i - [i == 0]) / tau
  for (std::size_t i = 0; i < m; ++i) {
    double p = std::exp(s[i] / batch.tau - log_z);
    double dl_ds = (p - (i == 0 ? 1.0 : 0.0)) / batch.tau;
    if (dl_ds == 0.0) continue;

    // ds/da = b/(|a||b|) - s * a / |a|^2 ; ds/db = a/(|a||b|) - s * b / |b|^2
    std::vector<double> ds_da(d), ds_db(d);
    const double inv_ab = 1.0 / (na * nb[i]);
    for (std::size_t r = 0; r < d; ++r) {
      ds_da[r] = b[i][r] * inv_ab - s[i] * a[r] / (na * na);
      ds_db[r] = a[r] * inv_ab - s[i] * b[i][r] / (nb[i] * nb[i]);
    }
    // a = P q and b_i = P x_i, so dL/dP += dl_ds * (ds_da q^T + ds_db x_i^T).
    add_outer(result.grad, ds_da, batch.query, dl_ds);
    add_outer(result.grad, ds_db, *inputs[i], dl_ds);
  }
  return result;
}

bool TokenModel::normalized(const std::string& prev) const {
  double sum = 0.0;
  for (const auto& tok : vocabulary()) sum += prob(prev, tok);
  return std::abs(sum - 1.0) <= 1e-6;
}

std::string BigramModel::slot(const std::string& token) const {
  return std::find(vocab_.begin(), vocab_.end(), token) != vocab_.end() ? token
                                                                        : "<unk>";
}

void BigramModel::fit(const std::vector<std::vector<std::string>>& sequences) {
  std::set<std::string> vocab{"<unk>"};
  for (const auto& seq : sequences) {
    for (const auto& t : seq) vocab.insert(t);
  }
  vocab_.assign(vocab.begin(), vocab.end());
  counts_.clear();
  totals_.clear();
  for (const auto& seq : sequences) {
    std::string prev = "<s>";
    for (const auto& t : seq) {
      counts_[prev][t] += 1.0;
      totals_[prev] += 1.0;
      prev = t;
    }
  }
}

void BigramModel::set_count(const std::string& prev, const std::string& token,
                            double count) {
  if (std::find(vocab_.begin(), vocab_.end(), token) == vocab_.end()) {
    vocab_.push_back(token);
    std::sort(vocab_.begin(), vocab_.end());
  }
  auto& row = counts_[prev];
  totals_[prev] += count - row[token];
  row[token] = count;
}

double BigramModel::prob(const std::string& prev, const std::string& token) const {
  const std::string p = prev == "<s>" ? prev : slot(prev);
  const std::string t = slot(token);
  double c = 0.0, total = 0.0;
  if (auto it = counts_.find(p); it != counts_.end()) {
    total = totals_.at(p);
    if (auto jt = it->second.find(t); jt != it->second.end()) c = jt->second;
  }
  const double v = static_cast<double>(vocab_.size());
  return (c + smoothing_) / (total + smoothing_ * v);
}

double loss_plan(const std::vector<std::string>& tokens, const TokenModel& model,
                 const FacetIndicatorMap& phi, const PlanLossConfig& cfg) {
  if (tokens.empty()) {
    throw EmptyTextError("loss_plan: empty token sequence");
  }
  auto is_facet_shaped = [&](const std::string& t) {
    if (cfg.facet_token_classifier) return cfg.facet_token_classifier(t);
    return is_year_token(t) || is_quarter_token(t);
  };

  double loss = 0.0;
  std::string prev = "<s>";
  for (const auto& tok : tokens) {
    if (!model.normalized(prev)) {
      throw UnnormalizedModelError("loss_plan: model rows must sum to 1 (context '" +
                                   prev + "')");
    }
    double w = 1.0;
    if (!phi.empty()) {
      if (phi.matches_token(tok)) {
        w = 1.0 + cfg.alpha_up;
      } else if (is_facet_shaped(tok)) {
        w = 1.0 - cfg.beta_down;
      }
    }
    w = std::max(w, cfg.weight_floor);
    loss -= w * std::log(model.prob(prev, tok));
    prev = tok;
  }
  return loss;
}

double loss_pref(double score_preferred, double score_rejected) {
  // -log sigmoid(d) = softplus(-d), computed stably.
  const double x = score_rejected - score_preferred;
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double coverage_score(const QueryPlan& plan, const FacetIndicatorMap& phi) {
  if (phi.empty()) return 1.0;

  // keyword tokens as a contiguous subsequence of the query tokens
  auto contains_kw = [](const std::vector<std::string>& q_toks,
                        const std::vector<std::string>& kw_toks) {
    if (kw_toks.empty() || kw_toks.size() > q_toks.size()) return false;
    for (std::size_t i = 0; i + kw_toks.size() <= q_toks.size(); ++i) {
      bool all = true;
      for (std::size_t j = 0; j < kw_toks.size(); ++j) {
        if (q_toks[i + j] != kw_toks[j]) {
          all = false;
          break;
        }
      }
      if (all) return true;
    }
    return false;
  };

  std::vector<std::vector<std::string>> query_tokens;
  for (const auto& q : plan.queries) query_tokens.push_back(tokenize(q));

  std::size_t covered = 0;
  for (const auto& [facet, kws] : phi.keywords) {
    (void)facet;
    bool hit = false;
    for (const auto& kw : kws) {
      auto kw_toks = tokenize(kw);
      for (const auto& q_toks : query_tokens) {
        if (contains_kw(q_toks, kw_toks)) {
          hit = true;
          break;
        }
      }
      if (hit) break;
    }
    if (hit) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(phi.keywords.size());
}

double combined_objective(double plan_loss, double ret_loss, double pref_loss,
                          double coverage, const TrainingConfig& cfg) {
  return plan_loss + cfg.lambda_ret * ret_loss + cfg.lambda_pref * pref_loss +
         cfg.lambda_cov * (1.0 - coverage);
}

TrainResult train_projection(const std::vector<TrainPair>& dataset,
                             const RetrievalIndex& index, const TrainingConfig& cfg,
                             Exec exec) {
  if (dataset.empty()) {
    throw InvalidConfigError("train_projection: empty dataset");
  }
  const std::size_t d = index.dim;
  TrainResult result;
  result.projection = Matrix::identity(d);
  if (cfg.epochs == 0) return result;

  std::map<std::string, std::size_t> rule_pos;
  for (std::size_t i = 0; i < index.rule_ids.size(); ++i) {
    rule_pos[index.rule_ids[i]] = i;
  }
  std::vector<Embedding> query_vecs;
  for (const auto& pair : dataset) {
    query_vecs.push_back(embed_text(pair.query, d));
    if (!rule_pos.count(pair.positive_rule_id)) {
      throw Error("train_projection: unknown positive rule '" +
                  pair.positive_rule_id + "'");
    }
  }

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Refresh hard negatives under the current projection.
    std::vector<ContrastiveBatch> batches(dataset.size());
    parallel_for(dataset.size(), exec, [&](std::size_t i) {
      const auto& pair = dataset[i];
      auto mined = mine_hard_negatives(pair.query, {pair.positive_rule_id}, index,
                                       cfg.n_neg, cfg.pool_size, cfg.margin,
                                       &result.projection, Exec::Serial);
      ContrastiveBatch b;
      b.tau = cfg.tau;
      b.query = query_vecs[i].values;
      b.positive = index.rule_vecs[rule_pos.at(pair.positive_rule_id)].values;
      for (const auto& id : mined.rule_ids) {
        b.negatives.push_back(index.rule_vecs[rule_pos.at(id)].values);
      }
      if (b.negatives.empty()) {
        // Degenerate mining result: fall back to the lowest-ranked rule.
        for (auto it = rule_pos.rbegin(); it != rule_pos.rend(); ++it) {
          if (it->first != pair.positive_rule_id) {
            b.negatives.push_back(index.rule_vecs[it->second].values);
            break;
          }
        }
      }
      batches[i] = std::move(b);
    });

    std::vector<RetLossResult> per_example(batches.size());
    parallel_for(batches.size(), exec, [&](std::size_t i) {
      per_example[i] = loss_ret(batches[i], result.projection);
    });

    // Fixed-order reduction keeps parallel runs bit-identical to serial.
    double mean_loss = 0.0;
    Matrix grad(d, d);
    std::size_t usable = 0;
    for (const auto& r : per_example) {
      if (r.grad.rows == 0) continue;
      mean_loss += r.loss;
      for (std::size_t k = 0; k < grad.a.size(); ++k) grad.a[k] += r.grad.a[k];
      ++usable;
    }
    if (usable == 0) break;
    mean_loss /= static_cast<double>(usable);
    result.loss_curve.push_back(mean_loss);

    const double scale = cfg.learning_rate / static_cast<double>(usable);
    for (std::size_t k = 0; k < result.projection.a.size(); ++k) {
      result.projection.a[k] -= scale * grad.a[k];
    }
  }
  // Curve entries are pre-update losses; append the post-training state.
  std::vector<ContrastiveBatch> final_batches;
  double final_loss = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& pair = dataset[i];
    auto mined = mine_hard_negatives(pair.query, {pair.positive_rule_id}, index,
                                     cfg.n_neg, cfg.pool_size, cfg.margin,
                                     &result.projection, Exec::Serial);
    if (mined.rule_ids.empty()) continue;
    ContrastiveBatch b;
    b.tau = cfg.tau;
    b.query = query_vecs[i].values;
    b.positive = index.rule_vecs[rule_pos.at(pair.positive_rule_id)].values;
    for (const auto& id : mined.rule_ids) {
      b.negatives.push_back(index.rule_vecs[rule_pos.at(id)].values);
    }
    final_loss += loss_ret(b, result.projection).loss;
    ++count;
  }
  if (count > 0) result.loss_curve.push_back(final_loss / static_cast<double>(count));
  return result;
}

std::vector<PreferencePair> load_preference_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open preference pairs: " + path);
  std::vector<PreferencePair> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line);
    PreferencePair p;
    p.query = j.at("query").get<std::string>();
    p.preferred_plan = j.at("preferred_plan").get<std::vector<std::string>>();
    p.rejected_plan = j.at("rejected_plan").get<std::vector<std::string>>();
    out.push_back(std::move(p));
  }
  return out;
}

void save_preference_pairs(const std::vector<PreferencePair>& pairs,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write preference pairs: " + path);
  for (const auto& p : pairs) {
    json j;
    j["query"] = p.query;
    j["preferred_plan"] = p.preferred_plan;
    j["rejected_plan"] = p.rejected_plan;
    out << j.dump() << "\n";
  }
}

}  // namespace webexpert
