#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "rerank/data.hpp"
#include "rerank/errors.hpp"
#include "rerank/evaluator.hpp"
#include "rerank/truth.hpp"

namespace rerank {

// Probability that a random positive outranks a random negative, ties
// counted half. Average-rank formulation; matches all-pairs counting
// exactly.
inline double auc(const std::vector<double>& scores,
                  const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw UsageError("auc: scores and labels differ in length");
  }
  std::size_t positives = 0;
  for (int y : labels) positives += y == 1 ? 1 : 0;
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw DataError("auc: undefined for single-class input");
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) pos_rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(positives);
  const double nn = static_cast<double>(negatives);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

// Weighted mean of intra-user AUC; users without both classes are excluded
// from numerator and denominator. Weights are impression counts by default.
inline double gauc(const std::vector<std::vector<double>>& user_scores,
                   const std::vector<std::vector<int>>& user_labels,
                   bool weight_by_impressions = true) {
  if (user_scores.size() != user_labels.size()) {
    throw UsageError("gauc: users differ between scores and labels");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t u = 0; u < user_scores.size(); ++u) {
    bool has_pos = false, has_neg = false;
    for (int y : user_labels[u]) (y == 1 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) continue;
    const double w = weight_by_impressions
                         ? static_cast<double>(user_labels[u].size())
                         : 1.0;
    num += w * auc(user_scores[u], user_labels[u]);
    den += w;
  }
  if (den == 0.0) {
    throw DataError("gauc: no user has both classes");
  }
  return num / den;
}

// Binary-gain NDCG with 1/log2(pos+1) discount; 0 when nothing relevant.
inline double ndcg_at_k(const std::vector<int>& gains_in_rank_order,
                        std::size_t k) {
  if (k == 0) throw UsageError("ndcg_at_k: k must be >= 1");
  const std::size_t n = gains_in_rank_order.size();
  double dcg = 0.0;
  for (std::size_t t = 0; t < std::min(k, n); ++t) {
    dcg += static_cast<double>(gains_in_rank_order[t]) /
           std::log2(static_cast<double>(t) + 2.0);
  }
  std::vector<int> ideal = gains_in_rank_order;
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  double idcg = 0.0;
  for (std::size_t t = 0; t < std::min(k, n); ++t) {
    idcg += static_cast<double>(ideal[t]) /
            std::log2(static_cast<double>(t) + 2.0);
  }
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

// List reward: evaluator scores of the truncated list summed, with the
// truncated list itself as the context the user would see.
inline double lr_at_k(const EvaluatorModel& evaluator, const UserProfile& u,
                      const std::vector<const ItemProfile*>& order,
                      std::size_t k) {
  if (k > order.size()) {
    throw UsageError("lr_at_k: k exceeds list length");
  }
  std::vector<const ItemProfile*> top(order.begin(),
                                      order.begin() + static_cast<long>(k));
  const std::vector<double> scores = evaluator.score_list(u, top);
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum;
}

// Simulator-side analogue of the list reward: the sum of true contextual
// click probabilities over the top-k arrangement.
inline double ground_truth_list_value(const TruthRecord& truth,
                                      const std::vector<std::size_t>& order,
                                      std::size_t k) {
  if (k > order.size()) {
    throw UsageError("ground_truth_list_value: k exceeds list length");
  }
  std::vector<std::size_t> top(order.begin(),
                               order.begin() + static_cast<long>(k));
  double sum = 0.0;
  for (std::size_t t = 0; t < top.size(); ++t) {
    sum += true_click_probability(truth, top, t);
  }
  return sum;
}

struct EvalReport {
  double loss = 0.0;
  double auc = 0.0;
  double gauc = 0.0;
  double ndcg_at_k = 0.0;
  double lr_at_k = 0.0;
  std::size_t k = 5;

  nlohmann::json to_json() const {
    return nlohmann::json{{"loss", loss},       {"auc", auc},
                          {"gauc", gauc},       {"ndcg_at_k", ndcg_at_k},
                          {"lr_at_k", lr_at_k}, {"k", k}};
  }
};

// Prediction-quality metrics of an evaluator over a record set: loss is the
// per-record summed cross entropy averaged over records, AUC pools all
// impressions, GAUC groups them by the user-id field.
struct PredictionMetrics {
  double loss = 0.0;
  double auc = 0.0;
  double gauc = 0.0;
};

inline PredictionMetrics evaluate_predictions(
    const EvaluatorModel& model, const std::vector<ListRecord>& records) {
  if (records.empty()) {
    throw DataError("evaluate_predictions: empty record set");
  }
  double loss = 0.0;
  std::vector<double> all_scores;
  std::vector<int> all_labels;
  std::map<std::int64_t, std::size_t> user_slot;
  std::vector<std::vector<double>> user_scores;
  std::vector<std::vector<int>> user_labels;
  for (const ListRecord& rec : records) {
    const std::vector<double> probs =
        model.score_list(rec.user, rec.final_items());
    loss += bce_sum_value(probs, rec.labels);
    const std::int64_t uid = rec.user.sparse.empty() ? 0 : rec.user.sparse[0];
    auto [it, inserted] = user_slot.emplace(uid, user_scores.size());
    if (inserted) {
      user_scores.emplace_back();
      user_labels.emplace_back();
    }
    for (std::size_t t = 0; t < probs.size(); ++t) {
      all_scores.push_back(probs[t]);
      all_labels.push_back(rec.labels[t]);
      user_scores[it->second].push_back(probs[t]);
      user_labels[it->second].push_back(rec.labels[t]);
    }
  }
  PredictionMetrics out;
  out.loss = loss / static_cast<double>(records.size());
  out.auc = auc(all_scores, all_labels);
  out.gauc = gauc(user_scores, user_labels);
  return out;
}

// NDCG gains for a generated ordering: an item counts as relevant iff it
// was exhibited in the recorded final list with a positive label; items the
// user never saw get zero gain.
inline std::vector<int> relevance_gains(const ListRecord& rec,
                                        const std::vector<std::size_t>& order) {
  std::map<std::size_t, int> label_of;
  for (std::size_t t = 0; t < rec.final.size(); ++t) {
    label_of[rec.final[t]] = rec.labels[t];
  }
  std::vector<int> gains;
  gains.reserve(order.size());
  for (std::size_t idx : order) {
    auto it = label_of.find(idx);
    gains.push_back(it == label_of.end() ? 0 : it->second);
  }
  return gains;
}

}  // namespace rerank
