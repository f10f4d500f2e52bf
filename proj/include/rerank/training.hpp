#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rerank/data.hpp"
#include "rerank/errors.hpp"
#include "rerank/evaluator.hpp"
#include "rerank/features.hpp"
#include "rerank/generator.hpp"
#include "rerank/metrics.hpp"
#include "rerank/rng.hpp"
#include "rerank/tape.hpp"

namespace rerank {

struct TrainConfig {
  double lr = 0.001;
  std::size_t batch_size = 64;
  std::size_t evaluator_epochs = 8;
  std::size_t generator_epochs = 4;
  double validation_frac = 0.1;
  std::size_t eval_k = 5;
  bool use_self_reward = true;
  bool use_diff_reward = true;
  std::uint64_t seed = 1;
  EvaluatorConfig evaluator;
  GeneratorConfig generator;

  void validate() const {
    if (!(lr > 0.0)) throw UsageError("TrainConfig.lr must be positive");
    if (batch_size == 0) {
      throw UsageError("TrainConfig.batch_size must be positive");
    }
    if (!(validation_frac >= 0.0 && validation_frac < 1.0)) {
      throw UsageError("TrainConfig.validation_frac must be in [0,1)");
    }
    if (eval_k == 0) throw UsageError("TrainConfig.eval_k must be >= 1");
    if (!use_self_reward && !use_diff_reward) {
      throw UsageError("TrainConfig: at least one reward component must be "
                       "enabled");
    }
  }
};

// Per-step rewards for one generated list. advantage[t] is always
// self + diff; reward ablations are applied where the training loss is
// assembled, not here.
struct RewardBreakdown {
  std::vector<double> self_reward;
  std::vector<double> diff_reward;
  std::vector<double> advantage;
};

// Self reward: the evaluator's contextual score of the t-th item inside the
// generated list. Differential reward: how much the other items' total
// score changes because the t-th item is present (the list with it removed,
// order preserved, is rescored). Costs one evaluator pass on the full list
// plus one per removal.
inline RewardBreakdown advantage_reward(
    const EvaluatorModel& evaluator, const UserProfile& user,
    const std::vector<const ItemProfile*>& generated) {
  const std::size_t n = generated.size();
  if (n == 0) throw UsageError("advantage_reward: empty list");
  const std::vector<double> full = evaluator.score_list(user, generated);
  const double full_sum = std::accumulate(full.begin(), full.end(), 0.0);
  RewardBreakdown out;
  out.self_reward.resize(n);
  out.diff_reward.resize(n);
  out.advantage.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    out.self_reward[t] = full[t];
    if (n == 1) {
      out.diff_reward[t] = 0.0;  // both sums are empty
    } else {
      std::vector<const ItemProfile*> reduced;
      reduced.reserve(n - 1);
      for (std::size_t i = 0; i < n; ++i) {
        if (i != t) reduced.push_back(generated[i]);
      }
      const std::vector<double> removed =
          evaluator.score_list(user, reduced);
      const double removed_sum =
          std::accumulate(removed.begin(), removed.end(), 0.0);
      out.diff_reward[t] = (full_sum - full[t]) - removed_sum;
    }
    out.advantage[t] = out.self_reward[t] + out.diff_reward[t];
  }
  return out;
}

// -sum_t r_t * log s_t(chosen), rewards entering as constants.
inline Value policy_loss(Graph& g, const std::vector<Value>& chosen_logprobs,
                         const std::vector<double>& rewards) {
  if (chosen_logprobs.empty()) {
    throw UsageError("policy_loss: empty trajectory");
  }
  if (chosen_logprobs.size() != rewards.size()) {
    throw UsageError("policy_loss: rewards and steps differ in length");
  }
  Value logps = concat_cols(chosen_logprobs);
  return affine(sum_all(mul_const(logps, Tensor::row(rewards))), -1.0, 0.0);
}

inline double policy_loss_value(const GeneratedList& list,
                                const std::vector<double>& rewards) {
  if (list.mode != SelectMode::sampled) {
    throw UsageError("policy_loss_value: loss is defined for sampled lists "
                     "only");
  }
  if (list.chosen_probs.size() != rewards.size()) {
    throw UsageError("policy_loss_value: rewards and steps differ in length");
  }
  double loss = 0.0;
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    loss -= rewards[t] * std::log(list.chosen_probs[t]);
  }
  return loss;
}

using EpochLogFn = std::function<void(const nlohmann::json&)>;

namespace detail {

inline double elapsed_sec(
    const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

inline void check_train_records(const std::vector<ListRecord>& records,
                                const char* stage) {
  if (records.empty()) {
    throw DataError(std::string(stage) + ": empty training set");
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].final.empty()) {
      throw DataError(std::string(stage) + ": record " + std::to_string(i) +
                      " has an empty final list");
    }
  }
}

}  // namespace detail

// Stage one: fit the evaluator with cross entropy on recorded lists.
// Returns the parameters of the epoch with the best validation loss.
inline EvaluatorModel train_evaluator(const std::vector<ListRecord>& train,
                                      const std::vector<ListRecord>& val,
                                      const TrainConfig& cfg,
                                      const EpochLogFn& log = nullptr) {
  cfg.validate();
  detail::check_train_records(train, "train_evaluator");
  EvaluatorModel model(cfg.evaluator, FeatureSpec::infer(train),
                       DenseStats::compute(train));
  model.init_params(cfg.seed);

  Rng shuffle_rng(cfg.seed ^ 0x5eed0001ULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  double best_metric = std::numeric_limits<double>::infinity();
  std::map<std::string, Tensor> best_params = model.params().snapshot();

  for (std::size_t epoch = 1; epoch <= cfg.evaluator_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);
    double train_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size();
         begin += cfg.batch_size) {
      const std::size_t end =
          std::min(order.size(), begin + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        const ListRecord& rec = train[order[i]];
        Graph g;
        Value probs = model.forward(g, rec.user, rec.final_items());
        Value record_loss = bce_sum(g, probs, rec.labels);
        train_loss += record_loss.value().at(0, 0);
        g.backward(affine(record_loss, inv_batch, 0.0));
      }
      model.params().adam_step(cfg.lr);
    }
    train_loss /= static_cast<double>(train.size());

    nlohmann::json entry{{"stage", "evaluator"},
                         {"epoch", epoch},
                         {"train_loss", train_loss}};
    double selection_metric = train_loss;
    if (!val.empty()) {
      const PredictionMetrics vm = evaluate_predictions(model, val);
      entry["val_loss"] = vm.loss;
      entry["val_auc"] = vm.auc;
      entry["val_gauc"] = vm.gauc;
      selection_metric = vm.loss;
    }
    entry["wall_time_sec"] = detail::elapsed_sec(start);
    if (log) log(entry);
    if (selection_metric < best_metric) {
      best_metric = selection_metric;
      best_params = model.params().snapshot();
    }
  }
  model.params().restore(best_params);
  return model;
}

inline EvaluatorModel train_evaluator(const std::vector<ListRecord>& records,
                                      const TrainConfig& cfg,
                                      const EpochLogFn& log = nullptr) {
  cfg.validate();
  if (cfg.validation_frac == 0.0) {
    return train_evaluator(records, {}, cfg, log);
  }
  auto [train, val] =
      split_records(records, 1.0 - cfg.validation_frac, cfg.seed ^ 0x7a1ULL);
  return train_evaluator(train, val, cfg, log);
}

// Greedy strategy baseline: score the input list once in recorded order,
// then exhibit the top n by descending score (ties keep the lower input
// index first).
inline GeneratedList greedy_baseline(const EvaluatorModel& evaluator,
                                     const UserProfile& user,
                                     const std::vector<const ItemProfile*>& c,
                                     std::size_t n) {
  if (n > c.size()) {
    throw DataError("greedy_baseline: n exceeds input list size");
  }
  const std::vector<double> scores = evaluator.score_list(user, c);
  std::vector<std::size_t> idx(c.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  GeneratedList out;
  out.mode = SelectMode::greedy;
  out.order.assign(idx.begin(), idx.begin() + static_cast<long>(n));
  return out;
}

inline GeneratedList greedy_baseline(const EvaluatorModel& evaluator,
                                     const ListRecord& rec) {
  std::vector<const ItemProfile*> c;
  c.reserve(rec.items.size());
  for (const ItemProfile& it : rec.items) c.push_back(&it);
  return greedy_baseline(evaluator, rec.user, c, rec.final.size());
}

// Greedy-mode list quality of a generator over a record set, judged by the
// evaluator (list reward and NDCG at k, truncated to each record's length).
struct RerankMetrics {
  double lr_at_k = 0.0;
  double ndcg_at_k = 0.0;
};

inline RerankMetrics evaluate_generator(const GeneratorModel& generator,
                                        const EvaluatorModel& evaluator,
                                        const std::vector<ListRecord>& records,
                                        std::size_t k) {
  if (records.empty()) {
    throw DataError("evaluate_generator: empty record set");
  }
  double lr_sum = 0.0, ndcg_sum = 0.0;
  for (const ListRecord& rec : records) {
    std::vector<const ItemProfile*> c;
    c.reserve(rec.items.size());
    for (const ItemProfile& it : rec.items) c.push_back(&it);
    const GeneratedList gen = generator.generate(
        rec.user, c, rec.final.size(), SelectMode::greedy);
    std::vector<const ItemProfile*> ordered;
    ordered.reserve(gen.order.size());
    for (std::size_t idx : gen.order) ordered.push_back(&rec.items[idx]);
    const std::size_t kk = std::min(k, ordered.size());
    lr_sum += lr_at_k(evaluator, rec.user, ordered, kk);
    ndcg_sum += ndcg_at_k(relevance_gains(rec, gen.order), kk);
  }
  RerankMetrics out;
  out.lr_at_k = lr_sum / static_cast<double>(records.size());
  out.ndcg_at_k = ndcg_sum / static_cast<double>(records.size());
  return out;
}

// Stage two: REINFORCE against the frozen evaluator. One sampled trajectory
// per record per epoch; rewards are advantage rewards with the configured
// components enabled. Returns the parameters of the epoch with the best
// validation list reward.
inline GeneratorModel train_generator(const std::vector<ListRecord>& train,
                                      const std::vector<ListRecord>& val,
                                      const EvaluatorModel& evaluator,
                                      const TrainConfig& cfg,
                                      const EpochLogFn& log = nullptr) {
  cfg.validate();
  detail::check_train_records(train, "train_generator");
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].final.size() > train[i].items.size()) {
      throw DataError("train_generator: record " + std::to_string(i) +
                      " has n > m");
    }
  }
  GeneratorModel model(cfg.generator, FeatureSpec::infer(train),
                       DenseStats::compute(train));
  model.init_params(cfg.seed ^ 0x6e40001ULL);

  Rng shuffle_rng(cfg.seed ^ 0x5eed0002ULL);
  Rng sample_rng(cfg.seed ^ 0x5a3b1e00ULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  double best_metric = -std::numeric_limits<double>::infinity();
  std::map<std::string, Tensor> best_params = model.params().snapshot();

  for (std::size_t epoch = 1; epoch <= cfg.generator_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);
    double train_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size();
         begin += cfg.batch_size) {
      const std::size_t end =
          std::min(order.size(), begin + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        const ListRecord& rec = train[order[i]];
        std::vector<const ItemProfile*> c;
        c.reserve(rec.items.size());
        for (const ItemProfile& it : rec.items) c.push_back(&it);
        Graph g;
        Rollout roll = model.rollout(g, rec.user, c, rec.final.size(),
                                     SelectMode::sampled, &sample_rng);
        std::vector<const ItemProfile*> chosen;
        chosen.reserve(roll.list.order.size());
        for (std::size_t idx : roll.list.order) {
          chosen.push_back(&rec.items[idx]);
        }
        const RewardBreakdown rb =
            advantage_reward(evaluator, rec.user, chosen);
        std::vector<double> rewards(rb.advantage.size(), 0.0);
        for (std::size_t t = 0; t < rewards.size(); ++t) {
          if (cfg.use_self_reward) rewards[t] += rb.self_reward[t];
          if (cfg.use_diff_reward) rewards[t] += rb.diff_reward[t];
        }
        Value loss = policy_loss(g, roll.chosen_logprobs, rewards);
        train_loss += loss.value().at(0, 0);
        g.backward(affine(loss, inv_batch, 0.0));
      }
      model.params().adam_step(cfg.lr);
    }
    train_loss /= static_cast<double>(train.size());

    nlohmann::json entry{{"stage", "generator"},
                         {"epoch", epoch},
                         {"train_loss", train_loss},
                         {"k", cfg.eval_k}};
    double selection_metric = -train_loss;
    if (!val.empty()) {
      const RerankMetrics vm =
          evaluate_generator(model, evaluator, val, cfg.eval_k);
      entry["val_lr_at_k"] = vm.lr_at_k;
      entry["val_ndcg_at_k"] = vm.ndcg_at_k;
      selection_metric = vm.lr_at_k;
    }
    entry["wall_time_sec"] = detail::elapsed_sec(start);
    if (log) log(entry);
    if (selection_metric > best_metric) {
      best_metric = selection_metric;
      best_params = model.params().snapshot();
    }
  }
  model.params().restore(best_params);
  return model;
}

inline GeneratorModel train_generator(const std::vector<ListRecord>& records,
                                      const EvaluatorModel& evaluator,
                                      const TrainConfig& cfg,
                                      const EpochLogFn& log = nullptr) {
  cfg.validate();
  if (cfg.validation_frac == 0.0) {
    return train_generator(records, {}, evaluator, cfg, log);
  }
  auto [train, val] =
      split_records(records, 1.0 - cfg.validation_frac, cfg.seed ^ 0x7a1ULL);
  return train_generator(train, val, evaluator, cfg, log);
}

}  // namespace rerank
