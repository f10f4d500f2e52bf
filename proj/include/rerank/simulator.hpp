#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "rerank/data.hpp"
#include "rerank/errors.hpp"
#include "rerank/rng.hpp"
#include "rerank/tensor.hpp"
#include "rerank/truth.hpp"

namespace rerank {

// Synthetic contextual-click environment. Items carry a latent vector
// anchored at a category centroid, a category id and a price; users carry a
// latent vector and a taste bias. The true click probability of an
// exhibited item decays with position, drops with similarity to the items
// shown before it (category fatigue) and rises when the previous item was
// more expensive (price anchoring) — so the best list is generally not the
// point-wise-best list.
struct SimConfig {
  std::size_t num_users = 2000;
  std::size_t num_items = 1000;
  std::size_t num_categories = 8;
  std::size_t records_per_user = 10;
  std::size_t input_size = 10;      // m
  std::size_t exhibit_size = 5;     // n
  std::size_t latent_dim = 4;
  double position_decay = 0.9;      // gamma in (0,1]
  double context_strength = 0.5;    // beta >= 0, similarity fatigue
  double price_anchor = 0.0;        // alpha >= 0
  double explore_epsilon = 0.1;     // logging-policy swap rate
  double affinity_scale = 2.0;
  double affinity_bias = -0.3;
  double user_bias_std = 0.3;
  double item_bias_std = 0.5;
  double category_noise = 0.5;
  std::size_t candidate_pool_factor = 2;
  std::uint64_t seed = 1;

  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw UsageError("SimConfig." + field + " " + why);
    };
    if (num_users == 0) fail("num_users", "must be positive");
    if (num_items == 0) fail("num_items", "must be positive");
    if (num_categories == 0) fail("num_categories", "must be positive");
    if (records_per_user == 0) fail("records_per_user", "must be positive");
    if (input_size == 0) fail("input_size", "must be positive");
    if (exhibit_size == 0 || exhibit_size > input_size) {
      fail("exhibit_size", "must be in [1, input_size]");
    }
    if (latent_dim == 0) fail("latent_dim", "must be positive");
    if (!(position_decay > 0.0 && position_decay <= 1.0)) {
      fail("position_decay", "must be in (0,1]");
    }
    if (context_strength < 0.0) fail("context_strength", "must be >= 0");
    if (price_anchor < 0.0) fail("price_anchor", "must be >= 0");
    if (user_bias_std < 0.0) fail("user_bias_std", "must be >= 0");
    if (item_bias_std < 0.0) fail("item_bias_std", "must be >= 0");
    if (explore_epsilon < 0.0 || explore_epsilon > 1.0) {
      fail("explore_epsilon", "must be in [0,1]");
    }
    if (candidate_pool_factor == 0) {
      fail("candidate_pool_factor", "must be positive");
    }
    if (candidate_pool_factor * input_size > num_items) {
      fail("num_items", "too small for input_size * candidate_pool_factor");
    }
  }
};

struct SimGroundTruth {
  std::vector<TruthRecord> records;                  // aligned with dataset
  std::vector<std::vector<double>> exhibited_probs;  // true p of recorded V
  Tensor user_latent;                                // row per user
  Tensor item_latent;                                // row per item
};

struct SimOutput {
  std::vector<ListRecord> records;
  SimGroundTruth truth;
};

namespace detail {

inline Rng keyed_rng(std::uint64_t seed, std::uint64_t key) {
  // splitmix64 of (seed, key) so per-record streams are order-independent
  std::uint64_t x = seed ^ (key * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return Rng(x ^ (x >> 31));
}

}  // namespace detail

inline SimOutput simulate_records(const SimConfig& cfg) {
  cfg.validate();
  Rng world(cfg.seed);

  const std::size_t k = cfg.latent_dim;
  Tensor centroids(cfg.num_categories, k);
  for (double& v : centroids.flat()) v = world.normal();

  SimOutput out;
  out.truth.item_latent = Tensor(cfg.num_items, k);
  std::vector<std::int64_t> item_category(cfg.num_items);
  std::vector<double> item_price(cfg.num_items);
  std::vector<double> item_bias(cfg.num_items);
  for (std::size_t i = 0; i < cfg.num_items; ++i) {
    const std::size_t c = i % cfg.num_categories;
    item_category[i] = static_cast<std::int64_t>(c);
    double norm = 0.0;
    for (std::size_t d = 0; d < k; ++d) {
      const double v = centroids.at(c, d) + cfg.category_noise * world.normal();
      out.truth.item_latent.at(i, d) = v;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (std::size_t d = 0; d < k; ++d) out.truth.item_latent.at(i, d) /= norm;
    }
    item_price[i] = world.uniform();
    item_bias[i] = cfg.item_bias_std * world.normal();
  }

  out.truth.user_latent = Tensor(cfg.num_users, k);
  std::vector<double> user_bias(cfg.num_users);
  for (std::size_t u = 0; u < cfg.num_users; ++u) {
    for (std::size_t d = 0; d < k; ++d) {
      out.truth.user_latent.at(u, d) = world.normal();
    }
    user_bias[u] = cfg.user_bias_std * world.normal();
  }

  auto affinity = [&](std::size_t u, std::size_t i) {
    double dot = 0.0;
    for (std::size_t d = 0; d < k; ++d) {
      dot += out.truth.user_latent.at(u, d) * out.truth.item_latent.at(i, d);
    }
    return cfg.affinity_bias + cfg.affinity_scale * dot + user_bias[u] +
           item_bias[i];
  };

  const std::size_t total = cfg.num_users * cfg.records_per_user;
  out.records.reserve(total);
  out.truth.records.reserve(total);
  out.truth.exhibited_probs.reserve(total);

  for (std::size_t u = 0; u < cfg.num_users; ++u) {
    for (std::size_t r = 0; r < cfg.records_per_user; ++r) {
      Rng rng = detail::keyed_rng(cfg.seed,
                                  u * cfg.records_per_user + r + 1);
      // upstream matching: a sampled pool, keep the best m by affinity
      const std::size_t pool_size = cfg.candidate_pool_factor * cfg.input_size;
      std::vector<std::size_t> pool;
      pool.reserve(pool_size);
      std::vector<bool> used(cfg.num_items, false);
      while (pool.size() < pool_size) {
        const std::size_t i = rng.index(cfg.num_items);
        if (!used[i]) {
          used[i] = true;
          pool.push_back(i);
        }
      }
      std::sort(pool.begin(), pool.end(),
                [&](std::size_t a, std::size_t b) {
                  const double fa = affinity(u, a), fb = affinity(u, b);
                  return fa != fb ? fa > fb : a < b;
                });
      pool.resize(cfg.input_size);  // input ranking list, best first

      ListRecord rec;
      rec.user.sparse = {static_cast<std::int64_t>(u)};
      rec.user.dense = {user_bias[u]};
      TruthRecord truth;
      truth.position_decay = cfg.position_decay;
      truth.context_strength = cfg.context_strength;
      truth.price_anchor = cfg.price_anchor;
      for (std::size_t item : pool) {
        ItemProfile profile;
        profile.sparse = {static_cast<std::int64_t>(item),
                          item_category[item]};
        profile.dense = {item_price[item], item_bias[item]};
        rec.items.push_back(std::move(profile));
        truth.base.push_back(
            1.0 / (1.0 + std::exp(-affinity(u, item))));
        truth.category.push_back(item_category[item]);
        truth.price.push_back(item_price[item]);
      }

      // logging policy: greedy by point-wise affinity with epsilon swaps
      std::vector<std::size_t> working(cfg.input_size);
      std::iota(working.begin(), working.end(), 0);
      for (std::size_t t = 0; t < cfg.exhibit_size; ++t) {
        if (rng.bernoulli(cfg.explore_epsilon)) {
          const std::size_t other =
              t + rng.index(cfg.input_size - t);
          std::swap(working[t], working[other]);
        }
      }
      rec.final.assign(working.begin(),
                       working.begin() + static_cast<long>(cfg.exhibit_size));

      const std::vector<double> probs =
          true_click_probabilities(truth, rec.final);
      rec.labels.reserve(cfg.exhibit_size);
      for (double p : probs) rec.labels.push_back(rng.bernoulli(p) ? 1 : 0);

      rec.validate("simulated record");
      out.records.push_back(std::move(rec));
      out.truth.records.push_back(std::move(truth));
      out.truth.exhibited_probs.push_back(probs);
    }
  }
  return out;
}

// Exact argmax of the summed true click probabilities over all ordered
// n-item arrangements; exhaustive, so sizes are capped.
inline std::vector<std::size_t> true_optimal_order(const TruthRecord& truth,
                                                   std::size_t n) {
  const std::size_t m = truth.base.size();
  if (m > 10 || n > 5) {
    throw UsageError("true_optimal_order: exhaustive search capped at "
                     "m <= 10, n <= 5");
  }
  if (n == 0 || n > m) {
    throw UsageError("true_optimal_order: need 0 < n <= m");
  }
  std::vector<std::size_t> current, best;
  double best_value = -1.0;
  std::vector<bool> used(m, false);
  auto dfs = [&](auto&& self) -> void {
    if (current.size() == n) {
      double value = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        value += true_click_probability(truth, current, t);
      }
      if (value > best_value) {
        best_value = value;
        best = current;
      }
      return;
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (used[i]) continue;
      used[i] = true;
      current.push_back(i);
      self(self);
      current.pop_back();
      used[i] = false;
    }
  };
  dfs(dfs);
  return best;
}

}  // namespace rerank
