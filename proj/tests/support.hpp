#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rerank/data.hpp"
#include "rerank/optim.hpp"
#include "rerank/rng.hpp"
#include "rerank/tape.hpp"
#include "rerank/tensor.hpp"

namespace rerank::testing {

// Central finite differences over every entry of every parameter in the
// store. build_loss must record a fresh forward pass from the store's
// current values each time it is called.
struct GradCheck {
  double max_rel_err = 0.0;
  std::string worst;
};

inline GradCheck grad_check(ParamStore& store,
                            const std::function<Value(Graph&)>& build_loss,
                            double eps = 1e-5) {
  store.clear_grads();
  std::map<std::string, Tensor> analytic;
  {
    Graph g;
    Value loss = build_loss(g);
    g.backward(loss);
    analytic = store.grads();
    store.clear_grads();
  }
  auto loss_value = [&]() {
    Graph g;
    return build_loss(g).value().at(0, 0);
  };
  GradCheck result;
  for (const auto& [name, grad] : analytic) {
    Tensor& param = store.mutable_value(name);
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double original = param.flat()[i];
      param.flat()[i] = original + eps;
      const double plus = loss_value();
      param.flat()[i] = original - eps;
      const double minus = loss_value();
      param.flat()[i] = original;
      const double fd = (plus - minus) / (2.0 * eps);
      const double an = grad.flat()[i];
      const double rel = std::abs(an - fd) /
                         std::max({1e-6, std::abs(an), std::abs(fd)});
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

inline Tensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols,
                            double scale = 1.0) {
  Tensor t(rows, cols);
  for (double& v : t.flat()) v = scale * rng.uniform(-1.0, 1.0);
  return t;
}

// Gradient-check models get fully random parameters (zero-initialized
// biases would park ReLU pre-activations exactly on the kink, where central
// differences are meaningless).
inline void randomize_params(ParamStore& store, Rng& rng, double bound) {
  for (const auto& [name, t] : store.params()) {
    Tensor& p = store.mutable_value(name);
    for (double& v : p.flat()) v = rng.uniform(-bound, bound);
  }
}

// ---- plain-double matrix helpers for oracle re-implementations ----

using Vec = std::vector<double>;

inline Vec matvec(const Vec& x, const Tensor& w) {
  Vec out(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) out[j] += x[i] * w.at(i, j);
  }
  return out;
}

inline Vec vadd(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline Vec vmul(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  return a;
}

inline Vec map_sigmoid(Vec a) {
  for (double& v : a) v = 1.0 / (1.0 + std::exp(-v));
  return a;
}

inline Vec map_tanh(Vec a) {
  for (double& v : a) v = std::tanh(v);
  return a;
}

inline Vec row_of(const Tensor& t, std::size_t r) {
  Vec out(t.cols());
  for (std::size_t j = 0; j < t.cols(); ++j) out[j] = t.at(r, j);
  return out;
}

// All-pairs AUC oracle, ties counted half.
inline double auc_bruteforce(const std::vector<double>& scores,
                             const std::vector<int>& labels) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

// Small random dataset exercising the record invariants: every record has
// m items with two sparse fields and one dense feature, and n exhibited
// positions.
inline std::vector<ListRecord> random_records(Rng& rng, std::size_t count,
                                              std::size_t m, std::size_t n,
                                              std::int64_t user_vocab = 20,
                                              std::int64_t item_vocab = 50) {
  std::vector<ListRecord> out;
  out.reserve(count);
  for (std::size_t r = 0; r < count; ++r) {
    ListRecord rec;
    rec.user.sparse = {static_cast<std::int64_t>(
        rng.index(static_cast<std::size_t>(user_vocab)))};
    rec.user.dense = {rng.uniform(-1.0, 1.0)};
    for (std::size_t i = 0; i < m; ++i) {
      ItemProfile item;
      item.sparse = {static_cast<std::int64_t>(
                         rng.index(static_cast<std::size_t>(item_vocab))),
                     static_cast<std::int64_t>(rng.index(6))};
      item.dense = {rng.uniform(0.0, 1.0)};
      rec.items.push_back(std::move(item));
    }
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    rng.shuffle(order);
    rec.final.assign(order.begin(), order.begin() + static_cast<long>(n));
    for (std::size_t i = 0; i < n; ++i) {
      rec.labels.push_back(rng.bernoulli(0.4) ? 1 : 0);
    }
    rec.validate();
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace rerank::testing
