#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rerank/data.hpp"
#include "rerank/errors.hpp"
#include "rerank/features.hpp"
#include "rerank/optim.hpp"
#include "rerank/rng.hpp"
#include "rerank/tape.hpp"

namespace rerank {

enum class SelectMode { greedy, sampled };

struct GeneratedList {
  std::vector<std::size_t> order;               // distinct indices into C
  std::vector<std::vector<double>> step_dists;  // full distribution per step
  std::vector<double> chosen_probs;             // probability of each choice
  SelectMode mode = SelectMode::greedy;
};

// Graph-bound rollout; chosen_logprobs feed the policy-gradient loss.
struct Rollout {
  GeneratedList list;
  std::vector<Value> chosen_logprobs;
};

struct GeneratorConfig {
  std::size_t embedding_dim = 8;
  std::size_t gru_hidden = 32;
  std::vector<std::size_t> mlp_hidden = {128, 64, 32};
  bool use_evolving = true;
  bool use_activating = true;
};

// Reranking policy: selects n items from the input list step by step. Each
// step encodes the already-selected items (GRU), attends over that encoding
// conditioned on each remaining candidate, scores candidates with an MLP
// and draws from the masked softmax.
class GeneratorModel {
 public:
  GeneratorModel(GeneratorConfig cfg, FeatureSpec spec, DenseStats stats)
      : cfg_(std::move(cfg)), spec_(std::move(spec)), stats_(std::move(stats)) {}

  void init_params(std::uint64_t seed, double bound = 0.05) {
    Rng rng(seed);
    create_embeddings(params_, "user", spec_.user, cfg_.embedding_dim, rng,
                      bound);
    create_embeddings(params_, "item", spec_.item, cfg_.embedding_dim, rng,
                      bound);
    create_weight("start", 1, item_dim(), rng, bound);
    if (cfg_.use_evolving) {
      const std::size_t in = item_dim(), h = cfg_.gru_hidden;
      create_weight("gru.wz", in, h, rng, bound);
      create_weight("gru.uz", h, h, rng, bound);
      create_weight("gru.wr", in, h, rng, bound);
      create_weight("gru.ur", h, h, rng, bound);
      create_weight("gru.wc", in, h, rng, bound);
      create_weight("gru.uc", h, h, rng, bound);
    }
    if (cfg_.use_activating) {
      create_weight("att.w", selected_dim(), item_dim(), rng, bound);
    }
    std::size_t w = selector_input_dim();
    for (std::size_t l = 0; l < cfg_.mlp_hidden.size(); ++l) {
      create_weight(mlp_name("w", l), w, cfg_.mlp_hidden[l], rng, bound);
      params_.create(mlp_name("b", l), Tensor(1, cfg_.mlp_hidden[l]));
      w = cfg_.mlp_hidden[l];
    }
    create_weight(mlp_name("w", cfg_.mlp_hidden.size()), w, 1, rng, bound);
    params_.create(mlp_name("b", cfg_.mlp_hidden.size()), Tensor(1, 1));
  }

  std::size_t user_dim() const {
    return spec_.user.repr_dim(cfg_.embedding_dim);
  }
  std::size_t item_dim() const {
    return spec_.item.repr_dim(cfg_.embedding_dim);
  }

  // Width of the selected-list encoding the attention pools over: GRU
  // states, or raw item representations when the evolving layer is off.
  std::size_t selected_dim() const {
    return cfg_.use_evolving ? cfg_.gru_hidden : item_dim();
  }

  std::size_t selector_input_dim() const {
    std::size_t w = user_dim() + item_dim();
    if (cfg_.use_activating) w += selected_dim();
    return w;
  }

  Value user_representation(Graph& g, const UserProfile& u) const {
    return build_representation(g, params_, "user", spec_.user, u.sparse,
                                u.dense, stats_.user_mean, stats_.user_std,
                                cfg_.embedding_dim);
  }

  Value item_representation(Graph& g, const ItemProfile& it) const {
    return build_representation(g, params_, "item", spec_.item, it.sparse,
                                it.dense, stats_.item_mean, stats_.item_std,
                                cfg_.embedding_dim);
  }

  Value gru_step(Graph& g, Value x, Value h_prev) const {
    auto w = [&](const char* name) { return g.param(params_, name); };
    Value update = sigmoid(add(matmul(x, w("gru.wz")),
                               matmul(h_prev, w("gru.uz"))));
    Value reset = sigmoid(add(matmul(x, w("gru.wr")),
                              matmul(h_prev, w("gru.ur"))));
    Value candidate = tanh_act(add(matmul(x, w("gru.wc")),
                                   matmul(mul(reset, h_prev), w("gru.uc"))));
    return add(mul(affine(update, -1.0, 1.0), h_prev),
               mul(update, candidate));
  }

  // Attention over the selected-list encoding H for one candidate:
  // weights softmax_i(h_i W x_c), pooled sum of h_i.
  Value attention_pool(Graph& g, const std::vector<Value>& selected,
                       Value candidate) const {
    if (selected.empty()) throw UsageError("attention_pool: empty history");
    Value h_mat = stack_rows(selected);
    Value scores = transpose(
        matmul(h_mat, matmul(g.param(params_, "att.w"),
                             transpose(candidate))));
    return matmul(softmax_rows(scores), h_mat);
  }

  // Per-candidate selector scores at one step, as an m x 1 column.
  Value selector_logits(Graph& g, Value user_repr, Value cand_matrix,
                        const std::vector<Value>& selected) const {
    const std::size_t m = cand_matrix.rows();
    std::vector<Value> parts{repeat_rows(user_repr, m), cand_matrix};
    if (cfg_.use_activating) {
      Value h_mat = stack_rows(selected);
      // softmax over selected states, conditioned on each candidate row
      Value scores = matmul(cand_matrix,
                            transpose(matmul(h_mat,
                                             g.param(params_, "att.w"))));
      parts.push_back(matmul(softmax_rows(scores), h_mat));
    }
    Value x = concat_cols(parts);
    for (std::size_t l = 0; l < cfg_.mlp_hidden.size(); ++l) {
      x = relu(add_rows(matmul(x, g.param(params_, mlp_name("w", l))),
                        g.param(params_, mlp_name("b", l))));
    }
    const std::size_t head = cfg_.mlp_hidden.size();
    return add_rows(matmul(x, g.param(params_, mlp_name("w", head))),
                    g.param(params_, mlp_name("b", head)));
  }

  // Runs the selection loop n times. Sampled mode draws from the masked
  // softmax with the provided RNG; greedy takes the argmax, ties resolved
  // to the lowest index.
  Rollout rollout(Graph& g, const UserProfile& u,
                  const std::vector<const ItemProfile*>& candidates,
                  std::size_t n, SelectMode mode, Rng* rng) const {
    return run_steps(g, u, candidates, n, mode, rng, nullptr);
  }

  // Replays a fixed action sequence, returning the log probabilities the
  // current parameters assign to those choices. Backs gradient checks on a
  // frozen trajectory.
  Rollout replay(Graph& g, const UserProfile& u,
                 const std::vector<const ItemProfile*>& candidates,
                 const std::vector<std::size_t>& actions) const {
    return run_steps(g, u, candidates, actions.size(), SelectMode::sampled,
                     nullptr, &actions);
  }

  static std::size_t select_greedy(const Tensor& probs,
                                   const std::vector<bool>& taken) {
    std::size_t best = probs.cols();
    for (std::size_t j = 0; j < probs.cols(); ++j) {
      if (taken[j]) continue;
      if (best == probs.cols() || probs.at(0, j) > probs.at(0, best)) {
        best = j;
      }
    }
    return best;
  }

  static std::size_t select_sampled(const Tensor& probs,
                                    const std::vector<bool>& taken,
                                    Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t last_open = probs.cols();
    for (std::size_t j = 0; j < probs.cols(); ++j) {
      if (taken[j]) continue;
      last_open = j;
      acc += probs.at(0, j);
      if (u < acc) return j;
    }
    return last_open;  // guards against accumulated rounding
  }

 private:
  Rollout run_steps(Graph& g, const UserProfile& u,
                    const std::vector<const ItemProfile*>& candidates,
                    std::size_t n, SelectMode mode, Rng* rng,
                    const std::vector<std::size_t>* forced) const {
    const std::size_t m = candidates.size();
    if (m == 0) throw DataError("generate: empty input list");
    if (n > m) {
      throw DataError("generate: requested length " + std::to_string(n) +
                      " exceeds input list size " + std::to_string(m));
    }
    if (mode == SelectMode::sampled && rng == nullptr && forced == nullptr) {
      throw UsageError("generate: sampled mode needs an RNG");
    }
    Value user = user_representation(g, u);
    std::vector<Value> cand_reprs;
    cand_reprs.reserve(m);
    for (const ItemProfile* it : candidates) {
      cand_reprs.push_back(item_representation(g, *it));
    }
    Value cand_matrix = stack_rows(cand_reprs);

    Rollout out;
    out.list.mode = mode;
    std::vector<bool> taken(m, false);
    std::vector<Value> selected;  // GRU states, or raw reprs without GRU
    Value last_input = g.param(params_, "start");
    Value h_prev = g.input(Tensor(1, cfg_.use_evolving ? cfg_.gru_hidden : 0));
    Value static_logits;  // reused across steps when history is ignored

    for (std::size_t t = 0; t < n; ++t) {
      if (cfg_.use_activating) {
        if (cfg_.use_evolving) {
          h_prev = gru_step(g, last_input, h_prev);
          selected.push_back(h_prev);
        } else {
          selected.push_back(last_input);
        }
      }
      Value logits;
      if (cfg_.use_activating) {
        logits = selector_logits(g, user, cand_matrix, selected);
      } else {
        if (!static_logits.valid()) {
          static_logits = selector_logits(g, user, cand_matrix, {});
        }
        logits = static_logits;
      }
      Value dist = masked_softmax_row(transpose(logits), taken);
      const Tensor& probs = dist.value();
      std::size_t choice;
      if (forced != nullptr) {
        choice = (*forced)[t];
        if (choice >= m || taken[choice]) {
          throw UsageError("replay: forced action is out of range or "
                           "already selected");
        }
      } else {
        choice = mode == SelectMode::greedy ? select_greedy(probs, taken)
                                            : select_sampled(probs, taken, *rng);
      }
      out.list.order.push_back(choice);
      out.list.step_dists.push_back(probs.flat());
      out.list.chosen_probs.push_back(probs.at(0, choice));
      out.chosen_logprobs.push_back(log_elem(pick(dist, 0, choice)));
      taken[choice] = true;
      last_input = cand_reprs[choice];
    }
    return out;
  }

 public:
  GeneratedList generate(const UserProfile& u,
                         const std::vector<const ItemProfile*>& candidates,
                         std::size_t n, SelectMode mode,
                         Rng* rng = nullptr) const {
    Graph g;
    return rollout(g, u, candidates, n, mode, rng).list;
  }

  const GeneratorConfig& config() const { return cfg_; }
  const FeatureSpec& feature_spec() const { return spec_; }
  const DenseStats& stats() const { return stats_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

 private:
  static std::string mlp_name(const char* kind, std::size_t layer) {
    return std::string("mlp.") + kind + std::to_string(layer);
  }

  void create_weight(const std::string& name, std::size_t rows,
                     std::size_t cols, Rng& rng, double bound) {
    Tensor t(rows, cols);
    for (double& v : t.flat()) v = rng.uniform(-bound, bound);
    params_.create(name, std::move(t));
  }

  GeneratorConfig cfg_;
  FeatureSpec spec_;
  DenseStats stats_;
  mutable ParamStore params_;
};

}  // namespace rerank
