#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rerank/data.hpp"
#include "rerank/errors.hpp"
#include "rerank/features.hpp"
#include "rerank/optim.hpp"
#include "rerank/rng.hpp"
#include "rerank/tape.hpp"
#include "rerank/tensor.hpp"

namespace rerank {

// The cell update c_t = f*c_{t-1} + i*c_in is the standard choice;
// forget_input gates the current input instead (c_t = f*x_t + i*c_in),
// which cuts the recurrent cell path and requires hidden width == input
// width. Kept selectable; standard is the default.
enum class LstmCellKind { standard, forget_input };

struct EvaluatorConfig {
  std::size_t embedding_dim = 8;
  std::size_t lstm_hidden = 32;
  std::vector<std::size_t> mlp_hidden = {128, 64, 32};
  bool use_bilstm = true;
  bool use_selfattn = true;
  std::size_t attention_heads = 1;
  LstmCellKind lstm_cell = LstmCellKind::standard;
};

struct EvaluatorOutput {
  std::vector<double> probs;  // contextual interaction probability per position
  Tensor hidden;              // n x 2*hidden (empty when Bi-LSTM disabled)
  Tensor mutual;              // n x item_dim (empty when self-attention disabled)
};

// Local context-wise model: predicts each item's interaction probability
// within an exhibited list from the user, the item, its sequential encoding
// and its mutual-influence encoding.
class EvaluatorModel {
 public:
  EvaluatorModel(EvaluatorConfig cfg, FeatureSpec spec, DenseStats stats)
      : cfg_(std::move(cfg)), spec_(std::move(spec)), stats_(std::move(stats)) {
    if (cfg_.use_selfattn) {
      if (cfg_.attention_heads == 0 ||
          item_dim() % cfg_.attention_heads != 0) {
        throw UsageError("EvaluatorConfig: attention_heads must divide the "
                         "item representation width " +
                         std::to_string(item_dim()));
      }
    }
    if (cfg_.use_bilstm && cfg_.lstm_cell == LstmCellKind::forget_input &&
        cfg_.lstm_hidden != item_dim()) {
      throw UsageError("EvaluatorConfig: forget_input cell requires "
                       "lstm_hidden == item representation width");
    }
  }

  void init_params(std::uint64_t seed, double bound = 0.05) {
    Rng rng(seed);
    create_embeddings(params_, "user", spec_.user, cfg_.embedding_dim, rng,
                      bound);
    create_embeddings(params_, "item", spec_.item, cfg_.embedding_dim, rng,
                      bound);
    if (cfg_.use_bilstm) {
      for (const char* dir : {"fw", "bw"}) {
        const std::string p = std::string("lstm.") + dir + ".";
        const std::size_t in = item_dim(), h = cfg_.lstm_hidden;
        for (const char* gate : {"i", "f", "o"}) {
          create_weight(p + "wx" + gate, in, h, rng, bound);
          create_weight(p + "wh" + gate, h, h, rng, bound);
          create_weight(p + "wc" + gate, h, h, rng, bound);
          params_.create(p + "b" + gate, Tensor(1, h));
        }
        create_weight(p + "wxc", in, h, rng, bound);
        create_weight(p + "whc", h, h, rng, bound);
        params_.create(p + "bc", Tensor(1, h));
      }
    }
    std::size_t w = mlp_input_dim();
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

  std::size_t mlp_input_dim() const {
    std::size_t w = user_dim() + item_dim();
    if (cfg_.use_bilstm) w += 2 * cfg_.lstm_hidden;
    if (cfg_.use_selfattn) w += item_dim();
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

  // Bi-directional scan over the list; row t is the forward state
  // concatenated with the backward state for position t.
  Value bilstm_encode(Graph& g, const std::vector<Value>& item_reprs) const {
    if (item_reprs.empty()) throw UsageError("bilstm_encode: empty list");
    const std::vector<Value> fw = lstm_scan(g, item_reprs, "lstm.fw.");
    std::vector<Value> reversed(item_reprs.rbegin(), item_reprs.rend());
    std::vector<Value> bw = lstm_scan(g, reversed, "lstm.bw.");
    std::reverse(bw.begin(), bw.end());
    std::vector<Value> rows;
    rows.reserve(item_reprs.size());
    for (std::size_t t = 0; t < item_reprs.size(); ++t) {
      rows.push_back(concat_cols(fw[t], bw[t]));
    }
    return stack_rows(rows);
  }

  // A = softmax(V V^T / sqrt(d_k)) V, per head over an even column split.
  Value self_attention(Graph& g, Value v_matrix) const {
    const std::size_t heads = cfg_.attention_heads;
    const std::size_t dim = v_matrix.cols();
    const std::size_t head_dim = dim / heads;
    std::vector<Value> outs;
    outs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
      Value vh = heads == 1 ? v_matrix
                            : take_cols(v_matrix, h * head_dim, head_dim);
      Value scores = affine(matmul(vh, transpose(vh)),
                            1.0 / std::sqrt(static_cast<double>(head_dim)),
                            0.0);
      outs.push_back(matmul(softmax_rows(scores), vh));
    }
    return heads == 1 ? outs.front() : concat_cols(outs);
  }

  struct ForwardNodes {
    Value probs;   // n x 1
    Value hidden;  // invalid when Bi-LSTM disabled
    Value mutual;  // invalid when self-attention disabled
  };

  ForwardNodes forward_nodes(Graph& g, const UserProfile& u,
                             const std::vector<const ItemProfile*>& items)
      const {
    if (items.empty()) throw UsageError("evaluator: empty item list");
    const std::size_t n = items.size();
    Value user = user_representation(g, u);
    std::vector<Value> item_reprs;
    item_reprs.reserve(n);
    for (const ItemProfile* it : items) {
      item_reprs.push_back(item_representation(g, *it));
    }
    Value v_matrix = stack_rows(item_reprs);
    ForwardNodes out;
    std::vector<Value> parts{repeat_rows(user, n), v_matrix};
    if (cfg_.use_bilstm) {
      out.hidden = bilstm_encode(g, item_reprs);
      parts.push_back(out.hidden);
    }
    if (cfg_.use_selfattn) {
      out.mutual = self_attention(g, v_matrix);
      parts.push_back(out.mutual);
    }
    Value x = concat_cols(parts);
    for (std::size_t l = 0; l < cfg_.mlp_hidden.size(); ++l) {
      x = relu(add_rows(matmul(x, g.param(params_, mlp_name("w", l))),
                        g.param(params_, mlp_name("b", l))));
    }
    const std::size_t head = cfg_.mlp_hidden.size();
    x = add_rows(matmul(x, g.param(params_, mlp_name("w", head))),
                 g.param(params_, mlp_name("b", head)));
    out.probs = sigmoid(x);
    return out;
  }

  Value forward(Graph& g, const UserProfile& u,
                const std::vector<const ItemProfile*>& items) const {
    return forward_nodes(g, u, items).probs;
  }

  EvaluatorOutput evaluate(const UserProfile& u,
                           const std::vector<const ItemProfile*>& items)
      const {
    Graph g;
    ForwardNodes nodes = forward_nodes(g, u, items);
    EvaluatorOutput out;
    out.probs = column(nodes.probs.value());
    if (nodes.hidden.valid()) out.hidden = nodes.hidden.value();
    if (nodes.mutual.valid()) out.mutual = nodes.mutual.value();
    return out;
  }

  // Contextual scores for an arbitrary candidate ordering; same forward
  // path as scoring a recorded list. The call counter backs the reward
  // cost-bound checks.
  std::vector<double> score_list(const UserProfile& u,
                                 const std::vector<const ItemProfile*>& items)
      const {
    ++score_calls_;
    Graph g;
    return column(forward(g, u, items).value());
  }

  std::size_t score_calls() const { return score_calls_; }
  void reset_score_calls() const { score_calls_ = 0; }

  const EvaluatorConfig& config() const { return cfg_; }
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

  std::vector<Value> lstm_scan(Graph& g, const std::vector<Value>& xs,
                               const std::string& p) const {
    const std::size_t h = cfg_.lstm_hidden;
    auto w = [&](const char* name) {
      return g.param(params_, p + name);
    };
    Value hidden = g.input(Tensor(1, h));
    Value cell = g.input(Tensor(1, h));
    std::vector<Value> out;
    out.reserve(xs.size());
    for (Value x : xs) {
      Value in_gate = sigmoid(add_rows(
          add(add(matmul(x, w("wxi")), matmul(hidden, w("whi"))),
              matmul(cell, w("wci"))),
          w("bi")));
      Value forget_gate = sigmoid(add_rows(
          add(add(matmul(x, w("wxf")), matmul(hidden, w("whf"))),
              matmul(cell, w("wcf"))),
          w("bf")));
      Value cell_in = tanh_act(add_rows(
          add(matmul(x, w("wxc")), matmul(hidden, w("whc"))), w("bc")));
      Value carried = cfg_.lstm_cell == LstmCellKind::standard ? cell : x;
      cell = add(mul(forget_gate, carried), mul(in_gate, cell_in));
      Value out_gate = sigmoid(add_rows(
          add(add(matmul(x, w("wxo")), matmul(hidden, w("who"))),
              matmul(cell, w("wco"))),
          w("bo")));
      hidden = mul(out_gate, tanh_act(cell));
      out.push_back(hidden);
    }
    return out;
  }

  static std::vector<double> column(const Tensor& t) {
    std::vector<double> out(t.rows());
    for (std::size_t i = 0; i < t.rows(); ++i) out[i] = t.at(i, 0);
    return out;
  }

  EvaluatorConfig cfg_;
  FeatureSpec spec_;
  DenseStats stats_;
  mutable ParamStore params_;
  mutable std::size_t score_calls_ = 0;
};

// Summed binary cross-entropy for one record, probabilities clipped to
// [1e-7, 1-1e-7] before the logs.
inline Value bce_sum(Graph& g, Value probs, const std::vector<int>& labels) {
  if (probs.cols() != 1 || probs.rows() != labels.size()) {
    throw ShapeError("bce_sum: expected " + std::to_string(labels.size()) +
                     "x1 probabilities, got " + probs.value().shape_str());
  }
  Tensor pos(labels.size(), 1), neg(labels.size(), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    pos.at(i, 0) = labels[i] == 1 ? 1.0 : 0.0;
    neg.at(i, 0) = labels[i] == 1 ? 0.0 : 1.0;
  }
  Value clipped = clip(probs, 1e-7, 1.0 - 1e-7);
  Value ll = add(mul_const(log_elem(clipped), pos),
                 mul_const(log_elem(affine(clipped, -1.0, 1.0)), neg));
  return affine(sum_all(ll), -1.0, 0.0);
}

inline double bce_sum_value(const std::vector<double>& probs,
                            const std::vector<int>& labels) {
  if (probs.size() != labels.size()) {
    throw ShapeError("bce_sum_value: length mismatch");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::min(1.0 - 1e-7, std::max(1e-7, probs[i]));
    loss -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return loss;
}

}  // namespace rerank
