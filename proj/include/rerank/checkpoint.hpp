#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rerank/errors.hpp"
#include "rerank/evaluator.hpp"
#include "rerank/features.hpp"
#include "rerank/generator.hpp"
#include "rerank/optim.hpp"

namespace rerank {

// Self-describing JSON checkpoints: configuration (ablation flags
// included), feature spec, standardization statistics and every parameter
// with its shape. nlohmann serializes doubles losslessly, so save/load
// round-trips bit-exactly.

namespace detail {

inline nlohmann::json tensor_to_json(const Tensor& t) {
  return nlohmann::json{{"shape", t.shape()}, {"data", t.flat()}};
}

inline Tensor tensor_from_json(const nlohmann::json& j) {
  const auto shape = j.at("shape").get<std::vector<std::size_t>>();
  if (shape.size() != 2) throw DataError("checkpoint: tensor rank must be 2");
  return Tensor(shape[0], shape[1], j.at("data").get<std::vector<double>>());
}

inline nlohmann::json params_to_json(const ParamStore& store) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, t] : store.params()) j[name] = tensor_to_json(t);
  return j;
}

inline void params_from_json(const nlohmann::json& j, ParamStore& store) {
  for (const auto& [name, t] : store.params()) {
    if (!j.contains(name)) {
      throw DataError("checkpoint: missing parameter '" + name + "'");
    }
    Tensor loaded = tensor_from_json(j.at(name));
    if (!loaded.same_shape(t)) {
      throw DataError("checkpoint: parameter '" + name + "' has shape " +
                      loaded.shape_str() + ", expected " + t.shape_str());
    }
    store.mutable_value(name) = std::move(loaded);
  }
}

inline nlohmann::json entity_to_json(const EntitySpec& e) {
  return nlohmann::json{{"sparse_vocab", e.sparse_vocab},
                        {"dense_count", e.dense_count}};
}

inline EntitySpec entity_from_json(const nlohmann::json& j) {
  EntitySpec e;
  e.sparse_vocab = j.at("sparse_vocab").get<std::vector<std::int64_t>>();
  e.dense_count = j.at("dense_count").get<std::size_t>();
  return e;
}

inline nlohmann::json spec_to_json(const FeatureSpec& s) {
  return nlohmann::json{{"user", entity_to_json(s.user)},
                        {"item", entity_to_json(s.item)}};
}

inline FeatureSpec spec_from_json(const nlohmann::json& j) {
  FeatureSpec s;
  s.user = entity_from_json(j.at("user"));
  s.item = entity_from_json(j.at("item"));
  return s;
}

inline nlohmann::json stats_to_json(const DenseStats& s) {
  return nlohmann::json{{"user_mean", s.user_mean},
                        {"user_std", s.user_std},
                        {"item_mean", s.item_mean},
                        {"item_std", s.item_std}};
}

inline DenseStats stats_from_json(const nlohmann::json& j) {
  DenseStats s;
  s.user_mean = j.at("user_mean").get<std::vector<double>>();
  s.user_std = j.at("user_std").get<std::vector<double>>();
  s.item_mean = j.at("item_mean").get<std::vector<double>>();
  s.item_std = j.at("item_std").get<std::vector<double>>();
  return s;
}

inline nlohmann::json load_checkpoint_json(const std::string& path,
                                           const std::string& expected_kind) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw DataError("checkpoint is not valid JSON: " + path);
  }
  if (j.value("format", "") != "rerank-checkpoint-v1") {
    throw DataError("unrecognized checkpoint format in " + path);
  }
  if (j.value("kind", "") != expected_kind) {
    throw DataError("checkpoint " + path + " is a '" +
                    j.value("kind", "?") + "' model, expected '" +
                    expected_kind + "'");
  }
  return j;
}

inline void write_checkpoint_json(const std::string& path,
                                  const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << j.dump() << "\n";
}

}  // namespace detail

inline void save_evaluator(const std::string& path,
                           const EvaluatorModel& model) {
  const EvaluatorConfig& c = model.config();
  nlohmann::json j{
      {"format", "rerank-checkpoint-v1"},
      {"kind", "evaluator"},
      {"config",
       {{"embedding_dim", c.embedding_dim},
        {"lstm_hidden", c.lstm_hidden},
        {"mlp_hidden", c.mlp_hidden},
        {"use_bilstm", c.use_bilstm},
        {"use_selfattn", c.use_selfattn},
        {"attention_heads", c.attention_heads},
        {"lstm_cell", c.lstm_cell == LstmCellKind::standard
                          ? "standard"
                          : "forget_input"}}},
      {"features", detail::spec_to_json(model.feature_spec())},
      {"stats", detail::stats_to_json(model.stats())},
      {"params", detail::params_to_json(model.params())}};
  detail::write_checkpoint_json(path, j);
}

inline EvaluatorModel load_evaluator(const std::string& path) {
  const nlohmann::json j = detail::load_checkpoint_json(path, "evaluator");
  const nlohmann::json& cj = j.at("config");
  EvaluatorConfig c;
  c.embedding_dim = cj.at("embedding_dim").get<std::size_t>();
  c.lstm_hidden = cj.at("lstm_hidden").get<std::size_t>();
  c.mlp_hidden = cj.at("mlp_hidden").get<std::vector<std::size_t>>();
  c.use_bilstm = cj.at("use_bilstm").get<bool>();
  c.use_selfattn = cj.at("use_selfattn").get<bool>();
  c.attention_heads = cj.at("attention_heads").get<std::size_t>();
  c.lstm_cell = cj.at("lstm_cell").get<std::string>() == "standard"
                    ? LstmCellKind::standard
                    : LstmCellKind::forget_input;
  EvaluatorModel model(c, detail::spec_from_json(j.at("features")),
                       detail::stats_from_json(j.at("stats")));
  model.init_params(0);
  detail::params_from_json(j.at("params"), model.params());
  return model;
}

inline void save_generator(const std::string& path,
                           const GeneratorModel& model) {
  const GeneratorConfig& c = model.config();
  nlohmann::json j{
      {"format", "rerank-checkpoint-v1"},
      {"kind", "generator"},
      {"config",
       {{"embedding_dim", c.embedding_dim},
        {"gru_hidden", c.gru_hidden},
        {"mlp_hidden", c.mlp_hidden},
        {"use_evolving", c.use_evolving},
        {"use_activating", c.use_activating}}},
      {"features", detail::spec_to_json(model.feature_spec())},
      {"stats", detail::stats_to_json(model.stats())},
      {"params", detail::params_to_json(model.params())}};
  detail::write_checkpoint_json(path, j);
}

inline GeneratorModel load_generator(const std::string& path) {
  const nlohmann::json j = detail::load_checkpoint_json(path, "generator");
  const nlohmann::json& cj = j.at("config");
  GeneratorConfig c;
  c.embedding_dim = cj.at("embedding_dim").get<std::size_t>();
  c.gru_hidden = cj.at("gru_hidden").get<std::size_t>();
  c.mlp_hidden = cj.at("mlp_hidden").get<std::vector<std::size_t>>();
  c.use_evolving = cj.at("use_evolving").get<bool>();
  c.use_activating = cj.at("use_activating").get<bool>();
  GeneratorModel model(c, detail::spec_from_json(j.at("features")),
                       detail::stats_from_json(j.at("stats")));
  model.init_params(0);
  detail::params_from_json(j.at("params"), model.params());
  return model;
}

}  // namespace rerank
