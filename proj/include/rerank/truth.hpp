#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rerank/errors.hpp"

namespace rerank {

// Sidecar ground truth for one simulated record: everything needed to
// recompute the true contextual click probability of any arrangement of
// that record's input list. Written next to the dataset for acceptance-
// style evaluation; training never reads it.
struct TruthRecord {
  std::vector<double> base;           // sigmoid(affinity) per input item
  std::vector<std::int64_t> category; // drives similarity fatigue
  std::vector<double> price;          // in [0,1], drives anchoring
  double position_decay = 1.0;        // gamma
  double context_strength = 0.0;      // beta
  double price_anchor = 0.0;          // alpha
};

// True click probability of the item at 1-based position t of `order`
// (indices into the record's input list):
//   base * gamma^(t-1)
//        * (1 - beta * mean similarity to preceding items)
//        * (1 + alpha * max(0, price[prev] - price[cur]))
// clipped to [0.01, 0.99]. Similarity is the same-category indicator.
inline double true_click_probability(const TruthRecord& truth,
                                     const std::vector<std::size_t>& order,
                                     std::size_t t) {
  const std::size_t idx = order[t];
  double p = truth.base[idx];
  p *= std::pow(truth.position_decay, static_cast<double>(t));
  if (t > 0) {
    double sim = 0.0;
    for (std::size_t j = 0; j < t; ++j) {
      if (truth.category[order[j]] == truth.category[idx]) sim += 1.0;
    }
    sim /= static_cast<double>(t);
    p *= 1.0 - truth.context_strength * sim;
    const double gap = truth.price[order[t - 1]] - truth.price[idx];
    p *= 1.0 + truth.price_anchor * std::max(0.0, gap);
  }
  return std::clamp(p, 0.01, 0.99);
}

inline std::vector<double> true_click_probabilities(
    const TruthRecord& truth, const std::vector<std::size_t>& order) {
  std::vector<double> out(order.size());
  for (std::size_t t = 0; t < order.size(); ++t) {
    out[t] = true_click_probability(truth, order, t);
  }
  return out;
}

inline nlohmann::json truth_to_json(const TruthRecord& t) {
  return nlohmann::json{{"base", t.base},
                        {"cat", t.category},
                        {"price", t.price},
                        {"gamma", t.position_decay},
                        {"beta", t.context_strength},
                        {"alpha", t.price_anchor}};
}

inline TruthRecord truth_from_json(const nlohmann::json& j,
                                   const std::string& where) {
  TruthRecord t;
  try {
    t.base = j.at("base").get<std::vector<double>>();
    t.category = j.at("cat").get<std::vector<std::int64_t>>();
    t.price = j.at("price").get<std::vector<double>>();
    t.position_decay = j.at("gamma").get<double>();
    t.context_strength = j.at("beta").get<double>();
    t.price_anchor = j.at("alpha").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": bad ground-truth record: " + e.what());
  }
  if (t.base.size() != t.category.size() ||
      t.base.size() != t.price.size()) {
    throw DataError(where + ": ground-truth field lengths differ");
  }
  return t;
}

inline std::vector<TruthRecord> load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ground-truth file: " + path);
  std::vector<TruthRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError(where + ": invalid JSON");
    out.push_back(truth_from_json(j, where));
  }
  return out;
}

inline void save_truth(const std::string& path,
                       const std::vector<TruthRecord>& truths) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write ground-truth file: " + path);
  for (const TruthRecord& t : truths) out << truth_to_json(t).dump() << "\n";
}

}  // namespace rerank
