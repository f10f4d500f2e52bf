#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rerank/errors.hpp"
#include "rerank/rng.hpp"

namespace rerank {

// Sparse features are per-field categorical ids; by convention the first
// user sparse field is the user id (the simulator and GAUC grouping both
// rely on it).
struct UserProfile {
  std::vector<std::int64_t> sparse;
  std::vector<double> dense;
};

struct ItemProfile {
  std::vector<std::int64_t> sparse;
  std::vector<double> dense;
};

// One logged interaction: input list C (items, in upstream ranking order),
// exhibited final list V (indices into C, in exhibited order) and binary
// feedback per exhibited position.
struct ListRecord {
  UserProfile user;
  std::vector<ItemProfile> items;
  std::vector<std::size_t> final;
  std::vector<int> labels;

  std::size_t input_size() const { return items.size(); }
  std::size_t final_size() const { return final.size(); }

  void validate(const std::string& where = "record") const {
    if (final.size() > items.size()) {
      throw DataError(where + ": final list longer than input list (n=" +
                      std::to_string(final.size()) + ", m=" +
                      std::to_string(items.size()) + ")");
    }
    if (labels.size() != final.size()) {
      throw DataError(where + ": labels length " +
                      std::to_string(labels.size()) +
                      " does not match final list length " +
                      std::to_string(final.size()));
    }
    std::vector<bool> seen(items.size(), false);
    for (std::size_t idx : final) {
      if (idx >= items.size()) {
        throw DataError(where + ": final index " + std::to_string(idx) +
                        " out of range [0," + std::to_string(items.size()) +
                        ")");
      }
      if (seen[idx]) {
        throw DataError(where + ": duplicate final index " +
                        std::to_string(idx));
      }
      seen[idx] = true;
    }
    for (int y : labels) {
      if (y != 0 && y != 1) {
        throw DataError(where + ": label " + std::to_string(y) +
                        " not in {0,1}");
      }
    }
    for (const ItemProfile& it : items) {
      for (std::int64_t id : it.sparse) {
        if (id < 0) throw DataError(where + ": negative sparse id");
      }
    }
    for (std::int64_t id : user.sparse) {
      if (id < 0) throw DataError(where + ": negative sparse id");
    }
  }

  // Item profiles of the exhibited list, in exhibited order.
  std::vector<const ItemProfile*> final_items() const {
    std::vector<const ItemProfile*> out;
    out.reserve(final.size());
    for (std::size_t idx : final) out.push_back(&items[idx]);
    return out;
  }
};

namespace detail {

inline std::vector<std::int64_t> parse_sparse(const nlohmann::json& j,
                                              const std::string& where) {
  if (!j.is_array()) throw DataError(where + ": \"sparse\" must be an array");
  std::vector<std::int64_t> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number_integer()) {
      throw DataError(where + ": sparse ids must be integers");
    }
    out.push_back(v.get<std::int64_t>());
  }
  return out;
}

inline std::vector<double> parse_dense(const nlohmann::json& j,
                                       const std::string& where) {
  if (!j.is_array()) throw DataError(where + ": \"dense\" must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) {
      throw DataError(where + ": dense features must be numbers");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace detail

inline ListRecord record_from_json(const nlohmann::json& j,
                                   const std::string& where) {
  if (!j.is_object()) throw DataError(where + ": expected a JSON object");
  for (const char* key : {"user", "items", "final", "labels"}) {
    if (!j.contains(key)) {
      throw DataError(where + ": missing \"" + key + "\"");
    }
  }
  ListRecord rec;
  rec.user.sparse = detail::parse_sparse(j["user"].at("sparse"), where);
  rec.user.dense = detail::parse_dense(j["user"].at("dense"), where);
  for (const auto& ij : j["items"]) {
    ItemProfile item;
    item.sparse = detail::parse_sparse(ij.at("sparse"), where);
    item.dense = detail::parse_dense(ij.at("dense"), where);
    rec.items.push_back(std::move(item));
  }
  for (const auto& v : j["final"]) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw DataError(where + ": final indices must be non-negative integers");
    }
    rec.final.push_back(v.get<std::size_t>());
  }
  for (const auto& v : j["labels"]) {
    if (!v.is_number_integer()) {
      throw DataError(where + ": labels must be integers");
    }
    rec.labels.push_back(v.get<int>());
  }
  rec.validate(where);
  return rec;
}

inline nlohmann::json record_to_json(const ListRecord& rec) {
  nlohmann::json j;
  j["user"] = {{"sparse", rec.user.sparse}, {"dense", rec.user.dense}};
  j["items"] = nlohmann::json::array();
  for (const ItemProfile& it : rec.items) {
    j["items"].push_back({{"sparse", it.sparse}, {"dense", it.dense}});
  }
  j["final"] = rec.final;
  j["labels"] = rec.labels;
  return j;
}

// One JSON object per line; malformed lines are reported with their line
// number.
inline std::vector<ListRecord> parse_records(std::istream& in,
                                             const std::string& source) {
  std::vector<ListRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError(where + ": invalid JSON");
    out.push_back(record_from_json(j, where));
  }
  return out;
}

inline std::vector<ListRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);
  return parse_records(in, path);
}

inline void write_records(std::ostream& out,
                          const std::vector<ListRecord>& records) {
  for (const ListRecord& rec : records) {
    out << record_to_json(rec).dump() << "\n";
  }
}

inline void save_records(const std::string& path,
                         const std::vector<ListRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file: " + path);
  write_records(out, records);
}

// Seeded shuffle split; the permutation is also returned so sidecar files
// can be split in lockstep with their records.
inline std::vector<std::size_t> split_permutation(std::size_t n,
                                                  std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  rng.shuffle(perm);
  return perm;
}

inline std::pair<std::vector<ListRecord>, std::vector<ListRecord>>
split_records(const std::vector<ListRecord>& records, double train_frac,
              std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw UsageError("split_records: train_frac must be in (0,1)");
  }
  const std::vector<std::size_t> perm =
      split_permutation(records.size(), seed);
  const auto train_count = static_cast<std::size_t>(
      std::llround(train_frac * static_cast<double>(records.size())));
  std::vector<ListRecord> train, test;
  train.reserve(train_count);
  test.reserve(records.size() - train_count);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    (i < train_count ? train : test).push_back(records[perm[i]]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace rerank
