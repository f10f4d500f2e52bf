#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rerank/data.hpp"
#include "rerank/errors.hpp"
#include "rerank/optim.hpp"
#include "rerank/rng.hpp"
#include "rerank/tape.hpp"

namespace rerank {

// Vocabulary sizes per sparse field, learned from training data. Each field
// gets one extra embedding row reserved for ids unseen at training time.
struct EntitySpec {
  std::vector<std::int64_t> sparse_vocab;
  std::size_t dense_count = 0;

  std::size_t field_count() const { return sparse_vocab.size(); }

  std::size_t repr_dim(std::size_t embedding_dim) const {
    return sparse_vocab.size() * embedding_dim + dense_count;
  }

  // Table rows include the reserved out-of-vocabulary slot.
  std::size_t table_rows(std::size_t field) const {
    return static_cast<std::size_t>(sparse_vocab[field]) + 1;
  }

  std::size_t table_row_for(std::size_t field, std::int64_t id) const {
    if (id < 0) throw DataError("sparse id must be non-negative");
    if (id >= sparse_vocab[field]) {
      return static_cast<std::size_t>(sparse_vocab[field]);  // OOV slot
    }
    return static_cast<std::size_t>(id);
  }
};

struct FeatureSpec {
  EntitySpec user;
  EntitySpec item;

  static FeatureSpec infer(const std::vector<ListRecord>& records) {
    if (records.empty()) {
      throw DataError("FeatureSpec: cannot infer from empty record set");
    }
    FeatureSpec spec;
    spec.user.sparse_vocab.assign(records.front().user.sparse.size(), 0);
    spec.user.dense_count = records.front().user.dense.size();
    spec.item.sparse_vocab.assign(
        records.front().items.front().sparse.size(), 0);
    spec.item.dense_count = records.front().items.front().dense.size();
    auto absorb = [](EntitySpec& es, const std::vector<std::int64_t>& sparse,
                     const std::vector<double>& dense) {
      if (sparse.size() != es.sparse_vocab.size() ||
          dense.size() != es.dense_count) {
        throw DataError("FeatureSpec: inconsistent feature counts across "
                        "records");
      }
      for (std::size_t f = 0; f < sparse.size(); ++f) {
        es.sparse_vocab[f] = std::max(es.sparse_vocab[f], sparse[f] + 1);
      }
    };
    for (const ListRecord& rec : records) {
      absorb(spec.user, rec.user.sparse, rec.user.dense);
      for (const ItemProfile& it : rec.items) {
        absorb(spec.item, it.sparse, it.dense);
      }
    }
    return spec;
  }
};

// Per-feature standardization statistics, computed over the training split
// only. The deviation floor keeps constant features harmless.
struct DenseStats {
  std::vector<double> user_mean, user_std;
  std::vector<double> item_mean, item_std;

  static constexpr double kStdFloor = 1e-6;

  static DenseStats compute(const std::vector<ListRecord>& records) {
    DenseStats st;
    if (records.empty()) return st;
    const std::size_t du = records.front().user.dense.size();
    const std::size_t di = records.front().items.front().dense.size();
    std::vector<double> usum(du, 0.0), usq(du, 0.0);
    std::vector<double> isum(di, 0.0), isq(di, 0.0);
    double un = 0.0, in = 0.0;
    for (const ListRecord& rec : records) {
      for (std::size_t f = 0; f < du; ++f) {
        usum[f] += rec.user.dense[f];
        usq[f] += rec.user.dense[f] * rec.user.dense[f];
      }
      un += 1.0;
      for (const ItemProfile& it : rec.items) {
        for (std::size_t f = 0; f < di; ++f) {
          isum[f] += it.dense[f];
          isq[f] += it.dense[f] * it.dense[f];
        }
        in += 1.0;
      }
    }
    auto finish = [](std::vector<double>& sum, std::vector<double>& sq,
                     double n, std::vector<double>& mean,
                     std::vector<double>& sd) {
      mean.resize(sum.size());
      sd.resize(sum.size());
      for (std::size_t f = 0; f < sum.size(); ++f) {
        mean[f] = n > 0.0 ? sum[f] / n : 0.0;
        const double var =
            n > 0.0 ? std::max(0.0, sq[f] / n - mean[f] * mean[f]) : 0.0;
        sd[f] = std::max(std::sqrt(var), kStdFloor);
      }
    };
    finish(usum, usq, un, st.user_mean, st.user_std);
    finish(isum, isq, in, st.item_mean, st.item_std);
    return st;
  }
};

inline std::string embedding_name(const std::string& prefix,
                                  std::size_t field) {
  return prefix + ".emb." + std::to_string(field);
}

inline void create_embeddings(ParamStore& store, const std::string& prefix,
                              const EntitySpec& spec, std::size_t dim,
                              Rng& rng, double init_bound) {
  for (std::size_t f = 0; f < spec.field_count(); ++f) {
    Tensor table(spec.table_rows(f), dim);
    for (double& v : table.flat()) {
      v = rng.uniform(-init_bound, init_bound);
    }
    store.create(embedding_name(prefix, f), std::move(table));
  }
}

// Concatenation of looked-up embeddings and standardized dense features:
// a 1 x (|sparse| * dim + |dense|) row. The embedding lookups participate
// in the gradient tape; dense features enter as constants.
inline Value build_representation(Graph& g, ParamStore& store,
                                  const std::string& prefix,
                                  const EntitySpec& spec,
                                  const std::vector<std::int64_t>& sparse,
                                  const std::vector<double>& dense,
                                  const std::vector<double>& mean,
                                  const std::vector<double>& stddev,
                                  std::size_t dim) {
  if (sparse.size() != spec.field_count() || dense.size() != spec.dense_count) {
    throw DataError("build_representation: profile width does not match "
                    "feature spec");
  }
  std::vector<Value> parts;
  parts.reserve(spec.field_count() + (spec.dense_count > 0 ? 1 : 0));
  for (std::size_t f = 0; f < spec.field_count(); ++f) {
    parts.push_back(g.embed(store, embedding_name(prefix, f),
                            spec.table_row_for(f, sparse[f])));
  }
  if (spec.dense_count > 0) {
    Tensor d(1, spec.dense_count);
    for (std::size_t f = 0; f < spec.dense_count; ++f) {
      d.at(0, f) = (dense[f] - mean[f]) / stddev[f];
    }
    parts.push_back(g.input(std::move(d)));
  }
  if (parts.size() == 1) return parts.front();
  return concat_cols(parts);
}

}  // namespace rerank
